//! The Sasaki manifold abstraction and checks of its structural identities.
//!
//! Models are described in ambient coordinates: a point is a vector in
//! `R^m` satisfying the model's constraint, tangent vectors are ambient
//! vectors fixed by the tangent projector, and the Levi-Civita connection is
//! given by a bilinear correction `Gamma` so that
//! `nabla_X Y = D_X Y + Gamma(X, Y)` for tangent fields extended smoothly
//! off the manifold.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{seeded_rng, unit_vector, SeededRng};

pub type Vector = DVector<f64>;

/// Shared handle to a model; models are immutable and thread safe.
pub type ModelRef = Arc<dyn SasakiModel>;

/// Largest ambient dimension among the shipped models (S^7 in R^8).
pub const MAX_AMBIENT: usize = 8;

/// Tolerance used to decide that a point lies on a model.
pub const ON_MANIFOLD_TOL: f64 = 1e-10;

/// A point of a model, stored with its ambient coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Point {
    pub ambient_coords: Vector,
    pub model_id: String,
}

impl Point {
    /// Wraps ambient coordinates after checking the model constraint.
    pub fn new(model: &dyn SasakiModel, coords: Vector) -> Result<Self> {
        check_on_manifold(model, &coords)?;
        Ok(Self { ambient_coords: coords, model_id: model.key() })
    }

    pub fn coords(&self) -> &Vector {
        &self.ambient_coords
    }
}

/// A tangent vector at a point, in ambient components.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TangentVector {
    pub base: Point,
    pub components: Vector,
}

impl TangentVector {
    pub fn new(model: &dyn SasakiModel, base: Point, components: Vector) -> Result<Self> {
        let projected = model.tangent_projector(&base.ambient_coords) * &components;
        let off = (&projected - &components).norm();
        if off > 1e-10 * (1.0 + components.norm()) {
            return Err(Error::InvalidParameter(format!("vector is not tangent (projector residual {off:e})")));
        }
        Ok(Self { base, components })
    }
}

/// Chart on the local leaf space of the Reeb foliation.
///
/// `coords` sends a point to a complex coordinate `w = u + iv` of the leaf
/// through it and `section` picks a point over a given `w`. Charts are
/// chosen around a reference point so that they are regular there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LeafChart {
    /// S^3 in C^2 with `w = z2 / z1`.
    SphereFirst,
    /// S^3 in C^2 with `w = z1 / z2`.
    SphereSecond,
    /// Heisenberg chart, `w = x + iy`.
    Plane,
}

impl LeafChart {
    pub fn coords(&self, x: &Vector) -> [f64; 2] {
        match self {
            LeafChart::SphereFirst => complex_div([x[2], x[3]], [x[0], x[1]]),
            LeafChart::SphereSecond => complex_div([x[0], x[1]], [x[2], x[3]]),
            LeafChart::Plane => [x[0], x[1]],
        }
    }

    pub fn section(&self, w: [f64; 2]) -> Vector {
        let s = 1.0 / (1.0 + w[0] * w[0] + w[1] * w[1]).sqrt();
        match self {
            LeafChart::SphereFirst => Vector::from_vec(vec![s, 0.0, s * w[0], s * w[1]]),
            LeafChart::SphereSecond => Vector::from_vec(vec![s * w[0], s * w[1], s, 0.0]),
            LeafChart::Plane => Vector::from_vec(vec![w[0], w[1], 0.0]),
        }
    }
}

fn complex_div(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let d = b[0] * b[0] + b[1] * b[1];
    [(a[0] * b[0] + a[1] * b[1]) / d, (a[1] * b[0] - a[0] * b[1]) / d]
}

/// A Sasakian manifold described in ambient coordinates.
pub trait SasakiModel: Send + Sync + Debug {
    /// String key used by the command line ("s3", "heisenberg", ...).
    fn key(&self) -> String;
    /// Half of (dimension - 1).
    fn n(&self) -> usize;
    fn ambient_dim(&self) -> usize;
    fn constraint_residual(&self, x: &Vector) -> f64;
    fn project_point(&self, x: &Vector) -> Vector;
    fn tangent_projector(&self, x: &Vector) -> DMatrix<f64>;

    fn metric(&self, x: &Vector, a: &Vector, b: &Vector) -> f64;
    /// Ambient covector representing `g(v, .)` on tangent vectors.
    fn flat(&self, x: &Vector, v: &Vector) -> Vector;
    fn reeb(&self, x: &Vector) -> Vector;
    /// Ambient derivative of the (smoothly extended) Reeb field.
    fn reeb_jacobian(&self, x: &Vector) -> DMatrix<f64>;
    /// Ambient covector `w` with `eta(X) = w . X`, smooth in `x`.
    fn eta_form(&self, x: &Vector) -> Vector;
    fn eta(&self, x: &Vector, v: &Vector) -> f64 {
        self.eta_form(x).dot(v)
    }
    fn phi(&self, x: &Vector, v: &Vector) -> Vector;
    /// Connection correction `Gamma(a, b)`, symmetric and bilinear.
    fn christoffel(&self, x: &Vector, a: &Vector, b: &Vector) -> Vector;
    /// `R(X, Y) Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z`.
    fn curvature(&self, x: &Vector, a: &Vector, b: &Vector, c: &Vector) -> Vector;
    fn sample_point(&self, rng: &mut SeededRng) -> Vector;

    /// Evaluates `g^{-1}(p, p)` for an ambient covector `p`, writing
    /// `d/dx (g^{-1}(p, p) / 2)` into `grad_x` and `g^{-1} p` into `sharp`.
    fn cometric_terms(&self, x: &[f64], p: &[f64], grad_x: &mut [f64], sharp: &mut [f64]) -> f64;
    fn reeb_into(&self, x: &[f64], out: &mut [f64]);
    /// Writes `(d xi / dx)^T p`.
    fn reeb_pullback_into(&self, x: &[f64], p: &[f64], out: &mut [f64]);
    /// Pulls a cotangent state back onto the manifold after an integrator step.
    fn normalize_state(&self, x: &mut [f64], p: &mut [f64]);

    /// Leaf-space chart around `x` when the model provides one.
    fn leaf_chart(&self, _x: &Vector) -> Option<LeafChart> {
        None
    }
}

pub fn check_on_manifold(model: &dyn SasakiModel, x: &Vector) -> Result<()> {
    if x.len() != model.ambient_dim() {
        return Err(Error::InvalidParameter(format!(
            "point has {} coordinates, model {} needs {}",
            x.len(),
            model.key(),
            model.ambient_dim()
        )));
    }
    let r = model.constraint_residual(x);
    if !(r < ON_MANIFOLD_TOL) {
        return Err(Error::OffManifold { residual: r });
    }
    Ok(())
}

pub fn norm(model: &dyn SasakiModel, x: &Vector, v: &Vector) -> f64 {
    model.metric(x, v, v).max(0.0).sqrt()
}

/// Removes the Reeb component of a tangent vector.
pub fn horizontal_part(model: &dyn SasakiModel, x: &Vector, v: &Vector) -> Vector {
    let xi = model.reeb(x);
    let ratio = model.eta(x, v) / model.eta(x, &xi);
    v - xi * ratio
}

pub fn random_tangent(model: &dyn SasakiModel, x: &Vector, rng: &mut SeededRng) -> Vector {
    let proj = model.tangent_projector(x);
    loop {
        let v = &proj * unit_vector(rng, model.ambient_dim());
        if v.norm() > 1e-3 {
            let l = norm(model, x, &v);
            return v / l;
        }
    }
}

/// Random unit horizontal vector at `x`.
pub fn random_horizontal(model: &dyn SasakiModel, x: &Vector, rng: &mut SeededRng) -> Vector {
    loop {
        let v = horizontal_part(model, x, &random_tangent(model, x, rng));
        let l = norm(model, x, &v);
        if l > 1e-6 {
            return v / l;
        }
    }
}

/// Gram-Schmidt in the model metric; fails on (near) linear dependence.
pub fn orthonormalize(model: &dyn SasakiModel, x: &Vector, vectors: &[Vector]) -> Result<Vec<Vector>> {
    let mut out: Vec<Vector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for e in &out {
                w -= e * model.metric(x, e, &w);
            }
        }
        let l = norm(model, x, &w);
        if l < 1e-8 * (1.0 + norm(model, x, v)) {
            return Err(Error::DegenerateFrame(format!(
                "vector {} is linearly dependent on its predecessors",
                out.len()
            )));
        }
        out.push(w / l);
    }
    Ok(out)
}

/// Orthonormal basis of the contact distribution at `x`, of the form
/// `e_1, Phi e_1, e_2, Phi e_2, ...`.
pub fn horizontal_frame(model: &dyn SasakiModel, x: &Vector) -> Result<Vec<Vector>> {
    let m = model.ambient_dim();
    let proj = model.tangent_projector(x);
    let mut frame: Vec<Vector> = Vec::new();
    for k in 0..m {
        if frame.len() == 2 * model.n() {
            break;
        }
        let mut v = horizontal_part(model, x, &(&proj * Vector::from_fn(m, |i, _| if i == k { 1.0 } else { 0.0 })));
        for _ in 0..2 {
            for e in &frame {
                v -= e * model.metric(x, e, &v);
            }
        }
        let l = norm(model, x, &v);
        if l < 1e-6 {
            continue;
        }
        let e = v / l;
        let pe = model.phi(x, &e);
        let lp = norm(model, x, &pe);
        frame.push(e);
        frame.push(pe / lp);
    }
    if frame.len() != 2 * model.n() {
        return Err(Error::DegenerateFrame(format!(
            "found {} horizontal directions, expected {}",
            frame.len(),
            2 * model.n()
        )));
    }
    Ok(frame)
}

/// Orthonormal basis of the full tangent space: a horizontal frame plus the
/// normalised Reeb field.
pub fn tangent_frame(model: &dyn SasakiModel, x: &Vector) -> Result<Vec<Vector>> {
    let mut frame = horizontal_frame(model, x)?;
    let xi = model.reeb(x);
    let l = norm(model, x, &xi);
    frame.push(xi / l);
    Ok(frame)
}

/// `R(X, Y, Z, W) = g(R(X, Y) Z, W)`.
pub fn riemann(model: &dyn SasakiModel, x: &Vector, a: &Vector, b: &Vector, c: &Vector, d: &Vector) -> f64 {
    model.metric(x, &model.curvature(x, a, b, c), d)
}

/// Ricci tensor `Ric(Y, Z) = sum_i R(e_i, Y, Z, e_i)`.
pub fn ricci(model: &dyn SasakiModel, x: &Vector, y: &Vector, z: &Vector) -> Result<f64> {
    let frame = tangent_frame(model, x)?;
    Ok(frame.iter().map(|e| riemann(model, x, e, y, z, e)).sum())
}

/// Transverse curvature `R^T(X, Y, Z, W)` for horizontal arguments.
///
/// The transverse connection differs from the Levi-Civita one by terms
/// built from `Phi`, which gives
/// `R^T = R - g(PhiX,Z)g(PhiY,W) + g(PhiX,W)g(PhiY,Z) - 2g(PhiX,Y)g(PhiZ,W)`
/// for the convention `R(X,Y,Z,W) = g(R(X,Y)Z, W)`.
pub fn transverse_riemann(model: &dyn SasakiModel, x: &Vector, a: &Vector, b: &Vector, c: &Vector, d: &Vector) -> f64 {
    let (pa, pb, pc) = (model.phi(x, a), model.phi(x, b), model.phi(x, c));
    let g = |u: &Vector, v: &Vector| model.metric(x, u, v);
    riemann(model, x, a, b, c, d) - g(&pa, c) * g(&pb, d) + g(&pa, d) * g(&pb, c) - 2.0 * g(&pa, b) * g(&pc, d)
}

/// Transverse Ricci tensor as the trace of `R^T` over a horizontal frame.
pub fn transverse_ricci(model: &dyn SasakiModel, x: &Vector, y: &Vector, z: &Vector) -> Result<f64> {
    let frame = horizontal_frame(model, x)?;
    let y = horizontal_part(model, x, y);
    let z = horizontal_part(model, x, z);
    Ok(frame.iter().map(|e| transverse_riemann(model, x, e, &y, &z, e)).sum())
}

/// Curvature from the connection by fourth-order central differences:
/// `R(X,Y)Z = (D_X Gamma)(Y,Z) - (D_Y Gamma)(X,Z) + Gamma(X,Gamma(Y,Z)) - Gamma(Y,Gamma(X,Z))`.
pub fn curvature_from_connection(
    model: &dyn SasakiModel,
    x: &Vector,
    a: &Vector,
    b: &Vector,
    c: &Vector,
    h: f64,
) -> Vector {
    let dgamma = |dir: &Vector, u: &Vector, v: &Vector| -> Vector {
        let at = |s: f64| model.christoffel(&(x + dir * s), u, v);
        (at(-2.0 * h) - at(-h) * 8.0 + at(h) * 8.0 - at(2.0 * h)) / (12.0 * h)
    };
    dgamma(a, b, c) - dgamma(b, a, c) + model.christoffel(x, a, &model.christoffel(x, b, c))
        - model.christoffel(x, b, &model.christoffel(x, a, c))
}

/// Covariant derivative `nabla_X Y` at `x` of an ambient vector field,
/// by fourth-order central differences along `X`.
pub fn covariant_derivative<F>(model: &dyn SasakiModel, x: &Vector, dir: &Vector, field: F, h: f64) -> Vector
where
    F: Fn(&Vector) -> Vector,
{
    let at = |s: f64| field(&(x + dir * s));
    let d = (at(-2.0 * h) - at(-h) * 8.0 + at(h) * 8.0 - at(2.0 * h)) / (12.0 * h);
    d + model.christoffel(x, dir, &field(x))
}

/// Names of the structural identities checked by [`verify_structure`].
pub const IDENTITY_NAMES: [&str; 7] =
    ["eta_of_reeb", "phi_squared", "phi_metric", "d_eta", "nabla_reeb", "reeb_contraction_d_eta", "nabla_phi"];

/// Identities evaluated from closed-form evaluators only.
pub const CLOSED_FORM_IDENTITIES: [&str; 4] = ["eta_of_reeb", "phi_squared", "phi_metric", "nabla_reeb"];

#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    pub model: String,
    pub points: usize,
    pub tol: f64,
    pub residuals: BTreeMap<String, f64>,
    pub passed: bool,
}

impl StructureReport {
    pub fn max_closed_form(&self) -> f64 {
        CLOSED_FORM_IDENTITIES.iter().map(|k| self.residuals[*k]).fold(0.0, f64::max)
    }
}

const FD_STEP: f64 = 1e-5;

/// `d eta(X, Y) = X eta(Y) - Y eta(X) - eta([X, Y])` for constant ambient
/// fields, which reduces to derivatives of the ambient 1-form.
pub fn d_eta(model: &dyn SasakiModel, x: &Vector, a: &Vector, b: &Vector) -> f64 {
    let h = FD_STEP;
    let deriv = |dir: &Vector| (model.eta_form(&(x + dir * h)) - model.eta_form(&(x - dir * h))) / (2.0 * h);
    deriv(a).dot(b) - deriv(b).dot(a)
}

/// `(nabla_X Phi) Y` from the tangent extension `x -> Phi_x(P_x Y)`.
fn nabla_phi(model: &dyn SasakiModel, x: &Vector, a: &Vector, b: &Vector) -> Vector {
    let ext = |y: &Vector| model.phi(y, &(model.tangent_projector(y) * b));
    let ext_b = |y: &Vector| model.tangent_projector(y) * b;
    let h = 1e-4;
    covariant_derivative(model, x, a, ext, h) - model.phi(x, &covariant_derivative(model, x, a, ext_b, h))
}

/// Checks the Sasakian structure identities at each point with random
/// unit tangent vectors, returning the maximum residual per identity.
pub fn verify_structure(model: &dyn SasakiModel, points: &[Vector], tol: f64, seed: u64) -> Result<StructureReport> {
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    for p in points {
        check_on_manifold(model, p)?;
    }
    let mut res: BTreeMap<String, f64> = IDENTITY_NAMES.iter().map(|k| (k.to_string(), 0.0)).collect();
    let mut bump = |k: &str, v: f64| {
        let e = res.get_mut(k).expect("known identity");
        if !(v <= *e) {
            *e = v;
        }
    };
    let mut rng = seeded_rng(seed);
    for x in points {
        let xi = model.reeb(x);
        let a = random_tangent(model, x, &mut rng);
        let b = random_tangent(model, x, &mut rng);
        let g = |u: &Vector, v: &Vector| model.metric(x, u, v);

        bump("eta_of_reeb", (model.eta(x, &xi) - 1.0).abs());

        let ppa = model.phi(x, &model.phi(x, &a));
        let expect = -&a + &xi * model.eta(x, &a);
        bump("phi_squared", (ppa - expect).norm());

        let (pa, pb) = (model.phi(x, &a), model.phi(x, &b));
        bump("phi_metric", (g(&pa, &pb) - g(&a, &b) + model.eta(x, &a) * model.eta(x, &b)).abs());

        bump("d_eta", (d_eta(model, x, &a, &b) - 2.0 * g(&pa, &b)).abs());

        let nabla_xi = model.reeb_jacobian(x) * &a + model.christoffel(x, &a, &xi);
        bump("nabla_reeb", (nabla_xi - &pa).norm());

        bump("reeb_contraction_d_eta", d_eta(model, x, &xi, &a).abs());

        let expect = &a * model.eta(x, &b) - &xi * g(&a, &b);
        bump("nabla_phi", (nabla_phi(model, x, &a, &b) - expect).norm());
    }
    let passed = res.values().all(|v| *v < tol);
    Ok(StructureReport { model: model.key(), points: points.len(), tol, residuals: res, passed })
}

/// Sampled points on a model.
pub fn sample_points(model: &dyn SasakiModel, count: usize, seed: u64) -> Vec<Vector> {
    let mut rng = seeded_rng(seed);
    (0..count).map(|_| model.sample_point(&mut rng)).collect()
}

/// Smallest and largest sampled `Ric^T(X, X) / g(X, X)` over random
/// horizontal directions at the given points.
pub fn transverse_ricci_range(model: &dyn SasakiModel, points: &[Vector], seed: u64) -> Result<(f64, f64)> {
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut rng = seeded_rng(seed);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in points {
        check_on_manifold(model, x)?;
        let h = random_horizontal(model, x, &mut rng);
        let r = transverse_ricci(model, x, &h, &h)? / model.metric(x, &h, &h);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureReport {
    pub r_full: f64,
    pub r_transverse: f64,
    pub ric: f64,
    pub ric_transverse: f64,
    pub residuals: BTreeMap<String, f64>,
}

fn check_horizontal(model: &dyn SasakiModel, x: &Vector, v: &Vector) -> Result<()> {
    let e = model.eta(x, v);
    if !(e.abs() < 1e-10) {
        return Err(Error::NotHorizontal { eta: e });
    }
    Ok(())
}

/// Full and transverse curvature of horizontal vectors, with the transverse
/// Ricci tensor `Ric^T(X, Y)` computed both as a trace and as
/// `Ric(X, Y) + 2 g(X, Y)`.
pub fn transverse_curvature(
    model: &dyn SasakiModel,
    p: &Vector,
    x: &Vector,
    y: &Vector,
    z: &Vector,
    w: &Vector,
) -> Result<CurvatureReport> {
    check_on_manifold(model, p)?;
    for v in [x, y, z, w] {
        check_horizontal(model, p, v)?;
    }
    let r_full = riemann(model, p, x, y, z, w);
    let r_transverse = transverse_riemann(model, p, x, y, z, w);
    let ric = ricci(model, p, x, y)?;
    let ric_trace = transverse_ricci(model, p, x, y)?;
    let ric_formula = ric + 2.0 * model.metric(p, x, y);

    let (px, py, pz) = (model.phi(p, x), model.phi(p, y), model.phi(p, z));
    let g = |u: &Vector, v: &Vector| model.metric(p, u, v);
    let correction = -g(&px, z) * g(&py, w) + g(&px, w) * g(&py, z) - 2.0 * g(&px, y) * g(&pz, w);

    let mut residuals = BTreeMap::new();
    residuals.insert("transverse_ricci_trace_vs_formula".into(), (ric_trace - ric_formula).abs());
    residuals.insert("transverse_riemann_decomposition".into(), (r_transverse - r_full - correction).abs());
    residuals.insert("antisymmetry_first_pair".into(), (r_full + riemann(model, p, y, x, z, w)).abs());
    residuals.insert("antisymmetry_second_pair".into(), (r_full + riemann(model, p, x, y, w, z)).abs());
    Ok(CurvatureReport { r_full, r_transverse, ric, ric_transverse: ric_trace, residuals })
}

/// Riemannian Laplacian `-sum_i Hess f(e_i, e_i)` of an ambient function
/// restricted to the model.
pub fn riemannian_laplacian<F>(model: &dyn SasakiModel, x: &Vector, f: &F) -> Result<f64>
where
    F: Fn(&Vector) -> f64 + ?Sized,
{
    let h = 1e-3;
    let frame = tangent_frame(model, x)?;
    let f0 = f(x);
    let mut lap = 0.0;
    for e in &frame {
        let at = |s: f64| f(&(x + e * s));
        let second = (-at(2.0 * h) + 16.0 * at(h) - 30.0 * f0 + 16.0 * at(-h) - at(-2.0 * h)) / (12.0 * h * h);
        // A geodesic through x with velocity e has acceleration -Gamma(e, e).
        let gam = model.christoffel(x, e, e);
        let gnorm = gam.norm();
        let along_gamma = if gnorm > 0.0 {
            let u = &gam / gnorm;
            let g_at = |s: f64| f(&(x + &u * s));
            gnorm * (g_at(-2.0 * h) - 8.0 * g_at(-h) + 8.0 * g_at(h) - g_at(2.0 * h)) / (12.0 * h)
        } else {
            0.0
        };
        lap -= second - along_gamma;
    }
    Ok(lap)
}

/// Derivative of an ambient function along the Reeb field.
pub fn reeb_derivative<F>(model: &dyn SasakiModel, x: &Vector, f: &F) -> f64
where
    F: Fn(&Vector) -> f64 + ?Sized,
{
    let xi = model.reeb(x);
    let h = 1e-4;
    let at = |s: f64| f(&(x + &xi * s));
    (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h)
}

/// Transverse complex Laplacian in a leaf chart,
/// `box_B f = -(1/2) lambda^{-1} (f_uu + f_vv)` where the transverse metric
/// is `lambda (du^2 + dv^2)`.
pub fn transverse_box<F>(model: &dyn SasakiModel, x: &Vector, f: &F) -> Result<f64>
where
    F: Fn(&Vector) -> f64 + ?Sized,
{
    let chart =
        model.leaf_chart(x).ok_or_else(|| Error::UnsupportedModel(format!("{} has no leaf chart", model.key())))?;
    let w0 = chart.coords(x);
    let h = 1e-3;
    let fw = |du: f64, dv: f64| f(&chart.section([w0[0] + du, w0[1] + dv]));
    let f0 = fw(0.0, 0.0);
    let second = |e: [f64; 2]| {
        (-fw(2.0 * h * e[0], 2.0 * h * e[1]) + 16.0 * fw(h * e[0], h * e[1]) - 30.0 * f0
            + 16.0 * fw(-h * e[0], -h * e[1])
            - fw(-2.0 * h * e[0], -2.0 * h * e[1]))
            / (12.0 * h * h)
    };
    let lap_w = second([1.0, 0.0]) + second([0.0, 1.0]);
    // Conformal factor from the horizontal part of the section's derivative.
    let base = chart.section(w0);
    let hs = 1e-5;
    let du = (chart.section([w0[0] + hs, w0[1]]) - chart.section([w0[0] - hs, w0[1]])) / (2.0 * hs);
    let du_h = horizontal_part(model, &base, &(model.tangent_projector(&base) * du));
    let lambda = model.metric(&base, &du_h, &du_h);
    Ok(-0.5 * lap_w / lambda)
}

/// Maximum over the sample of `|Delta f - 2 box_B f|` for a basic function.
pub fn riemannian_laplacian_check<F>(model: &dyn SasakiModel, f: &F, points: &[Vector]) -> Result<f64>
where
    F: Fn(&Vector) -> f64 + ?Sized,
{
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut worst: f64 = 0.0;
    for x in points {
        check_on_manifold(model, x)?;
        let d = reeb_derivative(model, x, f);
        if !(d.abs() < 1e-8) {
            return Err(Error::NotBasic { derivative: d });
        }
        let lap = riemannian_laplacian(model, x, f)?;
        let bx = transverse_box(model, x, f)?;
        worst = worst.max((lap - 2.0 * bx).abs());
    }
    Ok(worst)
}

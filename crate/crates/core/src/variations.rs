//! Second variation of energy along normal geodesics and the test fields
//! used in the Myers-type diameter argument.

use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{
    horizontal_frame, norm, orthonormalize, riemann, transverse_ricci, transverse_riemann, SasakiModel, Vector,
};
use crate::numerics::{derivative_samples, simpson};
use crate::subriemannian::{covariant_derivative_along, GeodesicKind, GeodesicPath, GeodesicSample};

/// Least number of samples accepted by the quadratures.
pub const MIN_SAMPLES: usize = 32;
const UNIT_SPEED_TOL: f64 = 1e-6;
const ADMISSIBLE_TOL: f64 = 1e-5;
const GEODESIC_TOL: f64 = 1e-6;

fn check_unit_speed(model: &dyn SasakiModel, path: &GeodesicPath) -> Result<()> {
    let deviation = path.samples.iter().map(|s| (norm(model, &s.point, &s.velocity) - 1.0).abs()).fold(0.0, f64::max);
    if !(deviation < UNIT_SPEED_TOL) {
        return Err(Error::NotUnitSpeed { deviation });
    }
    Ok(())
}

fn check_samples(path: &GeodesicPath) -> Result<()> {
    if path.samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples { got: path.samples.len(), min: MIN_SAMPLES });
    }
    Ok(())
}

/// Horizontal unit vectors completing `{v, Phi v}` to an orthonormal basis
/// of the contact distribution, arranged in `Phi`-pairs.
pub fn complementary_frame(model: &dyn SasakiModel, x: &Vector, v: &Vector) -> Result<Vec<Vector>> {
    let pv = model.phi(x, v);
    let mut basis = orthonormalize(model, x, &[v.clone(), pv])?;
    for e in horizontal_frame(model, x)? {
        if basis.len() == 2 * model.n() {
            break;
        }
        let mut w = e;
        for _ in 0..2 {
            for b in &basis {
                w -= b * model.metric(x, b, &w);
            }
        }
        let l = norm(model, x, &w);
        if l < 1e-6 {
            continue;
        }
        let w = w / l;
        let pw = model.phi(x, &w);
        basis.push(w);
        basis.push(pw);
    }
    if basis.len() != 2 * model.n() {
        return Err(Error::DegenerateFrame("could not complete the horizontal basis".into()));
    }
    Ok(basis.split_off(2))
}

/// Horizontal fields along a geodesic whose covariant derivative is
/// parallel to the Reeb field.
#[derive(Clone, Debug, Serialize)]
pub struct ParallelFrame {
    /// `fields[i][k]` is `X_i` at sample `k`.
    pub fields: Vec<Vec<Vector>>,
    /// Maximum of `|nabla X_i - g(nabla X_i, xi) xi|` at interior samples.
    pub transverse_parallel_residual: f64,
    /// Maximum deviation of `{X_i, v, Phi v}` from orthonormality.
    pub orthonormality_residual: f64,
    /// Maximum `|g(X_i, v)|`.
    pub f1: f64,
    /// Maximum `|g(X_i, Phi v)|`.
    pub f2: f64,
    /// Maximum `|eta(X_i)|`.
    pub horizontality: f64,
}

impl ParallelFrame {
    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

/// Transports horizontal vectors along a unit-speed normal geodesic by
/// `X' = -Gamma(v, X) - g(X, Phi v) xi`, which keeps the transverse part of
/// `nabla_v X` at zero.
pub fn transport_frame(model: &dyn SasakiModel, path: &GeodesicPath, x_init: &[Vector]) -> Result<ParallelFrame> {
    check_unit_speed(model, path)?;
    let s0 = &path.samples[0];
    let x0 = &s0.point;
    let pv0 = model.phi(x0, &s0.velocity);
    for (i, a) in x_init.iter().enumerate() {
        let eta = model.eta(x0, a).abs();
        let f1 = model.metric(x0, a, &s0.velocity).abs();
        let f2 = model.metric(x0, a, &pv0).abs();
        let mut worst = eta.max(f1).max(f2);
        for (j, b) in x_init.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((model.metric(x0, a, b) - target).abs());
        }
        if worst > 1e-8 {
            return Err(Error::DegenerateFrame(format!(
                "initial vector {i} is not orthonormal, horizontal and orthogonal to v, Phi v (residual {worst:e})"
            )));
        }
    }
    if x_init.len() > 2 * model.n() - 2 {
        return Err(Error::DegenerateFrame(format!(
            "{} vectors given but only {} fit beside v and Phi v",
            x_init.len(),
            2 * model.n() - 2
        )));
    }

    let h = path.step;
    let rhs = |x: &Vector, v: &Vector, a: &Vector| -> Vector {
        let xi = model.reeb(x);
        let pv = model.phi(x, v);
        -model.christoffel(x, v, a) - xi * model.metric(x, a, &pv)
    };
    let midpoint = |s: &GeodesicSample| -> (Vector, Vector) {
        let mut x = s.point.clone();
        let mut p = s.covector.clone();
        crate::subriemannian::advance_state(model, path.kind, &mut x, &mut p, 0.5 * h);
        let v = crate::subriemannian::velocity(model, path.kind, &x, &p);
        (x, v)
    };
    let mut fields: Vec<Vec<Vector>> = x_init.iter().map(|a| vec![a.clone()]).collect();
    for k in 0..path.samples.len() - 1 {
        let (sa, sb) = (&path.samples[k], &path.samples[k + 1]);
        let (xm, vm) = midpoint(sa);
        for f in fields.iter_mut() {
            let a = f.last().expect("seeded").clone();
            let k1 = rhs(&sa.point, &sa.velocity, &a);
            let k2 = rhs(&xm, &vm, &(&a + &k1 * (0.5 * h)));
            let k3 = rhs(&xm, &vm, &(&a + &k2 * (0.5 * h)));
            let k4 = rhs(&sb.point, &sb.velocity, &(&a + &k3 * h));
            let next = a + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            f.push(model.tangent_projector(&sb.point) * next);
        }
    }
    let mut frame = ParallelFrame {
        fields,
        transverse_parallel_residual: 0.0,
        orthonormality_residual: 0.0,
        f1: 0.0,
        f2: 0.0,
        horizontality: 0.0,
    };
    diagnose_frame(model, path, &mut frame);
    Ok(frame)
}

fn diagnose_frame(model: &dyn SasakiModel, path: &GeodesicPath, frame: &mut ParallelFrame) {
    let n = path.samples.len();
    for field in &frame.fields {
        let d = covariant_derivative_along(model, path, field);
        for (k, s) in path.samples.iter().enumerate() {
            let x = &s.point;
            let a = &field[k];
            let xi = model.reeb(x);
            let pv = model.phi(x, &s.velocity);
            if k >= 2 && k + 2 < n {
                let t = &d[k] - &xi * (model.metric(x, &d[k], &xi) / model.metric(x, &xi, &xi));
                frame.transverse_parallel_residual = frame.transverse_parallel_residual.max(norm(model, x, &t));
            }
            frame.f1 = frame.f1.max(model.metric(x, a, &s.velocity).abs());
            frame.f2 = frame.f2.max(model.metric(x, a, &pv).abs());
            frame.horizontality = frame.horizontality.max(model.eta(x, a).abs());
        }
    }
    let mut ortho: f64 = 0.0;
    for (k, s) in path.samples.iter().enumerate() {
        let x = &s.point;
        let mut vecs: Vec<&Vector> = frame.fields.iter().map(|f| &f[k]).collect();
        let pv = model.phi(x, &s.velocity);
        vecs.push(&s.velocity);
        vecs.push(&pv);
        for (i, a) in vecs.iter().enumerate() {
            for (j, b) in vecs.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                ortho = ortho.max((model.metric(x, a, b) - target).abs());
            }
        }
    }
    frame.orthonormality_residual = ortho;
}

/// A vector field along a path with its admissibility diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct VariationField {
    pub values: Vec<Vector>,
    /// Maximum of `|d/dt g(V, xi) - 2 g(V, Phi v)|` at interior samples.
    pub admissibility_residual: f64,
    /// Larger of `|V(0)|` and `|V(l)|`.
    pub endpoint_residual: f64,
}

impl VariationField {
    pub fn new(model: &dyn SasakiModel, path: &GeodesicPath, values: Vec<Vector>) -> Result<Self> {
        let n = path.samples.len();
        if values.len() != n {
            return Err(Error::InvalidParameter(format!("field has {} samples, path has {n}", values.len())));
        }
        check_samples(path)?;
        let vertical: Vec<f64> =
            path.samples.iter().zip(&values).map(|(s, v)| model.metric(&s.point, v, &model.reeb(&s.point))).collect();
        let dv = derivative_samples(&vertical, path.step);
        let admissibility_residual = (2..n - 2)
            .map(|k| {
                let s = &path.samples[k];
                let pv = model.phi(&s.point, &s.velocity);
                (dv[k] - 2.0 * model.metric(&s.point, &values[k], &pv)).abs()
            })
            .fold(0.0, f64::max);
        let endpoint_residual = norm(model, &path.samples[0].point, &values[0]).max(norm(
            model,
            &path.samples[n - 1].point,
            &values[n - 1],
        ));
        Ok(Self { values, admissibility_residual, endpoint_residual })
    }

    pub fn zero(model: &dyn SasakiModel, path: &GeodesicPath) -> Result<Self> {
        let m = model.ambient_dim();
        Self::new(model, path, vec![Vector::zeros(m); path.samples.len()])
    }
}

fn sine_profile(path: &GeodesicPath) -> (f64, Vec<f64>) {
    let l = path.t_end();
    let h = path.samples.iter().map(|s| (2.0 * PI * s.t / l).sin()).collect();
    (l, h)
}

/// `V_i(t) = sin(2 pi t / l) X_i(t)` for a transported frame vector.
pub fn sine_field(model: &dyn SasakiModel, path: &GeodesicPath, field: &[Vector]) -> Result<VariationField> {
    let (_, h) = sine_profile(path);
    let values = field.iter().zip(h).map(|(a, s)| a * s).collect();
    VariationField::new(model, path, values)
}

/// `V = h Phi v + k xi` with `h = sin(2 pi t / l)` and
/// `k = (l / pi)(1 - cos(2 pi t / l))`, so that `k' = 2h`.
pub fn reeb_correction_field(model: &dyn SasakiModel, path: &GeodesicPath) -> Result<VariationField> {
    let l = path.t_end();
    let values = path
        .samples
        .iter()
        .map(|s| {
            let th = 2.0 * PI * s.t / l;
            let xi = model.reeb(&s.point);
            model.phi(&s.point, &s.velocity) * th.sin() + xi * (l / PI * (1.0 - th.cos()))
        })
        .collect();
    VariationField::new(model, path, values)
}

/// Field `h Phi v + k xi` for arbitrary sampled profiles.
pub fn phi_reeb_field(model: &dyn SasakiModel, path: &GeodesicPath, h: &[f64], k: &[f64]) -> Result<VariationField> {
    let values = path
        .samples
        .iter()
        .zip(h.iter().zip(k))
        .map(|(s, (h, k))| model.phi(&s.point, &s.velocity) * *h + model.reeb(&s.point) * *k)
        .collect();
    VariationField::new(model, path, values)
}

fn check_normal_geodesic(path: &GeodesicPath) -> Result<()> {
    if path.kind != GeodesicKind::SubRiemannian {
        return Err(Error::PreconditionFailed("path is not a normal sub-Riemannian geodesic".into()));
    }
    let r = path.diagnostics.geodesic_equation_residual;
    if !(r < GEODESIC_TOL) {
        return Err(Error::PreconditionFailed(format!("geodesic equation residual {r:e} too large")));
    }
    Ok(())
}

/// Second variation of energy for an admissible field:
/// `-int g(V, nabla nabla V + R(V, v) v) + 2 a0 int (eta(V) g(V, v) + g(nabla V, Phi V))`.
pub fn second_variation(model: &dyn SasakiModel, path: &GeodesicPath, field: &VariationField) -> Result<f64> {
    check_samples(path)?;
    check_normal_geodesic(path)?;
    if !(field.admissibility_residual < ADMISSIBLE_TOL) {
        return Err(Error::Inadmissible { residual: field.admissibility_residual });
    }
    let v = &field.values;
    let dv = covariant_derivative_along(model, path, v);
    let ddv = covariant_derivative_along(model, path, &dv);
    let a0 = path.alpha0();
    let (mut first, mut second) = (Vec::new(), Vec::new());
    for (k, s) in path.samples.iter().enumerate() {
        let x = &s.point;
        let r = model.curvature(x, &v[k], &s.velocity, &s.velocity);
        first.push(model.metric(x, &v[k], &(&ddv[k] + r)));
        let pv = model.phi(x, &v[k]);
        second.push(model.eta(x, &v[k]) * model.metric(x, &v[k], &s.velocity) + model.metric(x, &dv[k], &pv));
    }
    Ok(-simpson(&first, path.step) + 2.0 * a0 * simpson(&second, path.step))
}

/// First variation of energy, `int g(nabla V, v) dt`, from the same
/// quadrature. It vanishes for admissible fields along normal geodesics.
pub fn first_variation(model: &dyn SasakiModel, path: &GeodesicPath, field: &VariationField) -> Result<f64> {
    check_samples(path)?;
    let dv = covariant_derivative_along(model, path, &field.values);
    let vals: Vec<f64> = path.samples.iter().zip(&dv).map(|(s, d)| model.metric(&s.point, d, &s.velocity)).collect();
    Ok(simpson(&vals, path.step))
}

/// Pointwise residuals of the expansions used in the diameter argument.
#[derive(Clone, Debug, Serialize)]
pub struct VariationIdentityReport {
    pub frame_size: usize,
    /// `g(V_i, nabla nabla V_i) = h h''`.
    pub sine_acceleration: f64,
    /// `g(V_i, R(V_i, v) v) = sin^2 R^T(X_i, v, v, X_i)`.
    pub sine_curvature: f64,
    /// `g(V, nabla nabla V) = h (h'' + 3h - (2 a0)^2 h) - k^2` for `V = h Phi v + k xi`.
    pub reeb_acceleration: f64,
    /// `g(V, R(V, v) v) = h^2 R^T(Phi v, v, v, Phi v) - 3h^2 + k^2`.
    pub reeb_curvature: f64,
    /// Largest magnitude of any side of the four identities at `t = 0`.
    pub at_start: f64,
    pub sine_admissibility: f64,
    pub reeb_admissibility: f64,
}

impl VariationIdentityReport {
    pub fn max_identity_residual(&self) -> f64 {
        self.sine_acceleration.max(self.sine_curvature).max(self.reeb_acceleration).max(self.reeb_curvature)
    }
}

/// Evaluates the four pointwise identities along a unit-speed normal geodesic.
pub fn check_variation_identities(
    model: &dyn SasakiModel,
    path: &GeodesicPath,
    frame: &ParallelFrame,
) -> Result<VariationIdentityReport> {
    check_samples(path)?;
    check_unit_speed(model, path)?;
    check_normal_geodesic(path)?;
    if frame.fields.iter().any(|f| f.len() != path.samples.len()) {
        return Err(Error::InvalidParameter("frame and path have different sample counts".into()));
    }
    let n = path.samples.len();
    let (l, h) = sine_profile(path);
    let w = 2.0 * PI / l;
    let a0 = path.alpha0();
    let interior = 2..n - 2;
    let mut rep = VariationIdentityReport {
        frame_size: frame.len(),
        sine_acceleration: 0.0,
        sine_curvature: 0.0,
        reeb_acceleration: 0.0,
        reeb_curvature: 0.0,
        at_start: 0.0,
        sine_admissibility: 0.0,
        reeb_admissibility: 0.0,
    };
    for f in &frame.fields {
        let vf = sine_field(model, path, f)?;
        rep.sine_admissibility = rep.sine_admissibility.max(vf.admissibility_residual);
        let ddv = covariant_derivative_along(model, path, &covariant_derivative_along(model, path, &vf.values));
        for k in interior.clone() {
            let s = &path.samples[k];
            let x = &s.point;
            let lhs = model.metric(x, &vf.values[k], &ddv[k]);
            rep.sine_acceleration = rep.sine_acceleration.max((lhs - h[k] * (-w * w * h[k])).abs());
            let lhs = riemann(model, x, &vf.values[k], &s.velocity, &s.velocity, &vf.values[k]);
            let rhs = h[k] * h[k] * transverse_riemann(model, x, &f[k], &s.velocity, &s.velocity, &f[k]);
            rep.sine_curvature = rep.sine_curvature.max((lhs - rhs).abs());
        }
        let s = &path.samples[0];
        rep.at_start = rep
            .at_start
            .max(model.metric(&s.point, &vf.values[0], &ddv[0]).abs())
            .max(riemann(model, &s.point, &vf.values[0], &s.velocity, &s.velocity, &vf.values[0]).abs());
    }
    let vf = reeb_correction_field(model, path)?;
    rep.reeb_admissibility = vf.admissibility_residual;
    let ddv = covariant_derivative_along(model, path, &covariant_derivative_along(model, path, &vf.values));
    for k in (0..n).filter(|k| interior.contains(k) || *k == 0) {
        let s = &path.samples[k];
        let x = &s.point;
        let th = w * s.t;
        let (hk, hpp, kk) = (th.sin(), -w * w * th.sin(), l / PI * (1.0 - th.cos()));
        let lhs_acc = model.metric(x, &vf.values[k], &ddv[k]);
        let rhs_acc = hk * (hpp + 3.0 * hk - (2.0 * a0).powi(2) * hk) - kk * kk;
        let pv = model.phi(x, &s.velocity);
        let lhs_curv = riemann(model, x, &vf.values[k], &s.velocity, &s.velocity, &vf.values[k]);
        let rhs_curv =
            hk * hk * transverse_riemann(model, x, &pv, &s.velocity, &s.velocity, &pv) - 3.0 * hk * hk + kk * kk;
        if k == 0 {
            rep.at_start = rep.at_start.max(lhs_acc.abs()).max(rhs_acc.abs()).max(lhs_curv.abs()).max(rhs_curv.abs());
            continue;
        }
        rep.reeb_acceleration = rep.reeb_acceleration.max((lhs_acc - rhs_acc).abs());
        rep.reeb_curvature = rep.reeb_curvature.max((lhs_curv - rhs_curv).abs());
    }
    Ok(rep)
}

/// `int sin^2(2 pi t / l) ((2 pi / l)^2 m - q(t)) dt` for sampled `q`.
fn sine_weighted(path: &GeodesicPath, m: f64, q: &[f64]) -> f64 {
    let (l, h) = sine_profile(path);
    let w = 2.0 * PI / l;
    let vals: Vec<f64> = h.iter().zip(q).map(|(s, q)| s * s * (w * w * m - q)).collect();
    simpson(&vals, path.step)
}

/// `int sin^2 {(2 pi / l)^2 - R^T(E, v, v, E)} dt` for a sampled unit field `E`.
pub fn sine_curvature_integral(model: &dyn SasakiModel, path: &GeodesicPath, field: &[Vector]) -> f64 {
    let q: Vec<f64> = path
        .samples
        .iter()
        .zip(field)
        .map(|(s, e)| transverse_riemann(model, &s.point, e, &s.velocity, &s.velocity, e))
        .collect();
    sine_weighted(path, 1.0, &q)
}

/// The `Phi v` direction as a sampled field.
pub fn phi_velocity(model: &dyn SasakiModel, path: &GeodesicPath) -> Vec<Vector> {
    path.samples.iter().map(|s| model.phi(&s.point, &s.velocity)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct MyersCertificate {
    /// `int sin^2(2 pi t / l) {(2 pi / l)^2 (2n - 1) - Ric^T(v, v)} dt`.
    pub lhs_integral: f64,
    pub passed: bool,
    pub length: f64,
    pub tau: f64,
    /// `2 pi sqrt((2n - 1) / tau)`.
    pub implied_bound: f64,
    pub within_bound: bool,
}

/// Myers integrand test on a minimizing unit-speed geodesic.
pub fn myers_certificate(
    model: &dyn SasakiModel,
    path: &GeodesicPath,
    tau: f64,
    minimizing: bool,
) -> Result<MyersCertificate> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    if !minimizing {
        return Err(Error::NotMinimizing);
    }
    check_samples(path)?;
    check_unit_speed(model, path)?;
    let q = path
        .samples
        .iter()
        .map(|s| transverse_ricci(model, &s.point, &s.velocity, &s.velocity))
        .collect::<Result<Vec<_>>>()?;
    let m = (2 * model.n() - 1) as f64;
    let lhs_integral = sine_weighted(path, m, &q);
    let implied_bound = 2.0 * PI * (m / tau).sqrt();
    let length = path.length;
    Ok(MyersCertificate {
        lhs_integral,
        passed: lhs_integral >= -1e-5,
        length,
        tau,
        implied_bound,
        within_bound: length <= implied_bound + 1e-2,
    })
}

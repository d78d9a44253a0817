//! Hamiltonian flow of normal geodesics on the cotangent bundle.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{check_on_manifold, horizontal_part, norm, SasakiModel, Vector, MAX_AMBIENT};
use crate::numerics::{derivative_samples, simpson};

/// Which Hamiltonian drives the flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeodesicKind {
    /// `H = g^{-1}(a, a) / 2 - a(xi)^2 / 2`: normal sub-Riemannian geodesics.
    SubRiemannian,
    /// `H = g^{-1}(a, a) / 2`: Riemannian geodesics.
    Riemannian,
}

impl GeodesicKind {
    /// Weight of the `a(xi)^2` term that is removed from the cometric.
    fn reeb_weight(self) -> f64 {
        match self {
            GeodesicKind::SubRiemannian => 1.0,
            GeodesicKind::Riemannian => 0.0,
        }
    }
}

pub const MIN_STEPS: usize = 16;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Hamiltonian value at an ambient state.
pub fn hamiltonian_raw(model: &dyn SasakiModel, kind: GeodesicKind, x: &[f64], p: &[f64]) -> f64 {
    let m = x.len();
    let (mut gx, mut sh, mut xi) = ([0.0; MAX_AMBIENT], [0.0; MAX_AMBIENT], [0.0; MAX_AMBIENT]);
    let g = model.cometric_terms(x, p, &mut gx[..m], &mut sh[..m]);
    model.reeb_into(x, &mut xi[..m]);
    let s = dot(p, &xi[..m]);
    0.5 * g - 0.5 * kind.reeb_weight() * s * s
}

/// Right-hand side of Hamilton's equations; returns nothing, fills `dx`, `dp`.
pub(crate) fn rhs(model: &dyn SasakiModel, kind: GeodesicKind, x: &[f64], p: &[f64], dx: &mut [f64], dp: &mut [f64]) {
    let m = x.len();
    let (mut gx, mut sh, mut xi, mut pull) =
        ([0.0; MAX_AMBIENT], [0.0; MAX_AMBIENT], [0.0; MAX_AMBIENT], [0.0; MAX_AMBIENT]);
    model.cometric_terms(x, p, &mut gx[..m], &mut sh[..m]);
    model.reeb_into(x, &mut xi[..m]);
    let k = kind.reeb_weight();
    let s = dot(p, &xi[..m]);
    if k != 0.0 {
        model.reeb_pullback_into(x, p, &mut pull[..m]);
    }
    for i in 0..m {
        dx[i] = sh[i] - k * s * xi[i];
        dp[i] = -(gx[i] - k * s * pull[i]);
    }
}

/// One classical Runge-Kutta step followed by re-projection onto the model.
pub(crate) fn rk4_step(model: &dyn SasakiModel, kind: GeodesicKind, x: &mut [f64], p: &mut [f64], h: f64) {
    let m = x.len();
    let mut k = [[0.0; MAX_AMBIENT]; 8];
    let (mut xt, mut pt) = ([0.0; MAX_AMBIENT], [0.0; MAX_AMBIENT]);
    {
        let (kx, rest) = k.split_at_mut(1);
        rhs(model, kind, x, p, &mut kx[0][..m], &mut rest[0][..m]);
    }
    for stage in 1..4 {
        let c = if stage == 3 { h } else { 0.5 * h };
        for i in 0..m {
            xt[i] = x[i] + c * k[2 * (stage - 1)][i];
            pt[i] = p[i] + c * k[2 * (stage - 1) + 1][i];
        }
        let (a, b) = k.split_at_mut(2 * stage + 1);
        rhs(model, kind, &xt[..m], &pt[..m], &mut a[2 * stage][..m], &mut b[0][..m]);
    }
    for i in 0..m {
        x[i] += h / 6.0 * (k[0][i] + 2.0 * k[2][i] + 2.0 * k[4][i] + k[6][i]);
        p[i] += h / 6.0 * (k[1][i] + 2.0 * k[3][i] + 2.0 * k[5][i] + k[7][i]);
    }
    model.normalize_state(x, p);
}

/// Velocity `dH/dp` at an ambient state.
pub(crate) fn velocity_raw(model: &dyn SasakiModel, kind: GeodesicKind, x: &[f64], p: &[f64], out: &mut [f64]) {
    let mut dp = [0.0; MAX_AMBIENT];
    rhs(model, kind, x, p, out, &mut dp[..x.len()]);
}

/// Integrates `steps` RK4 steps of size `h` in place.
pub(crate) fn advance(model: &dyn SasakiModel, kind: GeodesicKind, x: &mut [f64], p: &mut [f64], h: f64, steps: usize) {
    for _ in 0..steps {
        rk4_step(model, kind, x, p, h);
    }
}

/// A point together with a cotangent vector, the state of the flow.
#[derive(Clone, Debug, Serialize)]
pub struct CotangentState {
    pub point: Vector,
    pub covector: Vector,
    /// `alpha(xi)`.
    pub alpha0: f64,
    /// Sub-Riemannian Hamiltonian value.
    pub h_value: f64,
}

impl CotangentState {
    pub fn new(model: &dyn SasakiModel, point: Vector, covector: Vector) -> Result<Self> {
        check_on_manifold(model, &point)?;
        if covector.len() != point.len() {
            return Err(Error::InvalidParameter("covector and point dimensions differ".into()));
        }
        let alpha0 = covector.dot(&model.reeb(&point));
        let h_value = hamiltonian_raw(model, GeodesicKind::SubRiemannian, point.as_slice(), covector.as_slice());
        Ok(Self { point, covector, alpha0, h_value })
    }

    /// State whose covector is `g(v, .) + alpha0 eta` for a horizontal `v`.
    /// The resulting normal geodesic starts with velocity `v`.
    pub fn from_horizontal(model: &dyn SasakiModel, point: Vector, v: &Vector, alpha0: f64) -> Result<Self> {
        check_on_manifold(model, &point)?;
        let eta = model.eta(&point, v);
        if !(eta.abs() < 1e-8 * (1.0 + v.norm())) {
            return Err(Error::NotHorizontal { eta });
        }
        let covector = model.flat(&point, v) + model.eta_form(&point) * alpha0;
        Self::new(model, point, covector)
    }
}

/// Sub-Riemannian Hamiltonian `g^{-1}(a, a) / 2 - a(xi)^2 / 2` of a state.
pub fn hamiltonian(model: &dyn SasakiModel, state: &CotangentState) -> Result<f64> {
    check_on_manifold(model, &state.point)?;
    let h = hamiltonian_raw(model, GeodesicKind::SubRiemannian, state.point.as_slice(), state.covector.as_slice());
    if !h.is_finite() {
        return Err(Error::PreconditionFailed("cometric is singular at this point".into()));
    }
    Ok(h)
}

#[derive(Clone, Debug, Serialize)]
pub struct GeodesicSample {
    pub t: f64,
    pub point: Vector,
    pub velocity: Vector,
    pub covector: Vector,
    pub alpha0: f64,
    pub h_value: f64,
}

/// Invariants measured along an integrated path.
#[derive(Clone, Debug, Default, Serialize)]
pub struct PathDiagnostics {
    /// Maximum `|eta(velocity)|`.
    pub horizontality: f64,
    /// Standard deviation of the speed divided by its mean.
    pub speed_variation: f64,
    pub alpha0_drift: f64,
    pub h_drift: f64,
    /// Maximum over interior samples of `|nabla_v v + 2 alpha0 Phi v|`
    /// (sub-Riemannian) or `|nabla_v v|` (Riemannian).
    pub geodesic_equation_residual: f64,
}

/// A discretised geodesic with uniform parameter step.
#[derive(Clone, Debug, Serialize)]
pub struct GeodesicPath {
    pub kind: GeodesicKind,
    pub model: String,
    pub samples: Vec<GeodesicSample>,
    pub step: f64,
    pub length: f64,
    pub energy: f64,
    pub diagnostics: PathDiagnostics,
}

impl GeodesicPath {
    pub fn t_end(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn points(&self) -> impl Iterator<Item = &Vector> {
        self.samples.iter().map(|s| &s.point)
    }

    pub fn alpha0(&self) -> f64 {
        self.samples[0].alpha0
    }

    pub fn mean_speed(&self) -> f64 {
        self.length / self.t_end().max(f64::MIN_POSITIVE)
    }
}

/// Integrates the sub-Riemannian Hamiltonian system from `init`.
pub fn integrate_geodesic(
    model: &dyn SasakiModel,
    init: &CotangentState,
    t_end: f64,
    steps: usize,
) -> Result<GeodesicPath> {
    integrate_path(model, GeodesicKind::SubRiemannian, init, t_end, steps)
}

/// Integrates either Hamiltonian with `steps` RK4 steps over `[0, t_end]`,
/// recording every step.
pub fn integrate_path(
    model: &dyn SasakiModel,
    kind: GeodesicKind,
    init: &CotangentState,
    t_end: f64,
    steps: usize,
) -> Result<GeodesicPath> {
    check_on_manifold(model, &init.point)?;
    if steps < MIN_STEPS {
        return Err(Error::TooFewSteps { got: steps, min: MIN_STEPS });
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_end must be positive, got {t_end}")));
    }
    let h0 = hamiltonian_raw(model, kind, init.point.as_slice(), init.covector.as_slice());
    if !(h0 > 1e-14) {
        return Err(Error::DegenerateHamiltonian { h: h0 });
    }
    let m = model.ambient_dim();
    let h = t_end / steps as f64;
    let mut x = init.point.clone();
    let mut p = init.covector.clone();
    model.normalize_state(x.as_mut_slice(), p.as_mut_slice());
    let mut samples = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        if i > 0 {
            rk4_step(model, kind, x.as_mut_slice(), p.as_mut_slice(), h);
        }
        let mut v = Vector::zeros(m);
        velocity_raw(model, kind, x.as_slice(), p.as_slice(), v.as_mut_slice());
        let alpha0 = p.dot(&model.reeb(&x));
        let h_value = hamiltonian_raw(model, GeodesicKind::SubRiemannian, x.as_slice(), p.as_slice());
        samples.push(GeodesicSample {
            t: i as f64 * h,
            point: x.clone(),
            velocity: v,
            covector: p.clone(),
            alpha0,
            h_value,
        });
    }
    let speeds: Vec<f64> = samples.iter().map(|s| norm(model, &s.point, &s.velocity)).collect();
    let length = simpson(&speeds, h);
    let energy = 0.5 * simpson(&speeds.iter().map(|s| s * s).collect::<Vec<_>>(), h);
    let mut path = GeodesicPath {
        kind,
        model: model.key(),
        samples,
        step: h,
        length,
        energy,
        diagnostics: PathDiagnostics::default(),
    };
    path.diagnostics = diagnose(model, &path, &speeds);
    Ok(path)
}

fn diagnose(model: &dyn SasakiModel, path: &GeodesicPath, speeds: &[f64]) -> PathDiagnostics {
    let s = &path.samples;
    let mean = speeds.iter().sum::<f64>() / speeds.len() as f64;
    let var = speeds.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / speeds.len() as f64;
    let drift = |f: &dyn Fn(&GeodesicSample) -> f64| {
        let f0 = f(&s[0]);
        s.iter().map(|x| (f(x) - f0).abs()).fold(0.0, f64::max)
    };
    let horizontality = match path.kind {
        GeodesicKind::SubRiemannian => s.iter().map(|x| model.eta(&x.point, &x.velocity).abs()).fold(0.0, f64::max),
        GeodesicKind::Riemannian => 0.0,
    };
    PathDiagnostics {
        horizontality,
        speed_variation: var.sqrt() / mean,
        alpha0_drift: drift(&|x| x.alpha0),
        h_drift: match path.kind {
            GeodesicKind::SubRiemannian => drift(&|x| x.h_value),
            GeodesicKind::Riemannian => {
                drift(&|x| hamiltonian_raw(model, GeodesicKind::Riemannian, x.point.as_slice(), x.covector.as_slice()))
            }
        },
        geodesic_equation_residual: geodesic_equation_residual(model, path),
    }
}

/// Covariant derivative of a vector field sampled along the path.
pub fn covariant_derivative_along(model: &dyn SasakiModel, path: &GeodesicPath, field: &[Vector]) -> Vec<Vector> {
    let d = derivative_samples(field, path.step);
    d.into_iter()
        .zip(path.samples.iter().zip(field))
        .map(|(dv, (s, v))| dv + model.christoffel(&s.point, &s.velocity, v))
        .collect()
}

/// Maximum at interior samples of the geodesic equation residual
/// `|nabla_v v + 2 alpha0 Phi v|`, with the `Phi` term dropped for
/// Riemannian paths.
pub fn geodesic_equation_residual(model: &dyn SasakiModel, path: &GeodesicPath) -> f64 {
    let s = &path.samples;
    if s.len() < 5 {
        return f64::NAN;
    }
    let vel: Vec<Vector> = s.iter().map(|x| x.velocity.clone()).collect();
    let acc = covariant_derivative_along(model, path, &vel);
    let a0 = s[0].alpha0;
    let weight = match path.kind {
        GeodesicKind::SubRiemannian => 2.0 * a0,
        GeodesicKind::Riemannian => 0.0,
    };
    (2..s.len() - 2)
        .map(|i| {
            let r = &acc[i] + model.phi(&s[i].point, &s[i].velocity) * weight;
            norm(model, &s[i].point, &r)
        })
        .fold(0.0, f64::max)
}

/// Endpoint error at step sizes `h`, `h/2`, `h/4` against a reference at
/// `h/16`, with the fitted convergence order.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub steps: [usize; 3],
    pub errors: [f64; 3],
    pub order: f64,
}

pub fn convergence_order(
    model: &dyn SasakiModel,
    init: &CotangentState,
    t_end: f64,
    base_steps: usize,
) -> Result<ConvergenceReport> {
    let end = |steps: usize| -> Result<Vector> {
        let mut x = init.point.clone();
        let mut p = init.covector.clone();
        if steps < MIN_STEPS {
            return Err(Error::TooFewSteps { got: steps, min: MIN_STEPS });
        }
        advance(model, GeodesicKind::SubRiemannian, x.as_mut_slice(), p.as_mut_slice(), t_end / steps as f64, steps);
        Ok(x)
    };
    let reference = end(base_steps * 16)?;
    let steps = [base_steps, base_steps * 2, base_steps * 4];
    let mut errors = [0.0; 3];
    for (e, s) in errors.iter_mut().zip(steps) {
        *e = (end(s)? - &reference).norm();
    }
    let order = 0.5 * ((errors[0] / errors[1]).log2() + (errors[1] / errors[2]).log2());
    Ok(ConvergenceReport { steps, errors, order })
}

#[derive(Clone, Debug, Serialize)]
pub struct BracketReport {
    /// `g([X, Phi X], xi)` by finite differences.
    pub value: f64,
    /// `-2 g(X, X)`.
    pub expected: f64,
    pub residual: f64,
}

/// Lie bracket `[X, Phi X]` of the horizontal extensions
/// `y -> horizontal part of P_y X` and `y -> Phi_y` of that, paired with `xi`.
pub fn strong_bracket_check(model: &dyn SasakiModel, p: &Vector, x: &Vector) -> Result<BracketReport> {
    check_on_manifold(model, p)?;
    let eta = model.eta(p, x);
    if !(eta.abs() < 1e-10 * (1.0 + x.norm())) {
        return Err(Error::NotHorizontal { eta });
    }
    let len = norm(model, p, x);
    if !(len > 1e-6) {
        return Err(Error::InvalidParameter(format!("vector too short (|X| = {len:e})")));
    }
    let ext_x = |y: &Vector| horizontal_part(model, y, &(model.tangent_projector(y) * x));
    let ext_y = |y: &Vector| model.phi(y, &ext_x(y));
    let h = 1e-4;
    let along = |f: &dyn Fn(&Vector) -> Vector, dir: &Vector| {
        let at = |s: f64| f(&(p + dir * s));
        (at(-2.0 * h) - at(-h) * 8.0 + at(h) * 8.0 - at(2.0 * h)) / (12.0 * h)
    };
    let (xp, yp) = (ext_x(p), ext_y(p));
    let bracket = along(&ext_y, &xp) - along(&ext_x, &yp);
    let xi = model.reeb(p);
    let value = model.metric(p, &bracket, &xi);
    let expected = -2.0 * model.metric(p, x, x);
    Ok(BracketReport { value, expected, residual: (value - expected).abs() })
}

/// Advances an ambient state by one RK4 step of size `h`.
pub fn advance_state(model: &dyn SasakiModel, kind: GeodesicKind, x: &mut Vector, p: &mut Vector, h: f64) {
    rk4_step(model, kind, x.as_mut_slice(), p.as_mut_slice(), h);
}

/// Velocity `dH/dp` of an ambient state.
pub fn velocity(model: &dyn SasakiModel, kind: GeodesicKind, x: &Vector, p: &Vector) -> Vector {
    let mut v = Vector::zeros(x.len());
    velocity_raw(model, kind, x.as_slice(), p.as_slice(), v.as_mut_slice());
    v
}

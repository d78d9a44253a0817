//! The transverse energy functionals `L`, `I`, `J` and `M` on basic
//! potentials of an S^3 model.
//!
//! For a potential `phi` the deformed transverse area form is
//! `u dA_T` with `u = 1 - box_B phi`, so every integral against
//! `(d eta_phi / 2) ^ eta_phi` reduces to a quotient integral weighted by `u`
//! times the fiber length.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{reeb_derivative, riemannian_laplacian_check, transverse_box, SasakiModel, Vector};
use crate::models::make_round_sphere;
use crate::numerics::{derivative_samples, simpson};

use super::path::PotentialPath;
use super::quotient::{BasicPotential, HopfQuotient};

/// Minimum number of Simpson intervals per path segment.
pub const MIN_INTERVALS: usize = 16;

/// Candidate normalizations of the transverse scalar curvature as a multiple
/// of the real trace of `Ric^T`.
pub const TRACE_FACTOR_CANDIDATES: [f64; 2] = [1.0, 0.5];

/// Functionals on a fixed quotient with a fixed scalar-curvature normalization.
#[derive(Clone, Debug)]
pub struct Functionals {
    pub quotient: HopfQuotient,
    /// `c` in `s^T = c * tr Ric^T`.
    pub trace_factor: f64,
}

/// Outcome of fixing the scalar-curvature normalization at the round structure.
#[derive(Clone, Debug, Serialize)]
pub struct Calibration {
    pub trace_factor: f64,
    /// `n (2n + 2) int dA_T / int tr Ric^T dA_T` at the round structure.
    pub predicted: f64,
    /// `(c, max |dM(0)(psi)|)` for each candidate normalization.
    pub candidates: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct JValue {
    /// Integral along the supplied path.
    pub path: f64,
    /// `(1/V) int (phi'' - phi') dvol_{phi'} - L(phi', phi'')`.
    pub closed_form: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IjDerivativeReport {
    pub times: Vec<f64>,
    /// `I - J` from the path start to `phi_t`, with `J` integrated along the path.
    pub values: Vec<f64>,
    /// Finite-difference `d/dt (I - J)`.
    pub derivative: Vec<f64>,
    /// `(1/V) int (phi_t - phi_a) box_t (d phi_t / dt) dvol_t`.
    pub predicted: Vec<f64>,
    pub max_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FunctionalReport {
    pub l: f64,
    pub m: f64,
    pub i: f64,
    pub j: f64,
    pub j_closed_form: f64,
    pub j_residual: f64,
    /// `V = int (d eta / 2) ^ eta`.
    pub volume: f64,
    pub fiber_length: f64,
    pub trace_factor: f64,
    /// Largest disagreement of `L`, `J`, `M` between distinct paths.
    pub path_independence_residual: f64,
    /// `I`, `(n+1)(I - J) - I` and `n I - (n+1)(I - J)`.
    pub inequality_slacks: [f64; 3],
    pub passed: bool,
}

/// Residuals tying the spectral potentials back to the model.
#[derive(Clone, Debug, Serialize)]
pub struct BasicCheck {
    /// Largest `|xi f|` of the pulled-back potential.
    pub max_reeb_derivative: f64,
    /// Largest gap between spectral `box_B phi` and the leaf-chart operator.
    pub box_residual: f64,
    /// Largest `|Delta f - 2 box_B f|` on the model.
    pub laplacian_residual: f64,
}

/// Complex dimension of the transverse quotient.
const N: f64 = 1.0;

/// Scalar curvature of an Einstein reference with the contact normalization.
const EINSTEIN_SCALAR: f64 = N * (2.0 * N + 2.0);

impl Functionals {
    pub fn new(quotient: HopfQuotient, trace_factor: f64) -> Self {
        Self { quotient, trace_factor }
    }

    /// Quotient of `model` at default resolution, with the normalization
    /// calibrated on the round S^3 at the same resolution.
    pub fn for_model(model: &dyn SasakiModel) -> Result<Self> {
        Self::with_resolution(model, 64, 128, 32)
    }

    /// As [`Functionals::for_model`] on an `nlat x nlon` grid truncated at degree `lmax`.
    pub fn with_resolution(model: &dyn SasakiModel, nlat: usize, nlon: usize, lmax: usize) -> Result<Self> {
        let quotient = HopfQuotient::from_model(model, nlat, nlon, lmax)?;
        let round = make_round_sphere(1)?;
        let reference = if model.key() == round.key() {
            quotient.clone()
        } else {
            HopfQuotient::from_model(round.as_ref(), nlat, nlon, lmax)?
        };
        let cal = calibrate(&reference)?;
        Ok(Self::new(quotient, cal.trace_factor))
    }

    pub fn volume(&self) -> f64 {
        self.quotient.volume
    }

    fn check_positive(&self, phi: &BasicPotential, t: f64) -> Result<Vec<f64>> {
        let u = phi.factor();
        let m = u.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(m > 0.0) {
            return Err(Error::PositivityViolated { t, min_factor: m });
        }
        Ok(u)
    }

    /// Transverse scalar curvature of the deformed structure on the grid.
    ///
    /// The deformed transverse metric is `u g^T`, so its Gauss curvature is
    /// `(K^T + box_B log u) / u`.
    pub fn scalar_curvature(&self, phi: &BasicPotential) -> Result<Vec<f64>> {
        self.scalar_curvature_at(phi, f64::NAN)
    }

    fn scalar_curvature_at(&self, phi: &BasicPotential, t: f64) -> Result<Vec<f64>> {
        let u = self.check_positive(phi, t)?;
        let q = &self.quotient;
        let log_u: Vec<f64> = u.iter().map(|v| v.ln()).collect();
        let box_log = q.grid.synthesis(&q.grid.spectral_multiply(&q.grid.analysis(&log_u), |l| q.box_eigenvalue(l)));
        let k = q.transverse_curvature;
        Ok(u.iter().zip(&box_log).map(|(ui, bl)| self.trace_factor * 2.0 * (k + bl) / ui).collect())
    }

    /// Integrates `f(t, phi_t, dphi_t/dt)` over `[a, b]`, splitting at knots
    /// and using Simpson's rule with at least `MIN_INTERVALS` per piece.
    fn integrate_path<F>(&self, path: &PotentialPath, a: f64, b: f64, f: F) -> Result<f64>
    where
        F: Fn(f64, &BasicPotential, &BasicPotential) -> Result<f64> + Sync,
    {
        let mut total = 0.0;
        for k in 0..path.segments() {
            let (t0, t1) = path.segment_bounds(k);
            let (lo, hi) = (t0.max(a), t1.min(b));
            if hi <= lo {
                continue;
            }
            let h = (hi - lo) / MIN_INTERVALS as f64;
            let vals: Vec<f64> = (0..=MIN_INTERVALS)
                .into_par_iter()
                .map(|i| {
                    let t = lo + i as f64 * h;
                    let (phi, dphi) = path.evaluate_on(k, t);
                    f(t, &phi, &dphi)
                })
                .collect::<Result<_>>()?;
            total += simpson(&vals, h);
        }
        Ok(total)
    }

    /// `L = (1/V) int dt int dphi/dt dvol_phi`.
    pub fn functional_l(&self, path: &PotentialPath) -> Result<f64> {
        self.integrate_path(path, path.start_time(), path.end_time(), |t, phi, dphi| {
            let u = self.check_positive(phi, t)?;
            Ok(self.quotient.average(&dphi.values, &u))
        })
    }

    /// `I = (1/V) int (phi'' - phi') (dvol_{phi'} - dvol_{phi''})`.
    pub fn functional_i(&self, a: &BasicPotential, b: &BasicPotential) -> Result<f64> {
        let ua = self.check_positive(a, 0.0)?;
        let ub = self.check_positive(b, 1.0)?;
        let diff = b.sub(a);
        let du: Vec<f64> = ua.iter().zip(&ub).map(|(x, y)| x - y).collect();
        Ok(self.quotient.average(&diff.values, &du))
    }

    fn check_endpoints(a: &BasicPotential, b: &BasicPotential, path: &PotentialPath) -> Result<()> {
        let gap = a.distance(path.start()).max(b.distance(path.end()));
        if gap > 1e-12 {
            return Err(Error::InvalidParameter(format!("path endpoints differ from the potentials by {gap:.3e}")));
        }
        Ok(())
    }

    /// `J` along `path`, cross-checked against the closed form through `L`.
    pub fn functional_j(&self, a: &BasicPotential, b: &BasicPotential, path: &PotentialPath) -> Result<JValue> {
        Self::check_endpoints(a, b, path)?;
        let v = self.j_along(path, path.end_time())?;
        let l = self.functional_l(path)?;
        let ua = self.check_positive(a, path.start_time())?;
        let closed = self.quotient.average(&b.sub(a).values, &ua) - l;
        Ok(JValue { path: v, closed_form: closed, residual: (v - closed).abs() })
    }

    /// `(1/V) int dt int dphi/dt (dvol_{phi_a} - dvol_{phi_t})` up to `t_end`.
    fn j_along(&self, path: &PotentialPath, t_end: f64) -> Result<f64> {
        let ua = self.check_positive(path.start(), path.start_time())?;
        self.integrate_path(path, path.start_time(), t_end, |t, phi, dphi| {
            let u = self.check_positive(phi, t)?;
            let du: Vec<f64> = ua.iter().zip(&u).map(|(x, y)| x - y).collect();
            Ok(self.quotient.average(&dphi.values, &du))
        })
    }

    /// `M = -(1/V) int dt int dphi/dt (s^T(phi_t) - n(2n+2)) dvol_phi`.
    pub fn functional_m(&self, path: &PotentialPath) -> Result<f64> {
        self.integrate_path(path, path.start_time(), path.end_time(), |t, phi, dphi| self.m_integrand(phi, dphi, t))
    }

    fn m_integrand(&self, phi: &BasicPotential, psi: &BasicPotential, t: f64) -> Result<f64> {
        let s = self.scalar_curvature_at(phi, t)?;
        let u = phi.factor();
        let w: Vec<f64> = psi.values.iter().zip(&s).map(|(p, si)| p * (si - EINSTEIN_SCALAR)).collect();
        Ok(-self.quotient.average(&w, &u))
    }

    /// Differential of `M` at `phi` in direction `psi`, from the integrand.
    pub fn m_differential(&self, phi: &BasicPotential, psi: &BasicPotential) -> Result<f64> {
        self.m_integrand(phi, psi, 0.0)
    }

    /// `dM(0)(psi)` by a central difference of `M` along straight paths.
    pub fn m_derivative_at_reference(&self, psi: &BasicPotential) -> Result<f64> {
        let eps = 1e-5;
        let zero = self.quotient.zero();
        let plus = self.functional_m(&PotentialPath::linear(&zero, &psi.scale(eps))?)?;
        let minus = self.functional_m(&PotentialPath::linear(&zero, &psi.scale(-eps))?)?;
        Ok((plus - minus) / (2.0 * eps))
    }

    /// Compares `d/dt (I - J)(phi_a, phi_t)` with
    /// `(1/V) int (phi_t - phi_a) box_t (dphi_t/dt) dvol_t` at interior samples.
    pub fn ij_derivative_check(&self, path: &PotentialPath, samples: usize) -> Result<IjDerivativeReport> {
        if samples < 8 {
            return Err(Error::TooFewSamples { got: samples, min: 8 });
        }
        let (a, b) = (path.start_time(), path.end_time());
        let h = (b - a) / (samples - 1) as f64;
        let times: Vec<f64> = (0..samples).map(|i| a + i as f64 * h).collect();
        let start = path.start();
        let mut values = Vec::with_capacity(samples);
        let mut predicted = Vec::with_capacity(samples);
        for &t in &times {
            let (phi, dphi) = path.evaluate(t);
            let i = self.functional_i(start, &phi)?;
            let j = if t > a { self.j_along(path, t)? } else { 0.0 };
            values.push(i - j);
            // box_t = u^{-1} box_B in real dimension two.
            let u = self.check_positive(&phi, t)?;
            let box_t: Vec<f64> = dphi.box_values.iter().zip(&u).map(|(bv, ui)| bv / ui).collect();
            let w: Vec<f64> = phi.sub(start).values.iter().zip(&box_t).map(|(p, q)| p * q).collect();
            predicted.push(self.quotient.average(&w, &u));
        }
        let derivative = derivative_samples(&values, h);
        let max_residual = (2..samples - 2).map(|i| (derivative[i] - predicted[i]).abs()).fold(0.0, f64::max);
        Ok(IjDerivativeReport { times, values, derivative, predicted, max_residual })
    }

    /// All four functionals between `a` and `b` with their consistency diagnostics.
    pub fn report(&self, a: &BasicPotential, b: &BasicPotential) -> Result<FunctionalReport> {
        let q = &self.quotient;
        let straight = PotentialPath::linear(a, b)?;
        let detour = q.harmonic(2, 1, 0.25 * b.sub(a).amplitude.max(1e-3))?;
        let bent = PotentialPath::quadratic(a, b, &detour)?;
        let mid = a.lerp(b, 0.5).add(&detour.scale(0.5));
        let broken = PotentialPath::through(&[a.clone(), mid, b.clone()])?;

        let l = self.functional_l(&straight)?;
        let m = self.functional_m(&straight)?;
        let i = self.functional_i(a, b)?;
        let jv = self.functional_j(a, b, &straight)?;
        let mut path_res: f64 = 0.0;
        for other in [&bent, &broken] {
            path_res = path_res.max((self.functional_l(other)? - l).abs());
            path_res = path_res.max((self.functional_j(a, b, other)?.path - jv.path).abs());
            path_res = path_res.max((self.functional_m(other)? - m).abs());
        }
        let j = jv.path;
        let slacks = [i, (N + 1.0) * (i - j) - i, N * i - (N + 1.0) * (i - j)];
        let passed = slacks.iter().all(|s| *s >= -1e-7) && path_res < 1e-6 && jv.residual < 1e-6;
        Ok(FunctionalReport {
            l,
            m,
            i,
            j,
            j_closed_form: jv.closed_form,
            j_residual: jv.residual,
            volume: q.volume,
            fiber_length: q.fiber_length,
            trace_factor: self.trace_factor,
            path_independence_residual: path_res,
            inequality_slacks: slacks,
            passed,
        })
    }
}

/// Fixes the trace normalization of `s^T` by requiring the round structure
/// to be a critical point of `M`, and checks the choice is `1` or `1/2`.
pub fn calibrate(round: &HopfQuotient) -> Result<Calibration> {
    let directions =
        [round.constant(1.0), round.harmonic(1, 0, 1.0)?, round.harmonic(2, 1, 1.0)?, round.harmonic(3, -2, 1.0)?];
    let mut candidates = Vec::new();
    for &c in &TRACE_FACTOR_CANDIDATES {
        let f = Functionals::new(round.clone(), c);
        let mut worst: f64 = 0.0;
        for psi in &directions {
            worst = worst.max(f.m_derivative_at_reference(psi)?.abs());
        }
        candidates.push((c, worst));
    }
    let &(best, gap) = candidates.iter().min_by(|x, y| x.1.total_cmp(&y.1)).expect("nonempty");
    if !(gap < 1e-4) {
        return Err(Error::PreconditionFailed(format!(
            "no trace normalization makes the reference structure critical (best {best}, |dM| = {gap:.3e})"
        )));
    }
    let ones = vec![1.0; round.grid.len()];
    let area = round.integrate(&ones);
    let trace_total = 2.0 * round.transverse_curvature * area;
    Ok(Calibration { trace_factor: best, predicted: EINSTEIN_SCALAR * area / trace_total, candidates })
}

/// Checks that the pulled-back potential is basic and that the spectral
/// `box_B` agrees with the leaf-chart operator and with `Delta / 2` on the model.
pub fn basic_check(
    model: &dyn SasakiModel,
    quotient: &HopfQuotient,
    phi: &BasicPotential,
    points: &[Vector],
) -> Result<BasicCheck> {
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    let f = quotient.pullback(phi);
    let box_coeffs = quotient.grid.spectral_multiply(&phi.coeffs, |l| quotient.box_eigenvalue(l));
    let mut max_xi: f64 = 0.0;
    let mut box_res: f64 = 0.0;
    for x in points {
        max_xi = max_xi.max(reeb_derivative(model, x, &f).abs());
        let spectral = quotient.grid.evaluate(&box_coeffs, super::quotient::hopf(x));
        box_res = box_res.max((transverse_box(model, x, &f)? - spectral).abs());
    }
    let laplacian_residual = riemannian_laplacian_check(model, &f, points)?;
    Ok(BasicCheck { max_reeb_derivative: max_xi, box_residual: box_res, laplacian_residual })
}

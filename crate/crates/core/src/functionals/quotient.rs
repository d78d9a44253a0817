//! The leaf space of the Reeb foliation of S^3, identified with the round
//! 2-sphere by the Hopf map, and basic potentials on it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{random_horizontal, sample_points, transverse_ricci, SasakiModel, Vector};
use crate::numerics::{seeded_rng, SeededRng};

use super::harmonics::SphereGrid;
use rand::Rng;

/// Hopf map `S^3 -> S^2`, `(z1, z2) -> (2 z1 conj(z2), |z1|^2 - |z2|^2)`.
pub fn hopf(x: &Vector) -> [f64; 3] {
    let r = x.norm();
    let (a, b, c, d) = (x[0] / r, x[1] / r, x[2] / r, x[3] / r);
    [2.0 * (a * c + b * d), 2.0 * (b * c - a * d), a * a + b * b - c * c - d * d]
}

/// Quadrature data for basic integrals on an S^3 model.
#[derive(Clone, Debug)]
pub struct HopfQuotient {
    pub grid: SphereGrid,
    /// Length of a Reeb orbit, from integrating the Reeb flow.
    pub fiber_length: f64,
    /// Constant transverse Gauss curvature, `Ric^T = K^T g^T`.
    pub transverse_curvature: f64,
    /// Total transverse area `int dA_T`.
    pub area: f64,
    /// `V = int (d eta / 2) ^ eta = fiber_length * area`.
    pub volume: f64,
}

/// First return time of the Reeb flow through `x0`.
fn reeb_period(model: &dyn SasakiModel, x0: &Vector) -> f64 {
    let flow = |t: f64| -> Vector {
        let steps = ((t / 1e-3).ceil() as usize).max(16);
        let h = t / steps as f64;
        let mut x = x0.clone();
        for _ in 0..steps {
            let k1 = model.reeb(&x);
            let k2 = model.reeb(&(&x + &k1 * (0.5 * h)));
            let k3 = model.reeb(&(&x + &k2 * (0.5 * h)));
            let k4 = model.reeb(&(&x + &k3 * h));
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            x = model.project_point(&x);
        }
        x
    };
    // Coarse scan for the first local minimum of the return distance.
    let h = 1e-2;
    let mut x = x0.clone();
    let mut prev = (f64::INFINITY, f64::INFINITY);
    let mut t_min = f64::NAN;
    for i in 1..100_000 {
        let k1 = model.reeb(&x);
        let k2 = model.reeb(&(&x + &k1 * (0.5 * h)));
        let k3 = model.reeb(&(&x + &k2 * (0.5 * h)));
        let k4 = model.reeb(&(&x + &k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        x = model.project_point(&x);
        let d = (&x - x0).norm();
        if i > 2 && prev.1 < prev.0 && prev.1 <= d && prev.1 < 0.1 {
            t_min = (i - 1) as f64 * h;
            break;
        }
        prev = (prev.1, d);
    }
    // Golden-section refinement of the return time.
    let dist = |t: f64| (flow(t) - x0).norm();
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (t_min - 2.0 * h, t_min + 2.0 * h);
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (dist(c), dist(d));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = dist(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = dist(d);
        }
        if b - a < 1e-12 {
            break;
        }
    }
    0.5 * (a + b)
}

impl HopfQuotient {
    /// Builds the quotient data for an S^3 model whose transverse metric
    /// is round (the round sphere and its D-homothetic deformations).
    pub fn from_model(model: &dyn SasakiModel, nlat: usize, nlon: usize, lmax: usize) -> Result<Self> {
        if model.n() != 1 || model.ambient_dim() != 4 {
            return Err(Error::UnsupportedModel(format!("{} is not an S^3 model with a Hopf quotient", model.key())));
        }
        let pts = sample_points(model, 8, 0x51);
        let mut rng = seeded_rng(0x52);
        let mut ks = Vec::new();
        for x in &pts {
            let h = random_horizontal(model, x, &mut rng);
            ks.push(transverse_ricci(model, x, &h, &h)? / model.metric(x, &h, &h));
        }
        let k = ks[0];
        if ks.iter().any(|v| (v - k).abs() > 1e-8) {
            return Err(Error::UnsupportedModel(format!("{} has non-constant transverse curvature", model.key())));
        }
        let x0 = &pts[0];
        let fiber_length = reeb_period(model, x0) * model.metric(x0, &model.reeb(x0), &model.reeb(x0)).sqrt();
        let grid = SphereGrid::new(nlat, nlon, lmax)?;
        let r2 = 1.0 / k;
        let area = r2 * grid.integrate(&vec![1.0; grid.len()]);
        Ok(Self { grid, fiber_length, transverse_curvature: k, area, volume: fiber_length * area })
    }

    /// Default resolution: 64 x 128 grid, degree 32.
    pub fn with_defaults(model: &dyn SasakiModel) -> Result<Self> {
        Self::from_model(model, 64, 128, 32)
    }

    /// Transverse area element relative to `dOmega` of the unit sphere.
    pub fn area_scale(&self) -> f64 {
        1.0 / self.transverse_curvature
    }

    /// Eigenvalue of the basic complex Laplacian on degree-`l` harmonics.
    pub fn box_eigenvalue(&self, l: usize) -> f64 {
        0.5 * (l * (l + 1)) as f64 * self.transverse_curvature
    }

    /// `int F dA_T` over the quotient.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.area_scale() * self.grid.integrate(values)
    }

    /// `(1 / V) int_S F (d eta_phi / 2) ^ eta_phi` for a basic `F` and
    /// deformation factor `u`.
    pub fn average(&self, values: &[f64], factor: &[f64]) -> f64 {
        let prod: Vec<f64> = values.iter().zip(factor).map(|(a, b)| a * b).collect();
        self.fiber_length * self.integrate(&prod) / self.volume
    }

    pub fn from_coeffs(&self, coeffs: Vec<f64>) -> Result<BasicPotential> {
        if coeffs.len() != self.grid.coeff_len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                self.grid.coeff_len(),
                coeffs.len()
            )));
        }
        let values = self.grid.synthesis(&coeffs);
        let box_coeffs = self.grid.spectral_multiply(&coeffs, |l| self.box_eigenvalue(l));
        let box_values = self.grid.synthesis(&box_coeffs);
        Ok(BasicPotential::assemble(coeffs, values, box_values))
    }

    /// Potential from values on the quadrature grid (projected to the
    /// harmonic truncation).
    pub fn from_values(&self, values: &[f64]) -> Result<BasicPotential> {
        if values.len() != self.grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} grid values, got {}",
                self.grid.len(),
                values.len()
            )));
        }
        self.from_coeffs(self.grid.analysis(values))
    }

    /// Potential from a function of the unit vector on the quotient sphere.
    pub fn from_function(&self, f: impl Fn([f64; 3]) -> f64) -> Result<BasicPotential> {
        let values: Vec<f64> = (0..self.grid.len()).map(|i| f(self.grid.node(i))).collect();
        self.from_values(&values)
    }

    pub fn zero(&self) -> BasicPotential {
        self.from_coeffs(vec![0.0; self.grid.coeff_len()]).expect("sized")
    }

    pub fn constant(&self, c: f64) -> BasicPotential {
        let mut coeffs = vec![0.0; self.grid.coeff_len()];
        coeffs[0] = c * (4.0 * std::f64::consts::PI).sqrt();
        self.from_coeffs(coeffs).expect("sized")
    }

    /// The real harmonic `(l, m)` scaled so that `max |phi| = amplitude` on the grid.
    pub fn harmonic(&self, l: usize, m: i64, amplitude: f64) -> Result<BasicPotential> {
        if l > self.grid.lmax || m.unsigned_abs() as usize > l {
            return Err(Error::InvalidParameter(format!("no harmonic with degree {l} and order {m}")));
        }
        let mut coeffs = vec![0.0; self.grid.coeff_len()];
        coeffs[super::harmonics::coeff_index(l, m)] = 1.0;
        let unit = self.from_coeffs(coeffs)?;
        if unit.amplitude == 0.0 {
            return Ok(unit);
        }
        Ok(unit.scale(amplitude / unit.amplitude))
    }

    /// Random combination of harmonics of degree `1..=max_degree` with
    /// amplitude at most `max_amplitude`, shrunk if needed so that the
    /// deformation factor stays at or above `min_factor`.
    pub fn random_potential(
        &self,
        rng: &mut SeededRng,
        max_degree: usize,
        max_amplitude: f64,
        min_factor: f64,
    ) -> BasicPotential {
        let mut coeffs = vec![0.0; self.grid.coeff_len()];
        for l in 1..=max_degree.min(self.grid.lmax) {
            for m in -(l as i64)..=(l as i64) {
                coeffs[super::harmonics::coeff_index(l, m)] = rng.random_range(-1.0..1.0);
            }
        }
        let raw = self.from_coeffs(coeffs).expect("sized");
        let target = max_amplitude * rng.random_range(0.1..1.0);
        let mut phi = raw.scale(target / raw.amplitude);
        while phi.min_factor() < min_factor {
            phi = phi.scale(0.5);
        }
        phi
    }

    /// Pullback of a basic potential to the ambient space of S^3.
    pub fn pullback<'a>(&'a self, phi: &'a BasicPotential) -> impl Fn(&Vector) -> f64 + 'a {
        move |x: &Vector| self.grid.evaluate(&phi.coeffs, hopf(x))
    }
}

/// A basic function on S^3, stored on the quotient as harmonic
/// coefficients together with its grid values and those of `box_B phi`.
#[derive(Clone, Debug, Serialize)]
pub struct BasicPotential {
    pub coeffs: Vec<f64>,
    pub values: Vec<f64>,
    pub box_values: Vec<f64>,
    /// `max |phi|` over the grid.
    pub amplitude: f64,
}

impl BasicPotential {
    fn assemble(coeffs: Vec<f64>, values: Vec<f64>, box_values: Vec<f64>) -> Self {
        let amplitude = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        Self { coeffs, values, box_values, amplitude }
    }

    fn combine(&self, other: &Self, a: f64, b: f64) -> Self {
        let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| a * p + b * q).collect::<Vec<_>>();
        Self::assemble(
            mix(&self.coeffs, &other.coeffs),
            mix(&self.values, &other.values),
            mix(&self.box_values, &other.box_values),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        self.combine(self, s, 0.0)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, 1.0, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, 1.0, -1.0)
    }

    /// `(1 - s) self + s other`.
    pub fn lerp(&self, other: &Self, s: f64) -> Self {
        self.combine(other, 1.0 - s, s)
    }

    /// Deformation factor `u = 1 - box_B phi` of the transverse area form.
    pub fn factor(&self) -> Vec<f64> {
        self.box_values.iter().map(|b| 1.0 - b).collect()
    }

    pub fn min_factor(&self) -> f64 {
        self.box_values.iter().fold(f64::INFINITY, |a, b| a.min(1.0 - b))
    }

    /// Largest grid difference to another potential.
    pub fn distance(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |a, (p, q)| a.max((p - q).abs()))
    }
}

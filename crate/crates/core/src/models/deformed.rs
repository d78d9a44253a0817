use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{LeafChart, ModelRef, SasakiModel, Vector, MAX_AMBIENT};
use crate::numerics::SeededRng;

/// D-homothetic deformation of a Sasakian model:
/// `eta' = eta / mu`, `xi' = mu xi`, `Phi' = Phi`, and
/// `g' = (g - eta^2) / mu + eta'^2`, so the transverse metric scales by `1/mu`.
#[derive(Clone, Debug)]
pub struct DHomothetic {
    base: ModelRef,
    mu: f64,
}

impl DHomothetic {
    pub fn new(base: ModelRef, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("deformation parameter must be positive, got {mu}")));
        }
        Ok(Self { base, mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn base(&self) -> &ModelRef {
        &self.base
    }

    /// Coefficient of the connection change, `1/mu - 1`.
    fn c(&self) -> f64 {
        1.0 / self.mu - 1.0
    }

    /// The difference tensor `S(A, B) = c (eta(B) Phi A + eta(A) Phi B)`.
    fn diff(&self, x: &Vector, a: &Vector, b: &Vector) -> Vector {
        let base = &self.base;
        (base.phi(x, a) * base.eta(x, b) + base.phi(x, b) * base.eta(x, a)) * self.c()
    }

    /// `(nabla_X S)(Y, Z)` for the base Levi-Civita connection.
    fn nabla_diff(&self, x: &Vector, a: &Vector, b: &Vector, c: &Vector) -> Vector {
        let base = &self.base;
        let xi = base.reeb(x);
        let g = |u: &Vector, v: &Vector| base.metric(x, u, v);
        let (eb, ec) = (base.eta(x, b), base.eta(x, c));
        let (pa, pb, pc) = (base.phi(x, a), base.phi(x, b), base.phi(x, c));
        let term = pb * g(&pa, c) + (a * eb - &xi * g(a, b)) * ec + pc * g(&pa, b) + (a * ec - &xi * g(a, c)) * eb;
        term * self.c()
    }
}

impl SasakiModel for DHomothetic {
    fn key(&self) -> String {
        format!("{}-dhom:{}", self.base.key(), self.mu)
    }

    fn n(&self) -> usize {
        self.base.n()
    }

    fn ambient_dim(&self) -> usize {
        self.base.ambient_dim()
    }

    fn constraint_residual(&self, x: &Vector) -> f64 {
        self.base.constraint_residual(x)
    }

    fn project_point(&self, x: &Vector) -> Vector {
        self.base.project_point(x)
    }

    fn tangent_projector(&self, x: &Vector) -> DMatrix<f64> {
        self.base.tangent_projector(x)
    }

    fn metric(&self, x: &Vector, a: &Vector, b: &Vector) -> f64 {
        let (ea, eb) = (self.base.eta(x, a), self.base.eta(x, b));
        let mu = self.mu;
        (self.base.metric(x, a, b) - ea * eb) / mu + ea * eb / (mu * mu)
    }

    fn flat(&self, x: &Vector, v: &Vector) -> Vector {
        let w = self.base.eta_form(x);
        let e = self.base.eta(x, v);
        let mu = self.mu;
        (self.base.flat(x, v) - &w * e) / mu + w * (e / (mu * mu))
    }

    fn reeb(&self, x: &Vector) -> Vector {
        self.base.reeb(x) * self.mu
    }

    fn reeb_jacobian(&self, x: &Vector) -> DMatrix<f64> {
        self.base.reeb_jacobian(x) * self.mu
    }

    fn eta_form(&self, x: &Vector) -> Vector {
        self.base.eta_form(x) / self.mu
    }

    fn phi(&self, x: &Vector, v: &Vector) -> Vector {
        self.base.phi(x, v)
    }

    fn christoffel(&self, x: &Vector, a: &Vector, b: &Vector) -> Vector {
        self.base.christoffel(x, a, b) + self.diff(x, a, b)
    }

    fn curvature(&self, x: &Vector, a: &Vector, b: &Vector, c: &Vector) -> Vector {
        self.base.curvature(x, a, b, c) + self.nabla_diff(x, a, b, c) - self.nabla_diff(x, b, a, c)
            + self.diff(x, a, &self.diff(x, b, c))
            - self.diff(x, b, &self.diff(x, a, c))
    }

    fn sample_point(&self, rng: &mut SeededRng) -> Vector {
        self.base.sample_point(rng)
    }

    fn cometric_terms(&self, x: &[f64], p: &[f64], grad_x: &mut [f64], sharp: &mut [f64]) -> f64 {
        let m = x.len();
        let mut xi = [0.0; MAX_AMBIENT];
        let mut pull = [0.0; MAX_AMBIENT];
        let g = self.base.cometric_terms(x, p, grad_x, sharp);
        self.base.reeb_into(x, &mut xi[..m]);
        self.base.reeb_pullback_into(x, p, &mut pull[..m]);
        let s: f64 = p.iter().zip(&xi[..m]).map(|(a, b)| a * b).sum();
        let mu = self.mu;
        let k = mu * mu - mu;
        for i in 0..m {
            grad_x[i] = mu * grad_x[i] + k * s * pull[i];
            sharp[i] = mu * sharp[i] + k * s * xi[i];
        }
        mu * g + k * s * s
    }

    fn reeb_into(&self, x: &[f64], out: &mut [f64]) {
        self.base.reeb_into(x, out);
        out.iter_mut().for_each(|v| *v *= self.mu);
    }

    fn reeb_pullback_into(&self, x: &[f64], p: &[f64], out: &mut [f64]) {
        self.base.reeb_pullback_into(x, p, out);
        out.iter_mut().for_each(|v| *v *= self.mu);
    }

    fn normalize_state(&self, x: &mut [f64], p: &mut [f64]) {
        self.base.normalize_state(x, p);
    }

    fn leaf_chart(&self, x: &Vector) -> Option<LeafChart> {
        self.base.leaf_chart(x)
    }
}

use nalgebra::DMatrix;
use rand::Rng;

use crate::geometry::{LeafChart, SasakiModel, Vector};
use crate::numerics::SeededRng;

/// The Heisenberg group on the global chart `(x, y, z)` of `R^3`.
///
/// Contact form `eta = dz - y dx + x dy`, Reeb field `xi = d/dz`, metric
/// `g = dx^2 + dy^2 + eta^2`. The frame `e1 = d/dx + y d/dz`,
/// `e2 = d/dy - x d/dz`, `xi` is orthonormal with `[e1, e2] = -2 xi`,
/// `Phi e1 = e2`, `Phi e2 = -e1`, which gives `d eta(X, Y) = 2 g(Phi X, Y)`.
#[derive(Clone, Debug)]
pub struct Heisenberg {
    eta_scale: f64,
    /// `gamma[i][j][k] = g(nabla_{e_i} e_j, e_k)`.
    gamma: [[[f64; 3]; 3]; 3],
    /// `riem[i][j][k][l] = g(R(e_i, e_j) e_k, e_l)`.
    riem: [[[[f64; 3]; 3]; 3]; 3],
}

impl Default for Heisenberg {
    fn default() -> Self {
        Self::new()
    }
}

impl Heisenberg {
    pub fn new() -> Self {
        Self::with_eta_scale(1.0)
    }

    /// Variant whose contact form is multiplied by `scale` while everything
    /// else is unchanged. Only `scale = 1` is Sasakian; other values serve
    /// as negative controls for the identity checks.
    pub fn with_eta_scale(scale: f64) -> Self {
        // bracket[i][j][k] = g([e_i, e_j], e_k)
        let mut bracket = [[[0.0; 3]; 3]; 3];
        bracket[0][1][2] = -2.0;
        bracket[1][0][2] = 2.0;
        let mut gamma = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    gamma[i][j][k] = 0.5 * (bracket[i][j][k] - bracket[j][k][i] + bracket[k][i][j]);
                }
            }
        }
        // R(e_i, e_j) e_k = nabla_i nabla_j e_k - nabla_j nabla_i e_k - nabla_[e_i, e_j] e_k,
        // with constant connection coefficients.
        let mut riem = [[[[0.0; 3]; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let mut v = 0.0;
                        for m in 0..3 {
                            v += gamma[j][k][m] * gamma[i][m][l] - gamma[i][k][m] * gamma[j][m][l];
                            v -= bracket[i][j][m] * gamma[m][k][l];
                        }
                        riem[i][j][k][l] = v;
                    }
                }
            }
        }
        Self { eta_scale: scale, gamma, riem }
    }

    /// Components of an ambient vector in the frame `(e1, e2, xi)`.
    fn frame_coords(x: &Vector, v: &Vector) -> [f64; 3] {
        [v[0], v[1], v[2] - x[1] * v[0] + x[0] * v[1]]
    }

    fn from_frame(x: &Vector, c: [f64; 3]) -> Vector {
        Vector::from_vec(vec![c[0], c[1], x[1] * c[0] - x[0] * c[1] + c[2]])
    }
}

impl SasakiModel for Heisenberg {
    fn key(&self) -> String {
        if self.eta_scale == 1.0 {
            "heisenberg".into()
        } else {
            format!("heisenberg-eta-scaled:{}", self.eta_scale)
        }
    }

    fn n(&self) -> usize {
        1
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn constraint_residual(&self, x: &Vector) -> f64 {
        if x.iter().all(|v| v.is_finite()) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn project_point(&self, x: &Vector) -> Vector {
        x.clone()
    }

    fn tangent_projector(&self, _x: &Vector) -> DMatrix<f64> {
        DMatrix::identity(3, 3)
    }

    fn metric(&self, x: &Vector, a: &Vector, b: &Vector) -> f64 {
        let (ca, cb) = (Self::frame_coords(x, a), Self::frame_coords(x, b));
        ca[0] * cb[0] + ca[1] * cb[1] + ca[2] * cb[2]
    }

    fn flat(&self, x: &Vector, v: &Vector) -> Vector {
        let c = Self::frame_coords(x, v);
        Vector::from_vec(vec![c[0] - x[1] * c[2], c[1] + x[0] * c[2], c[2]])
    }

    fn reeb(&self, _x: &Vector) -> Vector {
        Vector::from_vec(vec![0.0, 0.0, 1.0])
    }

    fn reeb_jacobian(&self, _x: &Vector) -> DMatrix<f64> {
        DMatrix::zeros(3, 3)
    }

    fn eta_form(&self, x: &Vector) -> Vector {
        Vector::from_vec(vec![-x[1], x[0], 1.0]) * self.eta_scale
    }

    fn phi(&self, x: &Vector, v: &Vector) -> Vector {
        let c = Self::frame_coords(x, v);
        Self::from_frame(x, [-c[1], c[0], 0.0])
    }

    fn christoffel(&self, x: &Vector, a: &Vector, b: &Vector) -> Vector {
        // nabla_A B for constant ambient B: differentiate the frame
        // components of B along A, then add the frame connection.
        let (ca, cb) = (Self::frame_coords(x, a), Self::frame_coords(x, b));
        let mut out = [0.0; 3];
        out[2] = a[0] * b[1] - a[1] * b[0];
        for i in 0..3 {
            for j in 0..3 {
                for (k, o) in out.iter_mut().enumerate() {
                    *o += ca[i] * cb[j] * self.gamma[i][j][k];
                }
            }
        }
        // Convert the frame result back and remove the straight ambient
        // derivative, which is zero for constant B.
        Self::from_frame(x, out)
    }

    fn curvature(&self, x: &Vector, a: &Vector, b: &Vector, c: &Vector) -> Vector {
        let (ca, cb, cc) = (Self::frame_coords(x, a), Self::frame_coords(x, b), Self::frame_coords(x, c));
        let mut out = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let w = ca[i] * cb[j] * cc[k];
                    if w == 0.0 {
                        continue;
                    }
                    for (l, o) in out.iter_mut().enumerate() {
                        *o += w * self.riem[i][j][k][l];
                    }
                }
            }
        }
        Self::from_frame(x, out)
    }

    fn sample_point(&self, rng: &mut SeededRng) -> Vector {
        Vector::from_fn(3, |_, _| rng.random_range(-2.0..2.0))
    }

    fn cometric_terms(&self, x: &[f64], p: &[f64], grad_x: &mut [f64], sharp: &mut [f64]) -> f64 {
        let u = p[0] + x[1] * p[2];
        let v = p[1] - x[0] * p[2];
        grad_x[0] = -v * p[2];
        grad_x[1] = u * p[2];
        grad_x[2] = 0.0;
        sharp[0] = u;
        sharp[1] = v;
        sharp[2] = x[1] * u - x[0] * v + p[2];
        u * u + v * v + p[2] * p[2]
    }

    fn reeb_into(&self, _x: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
        out[1] = 0.0;
        out[2] = 1.0;
    }

    fn reeb_pullback_into(&self, _x: &[f64], _p: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }

    fn normalize_state(&self, _x: &mut [f64], _p: &mut [f64]) {}

    fn leaf_chart(&self, _x: &Vector) -> Option<LeafChart> {
        Some(LeafChart::Plane)
    }
}

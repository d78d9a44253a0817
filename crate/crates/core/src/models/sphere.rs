use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{LeafChart, SasakiModel, Vector};
use crate::numerics::{unit_vector, SeededRng};

/// The round sphere `S^{2n+1}` in `C^{n+1} = R^{2n+2}` with Reeb field
/// `xi(x) = J x`, where `J` rotates each coordinate pair by a quarter turn.
#[derive(Clone, Debug)]
pub struct RoundSphere {
    n: usize,
}

impl RoundSphere {
    pub fn new(n: usize) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidParameter(format!("sphere index n = {n} outside 1..=3")));
        }
        Ok(Self { n })
    }

    fn dim(&self) -> usize {
        2 * self.n + 2
    }
}

fn apply_j(v: &[f64], out: &mut [f64]) {
    for k in 0..v.len() / 2 {
        out[2 * k] = -v[2 * k + 1];
        out[2 * k + 1] = v[2 * k];
    }
}

fn j_vec(v: &Vector) -> Vector {
    let mut out = Vector::zeros(v.len());
    apply_j(v.as_slice(), out.as_mut_slice());
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl SasakiModel for RoundSphere {
    fn key(&self) -> String {
        format!("s{}", 2 * self.n + 1)
    }

    fn n(&self) -> usize {
        self.n
    }

    fn ambient_dim(&self) -> usize {
        self.dim()
    }

    fn constraint_residual(&self, x: &Vector) -> f64 {
        (x.norm() - 1.0).abs()
    }

    fn project_point(&self, x: &Vector) -> Vector {
        x / x.norm()
    }

    fn tangent_projector(&self, x: &Vector) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim()) - x * x.transpose()
    }

    fn metric(&self, _x: &Vector, a: &Vector, b: &Vector) -> f64 {
        a.dot(b)
    }

    fn flat(&self, _x: &Vector, v: &Vector) -> Vector {
        v.clone()
    }

    fn reeb(&self, x: &Vector) -> Vector {
        j_vec(x)
    }

    fn reeb_jacobian(&self, _x: &Vector) -> DMatrix<f64> {
        let m = self.dim();
        let mut j = DMatrix::zeros(m, m);
        for k in 0..m / 2 {
            j[(2 * k, 2 * k + 1)] = -1.0;
            j[(2 * k + 1, 2 * k)] = 1.0;
        }
        j
    }

    fn eta_form(&self, x: &Vector) -> Vector {
        j_vec(x)
    }

    fn phi(&self, x: &Vector, v: &Vector) -> Vector {
        let jv = j_vec(v);
        let c = jv.dot(x);
        jv - x * c
    }

    fn christoffel(&self, x: &Vector, a: &Vector, b: &Vector) -> Vector {
        x * a.dot(b)
    }

    fn curvature(&self, _x: &Vector, a: &Vector, b: &Vector, c: &Vector) -> Vector {
        a * b.dot(c) - b * a.dot(c)
    }

    fn sample_point(&self, rng: &mut SeededRng) -> Vector {
        unit_vector(rng, self.dim())
    }

    fn cometric_terms(&self, x: &[f64], p: &[f64], grad_x: &mut [f64], sharp: &mut [f64]) -> f64 {
        let xp = dot(x, p);
        for i in 0..x.len() {
            grad_x[i] = -xp * p[i];
            sharp[i] = p[i] - xp * x[i];
        }
        dot(p, p) - xp * xp
    }

    fn reeb_into(&self, x: &[f64], out: &mut [f64]) {
        apply_j(x, out);
    }

    fn reeb_pullback_into(&self, _x: &[f64], p: &[f64], out: &mut [f64]) {
        apply_j(p, out);
        for v in out.iter_mut() {
            *v = -*v;
        }
    }

    fn normalize_state(&self, x: &mut [f64], p: &mut [f64]) {
        let r = dot(x, x).sqrt();
        for v in x.iter_mut() {
            *v /= r;
        }
        let xp = dot(x, p);
        for i in 0..x.len() {
            p[i] -= xp * x[i];
        }
    }

    fn leaf_chart(&self, x: &Vector) -> Option<LeafChart> {
        if self.n != 1 {
            return None;
        }
        let first = x[0] * x[0] + x[1] * x[1];
        let second = x[2] * x[2] + x[3] * x[3];
        Some(if first >= second { LeafChart::SphereFirst } else { LeafChart::SphereSecond })
    }
}

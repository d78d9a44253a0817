//! Piecewise paths of basic potentials.

use serde::Serialize;

use crate::error::{Error, Result};

use super::quotient::BasicPotential;

/// Interpolation rule on one segment, in the local parameter `s in [0, 1]`.
#[derive(Clone, Debug, Serialize)]
pub enum SegmentShape {
    /// `(1 - s) a + s b`.
    Linear,
    /// `(1 - s) a + s b + s (1 - s) w` for a detour potential `w`.
    Quadratic(BasicPotential),
    /// `a + (1 - cos(pi s)) / 2 (b - a)`: the straight segment at a
    /// non-uniform speed.
    Cosine,
}

/// Path `t -> phi_t` through knot potentials at increasing parameters.
#[derive(Clone, Debug, Serialize)]
pub struct PotentialPath {
    pub knots: Vec<(f64, BasicPotential)>,
    pub shapes: Vec<SegmentShape>,
}

impl PotentialPath {
    pub fn new(knots: Vec<(f64, BasicPotential)>, shapes: Vec<SegmentShape>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidParameter("a path needs at least two knots".into()));
        }
        if shapes.len() != knots.len() - 1 {
            return Err(Error::InvalidParameter(format!(
                "{} knots need {} segment shapes, got {}",
                knots.len(),
                knots.len() - 1,
                shapes.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidParameter("knot parameters must increase".into()));
        }
        for (t, phi) in &knots {
            let m = phi.min_factor();
            if !(m > 0.0) {
                return Err(Error::PositivityViolated { t: *t, min_factor: m });
            }
        }
        Ok(Self { knots, shapes })
    }

    /// Straight segment from `a` at `t = 0` to `b` at `t = 1`.
    pub fn linear(a: &BasicPotential, b: &BasicPotential) -> Result<Self> {
        Self::new(vec![(0.0, a.clone()), (1.0, b.clone())], vec![SegmentShape::Linear])
    }

    /// Segment from `a` to `b` bent by the detour `w`.
    pub fn quadratic(a: &BasicPotential, b: &BasicPotential, detour: &BasicPotential) -> Result<Self> {
        Self::new(vec![(0.0, a.clone()), (1.0, b.clone())], vec![SegmentShape::Quadratic(detour.clone())])
    }

    /// Straight segment from `a` to `b` traversed with cosine speed.
    pub fn cosine(a: &BasicPotential, b: &BasicPotential) -> Result<Self> {
        Self::new(vec![(0.0, a.clone()), (1.0, b.clone())], vec![SegmentShape::Cosine])
    }

    /// Piecewise-linear path through the given potentials at `t = 0, 1, 2, ...`.
    pub fn through(potentials: &[BasicPotential]) -> Result<Self> {
        let knots = potentials.iter().enumerate().map(|(i, p)| (i as f64, p.clone())).collect();
        Self::new(knots, vec![SegmentShape::Linear; potentials.len().saturating_sub(1)])
    }

    /// This path followed by its reverse, ending where it started.
    pub fn palindrome(&self) -> Result<Self> {
        let end = self.end_time();
        let mut knots = self.knots.clone();
        let mut shapes = self.shapes.clone();
        for i in (0..self.shapes.len()).rev() {
            let (t, phi) = &self.knots[i];
            knots.push((2.0 * end - t, phi.clone()));
            // Reversing a Quadratic segment keeps its detour term.
            shapes.push(self.shapes[i].clone());
        }
        Self::new(knots, shapes)
    }

    pub fn start_time(&self) -> f64 {
        self.knots[0].0
    }

    pub fn end_time(&self) -> f64 {
        self.knots[self.knots.len() - 1].0
    }

    pub fn start(&self) -> &BasicPotential {
        &self.knots[0].1
    }

    pub fn end(&self) -> &BasicPotential {
        &self.knots[self.knots.len() - 1].1
    }

    pub fn segments(&self) -> usize {
        self.shapes.len()
    }

    /// Parameter interval of segment `k`.
    pub fn segment_bounds(&self, k: usize) -> (f64, f64) {
        (self.knots[k].0, self.knots[k + 1].0)
    }

    fn locate(&self, t: f64) -> usize {
        let k = self.knots.partition_point(|(tk, _)| *tk <= t);
        k.saturating_sub(1).min(self.shapes.len() - 1)
    }

    /// `phi_t` and `d phi_t / dt` on segment `k`.
    pub fn evaluate_on(&self, k: usize, t: f64) -> (BasicPotential, BasicPotential) {
        let (t0, t1) = self.segment_bounds(k);
        let (a, b) = (&self.knots[k].1, &self.knots[k + 1].1);
        let dt = t1 - t0;
        let s = (t - t0) / dt;
        let diff = b.sub(a);
        match &self.shapes[k] {
            SegmentShape::Linear => (a.lerp(b, s), diff.scale(1.0 / dt)),
            SegmentShape::Quadratic(w) => {
                (a.lerp(b, s).add(&w.scale(s * (1.0 - s))), diff.add(&w.scale(1.0 - 2.0 * s)).scale(1.0 / dt))
            }
            SegmentShape::Cosine => {
                let c = std::f64::consts::PI;
                let sig = 0.5 * (1.0 - (c * s).cos());
                let dsig = 0.5 * c * (c * s).sin();
                (a.lerp(b, sig), diff.scale(dsig / dt))
            }
        }
    }

    /// `phi_t` and its `t`-derivative (right-continuous at interior knots).
    pub fn evaluate(&self, t: f64) -> (BasicPotential, BasicPotential) {
        self.evaluate_on(self.locate(t), t)
    }
}

//! D-homothetic deformations and their metric, volume, Ricci and diameter
//! consequences.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    d_eta, random_horizontal, random_tangent, ricci, sample_points, tangent_frame, transverse_ricci, ModelRef,
    SasakiModel, Vector,
};
use crate::models::DHomothetic;
use crate::numerics::{seeded_rng, sub_seed};
use crate::subriemannian::{estimate_diameter, DiameterEstimate, ShootingConfig};

#[derive(Clone, Debug, Serialize)]
pub struct DHomothetyParams {
    pub mu: f64,
    pub source: String,
}

impl DHomothetyParams {
    pub fn new(source: &dyn SasakiModel, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("deformation parameter must be positive, got {mu}")));
        }
        Ok(Self { mu, source: source.key() })
    }
}

/// The deformed model with `eta / mu`, `mu xi` and transverse metric `g^T / mu`.
pub fn apply(model: ModelRef, mu: f64) -> Result<ModelRef> {
    Ok(Arc::new(DHomothetic::new(model, mu)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct VolumeReport {
    pub mu: f64,
    /// Estimated `Vol(g_mu) / Vol(g)`.
    pub ratio: f64,
    /// `mu^{-(n+1)}`.
    pub expected: f64,
    pub residual: f64,
    /// Standard error of the Monte-Carlo mean.
    pub std_error: f64,
    /// Same ratio from Gram determinants of the two metrics.
    pub metric_ratio: f64,
    pub samples: usize,
}

pub const MIN_VOLUME_SAMPLES: usize = 10_000;

/// Value of `(d eta / 2)^n ^ eta` on a frame, up to the constant `n!`,
/// from the Pfaffian of the `d eta` block.
fn contact_volume(model: &dyn SasakiModel, x: &Vector, frame: &[Vector]) -> f64 {
    let k = frame.len();
    let hor = &frame[..k - 1];
    let m = hor.len();
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let v = 0.5 * d_eta(model, x, &hor[i], &hor[j]);
            a[(i, j)] = v;
            a[(j, i)] = -v;
        }
    }
    a.determinant().abs().sqrt() * model.eta(x, &frame[k - 1]).abs()
}

fn gram_volume(model: &dyn SasakiModel, x: &Vector, frame: &[Vector]) -> f64 {
    let k = frame.len();
    DMatrix::from_fn(k, k, |i, j| model.metric(x, &frame[i], &frame[j])).determinant().abs().sqrt()
}

/// Monte-Carlo estimate of the volume ratio of the deformed and source
/// contact volume forms, evaluated on a frame of the source metric.
pub fn volume_scaling_check(model: &ModelRef, mu: f64, mc_samples: usize, seed: u64) -> Result<VolumeReport> {
    if mc_samples < MIN_VOLUME_SAMPLES {
        return Err(Error::TooFewSamples { got: mc_samples, min: MIN_VOLUME_SAMPLES });
    }
    let deformed = apply(model.clone(), mu)?;
    let pts = sample_points(model.as_ref(), mc_samples, seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut metric_sum = 0.0;
    for x in &pts {
        let frame = tangent_frame(model.as_ref(), x)?;
        let r = contact_volume(deformed.as_ref(), x, &frame) / contact_volume(model.as_ref(), x, &frame);
        sum += r;
        sum_sq += r * r;
        metric_sum += gram_volume(deformed.as_ref(), x, &frame) / gram_volume(model.as_ref(), x, &frame);
    }
    let n = mc_samples as f64;
    let ratio = sum / n;
    let var = (sum_sq / n - ratio * ratio).max(0.0);
    let std_error = (var / n).sqrt();
    let expected = mu.powi(-(model.n() as i32 + 1));
    if std_error > 1e-2 * expected {
        return Err(Error::PreconditionFailed(format!(
            "volume estimate error bar {std_error:e} exceeds 1e-2 relative accuracy"
        )));
    }
    Ok(VolumeReport {
        mu,
        ratio,
        expected,
        residual: (ratio - expected).abs(),
        std_error,
        metric_ratio: metric_sum / n,
        samples: mc_samples,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RicciBoundReport {
    pub t: f64,
    pub mu: f64,
    /// Smallest sampled `Ric^T(X, X) - t (2n + 2) g^T(X, X)` on the source.
    pub precondition_slack: f64,
    /// Smallest sampled `Ric_mu(X, X) - 2n g_mu(X, X)` over `g_mu`-unit horizontal `X`.
    pub horizontal_slack: f64,
    /// Largest `|Ric_mu(X, xi_mu) - 2n g_mu(X, xi_mu)|` over random tangent `X`.
    pub reeb_residual: f64,
    /// `|Ric_mu(xi_mu, xi_mu) - 2n g_mu(xi_mu, xi_mu)|`, maximised over the sample.
    pub reeb_self_residual: f64,
    /// Largest `|Ric^T_mu(X, X) - Ric^T(X, X)|`.
    pub transverse_invariance: f64,
    pub passed: bool,
}

/// Deforms by `mu = 1/t` a source whose transverse Ricci curvature is at
/// least `t (2n + 2)` and checks `Ric_mu >= 2n g_mu`.
pub fn ricci_bound_check(model: &ModelRef, t: f64, samples: usize, seed: u64) -> Result<RicciBoundReport> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidParameter(format!("t must lie in (0, 1], got {t}")));
    }
    if samples == 0 {
        return Err(Error::EmptySample);
    }
    let n = model.n() as f64;
    let mu = 1.0 / t;
    let deformed = apply(model.clone(), mu)?;
    let pts = sample_points(model.as_ref(), samples, seed);
    let mut rng = seeded_rng(sub_seed(seed, 1));

    let mut precondition_slack = f64::INFINITY;
    for x in &pts {
        let h = random_horizontal(model.as_ref(), x, &mut rng);
        let s = transverse_ricci(model.as_ref(), x, &h, &h)? - t * (2.0 * n + 2.0) * model.metric(x, &h, &h);
        precondition_slack = precondition_slack.min(s);
    }
    if precondition_slack < -1e-9 {
        return Err(Error::PreconditionFailed(format!(
            "source transverse Ricci bound fails (slack {precondition_slack:e})"
        )));
    }

    let d = deformed.as_ref();
    let mut rep = RicciBoundReport {
        t,
        mu,
        precondition_slack,
        horizontal_slack: f64::INFINITY,
        reeb_residual: 0.0,
        reeb_self_residual: 0.0,
        transverse_invariance: 0.0,
        passed: false,
    };
    for x in &pts {
        let h = random_horizontal(d, x, &mut rng);
        rep.horizontal_slack = rep.horizontal_slack.min(ricci(d, x, &h, &h)? - 2.0 * n * d.metric(x, &h, &h));
        let xi = d.reeb(x);
        let v = random_tangent(d, x, &mut rng);
        rep.reeb_residual = rep.reeb_residual.max((ricci(d, x, &v, &xi)? - 2.0 * n * d.metric(x, &v, &xi)).abs());
        rep.reeb_self_residual =
            rep.reeb_self_residual.max((ricci(d, x, &xi, &xi)? - 2.0 * n * d.metric(x, &xi, &xi)).abs());
        let hb = random_horizontal(model.as_ref(), x, &mut rng);
        rep.transverse_invariance = rep
            .transverse_invariance
            .max((transverse_ricci(d, x, &hb, &hb)? - transverse_ricci(model.as_ref(), x, &hb, &hb)?).abs());
    }
    rep.passed = rep.horizontal_slack >= -1e-6
        && rep.reeb_residual < 1e-6
        && rep.reeb_self_residual < 1e-6
        && rep.transverse_invariance < 1e-6;
    Ok(rep)
}

/// Largest disagreement between deforming twice and deforming once by the
/// product, over all evaluators at sampled points.
pub fn composition_check(model: &ModelRef, mu1: f64, mu2: f64, samples: usize, seed: u64) -> Result<f64> {
    let twice = apply(apply(model.clone(), mu1)?, mu2)?;
    let once = apply(model.clone(), mu1 * mu2)?;
    let (a, b) = (twice.as_ref(), once.as_ref());
    let mut rng = seeded_rng(seed);
    let mut worst: f64 = 0.0;
    for x in sample_points(model.as_ref(), samples, sub_seed(seed, 2)) {
        let u = random_tangent(model.as_ref(), &x, &mut rng);
        let v = random_tangent(model.as_ref(), &x, &mut rng);
        let w = random_tangent(model.as_ref(), &x, &mut rng);
        worst = worst
            .max((a.metric(&x, &u, &v) - b.metric(&x, &u, &v)).abs())
            .max((a.reeb(&x) - b.reeb(&x)).norm())
            .max((a.eta_form(&x) - b.eta_form(&x)).norm())
            .max((a.phi(&x, &u) - b.phi(&x, &u)).norm())
            .max((a.flat(&x, &u) - b.flat(&x, &u)).norm())
            .max((a.christoffel(&x, &u, &v) - b.christoffel(&x, &u, &v)).norm())
            .max((a.curvature(&x, &u, &v, &w) - b.curvature(&x, &u, &v, &w)).norm());
        let m = x.len();
        let (mut ga, mut sa, mut gb, mut sb) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
        let ha = a.cometric_terms(x.as_slice(), u.as_slice(), &mut ga, &mut sa);
        let hb = b.cometric_terms(x.as_slice(), u.as_slice(), &mut gb, &mut sb);
        worst = worst.max((ha - hb).abs());
        for i in 0..m {
            worst = worst.max((ga[i] - gb[i]).abs()).max((sa[i] - sb[i]).abs());
        }
    }
    Ok(worst)
}

/// Riemannian diameter estimate of the deformation by `mu = 1/t`.
pub fn deformed_diameter(model: &ModelRef, t: f64, pairs: usize, cfg: &ShootingConfig) -> Result<DiameterEstimate> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidParameter(format!("t must lie in (0, 1], got {t}")));
    }
    let deformed = apply(model.clone(), 1.0 / t)?;
    estimate_diameter(deformed.as_ref(), pairs, cfg)
}

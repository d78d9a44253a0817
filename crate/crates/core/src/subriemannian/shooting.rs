//! Two-point shooting for Carnot-Caratheodory (and Riemannian) distances.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{check_on_manifold, horizontal_frame, tangent_frame, SasakiModel, Vector, MAX_AMBIENT};
use crate::numerics::{seeded_rng, sphere_directions, sub_seed, symmetric_grid};

use super::flow::{advance, integrate_path, rk4_step, velocity_raw, CotangentState, GeodesicKind, GeodesicPath};

/// Parameters of the shooting search.
#[derive(Clone, Debug, Serialize)]
pub struct ShootingConfig {
    pub kind: GeodesicKind,
    /// Initial directions in the first round; 0 picks a default by dimension.
    pub direction_samples: usize,
    /// Values of `alpha0` in `[-alpha0_range, alpha0_range]` in the first round.
    pub alpha0_samples: usize,
    pub alpha0_range: f64,
    /// Longest geodesic parameter explored.
    pub t_max: f64,
    /// Step of the coarse scan and of the first refinement phase.
    pub coarse_step: f64,
    /// Integration step of the final refinement phase.
    pub step: f64,
    /// Ambient distance to the target counted as a hit.
    pub hit_tol: f64,
    /// Levenberg-Marquardt iterations per candidate and phase.
    pub refine_iterations: usize,
    /// Most candidates refined per round.
    pub candidates: usize,
    /// Coarse local minima farther than this from the target are ignored.
    pub accept_radius: f64,
    /// Search rounds, each with a finer coarse grid; the search stops once
    /// the best length changes by less than `plateau_tol` between rounds.
    pub max_rounds: usize,
    pub plateau_tol: f64,
    pub seed: u64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            kind: GeodesicKind::SubRiemannian,
            direction_samples: 0,
            alpha0_samples: 17,
            alpha0_range: 4.0,
            t_max: 4.0,
            coarse_step: 1e-2,
            step: 1e-3,
            hit_tol: 1e-3,
            refine_iterations: 40,
            candidates: 24,
            accept_radius: 0.5,
            max_rounds: 3,
            plateau_tol: 1e-6,
            seed: 7,
        }
    }
}

impl ShootingConfig {
    pub fn riemannian() -> Self {
        Self { kind: GeodesicKind::Riemannian, alpha0_samples: 1, ..Self::default() }
    }

    fn directions_for(&self, dim: usize) -> usize {
        if self.direction_samples > 0 {
            return self.direction_samples;
        }
        match dim {
            0..=2 => 32,
            3 => 64,
            4 => 96,
            _ => 160,
        }
    }
}

/// Outcome of a distance search between two points.
#[derive(Clone, Debug, Serialize)]
pub struct DistanceResult {
    /// Length of the best connecting geodesic found: an upper bound on the distance.
    pub distance: f64,
    pub best_init: CotangentState,
    /// Ambient distance from the geodesic endpoint to the target.
    pub miss: f64,
    /// Change of the best length over the last search round.
    pub plateau_change: f64,
    /// The search plateaued, which is the working criterion for minimality.
    pub minimizing: bool,
    /// The optimum sits at the edge of the explored `alpha0` range.
    pub alpha0_on_boundary: bool,
    pub rounds: usize,
    pub refined_candidates: usize,
}

#[derive(Clone, Debug)]
struct Candidate {
    dir: DVector<f64>,
    alpha0: f64,
    t: f64,
    dist: f64,
}

#[derive(Clone, Debug)]
struct Hit {
    dir: DVector<f64>,
    alpha0: f64,
    t: f64,
    miss: f64,
}

struct Shooter<'a> {
    model: &'a dyn SasakiModel,
    cfg: &'a ShootingConfig,
    p: Vector,
    q: Vector,
    frame: Vec<Vector>,
}

impl<'a> Shooter<'a> {
    fn dim(&self) -> usize {
        self.frame.len()
    }

    fn initial_covector(&self, dir: &DVector<f64>, alpha0: f64) -> Vector {
        let mut v = Vector::zeros(self.p.len());
        for (c, e) in dir.iter().zip(&self.frame) {
            v += e * *c;
        }
        let mut cov = self.model.flat(&self.p, &v);
        if self.cfg.kind == GeodesicKind::SubRiemannian {
            cov += self.model.eta_form(&self.p) * alpha0;
        }
        cov
    }

    /// Endpoint and velocity after parameter time `t`.
    fn shoot(&self, dir: &DVector<f64>, alpha0: f64, t: f64, step: f64) -> (Vector, Vector) {
        let mut x = self.p.clone();
        let mut p = self.initial_covector(dir, alpha0);
        self.model.normalize_state(x.as_mut_slice(), p.as_mut_slice());
        let steps = ((t / step).ceil() as usize).max(8);
        advance(self.model, self.cfg.kind, x.as_mut_slice(), p.as_mut_slice(), t / steps as f64, steps);
        let mut v = Vector::zeros(x.len());
        velocity_raw(self.model, self.cfg.kind, x.as_slice(), p.as_slice(), v.as_mut_slice());
        (x, v)
    }

    /// Local minima of the distance to the target along one coarse trajectory.
    fn scan(&self, dir: &DVector<f64>, alpha0: f64) -> Vec<Candidate> {
        let m = self.p.len();
        let mut x = [0.0; MAX_AMBIENT];
        let mut p = [0.0; MAX_AMBIENT];
        x[..m].copy_from_slice(self.p.as_slice());
        p[..m].copy_from_slice(self.initial_covector(dir, alpha0).as_slice());
        self.model.normalize_state(&mut x[..m], &mut p[..m]);
        let h = self.cfg.coarse_step;
        let steps = (self.cfg.t_max / h).ceil() as usize;
        let dist = |x: &[f64]| x.iter().zip(self.q.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let mut out = Vec::new();
        let (mut d_prev2, mut d_prev) = (f64::INFINITY, dist(&x[..m]));
        for i in 1..=steps {
            rk4_step(self.model, self.cfg.kind, &mut x[..m], &mut p[..m], h);
            let d = dist(&x[..m]);
            if i >= 2 && d_prev < d_prev2 && d_prev <= d && d_prev < self.cfg.accept_radius {
                out.push(Candidate { dir: dir.clone(), alpha0, t: (i - 1) as f64 * h, dist: d_prev });
            }
            d_prev2 = d_prev;
            d_prev = d;
        }
        out
    }

    fn tangent_basis(dir: &DVector<f64>) -> Vec<DVector<f64>> {
        let d = dir.len();
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(d - 1);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| dir[a].abs().partial_cmp(&dir[b].abs()).unwrap_or(std::cmp::Ordering::Equal));
        for k in order {
            if basis.len() == d - 1 {
                break;
            }
            let mut v = DVector::from_fn(d, |i, _| if i == k { 1.0 } else { 0.0 });
            v -= dir * dir.dot(&v);
            for b in &basis {
                v -= b * b.dot(&v);
            }
            let l = v.norm();
            if l > 1e-6 {
                basis.push(v / l);
            }
        }
        basis
    }

    /// Levenberg-Marquardt on (direction, alpha0, time) at a fixed step.
    fn refine_phase(&self, start: &Hit, step: f64, target: f64) -> Hit {
        let sr = self.cfg.kind == GeodesicKind::SubRiemannian;
        let mut cur = start.clone();
        let (end, _) = self.shoot(&cur.dir, cur.alpha0, cur.t, step);
        let mut r = end - &self.q;
        let mut lambda = 1e-3;
        let eps = 1e-7;
        for _ in 0..self.cfg.refine_iterations {
            if r.norm() < target {
                break;
            }
            let basis = Self::tangent_basis(&cur.dir);
            let cols = basis.len() + usize::from(sr) + 1;
            let mut jac = DMatrix::zeros(r.len(), cols);
            for (c, b) in basis.iter().enumerate() {
                let d = (&cur.dir + b * eps).normalize();
                let (e, _) = self.shoot(&d, cur.alpha0, cur.t, step);
                jac.set_column(c, &((e - &self.q - &r) / eps));
            }
            if sr {
                let (e, _) = self.shoot(&cur.dir, cur.alpha0 + eps, cur.t, step);
                jac.set_column(basis.len(), &((e - &self.q - &r) / eps));
            }
            let (_, vel) = self.shoot(&cur.dir, cur.alpha0, cur.t, step);
            jac.set_column(cols - 1, &vel);
            let jtj = jac.transpose() * &jac;
            let jtr = jac.transpose() * &r;
            let mut improved = false;
            while lambda < 1e10 {
                let mut a = jtj.clone();
                for i in 0..cols {
                    a[(i, i)] += lambda * jtj[(i, i)].max(1e-9);
                }
                let Some(delta) = a.lu().solve(&(-&jtr)) else {
                    lambda *= 10.0;
                    continue;
                };
                let mut dir = cur.dir.clone();
                for (b, c) in basis.iter().zip(delta.iter()) {
                    dir += b * *c;
                }
                let dir = dir.normalize();
                let alpha0 = if sr { cur.alpha0 + delta[basis.len()] } else { cur.alpha0 };
                let t = (cur.t + delta[cols - 1]).max(0.5 * cur.t);
                let (e, _) = self.shoot(&dir, alpha0, t, step);
                let r_new = e - &self.q;
                if r_new.norm() < r.norm() {
                    cur = Hit { dir, alpha0, t, miss: 0.0 };
                    r = r_new;
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = true;
                    break;
                }
                lambda *= 4.0;
            }
            if !improved {
                break;
            }
        }
        cur.miss = r.norm();
        cur
    }

    fn refine(&self, c: &Candidate) -> Hit {
        let start = Hit { dir: c.dir.clone(), alpha0: c.alpha0, t: c.t, miss: c.dist };
        let coarse = self.refine_phase(&start, self.cfg.coarse_step, 1e-9);
        self.refine_phase(&coarse, self.cfg.step, 1e-11)
    }

    fn round(&self, round: usize, best: Option<&Hit>) -> (Vec<Hit>, usize) {
        let scale = round + 1;
        let ndir = self.cfg.directions_for(self.dim()) * scale;
        let dirs = sphere_directions(self.dim(), ndir, sub_seed(self.cfg.seed, round as u64));
        let alphas = match self.cfg.kind {
            GeodesicKind::SubRiemannian => {
                let base = self.cfg.alpha0_samples.max(1);
                symmetric_grid(self.cfg.alpha0_range, (base - 1) * scale + 1)
            }
            GeodesicKind::Riemannian => vec![0.0],
        };
        let grid: Vec<(usize, usize)> = (0..dirs.len()).flat_map(|i| (0..alphas.len()).map(move |j| (i, j))).collect();
        let mut cands: Vec<Candidate> = grid
            .par_iter()
            .map(|&(i, j)| self.scan(&dirs[i], alphas[j]))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect();
        cands.sort_by(|a, b| {
            a.t.partial_cmp(&b.t)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.dist.partial_cmp(&b.dist).unwrap_or(std::cmp::Ordering::Equal))
        });
        let mut hits = Vec::new();
        let mut best_t = best.map_or(f64::INFINITY, |h| h.t);
        let mut refined = 0;
        for c in &cands {
            if refined >= self.cfg.candidates {
                break;
            }
            // A geodesic of unit speed cannot close a gap of `dist` in less
            // time than `dist`, so later candidates cannot beat the best.
            if c.t - 2.0 * c.dist > best_t + 1e-3 {
                break;
            }
            refined += 1;
            let hit = self.refine(c);
            if hit.miss < self.cfg.hit_tol && hit.t > 0.0 {
                best_t = best_t.min(hit.t);
                hits.push(hit);
            }
        }
        (hits, refined)
    }
}

fn pick_best(hits: &[Hit]) -> Option<&Hit> {
    let t_min = hits.iter().map(|h| h.t).fold(f64::INFINITY, f64::min);
    hits.iter().filter(|h| h.t < t_min + 1e-6).min_by(|a, b| {
        a.alpha0.abs().partial_cmp(&b.alpha0.abs()).unwrap_or(std::cmp::Ordering::Equal).then_with(|| {
            a.dir
                .iter()
                .zip(b.dir.iter())
                .map(|(x, y)| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    })
}

/// Length of the best normal geodesic found from `p` to within `hit_tol`
/// of `q`. Deterministic for a given configuration.
pub fn cc_distance(model: &dyn SasakiModel, p: &Vector, q: &Vector, cfg: &ShootingConfig) -> Result<DistanceResult> {
    check_on_manifold(model, p)?;
    check_on_manifold(model, q)?;
    if (p - q).norm() < cfg.hit_tol {
        let best_init = CotangentState::new(model, p.clone(), Vector::zeros(p.len()))?;
        return Ok(DistanceResult {
            distance: 0.0,
            best_init,
            miss: (p - q).norm(),
            plateau_change: 0.0,
            minimizing: true,
            alpha0_on_boundary: false,
            rounds: 0,
            refined_candidates: 0,
        });
    }
    let frame = match cfg.kind {
        GeodesicKind::SubRiemannian => horizontal_frame(model, p)?,
        GeodesicKind::Riemannian => tangent_frame(model, p)?,
    };
    let shooter = Shooter { model, cfg, p: p.clone(), q: q.clone(), frame };
    let mut all_hits: Vec<Hit> = Vec::new();
    let mut prev_best: Option<f64> = None;
    let mut change = f64::INFINITY;
    let mut refined_total = 0;
    let mut rounds = 0;
    for round in 0..cfg.max_rounds.max(1) {
        rounds = round + 1;
        let current = pick_best(&all_hits).cloned();
        let (hits, refined) = shooter.round(round, current.as_ref());
        refined_total += refined;
        all_hits.extend(hits);
        let best = pick_best(&all_hits).map(|h| h.t);
        if let (Some(a), Some(b)) = (prev_best, best) {
            change = (a - b).abs();
            if change < cfg.plateau_tol {
                break;
            }
        }
        prev_best = best;
    }
    let best = pick_best(&all_hits).cloned().ok_or_else(|| {
        Error::BudgetExhausted(format!("no geodesic reached the target within t_max = {}", cfg.t_max))
    })?;
    let covector = shooter.initial_covector(&best.dir, best.alpha0);
    let best_init = CotangentState::new(model, p.clone(), covector)?;
    let spacing = if cfg.alpha0_samples > 1 { 2.0 * cfg.alpha0_range / (cfg.alpha0_samples - 1) as f64 } else { 0.0 };
    let alpha0_on_boundary =
        cfg.kind == GeodesicKind::SubRiemannian && best.alpha0.abs() > cfg.alpha0_range - 0.5 * spacing;
    Ok(DistanceResult {
        distance: best.t,
        best_init,
        miss: best.miss,
        plateau_change: change,
        minimizing: change < cfg.plateau_tol,
        alpha0_on_boundary,
        rounds,
        refined_candidates: refined_total,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PairResult {
    pub p: Vector,
    pub q: Vector,
    /// `None` when the search budget was exhausted for this pair.
    pub distance: Option<f64>,
    pub minimizing: bool,
    pub alpha0: Option<f64>,
    pub alpha0_on_boundary: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiameterEstimate {
    pub estimate: f64,
    pub worst_pair: Option<(Vector, Vector)>,
    /// Some pair exhausted its budget and was left out of the maximum.
    pub partial: bool,
    pub all_minimizing: bool,
    pub pairs: Vec<PairResult>,
}

/// Maximum of the shooting distance over the given pairs.
pub fn estimate_diameter_pairs(
    model: &dyn SasakiModel,
    pairs: &[(Vector, Vector)],
    cfg: &ShootingConfig,
) -> Result<DiameterEstimate> {
    if pairs.is_empty() {
        return Err(Error::EmptySample);
    }
    let results: Vec<Result<PairResult>> = pairs
        .par_iter()
        .map(|(p, q)| match cc_distance(model, p, q, cfg) {
            Ok(r) => Ok(PairResult {
                p: p.clone(),
                q: q.clone(),
                distance: Some(r.distance),
                minimizing: r.minimizing,
                alpha0: Some(r.best_init.alpha0),
                alpha0_on_boundary: r.alpha0_on_boundary,
            }),
            Err(Error::BudgetExhausted(_)) => Ok(PairResult {
                p: p.clone(),
                q: q.clone(),
                distance: None,
                minimizing: false,
                alpha0: None,
                alpha0_on_boundary: false,
            }),
            Err(e) => Err(e),
        })
        .collect();
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut estimate = 0.0;
    let mut worst_pair = None;
    for r in &results {
        if let Some(d) = r.distance {
            if d > estimate || worst_pair.is_none() {
                estimate = d;
                worst_pair = Some((r.p.clone(), r.q.clone()));
            }
        }
    }
    Ok(DiameterEstimate {
        estimate,
        worst_pair,
        partial: results.iter().any(|r| r.distance.is_none()),
        all_minimizing: results.iter().all(|r| r.minimizing),
        pairs: results,
    })
}

/// Diameter estimate over `pair_samples` seeded random pairs.
pub fn estimate_diameter(
    model: &dyn SasakiModel,
    pair_samples: usize,
    cfg: &ShootingConfig,
) -> Result<DiameterEstimate> {
    if pair_samples < 2 {
        return Err(Error::TooFewSamples { got: pair_samples, min: 2 });
    }
    let mut rng = seeded_rng(sub_seed(cfg.seed, 0xD1A));
    let pairs: Vec<(Vector, Vector)> =
        (0..pair_samples).map(|_| (model.sample_point(&mut rng), model.sample_point(&mut rng))).collect();
    estimate_diameter_pairs(model, &pairs, cfg)
}

/// Samples the geodesic found by a distance search at roughly `cfg.step`.
pub fn connecting_geodesic(
    model: &dyn SasakiModel,
    result: &DistanceResult,
    cfg: &ShootingConfig,
) -> Result<GeodesicPath> {
    if !(result.distance > 0.0) {
        return Err(Error::InvalidParameter("the two points coincide".into()));
    }
    let steps = ((result.distance / cfg.step).ceil() as usize).max(64);
    integrate_path(model, cfg.kind, &result.best_init, result.distance, steps)
}

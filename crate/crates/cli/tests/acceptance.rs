//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed; the
//! process fails if any criterion fails.

use std::f64::consts::{PI, SQRT_2};
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;

use sasaki_core::dhomothety::{deformed_diameter, ricci_bound_check, volume_scaling_check};
use sasaki_core::functionals::{Functionals, PotentialPath};
use sasaki_core::geometry::{
    random_horizontal, sample_points, transverse_curvature, transverse_ricci_range, verify_structure,
};
use sasaki_core::models::{make_heisenberg, make_round_sphere, model_from_key};
use sasaki_core::numerics::{seeded_rng, sub_seed};
use sasaki_core::subriemannian::{
    cc_distance, connecting_geodesic, convergence_order, integrate_geodesic, CotangentState, ShootingConfig,
};
use sasaki_core::variations::{
    check_variation_identities, complementary_frame, myers_certificate, phi_velocity, reeb_correction_field,
    second_variation, sine_curvature_integral, sine_field, transport_frame,
};
use sasaki_core::{ModelRef, Vector};

type Outcome = Result<String, String>;

fn models() -> Vec<(&'static str, ModelRef)> {
    vec![
        ("s3", make_round_sphere(1).unwrap()),
        ("s5", make_round_sphere(2).unwrap()),
        ("heisenberg", make_heisenberg()),
    ]
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn structure_identities() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (key, m) in models() {
        let pts = sample_points(m.as_ref(), 1000, 1);
        let rep = verify_structure(m.as_ref(), &pts, 1e-6, 2).map_err(|e| e.to_string())?;
        let worst = rep.residuals.values().cloned().fold(0.0, f64::max);
        let closed = rep.max_closed_form();
        ok &= rep.passed && worst < 1e-6 && closed < 1e-9;
        notes.push(format!("{key} max {worst:.1e} closed-form {closed:.1e}"));
    }
    ensure(ok, notes.join("; "))
}

fn curvature_relation() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for key in ["s3", "s5", "s7", "heisenberg", "s3-dhom:2", "s5-dhom:0.5"] {
        let m = model_from_key(key).unwrap();
        let m = m.as_ref();
        let pts = sample_points(m, 200, 3);
        let mut rng = seeded_rng(4);
        let mut worst: f64 = 0.0;
        for x in &pts {
            let u = random_horizontal(m, x, &mut rng);
            let w = random_horizontal(m, x, &mut rng);
            let c = transverse_curvature(m, x, &u, &w, &w, &u).map_err(|e| e.to_string())?;
            worst = worst.max(c.residuals["transverse_ricci_trace_vs_formula"]);
        }
        ok &= worst < 1e-6;
        notes.push(format!("{key} {worst:.1e}"));
    }
    for (key, expected) in [("s3", 4.0), ("s5", 6.0)] {
        let m = model_from_key(key).unwrap();
        let pts = sample_points(m.as_ref(), 200, 5);
        let (lo, hi) = transverse_ricci_range(m.as_ref(), &pts, 6).map_err(|e| e.to_string())?;
        ok &= (lo - expected).abs() < 1e-6 && (hi - expected).abs() < 1e-6;
        notes.push(format!("{key} ratio [{lo:.9}, {hi:.9}]"));
    }
    ensure(ok, notes.join("; "))
}

fn geodesic_flow() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (key, m) in models() {
        let m = m.as_ref();
        let mut rng = seeded_rng(8);
        let x = m.sample_point(&mut rng);
        let h = random_horizontal(m, &x, &mut rng);
        let e = &h / m.metric(&x, &h, &h).sqrt();
        let init = CotangentState::from_horizontal(m, x, &e, 1.0).map_err(|e| e.to_string())?;
        let t_end = 2.0 * PI;
        let path = integrate_geodesic(m, &init, t_end, (t_end / 1e-3).ceil() as usize).map_err(|e| e.to_string())?;
        let d = &path.diagnostics;
        let drift = d.h_drift.max(d.alpha0_drift).max(d.speed_variation).max(d.horizontality);
        let conv = convergence_order(m, &init, t_end, 315).map_err(|e| e.to_string())?;
        ok &= drift < 1e-8 && d.geodesic_equation_residual < 1e-6 && conv.order >= 3.5;
        notes.push(format!("{key} drift {drift:.1e} eq {:.1e} order {:.2}", d.geodesic_equation_residual, conv.order));
    }
    ensure(ok, notes.join("; "))
}

fn cli(args: &[&str]) -> Result<(i32, Value), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_sasaki")).args(args).output().map_err(|e| e.to_string())?;
    let report = serde_json::from_slice(&out.stdout)
        .map_err(|e| format!("{args:?}: {e}: {}", String::from_utf8_lossy(&out.stderr)))?;
    Ok((out.status.code().unwrap_or(-1), report))
}

fn diameter_bound() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (key, bound) in [("s3", PI), ("s5", PI * SQRT_2)] {
        let (code, r) = cli(&["diameter", "--model", key, "--pairs", "50", "--seed", "7"])?;
        let r = &r["result"];
        let est = r["estimate"].as_f64().ok_or("missing estimate")?;
        let reported = r["bound"].as_f64().ok_or("missing bound")?;
        ok &= code == 0 && est <= bound * (1.0 + 1e-2) && (reported - bound).abs() < 1e-6;
        notes.push(format!("{key} estimate {est:.4} <= {bound:.4} (reported bound {reported:.6}, exit {code})"));
    }
    ensure(ok, notes.join("; "))
}

fn heisenberg_control() -> Outcome {
    let m = make_heisenberg();
    let p = Vector::from_vec(vec![0.0, 0.0, 0.0]);
    let q = Vector::from_vec(vec![1.0, 0.0, 0.0]);
    let r = cc_distance(m.as_ref(), &p, &q, &ShootingConfig::default()).map_err(|e| e.to_string())?;
    ensure((r.distance - 1.0).abs() < 1e-3, format!("distance {:.6}", r.distance))
}

fn minimizing_geodesics(
    key: &str,
    count: usize,
    seed: u64,
) -> Result<Vec<(ModelRef, sasaki_core::subriemannian::GeodesicPath)>, String> {
    let m = model_from_key(key).unwrap();
    // Heisenberg samples fill a cube of side 4, farther apart than the default horizon.
    let t_max = if key == "heisenberg" { 12.0 } else { 4.0 };
    let cfg = ShootingConfig { seed, t_max, ..ShootingConfig::default() };
    let mut out = Vec::new();
    for j in 0..count {
        let pts = sample_points(m.as_ref(), 2, sub_seed(seed, j as u64));
        let r = cc_distance(m.as_ref(), &pts[0], &pts[1], &cfg).map_err(|e| e.to_string())?;
        if r.minimizing {
            out.push((m.clone(), connecting_geodesic(m.as_ref(), &r, &cfg).map_err(|e| e.to_string())?));
        }
    }
    Ok(out)
}

fn myers_integral() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (key, tau) in [("s3", 4.0), ("s5", 6.0)] {
        let paths = minimizing_geodesics(key, 5, 21)?;
        let mut worst = f64::INFINITY;
        for (m, path) in &paths {
            let cert = myers_certificate(m.as_ref(), path, tau, true).map_err(|e| e.to_string())?;
            worst = worst.min(cert.lhs_integral);
        }
        ok &= !paths.is_empty() && worst >= -1e-5;
        notes.push(format!("{key} {} minimizers, smallest integral {worst:.3e}", paths.len()));
    }
    ensure(ok, notes.join("; "))
}

fn variation_identities() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (key, m) in models() {
        let m = m.as_ref();
        let (mut identity, mut admissibility): (f64, f64) = (0.0, 0.0);
        for i in 0..10u64 {
            let mut rng = seeded_rng(sub_seed(31, i));
            let x = m.sample_point(&mut rng);
            let h = random_horizontal(m, &x, &mut rng);
            let e = &h / m.metric(&x, &h, &h).sqrt();
            let a0 = -1.0 + 0.2 * i as f64;
            let init = CotangentState::from_horizontal(m, x.clone(), &e, a0).map_err(|e| e.to_string())?;
            let path = integrate_geodesic(m, &init, 2.0, 2000).map_err(|e| e.to_string())?;
            let start = complementary_frame(m, &x, &path.samples[0].velocity).map_err(|e| e.to_string())?;
            let frame = transport_frame(m, &path, &start).map_err(|e| e.to_string())?;
            let rep = check_variation_identities(m, &path, &frame).map_err(|e| e.to_string())?;
            identity = identity.max(rep.max_identity_residual());
            admissibility = admissibility.max(rep.sine_admissibility).max(rep.reeb_admissibility);
        }
        let mut smallest = f64::INFINITY;
        let mut sum_gap: f64 = 0.0;
        let minimizers = minimizing_geodesics(key, 2, 41)?;
        for (_, path) in &minimizers {
            let start =
                complementary_frame(m, &path.samples[0].point, &path.samples[0].velocity).map_err(|e| e.to_string())?;
            let frame = transport_frame(m, path, &start).map_err(|e| e.to_string())?;
            let mut values = Vec::new();
            let mut curvature = 0.0;
            for f in &frame.fields {
                values.push(
                    second_variation(m, path, &sine_field(m, path, f).map_err(|e| e.to_string())?)
                        .map_err(|e| e.to_string())?,
                );
                curvature += sine_curvature_integral(m, path, f);
            }
            values.push(
                second_variation(m, path, &reeb_correction_field(m, path).map_err(|e| e.to_string())?)
                    .map_err(|e| e.to_string())?,
            );
            curvature += sine_curvature_integral(m, path, &phi_velocity(m, path));
            smallest = values.iter().cloned().fold(smallest, f64::min);
            sum_gap = sum_gap.max((values.iter().sum::<f64>() - curvature).abs());
        }
        ok &= identity < 1e-5 && admissibility < 1e-6 && !minimizers.is_empty() && smallest >= -1e-5 && sum_gap < 1e-4;
        notes.push(format!("{key} identities {identity:.1e} admissibility {admissibility:.1e} min E'' {smallest:.3e}"));
    }
    ensure(ok, notes.join("; "))
}

fn dhomothety() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (key, m) in models() {
        for mu in [0.5, 2.0] {
            let v = volume_scaling_check(&m, mu, 20_000, 51).map_err(|e| e.to_string())?;
            ok &= v.residual < 1e-2;
            notes.push(format!("{key} mu {mu} volume {:.4}/{:.4}", v.ratio, v.expected));
        }
    }
    for (key, m) in models().into_iter().take(2) {
        let rep = ricci_bound_check(&m, 0.5, 100, 52).map_err(|e| e.to_string())?;
        ok &= rep.passed && rep.horizontal_slack >= -1e-6;
        notes.push(format!("{key} Ric slack {:.1e}", rep.horizontal_slack));
    }
    let s3 = make_round_sphere(1).unwrap();
    let cfg = ShootingConfig { seed: 53, ..ShootingConfig::riemannian() };
    let est = deformed_diameter(&s3, 0.5, 10, &cfg).map_err(|e| e.to_string())?;
    ok &= est.estimate <= PI + 2e-2;
    notes.push(format!("deformed s3 diameter {:.4}", est.estimate));
    ensure(ok, notes.join("; "))
}

fn functionals() -> Outcome {
    let round = make_round_sphere(1).unwrap();
    let f = Functionals::for_model(round.as_ref()).map_err(|e| e.to_string())?;
    let q = &f.quotient;
    let zero = q.zero();
    let mut rng = seeded_rng(61);
    let mut potentials: Vec<_> = (0..100).map(|_| q.random_potential(&mut rng, 3, 0.05, 0.3)).collect();

    let mut path_independence: f64 = 0.0;
    for pair in potentials.chunks(2).take(3) {
        let rep = f.report(&pair[0], &pair[1]).map_err(|e| e.to_string())?;
        path_independence = path_independence.max(rep.path_independence_residual);
    }

    let mut slack = f64::INFINITY;
    for phi in &potentials {
        let i = f.functional_i(&zero, phi).map_err(|e| e.to_string())?;
        let path = PotentialPath::linear(&zero, phi).map_err(|e| e.to_string())?;
        let j = f.functional_j(&zero, phi, &path).map_err(|e| e.to_string())?.path;
        let ij = 2.0 * (i - j);
        slack = slack.min(i).min(ij - i).min(i - ij);
    }

    let m = |a, b| -> Result<f64, String> {
        f.functional_m(&PotentialPath::linear(a, b).map_err(|e| e.to_string())?).map_err(|e| e.to_string())
    };
    let (a, b) = (potentials.pop().unwrap(), potentials.pop().unwrap());
    let cocycle = (m(&zero, &a)? + m(&a, &b)? + m(&b, &zero)?).abs();

    let harmonic = q.harmonic(2, 1, 0.02).map_err(|e| e.to_string())?;
    let detour = q.harmonic(3, -2, 0.01).map_err(|e| e.to_string())?;
    let mut ij_residual: f64 = 0.0;
    for path in [
        PotentialPath::linear(&zero, &harmonic).map_err(|e| e.to_string())?,
        PotentialPath::quadratic(&zero, &a, &detour).map_err(|e| e.to_string())?,
    ] {
        let rep = f.ij_derivative_check(&path, 17).map_err(|e| e.to_string())?;
        ij_residual = ij_residual.max(rep.max_residual);
    }
    let dm0 = potentials
        .iter()
        .take(5)
        .map(|psi| f.m_derivative_at_reference(psi).map(f64::abs))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?
        .into_iter()
        .fold(0.0, f64::max);

    ensure(
        path_independence < 1e-6 && slack >= -1e-7 && cocycle < 1e-5 && ij_residual < 1e-4 && dm0 < 1e-4,
        format!(
            "path independence {path_independence:.1e}, chain slack {slack:.1e}, cocycle {cocycle:.1e}, \
             I-J derivative {ij_residual:.1e}, dM(0) {dm0:.1e}, trace factor {}",
            f.trace_factor
        ),
    )
}

fn determinism() -> Outcome {
    let runs: &[&[&str]] = &[
        &["check-identities", "--model", "s5", "--points", "200", "--seed", "3"],
        &["cc-distance", "--model", "s3", "--from", "1,0,0,0", "--to", "0,0.6,0.8,0", "--seed", "3"],
        &["diameter", "--model", "s3", "--pairs", "4", "--seed", "3"],
        &["functionals", "--harmonic", "3,1", "--amplitude", "0.03", "--seed", "3"],
    ];
    let strip = |mut v: Value| {
        v.as_object_mut().map(|o| o.remove("timestamp"));
        v
    };
    let mut notes = Vec::new();
    let mut ok = true;
    for args in runs {
        let (c1, a) = cli(args)?;
        let (c2, b) = cli(args)?;
        let same = c1 == c2 && strip(a) == strip(b);
        ok &= same;
        notes.push(format!("{} {}", args[0], if same { "identical" } else { "differs" }));
    }
    ensure(ok, notes.join("; "))
}

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "structure identities", budget: Duration::from_secs(10), run: structure_identities },
        Criterion {
            id: 2,
            name: "transverse Ricci relation",
            budget: Duration::from_secs(30),
            run: curvature_relation,
        },
        Criterion { id: 3, name: "geodesic flow invariants", budget: Duration::from_secs(60), run: geodesic_flow },
        Criterion { id: 4, name: "diameter bound", budget: Duration::from_secs(600), run: diameter_bound },
        Criterion { id: 5, name: "Heisenberg distance", budget: Duration::from_secs(60), run: heisenberg_control },
        Criterion { id: 6, name: "Myers integral", budget: Duration::from_secs(120), run: myers_integral },
        Criterion { id: 7, name: "variation identities", budget: Duration::from_secs(120), run: variation_identities },
        Criterion { id: 8, name: "D-homothetic deformation", budget: Duration::from_secs(180), run: dhomothety },
        Criterion { id: 9, name: "energy functionals", budget: Duration::from_secs(300), run: functionals },
        Criterion { id: 10, name: "CLI determinism", budget: Duration::from_secs(120), run: determinism },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (label, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        if outcome.is_err() {
            failed += 1;
        }
        let timing = if elapsed <= c.budget { "" } else { " (over runtime budget)" };
        println!(
            "criterion {:>2} {label} {}: {detail} [{:.1}s of {}s{timing}]",
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

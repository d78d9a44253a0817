use std::sync::Arc;

use approx::assert_abs_diff_eq;
use sasaki_core::geometry::{
    curvature_from_connection, d_eta, horizontal_frame, random_horizontal, random_tangent, ricci, riemann,
    sample_points, transverse_curvature, transverse_ricci, verify_structure, Vector,
};
use sasaki_core::models::{make_heisenberg, make_round_sphere, model_from_key, DHomothetic, Heisenberg};
use sasaki_core::numerics::seeded_rng;
use sasaki_core::{Error, SasakiModel};

fn all_models() -> Vec<sasaki_core::ModelRef> {
    ["s3", "s5", "s7", "heisenberg", "s3-dhom:2", "s5-dhom:0.5", "heisenberg-dhom:3"]
        .iter()
        .map(|k| model_from_key(k).unwrap())
        .collect()
}

#[test]
fn every_model_passes_the_structure_identities() {
    for m in all_models() {
        let pts = sample_points(m.as_ref(), 100, 1);
        let rep = verify_structure(m.as_ref(), &pts, 1e-8, 2).unwrap();
        assert!(rep.passed, "{}: {:?}", m.key(), rep.residuals);
        assert!(rep.max_closed_form() < 1e-9, "{}: {:?}", m.key(), rep.residuals);
    }
}

#[test]
fn sphere_constructor_rejects_out_of_range_index() {
    assert!(matches!(make_round_sphere(0), Err(Error::InvalidParameter(_))));
    assert!(matches!(make_round_sphere(4), Err(Error::InvalidParameter(_))));
    assert!(model_from_key("s9").is_err());
    assert!(model_from_key("s3-dhom:-1").is_err());
    assert!(model_from_key("s3-dhom:abc").is_err());
}

#[test]
fn eta_of_reeb_at_base_point_of_s3() {
    let m = make_round_sphere(1).unwrap();
    let x = Vector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
    assert_abs_diff_eq!(m.eta(&x, &m.reeb(&x)), 1.0, epsilon = 1e-15);
}

#[test]
fn phi_kills_reeb_field() {
    for m in all_models() {
        for x in sample_points(m.as_ref(), 5, 3) {
            let v = m.phi(&x, &m.reeb(&x));
            assert!(v.norm() < 1e-14, "{}", m.key());
        }
    }
}

#[test]
fn verify_structure_rejects_bad_samples() {
    let m = make_round_sphere(1).unwrap();
    assert_eq!(verify_structure(m.as_ref(), &[], 1e-8, 0).unwrap_err(), Error::EmptySample);
    let off = Vector::from_vec(vec![1.1, 0.0, 0.0, 0.0]);
    assert!(matches!(verify_structure(m.as_ref(), &[off], 1e-8, 0), Err(Error::OffManifold { .. })));
}

#[test]
fn mis_normalised_heisenberg_fails_the_contact_identity() {
    let bad = Heisenberg::with_eta_scale(0.5);
    let pts = sample_points(&bad, 100, 5);
    let rep = verify_structure(&bad, &pts, 1e-8, 6).unwrap();
    assert!(!rep.passed);
    assert!(rep.residuals["d_eta"] > 0.5);
    let x = Vector::from_vec(vec![0.3, -0.2, 0.1]);
    let e1 = Vector::from_vec(vec![1.0, 0.0, x[1]]);
    let pe1 = bad.phi(&x, &e1);
    let residual = (d_eta(&bad, &x, &e1, &pe1) - 2.0 * bad.metric(&x, &pe1, &pe1)).abs();
    assert_abs_diff_eq!(residual, 1.0, epsilon = 1e-8);
}

#[test]
fn heisenberg_contact_identity_on_frame() {
    let m = make_heisenberg();
    let x = Vector::from_vec(vec![0.7, 0.4, -1.0]);
    let e1 = Vector::from_vec(vec![1.0, 0.0, x[1]]);
    let pe1 = m.phi(&x, &e1);
    assert_abs_diff_eq!(d_eta(m.as_ref(), &x, &e1, &pe1), 2.0, epsilon = 1e-8);
    assert_abs_diff_eq!(m.metric(&x, &pe1, &pe1), 1.0, epsilon = 1e-15);
}

#[test]
fn closed_form_curvature_matches_connection_differences() {
    for m in all_models() {
        let mut rng = seeded_rng(11);
        for x in sample_points(m.as_ref(), 10, 12) {
            let (a, b, c) = (
                random_tangent(m.as_ref(), &x, &mut rng),
                random_tangent(m.as_ref(), &x, &mut rng),
                random_tangent(m.as_ref(), &x, &mut rng),
            );
            let closed = m.curvature(&x, &a, &b, &c);
            let fd = curvature_from_connection(m.as_ref(), &x, &a, &b, &c, 1e-4);
            let proj = m.tangent_projector(&x);
            assert!((&proj * (closed - fd)).norm() < 1e-7, "{}", m.key());
        }
    }
}

#[test]
fn spheres_are_sasaki_einstein() {
    for n in 1..=3 {
        let m = make_round_sphere(n).unwrap();
        let mut rng = seeded_rng(20 + n as u64);
        for x in sample_points(m.as_ref(), 20, 21) {
            let v = random_tangent(m.as_ref(), &x, &mut rng);
            assert_abs_diff_eq!(ricci(m.as_ref(), &x, &v, &v).unwrap(), 2.0 * n as f64, epsilon = 1e-8);
            let h = random_horizontal(m.as_ref(), &x, &mut rng);
            let rt = transverse_ricci(m.as_ref(), &x, &h, &h).unwrap();
            assert_abs_diff_eq!(rt, (2 * n + 2) as f64, epsilon = 1e-8);
        }
    }
}

#[test]
fn heisenberg_is_transversally_flat() {
    let m = make_heisenberg();
    let mut rng = seeded_rng(30);
    for x in sample_points(m.as_ref(), 20, 31) {
        let h = random_horizontal(m.as_ref(), &x, &mut rng);
        assert!(transverse_ricci(m.as_ref(), &x, &h, &h).unwrap().abs() < 1e-9);
        assert_abs_diff_eq!(ricci(m.as_ref(), &x, &h, &h).unwrap(), -2.0, epsilon = 1e-9);
    }
}

#[test]
fn transverse_ricci_matches_ricci_plus_twice_metric() {
    for m in all_models() {
        let mut rng = seeded_rng(40);
        for x in sample_points(m.as_ref(), 10, 41) {
            let a = random_horizontal(m.as_ref(), &x, &mut rng);
            let b = random_horizontal(m.as_ref(), &x, &mut rng);
            let rep = transverse_curvature(m.as_ref(), &x, &a, &b, &a, &b).unwrap();
            for (k, v) in &rep.residuals {
                assert!(*v < 1e-8, "{} {k} {v}", m.key());
            }
        }
    }
}

#[test]
fn transverse_curvature_rejects_vertical_input() {
    let m = make_round_sphere(1).unwrap();
    let x = Vector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
    let xi = m.reeb(&x);
    let h = horizontal_frame(m.as_ref(), &x).unwrap()[0].clone();
    assert!(matches!(transverse_curvature(m.as_ref(), &x, &xi, &h, &h, &h), Err(Error::NotHorizontal { .. })));
}

#[test]
fn deformation_by_one_is_the_identity() {
    let base = make_round_sphere(2).unwrap();
    let same = DHomothetic::new(base.clone(), 1.0).unwrap();
    let mut rng = seeded_rng(50);
    for x in sample_points(base.as_ref(), 10, 51) {
        let (a, b, c) = (
            random_tangent(base.as_ref(), &x, &mut rng),
            random_tangent(base.as_ref(), &x, &mut rng),
            random_tangent(base.as_ref(), &x, &mut rng),
        );
        assert!((base.metric(&x, &a, &b) - same.metric(&x, &a, &b)).abs() < 1e-12);
        assert!((base.reeb(&x) - same.reeb(&x)).norm() < 1e-12);
        assert!((base.christoffel(&x, &a, &b) - same.christoffel(&x, &a, &b)).norm() < 1e-12);
        assert!((base.curvature(&x, &a, &b, &c) - same.curvature(&x, &a, &b, &c)).norm() < 1e-12);
    }
}

#[test]
fn deformed_transverse_metric_scales_inversely() {
    let base = make_round_sphere(1).unwrap();
    let d = DHomothetic::new(base.clone(), 2.0).unwrap();
    let mut rng = seeded_rng(60);
    for x in sample_points(base.as_ref(), 10, 61) {
        let h = random_horizontal(base.as_ref(), &x, &mut rng);
        assert_abs_diff_eq!(d.metric(&x, &h, &h), 0.5 * base.metric(&x, &h, &h), epsilon = 1e-12);
        assert_abs_diff_eq!(d.eta(&x, &d.reeb(&x)), 1.0, epsilon = 1e-12);
    }
}

#[test]
fn projector_is_idempotent_and_antisymmetries_hold() {
    for m in all_models() {
        let mut rng = seeded_rng(70);
        for x in sample_points(m.as_ref(), 10, 71) {
            let p = m.tangent_projector(&x);
            assert!((&p * &p - &p).abs().max() < 1e-12);
            let v: Vec<_> = (0..4).map(|_| random_tangent(m.as_ref(), &x, &mut rng)).collect();
            let r = riemann(m.as_ref(), &x, &v[0], &v[1], &v[2], &v[3]);
            assert!((r + riemann(m.as_ref(), &x, &v[1], &v[0], &v[2], &v[3])).abs() < 1e-8);
            assert!((r + riemann(m.as_ref(), &x, &v[0], &v[1], &v[3], &v[2])).abs() < 1e-8);
            assert!(riemann(m.as_ref(), &x, &v[0], &v[0], &v[2], &v[3]).abs() < 1e-12);
        }
    }
}

#[test]
fn shared_models_are_usable_across_threads() {
    let m = make_round_sphere(1).unwrap();
    let handles: Vec<_> = (0..2)
        .map(|i| {
            let m = Arc::clone(&m);
            std::thread::spawn(move || {
                let pts = sample_points(m.as_ref(), 5, i);
                verify_structure(m.as_ref(), &pts, 1e-8, i).unwrap().passed
            })
        })
        .collect();
    for h in handles {
        assert!(h.join().unwrap());
    }
}

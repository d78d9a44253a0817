use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use sasaki_core::geometry::{random_horizontal, sample_points, Vector};
use sasaki_core::models::{make_heisenberg, make_round_sphere, model_from_key};
use sasaki_core::numerics::seeded_rng;
use sasaki_core::subriemannian::{
    cc_distance, connecting_geodesic, integrate_geodesic, CotangentState, GeodesicPath, ShootingConfig,
};
use sasaki_core::variations::{
    check_variation_identities, complementary_frame, first_variation, myers_certificate, phi_reeb_field, phi_velocity,
    reeb_correction_field, second_variation, sine_curvature_integral, sine_field, transport_frame, VariationField,
};
use sasaki_core::{Error, SasakiModel};

fn unit_geodesic(m: &dyn SasakiModel, seed: u64, alpha0: f64, length: f64) -> GeodesicPath {
    let x = sample_points(m, 1, seed).remove(0);
    let mut rng = seeded_rng(seed);
    let h = random_horizontal(m, &x, &mut rng);
    let e = &h / m.metric(&x, &h, &h).sqrt();
    let init = CotangentState::from_horizontal(m, x, &e, alpha0).unwrap();
    let steps = (length / 1e-3).ceil() as usize;
    integrate_geodesic(m, &init, length, steps).unwrap()
}

fn minimizing_geodesic(m: &dyn SasakiModel, seed: u64) -> GeodesicPath {
    let pts = sample_points(m, 2, seed);
    let cfg = ShootingConfig::default();
    let r = cc_distance(m, &pts[0], &pts[1], &cfg).unwrap();
    assert!(r.minimizing);
    connecting_geodesic(m, &r, &cfg).unwrap()
}

fn initial_frame(m: &dyn SasakiModel, path: &GeodesicPath) -> Vec<Vector> {
    let s = &path.samples[0];
    complementary_frame(m, &s.point, &s.velocity).unwrap()
}

#[test]
fn frame_is_empty_on_three_dimensional_models() {
    for m in [make_round_sphere(1).unwrap(), make_heisenberg()] {
        let path = unit_geodesic(m.as_ref(), 1, 0.3, 2.0);
        assert!(initial_frame(m.as_ref(), &path).is_empty());
        let frame = transport_frame(m.as_ref(), &path, &[]).unwrap();
        assert!(frame.is_empty());
        let rep = check_variation_identities(m.as_ref(), &path, &frame).unwrap();
        assert_eq!(rep.frame_size, 0);
    }
}

#[test]
fn transported_frame_on_s5_stays_orthonormal() {
    let m = make_round_sphere(2).unwrap();
    let path = unit_geodesic(m.as_ref(), 2, 0.8, PI);
    let init = initial_frame(m.as_ref(), &path);
    assert_eq!(init.len(), 2);
    let frame = transport_frame(m.as_ref(), &path, &init).unwrap();
    assert!(frame.orthonormality_residual < 1e-6, "{}", frame.orthonormality_residual);
    assert!(frame.transverse_parallel_residual < 1e-6, "{}", frame.transverse_parallel_residual);
    assert!(frame.f1 < 1e-6 && frame.f2 < 1e-6);
    assert!(frame.horizontality < 1e-8);
}

#[test]
fn transport_rejects_bad_initial_vectors() {
    let m = make_round_sphere(2).unwrap();
    let path = unit_geodesic(m.as_ref(), 3, 0.0, 1.0);
    let s = &path.samples[0];
    let bad = vec![s.velocity.clone()];
    assert!(matches!(transport_frame(m.as_ref(), &path, &bad), Err(Error::DegenerateFrame(_))));
    let doubled: Vec<Vector> = initial_frame(m.as_ref(), &path).iter().map(|v| v * 2.0).collect();
    assert!(matches!(transport_frame(m.as_ref(), &path, &doubled), Err(Error::DegenerateFrame(_))));
}

#[test]
fn zero_field_has_zero_variations() {
    let m = make_round_sphere(1).unwrap();
    let path = unit_geodesic(m.as_ref(), 4, 0.5, 2.0);
    let z = VariationField::zero(m.as_ref(), &path).unwrap();
    assert_eq!(second_variation(m.as_ref(), &path, &z).unwrap(), 0.0);
    assert_eq!(first_variation(m.as_ref(), &path, &z).unwrap(), 0.0);
}

#[test]
fn identities_on_s3_with_reeb_component() {
    let m = make_round_sphere(1).unwrap();
    let path = unit_geodesic(m.as_ref(), 5, 0.5, 2.5);
    let frame = transport_frame(m.as_ref(), &path, &[]).unwrap();
    let rep = check_variation_identities(m.as_ref(), &path, &frame).unwrap();
    assert!(rep.reeb_acceleration < 1e-5 && rep.reeb_curvature < 1e-5, "{rep:?}");
    assert!(rep.at_start < 1e-12, "{rep:?}");
    assert!(rep.reeb_admissibility < 1e-6);
}

#[test]
fn identities_on_heisenberg_use_flat_transverse_curvature() {
    let m = make_heisenberg();
    for seed in 0..3 {
        let path = unit_geodesic(m.as_ref(), seed, 0.4 * seed as f64, 3.0);
        let frame = transport_frame(m.as_ref(), &path, &[]).unwrap();
        let rep = check_variation_identities(m.as_ref(), &path, &frame).unwrap();
        assert!(rep.max_identity_residual() < 1e-6, "{rep:?}");
        assert_abs_diff_eq!(
            sine_curvature_integral(m.as_ref(), &path, &phi_velocity(m.as_ref(), &path)),
            (2.0 * PI / 3.0).powi(2) * 1.5,
            epsilon = 1e-9
        );
    }
}

#[test]
fn identities_on_higher_dimensional_models() {
    for key in ["s5", "s7", "s5-dhom:2"] {
        let m = model_from_key(key).unwrap();
        let path = unit_geodesic(m.as_ref(), 6, -0.7, 2.0);
        let frame = transport_frame(m.as_ref(), &path, &initial_frame(m.as_ref(), &path)).unwrap();
        let rep = check_variation_identities(m.as_ref(), &path, &frame).unwrap();
        assert_eq!(rep.frame_size, 2 * m.n() - 2);
        assert!(rep.max_identity_residual() < 1e-5, "{key}: {rep:?}");
        assert!(rep.sine_admissibility < 1e-6 && rep.reeb_admissibility < 1e-6, "{key}: {rep:?}");
    }
}

#[test]
fn reeb_corrected_field_matches_its_curvature_integral_on_s3_minimizer() {
    let m = make_round_sphere(1).unwrap();
    let path = minimizing_geodesic(m.as_ref(), 9);
    let v = reeb_correction_field(m.as_ref(), &path).unwrap();
    let e2 = second_variation(m.as_ref(), &path, &v).unwrap();
    let expected = sine_curvature_integral(m.as_ref(), &path, &phi_velocity(m.as_ref(), &path));
    assert!((e2 - expected).abs() < 1e-5, "{e2} vs {expected}");
    assert!(e2 >= -1e-5);
}

#[test]
fn second_variations_on_s5_minimizer_sum_to_the_myers_integral() {
    let m = make_round_sphere(2).unwrap();
    let path = minimizing_geodesic(m.as_ref(), 12);
    let frame = transport_frame(m.as_ref(), &path, &initial_frame(m.as_ref(), &path)).unwrap();
    let mut total = 0.0;
    for f in &frame.fields {
        let v = sine_field(m.as_ref(), &path, f).unwrap();
        assert!(v.admissibility_residual < 1e-6);
        assert!(v.endpoint_residual < 1e-10);
        let e2 = second_variation(m.as_ref(), &path, &v).unwrap();
        assert!(e2 >= -1e-6, "{e2}");
        total += e2;
    }
    total += second_variation(m.as_ref(), &path, &reeb_correction_field(m.as_ref(), &path).unwrap()).unwrap();
    let cert = myers_certificate(m.as_ref(), &path, 6.0, true).unwrap();
    assert!((total - cert.lhs_integral).abs() < 1e-4, "{total} vs {}", cert.lhs_integral);
    assert!(cert.passed && cert.within_bound, "{cert:?}");
}

#[test]
fn admissibility_requires_reeb_component_to_integrate_twice_the_rotation() {
    let m = make_round_sphere(1).unwrap();
    let path = unit_geodesic(m.as_ref(), 7, 0.3, 2.0);
    let l = path.t_end();
    let ts: Vec<f64> = path.samples.iter().map(|s| s.t).collect();
    let h: Vec<f64> = ts.iter().map(|t| (PI * t / l).sin().powi(2)).collect();
    // k = int 2h = t - (l / 2 pi) sin(2 pi t / l)
    let k: Vec<f64> = ts.iter().map(|t| t - l / (2.0 * PI) * (2.0 * PI * t / l).sin()).collect();
    let good = phi_reeb_field(m.as_ref(), &path, &h, &k).unwrap();
    assert!(good.admissibility_residual < 1e-6);
    let k_bad: Vec<f64> = k.iter().map(|v| 0.5 * v).collect();
    let bad = phi_reeb_field(m.as_ref(), &path, &h, &k_bad).unwrap();
    assert!(bad.admissibility_residual > 0.5);
    assert!(matches!(second_variation(m.as_ref(), &path, &bad), Err(Error::Inadmissible { .. })));
}

#[test]
fn first_variation_vanishes_for_fixed_endpoint_fields() {
    for key in ["s3", "s5", "heisenberg"] {
        let m = model_from_key(key).unwrap();
        let path = unit_geodesic(m.as_ref(), 8, 0.6, 2.0);
        let v = reeb_correction_field(m.as_ref(), &path).unwrap();
        assert!(first_variation(m.as_ref(), &path, &v).unwrap().abs() < 1e-8, "{key}");
    }
}

#[test]
fn second_variation_rejects_short_paths() {
    let m = make_round_sphere(1).unwrap();
    let x = Vector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
    let e = Vector::from_vec(vec![0.0, 0.0, 1.0, 0.0]);
    let init = CotangentState::from_horizontal(m.as_ref(), x, &e, 0.0).unwrap();
    let path = integrate_geodesic(m.as_ref(), &init, 1.0, 20).unwrap();
    assert!(matches!(VariationField::zero(m.as_ref(), &path), Err(Error::TooFewSamples { got: 21, min: 32 })));
}

#[test]
fn myers_certificate_on_s3() {
    let m = make_round_sphere(1).unwrap();
    let path = minimizing_geodesic(m.as_ref(), 14);
    let cert = myers_certificate(m.as_ref(), &path, 4.0, true).unwrap();
    assert!(cert.passed && cert.within_bound, "{cert:?}");
    assert_abs_diff_eq!(cert.implied_bound, PI, epsilon = 1e-12);
    assert!(matches!(myers_certificate(m.as_ref(), &path, 0.0, true), Err(Error::InvalidParameter(_))));
    assert!(matches!(myers_certificate(m.as_ref(), &path, 4.0, false), Err(Error::NotMinimizing)));
}

#[test]
fn myers_integrand_vanishes_at_the_critical_length() {
    // On S^3, Ric^T(v, v) = 4 = (2 pi / l)^2 exactly when l = pi.
    let m = make_round_sphere(1).unwrap();
    let path = unit_geodesic(m.as_ref(), 15, 1.3, PI);
    let cert = myers_certificate(m.as_ref(), &path, 4.0, true).unwrap();
    assert_abs_diff_eq!(cert.lhs_integral, 0.0, epsilon = 1e-10);
}

mod common;

use std::f64::consts::PI;

use covert_rsma::channel::{build_lifted, composite_gains, lift_r, lift_t, random_phases, sample_channels};
use covert_rsma::linalg::eigh;
use covert_rsma::C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn same_seed_same_draw() {
    let sc = common::default_scenario();
    let a = sample_channels(&sc, &mut ChaCha8Rng::seed_from_u64(3));
    let b = sample_channels(&sc, &mut ChaCha8Rng::seed_from_u64(3));
    assert_eq!(a, b);
    assert_eq!(a.h_ar1.len(), sc.k_n);
    assert_eq!(a.h_rg.len(), sc.k_m);
}

#[test]
fn direct_link_power_matches_its_variance() {
    let mut sc = common::with_elements(2, 1);
    sc.lambda_ab = 2.5;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 100_000;
    let m = (0..n).map(|_| sample_channels(&sc, &mut rng).h_ab.norm_sqr()).sum::<f64>() / n as f64;
    assert!((m / 2.5 - 1.0).abs() < 0.02, "{m}");
}

#[test]
fn reflected_power_at_the_warden_has_the_cascade_variance() {
    let sc = common::with_elements(20, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 100_000;
    let mut acc = 0.0;
    for _ in 0..n {
        let ch = sample_channels(&sc, &mut rng);
        let th = random_phases(sc.k_n, &mut rng);
        let z: C64 = (0..sc.k_n).map(|k| ch.h_ar1[k].conj() * C64::from_polar(1.0, th[k]) * ch.h_rw[k]).sum();
        acc += z.norm_sqr();
    }
    let want = sc.lambda_ar * sc.lambda_rw * sc.k_n as f64;
    assert!((acc / n as f64 / want - 1.0).abs() < 0.03, "{}", acc / n as f64);
}

#[test]
fn no_reflecting_elements_leaves_the_direct_link() {
    let mut sc = common::with_elements(4, 1);
    sc.k_n = 0;
    sc.k_m = 4;
    let ch = sample_channels(&sc, &mut ChaCha8Rng::seed_from_u64(1));
    let pl = sc.path_losses().unwrap();
    let g = composite_gains(&ch, &[], &[0.0; 4], &pl).unwrap();
    assert!((g.z_ab2 - ch.h_ab.norm_sqr() / pl.l_ab).abs() <= 1e-15 * g.z_ab2);
    assert!(composite_gains(&ch, &[0.0], &[0.0; 4], &pl).is_err());
}

#[test]
fn cophased_phases_reach_the_amplitude_sum() {
    let sc = common::default_scenario();
    let pl = sc.path_losses().unwrap();
    let ch = sample_channels(&sc, &mut ChaCha8Rng::seed_from_u64(4));
    let s = 1.0 / (pl.l_ar * pl.l_rb).sqrt();
    let direct = ch.h_ab / pl.l_ab.sqrt();
    let theta: Vec<f64> = (0..sc.k_n)
        .map(|k| direct.arg() - (ch.h_ar1[k].conj() * ch.h_rb[k]).arg())
        .collect();
    let want = (direct.norm() + (0..sc.k_n).map(|k| (ch.h_ar1[k] * ch.h_rb[k]).norm() * s).sum::<f64>()).powi(2);
    let g = composite_gains(&ch, &theta, &vec![0.0; sc.k_m], &pl).unwrap();
    assert!((g.z_ab2 / want - 1.0).abs() < 1e-12);
}

#[test]
fn lifted_matrices_have_the_expected_shape() {
    let sc = common::with_elements(10, 4);
    let pl = sc.path_losses().unwrap();
    let ch = sample_channels(&sc, &mut ChaCha8Rng::seed_from_u64(6));
    let lf = build_lifted(&ch, &pl).unwrap();
    assert_eq!(lf.h_b.nrows(), 5);
    assert_eq!(lf.h_b[(4, 4)], C64::new(0.0, 0.0));
    assert!((&lf.h_b - lf.h_b.adjoint()).norm() == 0.0);
    let tr: f64 = (0..5).map(|i| lf.h_b[(i, i)].re).sum();
    assert!((tr - lf.lambda_b.norm_squared()).abs() <= 1e-12 * tr);
    let (ev, _) = eigh(&lf.h_g);
    let big = ev.iter().cloned().fold(0.0, f64::max);
    assert_eq!(ev.iter().filter(|&&e| e.abs() > 1e-9 * big).count(), 1);
}

#[test]
fn lifted_form_agrees_on_many_phase_vectors() {
    let sc = common::with_elements(12, 7);
    let pl = sc.path_losses().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let ch = sample_channels(&sc, &mut rng);
    let lf = build_lifted(&ch, &pl).unwrap();
    for _ in 0..1000 {
        let tr = random_phases(sc.k_n, &mut rng);
        let tt = random_phases(sc.k_m, &mut rng);
        let g = composite_gains(&ch, &tr, &tt, &pl).unwrap();
        let ur = lift_r(&tr);
        let ut = lift_t(&tt);
        let zb = (ur.adjoint() * &lf.h_b * &ur)[(0, 0)].re + lf.nu_b.norm_sqr();
        let zg = (ut.adjoint() * &lf.h_g * &ut)[(0, 0)].re;
        assert!((zb - g.z_ab2).abs() <= 1e-9 * g.z_ab2);
        assert!((zg - g.z_ag2).abs() <= 1e-9 * g.z_ag2);
    }
}

proptest! {
    #[test]
    fn common_rotation_of_transmission_phases_is_invisible(seed in 0u64..1000, rot in 0.0f64..(2.0 * PI)) {
        let sc = common::with_elements(8, 3);
        let pl = sc.path_losses().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = sample_channels(&sc, &mut rng);
        let tr = random_phases(3, &mut rng);
        let tt = random_phases(5, &mut rng);
        let rotated: Vec<f64> = tt.iter().map(|t| t + rot).collect();
        let a = composite_gains(&ch, &tr, &tt, &pl).unwrap();
        let b = composite_gains(&ch, &tr, &rotated, &pl).unwrap();
        prop_assert!((a.z_ag2 - b.z_ag2).abs() <= 1e-12 * a.z_ag2);
        prop_assert_eq!(a.z_ab2, b.z_ab2);
    }

    #[test]
    fn gains_are_non_negative_and_periodic(seed in 0u64..1000) {
        let sc = common::with_elements(8, 4);
        let pl = sc.path_losses().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = sample_channels(&sc, &mut rng);
        let tr = random_phases(4, &mut rng);
        let tt = random_phases(4, &mut rng);
        let shifted: Vec<f64> = tr.iter().map(|t| t + 2.0 * PI).collect();
        let a = composite_gains(&ch, &tr, &tt, &pl).unwrap();
        let b = composite_gains(&ch, &shifted, &tt, &pl).unwrap();
        prop_assert!(a.z_ab2 >= 0.0 && a.z_ag2 >= 0.0);
        prop_assert!((a.z_ab2 - b.z_ab2).abs() <= 1e-12 * a.z_ab2);
    }
}

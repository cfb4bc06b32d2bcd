mod common;

use covert_rsma::alloc::{
    algorithm1, noma_gain_floor, noma_power, optimal_a12_given_a0, optimal_beta, rsma_gain_floor, Alg1Options,
    AllocParams,
};
use covert_rsma::rates::{noma_rates, rsma_rates, LinkBudget, NomaAllocation, PowerAllocation, RateAllocation};
use covert_rsma::{Constraint, Error};
use proptest::prelude::*;

fn params(epsilon: f64, rg_min: f64) -> AllocParams {
    let mut sc = common::default_scenario();
    sc.epsilon = epsilon;
    sc.rg_min_bps = rg_min;
    let pl = sc.path_losses().unwrap();
    AllocParams::new(&sc, &pl)
}

fn links(p: &AllocParams) -> Vec<LinkBudget> {
    [(5e-9, 6e-10), (2e-8, 1e-8), (3e-9, 2.9e-9), (1e-7, 4e-10)]
        .into_iter()
        .map(|(b, g)| p.link(b, g))
        .collect()
}

fn rb_rg(a: [f64; 3], beta2: f64, l: &LinkBudget, omega: f64) -> (f64, f64) {
    common::rsma_rb_rg(a, beta2, l, omega)
}

/// Rates of the per-`a0` subproblem: the common rate is frozen at its
/// value for interference `1 - a0`, as the closed-form step assumes.
fn rb_rg_given_a0(a0: f64, a1: f64, a2: f64, beta2: f64, l: &LinkBudget) -> (f64, f64) {
    let sb = l.pt * l.z_ab2 / l.sigma2_b;
    let sg = l.pt * l.z_ag2 / l.sigma2_g;
    let room = 1.0 - a0;
    let c = common::log2_1p(a0 * sb / (room * sb + 1.0)).min(common::log2_1p(a0 * sg / (room * sg + 1.0)));
    let rb = (1.0 - beta2) * c + common::log2_1p(a1 * sb / (a2 * sb + 1.0));
    let rg = beta2 * c + common::log2_1p(a2 * sg / (a1 * sg + 1.0));
    (rb, rg)
}

#[test]
fn split_given_common_share_beats_a_fine_grid() {
    for eps in [0.3, 0.6] {
        let p = params(eps, 1.0);
        let xi1 = p.covert_limit().unwrap();
        for l in links(&p) {
            for a0 in [0.2, 0.5, 0.8] {
                for beta2 in [0.0, 0.5, 1.0] {
                    let got = match optimal_a12_given_a0(a0, beta2, &l, &p, xi1) {
                        Ok(s) => s,
                        Err(Error::Infeasible(_)) => continue,
                        Err(e) => panic!("{e}"),
                    };
                    let (rb, rg) = rb_rg_given_a0(a0, got.a1, got.a2, beta2, &l);
                    assert!(rg >= 1.0 - 1e-9);
                    let mut best = f64::NEG_INFINITY;
                    let n = ((1.0 - a0) / 1e-3).round() as usize;
                    for i in 0..=n {
                        let a1 = i as f64 * 1e-3;
                        if a1 > xi1 {
                            break;
                        }
                        for j in 0..=(n - i) {
                            let a2 = j as f64 * 1e-3;
                            let (b, g) = rb_rg_given_a0(a0, a1, a2, beta2, &l);
                            if g >= 1.0 {
                                best = best.max(b);
                            }
                        }
                    }
                    assert!(rb >= best - 1e-9, "eps {eps} a0 {a0} b2 {beta2}: {rb} < {best}");
                }
            }
        }
    }
}

#[test]
fn loose_covertness_and_met_qos_give_all_remaining_power_to_bob() {
    let p = params(1.0, 0.1);
    let l = p.link(2e-8, 1e-8);
    let s = optimal_a12_given_a0(0.6, 1.0, &l, &p, 1.0).unwrap();
    assert_eq!(s.a2, 0.0);
    assert!((s.a1 - 0.4).abs() < 1e-15);
    assert_eq!(s.binding, Constraint::PowerBudget);
}

#[test]
fn perfect_covertness_forbids_the_private_stream() {
    let mut p = params(0.05, 1.0);
    p.epsilon = 0.0;
    let l = p.link(5e-9, 6e-10);
    let beta = RateAllocation::from_beta2(0.3);
    let out = algorithm1(&beta, &l, &p, &Alg1Options::default()).unwrap();
    assert_eq!(out.alloc.a1, 0.0);
    let r = rsma_rates(&out.alloc, &beta, &l, 0.0).unwrap();
    assert!((r.r_b - 0.7 * r.r_c).abs() < 1e-12);
}

#[test]
fn algorithm1_matches_the_simplex_face_grid() {
    for eps in [0.05, 0.3] {
        let p = params(eps, 1.0);
        for l in links(&p) {
            for beta2 in [0.2, 0.8] {
                let beta = RateAllocation::from_beta2(beta2);
                let out = match algorithm1(&beta, &l, &p, &Alg1Options::default()) {
                    Ok(o) => o,
                    Err(Error::Infeasible(_)) => continue,
                    Err(e) => panic!("{e}"),
                };
                assert!((out.alloc.sum() - 1.0).abs() < 1e-12);
                let step = 0.005;
                let n = (1.0 / step) as usize;
                let mut best = f64::NEG_INFINITY;
                for i in 0..=n {
                    for j in 0..=(n - i) {
                        let (a0, a1) = (i as f64 * step, j as f64 * step);
                        let a = PowerAllocation::new(a0, a1, (1.0 - a0 - a1).max(0.0)).unwrap();
                        let (rb, rg) = rb_rg([a.a0, a.a1, a.a2], beta2, &l, 0.0);
                        if rg >= 1.0 && p.madep(&a) >= 1.0 - eps {
                            best = best.max(rb);
                        }
                    }
                }
                assert!(out.rates.r_b >= best - 1e-9, "eps {eps} b2 {beta2}: {} < {best}", out.rates.r_b);
            }
        }
    }
}

#[test]
fn unit_sum_face_holds_the_grid_maximiser() {
    let p = params(0.3, 1.0);
    for l in links(&p) {
        for beta2 in [0.0, 0.4, 1.0] {
            let (mut best, mut best_face) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            let n = 50;
            for i in 0..=n {
                for j in 0..=(n - i) {
                    for k in 0..=(n - i - j) {
                        let a = [i as f64 / 50.0, j as f64 / 50.0, k as f64 / 50.0];
                        let al = PowerAllocation::new(a[0], a[1], a[2]).unwrap();
                        let (rb, rg) = rb_rg(a, beta2, &l, 0.0);
                        if rg >= 1.0 && p.madep(&al) >= 0.7 {
                            best = best.max(rb);
                            if i + j + k == n {
                                best_face = best_face.max(rb);
                            }
                        }
                    }
                }
            }
            assert!(best_face >= best - 1e-12, "b2 {beta2}: face {best_face} < {best}");
        }
    }
}

#[test]
fn beta_is_the_smallest_feasible_share() {
    let p = params(0.3, 1.0);
    for l in links(&p) {
        let a = PowerAllocation::new(0.9, 0.05, 0.05).unwrap();
        let beta = match optimal_beta(&a, &l, &p) {
            Ok(b) => b,
            Err(Error::Infeasible(_)) => continue,
            Err(e) => panic!("{e}"),
        };
        let r = rsma_rates(&a, &beta, &l, 0.0).unwrap();
        if beta.beta2 > 0.0 && beta.beta2 < 1.0 {
            assert!((r.r_g - 1.0).abs() < 1e-9, "{}", r.r_g);
        }
        let first = (0..=1000)
            .map(|i| i as f64 * 1e-3)
            .find(|&b2| rb_rg([a.a0, a.a1, a.a2], b2, &l, 0.0).1 >= 1.0)
            .unwrap();
        assert!(beta.beta2 <= first + 1e-12 && beta.beta2 >= first - 1e-3, "{} vs {first}", beta.beta2);
    }
}

#[test]
fn private_stream_alone_leaves_bob_the_common_rate() {
    let p = params(0.3, 0.5);
    let l = p.link(2e-8, 1e-8);
    let a = PowerAllocation::new(0.5, 0.0, 0.5).unwrap();
    let beta = optimal_beta(&a, &l, &p).unwrap();
    assert_eq!(beta.beta2, 0.0);
    assert_eq!(beta.beta1, 1.0);
}

#[test]
fn noma_split_matches_a_fine_grid() {
    for eps in [0.05, 0.3, 0.9] {
        let p = params(eps, 1.0);
        let xi1 = p.covert_limit().unwrap();
        for l in links(&p) {
            let got = match noma_power(&l, &p) {
                Ok(o) => o,
                Err(Error::Infeasible(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            assert!((got.alloc.abar1 + got.alloc.abar2 - 1.0).abs() < 1e-12);
            let mut best = (f64::NEG_INFINITY, 0.0);
            for i in 0..=5000 {
                let b1 = i as f64 * 1e-4;
                if b1 > xi1 {
                    break;
                }
                let r = noma_rates(&NomaAllocation { abar1: b1, abar2: 1.0 - b1 }, &l, 0.0).unwrap();
                if r.r_g_sg >= 1.0 && r.r_b_sg >= 1.0 && r.r_b_sb > best.0 {
                    best = (r.r_b_sb, b1);
                }
            }
            assert!((got.alloc.abar1 - best.1).abs() <= 1e-4 + 1e-12, "{} vs {}", got.alloc.abar1, best.1);
        }
    }
}

#[test]
fn noma_without_qos_is_capped_by_ordering_or_covertness() {
    let p = params(1.0, 0.0);
    let out = noma_power(&p.link(2e-8, 1e-8), &p).unwrap();
    assert!((out.alloc.abar1 - 0.5).abs() < 1e-12);
}

#[test]
fn gain_floors_are_tight() {
    let p = params(0.3, 1.0);
    let a = PowerAllocation::new(0.8, 0.1, 0.1).unwrap();
    let beta = RateAllocation::from_beta2(0.5);
    let g = rsma_gain_floor(&a, &beta, &p, 1e-6).unwrap();
    let (_, rg) = rb_rg([0.8, 0.1, 0.1], 0.5, &p.link(g, g), 0.0);
    assert!((rg - 1.0).abs() < 1e-6, "{rg}");

    let n = NomaAllocation { abar1: 0.2, abar2: 0.8 };
    let g = noma_gain_floor(&n, &p).unwrap();
    let r = noma_rates(&n, &p.link(1.0, g), 0.0).unwrap();
    assert!((r.r_g_sg - 1.0).abs() < 1e-9);
    let bad = NomaAllocation { abar1: 0.5, abar2: 0.5 };
    assert!(matches!(noma_gain_floor(&bad, &p), Err(Error::Infeasible(Constraint::Qos))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn algorithm1_output_is_feasible(
        zb in -10.0f64..-7.0,
        ratio in 0.01f64..1.0,
        beta2 in 0.0f64..1.0,
        eps in 0.01f64..0.9,
        rg_min in 0.1f64..3.0,
        omega in prop_oneof![Just(0.0), Just(0.01), 0.0f64..0.1],
    ) {
        let p = params(eps, rg_min).with_omega(omega);
        let l = p.link(10f64.powf(zb), 10f64.powf(zb) * ratio);
        let beta = RateAllocation::from_beta2(beta2);
        match algorithm1(&beta, &l, &p, &Alg1Options::default()) {
            Ok(out) => {
                prop_assert!((out.alloc.sum() - 1.0).abs() < 1e-9);
                prop_assert!(p.madep(&out.alloc) >= 1.0 - eps - 1e-6);
                let r = rsma_rates(&out.alloc, &beta, &l, omega).unwrap();
                prop_assert!(r.r_g >= rg_min - 1e-6);
                prop_assert!(out.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12 * (1.0 + w[0])));
            }
            Err(Error::Infeasible(_)) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}

//! Test-side oracles. Each one is written from the model, not from the
//! library code, so agreement is evidence rather than tautology.
#![allow(dead_code)]

use covert_rsma::channel::ChannelRealization;
use covert_rsma::covert::DetectionContext;
use covert_rsma::rates::LinkBudget;
use covert_rsma::scenario::{PathLossSet, Scenario};
use covert_rsma::C64;

pub fn default_scenario() -> Scenario {
    Scenario::default()
}

/// Scenario with `k_n` reflecting elements out of `k`.
pub fn with_elements(k: usize, k_n: usize) -> Scenario {
    let mut sc = Scenario::default();
    sc.apply([("k", k.to_string().as_str()), ("k_n", k_n.to_string().as_str())])
        .unwrap();
    sc
}

/// Error probability at offset `x = eta - sigma2_w`, from the exponential
/// reflected-power model written out directly.
pub fn dep_at(ctx: &DetectionContext, h: f64, x: f64) -> f64 {
    let scale = |d: f64| d * ctx.lambda_n / ctx.phi;
    let above = |d: f64| {
        if d == 0.0 {
            return if x < 0.0 { 1.0 } else { 0.0 };
        }
        let t = x - d * h;
        if t <= 0.0 {
            1.0
        } else {
            (-t / scale(d)).exp()
        }
    };
    above(ctx.delta1) + 1.0 - above(ctx.delta2)
}

/// Minimum over thresholds by golden-section search on the upper band,
/// where the curve is unimodal. Below `delta2 h` the error only falls.
pub fn dep_min(ctx: &DetectionContext, h: f64) -> f64 {
    let lo0 = ctx.delta2 * h;
    let span = 60.0 * ctx.delta2 * ctx.lambda_n / ctx.phi + ctx.delta2 * h;
    let (mut lo, mut hi) = (lo0, lo0 + span);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..300 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if dep_at(ctx, h, m1) <= dep_at(ctx, h, m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    dep_at(ctx, h, 0.5 * (lo + hi)).min(dep_at(ctx, h, lo0))
}

/// Average of [`dep_min`] over the exponential direct-link gain, by the
/// midpoint rule on its quantile function.
pub fn madep_quadrature(ctx: &DetectionContext, n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        let u = (i as f64 + 0.5) / n as f64;
        let h = -ctx.lambda_aw * (1.0 - u).ln();
        s += dep_min(ctx, h);
    }
    s / n as f64
}

pub fn log2_1p(x: f64) -> f64 {
    (1.0 + x).log2()
}

/// `|Z_ab|^2` and `|Z_ag|^2` summed path by path from the raw draws.
pub fn gains(ch: &ChannelRealization, pl: &PathLossSet, theta_r: &[f64], theta_t: &[f64]) -> (f64, f64) {
    let sb = (pl.l_ar * pl.l_rb).sqrt();
    let sg = (pl.l_ar * pl.l_rg).sqrt();
    let mut zb = ch.h_ab / pl.l_ab.sqrt();
    for (k, t) in theta_r.iter().enumerate() {
        zb += ch.h_ar1[k].conj() * C64::from_polar(1.0, *t) * ch.h_rb[k] / sb;
    }
    let mut zg = C64::new(0.0, 0.0);
    for (m, t) in theta_t.iter().enumerate() {
        zg += ch.h_ar2[m].conj() * C64::from_polar(1.0, *t) * ch.h_rg[m] / sg;
    }
    (zb.norm_sqr(), zg.norm_sqr())
}

/// Rate-splitting `(R_b, R_g)` with a common rate both users can decode.
pub fn rsma_rb_rg(a: [f64; 3], beta2: f64, l: &LinkBudget, omega: f64) -> (f64, f64) {
    let [a0, a1, a2] = a;
    let sb = l.pt * l.z_ab2 / l.sigma2_b;
    let sg = l.pt * l.z_ag2 / l.sigma2_g;
    let c = log2_1p(a0 * sb / ((a1 + a2) * sb + 1.0)).min(log2_1p(a0 * sg / ((a1 + a2) * sg + 1.0)));
    let rb = (1.0 - beta2) * c + log2_1p(a1 * sb / ((omega * a0 + a2) * sb + 1.0));
    let rg = beta2 * c + log2_1p(a2 * sg / ((omega * a0 + a1) * sg + 1.0));
    (rb, rg)
}

/// NOMA `(R_b, R_g, rate at which Bob decodes Grace's stream)`.
pub fn noma_rb_rg(a1: f64, a2: f64, l: &LinkBudget, omega: f64) -> (f64, f64, f64) {
    let sb = l.pt * l.z_ab2 / l.sigma2_b;
    let sg = l.pt * l.z_ag2 / l.sigma2_g;
    (
        log2_1p(a1 * sb / (omega * a2 * sb + 1.0)),
        log2_1p(a2 * sg / (a1 * sg + 1.0)),
        log2_1p(a2 * sb / (a1 * sb + 1.0)),
    )
}

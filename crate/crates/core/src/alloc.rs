//! Power and rate-split allocation for fixed element phases.

use serde::{Deserialize, Serialize};

use crate::covert::{madep, madep_inverse, DetectionContext};
use crate::error::{Constraint, Error, Result};
use crate::rates::{
    noma_rates, rsma_rates, LinkBudget, NomaAllocation, NomaRates, PowerAllocation,
    RateAllocation, RateReport,
};
use crate::scenario::{PathLossSet, Scenario};

/// Quantities the allocation steps need besides the composite gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocParams {
    pub pt: f64,
    pub sigma2_b: f64,
    pub sigma2_g: f64,
    pub rg_min: f64,
    pub epsilon: f64,
    /// Residual common-stream fraction after imperfect cancellation.
    pub omega: f64,
    pub covert: DetectionContext,
}

impl AllocParams {
    /// Perfect cancellation; see [`AllocParams::with_omega`].
    pub fn new(sc: &Scenario, pl: &PathLossSet) -> Self {
        let full = PowerAllocation {
            a0: 1.0,
            a1: 0.0,
            a2: 0.0,
        };
        AllocParams {
            pt: sc.pt_mw(),
            sigma2_b: sc.sigma2_b(),
            sigma2_g: sc.sigma2_g(),
            rg_min: sc.rg_min_bps,
            epsilon: sc.epsilon,
            omega: 0.0,
            covert: DetectionContext::new(sc, pl, &full),
        }
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn link(&self, z_ab2: f64, z_ag2: f64) -> LinkBudget {
        LinkBudget {
            pt: self.pt,
            z_ab2,
            z_ag2,
            sigma2_b: self.sigma2_b,
            sigma2_g: self.sigma2_g,
        }
    }

    /// Largest covert fraction meeting `madep >= 1 - epsilon` at full power.
    pub fn covert_limit(&self) -> Result<f64> {
        let inv = madep_inverse(1.0 - self.epsilon, &self.covert);
        if !inv.feasible {
            return Err(Error::Infeasible(Constraint::Covertness));
        }
        Ok(inv.a1_max)
    }

    pub fn madep(&self, alloc: &PowerAllocation) -> f64 {
        madep(alloc, &self.covert)
    }

    pub fn rates(&self, alloc: &PowerAllocation, beta: &RateAllocation, link: &LinkBudget) -> Result<RateReport> {
        rsma_rates(alloc, beta, link, self.omega)
    }
}

fn lg(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// Common rate when the private streams share the remaining `1 - a0`.
fn common_rate(a0: f64, link: &LinkBudget) -> f64 {
    let r = |z: f64, s: f64| lg(a0 * link.pt * z / ((1.0 - a0) * link.pt * z + s));
    r(link.z_ab2, link.sigma2_b).min(r(link.z_ag2, link.sigma2_g))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitGivenA0 {
    pub a1: f64,
    pub a2: f64,
    /// Constraint that capped `a1`.
    pub binding: Constraint,
}

/// Private-stream fractions for a given common fraction: `a1` as large as
/// covertness, Grace's rate and the budget allow, `a2` the least that
/// still gives Grace her minimum rate.
pub fn optimal_a12_given_a0(
    a0: f64,
    beta2: f64,
    link: &LinkBudget,
    p: &AllocParams,
    xi1: f64,
) -> Result<SplitGivenA0> {
    if !(0.0..=1.0).contains(&a0) {
        return Err(Error::domain(format!("a0 must lie in [0, 1], got {a0}")));
    }
    let room = 1.0 - a0;
    let rgc = beta2 * common_rate(a0, link);
    if rgc >= p.rg_min {
        let (a1, binding) = if xi1 < room {
            (xi1, Constraint::Covertness)
        } else {
            (room, Constraint::PowerBudget)
        };
        return Ok(SplitGivenA0 { a1, a2: 0.0, binding });
    }
    let pg = link.pt * link.z_ag2;
    if !(pg > 0.0) {
        return Err(Error::Infeasible(Constraint::Qos));
    }
    let d = (p.rg_min - rgc).exp2();
    let interf = |a1: f64| (d - 1.0) * ((p.omega * a0 + a1) * pg + link.sigma2_g) / pg;
    let xi2 = (room * pg - (d - 1.0) * (p.omega * a0 * pg + link.sigma2_g)) / (d * pg);
    if xi2 < -1e-12 {
        return Err(Error::Infeasible(Constraint::Qos));
    }
    let xi2 = xi2.max(0.0);
    let (a1, binding) = if xi1 <= xi2 && xi1 <= room {
        (xi1, Constraint::Covertness)
    } else if xi2 <= room {
        (xi2, Constraint::Qos)
    } else {
        (room, Constraint::PowerBudget)
    };
    let a2 = interf(a1).min(room - a1).max(0.0);
    Ok(SplitGivenA0 { a1, a2, binding })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alg1Options {
    pub a0_init: f64,
    pub zeta1: f64,
    pub max_iter: usize,
}

impl Default for Alg1Options {
    fn default() -> Self {
        Alg1Options {
            a0_init: 0.0,
            zeta1: 1e-4,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alg1Outcome {
    pub alloc: PowerAllocation,
    pub rates: RateReport,
    /// Bob's rate after each accepted update.
    pub trace: Vec<f64>,
    pub binding: Constraint,
    /// Power was moved from the common to Grace's stream to restore her
    /// minimum rate under imperfect cancellation.
    pub polished: bool,
}

/// Fixed-point power allocation for a fixed common-rate split.
pub fn algorithm1(
    beta: &RateAllocation,
    link: &LinkBudget,
    p: &AllocParams,
    opts: &Alg1Options,
) -> Result<Alg1Outcome> {
    let xi1 = p.covert_limit()?;
    let mut a0 = opts.a0_init.clamp(0.0, 1.0);
    let mut best: Option<Alg1Outcome> = None;
    for _ in 0..opts.max_iter.max(1) {
        let split = match optimal_a12_given_a0(a0, beta.beta2, link, p, xi1) {
            Ok(s) => s,
            Err(e) if best.is_none() => return Err(e),
            Err(_) => break,
        };
        let cand = PowerAllocation {
            a0: (1.0 - split.a1 - split.a2).max(0.0),
            a1: split.a1,
            a2: split.a2,
        };
        let (cand, polished) = match restore_qos(cand, beta, link, p) {
            Ok(c) => c,
            Err(e) if best.is_none() => return Err(e),
            Err(_) => break,
        };
        let rates = p.rates(&cand, beta, link)?;
        let prev = best.as_ref().map(|b| b.rates.r_b);
        if let Some(prev) = prev {
            if rates.r_b < prev - 1e-12 * (1.0 + prev.abs()) {
                break;
            }
        }
        let mut trace = best.map(|b| b.trace).unwrap_or_default();
        trace.push(rates.r_b);
        let done = prev.is_some_and(|q| rates.r_b - q < opts.zeta1);
        best = Some(Alg1Outcome {
            alloc: cand,
            rates,
            trace,
            binding: split.binding,
            polished,
        });
        if done || (cand.a0 - a0).abs() <= 1e-15 {
            break;
        }
        a0 = cand.a0;
    }
    best.ok_or(Error::Infeasible(Constraint::Qos))
}

/// Shift the least power from the common stream to Grace's stream that
/// brings her back to the minimum rate.
fn restore_qos(
    cand: PowerAllocation,
    beta: &RateAllocation,
    link: &LinkBudget,
    p: &AllocParams,
) -> Result<(PowerAllocation, bool)> {
    let shifted = |d: f64| PowerAllocation {
        a0: (cand.a0 - d).max(0.0),
        a1: cand.a1,
        a2: cand.a2 + d,
    };
    let rg = |d: f64| p.rates(&shifted(d), beta, link).map(|r| r.r_g);
    if rg(0.0)? >= p.rg_min {
        return Ok((cand, false));
    }
    if rg(cand.a0)? < p.rg_min {
        return Err(Error::Infeasible(Constraint::Qos));
    }
    let (mut lo, mut hi) = (0.0, cand.a0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rg(mid)? >= p.rg_min {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((shifted(hi), true))
}

/// Smallest share of the common rate that gives Grace her minimum rate.
pub fn optimal_beta(alloc: &PowerAllocation, link: &LinkBudget, p: &AllocParams) -> Result<RateAllocation> {
    let r = p.rates(alloc, &RateAllocation::from_beta2(0.0), link)?;
    let need = p.rg_min - r.r_g_s2;
    if need <= 0.0 {
        return Ok(RateAllocation::from_beta2(0.0));
    }
    if !(r.r_c > 0.0) {
        return Err(Error::Infeasible(Constraint::Qos));
    }
    let xi4 = need / r.r_c;
    if xi4 > 1.0 + 1e-12 {
        return Err(Error::Infeasible(Constraint::Qos));
    }
    Ok(RateAllocation::from_beta2(xi4.min(1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NomaOutcome {
    pub alloc: NomaAllocation,
    pub rates: NomaRates,
    pub binding: Constraint,
}

/// NOMA power split: Bob's share is capped by covertness, by Grace's
/// minimum rate and by the weak-user ordering `abar1 <= 1/2`.
pub fn noma_power(link: &LinkBudget, p: &AllocParams) -> Result<NomaOutcome> {
    let xi1 = p.covert_limit()?;
    let gamma = p.rg_min.exp2() - 1.0;
    let pg = link.pt * link.z_ag2;
    if !(pg > 0.0) {
        return Err(Error::Infeasible(Constraint::Qos));
    }
    let xi5 = (pg - gamma * link.sigma2_g) / ((1.0 + gamma) * pg);
    if xi5 < 0.0 {
        return Err(Error::Infeasible(Constraint::Qos));
    }
    let (abar1, binding) = if xi1 <= xi5 && xi1 <= 0.5 {
        (xi1, Constraint::Covertness)
    } else if xi5 <= 0.5 {
        (xi5, Constraint::Qos)
    } else {
        (0.5, Constraint::GainOrdering)
    };
    let alloc = NomaAllocation {
        abar1,
        abar2: 1.0 - abar1,
    };
    let rates = noma_rates(&alloc, link, p.omega)?;
    // Bob has to decode Grace's stream before his own.
    if rates.r_b_sg < p.rg_min {
        return Err(Error::Infeasible(Constraint::GainOrdering));
    }
    Ok(NomaOutcome { alloc, rates, binding })
}

/// Least `|Z_ag|^2` at which Grace reaches her minimum rate under a
/// rate-splitting allocation, searched on `[0, g_max]`. Assumes Bob is
/// the stronger user, so the common rate is Grace's.
pub fn rsma_gain_floor(
    alloc: &PowerAllocation,
    beta: &RateAllocation,
    p: &AllocParams,
    g_max: f64,
) -> Result<f64> {
    let pt = p.pt;
    let s = p.sigma2_g;
    let w = p.omega;
    let rg = |g: f64| {
        let s0 = lg(alloc.a0 * pt * g / ((alloc.a1 + alloc.a2) * pt * g + s));
        let s2 = lg(alloc.a2 * pt * g / ((w * alloc.a0 + alloc.a1) * pt * g + s));
        beta.beta2 * s0 + s2
    };
    if p.rg_min <= 0.0 {
        return Ok(0.0);
    }
    if !(g_max > 0.0) || rg(g_max) < p.rg_min {
        return Err(Error::Infeasible(Constraint::Qos));
    }
    let (mut lo, mut hi) = (0.0, g_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-13 * hi {
            break;
        }
        if rg(mid) >= p.rg_min {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Least `|Z_ag|^2` at which Grace reaches her minimum rate under NOMA.
pub fn noma_gain_floor(alloc: &NomaAllocation, p: &AllocParams) -> Result<f64> {
    let gamma = p.rg_min.exp2() - 1.0;
    let margin = alloc.abar2 - gamma * alloc.abar1;
    if !(margin > 0.0) {
        return Err(Error::Infeasible(Constraint::Qos));
    }
    Ok(gamma * p.sigma2_g / (margin * p.pt))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (AllocParams, LinkBudget) {
        let sc = Scenario::default();
        let pl = sc.path_losses().unwrap();
        let p = AllocParams::new(&sc, &pl);
        let link = p.link(5e-9, 6e-10);
        (p, link)
    }

    fn grid_best(p: &AllocParams, link: &LinkBudget, beta: &RateAllocation, n: usize) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for i in 0..=n {
            for j in 0..=(n - i) {
                let a1 = i as f64 / n as f64;
                let a2 = j as f64 / n as f64;
                let a = PowerAllocation {
                    a0: (1.0 - a1 - a2).max(0.0),
                    a1,
                    a2,
                };
                let r = p.rates(&a, beta, link).unwrap();
                if r.r_g >= p.rg_min && p.madep(&a) >= 1.0 - p.epsilon {
                    best = best.max(r.r_b);
                }
            }
        }
        best
    }

    #[test]
    fn fixed_point_beats_grid() {
        let (p, link) = setup();
        for b2 in [0.0, 0.3, 0.7, 1.0] {
            let beta = RateAllocation::from_beta2(b2);
            let out = algorithm1(&beta, &link, &p, &Alg1Options::default()).unwrap();
            let g = grid_best(&p, &link, &beta, 200);
            assert!(out.rates.r_b >= g - 0.02, "beta2 {b2}: {} vs {g}", out.rates.r_b);
            assert!(out.rates.r_g >= p.rg_min - 1e-9);
            assert!(p.madep(&out.alloc) >= 1.0 - p.epsilon - 1e-9);
            assert!(out.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12 * (1.0 + w[0])));
        }
    }

    #[test]
    fn imperfect_cancellation_stays_feasible() {
        let (p, link) = setup();
        let p = p.with_omega(0.01);
        let beta = RateAllocation::from_beta2(0.5);
        let out = algorithm1(&beta, &link, &p, &Alg1Options::default()).unwrap();
        assert!(out.rates.r_g >= p.rg_min - 1e-9);
    }

    #[test]
    fn beta_meets_rate_exactly() {
        let (p, link) = setup();
        let a = PowerAllocation::new(0.6, 0.3, 0.1).unwrap();
        let b = optimal_beta(&a, &link, &p).unwrap();
        let r = p.rates(&a, &b, &link).unwrap();
        assert!((r.r_g - p.rg_min).abs() < 1e-9 || b.beta2 == 0.0);
    }

    #[test]
    fn weak_grace_is_infeasible() {
        let (p, _) = setup();
        let link = p.link(5e-9, 1e-16);
        let beta = RateAllocation::from_beta2(0.5);
        assert!(matches!(
            algorithm1(&beta, &link, &p, &Alg1Options::default()),
            Err(Error::Infeasible(Constraint::Qos))
        ));
        assert!(noma_power(&link, &p).is_err());
    }

    #[test]
    fn floors_are_tight() {
        let (p, link) = setup();
        let a = PowerAllocation::new(0.5, 0.3, 0.2).unwrap();
        let beta = RateAllocation::from_beta2(0.4);
        let g = rsma_gain_floor(&a, &beta, &p, 1e-9).unwrap();
        let r = p.rates(&a, &beta, &p.link(1e-9, g)).unwrap();
        assert!((r.r_g - p.rg_min).abs() < 1e-9);
        let n = noma_power(&link, &p).unwrap();
        let g = noma_gain_floor(&n.alloc, &p).unwrap();
        let r = noma_rates(&n.alloc, &p.link(1e-9, g), 0.0).unwrap();
        assert!((r.r_g_sg - p.rg_min).abs() < 1e-9);
    }
}

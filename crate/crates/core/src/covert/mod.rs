//! Willie's radiometer: detection error probability, its minimum over the
//! threshold, and the average minimum over the direct-link fading.
//!
//! Willie compares his received power with a threshold `eta`. Without
//! Bob's stream the power is `sigma2 + delta1 (h + X / phi)`, with it
//! `sigma2 + delta2 (h + X / phi)`, where `h = |h_aw|^2` and `X` is the
//! power of the reflected cascade, modelled as exponential with mean
//! `lambda_n`.

mod mc;

pub use mc::{mc_min_dep, mc_min_dep_with, CovertStats, NoiseModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rates::PowerAllocation;
use crate::scenario::{PathLossSet, Scenario};

/// Everything Willie's error probability depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionContext {
    /// `(a0 + a2) P_T / L_aw`.
    pub delta1: f64,
    /// `P_T / L_aw`.
    pub delta2: f64,
    pub phi: f64,
    pub lambda_n: f64,
    pub lambda_aw: f64,
    pub sigma2_w: f64,
    /// Direct-link power gain when conditioning on it.
    pub h_aw2: Option<f64>,
}

impl DetectionContext {
    pub fn new(sc: &Scenario, pl: &PathLossSet, alloc: &PowerAllocation) -> Self {
        let delta2 = sc.pt_mw() / pl.l_aw;
        DetectionContext {
            delta1: alloc.hidden() * delta2,
            delta2,
            phi: pl.phi,
            lambda_n: pl.lambda_n,
            lambda_aw: sc.lambda_aw,
            sigma2_w: sc.sigma2_w(),
            h_aw2: None,
        }
    }

    pub fn with_h(mut self, h_aw2: f64) -> Self {
        self.h_aw2 = Some(h_aw2);
        self
    }

    /// Power fraction hidden under H0 relative to H1, `delta1 / delta2`.
    pub fn ratio(&self) -> f64 {
        self.delta1 / self.delta2
    }

    fn h(&self) -> Result<f64> {
        match self.h_aw2 {
            Some(h) if h >= 0.0 && h.is_finite() => Ok(h),
            Some(h) => Err(Error::domain(format!("channel gain must be non-negative, got {h}"))),
            None => Err(Error::domain("conditional error probability needs h_aw2")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepEval {
    pub p_fa: f64,
    pub p_md: f64,
    pub value: f64,
    /// Set when the reflected-power distribution collapses to a point mass.
    pub degenerate: bool,
}

/// Detection error probability at threshold `eta`, conditioned on `h_aw2`.
pub fn dep(ctx: &DetectionContext, eta: f64) -> Result<DepEval> {
    let h = ctx.h()?;
    if !(ctx.delta2 > 0.0) || !(ctx.delta1 >= 0.0) {
        return Err(Error::domain("power levels must satisfy 0 <= delta1, 0 < delta2"));
    }
    let x = eta - ctx.sigma2_w;
    let degenerate = !(ctx.lambda_n > 0.0);
    let tail = |delta: f64| -> f64 {
        // P(delta (h + X / phi) > x)
        if delta == 0.0 {
            return if x < 0.0 { 1.0 } else { 0.0 };
        }
        let excess = x - delta * h;
        if excess < 0.0 {
            1.0
        } else if degenerate {
            0.0
        } else {
            (-excess * ctx.phi / (delta * ctx.lambda_n)).exp()
        }
    };
    let p_fa = tail(ctx.delta1);
    let p_md = 1.0 - tail(ctx.delta2);
    Ok(DepEval {
        p_fa,
        p_md,
        value: p_fa + p_md,
        degenerate,
    })
}

/// Which side of the piecewise optimum applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRegime {
    /// Strong direct link: the threshold sits at the H1 floor.
    Boundary,
    /// Stationary point of the error curve.
    Interior,
    /// H0 and H1 coincide; every threshold is equally bad.
    Indistinguishable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalThreshold {
    pub eta: f64,
    pub dep: f64,
    pub regime: ThresholdRegime,
}

/// Threshold minimising [`dep`] for the conditioned channel gain.
pub fn optimal_threshold(ctx: &DetectionContext) -> Result<OptimalThreshold> {
    let h = ctx.h()?;
    if !(ctx.lambda_n > 0.0) {
        return Err(Error::domain("optimal threshold needs lambda_n > 0"));
    }
    if !(ctx.delta2 > 0.0) || !(ctx.delta1 >= 0.0) || ctx.delta1 > ctx.delta2 {
        return Err(Error::domain("power levels must satisfy 0 <= delta1 <= delta2, 0 < delta2"));
    }
    let c = ctx.ratio();
    let a1 = 1.0 - c;
    let floor = ctx.sigma2_w + ctx.delta2 * h;
    if a1 < 1e-9 {
        return Ok(OptimalThreshold {
            eta: floor,
            dep: 1.0,
            regime: ThresholdRegime::Indistinguishable,
        });
    }
    if c == 0.0 {
        return Ok(OptimalThreshold {
            eta: floor,
            dep: if h > 0.0 { 0.0 } else { dep(ctx, floor)?.value },
            regime: ThresholdRegime::Boundary,
        });
    }
    let ln_inv_c = -c.ln();
    let t = c * ctx.lambda_n / (a1 * ctx.phi) * ln_inv_c;
    if h >= t {
        let dep = (-a1 * ctx.phi * h / (c * ctx.lambda_n)).exp();
        Ok(OptimalThreshold {
            eta: floor,
            dep,
            regime: ThresholdRegime::Boundary,
        })
    } else {
        let eta = ctx.sigma2_w + ctx.delta1 * ctx.lambda_n / (a1 * ctx.phi) * ln_inv_c;
        let k = c.powf(1.0 / a1) - c.powf(c / a1);
        let dep = 1.0 + k * (ctx.phi * h / ctx.lambda_n).exp();
        Ok(OptimalThreshold {
            eta,
            dep,
            regime: ThresholdRegime::Interior,
        })
    }
}

/// Average of the minimum error probability over `h_aw2 ~ Exp(lambda_aw)`.
///
/// Willie compares `(a0 + a2) P` with the full power `P`, so the value
/// depends on the allocation only through `c = a0 + a2`; the covert
/// fraction enters as `1 - c`, which is `a1` on the unit-sum manifold.
pub fn madep(alloc: &PowerAllocation, ctx: &DetectionContext) -> f64 {
    if alloc.a1 < 1e-9 {
        return 1.0;
    }
    let c = alloc.hidden();
    madep_parts(1.0 - c, c, ctx)
}

fn madep_parts(a1: f64, c: f64, ctx: &DetectionContext) -> f64 {
    if a1 < 1e-9 {
        return 1.0;
    }
    if c < 1e-9 || !(ctx.lambda_n > 0.0) {
        return 0.0;
    }
    let p = ctx.phi * ctx.lambda_aw;
    let ln_c = c.ln();
    let r = c * ctx.lambda_n / (a1 * p);
    let t1 = c * ctx.lambda_n / (a1 * p + c * ctx.lambda_n) * (ln_c * (1.0 + r)).exp();
    let t2 = -(r * ln_c).exp_m1();
    let k = (ln_c / a1).exp() - (c * ln_c / a1).exp();
    let d = ctx.lambda_n - p;
    let x = c * ln_c / (a1 * p);
    let ratio = if d.abs() <= 1e-9 * p {
        -x * (1.0 + 0.5 * d * x)
    } else {
        (d * x).exp_m1() / -d
    };
    let t3 = k * ctx.lambda_n * ratio;
    (t1 + t2 + t3).clamp(0.0, 1.0)
}

/// Largest covert fraction on the unit-sum manifold whose average minimum
/// error probability still reaches `target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MadepInverse {
    pub a1_max: f64,
    pub feasible: bool,
}

pub fn madep_inverse(target: f64, ctx: &DetectionContext) -> MadepInverse {
    if target > 1.0 {
        return MadepInverse {
            a1_max: 0.0,
            feasible: false,
        };
    }
    if target >= 1.0 {
        return MadepInverse {
            a1_max: 0.0,
            feasible: true,
        };
    }
    if target <= 0.0 {
        return MadepInverse {
            a1_max: 1.0,
            feasible: true,
        };
    }
    let f = |a1: f64| {
        let c = 1.0 - a1;
        madep_parts(1.0 - c, c, ctx)
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if f(hi) >= target {
        lo = hi;
    }
    for _ in 0..200 {
        if hi - lo <= f64::EPSILON * hi.max(1e-300) || lo == hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    MadepInverse {
        a1_max: lo,
        feasible: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(a1: f64) -> DetectionContext {
        let sc = Scenario::default();
        let pl = sc.path_losses().unwrap();
        let alloc = PowerAllocation::new(1.0 - a1, a1, 0.0).unwrap();
        DetectionContext::new(&sc, &pl, &alloc)
    }

    #[test]
    fn dep_at_floor_and_far_right() {
        let c = ctx(0.3).with_h(0.5);
        let floor = c.sigma2_w + c.delta2 * 0.5;
        let e = dep(&c, floor).unwrap();
        assert_eq!(e.p_md, 0.0);
        let far = dep(&c, floor * 1e6).unwrap();
        assert!((far.value - 1.0).abs() < 1e-9);
        let below = dep(&c, c.sigma2_w).unwrap();
        assert_eq!(below.value, 1.0);
    }

    #[test]
    fn limits() {
        let c = ctx(0.3);
        assert_eq!(madep(&PowerAllocation::new(1.0, 0.0, 0.0).unwrap(), &c), 1.0);
        assert_eq!(madep(&PowerAllocation::new(0.0, 1.0, 0.0).unwrap(), &c), 0.0);
        let mut z = c;
        z.lambda_n = 0.0;
        assert_eq!(madep(&PowerAllocation::new(0.7, 0.3, 0.0).unwrap(), &z), 0.0);
    }

    #[test]
    fn singular_branch_is_continuous() {
        let mut c = ctx(0.3);
        let a = PowerAllocation::new(0.7, 0.3, 0.0).unwrap();
        c.lambda_n = c.phi * c.lambda_aw;
        let at = madep(&a, &c);
        c.lambda_n *= 1.0 + 1e-6;
        let near = madep(&a, &c);
        assert!((at - near).abs() < 1e-6, "{at} vs {near}");
    }

    #[test]
    fn inverse_edges() {
        let c = ctx(0.3);
        assert_eq!(madep_inverse(1.0, &c).a1_max, 0.0);
        assert!(!madep_inverse(1.5, &c).feasible);
        assert_eq!(madep_inverse(0.0, &c).a1_max, 1.0);
        let inv = madep_inverse(0.95, &c);
        let on = |a1: f64| madep(&PowerAllocation::new(1.0 - a1, a1, 0.0).unwrap(), &c);
        assert!(on(inv.a1_max) >= 0.95);
        assert!(on(inv.a1_max * (1.0 + 1e-9)) < 0.95);
    }

    #[test]
    fn indistinguishable_hypotheses() {
        let mut c = ctx(0.3).with_h(1.0);
        c.delta1 = c.delta2;
        let t = optimal_threshold(&c).unwrap();
        assert_eq!(t.regime, ThresholdRegime::Indistinguishable);
        assert_eq!(t.dep, 1.0);
    }
}

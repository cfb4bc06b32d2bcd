//! Achievable rates of the rate-splitting and NOMA downlinks, in bps/Hz.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Power fractions of the common stream, Bob's covert stream and
/// Grace's private stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl PowerAllocation {
    pub fn new(a0: f64, a1: f64, a2: f64) -> Result<Self> {
        let p = PowerAllocation { a0, a1, a2 };
        p.check()?;
        Ok(p)
    }

    pub fn sum(&self) -> f64 {
        self.a0 + self.a1 + self.a2
    }

    /// Fraction radiated when Bob's stream is off.
    pub fn hidden(&self) -> f64 {
        self.a0 + self.a2
    }

    fn check(&self) -> Result<()> {
        for v in [self.a0, self.a1, self.a2] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::domain(format!("power fraction must be non-negative, got {v}")));
            }
        }
        if self.sum() > 1.0 + 1e-9 {
            return Err(Error::domain(format!("power fractions sum to {} > 1", self.sum())));
        }
        Ok(())
    }
}

/// Split of the common rate between Bob (`beta1`) and Grace (`beta2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateAllocation {
    pub beta1: f64,
    pub beta2: f64,
}

impl RateAllocation {
    pub fn from_beta2(beta2: f64) -> Self {
        RateAllocation {
            beta1: 1.0 - beta2,
            beta2,
        }
    }
}

/// Link budget of one channel realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub pt: f64,
    pub z_ab2: f64,
    pub z_ag2: f64,
    pub sigma2_b: f64,
    pub sigma2_g: f64,
}

impl LinkBudget {
    fn check(&self) -> Result<()> {
        for (name, v) in [
            ("pt", self.pt),
            ("z_ab2", self.z_ab2),
            ("z_ag2", self.z_ag2),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::domain(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(self.sigma2_b > 0.0) || !(self.sigma2_g > 0.0) {
            return Err(Error::domain("noise powers must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub r_b_s0: f64,
    pub r_g_s0: f64,
    pub r_b_s1: f64,
    pub r_g_s2: f64,
    /// Common rate `min(r_b_s0, r_g_s0)`.
    pub r_c: f64,
    /// Bob's total (covert) rate.
    pub r_b: f64,
    /// Grace's total rate.
    pub r_g: f64,
}

fn lg(sinr: f64) -> f64 {
    sinr.ln_1p() / std::f64::consts::LN_2
}

/// Rate-splitting rates; `omega` is the residual fraction of the common
/// stream left after imperfect cancellation (0 for perfect SIC).
pub fn rsma_rates(
    alloc: &PowerAllocation,
    beta: &RateAllocation,
    link: &LinkBudget,
    omega: f64,
) -> Result<RateReport> {
    alloc.check()?;
    link.check()?;
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::domain(format!("omega must lie in [0, 1], got {omega}")));
    }
    let PowerAllocation { a0, a1, a2 } = *alloc;
    let pb = link.pt * link.z_ab2;
    let pg = link.pt * link.z_ag2;
    let r_b_s0 = lg(a0 * pb / ((a1 + a2) * pb + link.sigma2_b));
    let r_g_s0 = lg(a0 * pg / ((a1 + a2) * pg + link.sigma2_g));
    let r_b_s1 = lg(a1 * pb / ((omega * a0 + a2) * pb + link.sigma2_b));
    let r_g_s2 = lg(a2 * pg / ((omega * a0 + a1) * pg + link.sigma2_g));
    let r_c = r_b_s0.min(r_g_s0);
    Ok(RateReport {
        r_b_s0,
        r_g_s0,
        r_b_s1,
        r_g_s2,
        r_c,
        r_b: beta.beta1 * r_c + r_b_s1,
        r_g: beta.beta2 * r_c + r_g_s2,
    })
}

/// Power split of the NOMA baseline: Bob gets `abar1`, Grace `abar2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NomaAllocation {
    pub abar1: f64,
    pub abar2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NomaRates {
    /// Bob decoding his own stream after cancelling Grace's.
    pub r_b_sb: f64,
    /// Bob decoding Grace's stream (first SIC stage).
    pub r_b_sg: f64,
    /// Grace decoding her own stream.
    pub r_g_sg: f64,
}

pub fn noma_rates(alloc: &NomaAllocation, link: &LinkBudget, omega: f64) -> Result<NomaRates> {
    link.check()?;
    let NomaAllocation { abar1, abar2 } = *alloc;
    if !(abar1 >= 0.0) || !(abar2 >= 0.0) || abar1 + abar2 > 1.0 + 1e-9 {
        return Err(Error::domain(format!("invalid NOMA split ({abar1}, {abar2})")));
    }
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::domain(format!("omega must lie in [0, 1], got {omega}")));
    }
    let pb = link.pt * link.z_ab2;
    let pg = link.pt * link.z_ag2;
    Ok(NomaRates {
        r_b_sb: lg(abar1 * pb / (omega * abar2 * pb + link.sigma2_b)),
        r_b_sg: lg(abar2 * pb / (abar1 * pb + link.sigma2_b)),
        r_g_sg: lg(abar2 * pg / (abar1 * pg + link.sigma2_g)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link() -> LinkBudget {
        LinkBudget {
            pt: 100.0,
            z_ab2: 1e-9,
            z_ag2: 4e-10,
            sigma2_b: 1e-12,
            sigma2_g: 1e-12,
        }
    }

    #[test]
    fn all_common() {
        let a = PowerAllocation::new(1.0, 0.0, 0.0).unwrap();
        let r = rsma_rates(&a, &RateAllocation::from_beta2(0.5), &link(), 0.0).unwrap();
        assert_eq!(r.r_b_s1, 0.0);
        assert_eq!(r.r_g_s2, 0.0);
        let snr_g: f64 = 100.0 * 4e-10 / 1e-12;
        assert!((r.r_c - (1.0 + snr_g).log2()).abs() < 1e-12);
    }

    #[test]
    fn chain_rule_at_bob() {
        let a = PowerAllocation::new(0.3, 0.7, 0.0).unwrap();
        let r = rsma_rates(&a, &RateAllocation::from_beta2(0.0), &link(), 0.0).unwrap();
        let snr_b: f64 = 100.0 * 1e-9 / 1e-12;
        assert!((r.r_b_s0 + r.r_b_s1 - (1.0 + snr_b).log2()).abs() < 1e-9);
    }

    #[test]
    fn imperfect_sic_lowers_private() {
        let a = PowerAllocation::new(0.5, 0.3, 0.2).unwrap();
        let b = RateAllocation::from_beta2(0.5);
        let p = rsma_rates(&a, &b, &link(), 0.0).unwrap();
        let q = rsma_rates(&a, &b, &link(), 0.01).unwrap();
        assert!(q.r_b_s1 < p.r_b_s1);
        assert!(q.r_g_s2 < p.r_g_s2);
        assert_eq!(q.r_c, p.r_c);
    }

    #[test]
    fn noma_cancellation() {
        let n = noma_rates(&NomaAllocation { abar1: 0.2, abar2: 0.8 }, &link(), 0.0).unwrap();
        let snr_b: f64 = 100.0 * 1e-9 / 1e-12;
        assert!((n.r_b_sb + n.r_b_sg - (1.0 + snr_b).log2()).abs() < 1e-9);
    }

    #[test]
    fn domain_errors() {
        let a = PowerAllocation { a0: 0.5, a1: 0.5, a2: 0.5 };
        assert!(rsma_rates(&a, &RateAllocation::from_beta2(0.5), &link(), 0.0).is_err());
        let mut l = link();
        l.z_ab2 = -1.0;
        let a = PowerAllocation::new(0.5, 0.5, 0.0).unwrap();
        assert!(rsma_rates(&a, &RateAllocation::from_beta2(0.5), &l, 0.0).is_err());
    }
}

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DetectionContext;
use crate::error::{Error, Result};

/// Distribution used for the reflected power `X` at Willie.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NoiseModel {
    /// Exponential with mean `lambda_n`.
    Exponential,
    /// `|sum_k conj(h_ar,k) exp(j theta_k) h_rw,k|^2` with independent
    /// Rayleigh factors and uniform phases. Diagnostic only.
    Cascade {
        k_n: usize,
        lambda_ar: f64,
        lambda_rw: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovertStats {
    /// False alarm rate at each realization's empirical optimum, averaged.
    pub p_fa: f64,
    /// Missed detection rate at the same thresholds, averaged.
    pub p_md: f64,
    /// Average empirical minimum error probability.
    pub dep: f64,
    /// Same as `dep`; kept separate so conditioned runs read naturally.
    pub madep: f64,
    pub stderr: f64,
    pub n_channel: usize,
    pub n_noise: usize,
}

/// Monte Carlo estimate of the average minimum detection error
/// probability with exponential reflected power.
pub fn mc_min_dep<R: Rng + ?Sized>(
    ctx: &DetectionContext,
    n_channel: usize,
    n_noise: usize,
    rng: &mut R,
) -> Result<CovertStats> {
    mc_min_dep_with(ctx, n_channel, n_noise, NoiseModel::Exponential, rng)
}

const BLOCK: usize = 256;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Default, Clone, Copy)]
struct Acc {
    dep: f64,
    dep2: f64,
    p_fa: f64,
    p_md: f64,
}

/// Same as [`mc_min_dep`] with a selectable reflected-power model.
///
/// For each direct-link draw `h` (stratified over its quantiles, or fixed
/// when `ctx.h_aw2` is set) a sample of `n_noise` reflected powers is
/// drawn and shared by both hypotheses. The empirical error curve is then
/// minimised exactly over every threshold the sample distinguishes.
pub fn mc_min_dep_with<R: Rng + ?Sized>(
    ctx: &DetectionContext,
    n_channel: usize,
    n_noise: usize,
    model: NoiseModel,
    rng: &mut R,
) -> Result<CovertStats> {
    if n_channel == 0 || n_noise == 0 {
        return Err(Error::domain("sample counts must be positive"));
    }
    if !(ctx.delta2 > 0.0) || !(ctx.delta1 >= 0.0) || ctx.delta1 > ctx.delta2 {
        return Err(Error::domain("power levels must satisfy 0 <= delta1 <= delta2, 0 < delta2"));
    }
    if let Some(h) = ctx.h_aw2 {
        if !(h >= 0.0) {
            return Err(Error::domain(format!("channel gain must be non-negative, got {h}")));
        }
    }
    let base = rng.next_u64();
    let n_blocks = n_channel.div_ceil(BLOCK);
    let parts: Vec<Acc> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut r = SmallRng::seed_from_u64(splitmix(base ^ splitmix(b as u64)));
            let mut xs = vec![0.0f64; n_noise];
            let mut acc = Acc::default();
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(n_channel);
            for i in lo..hi {
                let h = match ctx.h_aw2 {
                    Some(h) => h,
                    None => {
                        let u = (i as f64 + r.random::<f64>()) / n_channel as f64;
                        -ctx.lambda_aw * (-u).ln_1p()
                    }
                };
                draw_sorted(&mut xs, ctx.lambda_n, model, &mut r);
                let (d, fa, md) = empirical_min(&xs, h * ctx.phi, ctx.ratio());
                acc.dep += d;
                acc.dep2 += d * d;
                acc.p_fa += fa;
                acc.p_md += md;
            }
            acc
        })
        .collect();
    let mut tot = Acc::default();
    for p in parts {
        tot.dep += p.dep;
        tot.dep2 += p.dep2;
        tot.p_fa += p.p_fa;
        tot.p_md += p.p_md;
    }
    let n = n_channel as f64;
    let mean = tot.dep / n;
    let var = if n_channel > 1 {
        ((tot.dep2 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(CovertStats {
        p_fa: tot.p_fa / n,
        p_md: tot.p_md / n,
        dep: mean,
        madep: mean,
        stderr: (var / n).sqrt(),
        n_channel,
        n_noise,
    })
}

/// Fill `xs` with an ascending sample of the reflected power.
fn draw_sorted<R: Rng + ?Sized>(xs: &mut [f64], mean: f64, model: NoiseModel, r: &mut R) {
    let n = xs.len();
    match model {
        NoiseModel::Exponential => {
            // Renyi representation of exponential order statistics.
            let mut acc = 0.0;
            for (j, x) in xs.iter_mut().enumerate() {
                let e: f64 = Exp1.sample(r);
                acc += e / (n - j) as f64;
                *x = mean * acc;
            }
        }
        NoiseModel::Cascade {
            k_n,
            lambda_ar,
            lambda_rw,
        } => {
            let s = (lambda_ar * lambda_rw).sqrt() / 2.0;
            for x in xs.iter_mut() {
                let (mut re, mut im) = (0.0, 0.0);
                for _ in 0..k_n {
                    let (ar, ai): (f64, f64) = (StandardNormal.sample(r), StandardNormal.sample(r));
                    let (wr, wi): (f64, f64) = (StandardNormal.sample(r), StandardNormal.sample(r));
                    let t: f64 = r.random::<f64>() * std::f64::consts::TAU;
                    let (ps, pc) = t.sin_cos();
                    // conj(a) * e^{jt} * w
                    let (cr, ci) = (ar * pc + ai * ps, ar * ps - ai * pc);
                    re += cr * wr - ci * wi;
                    im += cr * wi + ci * wr;
                }
                *x = s * s * (re * re + im * im);
            }
            xs.sort_unstable_by(f64::total_cmp);
        }
    }
}

/// Minimum over thresholds of `P(c (s + X) > y) + P(s + X < y)` under the
/// empirical distribution of the sorted sample `xs`.
///
/// Returns `(dep, p_fa, p_md)`.
fn empirical_min(xs: &[f64], s: f64, c: f64) -> (f64, f64, f64) {
    let n = xs.len();
    if c <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if c >= 1.0 {
        return (1.0, 1.0, 0.0);
    }
    // With u = y - s, false alarms are X > u / c + b and misses X < u.
    let b = s * (1.0 - c) / c;
    let inv_n = 1.0 / n as f64;
    let mut best = (1.0, 0.0, 1.0);
    let mut j = 0usize;
    for (i, &x) in xs.iter().enumerate() {
        let t = x / c + b;
        while j < n && xs[j] <= t {
            j += 1;
        }
        let p_fa = (n - j) as f64 * inv_n;
        let p_md = i as f64 * inv_n;
        let d = p_fa + p_md;
        if d < best.0 {
            best = (d, p_fa, p_md);
            if d == 0.0 {
                break;
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_min_separated() {
        let xs = [0.0, 0.1, 0.2];
        let (d, _, _) = empirical_min(&xs, 10.0, 0.5);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn empirical_min_brute_force() {
        let mut r = SmallRng::seed_from_u64(3);
        let mut xs = vec![0.0; 200];
        draw_sorted(&mut xs, 2.0, NoiseModel::Exponential, &mut r);
        for w in xs.windows(2) {
            assert!(w[0] <= w[1]);
        }
        let (s, c) = (0.7, 0.4);
        let (d, fa, md) = empirical_min(&xs, s, c);
        assert!((d - fa - md).abs() < 1e-15);
        let n = xs.len() as f64;
        let mut brute = 1.0f64;
        let mut cands: Vec<f64> = xs.iter().map(|x| s + x).collect();
        cands.extend(xs.iter().map(|x| c * (s + x)));
        for &y0 in &cands {
            for y in [y0 - 1e-12, y0, y0 + 1e-12] {
                let fa = xs.iter().filter(|&&x| c * (s + x) > y).count() as f64 / n;
                let md = xs.iter().filter(|&&x| s + x < y).count() as f64 / n;
                brute = brute.min(fa + md);
            }
        }
        assert!((d - brute).abs() < 1e-12, "{d} vs {brute}");
    }
}

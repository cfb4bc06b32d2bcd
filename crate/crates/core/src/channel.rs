//! Small-scale fading draws, composite channel gains and the lifted
//! quadratic form used by the beamforming relaxation.
//!
//! Phase convention: element `k` applies `exp(j theta_k)`. The lifted
//! vector stores the conjugate, `u_k = exp(-j theta_k)`, with a trailing
//! 1 on the reflection side so that `|Z_ab|^2 = u^H a a^H u`.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{PathLossSet, Scenario};
use crate::C64;

/// One draw of every small-scale fading coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub h_ab: C64,
    pub h_aw: C64,
    /// Alice to the reflecting elements.
    pub h_ar1: Vec<C64>,
    /// Alice to the transmitting elements.
    pub h_ar2: Vec<C64>,
    pub h_rb: Vec<C64>,
    pub h_rg: Vec<C64>,
    pub h_rw: Vec<C64>,
}

/// Squared composite channel magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeGains {
    pub z_ab2: f64,
    pub z_ag2: f64,
    /// Direct-link part of Bob's channel, `|h_ab|^2 / L_ab`.
    pub nu_b2: f64,
}

/// Quadratic-form data of the beamforming problem.
#[derive(Debug, Clone)]
pub struct LiftedChannel {
    /// Per-element cascaded coefficients towards Bob.
    pub lambda_b: DVector<C64>,
    /// Per-element cascaded coefficients towards Grace.
    pub lambda_g: DVector<C64>,
    pub nu_b: C64,
    /// `(K_n + 1)`-square; `Tr(H_b U_r) + |nu_b|^2 = |Z_ab|^2` for rank-one `U_r`.
    pub h_b: DMatrix<C64>,
    /// `K_m`-square; `Tr(H_g U_t) = |Z_ag|^2` for rank-one `U_t`.
    pub h_g: DMatrix<C64>,
}

fn cn<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(s * re, s * im)
}

fn cn_vec<R: Rng + ?Sized>(rng: &mut R, n: usize, var: f64) -> Vec<C64> {
    (0..n).map(|_| cn(rng, var)).collect()
}

/// Draw a realization. The draw order is fixed so a given RNG state
/// always produces the same coefficients.
pub fn sample_channels<R: Rng + ?Sized>(sc: &Scenario, rng: &mut R) -> ChannelRealization {
    let h_ab = cn(rng, sc.lambda_ab);
    let h_aw = cn(rng, sc.lambda_aw);
    let h_ar1 = cn_vec(rng, sc.k_n, sc.lambda_ar);
    let h_ar2 = cn_vec(rng, sc.k_m, sc.lambda_ar);
    let h_rb = cn_vec(rng, sc.k_n, sc.lambda_rb);
    let h_rg = cn_vec(rng, sc.k_m, sc.lambda_rg);
    let h_rw = cn_vec(rng, sc.k_n, sc.lambda_rw);
    ChannelRealization {
        h_ab,
        h_aw,
        h_ar1,
        h_ar2,
        h_rb,
        h_rg,
        h_rw,
    }
}

/// Uniform phases on `[0, 2 pi)`.
pub fn random_phases<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>() * 2.0 * PI).collect()
}

impl ChannelRealization {
    pub fn k_n(&self) -> usize {
        self.h_ar1.len()
    }

    pub fn k_m(&self) -> usize {
        self.h_ar2.len()
    }

    /// Copy keeping only the direct links; used by the no-RIS baseline.
    pub fn without_ris(&self) -> ChannelRealization {
        ChannelRealization {
            h_ab: self.h_ab,
            h_aw: self.h_aw,
            h_ar1: Vec::new(),
            h_ar2: Vec::new(),
            h_rb: Vec::new(),
            h_rg: Vec::new(),
            h_rw: Vec::new(),
        }
    }

    fn check(&self) -> Result<()> {
        let (n, m) = (self.h_ar1.len(), self.h_ar2.len());
        if self.h_rb.len() != n || self.h_rw.len() != n || self.h_rg.len() != m {
            return Err(Error::domain("inconsistent element counts in channel realization"));
        }
        Ok(())
    }

    /// Write as CSV rows `vector,index,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "vector,index,re,im")?;
        let mut row = |name: &str, i: usize, z: &C64| writeln!(w, "{name},{i},{:e},{:e}", z.re, z.im);
        row("h_ab", 0, &self.h_ab)?;
        row("h_aw", 0, &self.h_aw)?;
        for (name, v) in self.named_vectors() {
            for (i, z) in v.iter().enumerate() {
                row(name, i, z)?;
            }
        }
        Ok(())
    }

    fn named_vectors(&self) -> [(&'static str, &Vec<C64>); 5] {
        [
            ("h_ar1", &self.h_ar1),
            ("h_ar2", &self.h_ar2),
            ("h_rb", &self.h_rb),
            ("h_rg", &self.h_rg),
            ("h_rw", &self.h_rw),
        ]
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<ChannelRealization> {
        let mut out = ChannelRealization {
            h_ab: C64::new(0.0, 0.0),
            h_aw: C64::new(0.0, 0.0),
            h_ar1: Vec::new(),
            h_ar2: Vec::new(),
            h_rb: Vec::new(),
            h_rg: Vec::new(),
            h_rw: Vec::new(),
        };
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if i == 0 {
                if line.trim() != "vector,index,re,im" {
                    return Err(Error::Parse(format!("unexpected channel header `{line}`")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("line {}: expected 4 fields", i + 1)));
            }
            let bad = |_| Error::Parse(format!("line {}: malformed number", i + 1));
            let idx: usize = f[1].trim().parse().map_err(|_| Error::Parse(format!("line {}: bad index", i + 1)))?;
            let z = C64::new(f[2].trim().parse().map_err(bad)?, f[3].trim().parse().map_err(bad)?);
            let slot = match f[0] {
                "h_ab" => {
                    out.h_ab = z;
                    continue;
                }
                "h_aw" => {
                    out.h_aw = z;
                    continue;
                }
                "h_ar1" => &mut out.h_ar1,
                "h_ar2" => &mut out.h_ar2,
                "h_rb" => &mut out.h_rb,
                "h_rg" => &mut out.h_rg,
                "h_rw" => &mut out.h_rw,
                other => return Err(Error::Parse(format!("line {}: unknown vector `{other}`", i + 1))),
            };
            if idx != slot.len() {
                return Err(Error::Parse(format!("line {}: index out of order", i + 1)));
            }
            slot.push(z);
        }
        out.check()?;
        Ok(out)
    }
}

fn cascaded(h_ar: &[C64], h_r: &[C64], scale: f64) -> DVector<C64> {
    DVector::from_iterator(h_ar.len(), h_ar.iter().zip(h_r).map(|(a, b)| a.conj() * b * scale))
}

/// Composite gains for given element phases.
pub fn composite_gains(
    ch: &ChannelRealization,
    theta_r: &[f64],
    theta_t: &[f64],
    pl: &PathLossSet,
) -> Result<CompositeGains> {
    ch.check()?;
    if theta_r.len() != ch.k_n() || theta_t.len() != ch.k_m() {
        return Err(Error::domain(format!(
            "phase vector lengths ({}, {}) do not match element counts ({}, {})",
            theta_r.len(),
            theta_t.len(),
            ch.k_n(),
            ch.k_m()
        )));
    }
    let sb = 1.0 / (pl.l_ar * pl.l_rb).sqrt();
    let sg = 1.0 / (pl.l_ar * pl.l_rg).sqrt();
    let nu = ch.h_ab / pl.l_ab.sqrt();
    let mut zb = nu;
    for ((a, t), r) in ch.h_ar1.iter().zip(theta_r).zip(&ch.h_rb) {
        zb += a.conj() * C64::from_polar(1.0, *t) * r * sb;
    }
    let mut zg = C64::new(0.0, 0.0);
    for ((a, t), r) in ch.h_ar2.iter().zip(theta_t).zip(&ch.h_rg) {
        zg += a.conj() * C64::from_polar(1.0, *t) * r * sg;
    }
    Ok(CompositeGains {
        z_ab2: zb.norm_sqr(),
        z_ag2: zg.norm_sqr(),
        nu_b2: nu.norm_sqr(),
    })
}

pub fn build_lifted(ch: &ChannelRealization, pl: &PathLossSet) -> Result<LiftedChannel> {
    ch.check()?;
    let n = ch.k_n();
    let lambda_b = cascaded(&ch.h_ar1, &ch.h_rb, 1.0 / (pl.l_ar * pl.l_rb).sqrt());
    let lambda_g = cascaded(&ch.h_ar2, &ch.h_rg, 1.0 / (pl.l_ar * pl.l_rg).sqrt());
    let nu_b = ch.h_ab / pl.l_ab.sqrt();
    let a = augmented(&lambda_b, nu_b);
    let mut h_b = &a * a.adjoint();
    h_b[(n, n)] = C64::new(0.0, 0.0);
    let h_g = &lambda_g * lambda_g.adjoint();
    Ok(LiftedChannel {
        lambda_b,
        lambda_g,
        nu_b,
        h_b,
        h_g,
    })
}

fn augmented(lambda_b: &DVector<C64>, nu_b: C64) -> DVector<C64> {
    let n = lambda_b.len();
    DVector::from_fn(n + 1, |i, _| if i < n { lambda_b[i] } else { nu_b })
}

impl LiftedChannel {
    /// `[lambda_b; nu_b]`, so that `|Z_ab|^2 = |u_r^H a|^2`.
    pub fn a_b(&self) -> DVector<C64> {
        augmented(&self.lambda_b, self.nu_b)
    }

    /// Largest achievable `|Z_ab|^2`, reached when every reflected path
    /// aligns with the direct path.
    pub fn max_gain_b(&self) -> f64 {
        let s: f64 = self.lambda_b.iter().map(|z| z.norm()).sum::<f64>() + self.nu_b.norm();
        s * s
    }

    pub fn max_gain_g(&self) -> f64 {
        let s: f64 = self.lambda_g.iter().map(|z| z.norm()).sum();
        s * s
    }

    /// Phases that co-phase every reflected path with the direct one.
    pub fn cophase_r(&self) -> Vec<f64> {
        let ref_arg = if self.nu_b.norm() > 0.0 { self.nu_b.arg() } else { 0.0 };
        self.lambda_b.iter().map(|l| wrap(ref_arg - l.arg())).collect()
    }

    pub fn cophase_t(&self) -> Vec<f64> {
        self.lambda_g.iter().map(|l| wrap(-l.arg())).collect()
    }
}

/// Wrap to `[0, 2 pi)`.
pub fn wrap(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t >= 2.0 * PI {
        0.0
    } else {
        t
    }
}

/// Lifted reflection vector `[exp(-j theta); 1]`.
pub fn lift_r(theta_r: &[f64]) -> DVector<C64> {
    let n = theta_r.len();
    DVector::from_fn(n + 1, |i, _| if i < n { C64::from_polar(1.0, -theta_r[i]) } else { C64::new(1.0, 0.0) })
}

/// Lifted transmission vector `exp(-j theta)`.
pub fn lift_t(theta_t: &[f64]) -> DVector<C64> {
    DVector::from_iterator(theta_t.len(), theta_t.iter().map(|t| C64::from_polar(1.0, -t)))
}

/// Phases encoded by a lifted reflection vector, normalised by its last entry.
pub fn unlift_r(u: &DVector<C64>) -> Vec<f64> {
    let n = u.len() - 1;
    let r = u[n].arg();
    (0..n).map(|k| wrap(r - u[k].arg())).collect()
}

/// Phases encoded by a lifted transmission vector; the common phase is
/// removed by pinning element 0.
pub fn unlift_t(u: &DVector<C64>) -> Vec<f64> {
    if u.is_empty() {
        return Vec::new();
    }
    let r = u[0].arg();
    (0..u.len()).map(|k| wrap(r - u[k].arg())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64) -> (Scenario, PathLossSet, ChannelRealization) {
        let sc = Scenario::default();
        let pl = sc.path_losses().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = sample_channels(&sc, &mut rng);
        (sc, pl, ch)
    }

    #[test]
    fn same_seed_same_draw() {
        let (_, _, a) = setup(9);
        let (_, _, b) = setup(9);
        assert_eq!(a, b);
        let (_, _, c) = setup(10);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_phases_sum_of_paths() {
        let (_, pl, ch) = setup(3);
        let g = composite_gains(&ch, &vec![0.0; 32], &vec![0.0; 32], &pl).unwrap();
        let mut zb = ch.h_ab / pl.l_ab.sqrt();
        for k in 0..32 {
            zb += ch.h_ar1[k].conj() * ch.h_rb[k] / (pl.l_ar * pl.l_rb).sqrt();
        }
        assert!((g.z_ab2 - zb.norm_sqr()).abs() <= 1e-12 * zb.norm_sqr());
    }

    #[test]
    fn lifted_matches_direct() {
        let (_, pl, ch) = setup(4);
        let lf = build_lifted(&ch, &pl).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tr = random_phases(32, &mut rng);
        let tt = random_phases(32, &mut rng);
        let g = composite_gains(&ch, &tr, &tt, &pl).unwrap();
        let ur = lift_r(&tr);
        let ut = lift_t(&tt);
        let qb = (ur.adjoint() * &lf.h_b * &ur)[(0, 0)].re + lf.nu_b.norm_sqr();
        let qg = (ut.adjoint() * &lf.h_g * &ut)[(0, 0)].re;
        assert!((qb - g.z_ab2).abs() <= 1e-10 * g.z_ab2);
        assert!((qg - g.z_ag2).abs() <= 1e-10 * g.z_ag2);
    }

    #[test]
    fn cophase_reaches_bound() {
        let (_, pl, ch) = setup(6);
        let lf = build_lifted(&ch, &pl).unwrap();
        let g = composite_gains(&ch, &lf.cophase_r(), &lf.cophase_t(), &pl).unwrap();
        assert!((g.z_ab2 - lf.max_gain_b()).abs() <= 1e-10 * g.z_ab2);
        assert!((g.z_ag2 - lf.max_gain_g()).abs() <= 1e-10 * g.z_ag2);
    }

    #[test]
    fn lift_roundtrip() {
        let th = vec![0.1, 3.0, 6.2];
        let back = unlift_r(&lift_r(&th));
        for (a, b) in th.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn length_mismatch() {
        let (_, pl, ch) = setup(1);
        assert!(composite_gains(&ch, &[0.0; 3], &vec![0.0; 32], &pl).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let (_, _, ch) = setup(8);
        let mut buf = Vec::new();
        ch.write_csv(&mut buf).unwrap();
        let back = ChannelRealization::read_csv(&buf[..]).unwrap();
        assert_eq!(ch, back);
    }
}

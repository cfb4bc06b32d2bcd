//! Phase design for the reflecting and transmitting elements through a
//! semidefinite relaxation with a rank-one penalty.
//!
//! `U_r` (size `K_n + 1`) and `U_t` (size `K_m`) are unit-diagonal PSD
//! matrices. Rank-one solutions correspond to phase vectors. The penalty
//! `||U||_* - ||U||_2` is linearised at the current iterate, which turns
//! each step into an ordinary SDP.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channel::{lift_r, lift_t, unlift_r, unlift_t, LiftedChannel};
use crate::error::{Constraint, Error, Result};
use crate::linalg::{leading_eig, rank_gap, trace_re};
use crate::sdp::{self, SdpOptions, SdpProblem, SdpStatus, SymMat};
use crate::C64;

#[derive(Debug, Clone)]
pub struct BeamformingState {
    pub u_r: DMatrix<C64>,
    pub u_t: DMatrix<C64>,
    pub theta_r: Vec<f64>,
    pub theta_t: Vec<f64>,
    /// `sum (||U||_* - ||U||_2)` over both blocks.
    pub rank_gap: f64,
}

impl BeamformingState {
    pub fn from_phases(theta_r: &[f64], theta_t: &[f64]) -> Self {
        let ur = lift_r(theta_r);
        let ut = lift_t(theta_t);
        BeamformingState {
            u_r: &ur * ur.adjoint(),
            u_t: &ut * ut.adjoint(),
            theta_r: theta_r.to_vec(),
            theta_t: theta_t.to_vec(),
            rank_gap: 0.0,
        }
    }
}

pub fn penalty_value(u_r: &DMatrix<C64>, u_t: &DMatrix<C64>) -> f64 {
    rank_gap(u_r) + rank_gap(u_t)
}

/// Affine upper bound of `-||U||_2` built at a reference point.
#[derive(Debug, Clone)]
pub struct SpectralSurrogate {
    pub norm_ref: f64,
    pub v: DVector<C64>,
    /// The leading eigenvalue at the reference point was not simple.
    pub tie: bool,
}

pub fn surrogate_spectral(u_ref: &DMatrix<C64>) -> SpectralSurrogate {
    let l = leading_eig(u_ref);
    SpectralSurrogate {
        norm_ref: l.value,
        v: l.vector,
        tie: l.tie,
    }
}

impl SpectralSurrogate {
    /// `-||U_ref||_2 - Re Tr(v v^H (U - U_ref))`; never below `-||U||_2`.
    pub fn eval(&self, u: &DMatrix<C64>) -> f64 {
        let q = (self.v.adjoint() * u * &self.v)[(0, 0)].re;
        -q
    }

    fn matrix(&self) -> DMatrix<C64> {
        &self.v * self.v.adjoint()
    }
}

/// Leading-eigenvector phases of both blocks.
pub fn extract_phases(u_r: &DMatrix<C64>, u_t: &DMatrix<C64>) -> (Vec<f64>, Vec<f64>) {
    (unlift_r(&leading_eig(u_r).vector), unlift_t(&leading_eig(u_t).vector))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PscaOptions {
    pub rho0: f64,
    pub c1: f64,
    pub zeta2: f64,
    /// Cap on penalty-weight reductions.
    pub max_levels: usize,
    /// Surrogate refreshes per penalty weight.
    pub max_inner: usize,
    /// Solve the unpenalised relaxation first and start from it.
    pub presolve: bool,
    pub sdp: SdpOptions,
}

impl Default for PscaOptions {
    fn default() -> Self {
        PscaOptions {
            rho0: 10.0,
            c1: 0.5,
            zeta2: 1e-4,
            max_levels: 60,
            max_inner: 1,
            presolve: true,
            sdp: SdpOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// Both gains are rewarded.
    Rsma,
    /// Only Bob's gain is rewarded; Grace's only has to meet the floor.
    Noma,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PscaRecord {
    pub level: usize,
    pub rho: f64,
    /// Design objective in channel units (`|Z_ab|^2` and, for rate
    /// splitting, `|Z_ag|^2` evaluated on the matrices).
    pub objective: f64,
    /// Objective of the penalised problem, normalised units.
    pub penalized: f64,
    pub penalty_value: f64,
    pub sdp_status: SdpStatus,
    pub joint: bool,
}

#[derive(Debug, Clone)]
pub struct PscaOutcome {
    pub state: BeamformingState,
    pub trace: Vec<PscaRecord>,
    /// Relative objective drop from the matrices to the extracted phases.
    pub gain_loss: f64,
    pub converged: bool,
}

/// Rate-splitting design: maximise `|Z_ab|^2 + |Z_ag|^2` subject to
/// `|Z_ag|^2 >= floor_g` and `|Z_ab|^2 >= |Z_ag|^2`.
pub fn psca_rsma(
    lf: &LiftedChannel,
    floor_g: f64,
    state0: &BeamformingState,
    opts: &PscaOptions,
) -> Result<PscaOutcome> {
    psca(lf, floor_g, state0, opts, Design::Rsma)
}

/// NOMA design: maximise `|Z_ab|^2` subject to the same constraints.
pub fn psca_noma(
    lf: &LiftedChannel,
    floor_g: f64,
    state0: &BeamformingState,
    opts: &PscaOptions,
) -> Result<PscaOutcome> {
    psca(lf, floor_g, state0, opts, Design::Noma)
}

struct Normalized {
    h_b: DMatrix<C64>,
    h_g: DMatrix<C64>,
    nu2: f64,
    floor: f64,
}

fn objective(d: Design, nz: &Normalized, u_r: &DMatrix<C64>, u_t: &DMatrix<C64>) -> f64 {
    let b = trace_re(&nz.h_b, u_r) + nz.nu2;
    match d {
        Design::Rsma => b + trace_re(&nz.h_g, u_t),
        Design::Noma => b,
    }
}

fn psca(
    lf: &LiftedChannel,
    floor_g: f64,
    state0: &BeamformingState,
    opts: &PscaOptions,
    design: Design,
) -> Result<PscaOutcome> {
    let n_r = lf.lambda_b.len() + 1;
    let n_t = lf.lambda_g.len();
    if n_t == 0 {
        return Err(Error::domain("no transmitting elements"));
    }
    if state0.u_r.nrows() != n_r || state0.u_t.nrows() != n_t {
        return Err(Error::domain("initial state does not match the element counts"));
    }
    if !(floor_g >= 0.0) || !floor_g.is_finite() {
        return Err(Error::domain(format!("gain floor must be non-negative, got {floor_g}")));
    }
    if !(opts.rho0 > 0.0) || !(opts.c1 > 0.0 && opts.c1 < 1.0) || !(opts.zeta2 > 0.0) {
        return Err(Error::domain("penalty schedule needs rho0 > 0, 0 < c1 < 1, zeta2 > 0"));
    }
    let gmax = lf.max_gain_g();
    if floor_g > gmax * (1.0 + 1e-12) {
        return Err(Error::Infeasible(Constraint::Qos));
    }
    if floor_g > lf.max_gain_b() * (1.0 + 1e-12) {
        return Err(Error::Infeasible(Constraint::GainOrdering));
    }
    let scale = lf.max_gain_b().max(gmax).max(f64::MIN_POSITIVE);
    let nz = Normalized {
        h_b: lf.h_b.unscale(scale),
        h_g: lf.h_g.unscale(scale),
        nu2: lf.nu_b.norm_sqr() / scale,
        floor: (floor_g / scale).min(gmax / scale),
    };

    let mut trace = Vec::new();
    let (mut u_r, mut u_t) = if opts.presolve {
        let (u_r, u_t, status, joint) = solve_step(&nz, design, None, 0.0, &opts.sdp)?;
        trace.push(PscaRecord {
            level: 0,
            rho: f64::INFINITY,
            objective: objective(design, &nz, &u_r, &u_t) * scale,
            penalized: objective(design, &nz, &u_r, &u_t),
            penalty_value: penalty_value(&u_r, &u_t),
            sdp_status: status,
            joint,
        });
        (u_r, u_t)
    } else {
        (state0.u_r.clone(), state0.u_t.clone())
    };

    let mut rho = opts.rho0;
    let mut gap = penalty_value(&u_r, &u_t);
    let mut converged = gap <= opts.zeta2;
    let mut level = 0;
    while !converged && level < opts.max_levels {
        level += 1;
        let inv_rho = 1.0 / rho;
        let mut prev_pen = f64::NEG_INFINITY;
        for _ in 0..opts.max_inner.max(1) {
            let sr = surrogate_spectral(&u_r);
            let st = surrogate_spectral(&u_t);
            let (nr, nt, status, joint) = solve_step(&nz, design, Some((&sr, &st)), inv_rho, &opts.sdp)?;
            u_r = nr;
            u_t = nt;
            gap = penalty_value(&u_r, &u_t);
            let obj = objective(design, &nz, &u_r, &u_t);
            let pen = obj - inv_rho * gap;
            trace.push(PscaRecord {
                level,
                rho,
                objective: obj * scale,
                penalized: pen,
                penalty_value: gap,
                sdp_status: status,
                joint,
            });
            if gap <= opts.zeta2 {
                converged = true;
                break;
            }
            if pen - prev_pen <= 1e-9 * (1.0 + pen.abs()) {
                break;
            }
            prev_pen = pen;
        }
        rho *= opts.c1;
    }

    let (theta_r, theta_t) = extract_phases(&u_r, &u_t);
    let ur = lift_r(&theta_r);
    let ut = lift_t(&theta_t);
    let (pr, pt) = (&ur * ur.adjoint(), &ut * ut.adjoint());
    let mat = objective(design, &nz, &u_r, &u_t);
    let proj = objective(design, &nz, &pr, &pt);
    let gain_loss = if mat > 0.0 { ((mat - proj) / mat).max(0.0) } else { 0.0 };
    Ok(PscaOutcome {
        state: BeamformingState {
            u_r,
            u_t,
            theta_r,
            theta_t,
            rank_gap: gap,
        },
        trace,
        gain_loss,
        converged,
    })
}

fn block_objective(h: &DMatrix<C64>, weight: f64, sur: Option<&SpectralSurrogate>, inv_rho: f64) -> DMatrix<C64> {
    let n = h.nrows();
    let mut c = h.scale(weight);
    if let Some(s) = sur {
        c += (s.matrix() - DMatrix::<C64>::identity(n, n)).scale(inv_rho);
    }
    c
}

type Step = (DMatrix<C64>, DMatrix<C64>, SdpStatus, bool);

fn check_status(status: SdpStatus) -> Result<()> {
    match status {
        SdpStatus::Optimal => Ok(()),
        SdpStatus::Infeasible => Err(Error::Infeasible(Constraint::Qos)),
        s => Err(Error::Solver(format!("beamforming SDP ended with status {s:?}"))),
    }
}

/// One penalised SDP over both blocks. The blocks are solved separately
/// and only merged into one block-diagonal problem when the gain
/// ordering between Bob and Grace would otherwise be violated.
fn solve_step(
    nz: &Normalized,
    design: Design,
    sur: Option<(&SpectralSurrogate, &SpectralSurrogate)>,
    inv_rho: f64,
    sdp_opts: &SdpOptions,
) -> Result<Step> {
    let w_t = match design {
        Design::Rsma => 1.0,
        Design::Noma => 0.0,
    };
    let c_r = block_objective(&nz.h_b, 1.0, sur.map(|s| s.0), inv_rho);
    let c_t = block_objective(&nz.h_g, w_t, sur.map(|s| s.1), inv_rho);

    let pr = SdpProblem::new(c_r.clone()).unit_diagonal();
    let sr = sdp::solve(&pr, sdp_opts)?;
    check_status(sr.status)?;
    let pt = SdpProblem::new(c_t.clone())
        .unit_diagonal()
        .ge(SymMat::Dense(nz.h_g.clone()), nz.floor);
    let st = sdp::solve(&pt, sdp_opts)?;
    check_status(st.status)?;

    let gb = trace_re(&nz.h_b, &sr.x) + nz.nu2;
    let gg = trace_re(&nz.h_g, &st.x);
    if gb >= gg {
        return Ok((sr.x, st.x, SdpStatus::Optimal, false));
    }

    // Joint problem; the off-diagonal block is left free.
    let (n_r, n_t) = (c_r.nrows(), c_t.nrows());
    let n = n_r + n_t;
    let mut c = DMatrix::<C64>::zeros(n, n);
    c.view_mut((0, 0), (n_r, n_r)).copy_from(&c_r);
    c.view_mut((n_r, n_r), (n_t, n_t)).copy_from(&c_t);
    let mut hg = DMatrix::<C64>::zeros(n, n);
    hg.view_mut((n_r, n_r), (n_t, n_t)).copy_from(&nz.h_g);
    let mut order = DMatrix::<C64>::zeros(n, n);
    order.view_mut((0, 0), (n_r, n_r)).copy_from(&nz.h_b);
    order.view_mut((n_r, n_r), (n_t, n_t)).copy_from(&(-&nz.h_g));
    let pj = SdpProblem::new(c)
        .unit_diagonal()
        .ge(SymMat::Dense(hg), nz.floor)
        .ge(SymMat::Dense(order), -nz.nu2);
    let sj = sdp::solve(&pj, sdp_opts)?;
    match sj.status {
        SdpStatus::Optimal => {}
        SdpStatus::Infeasible => return Err(Error::Infeasible(Constraint::GainOrdering)),
        s => return Err(Error::Solver(format!("joint beamforming SDP ended with status {s:?}"))),
    }
    let u_r = sj.x.view((0, 0), (n_r, n_r)).into_owned();
    let u_t = sj.x.view((n_r, n_r), (n_t, n_t)).into_owned();
    Ok((u_r, u_t, SdpStatus::Optimal, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_lifted, random_phases, sample_channels};
    use crate::scenario::Scenario;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small(seed: u64, k: usize) -> LiftedChannel {
        let sc = Scenario {
            k: 2 * k,
            k_n: k,
            k_m: k,
            ..Scenario::default()
        };
        let pl = sc.path_losses().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        build_lifted(&sample_channels(&sc, &mut rng), &pl).unwrap()
    }

    #[test]
    fn surrogate_bounds_spectral_norm() {
        let lf = small(1, 4);
        let s = surrogate_spectral(&lf.h_g);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let th = random_phases(4, &mut rng);
            let u = lift_t(&th);
            let m = &u * u.adjoint();
            let spec = leading_eig(&m).value;
            assert!(s.eval(&m) >= -spec - 1e-9);
        }
    }

    #[test]
    fn rsma_reaches_cophase_bound() {
        let lf = small(3, 4);
        let s0 = BeamformingState::from_phases(&[0.0; 4], &[0.0; 4]);
        let out = psca_rsma(&lf, 0.0, &s0, &PscaOptions::default()).unwrap();
        assert!(out.converged);
        assert!(out.state.rank_gap <= 1e-4);
        let best = lf.max_gain_b() + lf.max_gain_g();
        let got = out.trace.last().unwrap().objective;
        assert!((best - got).abs() <= 1e-5 * best, "{best} vs {got}");
        assert!(out.gain_loss < 1e-5);
    }

    #[test]
    fn floor_above_reach_is_infeasible() {
        let lf = small(4, 3);
        let s0 = BeamformingState::from_phases(&[0.0; 3], &[0.0; 3]);
        let r = psca_rsma(&lf, lf.max_gain_g() * 1.01, &s0, &PscaOptions::default());
        assert!(matches!(r, Err(Error::Infeasible(_))));
    }

    #[test]
    fn noma_meets_floor() {
        let lf = small(5, 4);
        let s0 = BeamformingState::from_phases(&[0.0; 4], &[0.0; 4]);
        let floor = 0.5 * lf.max_gain_g();
        let out = psca_noma(&lf, floor, &s0, &PscaOptions::default()).unwrap();
        assert!(out.converged, "{:?}", out.trace);
        let ut = lift_t(&out.state.theta_t);
        let g = (ut.adjoint() * &lf.h_g * &ut)[(0, 0)].re;
        assert!(g >= floor * (1.0 - 1e-3), "{g} < {floor}");
    }
}

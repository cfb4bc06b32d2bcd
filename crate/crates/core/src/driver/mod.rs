//! Alternating optimisation loops, benchmark schemes and sweeps.

mod sweep;

pub use sweep::{
    read_csv, realization_rngs, run_sweep, run_traces, write_csv, write_madep_csv, Job, Manifest,
    Row, SweepParam, SweepResult, SweepSpec, TraceSpec, CSV_HEADER, MADEP_HEADER,
};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::alloc::{
    algorithm1, noma_gain_floor, noma_power, optimal_beta, rsma_gain_floor, Alg1Options,
    AllocParams,
};
use crate::beamforming::{psca_noma, psca_rsma, BeamformingState, PscaOptions};
use crate::channel::{build_lifted, composite_gains, random_phases, ChannelRealization, CompositeGains, LiftedChannel};
use crate::covert::{madep, DetectionContext};
use crate::error::{Constraint, Error, Result};
use crate::rates::{noma_rates, rsma_rates, NomaAllocation, PowerAllocation, RateAllocation};
use crate::scenario::{PathLossSet, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Allocation {
    Rsma {
        alloc: PowerAllocation,
        beta: RateAllocation,
    },
    Noma {
        alloc: NomaAllocation,
    },
}

impl Allocation {
    /// Power split as seen by Willie: covert fraction and hidden rest.
    pub fn as_power(&self) -> PowerAllocation {
        match *self {
            Allocation::Rsma { alloc, .. } => alloc,
            Allocation::Noma { alloc } => PowerAllocation {
                a0: 0.0,
                a1: alloc.abar1,
                a2: alloc.abar2,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub allocation: Allocation,
    pub theta_r: Vec<f64>,
    pub theta_t: Vec<f64>,
    pub gains: CompositeGains,
    pub r_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoRecord {
    pub iteration: usize,
    pub r_b: f64,
    pub allocation: Allocation,
    /// `|Z_ab|^2 + |Z_ag|^2` at the recorded phases.
    pub beam_objective: f64,
    pub penalty_value: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    IterationCap,
    /// The last update would have lowered the rate and was discarded.
    NonImproving,
    /// The beamforming step failed; the last accepted point is kept.
    SolverFailure,
    /// Phases are held fixed, so only the allocation was optimised.
    FixedPhases,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoTrace {
    pub records: Vec<AoRecord>,
    pub termination: Termination,
    pub solution: Solution,
    pub warnings: Vec<String>,
}

impl AoTrace {
    pub fn rates(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.r_b).collect()
    }

    /// Outer iterations after the initial point.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AoOptions {
    pub zeta3: f64,
    pub max_outer: usize,
    pub omega: f64,
    /// Hold `beta1` at this value instead of optimising it.
    pub fixed_beta1: Option<f64>,
    /// Run the beamforming step; when false the initial phases are kept.
    pub optimize_phases: bool,
    pub alg1: Alg1Options,
    pub psca: PscaOptions,
}

impl AoOptions {
    pub fn from_scenario(sc: &Scenario) -> Self {
        AoOptions {
            zeta3: sc.zeta3,
            max_outer: 50,
            omega: 0.0,
            fixed_beta1: None,
            optimize_phases: true,
            alg1: Alg1Options {
                zeta1: sc.zeta1,
                ..Alg1Options::default()
            },
            psca: PscaOptions {
                rho0: sc.rho0,
                c1: sc.c1,
                zeta2: sc.zeta2,
                ..PscaOptions::default()
            },
        }
    }
}

struct Ctx<'a> {
    ch: &'a ChannelRealization,
    pl: PathLossSet,
    params: AllocParams,
    lf: LiftedChannel,
    opts: AoOptions,
    start: Instant,
}

impl Ctx<'_> {
    fn new<'a>(sc: &Scenario, ch: &'a ChannelRealization, opts: &AoOptions) -> Result<Ctx<'a>> {
        sc.validate()?;
        if ch.k_n() != sc.k_n || ch.k_m() != sc.k_m {
            return Err(Error::domain("channel realization does not match the element counts"));
        }
        let pl = sc.path_losses()?;
        let params = AllocParams::new(sc, &pl).with_omega(opts.omega);
        let lf = build_lifted(ch, &pl)?;
        Ok(Ctx {
            ch,
            pl,
            params,
            lf,
            opts: *opts,
            start: Instant::now(),
        })
    }

    fn gains(&self, tr: &[f64], tt: &[f64]) -> Result<CompositeGains> {
        composite_gains(self.ch, tr, tt, &self.pl)
    }

    fn ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3
    }

    fn beta0(&self) -> RateAllocation {
        match self.opts.fixed_beta1 {
            Some(b1) => RateAllocation::from_beta2(1.0 - b1),
            None => RateAllocation::from_beta2(1.0),
        }
    }

    /// Allocation step of one outer iteration. The previous allocation,
    /// when still feasible at the new gains, competes with the fresh one.
    fn rsma_alloc(
        &self,
        g: &CompositeGains,
        beta: &RateAllocation,
        incumbent: Option<&PowerAllocation>,
    ) -> Result<(PowerAllocation, RateAllocation, f64)> {
        let link = self.params.link(g.z_ab2, g.z_ag2);
        let fresh = algorithm1(beta, &link, &self.params, &self.opts.alg1);
        let mut best: Option<(PowerAllocation, f64)> = fresh.as_ref().ok().map(|o| (o.alloc, o.rates.r_b));
        if let Some(a) = incumbent {
            let r = self.params.rates(a, beta, &link)?;
            if r.r_g >= self.params.rg_min && best.is_none_or(|b| r.r_b > b.1) {
                best = Some((*a, r.r_b));
            }
        }
        let Some((a, _)) = best else {
            return Err(fresh.err().unwrap_or(Error::Infeasible(Constraint::Qos)));
        };
        let beta = match self.opts.fixed_beta1 {
            Some(_) => *beta,
            None => optimal_beta(&a, &link, &self.params)?,
        };
        let r_b = self.params.rates(&a, &beta, &link)?.r_b;
        Ok((a, beta, r_b))
    }

    fn noma_alloc(&self, g: &CompositeGains) -> Result<(NomaAllocation, f64)> {
        let link = self.params.link(g.z_ab2, g.z_ag2);
        let out = noma_power(&link, &self.params)?;
        Ok((out.alloc, out.rates.r_b_sb))
    }
}

fn initial_phases<R: Rng + ?Sized>(lf: &LiftedChannel, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    (random_phases(lf.lambda_b.len(), rng), random_phases(lf.lambda_g.len(), rng))
}

/// Rate-splitting alternating optimisation: power split, then common-rate
/// split, then phases, until Bob's rate stalls.
pub fn algorithm2<R: Rng + ?Sized>(
    sc: &Scenario,
    ch: &ChannelRealization,
    opts: &AoOptions,
    rng: &mut R,
) -> Result<AoTrace> {
    let cx = Ctx::new(sc, ch, opts)?;
    let mut warnings = Vec::new();
    let (mut tr, mut tt) = initial_phases(&cx.lf, rng);
    let mut g = cx.gains(&tr, &tt)?;
    let beta0 = cx.beta0();
    let (mut a, mut beta, mut r_b) = match cx.rsma_alloc(&g, &beta0, None) {
        Ok(v) => v,
        Err(Error::Infeasible(_)) if opts.optimize_phases => {
            warnings.push("random initial phases infeasible; started from co-phased phases".into());
            tr = cx.lf.cophase_r();
            tt = cx.lf.cophase_t();
            g = cx.gains(&tr, &tt)?;
            cx.rsma_alloc(&g, &beta0, None)?
        }
        Err(e) => return Err(e),
    };
    // Alternate the two closed-form steps once more when phases are fixed.
    if !opts.optimize_phases {
        return fixed_phase_rsma(&cx, tr, tt, g, a, beta, r_b);
    }
    let mut records = vec![AoRecord {
        iteration: 0,
        r_b,
        allocation: Allocation::Rsma { alloc: a, beta },
        beam_objective: g.z_ab2 + g.z_ag2,
        penalty_value: 0.0,
        wall_ms: cx.ms(),
    }];
    let mut termination = Termination::IterationCap;
    for it in 1..=opts.max_outer.max(1) {
        let floor = rsma_gain_floor(&a, &beta, &cx.params, cx.lf.max_gain_g())?;
        let s0 = BeamformingState::from_phases(&tr, &tt);
        let out = match psca_rsma(&cx.lf, floor, &s0, &opts.psca) {
            Ok(o) => o,
            Err(e) => {
                warnings.push(format!("beamforming failed at iteration {it}: {e}"));
                termination = Termination::SolverFailure;
                break;
            }
        };
        let g1 = cx.gains(&out.state.theta_r, &out.state.theta_t)?;
        let (a1, beta1, rb1) = match cx.rsma_alloc(&g1, &beta, Some(&a)) {
            Ok(v) => v,
            Err(_) => {
                termination = Termination::NonImproving;
                break;
            }
        };
        if rb1 < r_b - 1e-12 * (1.0 + r_b.abs()) {
            termination = Termination::NonImproving;
            break;
        }
        let gain = rb1 - r_b;
        tr = out.state.theta_r;
        tt = out.state.theta_t;
        g = g1;
        a = a1;
        beta = beta1;
        r_b = rb1;
        records.push(AoRecord {
            iteration: it,
            r_b,
            allocation: Allocation::Rsma { alloc: a, beta },
            beam_objective: g.z_ab2 + g.z_ag2,
            penalty_value: out.state.rank_gap,
            wall_ms: cx.ms(),
        });
        if gain < opts.zeta3 {
            termination = Termination::Converged;
            break;
        }
    }
    if termination == Termination::IterationCap {
        warnings.push(format!("outer loop hit the cap of {} iterations", opts.max_outer));
    }
    Ok(AoTrace {
        records,
        termination,
        solution: Solution {
            allocation: Allocation::Rsma { alloc: a, beta },
            theta_r: tr,
            theta_t: tt,
            gains: g,
            r_b,
        },
        warnings,
    })
}

fn fixed_phase_rsma(
    cx: &Ctx,
    tr: Vec<f64>,
    tt: Vec<f64>,
    g: CompositeGains,
    mut a: PowerAllocation,
    mut beta: RateAllocation,
    mut r_b: f64,
) -> Result<AoTrace> {
    let mut records = vec![AoRecord {
        iteration: 0,
        r_b,
        allocation: Allocation::Rsma { alloc: a, beta },
        beam_objective: g.z_ab2 + g.z_ag2,
        penalty_value: 0.0,
        wall_ms: cx.ms(),
    }];
    for it in 1..=cx.opts.max_outer.max(1) {
        let Ok((a1, b1, rb1)) = cx.rsma_alloc(&g, &beta, Some(&a)) else {
            break;
        };
        if rb1 < r_b - 1e-12 * (1.0 + r_b.abs()) {
            break;
        }
        let gain = rb1 - r_b;
        (a, beta, r_b) = (a1, b1, rb1);
        records.push(AoRecord {
            iteration: it,
            r_b,
            allocation: Allocation::Rsma { alloc: a, beta },
            beam_objective: g.z_ab2 + g.z_ag2,
            penalty_value: 0.0,
            wall_ms: cx.ms(),
        });
        if gain < cx.opts.zeta3 {
            break;
        }
    }
    Ok(AoTrace {
        records,
        termination: Termination::FixedPhases,
        solution: Solution {
            allocation: Allocation::Rsma { alloc: a, beta },
            theta_r: tr,
            theta_t: tt,
            gains: g,
            r_b,
        },
        warnings: Vec::new(),
    })
}

/// NOMA alternating optimisation: power split, then phases.
pub fn algorithm3<R: Rng + ?Sized>(
    sc: &Scenario,
    ch: &ChannelRealization,
    opts: &AoOptions,
    rng: &mut R,
) -> Result<AoTrace> {
    let cx = Ctx::new(sc, ch, opts)?;
    let mut warnings = Vec::new();
    let (mut tr, mut tt) = initial_phases(&cx.lf, rng);
    let mut g = cx.gains(&tr, &tt)?;
    let (mut a, mut r_b) = match cx.noma_alloc(&g) {
        Ok(v) => v,
        Err(Error::Infeasible(_)) if opts.optimize_phases => {
            warnings.push("random initial phases infeasible; started from co-phased phases".into());
            tr = cx.lf.cophase_r();
            tt = cx.lf.cophase_t();
            g = cx.gains(&tr, &tt)?;
            cx.noma_alloc(&g)?
        }
        Err(e) => return Err(e),
    };
    let mut records = vec![AoRecord {
        iteration: 0,
        r_b,
        allocation: Allocation::Noma { alloc: a },
        beam_objective: g.z_ab2 + g.z_ag2,
        penalty_value: 0.0,
        wall_ms: cx.ms(),
    }];
    let mut termination = if opts.optimize_phases {
        Termination::IterationCap
    } else {
        Termination::FixedPhases
    };
    let outer = if opts.optimize_phases { opts.max_outer.max(1) } else { 0 };
    for it in 1..=outer {
        let floor = noma_gain_floor(&a, &cx.params)?;
        let s0 = BeamformingState::from_phases(&tr, &tt);
        let out = match psca_noma(&cx.lf, floor, &s0, &opts.psca) {
            Ok(o) => o,
            Err(e) => {
                warnings.push(format!("beamforming failed at iteration {it}: {e}"));
                termination = Termination::SolverFailure;
                break;
            }
        };
        let g1 = cx.gains(&out.state.theta_r, &out.state.theta_t)?;
        let Ok((a1, rb1)) = cx.noma_alloc(&g1) else {
            termination = Termination::NonImproving;
            break;
        };
        if rb1 < r_b - 1e-12 * (1.0 + r_b.abs()) {
            termination = Termination::NonImproving;
            break;
        }
        let gain = rb1 - r_b;
        tr = out.state.theta_r;
        tt = out.state.theta_t;
        g = g1;
        a = a1;
        r_b = rb1;
        records.push(AoRecord {
            iteration: it,
            r_b,
            allocation: Allocation::Noma { alloc: a },
            beam_objective: g.z_ab2 + g.z_ag2,
            penalty_value: out.state.rank_gap,
            wall_ms: cx.ms(),
        });
        if gain < opts.zeta3 {
            termination = Termination::Converged;
            break;
        }
    }
    if termination == Termination::IterationCap {
        warnings.push(format!("outer loop hit the cap of {} iterations", opts.max_outer));
    }
    Ok(AoTrace {
        records,
        termination,
        solution: Solution {
            allocation: Allocation::Noma { alloc: a },
            theta_r: tr,
            theta_t: tt,
            gains: g,
            r_b,
        },
        warnings,
    })
}

/// Result of substituting a solution back into the rate and detection
/// models from scratch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub madep: f64,
    pub r_b: f64,
    pub r_g: f64,
    pub ok: bool,
}

pub const VERIFY_TOL: f64 = 1e-6;

/// Recompute covertness and Grace's rate for `sol` without reusing any
/// optimiser state.
pub fn verify_solution(
    sc: &Scenario,
    ch: &ChannelRealization,
    sol: &Solution,
    omega: f64,
) -> Result<Verification> {
    let pl = sc.path_losses()?;
    let g = composite_gains(ch, &sol.theta_r, &sol.theta_t, &pl)?;
    let link = crate::rates::LinkBudget {
        pt: sc.pt_mw(),
        z_ab2: g.z_ab2,
        z_ag2: g.z_ag2,
        sigma2_b: sc.sigma2_b(),
        sigma2_g: sc.sigma2_g(),
    };
    let (r_b, r_g, extra_ok) = match sol.allocation {
        Allocation::Rsma { alloc, beta } => {
            let r = rsma_rates(&alloc, &beta, &link, omega)?;
            let sum_ok = (alloc.sum() - 1.0).abs() <= VERIFY_TOL;
            (r.r_b, r.r_g, sum_ok)
        }
        Allocation::Noma { alloc } => {
            let r = noma_rates(&alloc, &link, omega)?;
            // Bob must be able to strip Grace's stream first.
            (r.r_b_sb, r.r_g_sg, r.r_b_sg >= sc.rg_min_bps - VERIFY_TOL)
        }
    };
    let power = sol.allocation.as_power();
    let ctx = DetectionContext::new(sc, &pl, &power);
    let m = madep(&power, &ctx);
    let ok = extra_ok && m >= 1.0 - sc.epsilon - VERIFY_TOL && r_g >= sc.rg_min_bps - VERIFY_TOL;
    Ok(Verification { madep: m, r_b, r_g, ok })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    RsmaAo,
    NomaAo,
    RsmaFixedBeta,
    RsmaRandomPhase,
    NomaRandomPhase,
    NoRis,
    RsmaImperfectSic,
    NomaImperfectSic,
    MadepClosed,
    MadepMc,
}

impl Scheme {
    pub const ALL: [Scheme; 10] = [
        Scheme::RsmaAo,
        Scheme::NomaAo,
        Scheme::RsmaFixedBeta,
        Scheme::RsmaRandomPhase,
        Scheme::NomaRandomPhase,
        Scheme::NoRis,
        Scheme::RsmaImperfectSic,
        Scheme::NomaImperfectSic,
        Scheme::MadepClosed,
        Scheme::MadepMc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::RsmaAo => "rsma_ao",
            Scheme::NomaAo => "noma_ao",
            Scheme::RsmaFixedBeta => "rsma_fixed_beta",
            Scheme::RsmaRandomPhase => "rsma_random_phase",
            Scheme::NomaRandomPhase => "noma_random_phase",
            Scheme::NoRis => "no_ris",
            Scheme::RsmaImperfectSic => "rsma_imperfect_sic",
            Scheme::NomaImperfectSic => "noma_imperfect_sic",
            Scheme::MadepClosed => "madep_closed",
            Scheme::MadepMc => "madep_mc",
        }
    }

    /// Detection-probability evaluations rather than rate optimisers.
    pub fn is_madep(self) -> bool {
        matches!(self, Scheme::MadepClosed | Scheme::MadepMc)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Scheme::ALL.iter().map(|x| x.name()).collect();
                Error::Parse(format!("unknown scheme `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeOutcome {
    /// Bob's rate when the solution is feasible and verified, else 0.
    pub covert_rate: f64,
    pub feasible: bool,
    /// Reason the scheme produced no usable solution.
    pub failure: Option<String>,
    pub iterations: usize,
    pub verification: Option<Verification>,
    pub trace: Option<Vec<f64>>,
    pub solution: Option<Solution>,
}

impl SchemeOutcome {
    fn failed(reason: String) -> Self {
        SchemeOutcome {
            covert_rate: 0.0,
            feasible: false,
            failure: Some(reason),
            iterations: 0,
            verification: None,
            trace: None,
            solution: None,
        }
    }
}

/// Direct links only: Willie sees no reflected noise and Grace, who has no
/// direct link, receives nothing.
fn no_ris(sc: &Scenario, ch: &ChannelRealization, ao: &AoOptions) -> Result<SchemeOutcome> {
    sc.validate()?;
    let mut bare = sc.clone();
    bare.k = 0;
    bare.k_n = 0;
    bare.k_m = 0;
    let ch = ch.without_ris();
    let pl = bare.path_losses()?;
    let params = AllocParams::new(&bare, &pl).with_omega(ao.omega);
    let g = composite_gains(&ch, &[], &[], &pl)?;
    let link = params.link(g.z_ab2, g.z_ag2);
    let beta0 = RateAllocation::from_beta2(1.0);
    let res = algorithm1(&beta0, &link, &params, &ao.alg1).and_then(|o| {
        let beta = optimal_beta(&o.alloc, &link, &params)?;
        let r_b = params.rates(&o.alloc, &beta, &link)?.r_b;
        Ok((o.alloc, beta, r_b))
    });
    let (alloc, beta, r_b) = match res {
        Ok(v) => v,
        Err(Error::Infeasible(c)) => return Ok(SchemeOutcome::failed(format!("infeasible: {c}"))),
        Err(e) => return Err(e),
    };
    let allocation = Allocation::Rsma { alloc, beta };
    let trace = AoTrace {
        records: vec![AoRecord {
            iteration: 0,
            r_b,
            allocation,
            beam_objective: g.z_ab2,
            penalty_value: 0.0,
            wall_ms: 0.0,
        }],
        termination: Termination::FixedPhases,
        solution: Solution {
            allocation,
            theta_r: Vec::new(),
            theta_t: Vec::new(),
            gains: g,
            r_b,
        },
        warnings: Vec::new(),
    };
    finish(&bare, &ch, &trace, ao.omega)
}

/// Options shared by every optimising scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeOptions {
    pub ao: AoOptions,
    /// `beta1` used by the fixed rate-split benchmark.
    pub beta1_fixed: f64,
}

impl SchemeOptions {
    pub fn from_scenario(sc: &Scenario) -> Self {
        SchemeOptions {
            ao: AoOptions::from_scenario(sc),
            beta1_fixed: 0.5,
        }
    }
}

/// Run one optimising scheme on one realization. Infeasibility is an
/// outcome, not an error; other failures are reported in `failure`.
pub fn run_scheme<R: Rng + ?Sized>(
    scheme: Scheme,
    sc: &Scenario,
    ch: &ChannelRealization,
    opts: &SchemeOptions,
    rng: &mut R,
) -> Result<SchemeOutcome> {
    let mut ao = opts.ao;
    let rsma = match scheme {
        Scheme::RsmaAo => true,
        Scheme::NomaAo => false,
        Scheme::RsmaFixedBeta => {
            ao.fixed_beta1 = Some(opts.beta1_fixed);
            true
        }
        Scheme::RsmaRandomPhase => {
            ao.optimize_phases = false;
            true
        }
        Scheme::NomaRandomPhase => {
            ao.optimize_phases = false;
            false
        }
        Scheme::NoRis => return no_ris(sc, ch, &ao),
        Scheme::RsmaImperfectSic => {
            ao.omega = sc.omega;
            true
        }
        Scheme::NomaImperfectSic => {
            ao.omega = sc.omega;
            false
        }
        Scheme::MadepClosed | Scheme::MadepMc => {
            return Err(Error::domain(format!("{scheme} is not a rate optimiser")));
        }
    };
    let res = if rsma {
        algorithm2(sc, ch, &ao, rng)
    } else {
        algorithm3(sc, ch, &ao, rng)
    };
    let trace = match res {
        Ok(t) => t,
        Err(Error::Infeasible(c)) => return Ok(SchemeOutcome::failed(format!("infeasible: {c}"))),
        Err(e @ (Error::Solver(_) | Error::Domain(_))) => return Ok(SchemeOutcome::failed(e.to_string())),
        Err(e) => return Err(e),
    };
    finish(sc, ch, &trace, ao.omega)
}

fn finish(sc: &Scenario, ch: &ChannelRealization, trace: &AoTrace, omega: f64) -> Result<SchemeOutcome> {
    let v = verify_solution(sc, ch, &trace.solution, omega)?;
    if !v.ok {
        return Ok(SchemeOutcome {
            failure: Some("solution failed re-verification".into()),
            verification: Some(v),
            ..SchemeOutcome::failed(String::new())
        });
    }
    Ok(SchemeOutcome {
        covert_rate: v.r_b,
        feasible: true,
        failure: None,
        iterations: trace.iterations(),
        verification: Some(v),
        trace: Some(trace.rates()),
        solution: Some(trace.solution.clone()),
    })
}

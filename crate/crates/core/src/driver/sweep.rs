use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_scheme, Scheme, SchemeOptions, SchemeOutcome};
use crate::channel::sample_channels;
use crate::covert::{madep, mc_min_dep, DetectionContext};
use crate::error::{Error, Result};
use crate::rates::PowerAllocation;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    PtDbm,
    Epsilon,
    RgMin,
    KN,
    RisX,
    A0,
    A1,
}

impl SweepParam {
    pub const ALL: [SweepParam; 7] = [
        SweepParam::PtDbm,
        SweepParam::Epsilon,
        SweepParam::RgMin,
        SweepParam::KN,
        SweepParam::RisX,
        SweepParam::A0,
        SweepParam::A1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::PtDbm => "pt_dbm",
            SweepParam::Epsilon => "epsilon",
            SweepParam::RgMin => "rg_min",
            SweepParam::KN => "k_n",
            SweepParam::RisX => "ris_x",
            SweepParam::A0 => "a0",
            SweepParam::A1 => "a1",
        }
    }

    /// Parameters that only make sense for detection-probability schemes.
    pub fn is_allocation(self) -> bool {
        matches!(self, SweepParam::A0 | SweepParam::A1)
    }

    fn apply(self, sc: &mut Scenario, v: f64) -> Result<()> {
        match self {
            SweepParam::PtDbm => sc.set_numeric("pt_dbm", v),
            SweepParam::Epsilon => sc.set_numeric("epsilon", v),
            SweepParam::RgMin => sc.set_numeric("rg_min_bps", v),
            SweepParam::KN => sc.set_numeric("k_n", v),
            SweepParam::RisX => sc.set_numeric("ris_x_m", v),
            SweepParam::A0 | SweepParam::A1 => Ok(()),
        }?;
        sc.validate()
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            let names: Vec<_> = SweepParam::ALL.iter().map(|x| x.name()).collect();
            Error::Parse(format!("unknown sweep parameter `{s}`; expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub realizations: usize,
    pub seed: u64,
    /// Covert fraction used by detection schemes when `a1` is not swept.
    pub a1_fixed: f64,
    pub beta1_fixed: f64,
    pub mc_channels: usize,
    pub mc_noise: usize,
    pub max_outer: usize,
}

impl SweepSpec {
    pub fn new(param: SweepParam, values: Vec<f64>, schemes: Vec<Scheme>) -> Self {
        SweepSpec {
            param,
            values,
            schemes,
            realizations: 50,
            seed: 1,
            a1_fixed: 0.2,
            beta1_fixed: 0.5,
            mc_channels: 20_000,
            mc_noise: 2_000,
            max_outer: 50,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::param("values", "sweep needs at least one value"));
        }
        if self.schemes.is_empty() {
            return Err(Error::param("schemes", "sweep needs at least one scheme"));
        }
        if self.realizations == 0 {
            return Err(Error::param("realizations", "must be at least 1"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("values", "values must be finite"));
        }
        if self.param.is_allocation() {
            if let Some(s) = self.schemes.iter().find(|s| !s.is_madep()) {
                return Err(Error::param(
                    "schemes",
                    format!("{s} optimises the allocation, so it cannot sweep {}", self.param),
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.a1_fixed) || !(0.0..=1.0).contains(&self.beta1_fixed) {
            return Err(Error::param("a1_fixed", "fixed fractions must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Key used by `--set sweep.<key>=value`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| Error::param(key, format!("not a number: `{v}`")));
        let count = |v: &str| v.trim().parse::<usize>().map_err(|_| Error::param(key, format!("not a count: `{v}`")));
        match key {
            "param" => self.param = value.trim().parse()?,
            "values" => {
                self.values = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(num)
                    .collect::<Result<_>>()?
            }
            "schemes" => {
                self.schemes = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.trim().parse())
                    .collect::<Result<_>>()?
            }
            "realizations" => self.realizations = count(value)?,
            "seed" => self.seed = value.trim().parse().map_err(|_| Error::param(key, "not a seed"))?,
            "a1_fixed" => self.a1_fixed = num(value)?,
            "beta1_fixed" => self.beta1_fixed = num(value)?,
            "mc_channels" => self.mc_channels = count(value)?,
            "mc_noise" => self.mc_noise = count(value)?,
            "max_outer" => self.max_outer = count(value)?,
            _ => return Err(Error::param(key, "unknown sweep option")),
        }
        Ok(())
    }
}

/// One aggregated result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub param: f64,
    pub scheme: Scheme,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<Row>,
    pub warnings: Vec<String>,
}

impl SweepResult {
    /// No optimising scheme found a feasible point at any value.
    pub fn infeasible_everywhere(&self) -> bool {
        let mut any = false;
        for r in &self.rows {
            if r.metric == "feasible" {
                any = true;
                if r.mean > 0.0 {
                    return false;
                }
            }
        }
        any
    }

    pub fn get(&self, param: f64, scheme: Scheme, metric: &str) -> Option<&Row> {
        self.rows
            .iter()
            .find(|r| r.param == param && r.scheme == scheme && r.metric == metric)
    }
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Channel and phase generators of realization `r`. Each scheme and each
/// swept value sees the same draws.
pub fn realization_rngs(seed: u64, r: usize) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut ch = ChaCha8Rng::seed_from_u64(seed);
    ch.set_stream(2 * r as u64);
    let mut ph = ChaCha8Rng::seed_from_u64(seed);
    ph.set_stream(2 * r as u64 + 1);
    (ch, ph)
}

fn madep_alloc(spec: &SweepSpec, v: f64) -> Result<PowerAllocation> {
    match spec.param {
        SweepParam::A1 => PowerAllocation::new(1.0 - v, v, 0.0),
        SweepParam::A0 => {
            let a2 = 1.0 - v - spec.a1_fixed;
            if a2 < -1e-12 {
                return Err(Error::param("a0", format!("a0 = {v} leaves no room for a1 = {}", spec.a1_fixed)));
            }
            PowerAllocation::new(v, spec.a1_fixed, a2.max(0.0))
        }
        _ => PowerAllocation::new(1.0 - spec.a1_fixed, spec.a1_fixed, 0.0),
    }
}

fn scheme_options(sc: &Scenario, spec: &SweepSpec) -> SchemeOptions {
    let mut o = SchemeOptions::from_scenario(sc);
    o.ao.max_outer = spec.max_outer;
    o.beta1_fixed = spec.beta1_fixed;
    o
}

/// Evaluate every `(value, scheme)` pair, averaging over realizations.
pub fn run_sweep(spec: &SweepSpec, sc: &Scenario) -> Result<SweepResult> {
    spec.validate()?;
    sc.validate()?;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let opt_schemes: Vec<Scheme> = spec.schemes.iter().copied().filter(|s| !s.is_madep()).collect();
    for (vi, &v) in spec.values.iter().enumerate() {
        let mut sv = sc.clone();
        spec.param.apply(&mut sv, v)?;
        for &s in spec.schemes.iter().filter(|s| s.is_madep()) {
            let alloc = madep_alloc(spec, v)?;
            let pl = sv.path_losses()?;
            let ctx = DetectionContext::new(&sv, &pl, &alloc);
            let (mean, se, n) = if s == Scheme::MadepClosed {
                (madep(&alloc, &ctx), 0.0, 1)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                rng.set_stream(1 << 32 | vi as u64);
                let st = mc_min_dep(&ctx, spec.mc_channels, spec.mc_noise, &mut rng)?;
                (st.madep, st.stderr, st.n_channel)
            };
            rows.push(Row {
                param: v,
                scheme: s,
                metric: "madep".into(),
                mean,
                stderr: se,
                n,
                seed: spec.seed,
            });
        }
        if opt_schemes.is_empty() {
            continue;
        }
        let opts = scheme_options(&sv, spec);
        let outcomes: Vec<Vec<SchemeOutcome>> = (0..spec.realizations)
            .into_par_iter()
            .map(|r| {
                let (mut rc, _) = realization_rngs(spec.seed, r);
                let ch = sample_channels(&sv, &mut rc);
                opt_schemes
                    .iter()
                    .map(|&s| {
                        let (_, mut rp) = realization_rngs(spec.seed, r);
                        run_scheme(s, &sv, &ch, &opts, &mut rp)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        for (si, &s) in opt_schemes.iter().enumerate() {
            let per: Vec<&SchemeOutcome> = outcomes.iter().map(|o| &o[si]).collect();
            let rate: Vec<f64> = per.iter().map(|o| o.covert_rate).collect();
            let feas: Vec<f64> = per.iter().map(|o| if o.feasible { 1.0 } else { 0.0 }).collect();
            let iters: Vec<f64> = per.iter().filter(|o| o.feasible).map(|o| o.iterations as f64).collect();
            let unverified = per
                .iter()
                .filter(|o| o.failure.as_deref() == Some("solution failed re-verification"))
                .count();
            if unverified > 0 {
                warnings.push(format!("{s} at {}={v}: {unverified} solutions failed re-verification", spec.param));
            }
            for (metric, xs) in [("covert_rate", &rate), ("feasible", &feas), ("iterations", &iters)] {
                let (mean, se) = mean_stderr(xs);
                rows.push(Row {
                    param: v,
                    scheme: s,
                    metric: metric.into(),
                    mean,
                    stderr: se,
                    n: xs.len(),
                    seed: spec.seed,
                });
            }
        }
    }
    Ok(SweepResult { rows, warnings })
}

/// Per-iteration traces of the alternating optimisation loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSpec {
    pub schemes: Vec<Scheme>,
    pub realizations: usize,
    pub seed: u64,
    pub max_outer: usize,
}

impl TraceSpec {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let count = |v: &str| v.trim().parse::<usize>().map_err(|_| Error::param(key, format!("not a count: `{v}`")));
        match key {
            "schemes" => {
                self.schemes = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.trim().parse())
                    .collect::<Result<_>>()?
            }
            "realizations" => self.realizations = count(value)?,
            "seed" => self.seed = value.trim().parse().map_err(|_| Error::param(key, "not a seed"))?,
            "max_outer" => self.max_outer = count(value)?,
            _ => return Err(Error::param(key, "not a trace option")),
        }
        Ok(())
    }
}

/// Mean Bob rate at each outer iteration (`param` = iteration index).
/// Runs that stopped early carry their final value forward; infeasible
/// runs are left out, so `n` can be below the realization count.
pub fn run_traces(spec: &TraceSpec, sc: &Scenario) -> Result<SweepResult> {
    if spec.realizations == 0 {
        return Err(Error::param("realizations", "must be at least 1"));
    }
    if let Some(s) = spec.schemes.iter().find(|s| s.is_madep()) {
        return Err(Error::param("schemes", format!("{s} has no iteration trace")));
    }
    sc.validate()?;
    let sw = SweepSpec {
        max_outer: spec.max_outer,
        ..SweepSpec::new(SweepParam::PtDbm, vec![sc.pt_dbm], spec.schemes.clone())
    };
    let opts = scheme_options(sc, &sw);
    let traces: Vec<Vec<Option<Vec<f64>>>> = (0..spec.realizations)
        .into_par_iter()
        .map(|r| {
            let (mut rc, _) = realization_rngs(spec.seed, r);
            let ch = sample_channels(sc, &mut rc);
            spec.schemes
                .iter()
                .map(|&s| {
                    let (_, mut rp) = realization_rngs(spec.seed, r);
                    run_scheme(s, sc, &ch, &opts, &mut rp).map(|o| o.trace)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (si, &s) in spec.schemes.iter().enumerate() {
        let ts: Vec<&Vec<f64>> = traces.iter().filter_map(|t| t[si].as_ref()).collect();
        let len = ts.iter().map(|t| t.len()).max().unwrap_or(0);
        for i in 0..len {
            let xs: Vec<f64> = ts.iter().map(|t| t[i.min(t.len() - 1)]).collect();
            let (mean, se) = mean_stderr(&xs);
            rows.push(Row {
                param: i as f64,
                scheme: s,
                metric: "r_b".into(),
                mean,
                stderr: se,
                n: xs.len(),
                seed: spec.seed,
            });
        }
    }
    Ok(SweepResult {
        rows,
        warnings: Vec::new(),
    })
}

pub const CSV_HEADER: &str = "param,scheme,metric,mean,stderr,n,seed";

pub fn write_csv<W: Write>(rows: &[Row], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.param, r.scheme, r.metric, r.mean, r.stderr, r.n, r.seed
        )?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<Row>> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != CSV_HEADER {
        return Err(Error::Parse(format!("expected header `{CSV_HEADER}`")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = |what: &str| Error::Parse(format!("row {}: bad {what}", i + 2));
        if f.len() != 7 {
            return Err(bad("field count"));
        }
        rows.push(Row {
            param: f[0].parse().map_err(|_| bad("param"))?,
            scheme: f[1].parse()?,
            metric: f[2].to_string(),
            mean: f[3].parse().map_err(|_| bad("mean"))?,
            stderr: f[4].parse().map_err(|_| bad("stderr"))?,
            n: f[5].parse().map_err(|_| bad("n"))?,
            seed: f[6].parse().map_err(|_| bad("seed"))?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Job {
    Sweep { spec: SweepSpec },
    Trace { spec: TraceSpec },
    /// Closed form against Monte Carlo; written as a pivoted table.
    Madep { spec: SweepSpec },
}

impl Job {
    pub fn run(&self, sc: &Scenario) -> Result<SweepResult> {
        match self {
            Job::Sweep { spec } => run_sweep(spec, sc),
            Job::Trace { spec } => run_traces(spec, sc),
            Job::Madep { spec } => {
                if spec.schemes.iter().any(|s| !s.is_madep()) {
                    return Err(Error::param("schemes", "madep tables take only madep_closed and madep_mc"));
                }
                run_sweep(spec, sc)
            }
        }
    }

    pub fn write_csv<W: Write>(&self, res: &SweepResult, w: W) -> Result<()> {
        match self {
            Job::Madep { .. } => write_madep_csv(&res.rows, w),
            _ => write_csv(&res.rows, w),
        }
    }
}

pub const MADEP_HEADER: &str = "param,closed,mc,stderr";

/// One line per swept value; a missing scheme leaves its cells empty.
pub fn write_madep_csv<W: Write>(rows: &[Row], mut w: W) -> Result<()> {
    writeln!(w, "{MADEP_HEADER}")?;
    let mut params: Vec<f64> = Vec::new();
    for r in rows {
        if !params.contains(&r.param) {
            params.push(r.param);
        }
    }
    for p in params {
        let find = |s: Scheme| rows.iter().find(|r| r.param == p && r.scheme == s && r.metric == "madep");
        let closed = find(Scheme::MadepClosed).map(|r| r.mean.to_string()).unwrap_or_default();
        let (mc, se) = find(Scheme::MadepMc)
            .map(|r| (r.mean.to_string(), r.stderr.to_string()))
            .unwrap_or_default();
        writeln!(w, "{p},{closed},{mc},{se}")?;
    }
    Ok(())
}

/// Everything needed to regenerate a CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub name: String,
    pub scenario: Scenario,
    pub job: Job,
}

impl Manifest {
    pub fn new(name: impl Into<String>, scenario: Scenario, job: Job) -> Self {
        Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            name: name.into(),
            scenario,
            job,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let rows = vec![Row {
            param: 0.1,
            scheme: Scheme::MadepClosed,
            metric: "madep".into(),
            mean: 0.123456789012345,
            stderr: 0.0,
            n: 1,
            seed: 7,
        }];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        assert_eq!(read_csv(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn allocation_sweeps_reject_optimisers() {
        let s = SweepSpec::new(SweepParam::A1, vec![0.1], vec![Scheme::RsmaAo]);
        assert!(s.validate().is_err());
        let s = SweepSpec::new(SweepParam::A1, vec![], vec![Scheme::MadepClosed]);
        assert!(s.validate().is_err());
    }
}

//! Command line front end: detection-probability tables, optimiser sweeps,
//! single-realization runs and the figure presets.

mod presets;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use covert_rsma::alloc::AllocParams;
use covert_rsma::channel::sample_channels;
use covert_rsma::covert::{madep, DetectionContext};
use covert_rsma::driver::{
    realization_rngs, run_scheme, Job, Manifest, Scheme, SchemeOptions, SweepParam, SweepSpec,
};
use covert_rsma::rates::PowerAllocation;
use covert_rsma::scenario::Scenario;
use covert_rsma::Error;

#[derive(Parser)]
#[command(name = "covert-rsma", version, about = "Covert rate optimisation for STAR-RIS aided RSMA downlinks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override one key, e.g. `--set pt_dbm=30` or `--set sweep.mc_channels=1000`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long, global = true)]
    realizations: Option<usize>,
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form and Monte Carlo detection probability over a grid.
    Madep {
        #[arg(long, default_value = "a1")]
        param: SweepParam,
        /// Comma list or `start:step:stop`.
        #[arg(long)]
        values: Option<String>,
        /// Replay a manifest written by an earlier run.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        name: Option<String>,
    },
    /// Print path losses, the covertness limit and sample detection
    /// probabilities of the configured scenario.
    Validate,
    /// Run optimisers on one channel realization.
    Optimize {
        #[arg(long, default_value = "rsma_ao,noma_ao")]
        schemes: String,
        #[arg(long, default_value_t = 0)]
        realization: usize,
        #[arg(long)]
        name: Option<String>,
    },
    /// Average scheme outcomes over realizations for each value of a parameter.
    Sweep {
        #[arg(long)]
        param: Option<SweepParam>,
        #[arg(long)]
        values: Option<String>,
        #[arg(long)]
        schemes: Option<String>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        name: Option<String>,
    },
    /// Regenerate the data of one figure.
    Figure { name: String },
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config { .. } | Error::Param { .. } | Error::Parse(_) | Error::Json(_) => 2,
            Error::Infeasible(_) => 3,
            _ => 1,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn config_err(msg: impl Into<String>) -> Failure {
    Failure { code: 2, msg: msg.into() }
}

type Res<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Res<()> {
    let g = &cli.global;
    match &cli.cmd {
        Cmd::Madep { param, values, manifest, name } => {
            let (sc, job, name) = match manifest {
                Some(m) => load_manifest(m, name.as_deref())?,
                None => {
                    let values = parse_values(values.as_deref().unwrap_or("0.1:0.1:0.9"))?;
                    let spec = SweepSpec::new(*param, values, vec![Scheme::MadepClosed, Scheme::MadepMc]);
                    let n = name.clone().unwrap_or_else(|| format!("madep_{param}"));
                    (Scenario::default(), Job::Madep { spec }, n)
                }
            };
            execute(g, sc, &[], job, &name, manifest.is_some())
        }
        Cmd::Sweep { param, values, schemes, manifest, name } => {
            let (sc, job, name) = match manifest {
                Some(m) => load_manifest(m, name.as_deref())?,
                None => {
                    let param = param.ok_or_else(|| config_err("sweep needs --param or --manifest"))?;
                    let values = parse_values(values.as_deref().unwrap_or(""))?;
                    let schemes = match schemes {
                        Some(s) => parse_schemes(s)?,
                        None if param.is_allocation() => vec![Scheme::MadepClosed, Scheme::MadepMc],
                        None => Scheme::ALL.into_iter().filter(|s| !s.is_madep()).collect(),
                    };
                    let n = name.clone().unwrap_or_else(|| format!("sweep_{param}"));
                    (Scenario::default(), Job::Sweep { spec: SweepSpec::new(param, values, schemes) }, n)
                }
            };
            execute(g, sc, &[], job, &name, manifest.is_some())
        }
        Cmd::Figure { name } => {
            let Some(presets) = presets::figure(name) else {
                return Err(config_err(format!(
                    "unknown figure `{name}`; expected one of {}",
                    presets::FIGURES.join(", ")
                )));
            };
            for p in presets {
                execute(g, Scenario::default(), &p.scenario, p.job, &p.file, false)?;
            }
            Ok(())
        }
        Cmd::Validate => validate(g),
        Cmd::Optimize { schemes, realization, name } => optimize(g, schemes, *realization, name.as_deref()),
    }
}

fn parse_values(s: &str) -> Res<Vec<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Err(config_err("empty value grid"));
    }
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| config_err(format!("bad value `{t}`")));
    let out = if let [a, b, c] = s.split(':').collect::<Vec<_>>()[..] {
        let (start, step, stop) = (num(a)?, num(b)?, num(c)?);
        if step <= 0.0 || stop < start {
            return Err(config_err(format!("bad range `{s}`")));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect()
    } else {
        s.split(',').filter(|t| !t.trim().is_empty()).map(num).collect::<Res<Vec<_>>>()?
    };
    if out.is_empty() {
        return Err(config_err("empty value grid"));
    }
    Ok(out)
}

fn parse_schemes(s: &str) -> Res<Vec<Scheme>> {
    Ok(s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<Scheme>())
        .collect::<covert_rsma::Result<Vec<_>>>()?)
}

fn load_manifest(path: &Path, name: Option<&str>) -> Res<(Scenario, Job, String)> {
    let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let m = Manifest::from_json(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    Ok((m.scenario, m.job, name.map(str::to_string).unwrap_or(m.name)))
}

/// Layers preset keys, the config file and `--set` onto `sc`. Dotted keys
/// go to the job.
fn layer(g: &Global, sc: &mut Scenario, preset: &[(&str, String)], job: &mut Job) -> Res<()> {
    sc.apply(preset.iter().map(|(k, v)| (*k, v.as_str())))?;
    let mut dotted: Vec<(String, String, String)> = Vec::new();
    if let Some(path) = &g.config {
        let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let rest = sc.apply_config(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        for (line, k, v) in rest {
            dotted.push((format!("{}:{line}", path.display()), k, v));
        }
    }
    let mut own = Vec::new();
    for s in &g.sets {
        let Some((k, v)) = s.split_once('=') else {
            return Err(config_err(format!("--set expects KEY=VALUE, got `{s}`")));
        };
        let (k, v) = (k.trim(), v.trim());
        if k.contains('.') {
            dotted.push(("--set".into(), k.to_string(), v.to_string()));
        } else {
            own.push((k, v));
        }
    }
    sc.apply(own)?;
    for (origin, k, v) in dotted {
        let Some(key) = k.strip_prefix("sweep.") else {
            return Err(config_err(format!("{origin}: unknown key `{k}`")));
        };
        let r = match job {
            Job::Sweep { spec } | Job::Madep { spec } => spec.set(key, &v),
            Job::Trace { spec } => spec.set(key, &v),
        };
        r.map_err(|e| config_err(format!("{origin}: {e}")))?;
    }
    if let Some(seed) = g.seed {
        sc.seed = seed;
        match job {
            Job::Sweep { spec } | Job::Madep { spec } => spec.seed = seed,
            Job::Trace { spec } => spec.seed = seed,
        }
    }
    if let Some(n) = g.realizations {
        match job {
            Job::Sweep { spec } | Job::Madep { spec } => spec.realizations = n,
            Job::Trace { spec } => spec.realizations = n,
        }
    }
    Ok(())
}

fn execute(g: &Global, mut sc: Scenario, preset: &[(&str, String)], mut job: Job, name: &str, replay: bool) -> Res<()> {
    layer(g, &mut sc, preset, &mut job)?;
    if g.verbose {
        eprintln!("{name}: running{}", if replay { " (replay)" } else { "" });
    }
    let res = job.run(&sc)?;
    for w in &res.warnings {
        eprintln!("warning: {w}");
    }
    fs::create_dir_all(&g.out).map_err(|e| Failure { code: 1, msg: format!("{}: {e}", g.out.display()) })?;
    let csv = g.out.join(format!("{name}.csv"));
    let mut buf = Vec::new();
    job.write_csv(&res, &mut buf)?;
    write(&csv, &buf)?;
    let manifest = Manifest::new(name, sc, job);
    write(&g.out.join(format!("{name}.json")), manifest.to_json()?.as_bytes())?;
    if g.verbose {
        eprintln!("{name}: wrote {}", csv.display());
    }
    if res.infeasible_everywhere() {
        return Err(Failure {
            code: 3,
            msg: format!("{name}: no scheme found a feasible point at any value"),
        });
    }
    Ok(())
}

fn write(path: &Path, bytes: &[u8]) -> Res<()> {
    fs::write(path, bytes).map_err(|e| Failure { code: 1, msg: format!("{}: {e}", path.display()) })
}

fn scenario_only(g: &Global) -> Res<Scenario> {
    let mut sc = Scenario::default();
    let mut job = Job::Sweep {
        spec: SweepSpec::new(SweepParam::PtDbm, vec![sc.pt_dbm], Vec::new()),
    };
    layer(g, &mut sc, &[], &mut job)?;
    Ok(sc)
}

fn validate(g: &Global) -> Res<()> {
    let sc = scenario_only(g)?;
    let pl = sc.path_losses()?;
    let limit = AllocParams::new(&sc, &pl).covert_limit();
    let samples: Vec<_> = (1..=9)
        .map(|i| {
            let a1 = i as f64 / 10.0;
            let alloc = PowerAllocation::new(1.0 - a1, a1, 0.0)?;
            let ctx = DetectionContext::new(&sc, &pl, &alloc);
            Ok(json!({ "a1": a1, "madep": madep(&alloc, &ctx) }))
        })
        .collect::<covert_rsma::Result<_>>()?;
    let report = json!({
        "scenario": sc,
        "path_losses": pl,
        "phi": pl.phi,
        "lambda_n": pl.lambda_n,
        "covert_limit": limit.as_ref().ok(),
        "covert_limit_error": limit.as_ref().err().map(|e| e.to_string()),
        "madep_samples": samples,
    });
    let text = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    let _ = writeln!(io::stdout(), "{text}");
    Ok(())
}

fn optimize(g: &Global, schemes: &str, realization: usize, name: Option<&str>) -> Res<()> {
    let sc = scenario_only(g)?;
    let schemes = parse_schemes(schemes)?;
    if schemes.is_empty() {
        return Err(config_err("no schemes given"));
    }
    if let Some(s) = schemes.iter().find(|s| s.is_madep()) {
        return Err(config_err(format!("{s} is not an optimiser")));
    }
    let opts = SchemeOptions::from_scenario(&sc);
    let (mut rc, _) = realization_rngs(sc.seed, realization);
    let ch = sample_channels(&sc, &mut rc);
    let mut results = Vec::new();
    let mut any = false;
    for &s in &schemes {
        let (_, mut rp) = realization_rngs(sc.seed, realization);
        let o = run_scheme(s, &sc, &ch, &opts, &mut rp)?;
        any |= o.feasible;
        match &o.failure {
            None => println!("{s}: covert rate {:.6} bit/s/Hz in {} iterations", o.covert_rate, o.iterations),
            Some(f) => println!("{s}: {f}"),
        }
        results.push(json!({ "scheme": s, "outcome": o }));
    }
    let name = name.map(str::to_string).unwrap_or_else(|| format!("optimize_r{realization}"));
    fs::create_dir_all(&g.out).map_err(|e| Failure { code: 1, msg: format!("{}: {e}", g.out.display()) })?;
    let doc = json!({
        "scenario": sc,
        "seed": sc.seed,
        "realization": realization,
        "results": results,
    });
    let text = serde_json::to_string_pretty(&doc).map_err(Error::from)?;
    write(&g.out.join(format!("{name}.json")), text.as_bytes())?;
    if !any {
        return Err(Failure {
            code: 3,
            msg: "no scheme found a feasible point".into(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_lists() {
        assert_eq!(parse_values("0.1:0.1:0.3").ok().unwrap(), vec![0.1, 0.2, 0.3]);
        assert_eq!(parse_values("1, 2,3").ok().unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_values("").err().unwrap().code, 2);
        assert_eq!(parse_values("1:0:2").err().unwrap().code, 2);
    }
}

//! Parameter presets of the simulation figures.

use covert_rsma::driver::{Job, Scheme, SweepParam, SweepSpec, TraceSpec};

pub const FIGURES: [&str; 8] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig10"];

/// One output file of a figure: scenario overrides plus the job.
pub struct Preset {
    pub file: String,
    pub scenario: Vec<(&'static str, String)>,
    pub job: Job,
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9).collect()
}

const RATE_SCHEMES: [Scheme; 8] = [
    Scheme::RsmaAo,
    Scheme::NomaAo,
    Scheme::RsmaFixedBeta,
    Scheme::RsmaRandomPhase,
    Scheme::NomaRandomPhase,
    Scheme::NoRis,
    Scheme::RsmaImperfectSic,
    Scheme::NomaImperfectSic,
];

const MADEP_SCHEMES: [Scheme; 2] = [Scheme::MadepClosed, Scheme::MadepMc];

fn rate_sweep(param: SweepParam, values: Vec<f64>) -> Job {
    Job::Sweep {
        spec: SweepSpec::new(param, values, RATE_SCHEMES.to_vec()),
    }
}

fn madep_sweep(param: SweepParam, values: Vec<f64>, a1: f64) -> Job {
    Job::Madep {
        spec: SweepSpec {
            a1_fixed: a1,
            ..SweepSpec::new(param, values, MADEP_SCHEMES.to_vec())
        },
    }
}

fn s(pairs: &[(&'static str, &str)]) -> Vec<(&'static str, String)> {
    pairs.iter().map(|(k, v)| (*k, v.to_string())).collect()
}

pub fn figure(name: &str) -> Option<Vec<Preset>> {
    let base = s(&[("pt_dbm", "25"), ("k", "64"), ("k_n", "32"), ("k_m", "32"), ("epsilon", "0.05"), ("rg_min_bps", "1")]);
    let with = |extra: &[(&'static str, &str)]| {
        let mut v = base.clone();
        for (k, val) in extra {
            v.retain(|(key, _)| key != k);
            v.push((k, val.to_string()));
        }
        v
    };
    let out = match name {
        "fig2" => {
            let sc = with(&[("k", "72"), ("k_n", "40"), ("k_m", "32")]);
            let mut v = vec![Preset {
                file: "fig2b".into(),
                scenario: sc.clone(),
                job: madep_sweep(SweepParam::A1, grid(0.05, 0.95, 0.05), 0.2),
            }];
            for a1 in [0.2, 0.6] {
                v.push(Preset {
                    file: format!("fig2a_a1_{a1}"),
                    scenario: sc.clone(),
                    job: madep_sweep(SweepParam::A0, grid(0.0, 1.0 - a1, 0.05), a1),
                });
            }
            v
        }
        "fig3" => [0.2, 0.6]
            .into_iter()
            .map(|a1| Preset {
                file: format!("fig3_a1_{a1}"),
                scenario: with(&[("k", "128"), ("k_n", "64"), ("k_m", "64")]),
                job: madep_sweep(SweepParam::KN, grid(8.0, 120.0, 8.0), a1),
            })
            .collect(),
        "fig4" => [20, 30]
            .into_iter()
            .map(|pt| Preset {
                file: format!("fig4_pt{pt}"),
                scenario: with(&[("pt_dbm", &pt.to_string())]),
                job: Job::Trace {
                    spec: TraceSpec {
                        schemes: vec![Scheme::RsmaAo],
                        realizations: 50,
                        seed: 1,
                        max_outer: 50,
                    },
                },
            })
            .collect(),
        "fig5" => vec![Preset {
            file: "fig5".into(),
            scenario: base.clone(),
            job: rate_sweep(SweepParam::PtDbm, grid(10.0, 40.0, 5.0)),
        }],
        "fig6" => vec![Preset {
            file: "fig6".into(),
            scenario: with(&[("rg_min_bps", "0.5")]),
            job: rate_sweep(SweepParam::Epsilon, vec![0.01, 0.02, 0.05, 0.1, 0.15, 0.2]),
        }],
        "fig7" => vec![Preset {
            file: "fig7".into(),
            scenario: base.clone(),
            job: rate_sweep(SweepParam::RgMin, grid(0.5, 3.0, 0.5)),
        }],
        "fig8" => vec![Preset {
            file: "fig8".into(),
            scenario: with(&[("epsilon", "0.1")]),
            job: rate_sweep(SweepParam::KN, grid(8.0, 56.0, 8.0)),
        }],
        "fig10" => vec![Preset {
            file: "fig10".into(),
            scenario: with(&[("pt_dbm", "30"), ("epsilon", "0.1")]),
            job: rate_sweep(SweepParam::RisX, grid(20.0, 90.0, 10.0)),
        }],
        _ => return None,
    };
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_figure_has_a_preset() {
        for f in FIGURES {
            assert!(!figure(f).unwrap().is_empty(), "{f}");
        }
        assert!(figure("fig9").is_none());
    }

    #[test]
    fn grids_are_clean() {
        assert_eq!(grid(0.05, 0.15, 0.05), vec![0.05, 0.1, 0.15]);
        assert_eq!(grid(8.0, 24.0, 8.0), vec![8.0, 16.0, 24.0]);
    }
}

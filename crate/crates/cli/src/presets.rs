//! Named, ready-to-run experiments with overridable numeric parameters.

use std::collections::BTreeMap;

use bbmlab::evolution::{Method, SolverConfig, SystemCoefficients};
use bbmlab::unique_continuation::{Branch, Verdict};

use crate::config::{
    DataPreset, Diagnostic, DomainSpec, Equation, ExperimentConfig, InitialData, LawSpec, UcKind,
};
use crate::error::CliError;

pub struct PresetInfo {
    pub name: &'static str,
    pub summary: &'static str,
    /// Parameter names and defaults; every preset also accepts `seed`.
    pub params: &'static [(&'static str, f64)],
}

pub const CATALOG: &[PresetInfo] = &[
    PresetInfo {
        name: "zz1-stationary",
        summary: "periodic two-level step c0 / -2-c0; stays put under BBM",
        params: &[
            ("c0", -2.0),
            ("a", 0.25),
            ("b", 0.6),
            ("n", 512.0),
            ("t_final", 5.0),
            ("dt", 1e-3),
        ],
    },
    PresetInfo {
        name: "ex1-stationary",
        summary: "-2 on [a, b], 0 elsewhere on the line; stays put under BBM",
        params: &[
            ("a", -1.5),
            ("b", 2.0),
            ("n", 512.0),
            ("t_final", 5.0),
            ("dt", 1e-3),
        ],
    },
    PresetInfo {
        name: "tha2-falsify",
        summary: "u = -1 on [a, b] plus a bump outside; the time-derivative hypothesis must fail",
        params: &[
            ("a", -1.0),
            ("b", 1.0),
            ("height", 0.3),
            ("center", 3.0),
            ("half_width", 1.0),
            ("n", 2048.0),
        ],
    },
    PresetInfo {
        name: "tha3-construct",
        summary: "compactly supported data with d_t u = 0 on [0, b] at level c0",
        params: &[
            ("c0", 1.0),
            ("b", 1.0),
            ("margin", 24.0),
            ("cells_per_unit", 128.0),
        ],
    },
    PresetInfo {
        name: "thap3-construct",
        summary:
            "periodic data equal to c0 on [a, b] with d_t u(a) = d_t u(b), via the Q bisection",
        params: &[("c0", 0.0), ("a", 0.3), ("b", 0.6), ("n", 1024.0)],
    },
    PresetInfo {
        name: "regularity-gain",
        summary: "random-phase power-law data: spectral slope of u(t) - u0 versus u0",
        params: &[
            ("slope", 1.5),
            ("s", 1.0),
            ("amplitude", 1.0),
            ("n", 1024.0),
            ("t_final", 0.5),
            ("seed", 12.0),
        ],
    },
    PresetInfo {
        name: "singularity-persistence",
        summary: "|sin(pi x)|: the corner at x = 0 neither moves nor smooths",
        params: &[("n", 2048.0), ("t_final", 1.0), ("dt", 1e-3)],
    },
    PresetInfo {
        name: "peakon-speed",
        summary: "Camassa-Holm peakon; crest travels at speed c",
        params: &[("c", 1.0), ("n", 8192.0), ("t_final", 0.5), ("dt", 1e-3)],
    },
    PresetInfo {
        name: "ch-uc-check",
        summary:
            "Camassa-Holm: u = 0 on [a, b] with a bump outside fails the continuation hypothesis",
        params: &[
            ("a", -1.0),
            ("b", 1.0),
            ("height", 0.8),
            ("center", -4.0),
            ("n", 3001.0),
        ],
    },
    PresetInfo {
        name: "level-set-check",
        summary: "periodic step at level c0: continuation check on both branches",
        params: &[("c0", 0.5), ("a", 0.25), ("b", 0.6), ("n", 512.0)],
    },
    PresetInfo {
        name: "system-reduction",
        summary: "coupled system with v0 = 0, D = 0, A = 1/2 reproduces scalar BBM",
        params: &[
            ("B", 0.3),
            ("C", -0.2),
            ("E", 0.7),
            ("F", 0.1),
            ("n", 256.0),
            ("t_final", 1.0),
        ],
    },
    PresetInfo {
        name: "conservation",
        summary: "drift of the three invariants for 0.1 sin(2 pi x)",
        params: &[
            ("amplitude", 0.1),
            ("n", 512.0),
            ("t_final", 10.0),
            ("dt", 1e-3),
        ],
    },
    PresetInfo {
        name: "method-agreement",
        summary: "Picard, RK4 and exponential integrator on the same data",
        params: &[("n", 256.0), ("t_final", 0.1), ("dt", 1e-3)],
    },
    PresetInfo {
        name: "operator-identities",
        summary: "dx phi(D) = J^-2 - I on random band-limited data",
        params: &[("n", 256.0), ("samples", 100.0), ("k_max", 60.0)],
    },
];

pub fn find(name: &str) -> Option<&'static PresetInfo> {
    CATALOG.iter().find(|p| p.name == name)
}

struct Params<'a> {
    name: &'a str,
    values: BTreeMap<String, f64>,
}

impl Params<'_> {
    fn get(&self, key: &str) -> f64 {
        self.values[key]
    }

    fn count(&self, key: &str) -> Result<usize, CliError> {
        let v = self.get(key);
        if v >= 1.0 && v.fract() == 0.0 && v < 1e9 {
            Ok(v as usize)
        } else {
            Err(CliError::Preset {
                name: self.name.into(),
                message: format!("{key} must be a positive integer, got {v}"),
            })
        }
    }

    fn seed(&self) -> Result<u64, CliError> {
        let v = self.values.get("seed").copied().unwrap_or(0.0);
        if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(53) {
            Ok(v as u64)
        } else {
            Err(CliError::Preset {
                name: self.name.into(),
                message: format!("seed must be a non-negative integer, got {v}"),
            })
        }
    }
}

/// Parses `k=v` overrides.
pub fn parse_overrides(pairs: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    pairs
        .iter()
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| CliError::Io(format!("--param expects key=value, got {p:?}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|e| CliError::Io(format!("--param {k}: {e}")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn rk4(dt: f64, t_final: f64, snapshots: usize) -> SolverConfig {
    let steps = (t_final / dt).round().max(1.0) as usize;
    SolverConfig::new(Method::RungeKutta4, dt, t_final)
        .with_stride((steps / snapshots.max(1)).max(1))
}

/// Builds the configuration for preset `name` with `overrides` applied.
pub fn build(name: &str, overrides: &BTreeMap<String, f64>) -> Result<ExperimentConfig, CliError> {
    let info = find(name).ok_or_else(|| CliError::Preset {
        name: name.into(),
        message: format!(
            "unknown preset; available: {}",
            CATALOG
                .iter()
                .map(|p| p.name)
                .collect::<Vec<_>>()
                .join(", ")
        ),
    })?;
    let mut values: BTreeMap<String, f64> = info
        .params
        .iter()
        .map(|&(k, v)| (k.to_string(), v))
        .collect();
    for (k, v) in overrides {
        if k != "seed" && !values.contains_key(k) {
            return Err(CliError::Preset {
                name: name.into(),
                message: format!(
                    "unknown parameter {k:?}; accepted: {}",
                    info.params
                        .iter()
                        .map(|p| p.0)
                        .chain(["seed"])
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            });
        }
        values.insert(k.clone(), *v);
    }
    let p = Params { name, values };
    let base = |domain, initial_data, solver, diagnostics| -> Result<ExperimentConfig, CliError> {
        Ok(ExperimentConfig {
            name: name.into(),
            seed: p.seed()?,
            domain,
            equation: Equation::Bbm,
            initial_data,
            solver,
            diagnostics,
            output_dir: None,
        })
    };
    let preset = |d: DataPreset| InitialData::Preset(d);
    let cfg = match name {
        "zz1-stationary" => base(
            DomainSpec::Circle { n: p.count("n")? },
            preset(DataPreset::Step {
                c0: p.get("c0"),
                a: p.get("a"),
                b: p.get("b"),
            }),
            Some(rk4(p.get("dt"), p.get("t_final"), 10)),
            vec![Diagnostic::SupDrift {
                tolerance: Some(1e-10),
            }],
        )?,
        "ex1-stationary" => base(
            DomainSpec::Line {
                left: -10.0,
                right: 10.0,
                n: p.count("n")?,
            },
            preset(DataPreset::Step {
                c0: -2.0,
                a: p.get("a"),
                b: p.get("b"),
            }),
            Some(rk4(p.get("dt"), p.get("t_final"), 10)),
            vec![Diagnostic::SupDrift {
                tolerance: Some(1e-10),
            }],
        )?,
        "tha2-falsify" => {
            let expect = if p.get("height") == 0.0 {
                Verdict::ForcedConstant
            } else {
                Verdict::HypothesisFails
            };
            base(
                DomainSpec::Line {
                    left: -12.0,
                    right: 12.0,
                    n: p.count("n")?,
                },
                preset(DataPreset::Bump {
                    level: -1.0,
                    height: p.get("height"),
                    center: p.get("center"),
                    half_width: p.get("half_width"),
                }),
                None,
                vec![Diagnostic::UcCheck {
                    check: UcKind::MinusOne,
                    a: p.get("a"),
                    b: p.get("b"),
                    expect: Some(expect),
                }],
            )?
        }
        "tha3-construct" => {
            let (b, margin, cells) = (p.get("b"), p.get("margin"), p.count("cells_per_unit")?);
            // Two spare units either side of [-margin, b + margin]; the
            // endpoints land on nodes when margin and b are multiples of h.
            let left = -(margin + 2.0);
            let right = b + margin + 2.0;
            let n = ((right - left) * cells as f64).round() as usize + 1;
            base(
                DomainSpec::Line { left, right, n },
                preset(DataPreset::CompactStationary {
                    c0: p.get("c0"),
                    b,
                    margin,
                }),
                None,
                vec![Diagnostic::Stationarity {
                    a: 0.0,
                    b,
                    tolerance: 1e-8,
                }],
            )?
        }
        "thap3-construct" => {
            let (c0, a, b) = (p.get("c0"), p.get("a"), p.get("b"));
            base(
                DomainSpec::Circle { n: p.count("n")? },
                preset(DataPreset::PeriodicBalanced { c0, a, b }),
                None,
                vec![Diagnostic::QFunctional {
                    a,
                    b,
                    c0,
                    tolerance: 1e-10,
                }],
            )?
        }
        "regularity-gain" => {
            let s = p.get("s");
            let (min_slope_diff, min_gain) = if s >= 0.5 {
                (Some(2.3), None)
            } else {
                (None, Some(0.7))
            };
            base(
                DomainSpec::Circle { n: p.count("n")? },
                InitialData::SpectralLaw(LawSpec {
                    slope: p.get("slope"),
                    seed: None,
                    amplitude: p.get("amplitude"),
                    k_max: None,
                }),
                Some(rk4(1e-3, p.get("t_final"), 1)),
                vec![Diagnostic::RegularityGain {
                    s_nominal: s,
                    band: (8, p.count("n")? / 4),
                    min_slope_diff,
                    min_gain,
                    refinement_sizes: vec![256, 512, 1024],
                    max_ratio: Some(1.1),
                }],
            )?
        }
        "singularity-persistence" => base(
            DomainSpec::Circle { n: p.count("n")? },
            preset(DataPreset::AbsSine),
            Some(rk4(p.get("dt"), p.get("t_final"), 10)),
            vec![Diagnostic::Singularity {
                j: 1,
                eta: 0.0,
                threshold: bbmlab::diagnostics::DEFAULT_SINGULARITY_THRESHOLD,
                expect: Some(vec![0.0]),
            }],
        )?,
        "peakon-speed" => {
            let mut cfg = base(
                DomainSpec::Line {
                    left: -30.0,
                    right: 30.0,
                    n: p.count("n")?,
                },
                preset(DataPreset::Peakon { c: p.get("c") }),
                Some(rk4(p.get("dt"), p.get("t_final"), 5)),
                vec![Diagnostic::PeakSpeed {
                    c: p.get("c"),
                    rel_tolerance: 0.02,
                }],
            )?;
            cfg.equation = Equation::CamassaHolm;
            cfg
        }
        "ch-uc-check" => base(
            DomainSpec::Line {
                left: -15.0,
                right: 15.0,
                n: p.count("n")?,
            },
            preset(DataPreset::Bump {
                level: 0.0,
                height: p.get("height"),
                center: p.get("center"),
                half_width: 1.5,
            }),
            None,
            vec![Diagnostic::UcCheck {
                check: UcKind::CamassaHolm,
                a: p.get("a"),
                b: p.get("b"),
                expect: Some(if p.get("height") == 0.0 {
                    Verdict::ForcedConstant
                } else {
                    Verdict::HypothesisFails
                }),
            }],
        )?,
        "level-set-check" => {
            let (c0, a, b) = (p.get("c0"), p.get("a"), p.get("b"));
            let check = |branch| Diagnostic::UcCheck {
                check: UcKind::LevelSet { c0, branch },
                a,
                b,
                expect: None,
            };
            base(
                DomainSpec::Circle { n: p.count("n")? },
                preset(DataPreset::Step { c0, a, b }),
                None,
                vec![check(Branch::Cond1), check(Branch::Cond2)],
            )?
        }
        "system-reduction" => {
            let mut cfg = base(
                DomainSpec::Circle { n: p.count("n")? },
                preset(DataPreset::Sine {
                    amplitude: 0.2,
                    k: 1,
                }),
                Some(rk4(1e-3, p.get("t_final"), 10)),
                vec![Diagnostic::ScalarReduction { tolerance: 1e-10 }],
            )?;
            cfg.equation = Equation::System {
                coefficients: SystemCoefficients {
                    A: 0.5,
                    B: p.get("B"),
                    C: p.get("C"),
                    D: 0.0,
                    E: p.get("E"),
                    F: p.get("F"),
                },
                v0: None,
            };
            cfg
        }
        "conservation" => base(
            DomainSpec::Circle { n: p.count("n")? },
            preset(DataPreset::Sine {
                amplitude: p.get("amplitude"),
                k: 1,
            }),
            Some(rk4(p.get("dt"), p.get("t_final"), 20)),
            vec![Diagnostic::InvariantDrift {
                max_i1: Some(1e-13),
                max_i23: Some(1e-8),
            }],
        )?,
        "method-agreement" => base(
            DomainSpec::Circle { n: p.count("n")? },
            preset(DataPreset::Sine {
                amplitude: 0.1,
                k: 1,
            }),
            Some(rk4(p.get("dt"), p.get("t_final"), 10)),
            vec![Diagnostic::MethodAgreement {
                methods: vec![Method::PicardFixedPoint, Method::ExponentialDuhamel],
                tolerance: 1e-7,
            }],
        )?,
        "operator-identities" => base(
            DomainSpec::Circle { n: p.count("n")? },
            preset(DataPreset::Constant { value: 0.0 }),
            None,
            vec![Diagnostic::OperatorIdentity {
                samples: p.count("samples")?,
                k_max: p.count("k_max")?,
                tolerance: 1e-12,
            }],
        )?,
        _ => unreachable!("catalog entry without a builder"),
    };
    cfg.validate().map_err(|message| CliError::Preset {
        name: name.into(),
        message,
    })?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_catalog_entry_builds() {
        for p in CATALOG {
            let cfg = build(p.name, &BTreeMap::new()).unwrap();
            assert_eq!(cfg.name, p.name);
        }
    }

    #[test]
    fn unknown_parameter_is_rejected() {
        let over = BTreeMap::from([("gamma".to_string(), 1.0)]);
        assert!(matches!(
            build("conservation", &over),
            Err(CliError::Preset { .. })
        ));
    }

    #[test]
    fn overrides_are_applied() {
        let over = parse_overrides(&["c0=0.5".into(), "seed=4".into()]).unwrap();
        let cfg = build("zz1-stationary", &over).unwrap();
        assert_eq!(cfg.seed, 4);
        assert!(
            matches!(cfg.initial_data, InitialData::Preset(DataPreset::Step { c0, .. }) if c0 == 0.5)
        );
    }
}

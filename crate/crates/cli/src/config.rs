//! Experiment configuration: a strict JSON schema, parsed as binary64.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use bbmlab::data::SpectralLaw;
use bbmlab::evolution::{Method, SolverConfig, SystemCoefficients};
use bbmlab::unique_continuation::{Branch, Verdict};
use bbmlab::{Domain, Grid};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub domain: DomainSpec,
    #[serde(default)]
    pub equation: Equation,
    pub initial_data: InitialData,
    /// Without a solver only the initial data is emitted and analysed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub diagnostics: Vec<Diagnostic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Circle { n: usize },
    Line { left: f64, right: f64, n: usize },
}

impl DomainSpec {
    pub fn grid(&self) -> bbmlab::Result<Grid> {
        match *self {
            DomainSpec::Circle { n } => Grid::circle(n),
            DomainSpec::Line { left, right, n } => Grid::new(Domain::Line { left, right }, n),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Equation {
    #[default]
    Bbm,
    CamassaHolm,
    /// Coupled system; `v0` defaults to zero.
    System {
        coefficients: SystemCoefficients,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v0: Option<Box<InitialData>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Preset(DataPreset),
    Samples(Vec<f64>),
    SpectralLaw(LawSpec),
}

/// A spectral law whose seed falls back to the experiment seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    pub slope: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<u64>,
}

impl LawSpec {
    pub fn law(&self, experiment_seed: u64) -> SpectralLaw {
        SpectralLaw {
            slope: self.slope,
            seed: self.seed.unwrap_or(experiment_seed),
            amplitude: self.amplitude,
            k_max: self.k_max,
        }
    }
}

fn one() -> f64 {
    1.0
}

/// Named initial-data families. Unknown names fail at parse time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataPreset {
    Constant {
        value: f64,
    },
    /// `amplitude sin(2 pi k x)` on the circle.
    Sine {
        amplitude: f64,
        k: u32,
    },
    /// `|sin(pi x)|`, a single corner at `x = 0`.
    AbsSine,
    /// Value `c0` on `[a, b]` and `-2 - c0` elsewhere.
    Step {
        c0: f64,
        a: f64,
        b: f64,
    },
    /// `level + height * bump(center, half_width)`.
    Bump {
        level: f64,
        height: f64,
        center: f64,
        half_width: f64,
    },
    /// Random band-limited trigonometric polynomial drawn from the experiment seed.
    RandomTrig {
        k_max: usize,
    },
    Peakon {
        c: f64,
    },
    /// Compactly supported data stationary on `[0, b]` at level `c0`.
    CompactStationary {
        c0: f64,
        b: f64,
        margin: f64,
    },
    /// Periodic data with `d_t u(a) = d_t u(b)` and `u = c0` on `[a, b]`.
    PeriodicBalanced {
        c0: f64,
        a: f64,
        b: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Diagnostic {
    /// Largest relative drift of the three invariants.
    InvariantDrift {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_i1: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_i23: Option<f64>,
    },
    /// `max_t |u(t) - u0|_inf`.
    SupDrift {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    RegularityGain {
        s_nominal: f64,
        band: (usize, usize),
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_slope_diff: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_gain: Option<f64>,
        #[serde(default)]
        refinement_sizes: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_ratio: Option<f64>,
    },
    Singularity {
        j: usize,
        eta: f64,
        #[serde(default = "default_threshold")]
        threshold: f64,
        /// Expected locations; each snapshot must match them within one cell.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<Vec<f64>>,
    },
    /// Unique-continuation check applied to the initial data.
    UcCheck {
        check: UcKind,
        a: f64,
        b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<Verdict>,
    },
    /// `max |d_t u0|` over the nodes of `[a, b]`.
    Stationarity { a: f64, b: f64, tolerance: f64 },
    QFunctional {
        a: f64,
        b: f64,
        c0: f64,
        tolerance: f64,
    },
    /// Camassa–Holm peak position against `c t`.
    PeakSpeed { c: f64, rel_tolerance: f64 },
    /// Reruns the evolution with other methods and compares snapshots.
    MethodAgreement {
        methods: Vec<Method>,
        tolerance: f64,
    },
    /// System run against scalar BBM from the same `u0`.
    ScalarReduction { tolerance: f64 },
    /// `dx phi(D) f = (J^{-2} - I) f` for random band-limited `f` on the grid.
    OperatorIdentity {
        samples: usize,
        k_max: usize,
        tolerance: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UcKind {
    MinusOne,
    LevelSet { c0: f64, branch: Branch },
    CamassaHolm,
}

fn default_threshold() -> f64 {
    bbmlab::diagnostics::DEFAULT_SINGULARITY_THRESHOLD
}

impl ExperimentConfig {
    /// Parses JSON text; `origin` labels error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Config {
            origin: origin.to_string(),
            message: e.to_string(),
        })?;
        cfg.validate().map_err(|message| CliError::Config {
            origin: origin.to_string(),
            message,
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Semantic checks, reported with the offending field path.
    pub fn validate(&self) -> Result<(), String> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(format!(
                "name: {:?} must be non-empty and use only [A-Za-z0-9_-]",
                self.name
            ));
        }
        let grid = self.domain.grid().map_err(|e| format!("domain: {e}"))?;
        if let Some(s) = &self.solver {
            s.validate().map_err(|e| format!("solver: {e}"))?;
        }
        if let InitialData::Samples(v) = &self.initial_data {
            if v.len() != grid.n_points() {
                return Err(format!(
                    "initial_data.samples: {} values for a grid of {} points",
                    v.len(),
                    grid.n_points()
                ));
            }
        }
        if let Equation::System { coefficients, .. } = &self.equation {
            coefficients
                .validate()
                .map_err(|e| format!("equation.coefficients: {e}"))?;
        }
        for (i, d) in self.diagnostics.iter().enumerate() {
            let needs_solver = matches!(
                d,
                Diagnostic::InvariantDrift { .. }
                    | Diagnostic::SupDrift { .. }
                    | Diagnostic::RegularityGain { .. }
                    | Diagnostic::PeakSpeed { .. }
                    | Diagnostic::MethodAgreement { .. }
                    | Diagnostic::ScalarReduction { .. }
            );
            if needs_solver && self.solver.is_none() {
                return Err(format!("diagnostics[{i}]: requires a solver section"));
            }
            if let Diagnostic::RegularityGain {
                refinement_sizes, ..
            } = d
            {
                if !refinement_sizes.is_empty()
                    && !matches!(self.initial_data, InitialData::SpectralLaw(_))
                {
                    return Err(format!(
                        "diagnostics[{i}].refinement_sizes: needs spectral_law initial data"
                    ));
                }
            }
            if matches!(d, Diagnostic::ScalarReduction { .. })
                && !matches!(self.equation, Equation::System { .. })
            {
                return Err(format!(
                    "diagnostics[{i}]: scalar_reduction needs the system equation"
                ));
            }
            if matches!(d, Diagnostic::PeakSpeed { .. }) && self.equation != Equation::CamassaHolm {
                return Err(format!(
                    "diagnostics[{i}]: peak_speed needs the camassa_holm equation"
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "demo",
        "domain": {"kind": "circle", "n": 64},
        "initial_data": {"preset": {"name": "sine", "amplitude": 0.1, "k": 1}},
        "solver": {"method": "runge_kutta4", "dt": 0.01, "t_final": 0.1}
    }"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = ExperimentConfig::parse(MINIMAL, "inline").unwrap();
        assert_eq!(cfg.equation, Equation::Bbm);
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn unknown_preset_is_rejected_at_parse_time() {
        let text = MINIMAL.replace("\"sine\"", "\"sawtooth\"");
        let err = ExperimentConfig::parse(&text, "inline")
            .unwrap_err()
            .to_string();
        assert!(err.contains("sawtooth"), "{err}");
        assert!(err.contains("line 4"), "{err}");
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = MINIMAL.replace("\"name\": \"demo\",", "\"name\": \"demo\", \"sede\": 3,");
        let err = ExperimentConfig::parse(&text, "inline")
            .unwrap_err()
            .to_string();
        assert!(err.contains("sede"), "{err}");
    }

    #[test]
    fn semantic_errors_name_the_field() {
        let text = MINIMAL.replace("\"dt\": 0.01", "\"dt\": -1");
        let err = ExperimentConfig::parse(&text, "inline")
            .unwrap_err()
            .to_string();
        assert!(err.contains("solver"), "{err}");
        let text = MINIMAL.replace("\"n\": 64", "\"n\": 63");
        let err = ExperimentConfig::parse(&text, "inline")
            .unwrap_err()
            .to_string();
        assert!(err.contains("domain"), "{err}");
    }

    #[test]
    fn round_trip_preserves_config() {
        let cfg = ExperimentConfig::parse(MINIMAL, "inline").unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::parse(&text, "echo").unwrap(), cfg);
    }
}

//! Executes one experiment and writes its artifacts and manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use bbmlab::data::{random_trig, Stream};
use bbmlab::diagnostics::{
    drift_report, gained_index, peak_position, refinement_sweep, regularity_gain,
    singularity_localize,
};
use bbmlab::evolution::{
    evolve, evolve_ch, evolve_system, time_derivative, SolverConfig, Trajectory,
};
use bbmlab::grid::lp_norm;
use bbmlab::io::{write_json, write_snapshots_csv, write_trajectory_csv};
use bbmlab::operators::{apply_multiplier, spectral_derivative, Multiplier};
use bbmlab::unique_continuation::{a_decomposition, ch_uc_check, level_set_verdict, q_functional};
use bbmlab::{Grid, GridFunction};

use crate::config::{Diagnostic, Equation, ExperimentConfig, InitialData, UcKind};
use crate::error::CliError;
use crate::initial;

/// One pass/fail comparison recorded in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            pass: value <= limit,
            detail: format!("{value:e} <= {limit:e}"),
        }
    }

    fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            pass: value >= limit,
            detail: format!("{value} >= {limit}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub config: ExperimentConfig,
    pub versions: BTreeMap<String, String>,
    pub artifacts: Vec<Artifact>,
    pub checks_passed: bool,
    /// SHA-256 over everything above; wall-clock time is excluded.
    pub fingerprint: String,
    pub wall_clock_seconds: f64,
}

struct Evolution {
    times: Vec<f64>,
    states: Vec<GridFunction>,
    traj: Option<Trajectory>,
    v: Option<Vec<GridFunction>>,
    warnings: Vec<String>,
}

/// Runs `cfg`, writing into `root/<name>/`.
pub fn run(cfg: &ExperimentConfig, root: &Path) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let name = cfg.name.as_str();
    let ctx = CliError::experiment;
    let grid = cfg.domain.grid().map_err(ctx(name))?;
    let built = initial::build(&cfg.initial_data, grid, cfg.seed).map_err(ctx(name))?;
    let u0 = built.u0;
    let evo = evolve_configured(cfg, &u0).map_err(ctx(name))?;

    let mut sections = Vec::new();
    let mut checks = Vec::new();
    for d in &cfg.diagnostics {
        let (value, mut c) = diagnose(cfg, d, &u0, &evo).map_err(ctx(name))?;
        sections.push(value);
        checks.append(&mut c);
    }
    let checks_passed = checks.iter().all(|c| c.pass);
    let report = json!({
        "name": name,
        "seed": cfg.seed,
        "n_points": grid.n_points(),
        "snapshots": evo.times.len(),
        "initial_data": built.info,
        "warnings": evo.warnings,
        "diagnostics": sections,
        "checks": checks,
        "checks_passed": checks_passed,
    });

    let dir = root.join(name);
    fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut artifacts = Vec::new();
    let mut emit = |file: &str, bytes: Vec<u8>| -> Result<(), CliError> {
        let path: PathBuf = dir.join(file);
        fs::write(&path, &bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        artifacts.push(Artifact {
            file: file.into(),
            sha256: hex::encode(Sha256::digest(&bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(())
    };
    let mut csv = Vec::new();
    match &evo.traj {
        Some(t) => write_trajectory_csv(t, &mut csv),
        None => write_snapshots_csv(&evo.times, &evo.states, grid.n_points(), &mut csv),
    }
    .map_err(ctx(name))?;
    emit("trajectory.csv", csv)?;
    if let Some(v) = &evo.v {
        let mut csv = Vec::new();
        write_snapshots_csv(&evo.times, v, grid.n_points(), &mut csv).map_err(ctx(name))?;
        emit("trajectory_v.csv", csv)?;
    }
    let mut json_bytes = Vec::new();
    write_json(&report, &mut json_bytes).map_err(ctx(name))?;
    emit("report.json", json_bytes)?;

    let versions = BTreeMap::from([
        ("bbmlab".to_string(), bbmlab::VERSION.to_string()),
        (
            "bbmlab-cli".to_string(),
            env!("CARGO_PKG_VERSION").to_string(),
        ),
    ]);
    let fingerprint = {
        let body = json!({
            "name": name,
            "config": cfg,
            "versions": versions,
            "artifacts": artifacts,
            "checks_passed": checks_passed,
        });
        hex::encode(Sha256::digest(body.to_string().as_bytes()))
    };
    let manifest = RunManifest {
        name: name.into(),
        config: cfg.clone(),
        versions,
        artifacts,
        checks_passed,
        fingerprint,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    let mut bytes = Vec::new();
    write_json(&manifest, &mut bytes).map_err(ctx(name))?;
    fs::write(dir.join("manifest.json"), bytes)?;
    Ok(manifest)
}

fn evolve_configured(cfg: &ExperimentConfig, u0: &GridFunction) -> bbmlab::Result<Evolution> {
    let Some(solver) = &cfg.solver else {
        return Ok(Evolution {
            times: vec![0.0],
            states: vec![u0.clone()],
            traj: None,
            v: None,
            warnings: Vec::new(),
        });
    };
    match &cfg.equation {
        Equation::Bbm | Equation::CamassaHolm => {
            let traj = if cfg.equation == Equation::Bbm {
                evolve(u0, solver)?
            } else {
                evolve_ch(u0, solver)?
            };
            Ok(Evolution {
                times: traj.times.clone(),
                states: traj.states.clone(),
                warnings: traj.metadata.warnings.clone(),
                traj: Some(traj),
                v: None,
            })
        }
        Equation::System { coefficients, v0 } => {
            let v0 = match v0 {
                Some(d) => initial::build(d, *u0.grid(), cfg.seed)?.u0,
                None => GridFunction::zeros(*u0.grid()),
            };
            let sys = evolve_system(u0, &v0, coefficients, solver)?;
            Ok(Evolution {
                times: sys.times,
                states: sys.u,
                traj: None,
                v: Some(sys.v),
                warnings: sys.warnings,
            })
        }
    }
}

fn solver_of(cfg: &ExperimentConfig) -> bbmlab::Result<SolverConfig> {
    cfg.solver
        .ok_or_else(|| bbmlab::Error::InvalidParameter("diagnostic needs a solver".into()))
}

fn diagnose(
    cfg: &ExperimentConfig,
    d: &Diagnostic,
    u0: &GridFunction,
    evo: &Evolution,
) -> bbmlab::Result<(Value, Vec<Check>)> {
    let mut checks = Vec::new();
    let value = match d {
        Diagnostic::InvariantDrift { max_i1, max_i23 } => {
            let traj = evo
                .traj
                .as_ref()
                .filter(|t| !t.invariant_history.is_empty())
                .ok_or_else(|| {
                    bbmlab::Error::InvalidParameter(
                        "invariants are tracked for BBM runs only".into(),
                    )
                })?;
            let r = drift_report(traj)?;
            if let Some(tol) = max_i1 {
                checks.push(Check::at_most("invariant I1 drift", r.i1, *tol));
            }
            if let Some(tol) = max_i23 {
                checks.push(Check::at_most("invariant I2 drift", r.i2, *tol));
                checks.push(Check::at_most("invariant I3 drift", r.i3, *tol));
            }
            json!({"invariant_drift": r})
        }
        Diagnostic::SupDrift { tolerance } => {
            let drift = evo
                .states
                .iter()
                .map(|u| u.sup_distance(u0))
                .collect::<bbmlab::Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            if let Some(tol) = tolerance {
                checks.push(Check::at_most("sup drift", drift, *tol));
            }
            json!({"sup_drift": drift})
        }
        Diagnostic::RegularityGain {
            s_nominal,
            band,
            min_slope_diff,
            min_gain,
            refinement_sizes,
            max_ratio,
        } => {
            let traj = evo.traj.as_ref().ok_or_else(|| {
                bbmlab::Error::InvalidParameter("regularity gain needs a BBM run".into())
            })?;
            let mut r = regularity_gain(u0, traj, *s_nominal, *band)?;
            if let Some(min) = min_slope_diff {
                checks.push(Check::at_least(
                    "difference slope",
                    r.slope_diff.unwrap_or(f64::NAN),
                    *min,
                ));
            }
            if let Some(min) = min_gain {
                checks.push(Check::at_least(
                    "measured gain",
                    r.gain_measured.unwrap_or(f64::NAN),
                    *min,
                ));
            }
            if let (false, InitialData::SpectralLaw(spec)) =
                (refinement_sizes.is_empty(), &cfg.initial_data)
            {
                let order = gained_index(*s_nominal) - 0.05;
                r.refinement_ratios = refinement_sweep(
                    &spec.law(cfg.seed),
                    &solver_of(cfg)?,
                    order,
                    refinement_sizes,
                )?;
                if let Some(max) = max_ratio {
                    for (w, g) in r.refinement_ratios.windows(2).zip(r.growth_factors()) {
                        checks.push(Check::at_most(
                            &format!("refinement ratio {}->{}", w[0].n, w[1].n),
                            g,
                            *max,
                        ));
                    }
                }
            }
            json!({"regularity_gain": r})
        }
        Diagnostic::Singularity {
            j,
            eta,
            threshold,
            expect,
        } => {
            let mut sets = Vec::new();
            for (t, u) in evo.times.iter().zip(&evo.states) {
                let set = singularity_localize(u, *j, *eta, *threshold)?;
                if let Some(points) = expect {
                    let ok = matches_points(u.grid(), &set.indices, points);
                    checks.push(Check {
                        name: format!("singular set at t = {t}"),
                        pass: ok,
                        detail: format!("found {:?}, expected {:?}", set.points, points),
                    });
                }
                sets.push(json!({"t": t, "points": set.points, "indices": set.indices}));
            }
            json!({"singularity": {"j": j, "eta": eta, "threshold": threshold, "snapshots": sets}})
        }
        Diagnostic::UcCheck {
            check,
            a,
            b,
            expect,
        } => {
            let r = match check {
                UcKind::MinusOne => a_decomposition(u0, *a, *b)?,
                UcKind::LevelSet { c0, branch } => level_set_verdict(u0, *a, *b, *c0, *branch)?,
                UcKind::CamassaHolm => ch_uc_check(u0, *a, *b)?,
            };
            if let Some(v) = expect {
                checks.push(Check {
                    name: "continuation verdict".into(),
                    pass: r.verdict == *v,
                    detail: format!("{:?}, expected {v:?}", r.verdict),
                });
            }
            json!({"uc_check": r})
        }
        Diagnostic::Stationarity { a, b, tolerance } => {
            let dt = time_derivative(u0)?;
            let g = u0.grid();
            let worst = (0..g.n_points())
                .filter(|&i| g.x(i) >= *a && g.x(i) <= *b)
                .map(|i| dt.values()[i].abs())
                .fold(0.0, f64::max);
            checks.push(Check::at_most("max |d_t u0| on [a, b]", worst, *tolerance));
            json!({"stationarity": {"a": a, "b": b, "max_dt": worst}})
        }
        Diagnostic::QFunctional {
            a,
            b,
            c0,
            tolerance,
        } => {
            let q = q_functional(u0, *a, *b, *c0)?;
            checks.push(Check::at_most("|Q|", q.abs(), *tolerance));
            json!({"q_functional": q})
        }
        Diagnostic::PeakSpeed { c, rel_tolerance } => {
            let mut worst: f64 = 0.0;
            let mut samples = Vec::new();
            for (t, u) in evo.times.iter().zip(&evo.states).skip(1) {
                let x = peak_position(u)?;
                worst = worst.max((x - c * t).abs() / (c * t).abs());
                samples.push(json!({"t": t, "peak": x}));
            }
            checks.push(Check::at_most(
                "peak position relative error",
                worst,
                *rel_tolerance,
            ));
            json!({"peak_speed": {"c": c, "samples": samples, "max_rel_error": worst}})
        }
        Diagnostic::MethodAgreement { methods, tolerance } => {
            let base = solver_of(cfg)?;
            let mut rows = Vec::new();
            for &m in methods {
                let other = evolve(u0, &SolverConfig { method: m, ..base })?;
                let diff = other
                    .states
                    .iter()
                    .zip(&evo.states)
                    .map(|(x, y)| x.sup_distance(y))
                    .collect::<bbmlab::Result<Vec<_>>>()?
                    .into_iter()
                    .fold(0.0, f64::max);
                checks.push(Check::at_most(
                    &format!("{m:?} vs {:?}", base.method),
                    diff,
                    *tolerance,
                ));
                rows.push(json!({"method": m, "max_sup_difference": diff}));
            }
            json!({"method_agreement": rows})
        }
        Diagnostic::ScalarReduction { tolerance } => {
            let scalar = evolve(u0, &solver_of(cfg)?)?;
            let du = scalar
                .states
                .iter()
                .zip(&evo.states)
                .map(|(x, y)| x.sup_distance(y))
                .collect::<bbmlab::Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            let dv = evo
                .v
                .iter()
                .flatten()
                .map(|v| v.sup_norm())
                .fold(0.0, f64::max);
            checks.push(Check::at_most("system u vs scalar BBM", du, *tolerance));
            checks.push(Check::at_most("max |v|", dv, *tolerance));
            json!({"scalar_reduction": {"u_difference": du, "v_sup": dv}})
        }
        Diagnostic::OperatorIdentity {
            samples,
            k_max,
            tolerance,
        } => {
            let g = *u0.grid();
            let mut stream = Stream::new(cfg.seed);
            let mut worst: f64 = 0.0;
            for _ in 0..*samples {
                let f = random_trig(g, *k_max, &mut stream)?;
                let lhs = apply_multiplier(&f, Multiplier::DxPhi)?;
                let rhs = apply_multiplier(&f, Multiplier::Bessel { s: -2.0 })?.sub(&f)?;
                let composed = spectral_derivative(&apply_multiplier(&f, Multiplier::Phi)?)?;
                let scale = lp_norm(&rhs, 2.0)?.max(f64::MIN_POSITIVE);
                worst = worst
                    .max(lp_norm(&lhs.sub(&rhs)?, 2.0)? / scale)
                    .max(lp_norm(&composed.sub(&rhs)?, 2.0)? / scale);
            }
            checks.push(Check::at_most(
                "operator identity relative l2",
                worst,
                *tolerance,
            ));
            json!({"operator_identity": {"samples": samples, "max_rel_l2": worst}})
        }
    };
    Ok((value, checks))
}

/// Each expected point has a detected node within one cell, and vice versa.
fn matches_points(grid: &Grid, found: &[usize], expected: &[f64]) -> bool {
    let n = grid.n_points() as i64;
    let dist = |i: usize, j: usize| {
        let d = (i as i64 - j as i64).abs();
        if grid.is_circle() {
            d.min(n - d)
        } else {
            d
        }
    };
    let targets: Vec<usize> = expected.iter().map(|&x| grid.nearest_index(x)).collect();
    found.len() == targets.len()
        && targets
            .iter()
            .all(|&t| found.iter().any(|&f| dist(f, t) <= 1))
}

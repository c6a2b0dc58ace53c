//! Time stepping for BBM, Camassa–Holm and the coupled BBM system.
//!
//! BBM is integrated in its nonlocal form `u_t = -phi(D)(u + u^2/2)` by
//! classical RK4, by an exponential (Duhamel) integrator built on the exact
//! linear group, or by Picard iteration of the integral equation
//! `u(t) = u0 - int_0^t phi(D)(u + u^2/2) ds` over the whole time window.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{invariants, InvariantTriple};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::operators::{apply_multiplier, derivative, phi, Multiplier, Warning};

/// Sup norm beyond which a run is aborted.
pub const BLOW_UP_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PicardFixedPoint,
    RungeKutta4,
    ExponentialDuhamel,
}

/// Forward integrates the equation; backward integrates it with the sign of
/// the right-hand side flipped (used for reversibility checks).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    Forward,
    Backward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub method: Method,
    #[serde(default = "defaults::dt")]
    pub dt: f64,
    #[serde(default = "defaults::t_final")]
    pub t_final: f64,
    #[serde(default = "defaults::picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "defaults::picard_max_iter")]
    pub picard_max_iter: usize,
    #[serde(default = "defaults::snapshot_stride")]
    pub snapshot_stride: usize,
    #[serde(default)]
    pub direction: Direction,
}

mod defaults {
    pub fn dt() -> f64 {
        1e-3
    }
    pub fn t_final() -> f64 {
        1.0
    }
    pub fn picard_tol() -> f64 {
        1e-13
    }
    pub fn picard_max_iter() -> usize {
        100
    }
    pub fn snapshot_stride() -> usize {
        1
    }
}

impl SolverConfig {
    pub fn new(method: Method, dt: f64, t_final: f64) -> Self {
        Self {
            method,
            dt,
            t_final,
            picard_tol: defaults::picard_tol(),
            picard_max_iter: defaults::picard_max_iter(),
            snapshot_stride: defaults::snapshot_stride(),
            direction: Direction::Forward,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_final.is_finite() && self.t_final >= self.dt) {
            return Err(Error::InvalidParameter(format!(
                "t_final = {} must be at least dt = {}",
                self.t_final, self.dt
            )));
        }
        if self.picard_tol.is_nan() || self.picard_tol <= 0.0 {
            return Err(Error::InvalidParameter(
                "picard_tol must be positive".into(),
            ));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidParameter(
                "snapshot_stride must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Number of steps and the step actually used (`t_final / steps`).
    pub fn steps(&self) -> (usize, f64) {
        let steps = (self.t_final / self.dt).round().max(1.0) as usize;
        (steps, self.t_final / steps as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetadata {
    pub equation: String,
    pub config: SolverConfig,
    pub warnings: Vec<String>,
    /// Picard only: sup-norm distance between successive iterates.
    #[serde(default)]
    pub picard_residuals: Vec<f64>,
}

/// Snapshots of an evolution. `states[0]` is the initial datum as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GridFunction>,
    /// Conserved quantities at each snapshot (circle runs only).
    pub invariant_history: Vec<InvariantTriple>,
    pub metadata: TrajectoryMetadata,
}

impl Trajectory {
    pub fn last(&self) -> &GridFunction {
        self.states
            .last()
            .expect("trajectory holds the initial datum")
    }

    pub fn grid(&self) -> &Grid {
        self.states[0].grid()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest sup-norm distance of any snapshot from the initial datum.
    pub fn sup_drift(&self) -> f64 {
        let u0 = &self.states[0];
        self.states
            .iter()
            .map(|u| u.sup_distance(u0).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }
}

/// Coefficients of the coupled system
/// `u_t = -phi(D)(u + A u^2 + B uv + C v^2)`, `v_t = -phi(D)(v + D u^2 + E uv + F v^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct SystemCoefficients {
    pub A: f64,
    pub B: f64,
    pub C: f64,
    pub D: f64,
    pub E: f64,
    pub F: f64,
}

impl SystemCoefficients {
    pub fn validate(&self) -> Result<()> {
        let all = [self.A, self.B, self.C, self.D, self.E, self.F];
        if all.iter().all(|c| c.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "system coefficients must be finite".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemTrajectory {
    pub times: Vec<f64>,
    pub u: Vec<GridFunction>,
    pub v: Vec<GridFunction>,
    pub coefficients: SystemCoefficients,
    pub config: SolverConfig,
    pub warnings: Vec<String>,
}

/// The BBM nonlinearity `f(y) = y + y^2/2`, written as `((y + 1)^2 - 1)/2` so
/// that the two levels `c` and `-2 - c` give bitwise equal values.
pub fn bbm_payload(u: &GridFunction) -> GridFunction {
    let values = u
        .values()
        .iter()
        .map(|&y| 0.5 * ((y + 1.0) * (y + 1.0) - 1.0))
        .collect();
    GridFunction::from_parts_unchecked(*u.grid(), values)
}

/// `-phi(D)(u + u^2/2)` with any line-support warnings.
pub fn bbm_rhs_with_warnings(u: &GridFunction) -> Result<(GridFunction, Vec<Warning>)> {
    let (p, w) = phi(&bbm_payload(u))?;
    Ok((negate(&p), w))
}

/// Right-hand side of BBM: `-phi(D)(u + u^2/2)`.
pub fn bbm_rhs(u: &GridFunction) -> Result<GridFunction> {
    Ok(bbm_rhs_with_warnings(u)?.0)
}

/// `d_t u` for a BBM solution passing through `u`.
pub fn time_derivative(u: &GridFunction) -> Result<GridFunction> {
    bbm_rhs(u)
}

/// `d_tt u = -phi(D)((1 + u) d_t u)`.
pub fn time_derivative2(u: &GridFunction) -> Result<GridFunction> {
    let ut = time_derivative(u)?;
    let payload = u.zip_with(&ut, |a, b| (1.0 + a) * b)?;
    Ok(negate(&phi(&payload)?.0))
}

fn ch_rhs_with_warnings(u: &GridFunction) -> Result<(GridFunction, Vec<Warning>)> {
    let ux = derivative(u)?;
    let payload = u.zip_with(&ux, |a, d| a * a + 0.5 * d * d)?;
    let (p, w) = phi(&payload)?;
    let transport = u.zip_with(&ux, |a, d| a * d)?;
    Ok((transport.zip_with(&p, |t, q| -t - q)?, w))
}

/// Camassa–Holm right-hand side `-u u_x - phi(D)(u^2 + u_x^2/2)`.
pub fn ch_rhs(u: &GridFunction) -> Result<GridFunction> {
    Ok(ch_rhs_with_warnings(u)?.0)
}

fn system_rhs_with_warnings(
    u: &GridFunction,
    v: &GridFunction,
    k: &SystemCoefficients,
) -> Result<((GridFunction, GridFunction), Vec<Warning>)> {
    u.require_same_grid(v)?;
    let pu = u.zip_with(v, |a, b| a + k.A * a * a + k.B * a * b + k.C * b * b)?;
    let pv = u.zip_with(v, |a, b| b + k.D * a * a + k.E * a * b + k.F * b * b)?;
    let (fu, mut w) = phi(&pu)?;
    let (fv, w2) = phi(&pv)?;
    merge_warnings(&mut w, w2);
    Ok(((negate(&fu), negate(&fv)), w))
}

/// Right-hand side of the coupled BBM system.
pub fn system_rhs(
    u: &GridFunction,
    v: &GridFunction,
    coeffs: &SystemCoefficients,
) -> Result<(GridFunction, GridFunction)> {
    coeffs.validate()?;
    Ok(system_rhs_with_warnings(u, v, coeffs)?.0)
}

/// Samples the peakon `c e^{-|x - ct|}` on a line grid.
pub fn peakon(c: f64, t: f64, grid: &Grid) -> Result<GridFunction> {
    grid.require_line("peakon")?;
    let center = c * t;
    let (l, r) = (grid.origin(), grid.origin() + grid.extent());
    let dist = (center - l).min(r - center);
    if dist.is_nan() || dist <= 0.0 || (-dist).exp() >= 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "peak at {center} is too close to the window [{l}, {r}]"
        )));
    }
    GridFunction::from_fn(*grid, |x| c * (-(x - center).abs()).exp())
}

fn negate(f: &GridFunction) -> GridFunction {
    let values = f.values().iter().map(|v| -v).collect();
    GridFunction::from_parts_unchecked(*f.grid(), values)
}

fn axpy(y: &GridFunction, a: f64, x: &GridFunction) -> GridFunction {
    let values = y
        .values()
        .iter()
        .zip(x.values())
        .map(|(p, q)| p + a * q)
        .collect();
    GridFunction::from_parts_unchecked(*y.grid(), values)
}

fn merge_warnings(acc: &mut Vec<Warning>, new: Vec<Warning>) {
    for w in new {
        let Warning::BoundarySupport { side, variation } = w;
        match acc
            .iter_mut()
            .find(|Warning::BoundarySupport { side: s, .. }| *s == side)
        {
            Some(Warning::BoundarySupport { variation: v, .. }) => *v = v.max(variation),
            None => acc.push(w),
        }
    }
}

fn check_finite_bounded(u: &GridFunction, t: f64) -> Result<()> {
    let sup = u.values().iter().fold(0.0_f64, |m, v| {
        if v.is_nan() {
            f64::INFINITY
        } else {
            m.max(v.abs())
        }
    });
    if sup > BLOW_UP_THRESHOLD {
        return Err(Error::BlowUp { t, sup });
    }
    Ok(())
}

fn rk4_step<F>(u: &GridFunction, dt: f64, rhs: &mut F) -> Result<GridFunction>
where
    F: FnMut(&GridFunction) -> Result<GridFunction>,
{
    let k1 = rhs(u)?;
    let k2 = rhs(&axpy(u, 0.5 * dt, &k1))?;
    let k3 = rhs(&axpy(u, 0.5 * dt, &k2))?;
    let k4 = rhs(&axpy(u, dt, &k3))?;
    let values = (0..u.len())
        .map(|i| {
            u.values()[i]
                + dt / 6.0
                    * (k1.values()[i]
                        + 2.0 * k2.values()[i]
                        + 2.0 * k3.values()[i]
                        + k4.values()[i])
        })
        .collect();
    Ok(GridFunction::from_parts_unchecked(*u.grid(), values))
}

struct Recorder {
    times: Vec<f64>,
    states: Vec<GridFunction>,
    invariants: Vec<InvariantTriple>,
    circle: bool,
}

impl Recorder {
    fn new(u0: &GridFunction) -> Result<Self> {
        let mut r = Self {
            times: Vec::new(),
            states: Vec::new(),
            invariants: Vec::new(),
            circle: u0.grid().is_circle(),
        };
        r.push(0.0, u0.clone())?;
        Ok(r)
    }

    fn push(&mut self, t: f64, u: GridFunction) -> Result<()> {
        if self.circle {
            self.invariants.push(invariants(&u)?);
        }
        self.times.push(t);
        self.states.push(u);
        Ok(())
    }

    fn finish(
        self,
        equation: &str,
        config: SolverConfig,
        warnings: &[Warning],
        residuals: Vec<f64>,
    ) -> Trajectory {
        Trajectory {
            times: self.times,
            states: self.states,
            invariant_history: self.invariants,
            metadata: TrajectoryMetadata {
                equation: equation.to_string(),
                config,
                warnings: warnings.iter().map(|w| w.to_string()).collect(),
                picard_residuals: residuals,
            },
        }
    }
}

fn march<F>(
    u0: &GridFunction,
    cfg: &SolverConfig,
    equation: &str,
    mut step: F,
    warnings: &[Warning],
) -> Result<Trajectory>
where
    F: FnMut(&GridFunction, f64) -> Result<GridFunction>,
{
    let (steps, dt) = cfg.steps();
    let mut rec = Recorder::new(u0)?;
    let mut u = u0.clone();
    for n in 1..=steps {
        u = step(&u, dt)?;
        let t = n as f64 * dt;
        check_finite_bounded(&u, t)?;
        if n % cfg.snapshot_stride == 0 || n == steps {
            rec.push(t, u.clone())?;
        }
    }
    Ok(rec.finish(equation, *cfg, warnings, Vec::new()))
}

/// Evolves BBM from `u0` with the configured method.
pub fn evolve(u0: &GridFunction, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    match cfg.method {
        Method::RungeKutta4 => evolve_rk4(u0, cfg),
        Method::ExponentialDuhamel => evolve_duhamel(u0, cfg),
        Method::PicardFixedPoint => picard_solve(u0, cfg),
    }
}

fn evolve_rk4(u0: &GridFunction, cfg: &SolverConfig) -> Result<Trajectory> {
    let sign = cfg.direction.sign();
    let mut collected = Vec::new();
    let traj = march(
        u0,
        cfg,
        "bbm",
        |u, dt| {
            rk4_step(u, sign * dt, &mut |v| {
                let (r, w) = bbm_rhs_with_warnings(v)?;
                merge_warnings(&mut collected, w);
                Ok(r)
            })
        },
        &[],
    )?;
    Ok(with_warnings(traj, &collected))
}

fn with_warnings(mut traj: Trajectory, warnings: &[Warning]) -> Trajectory {
    traj.metadata.warnings = warnings.iter().map(|w| w.to_string()).collect();
    traj
}

/// Exponential integrator for `u_t + phi(D)u = -phi(D)(u^2/2)`:
/// `u_{n+1} = U(dt)u_n - dt U(dt/2) N(u_mid)` with the midpoint predictor
/// `u_mid = U(dt/2)(u_n - dt/2 N(u_n))`, `N = phi(D)(u^2/2)`.
fn evolve_duhamel(u0: &GridFunction, cfg: &SolverConfig) -> Result<Trajectory> {
    u0.grid().require_circle("the exponential integrator")?;
    let sign = cfg.direction.sign();
    let nonlinear = |u: &GridFunction| -> Result<GridFunction> {
        let half_sq = u.map(|y| 0.5 * y * y)?;
        apply_multiplier(&half_sq, Multiplier::Phi)
    };
    march(
        u0,
        cfg,
        "bbm",
        |u, dt| {
            let h = sign * dt;
            let half = Multiplier::Group { t: 0.5 * h };
            let pred = apply_multiplier(&axpy(u, -0.5 * h, &nonlinear(u)?), half)?;
            let n_mid = apply_multiplier(&nonlinear(&pred)?, half)?;
            let lin = apply_multiplier(u, Multiplier::Group { t: h })?;
            Ok(axpy(&lin, -h, &n_mid))
        },
        &[],
    )
}

/// Contraction window `1 / (4 (1 + |u0|_inf))` used by the Picard solver.
pub fn contraction_window(u0: &GridFunction) -> f64 {
    0.25 / (1.0 + u0.sup_norm())
}

/// Picard iteration of `v -> u0 - int_0^t phi(D)(v + v^2/2) ds` on the whole
/// `dt`-grid of `[0, t_final]`, with the time integral by the cumulative
/// trapezoid rule.
pub fn picard_solve(u0: &GridFunction, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let limit = contraction_window(u0);
    if cfg.t_final > limit {
        return Err(Error::WindowTooLarge {
            requested: cfg.t_final,
            limit,
        });
    }
    let sign = cfg.direction.sign();
    let (steps, dt) = cfg.steps();
    let mut iterate: Vec<GridFunction> = vec![u0.clone(); steps + 1];
    let mut residuals = Vec::new();
    let mut warnings = Vec::new();
    for _ in 0..cfg.picard_max_iter {
        let mut rhs = Vec::with_capacity(steps + 1);
        for v in &iterate {
            let (r, w) = bbm_rhs_with_warnings(v)?;
            merge_warnings(&mut warnings, w);
            rhs.push(r);
        }
        let mut next = Vec::with_capacity(steps + 1);
        next.push(u0.clone());
        let mut acc = vec![0.0; u0.len()];
        for j in 1..=steps {
            for (i, a) in acc.iter_mut().enumerate() {
                *a += 0.5 * sign * dt * (rhs[j - 1].values()[i] + rhs[j].values()[i]);
            }
            let values = u0.values().iter().zip(&acc).map(|(x, a)| x + a).collect();
            let v = GridFunction::from_parts_unchecked(*u0.grid(), values);
            check_finite_bounded(&v, j as f64 * dt)?;
            next.push(v);
        }
        let diff = next
            .iter()
            .zip(&iterate)
            .map(|(a, b)| a.sup_distance(b))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        residuals.push(diff);
        iterate = next;
        if diff < cfg.picard_tol {
            let mut rec = Recorder::new(u0)?;
            for (j, v) in iterate.into_iter().enumerate().skip(1) {
                if j % cfg.snapshot_stride == 0 || j == steps {
                    rec.push(j as f64 * dt, v)?;
                }
            }
            return Ok(rec.finish("bbm", *cfg, &warnings, residuals));
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.picard_max_iter,
        last: residuals.last().copied().unwrap_or(f64::NAN),
        residuals,
    })
}

/// Evolves Camassa–Holm by RK4.
pub fn evolve_ch(u0: &GridFunction, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if cfg.method != Method::RungeKutta4 {
        return Err(Error::InvalidParameter(
            "Camassa–Holm runs support the runge_kutta4 method only".into(),
        ));
    }
    let sign = cfg.direction.sign();
    let mut collected = Vec::new();
    let mut traj = march(
        u0,
        cfg,
        "camassa_holm",
        |u, dt| {
            rk4_step(u, sign * dt, &mut |v| {
                let (r, w) = ch_rhs_with_warnings(v)?;
                merge_warnings(&mut collected, w);
                Ok(r)
            })
        },
        &[],
    )?;
    // CH does not conserve the BBM functionals; drop them to avoid confusion.
    traj.invariant_history.clear();
    Ok(with_warnings(traj, &collected))
}

/// Evolves the coupled system by RK4.
pub fn evolve_system(
    u0: &GridFunction,
    v0: &GridFunction,
    coeffs: &SystemCoefficients,
    cfg: &SolverConfig,
) -> Result<SystemTrajectory> {
    cfg.validate()?;
    coeffs.validate()?;
    u0.require_same_grid(v0)?;
    if cfg.method != Method::RungeKutta4 {
        return Err(Error::InvalidParameter(
            "system runs support the runge_kutta4 method only".into(),
        ));
    }
    let sign = cfg.direction.sign();
    let (steps, dt) = cfg.steps();
    let mut warnings = Vec::new();
    let mut rhs = |u: &GridFunction, v: &GridFunction| -> Result<(GridFunction, GridFunction)> {
        let (r, w) = system_rhs_with_warnings(u, v, coeffs)?;
        merge_warnings(&mut warnings, w);
        Ok(r)
    };
    let (mut u, mut v) = (u0.clone(), v0.clone());
    let mut out = SystemTrajectory {
        times: vec![0.0],
        u: vec![u.clone()],
        v: vec![v.clone()],
        coefficients: *coeffs,
        config: *cfg,
        warnings: Vec::new(),
    };
    for n in 1..=steps {
        let h = sign * dt;
        let (a1, b1) = rhs(&u, &v)?;
        let (a2, b2) = rhs(&axpy(&u, 0.5 * h, &a1), &axpy(&v, 0.5 * h, &b1))?;
        let (a3, b3) = rhs(&axpy(&u, 0.5 * h, &a2), &axpy(&v, 0.5 * h, &b2))?;
        let (a4, b4) = rhs(&axpy(&u, h, &a3), &axpy(&v, h, &b3))?;
        let combine = |y: &GridFunction,
                       k1: &GridFunction,
                       k2: &GridFunction,
                       k3: &GridFunction,
                       k4: &GridFunction| {
            let values = (0..y.len())
                .map(|i| {
                    y.values()[i]
                        + h / 6.0
                            * (k1.values()[i]
                                + 2.0 * k2.values()[i]
                                + 2.0 * k3.values()[i]
                                + k4.values()[i])
                })
                .collect();
            GridFunction::from_parts_unchecked(*y.grid(), values)
        };
        u = combine(&u, &a1, &a2, &a3, &a4);
        v = combine(&v, &b1, &b2, &b3, &b4);
        let t = n as f64 * dt;
        check_finite_bounded(&u, t)?;
        check_finite_bounded(&v, t)?;
        if n % cfg.snapshot_stride == 0 || n == steps {
            out.times.push(t);
            out.u.push(u.clone());
            out.v.push(v.clone());
        }
    }
    out.warnings = warnings.iter().map(|w| w.to_string()).collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(n: usize, amp: f64) -> GridFunction {
        GridFunction::from_fn(Grid::circle(n).unwrap(), |x| amp * (2.0 * PI * x).sin()).unwrap()
    }

    #[test]
    fn constants_are_exactly_stationary() {
        let g = Grid::circle(64).unwrap();
        let u = GridFunction::constant(g, 0.7).unwrap();
        for m in [
            Method::RungeKutta4,
            Method::ExponentialDuhamel,
            Method::PicardFixedPoint,
        ] {
            let cfg = SolverConfig::new(m, 1e-2, 0.1);
            let traj = evolve(&u, &cfg).unwrap();
            assert!(traj.sup_drift() <= 1e-13, "{m:?}");
        }
    }

    #[test]
    fn picard_constant_converges_immediately() {
        let u = GridFunction::constant(Grid::circle(32).unwrap(), 0.3).unwrap();
        let traj =
            picard_solve(&u, &SolverConfig::new(Method::PicardFixedPoint, 1e-2, 0.1)).unwrap();
        assert_eq!(traj.metadata.picard_residuals.len(), 1);
    }

    #[test]
    fn picard_rejects_long_windows() {
        let u = sine(32, 1.0);
        let err =
            picard_solve(&u, &SolverConfig::new(Method::PicardFixedPoint, 1e-2, 1.0)).unwrap_err();
        assert!(matches!(err, Error::WindowTooLarge { .. }));
    }

    #[test]
    fn picard_reports_non_convergence() {
        let u = sine(32, 0.1);
        let mut cfg = SolverConfig::new(Method::PicardFixedPoint, 1e-2, 0.1);
        cfg.picard_max_iter = 2;
        match picard_solve(&u, &cfg).unwrap_err() {
            Error::NoConvergence { residuals, .. } => assert_eq!(residuals.len(), 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn picard_matches_rk4() {
        let u = sine(64, 0.1);
        let p = picard_solve(&u, &SolverConfig::new(Method::PicardFixedPoint, 1e-3, 0.1)).unwrap();
        let r = evolve(&u, &SolverConfig::new(Method::RungeKutta4, 1e-4, 0.1)).unwrap();
        assert!(p.last().sup_distance(r.last()).unwrap() < 1e-8);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let u = sine(64, 0.5);
        let run = |dt: f64| evolve(&u, &SolverConfig::new(Method::RungeKutta4, dt, 1.0)).unwrap();
        let reference = run(0.1 / 8.0);
        let e1 = run(0.1).last().sup_distance(reference.last()).unwrap();
        let e2 = run(0.05).last().sup_distance(reference.last()).unwrap();
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn duhamel_is_second_order() {
        let u = sine(64, 0.5);
        let reference = evolve(&u, &SolverConfig::new(Method::RungeKutta4, 1e-3, 1.0)).unwrap();
        let run =
            |dt: f64| evolve(&u, &SolverConfig::new(Method::ExponentialDuhamel, dt, 1.0)).unwrap();
        let e1 = run(0.1).last().sup_distance(reference.last()).unwrap();
        let e2 = run(0.05).last().sup_distance(reference.last()).unwrap();
        let ratio = e1 / e2;
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn reversibility() {
        let u = sine(128, 0.3).map(|v| v + 0.1 * v * v).unwrap();
        let fwd = evolve(&u, &SolverConfig::new(Method::RungeKutta4, 1e-3, 0.5)).unwrap();
        let back_cfg =
            SolverConfig::new(Method::RungeKutta4, 1e-3, 0.5).with_direction(Direction::Backward);
        let back = evolve(fwd.last(), &back_cfg).unwrap();
        assert!(back.last().sup_distance(&u).unwrap() < 1e-7);
    }

    #[test]
    fn snapshots_follow_stride() {
        let u = sine(32, 0.1);
        let traj = evolve(
            &u,
            &SolverConfig::new(Method::RungeKutta4, 0.01, 0.1).with_stride(3),
        )
        .unwrap();
        assert_eq!(traj.times.len(), 5);
        assert_eq!(traj.states[0], u);
        assert!((traj.times.last().unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(traj.invariant_history.len(), 5);
    }

    #[test]
    fn blow_up_guard_trips() {
        let u = GridFunction::from_fn(Grid::circle(32).unwrap(), |x| {
            5e5 * (2.0 * PI * x).sin() + 6e5
        })
        .unwrap();
        let err = evolve(&u, &SolverConfig::new(Method::RungeKutta4, 0.01, 1.0)).unwrap_err();
        assert!(matches!(err, Error::BlowUp { .. }));
    }

    #[test]
    fn system_reduces_to_scalar() {
        let u = sine(64, 0.2);
        let v = GridFunction::zeros(*u.grid());
        let k = SystemCoefficients {
            A: 0.5,
            B: 0.0,
            C: 0.0,
            D: 0.0,
            E: 0.0,
            F: 0.0,
        };
        let (ru, rv) = system_rhs(&u, &v, &k).unwrap();
        assert_eq!(rv.sup_norm(), 0.0);
        assert!(ru.sup_distance(&bbm_rhs(&u).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn ch_rhs_of_constant_vanishes() {
        let g = Grid::circle(32).unwrap();
        assert_eq!(
            ch_rhs(&GridFunction::constant(g, 1.5).unwrap())
                .unwrap()
                .sup_norm(),
            0.0
        );
        assert_eq!(ch_rhs(&GridFunction::zeros(g)).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn peakon_samples() {
        let g = Grid::line(-30.0, 30.0, 601).unwrap();
        let p = peakon(1.0, 0.0, &g).unwrap();
        assert_eq!(p.values()[300], 1.0);
        let q = peakon(2.0, 0.5, &g).unwrap();
        assert!((q.values()[300] - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!(peakon(1.0, 25.0, &g).is_err());
    }

    #[test]
    fn second_time_derivative_matches_difference_quotient() {
        let u = sine(64, 0.4);
        let dt = 1e-3;
        let traj = evolve(&u, &SolverConfig::new(Method::RungeKutta4, dt, 2.0 * dt)).unwrap();
        let d0 = time_derivative(&traj.states[0]).unwrap();
        let d2 = time_derivative(&traj.states[2]).unwrap();
        let fd = d2.zip_with(&d0, |a, b| (a - b) / (2.0 * dt)).unwrap();
        let exact = time_derivative2(&traj.states[1]).unwrap();
        assert!(fd.sup_distance(&exact).unwrap() < 1e-6);
    }
}

//! Uniform one-dimensional grids, sampled functions and their Fourier spectra.
//!
//! Two domains are supported: the circle of period 1 (sampled at `x_i = i/n`)
//! and a truncated interval of the real line (sampled at both endpoints).
//! Fourier coefficients follow the period-1 convention
//! `c_k = (1/n) sum_i f(x_i) exp(-2 pi i k x_i)`, so a multiplier `m(xi)` acts
//! on mode `k` as `m(k)`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible number of grid points.
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// The circle `[0, 1)` with periodic wraparound.
    Circle,
    /// The truncated line `[left, right]`.
    Line { left: f64, right: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec")]
pub struct Grid {
    domain: Domain,
    n_points: usize,
    #[serde(skip_serializing)]
    spacing: f64,
}

#[derive(Deserialize)]
struct GridSpec {
    domain: Domain,
    n_points: usize,
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        Grid::new(spec.domain, spec.n_points)
    }
}

impl Grid {
    pub fn new(domain: Domain, n_points: usize) -> Result<Self> {
        if n_points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "n_points = {n_points} is below the minimum of {MIN_POINTS}"
            )));
        }
        let spacing = match domain {
            Domain::Circle => {
                if !n_points.is_multiple_of(2) {
                    return Err(Error::InvalidGrid(format!(
                        "circle grids need an even number of points, got {n_points}"
                    )));
                }
                1.0 / n_points as f64
            }
            Domain::Line { left, right } => {
                if !(left.is_finite() && right.is_finite()) || left >= right {
                    return Err(Error::InvalidGrid(format!(
                        "line window requires left < right, got [{left}, {right}]"
                    )));
                }
                (right - left) / (n_points - 1) as f64
            }
        };
        Ok(Self {
            domain,
            n_points,
            spacing,
        })
    }

    pub fn circle(n_points: usize) -> Result<Self> {
        Self::new(Domain::Circle, n_points)
    }

    pub fn line(left: f64, right: f64, n_points: usize) -> Result<Self> {
        Self::new(Domain::Line { left, right }, n_points)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn is_circle(&self) -> bool {
        matches!(self.domain, Domain::Circle)
    }

    /// Left end of the sampled window (0 on the circle).
    pub fn origin(&self) -> f64 {
        match self.domain {
            Domain::Circle => 0.0,
            Domain::Line { left, .. } => left,
        }
    }

    /// Length of the domain: the period on the circle, `right - left` on the line.
    pub fn extent(&self) -> f64 {
        match self.domain {
            Domain::Circle => 1.0,
            Domain::Line { left, right } => right - left,
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.origin() + i as f64 * self.spacing
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Index of the grid node closest to `x` (reduced modulo 1 on the circle).
    pub fn nearest_index(&self, x: f64) -> usize {
        match self.domain {
            Domain::Circle => {
                let r = x - x.floor();
                ((r * self.n_points as f64).round() as usize) % self.n_points
            }
            Domain::Line { left, .. } => {
                let i = ((x - left) / self.spacing).round();
                i.clamp(0.0, (self.n_points - 1) as f64) as usize
            }
        }
    }

    pub(crate) fn require_circle(&self, what: &str) -> Result<()> {
        if self.is_circle() {
            Ok(())
        } else {
            Err(Error::UnsupportedDomain(format!(
                "{what} needs a circle grid; use the line-kernel operations instead"
            )))
        }
    }

    pub(crate) fn require_line(&self, what: &str) -> Result<()> {
        if self.is_circle() {
            Err(Error::UnsupportedDomain(format!(
                "{what} needs a line grid"
            )))
        } else {
            Ok(())
        }
    }
}

/// Real samples of a function on a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGridFunction")]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl TryFrom<RawGridFunction> for GridFunction {
    type Error = Error;

    fn try_from(raw: RawGridFunction) -> Result<Self> {
        GridFunction::new(raw.grid, raw.values)
    }
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::InvalidData(format!(
                "expected {} samples, got {}",
                grid.n_points(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite sample {} at index {i}",
                values[i]
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every grid node.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.n_points()])
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n_points()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.require_same_grid(other)?;
        Self::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sup-norm distance to another function on the same grid.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        self.require_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// True when every sample is bitwise equal to the first one.
    pub fn is_constant(&self) -> bool {
        self.values
            .first()
            .map(|&c| self.values.iter().all(|&v| v.to_bits() == c.to_bits()))
            .unwrap_or(true)
    }

    pub(crate) fn require_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )))
        }
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points());
        Self { grid, values }
    }
}

/// Fourier coefficients of a function on the circle, stored in FFT order
/// (`k = 0, 1, .., n/2 - 1, -n/2, .., -1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        grid.require_circle("a spectrum")?;
        if coeffs.len() != grid.n_points() {
            return Err(Error::InvalidData(format!(
                "expected {} coefficients, got {}",
                grid.n_points(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    /// Builds a spectrum from a frequency law `k -> c_k` over `[-n/2, n/2)`.
    pub fn from_fn(grid: Grid, law: impl Fn(i64) -> Complex64) -> Result<Self> {
        grid.require_circle("a spectrum")?;
        let n = grid.n_points();
        let coeffs = (0..n).map(|idx| law(frequency(idx, n))).collect();
        Self::new(grid, coeffs)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Largest resolved frequency, `n/2`.
    pub fn nyquist(&self) -> i64 {
        (self.grid.n_points() / 2) as i64
    }

    /// Coefficient at integer frequency `k`, zero outside `[-n/2, n/2)`.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let n = self.grid.n_points() as i64;
        if k < -n / 2 || k >= n / 2 {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[k.rem_euclid(n) as usize]
    }

    /// `(k, c_k)` pairs in storage order.
    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let n = self.grid.n_points();
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(idx, &c)| (frequency(idx, n), c))
    }

    /// Evaluates the real trigonometric interpolant at an arbitrary point.
    /// The unpaired Nyquist mode contributes `Re(c) cos(pi n x)`.
    pub fn eval_at(&self, x: f64) -> f64 {
        let nyq = self.nyquist();
        self.modes()
            .map(|(k, c)| {
                if k == -nyq {
                    c.re * (PI * (2 * nyq) as f64 * x).cos()
                } else {
                    (c * Complex64::cis(2.0 * PI * k as f64 * x)).re
                }
            })
            .sum()
    }
}

/// Integer frequency of FFT storage slot `idx` for an `n`-point transform.
pub fn frequency(idx: usize, n: usize) -> i64 {
    if idx < n / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(n)
        } else {
            p.plan_fft_inverse(n)
        }
    })
}

/// Forward transform with the period-1 normalization.
pub fn transform(f: &GridFunction) -> Result<Spectrum> {
    f.grid().require_circle("the Fourier transform")?;
    let n = f.len();
    let mut buf: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(n, true).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    Spectrum::new(*f.grid(), buf)
}

/// Inverse transform returning the real part and the largest imaginary residue.
pub fn inverse_with_residue(s: &Spectrum) -> (GridFunction, f64) {
    let n = s.grid().n_points();
    let mut buf = s.coeffs().to_vec();
    plan(n, false).process(&mut buf);
    let residue = buf.iter().fold(0.0_f64, |m, c| m.max(c.im.abs()));
    let values = buf.iter().map(|c| c.re).collect();
    (
        GridFunction::from_parts_unchecked(*s.grid(), values),
        residue,
    )
}

pub fn inverse(s: &Spectrum) -> GridFunction {
    inverse_with_residue(s).0
}

/// Quadrature estimate of the `L^p` norm; `p = f64::INFINITY` gives the sup norm.
///
/// Circle grids use the periodic rectangle rule, line grids the composite trapezoid.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "p must lie in [1, inf], got {p}"
        )));
    }
    if p.is_infinite() {
        return Ok(f.sup_norm());
    }
    let h = f.grid().spacing();
    let v = f.values();
    let sum: f64 = if f.grid().is_circle() {
        v.iter().map(|x| x.abs().powf(p)).sum()
    } else {
        let n = v.len();
        v.iter()
            .enumerate()
            .map(|(i, x)| {
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                w * x.abs().powf(p)
            })
            .sum()
    };
    Ok((h * sum).powf(1.0 / p))
}

/// `( sum_k (1 + 4 pi^2 k^2)^s |c_k|^2 )^{1/2}`.
pub fn sobolev_norm(s: &Spectrum, order: f64) -> f64 {
    s.modes()
        .map(|(k, c)| {
            let w = 1.0 + 4.0 * PI * PI * (k * k) as f64;
            w.powf(order) * c.norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// Centered `j`-th difference quotient. Entry `i` of the result belongs to node
/// `start + i`; on the circle every node is covered.
#[derive(Debug, Clone)]
pub struct Difference {
    pub start: usize,
    pub values: Vec<f64>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Offsets and weights of the `j`-th centered difference stencil (before
/// division by `h^j`). Even orders use the standard symmetric stencil; odd
/// orders apply the first centered difference to the even stencil below.
fn stencil(j: usize) -> Vec<(isize, f64)> {
    if j.is_multiple_of(2) {
        let half = (j / 2) as isize;
        (0..=j)
            .map(|m| {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                (half - m as isize, sign * binomial(j, m))
            })
            .collect()
    } else {
        let inner = stencil(j - 1);
        let mut out: Vec<(isize, f64)> = Vec::new();
        for (shift, w) in [(1isize, 0.5), (-1isize, -0.5)] {
            for &(o, c) in &inner {
                let off = o + shift;
                match out.iter_mut().find(|(p, _)| *p == off) {
                    Some(e) => e.1 += w * c,
                    None => out.push((off, w * c)),
                }
            }
        }
        out
    }
}

pub fn centered_difference(f: &GridFunction, j: usize) -> Difference {
    let n = f.len();
    let h = f.grid().spacing();
    let st = stencil(j);
    let radius = st.iter().map(|(o, _)| o.unsigned_abs()).max().unwrap_or(0);
    let scale = h.powi(j as i32);
    let v = f.values();
    if f.grid().is_circle() {
        let values = (0..n)
            .map(|i| {
                st.iter()
                    .map(|&(o, w)| w * v[(i as isize + o).rem_euclid(n as isize) as usize])
                    .sum::<f64>()
                    / scale
            })
            .collect();
        Difference { start: 0, values }
    } else if 2 * radius >= n {
        Difference {
            start: 0,
            values: Vec::new(),
        }
    } else {
        let values = (radius..n - radius)
            .map(|i| {
                st.iter()
                    .map(|&(o, w)| w * v[(i as isize + o) as usize])
                    .sum::<f64>()
                    / scale
            })
            .collect();
        Difference {
            start: radius,
            values,
        }
    }
}

/// Finite-difference lower-bound estimate of the `C^{k,theta}` norm: the sup
/// norms of the first `k` difference quotients plus the largest Hölder
/// quotient of the `k`-th one over offsets `m h`, `1 <= m <= n/4`.
pub fn holder_norm_estimate(f: &GridFunction, k: usize, theta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in [0, 1], got {theta}"
        )));
    }
    let n = f.len();
    if n < 8 * (k + 1) {
        return Err(Error::InvalidParameter(format!(
            "order k = {k} needs at least {} grid points, have {n}",
            8 * (k + 1)
        )));
    }
    let sup_terms: f64 = (0..=k)
        .map(|j| {
            centered_difference(f, j)
                .values
                .iter()
                .fold(0.0_f64, |m, v| m.max(v.abs()))
        })
        .sum();
    let top = centered_difference(f, k);
    let h = f.grid().spacing();
    let len = top.values.len();
    let periodic = f.grid().is_circle();
    let mut quotient = 0.0_f64;
    for m in 1..=(n / 4) {
        let denom = (m as f64 * h).powf(theta);
        let pairs = if periodic { len } else { len.saturating_sub(m) };
        for i in 0..pairs {
            let jdx = if periodic { (i + m) % len } else { i + m };
            let q = (top.values[jdx] - top.values[i]).abs() / denom;
            quotient = quotient.max(q);
        }
    }
    Ok(sup_terms + quotient)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_construction() {
        let g = Grid::circle(256).unwrap();
        assert_eq!(g.spacing(), 1.0 / 256.0);
        let l = Grid::line(-20.0, 20.0, 4096).unwrap();
        assert_eq!(l.spacing(), 40.0 / 4095.0);
        assert_eq!(l.x(0), -20.0);
        assert!((l.x(4095) - 20.0).abs() < 1e-12);
        assert!(matches!(Grid::circle(255), Err(Error::InvalidGrid(_))));
        assert!(matches!(
            Grid::line(1.0, 1.0, 16),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(Grid::circle(6), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn grid_function_rejects_nan_and_bad_length() {
        let g = Grid::circle(8).unwrap();
        assert!(GridFunction::new(g, vec![0.0; 7]).is_err());
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(GridFunction::new(g, v).is_err());
    }

    #[test]
    fn transform_of_constant_and_cosine() {
        let g = Grid::circle(64).unwrap();
        let c = GridFunction::constant(g, 3.5).unwrap();
        let s = transform(&c).unwrap();
        assert!((s.coeff(0).re - 3.5).abs() < 1e-14);
        assert!(s
            .modes()
            .filter(|(k, _)| *k != 0)
            .all(|(_, c)| c.norm() < 1e-14));

        let f = GridFunction::from_fn(g, |x| (2.0 * PI * x).cos()).unwrap();
        let s = transform(&f).unwrap();
        for (k, c) in s.modes() {
            let expect = if k.abs() == 1 { 0.5 } else { 0.0 };
            assert!((c - Complex64::new(expect, 0.0)).norm() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn line_grid_has_no_transform() {
        let g = Grid::line(0.0, 1.0, 16).unwrap();
        let f = GridFunction::zeros(g);
        assert!(matches!(transform(&f), Err(Error::UnsupportedDomain(_))));
    }

    #[test]
    fn lp_norms() {
        let g = Grid::circle(128).unwrap();
        let two = GridFunction::constant(g, 2.0).unwrap();
        assert!((lp_norm(&two, 2.0).unwrap() - 2.0).abs() < 1e-14);
        let s = GridFunction::from_fn(g, |x| (2.0 * PI * x).sin()).unwrap();
        assert!((lp_norm(&s, 2.0).unwrap() - 0.5_f64.sqrt()).abs() < 1e-10);
        assert!((lp_norm(&s, f64::INFINITY).unwrap() - 1.0).abs() < 1e-3);
        assert!(lp_norm(&s, 0.5).is_err());
    }

    #[test]
    fn sobolev_norm_examples() {
        let g = Grid::circle(64).unwrap();
        let c = GridFunction::constant(g, -1.25).unwrap();
        for s in [-1.0, 0.0, 0.7, 3.0] {
            assert!((sobolev_norm(&transform(&c).unwrap(), s) - 1.25).abs() < 1e-13);
        }
        let f = GridFunction::from_fn(g, |x| (2.0 * PI * x).cos()).unwrap();
        let expect = ((1.0 + 4.0 * PI * PI) / 2.0).sqrt();
        assert!((sobolev_norm(&transform(&f).unwrap(), 1.0) - expect).abs() < 1e-10);
    }

    #[test]
    fn stencils() {
        assert_eq!(stencil(0), vec![(0, 1.0)]);
        let mut s1 = stencil(1);
        s1.sort_by_key(|p| p.0);
        assert_eq!(s1, vec![(-1, -0.5), (1, 0.5)]);
        let mut s2 = stencil(2);
        s2.sort_by_key(|p| p.0);
        assert_eq!(s2, vec![(-1, 1.0), (0, -2.0), (1, 1.0)]);
    }

    #[test]
    fn holder_examples() {
        let g = Grid::circle(256).unwrap();
        let c = GridFunction::constant(g, 0.75).unwrap();
        assert!((holder_norm_estimate(&c, 0, 1.0).unwrap() - 0.75).abs() < 1e-15);

        let l = Grid::line(0.0, 1.0, 257).unwrap();
        let kink = GridFunction::from_fn(l, |x| (x - 0.5).abs()).unwrap();
        let est = holder_norm_estimate(&kink, 0, 1.0).unwrap();
        assert!((est - 1.5).abs() / 1.5 < 0.02, "{est}");

        let s = GridFunction::from_fn(g, |x| (2.0 * PI * x).sin()).unwrap();
        let est = holder_norm_estimate(&s, 0, 1.0).unwrap();
        let expect = 1.0 + 2.0 * PI;
        assert!((est - expect).abs() / expect < 0.02, "{est}");

        assert!(
            holder_norm_estimate(&GridFunction::zeros(Grid::circle(8).unwrap()), 1, 0.5).is_err()
        );
    }

    #[test]
    fn nyquist_evaluation_matches_samples() {
        let g = Grid::circle(16).unwrap();
        let f = GridFunction::from_fn(g, |x| (16.0 * PI * x).cos() + (2.0 * PI * x).sin()).unwrap();
        let s = transform(&f).unwrap();
        for i in 0..16 {
            assert!((s.eval_at(g.x(i)) - f.values()[i]).abs() < 1e-12);
        }
    }
}

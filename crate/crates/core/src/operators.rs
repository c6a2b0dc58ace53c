//! Kernels and solution operators.
//!
//! * Fourier multipliers on the circle: Bessel potentials `J^s`, the nonlocal
//!   operator `phi(D) = d/dx (1 - d^2/dx^2)^{-1}`, its derivative and the linear
//!   group `U(t)`.
//! * The Green's functions of `1 - d^2/dx^2` on the line (`e^{-|x|}/2`) and on
//!   the circle (`cosh(x - floor(x) - 1/2) / (2 sinh(1/2))`) with their derivatives.
//! * An O(N) two-sweep recurrence for the line convolutions with `e^{-|x|}/2`
//!   and `-sgn(x) e^{-|x|}/2`.

use std::f64::consts::PI;
use std::fmt;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grid::{inverse_with_residue, transform, Grid, GridFunction, Spectrum};
use crate::quad;

/// Relative size of the boundary variation tolerated by the line kernels.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Fourier multipliers acting on circle functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Multiplier {
    /// `(1 + 4 pi^2 xi^2)^{s/2}`.
    Bessel { s: f64 },
    /// `2 pi i xi / (1 + 4 pi^2 xi^2)`.
    Phi,
    /// `exp(-2 pi i t xi / (1 + 4 pi^2 xi^2))`.
    Group { t: f64 },
    /// `(1 + 4 pi^2 xi^2)^{-1} - 1`, the symbol of `d/dx phi(D)`.
    DxPhi,
}

impl Multiplier {
    pub fn symbol(&self, xi: f64) -> Complex64 {
        let w = 1.0 + 4.0 * PI * PI * xi * xi;
        match *self {
            Multiplier::Bessel { s } => Complex64::new(w.powf(0.5 * s), 0.0),
            Multiplier::Phi => Complex64::new(0.0, 2.0 * PI * xi / w),
            Multiplier::Group { t } => Complex64::cis(-2.0 * PI * t * xi / w),
            Multiplier::DxPhi => Complex64::new(1.0 / w - 1.0, 0.0),
        }
    }

    /// Value used for the unpaired Nyquist mode: odd symbols lose their
    /// imaginary part there (phi is zeroed, the group phase is dropped).
    fn nyquist_symbol(&self, xi: f64) -> Complex64 {
        match self {
            Multiplier::Phi => Complex64::new(0.0, 0.0),
            Multiplier::Group { .. } => Complex64::new(1.0, 0.0),
            _ => self.symbol(xi),
        }
    }

    fn vanishes_at_zero(&self) -> bool {
        matches!(self, Multiplier::Phi | Multiplier::DxPhi)
    }
}

/// Multiplies every mode of `s` by `m(k)` in place.
pub fn multiply_spectrum(s: &mut Spectrum, m: Multiplier) {
    let nyq = s.nyquist();
    let n = s.grid().n_points();
    for (idx, c) in s.coeffs_mut().iter_mut().enumerate() {
        let k = crate::grid::frequency(idx, n);
        let sym = if k == -nyq {
            m.nyquist_symbol(k as f64)
        } else {
            m.symbol(k as f64)
        };
        *c *= sym;
    }
}

/// Applies a Fourier multiplier to a circle function.
pub fn apply_multiplier(f: &GridFunction, m: Multiplier) -> Result<GridFunction> {
    f.grid().require_circle("apply_multiplier")?;
    if let Multiplier::Group { t } = m {
        if t == 0.0 {
            return Ok(f.clone());
        }
    }
    if m.vanishes_at_zero() && f.is_constant() {
        return Ok(GridFunction::zeros(*f.grid()));
    }
    let mut s = transform(f)?;
    multiply_spectrum(&mut s, m);
    let (out, residue) = inverse_with_residue(&s);
    let l2 = crate::grid::lp_norm(f, 2.0)?;
    if residue > 1e-12 * l2.max(f64::MIN_POSITIVE) + 1e-300 {
        return Err(Error::InvalidData(format!(
            "multiplier output has imaginary residue {residue:e}"
        )));
    }
    Ok(out)
}

/// Spectral derivative on the circle (Nyquist mode dropped).
pub fn spectral_derivative(f: &GridFunction) -> Result<GridFunction> {
    f.grid().require_circle("spectral_derivative")?;
    if f.is_constant() {
        return Ok(GridFunction::zeros(*f.grid()));
    }
    let mut s = transform(f)?;
    let nyq = s.nyquist();
    let n = f.len();
    for (idx, c) in s.coeffs_mut().iter_mut().enumerate() {
        let k = crate::grid::frequency(idx, n);
        *c *= if k == -nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, 2.0 * PI * k as f64)
        };
    }
    Ok(inverse_with_residue(&s).0)
}

/// Line Green's function of `1 - d^2/dx^2`: `e^{-|x|}/2`.
pub fn line_green(x: f64) -> f64 {
    0.5 * (-x.abs()).exp()
}

/// `-sgn(x) e^{-|x|}/2`, with the midpoint value 0 at the jump.
pub fn line_green_deriv(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        -x.signum() * 0.5 * (-x.abs()).exp()
    }
}

/// Periodic Green's function `cosh(x - floor(x) - 1/2) / (2 sinh(1/2))`.
pub fn periodic_green(x: f64) -> f64 {
    (x - x.floor() - 0.5).cosh() / (2.0 * 0.5_f64.sinh())
}

/// Derivative of the periodic Green's function,
/// `sinh(x - floor(x) - 1/2) / (2 sinh(1/2))`; at integers it takes the
/// right-hand value `-1/2`.
pub fn periodic_green_deriv(x: f64) -> f64 {
    (x - x.floor() - 0.5).sinh() / (2.0 * 0.5_f64.sinh())
}

/// Smooth branch of the periodic Green's derivative on the closed interval
/// `z in [0, 1]`, evaluated without reduction so both end values are available.
fn periodic_green_deriv_branch(z: f64) -> f64 {
    (z - 0.5).sinh() / (2.0 * 0.5_f64.sinh())
}

/// Direct O(N^2) quadrature of `phi(D) f = (dG * f)` on the circle.
///
/// For each output node the period is unrolled so that the kernel is smooth
/// on the integration interval and a fourth-order Gregory rule is applied.
pub fn phi_periodic_direct(f: &GridFunction) -> Result<GridFunction> {
    f.grid().require_circle("phi_periodic_direct")?;
    let n = f.len();
    let h = f.grid().spacing();
    let v = f.values();
    let kernel: Vec<f64> = (0..=n)
        .map(|m| periodic_green_deriv_branch(m as f64 * h))
        .collect();
    let gregory = |m: usize| -> f64 {
        let e = m.min(n - m);
        match e {
            0 => 3.0 / 8.0,
            1 => 7.0 / 6.0,
            2 => 23.0 / 24.0,
            _ => 1.0,
        }
    };
    let out = (0..n)
        .map(|i| {
            h * (0..=n)
                .map(|m| {
                    let j = (i + n - (m % n)) % n;
                    gregory(m) * kernel[m] * v[j]
                })
                .sum::<f64>()
        })
        .collect();
    GridFunction::new(*f.grid(), out)
}

/// Bessel kernel `G_s` on the line, normalized so that `int G_s = 1`.
///
/// The defining integral over `y in (0, inf)` is evaluated after the
/// substitution `y = e^u` by adaptive Gauss–Kronrod quadrature.
pub fn bessel_kernel_line(s: f64, x: f64) -> Result<f64> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Bessel order must be positive, got {s}"
        )));
    }
    if !x.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "x must be finite, got {x}"
        )));
    }
    let x2 = x * x;
    if x2 == 0.0 && s <= 1.0 {
        return Ok(f64::INFINITY);
    }
    // Normalization: int_R e^{-pi x^2 / y} dx = sqrt(y), so int G_s = c_s (4 pi)^{s/2} Gamma(s/2).
    let c_s = 1.0 / ((4.0 * PI).powf(0.5 * s) * gamma(0.5 * s));
    let expo = |u: f64| -PI * x2 * (-u).exp() - u.exp() / (4.0 * PI) - u * (1.0 - s) / 2.0;
    let u_hi = (4.0 * PI * 800.0).ln() + (s.abs() + 1.0).ln();
    let mut u_lo = if x2 > 0.0 {
        (PI * x2 / 800.0).ln() - 1.0
    } else {
        f64::NEG_INFINITY
    };
    if s > 1.0 {
        u_lo = u_lo.max(-80.0 / (s - 1.0));
    }
    if u_lo >= u_hi {
        return Ok(0.0);
    }
    let integral = quad::adaptive(|u| expo(u).exp(), u_lo, u_hi, 1e-12, 64);
    Ok(c_s * integral)
}

/// Non-fatal diagnostics attached to line-kernel results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Warning {
    /// The data is not flat near a window edge, so the constant extension used
    /// beyond the window is not accurate there.
    BoundarySupport { side: Side, variation: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::BoundarySupport { side, variation } => write!(
                f,
                "data varies by {variation:e} near the {side:?} edge of the window"
            ),
        }
    }
}

/// Convolutions of a line function with `G_2 = e^{-|x|}/2` and its derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct LineKernelResult {
    /// `G_2 * f`.
    pub smooth_part: GridFunction,
    /// `dG_2 * f = phi(D) f`.
    pub deriv_part: GridFunction,
    pub warnings: Vec<Warning>,
}

/// Cell weights for integrals of `e^{rate (y - y_c) } p(y)` over one grid cell,
/// where `p` is the cubic through four neighbouring nodes.
#[derive(Debug, Clone)]
pub(crate) struct ExpCellRule {
    h: f64,
    /// Index 0: first cell, 1: interior, 2: last cell; inner index: rate +1 / -1.
    weights: [[[f64; 4]; 2]; 3],
}

const STENCILS: [[f64; 4]; 3] = [
    [0.0, 1.0, 2.0, 3.0],
    [-1.0, 0.0, 1.0, 2.0],
    [-2.0, -1.0, 0.0, 1.0],
];

impl ExpCellRule {
    pub(crate) fn new(h: f64) -> Self {
        let mut weights = [[[0.0; 4]; 2]; 3];
        for (t, nodes) in STENCILS.iter().enumerate() {
            for (r, rate) in [1.0, -1.0].into_iter().enumerate() {
                for m in 0..4 {
                    let lagrange = |s: f64| {
                        (0..4)
                            .filter(|&q| q != m)
                            .map(|q| (s - nodes[q]) / (nodes[m] - nodes[q]))
                            .product::<f64>()
                    };
                    weights[t][r][m] =
                        h * quad::gauss_legendre(|s| (rate * h * s).exp() * lagrange(s), 0.0, 1.0);
                }
            }
        }
        Self { h, weights }
    }

    /// First node of the stencil and the stencil kind of cell `c` (between nodes `c` and `c+1`).
    fn cell(&self, c: usize, n: usize) -> (usize, usize) {
        if c == 0 {
            (0, 0)
        } else if c + 2 >= n {
            (n - 4, 2)
        } else {
            (c - 1, 1)
        }
    }

    /// `int_{y_c}^{y_{c+1}} e^{rate (y - y_c)} p(y) dy`, `rate` is +1 or -1.
    pub(crate) fn cell_integral(&self, v: &[f64], c: usize, rate: f64) -> f64 {
        let (first, kind) = self.cell(c, v.len());
        let r = if rate > 0.0 { 0 } else { 1 };
        let w = &self.weights[kind][r];
        w[0] * v[first] + w[1] * v[first + 1] + w[2] * v[first + 2] + w[3] * v[first + 3]
    }

    pub(crate) fn spacing(&self) -> f64 {
        self.h
    }
}

/// `P_i = int_{-inf}^{x_i} e^{-(x_i - y)} f(y) dy` and
/// `R_i = int_{x_i}^{inf} e^{-(y - x_i)} f(y) dy`, with `f` extended by its edge
/// values beyond the window.
pub(crate) fn exp_sweeps(values: &[f64], rule: &ExpCellRule) -> (Vec<f64>, Vec<f64>) {
    let n = values.len();
    let decay = (-rule.spacing()).exp();
    let mut p = vec![0.0; n];
    let mut r = vec![0.0; n];
    p[0] = values[0];
    for c in 0..n - 1 {
        p[c + 1] = decay * (p[c] + rule.cell_integral(values, c, 1.0));
    }
    r[n - 1] = values[n - 1];
    for c in (0..n - 1).rev() {
        r[c] = decay * r[c + 1] + rule.cell_integral(values, c, -1.0);
    }
    (p, r)
}

pub(crate) fn boundary_warnings(f: &GridFunction) -> Vec<Warning> {
    let v = f.values();
    let n = v.len();
    let tol = BOUNDARY_TOLERANCE * f.sup_norm() + f64::MIN_POSITIVE;
    let span = 4.min(n);
    let left = v[..span]
        .iter()
        .fold(0.0_f64, |m, x| m.max((x - v[0]).abs()));
    let right = v[n - span..]
        .iter()
        .fold(0.0_f64, |m, x| m.max((x - v[n - 1]).abs()));
    let mut out = Vec::new();
    if left > tol {
        out.push(Warning::BoundarySupport {
            side: Side::Left,
            variation: left,
        });
    }
    if right > tol {
        out.push(Warning::BoundarySupport {
            side: Side::Right,
            variation: right,
        });
    }
    out
}

/// O(N) convolution of a line function with `e^{-|x|}/2` and `-sgn(x) e^{-|x|}/2`.
///
/// Two exponential sweeps accumulate `P` (mass to the left) and `R` (mass to
/// the right) with exact integration of a local cubic interpolant against the
/// exponential on each cell; `G_2 * f = (P + R)/2` and `dG_2 * f = (R - P)/2`.
pub fn exp_convolve_line(f: &GridFunction) -> Result<LineKernelResult> {
    f.grid().require_line("exp_convolve_line")?;
    let grid = *f.grid();
    let warnings = boundary_warnings(f);
    if f.is_constant() {
        return Ok(LineKernelResult {
            smooth_part: f.clone(),
            deriv_part: GridFunction::zeros(grid),
            warnings,
        });
    }
    let rule = ExpCellRule::new(grid.spacing());
    let (p, r) = exp_sweeps(f.values(), &rule);
    let smooth = p.iter().zip(&r).map(|(a, b)| 0.5 * (a + b)).collect();
    let deriv = p.iter().zip(&r).map(|(a, b)| 0.5 * (b - a)).collect();
    Ok(LineKernelResult {
        smooth_part: GridFunction::new(grid, smooth)?,
        deriv_part: GridFunction::new(grid, deriv)?,
        warnings,
    })
}

/// `phi(D) f` on either domain, with any line-support warnings.
pub fn phi(f: &GridFunction) -> Result<(GridFunction, Vec<Warning>)> {
    if f.grid().is_circle() {
        Ok((apply_multiplier(f, Multiplier::Phi)?, Vec::new()))
    } else {
        let r = exp_convolve_line(f)?;
        Ok((r.deriv_part, r.warnings))
    }
}

/// First derivative: spectral on the circle, centered differences on the line
/// (one-sided second order at the two ends).
pub fn derivative(f: &GridFunction) -> Result<GridFunction> {
    if f.grid().is_circle() {
        return spectral_derivative(f);
    }
    let v = f.values();
    let n = v.len();
    let h = f.grid().spacing();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    GridFunction::new(*f.grid(), d)
}

/// Integral of `e^{rate (y - anchor)} p(y)` over the nodes `[from, to]` of a
/// line grid, using the same cell rule as the sweeps.
pub(crate) fn line_exp_piece(
    values: &[f64],
    grid: &Grid,
    rule: &ExpCellRule,
    from: usize,
    to: usize,
    rate: f64,
    anchor: f64,
) -> f64 {
    (from..to)
        .map(|c| (rate * (grid.x(c) - anchor)).exp() * rule.cell_integral(values, c, rate))
        .sum()
}

//! Initial-data families: smooth bumps, smooth steps and random-phase
//! power-law spectra.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{inverse, Grid, GridFunction, Spectrum};

/// SplitMix64 finalizer. Used as a counter-based generator: the value for
/// counter `k` under seed `s` is `splitmix64(s ^ splitmix64(k))`, so any
/// frequency can be generated independently of the grid size.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform sample in `[0, 1)` for counter `k` of stream `seed`.
pub fn uniform(seed: u64, k: u64) -> f64 {
    (splitmix64(seed ^ splitmix64(k)) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sequential helper over the counter-based generator.
#[derive(Debug, Clone)]
pub struct Stream {
    seed: u64,
    counter: u64,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    pub fn next_f64(&mut self) -> f64 {
        let v = uniform(self.seed, self.counter);
        self.counter += 1;
        v
    }

    /// Uniform in `[lo, hi)`.
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// `exp(1 - 1/(1 - xi^2))` for `|xi| < 1`, zero otherwise; peak value 1 at `xi = 0`.
pub fn bump(xi: f64) -> f64 {
    let r = 1.0 - xi * xi;
    if r <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / r).exp()
    }
}

/// Bump of unit height centered at `center` with support half-width `half_width`.
pub fn bump_at(x: f64, center: f64, half_width: f64) -> f64 {
    bump((x - center) / half_width)
}

/// C-infinity transition from 0 (for `t <= 0`) to 1 (for `t >= 1`).
pub fn smoothstep(t: f64) -> f64 {
    let e = |s: f64| if s <= 0.0 { 0.0 } else { (-1.0 / s).exp() };
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let (l, r) = (e(t), e(1.0 - t));
        l / (l + r)
    }
}

/// Random-phase power law on the circle: `c_k = amplitude |k|^{-slope} e^{i theta_k}`
/// for `1 <= |k| < n/2` (and `|k| <= k_max` when given), `c_0 = 0`, Nyquist zero.
///
/// The phase of mode `k` is `2 pi uniform(seed, k)`, so the same law sampled on
/// different grids shares all common coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralLaw {
    pub slope: f64,
    pub seed: u64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default)]
    pub k_max: Option<u64>,
}

fn default_amplitude() -> f64 {
    1.0
}

impl SpectralLaw {
    pub fn new(slope: f64, seed: u64, amplitude: f64) -> Self {
        Self {
            slope,
            seed,
            amplitude,
            k_max: None,
        }
    }

    pub fn spectrum(&self, grid: Grid) -> Result<Spectrum> {
        if !(self.slope.is_finite() && self.amplitude.is_finite()) {
            return Err(Error::InvalidParameter(
                "spectral law needs finite slope and amplitude".into(),
            ));
        }
        let n = grid.n_points() as i64;
        let cap = self.k_max.map(|k| k as i64).unwrap_or(i64::MAX);
        Spectrum::from_fn(grid, |k| {
            let m = k.abs();
            if m == 0 || m >= n / 2 || m > cap {
                return Complex64::new(0.0, 0.0);
            }
            let theta = 2.0 * PI * uniform(self.seed, m as u64);
            let c = Complex64::from_polar(self.amplitude * (m as f64).powf(-self.slope), theta);
            if k > 0 {
                c
            } else {
                c.conj()
            }
        })
    }

    pub fn sample(&self, grid: Grid) -> Result<GridFunction> {
        Ok(inverse(&self.spectrum(grid)?))
    }
}

/// Band-limited real trigonometric polynomial with modes `1..=k_max`, random
/// coefficients drawn from `stream`, plus a random mean.
pub fn random_trig(grid: Grid, k_max: usize, stream: &mut Stream) -> Result<GridFunction> {
    let coeffs: Vec<(f64, f64, f64)> = (1..=k_max)
        .map(|k| (k as f64, stream.range(-1.0, 1.0), stream.range(-1.0, 1.0)))
        .collect();
    let mean = stream.range(-0.5, 0.5);
    GridFunction::from_fn(grid, |x| {
        mean + coeffs
            .iter()
            .map(|&(k, a, b)| (a * (2.0 * PI * k * x).cos() + b * (2.0 * PI * k * x).sin()) / k)
            .sum::<f64>()
    })
}

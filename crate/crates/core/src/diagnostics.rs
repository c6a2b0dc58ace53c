//! Conserved quantities, spectral-decay regularity measurements and
//! singularity localization.

use serde::{Deserialize, Serialize};

use crate::data::SpectralLaw;
use crate::error::{Error, Result};
use crate::evolution::{evolve, SolverConfig, Trajectory};
use crate::grid::{centered_difference, sobolev_norm, transform, Grid, GridFunction, Spectrum};
use crate::operators::spectral_derivative;

/// `I1 = int u`, `I2 = int (u_x^2 + u^2)`, `I3 = int (u^3 + 3u^2)` over one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantTriple {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

/// Conserved quantities of a circle function (rectangle rule, spectral `u_x`).
pub fn invariants(u: &GridFunction) -> Result<InvariantTriple> {
    if !u.grid().is_circle() {
        return Err(Error::UnsupportedDomain(
            "conserved quantities are computed for periodic data only".into(),
        ));
    }
    let h = u.grid().spacing();
    let ux = spectral_derivative(u)?;
    let (mut i1, mut i2, mut i3) = (0.0, 0.0, 0.0);
    for (&v, &d) in u.values().iter().zip(ux.values()) {
        i1 += v;
        i2 += d * d + v * v;
        i3 += v * v * v + 3.0 * v * v;
    }
    Ok(InvariantTriple {
        i1: h * i1,
        i2: h * i2,
        i3: h * i3,
    })
}

/// Largest relative drift `|I(t) - I(0)| / max(1, |I(0)|)` of each invariant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

pub fn drift_report(traj: &Trajectory) -> Result<DriftReport> {
    let hist = &traj.invariant_history;
    let first = hist
        .first()
        .ok_or_else(|| Error::Degenerate("trajectory has no invariant history".into()))?;
    let rel = |pick: fn(&InvariantTriple) -> f64| {
        let base = pick(first);
        hist.iter()
            .map(|t| (pick(t) - base).abs() / base.abs().max(1.0))
            .fold(0.0, f64::max)
    };
    Ok(DriftReport {
        i1: rel(|t| t.i1),
        i2: rel(|t| t.i2),
        i3: rel(|t| t.i3),
    })
}

/// Least-squares decay exponent `sigma` of `|c_k| ~ k^{-sigma}` over
/// `k_min..=k_max`, using the average of `|c_k|` and `|c_{-k}|`.
pub fn spectral_slope(s: &Spectrum, k_min: usize, k_max: usize) -> Result<f64> {
    let nyq = s.nyquist() as usize;
    if k_min == 0 || k_min >= k_max || k_max >= nyq {
        return Err(Error::InvalidParameter(format!(
            "fit band [{k_min}, {k_max}] must satisfy 1 <= k_min < k_max < {nyq}"
        )));
    }
    let scale = s.modes().map(|(_, c)| c.norm()).fold(0.0, f64::max);
    let points: Vec<(f64, f64)> = (k_min..=k_max)
        .filter_map(|k| {
            let k = k as i64;
            let m = 0.5 * (s.coeff(k).norm() + s.coeff(-k).norm());
            (m > 1e-14 * scale && m > 0.0).then(|| ((k as f64).ln(), m.ln()))
        })
        .collect();
    if points.len() < 2 {
        return Err(Error::Degenerate(format!(
            "only {} nonzero modes in the fit band [{k_min}, {k_max}]",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(-sxy / sxx)
}

/// Sobolev gain of `u(t) - u0` over `u0` for data in `H^s`: `s + 1/2` below
/// `s = 1/2`, one derivative above.
pub fn predicted_gain(s: f64) -> f64 {
    (s + 0.5).min(1.0)
}

/// Regularity index of the difference, `s + predicted_gain(s)`.
pub fn gained_index(s: f64) -> f64 {
    s + predicted_gain(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementPoint {
    pub n: usize,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub s_nominal: f64,
    pub slope_u0: f64,
    /// `None` when `u(t) - u0` vanishes identically.
    pub slope_diff: Option<f64>,
    pub gain_measured: Option<f64>,
    pub gain_predicted: f64,
    pub fit_band: (usize, usize),
    pub zero_difference: bool,
    pub refinement_ratios: Vec<RefinementPoint>,
}

impl RegularityReport {
    /// Ratios of successive refinement norms.
    pub fn growth_factors(&self) -> Vec<f64> {
        self.refinement_ratios
            .windows(2)
            .map(|w| w[1].norm / w[0].norm)
            .collect()
    }
}

/// Compares the spectral decay of `u0` with that of `u(t) - u0` at the last
/// snapshot of `traj`.
pub fn regularity_gain(
    u0: &GridFunction,
    traj: &Trajectory,
    s_nominal: f64,
    band: (usize, usize),
) -> Result<RegularityReport> {
    if traj.len() < 2 {
        return Err(Error::Degenerate(
            "trajectory needs a snapshot with t > 0".into(),
        ));
    }
    let last = traj.last();
    let diff = last.sub(u0)?;
    let slope_u0 = spectral_slope(&transform(u0)?, band.0, band.1)?;
    let zero_difference = diff.sup_norm() == 0.0;
    let slope_diff = if zero_difference {
        None
    } else {
        Some(spectral_slope(&transform(&diff)?, band.0, band.1)?)
    };
    Ok(RegularityReport {
        s_nominal,
        slope_u0,
        slope_diff,
        gain_measured: slope_diff.map(|d| d - slope_u0),
        gain_predicted: predicted_gain(s_nominal),
        fit_band: band,
        zero_difference,
        refinement_ratios: Vec::new(),
    })
}

/// `|u(t) - u0|_{H^order}` for the same data law sampled at each grid size.
pub fn refinement_sweep(
    law: &SpectralLaw,
    cfg: &SolverConfig,
    order: f64,
    sizes: &[usize],
) -> Result<Vec<RefinementPoint>> {
    sizes
        .iter()
        .map(|&n| {
            let u0 = law.sample(Grid::circle(n)?)?;
            let traj = evolve(&u0, cfg)?;
            let diff = traj.last().sub(&u0)?;
            Ok(RefinementPoint {
                n,
                norm: sobolev_norm(&transform(&diff)?, order),
            })
        })
        .collect()
}

/// `|u0|_{H^order}` of the data law at each grid size.
pub fn data_norm_sweep(
    law: &SpectralLaw,
    order: f64,
    sizes: &[usize],
) -> Result<Vec<RefinementPoint>> {
    sizes
        .iter()
        .map(|&n| {
            Ok(RefinementPoint {
                n,
                norm: sobolev_norm(&law.spectrum(Grid::circle(n)?)?, order),
            })
        })
        .collect()
}

/// Points flagged by the singularity detector at scale `(j, eta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularitySet {
    pub points: Vec<f64>,
    pub indices: Vec<usize>,
    pub detector_scale: (usize, f64),
}

pub const DEFAULT_SINGULARITY_THRESHOLD: f64 = 20.0;

/// Locates points where `u` fails to be locally `C^{j, eta}`.
///
/// The quotient field is
/// `q(x_i) = max_{m = 1, 2} |D^j u(x_i + m h) - D^j u(x_i - m h)| / (2 m h)^eta`
/// with `D^j` the centered `j`-th difference quotient. Nodes with `q` above
/// `threshold * median(q)` form contiguous clusters (cyclically on the
/// circle); each cluster is represented by the mean position of its nodes
/// attaining the cluster maximum, rounded to the grid.
pub fn singularity_localize(
    u: &GridFunction,
    j: usize,
    eta: f64,
    threshold: f64,
) -> Result<SingularitySet> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!(
            "eta must lie in [0, 1], got {eta}"
        )));
    }
    let n = u.len();
    let circle = u.grid().is_circle();
    if n < 8 * (j + 1) {
        return Err(Error::InvalidGrid(format!(
            "{n} points are too few for differences of order {j}"
        )));
    }
    let h = u.grid().spacing();
    let d = centered_difference(u, j);
    let at = |i: isize| -> Option<f64> {
        let idx = if circle {
            i.rem_euclid(n as isize) as usize
        } else if i < 0 || i as usize >= n {
            return None;
        } else {
            i as usize
        };
        idx.checked_sub(d.start)
            .and_then(|k| d.values.get(k).copied())
    };
    let q: Vec<f64> = (0..n as isize)
        .map(|i| {
            (1..=2)
                .filter_map(|m| {
                    let (a, b) = (at(i + m)?, at(i - m)?);
                    Some((a - b).abs() / (2.0 * m as f64 * h).powf(eta))
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let q_max = q.iter().copied().fold(0.0, f64::max);
    let mut sorted = q.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[n / 2];
    let cutoff = (threshold * median).max(1e-8 * q_max);
    let flagged: Vec<bool> = q.iter().map(|&v| q_max > 0.0 && v > cutoff).collect();

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut i = 0;
    while i < n {
        if flagged[i] {
            let mut c = vec![i];
            while i + 1 < n && flagged[i + 1] {
                i += 1;
                c.push(i);
            }
            clusters.push(c);
        }
        i += 1;
    }
    if circle && clusters.len() > 1 && flagged[0] && flagged[n - 1] {
        let head = clusters.remove(0);
        clusters.last_mut().expect("two clusters").extend(head);
    }

    let mut indices: Vec<usize> = clusters
        .iter()
        .map(|c| {
            let top = c.iter().map(|&k| q[k]).fold(0.0, f64::max);
            let peak: Vec<usize> = c
                .iter()
                .copied()
                .filter(|&k| q[k] >= top * (1.0 - 1e-9))
                .collect();
            // Unwrap indices that cross the periodic seam before averaging.
            let base = peak[0] as f64;
            let mean = peak
                .iter()
                .map(|&k| {
                    let mut x = k as f64;
                    if circle && x - base > n as f64 / 2.0 {
                        x -= n as f64;
                    } else if circle && base - x > n as f64 / 2.0 {
                        x += n as f64;
                    }
                    x
                })
                .sum::<f64>()
                / peak.len() as f64;
            let r = mean.round();
            if circle {
                (r as i64).rem_euclid(n as i64) as usize
            } else {
                r.clamp(0.0, (n - 1) as f64) as usize
            }
        })
        .collect();
    indices.sort_unstable();
    indices.dedup();
    Ok(SingularitySet {
        points: indices.iter().map(|&k| u.grid().x(k)).collect(),
        indices,
        detector_scale: (j, eta),
    })
}

/// Crest of a positive, exponentially decaying peak: the intersection of
/// least-squares lines through `ln u` on each flank, 3 to 40 cells from the
/// largest sample.
pub fn peak_position(u: &GridFunction) -> Result<f64> {
    const NEAR: usize = 3;
    const FAR: usize = 40;
    let v = u.values();
    let g = u.grid();
    let imax = (0..v.len())
        .max_by(|&i, &j| v[i].total_cmp(&v[j]))
        .ok_or_else(|| Error::Degenerate("empty grid function".into()))?;
    if imax < FAR || imax + FAR >= v.len() {
        return Err(Error::Degenerate(format!(
            "peak at node {imax} is too close to the window edge"
        )));
    }
    let flank = |idx: &mut dyn Iterator<Item = usize>| -> Result<(f64, f64)> {
        let pts = idx
            .map(|i| {
                if v[i] > 0.0 {
                    Ok((g.x(i), v[i].ln()))
                } else {
                    Err(Error::Degenerate("peak flank is not positive".into()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        Ok((slope, my - slope * mx))
    };
    let (sl, il) = flank(&mut (imax - FAR..=imax - NEAR))?;
    let (sr, ir) = flank(&mut (imax + NEAR..=imax + FAR))?;
    if !(sl > 0.0 && sr < 0.0) {
        return Err(Error::Degenerate(
            "flanks do not decay away from the peak".into(),
        ));
    }
    Ok((ir - il) / (sl - sr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SpectralLaw;
    use rustfft::num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn invariants_of_sine_and_constant() {
        let g = Grid::circle(128).unwrap();
        let s = GridFunction::from_fn(g, |x| (2.0 * PI * x).sin()).unwrap();
        let t = invariants(&s).unwrap();
        assert!(t.i1.abs() < 1e-10);
        assert!((t.i2 - (2.0 * PI * PI + 0.5)).abs() < 1e-10);
        assert!((t.i3 - 1.5).abs() < 1e-10);
        let c = invariants(&GridFunction::constant(g, 2.0).unwrap()).unwrap();
        assert!(
            (c.i1 - 2.0).abs() < 1e-14 && (c.i2 - 4.0).abs() < 1e-14 && (c.i3 - 20.0).abs() < 1e-13
        );
        let z = invariants(&GridFunction::zeros(g)).unwrap();
        assert_eq!((z.i1, z.i2, z.i3), (0.0, 0.0, 0.0));
        assert!(invariants(&GridFunction::zeros(Grid::line(0.0, 1.0, 16).unwrap())).is_err());
    }

    #[test]
    fn slope_of_exact_power_law() {
        let g = Grid::circle(512).unwrap();
        let s = Spectrum::from_fn(g, |k| {
            if k == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new((k.abs() as f64).powi(-2), 0.0)
            }
        })
        .unwrap();
        assert!((spectral_slope(&s, 4, 200).unwrap() - 2.0).abs() < 1e-6);
        let law = SpectralLaw::new(1.5, 5, 1.0).spectrum(g).unwrap();
        assert!((spectral_slope(&law, 8, 128).unwrap() - 1.5).abs() < 0.05);
    }

    #[test]
    fn slope_of_single_mode_is_degenerate() {
        let g = Grid::circle(64).unwrap();
        let s =
            transform(&GridFunction::from_fn(g, |x| (2.0 * PI * 3.0 * x).cos()).unwrap()).unwrap();
        assert!(spectral_slope(&s, 2, 20).is_err());
    }

    #[test]
    fn kink_of_abs_sine_is_found() {
        let g = Grid::circle(512).unwrap();
        let u = GridFunction::from_fn(g, |x| (PI * x).sin().abs()).unwrap();
        let set = singularity_localize(&u, 1, 0.0, DEFAULT_SINGULARITY_THRESHOLD).unwrap();
        assert_eq!(set.indices, vec![0]);
        let smooth = GridFunction::from_fn(g, |x| (2.0 * PI * x).sin()).unwrap();
        assert!(singularity_localize(&smooth, 1, 0.0, 20.0)
            .unwrap()
            .points
            .is_empty());
    }

    #[test]
    fn peak_position_recovers_an_off_node_crest() {
        let g = Grid::line(-10.0, 10.0, 2001).unwrap();
        let u = GridFunction::from_fn(g, |x| 0.7 * (-(x - 0.3737).abs()).exp()).unwrap();
        assert!((peak_position(&u).unwrap() - 0.3737).abs() < 1e-9);
        let flat = GridFunction::from_fn(g, |x| 1.0 + 0.0 * x).unwrap();
        assert!(peak_position(&flat).is_err());
    }
}

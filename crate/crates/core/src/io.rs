//! Trajectory serialization: CSV (one row per snapshot) and JSON.
//!
//! Floats are written in shortest round-trip form, so both formats reload
//! bit-for-bit.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::grid::GridFunction;

/// Writes `t,x0,..,x{n-1}` followed by one row per snapshot.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let n = traj.grid().n_points();
    write_snapshots_csv(&traj.times, &traj.states, n, out)
}

pub fn write_snapshots_csv<W: Write>(
    times: &[f64],
    states: &[GridFunction],
    n: usize,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = Vec::with_capacity(n + 1);
    header.push("t".to_string());
    header.extend((0..n).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for (t, u) in times.iter().zip(states) {
        let mut row = Vec::with_capacity(n + 1);
        row.push(t.to_string());
        row.extend(u.values().iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the rows written by [`write_trajectory_csv`] as `(t, values)` pairs.
pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Vec<(f64, Vec<f64>)>> {
    let mut r = csv::Reader::from_reader(input);
    let width = r.headers()?.len();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != width {
            return Err(Error::Io(format!(
                "row has {} fields, expected {width}",
                rec.len()
            )));
        }
        let mut fields = rec.iter().map(|s| {
            s.parse::<f64>()
                .map_err(|e| Error::Io(format!("bad number {s:?}: {e}")))
        });
        let t = fields
            .next()
            .ok_or_else(|| Error::Io("empty row".into()))??;
        rows.push((t, fields.collect::<Result<Vec<f64>>>()?));
    }
    Ok(rows)
}

pub fn write_json<T: Serialize, W: Write>(value: &T, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, value)?;
    Ok(())
}

pub fn trajectory_to_json(traj: &Trajectory) -> Result<String> {
    Ok(serde_json::to_string(traj)?)
}

pub fn trajectory_from_json(s: &str) -> Result<Trajectory> {
    Ok(serde_json::from_str(s)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{evolve, Method, SolverConfig};
    use crate::grid::Grid;

    fn sample() -> Trajectory {
        let u =
            GridFunction::from_fn(Grid::circle(16).unwrap(), |x| (6.0 * x).sin() / 3.0).unwrap();
        evolve(&u, &SolverConfig::new(Method::RungeKutta4, 0.01, 0.05)).unwrap()
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let traj = sample();
        let back = trajectory_from_json(&trajectory_to_json(&traj).unwrap()).unwrap();
        assert_eq!(back, traj);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let traj = sample();
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x0,x1,"));
        let rows = read_trajectory_csv(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), traj.len());
        for ((t, v), (t0, u)) in rows.iter().zip(traj.times.iter().zip(&traj.states)) {
            assert_eq!(t.to_bits(), t0.to_bits());
            assert_eq!(v.as_slice(), u.values());
        }
    }
}

//! Builds initial data from its configuration.

use std::f64::consts::PI;

use serde_json::{json, Value};

use bbmlab::data::{bump_at, random_trig, Stream};
use bbmlab::evolution::peakon;
use bbmlab::unique_continuation::{
    construct_compact_stationary, construct_periodic_balanced, stationary_step,
};
use bbmlab::{Grid, GridFunction, Result};

use crate::config::{DataPreset, InitialData};

pub struct Built {
    pub u0: GridFunction,
    /// Details of constructed data (targets, achieved values, parameters).
    pub info: Option<Value>,
}

pub fn build(data: &InitialData, grid: Grid, seed: u64) -> Result<Built> {
    let plain = |u0| Ok(Built { u0, info: None });
    match data {
        InitialData::Samples(v) => plain(GridFunction::new(grid, v.clone())?),
        InitialData::SpectralLaw(spec) => plain(spec.law(seed).sample(grid)?),
        InitialData::Preset(p) => preset(*p, grid, seed),
    }
}

fn preset(p: DataPreset, grid: Grid, seed: u64) -> Result<Built> {
    let plain = |u0| Ok(Built { u0, info: None });
    match p {
        DataPreset::Constant { value } => plain(GridFunction::constant(grid, value)?),
        DataPreset::Sine { amplitude, k } => {
            let k = k as f64;
            plain(GridFunction::from_fn(grid, |x| {
                amplitude * (2.0 * PI * k * x).sin()
            })?)
        }
        DataPreset::AbsSine => plain(GridFunction::from_fn(grid, |x| (PI * x).sin().abs())?),
        DataPreset::Step { c0, a, b } => plain(stationary_step(c0, a, b, &grid)?),
        DataPreset::Bump {
            level,
            height,
            center,
            half_width,
        } => plain(GridFunction::from_fn(grid, |x| {
            level + height * bump_at(x, center, half_width)
        })?),
        DataPreset::RandomTrig { k_max } => {
            plain(random_trig(grid, k_max, &mut Stream::new(seed))?)
        }
        DataPreset::Peakon { c } => plain(peakon(c, 0.0, &grid)?),
        DataPreset::CompactStationary { c0, b, margin } => {
            let c = construct_compact_stationary(c0, b, margin, &grid)?;
            let info = json!({
                "c0": c.c0,
                "b": c.b,
                "window": c.window,
                "alpha_target": c.alpha_target,
                "alpha_achieved": c.alpha_achieved,
                "beta_target": c.beta_target,
                "beta_achieved": c.beta_achieved,
                "left_level": c.left_level,
                "right_level": c.right_level,
                "max_dt_on_interval": c.max_dt_on_interval,
            });
            Ok(Built {
                u0: c.u0,
                info: Some(info),
            })
        }
        DataPreset::PeriodicBalanced { c0, a, b } => {
            let c = construct_periodic_balanced(c0, a, b, &grid)?;
            let info = json!({
                "c0": c.c0,
                "a": c.a,
                "b": c.b,
                "lambda0": c.lambda0,
                "q_v1": c.q_v1,
                "q_v2": c.q_v2,
                "q_final": c.q_final,
                "iterations": c.iterations,
            });
            Ok(Built {
                u0: c.v0,
                info: Some(info),
            })
        }
    }
}

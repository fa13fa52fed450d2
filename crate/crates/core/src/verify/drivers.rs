//! Driver families used by the checks.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::paths::{make_uniform_grid, sample_brownian, PathKind, RngSpec, SamplePath};

/// Brownian driver on `[0, horizon]` with `steps_per_unit` cells per unit.
pub fn brownian_driver(horizon: f64, steps_per_unit: usize, rng: RngSpec) -> SamplePath {
    let n = ((horizon * steps_per_unit as f64).round() as usize).max(1);
    let grid = make_uniform_grid(horizon, n).expect("positive horizon and cell count");
    sample_brownian(&grid, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmallShape {
    /// A Brownian path rescaled to the requested sup-norm.
    Brownian,
    /// Triangle wave with a random integer frequency and sign.
    Sawtooth,
    /// Sine wave with a random frequency and sign.
    Sinusoid,
}

impl SmallShape {
    /// Shape used for path number `k` of a small-driver family.
    pub fn cycle(k: u64) -> SmallShape {
        match k % 4 {
            0 | 1 => SmallShape::Brownian,
            2 => SmallShape::Sawtooth,
            _ => SmallShape::Sinusoid,
        }
    }
}

/// Driver on `[0, 1]` started at 0 whose node sup-norm equals `amplitude`.
pub fn small_driver(shape: SmallShape, amplitude: f64, steps: usize, rng: RngSpec) -> SamplePath {
    let grid = make_uniform_grid(1.0, steps.max(1)).expect("unit horizon");
    let raw = match shape {
        SmallShape::Brownian => sample_brownian(&grid, rng),
        SmallShape::Sawtooth | SmallShape::Sinusoid => {
            let mut gen = rng.rng();
            let sign = if gen.random::<bool>() { 1.0 } else { -1.0 };
            let tau = std::f64::consts::TAU;
            let wave: Box<dyn Fn(f64) -> f64> = if shape == SmallShape::Sawtooth {
                let f = gen.random_range(1..=8) as f64;
                Box::new(move |t| sign * (tau * f * t).sin().asin() * std::f64::consts::FRAC_2_PI)
            } else {
                let f = gen.random_range(0.5..8.0);
                Box::new(move |t| sign * (tau * f * t).sin())
            };
            SamplePath::from_fn(grid, PathKind::Driver, wave).expect("finite wave")
        }
    };
    let m = raw.sup_norm();
    if m == 0.0 {
        return raw;
    }
    let values = raw.values().iter().map(|v| v / m * amplitude).collect();
    let mut p = SamplePath::new(raw.grid().clone(), values, PathKind::Driver).expect("same grid");
    p = p.with_origin(rng);
    p
}

const BATCH: u64 = 256;

/// The first `n` Brownian drivers on `[0, 3]` (in stream order) whose
/// realized increment `B_2 - B_1` satisfies `accept`, plus the number of
/// candidates drawn up to the last accepted one.
pub fn conditioned_ce1_drivers(
    n: usize,
    seed: u64,
    steps_per_unit: usize,
    tag: u64,
    accept: impl Fn(f64) -> bool + Sync,
) -> (Vec<(u64, SamplePath)>, u64) {
    let mut out = Vec::with_capacity(n);
    let mut next = 0u64;
    while out.len() < n {
        let batch: Vec<Option<(u64, SamplePath)>> = (next..next + BATCH)
            .into_par_iter()
            .map(|k| {
                let d = brownian_driver(3.0, steps_per_unit, RngSpec::new(seed, k).derive(tag));
                let inc = d.eval_unchecked(2.0) - d.eval_unchecked(1.0);
                accept(inc).then_some((k, d))
            })
            .collect();
        for item in batch.into_iter().flatten() {
            if out.len() < n {
                out.push(item);
            }
        }
        next += BATCH;
    }
    let raw = out.last().map_or(0, |(k, _)| k + 1);
    (out, raw)
}

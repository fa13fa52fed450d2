//! Time grids, Brownian drivers and piecewise-linear sample paths.
//!
//! A [`SamplePath`] is the piecewise-linear interpolant of its node values;
//! every downstream computation (solver, residual, hitting times) treats the
//! interpolant as *the* path.

use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing, finite time points. The first point is the start of
/// the horizon (0 for freshly generated grids), the last one the horizon `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::usage("a time grid needs at least two points"));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::usage("time grid contains a non-finite point"));
        }
        if times[0] < 0.0 {
            return Err(Error::usage("time grid starts before 0"));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::usage(format!(
                "time grid is not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(TimeGrid { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    /// The horizon `T` (last grid point).
    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start() && t <= self.horizon()
    }

    /// Index `i` of the cell `[t_i, t_{i+1}]` holding `t` (the last cell for
    /// `t = T`). Caller guarantees `t` lies inside the grid.
    pub(crate) fn cell_of(&self, t: f64) -> usize {
        let n = self.times.len();
        match self.times.binary_search_by(|p| p.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }
}

/// `n + 1` equally spaced points on `[0, horizon]`.
pub fn make_uniform_grid(horizon: f64, n: usize) -> Result<TimeGrid> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::usage(format!("horizon must be positive, got {horizon}")));
    }
    if n == 0 {
        return Err(Error::usage("number of grid cells must be at least 1"));
    }
    let mut times: Vec<f64> = (0..=n).map(|k| horizon * k as f64 / n as f64).collect();
    times[n] = horizon;
    TimeGrid::new(times)
}

/// Identifies one independent random substream.
///
/// The pair `(master_seed, stream_id)` fully determines the output: the
/// master seed keys a ChaCha8 generator and the stream id selects its 64-bit
/// stream, so per-path draws never depend on scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        RngSpec { master_seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Same stream id under an independent key, for a different purpose
    /// (driver, oracle, refinement, ...).
    pub fn derive(&self, tag: u64) -> RngSpec {
        RngSpec {
            master_seed: splitmix64(self.master_seed ^ splitmix64(tag)),
            stream_id: self.stream_id,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Driver,
    Solution,
}

/// A continuous path given by node values on a [`TimeGrid`], linearly
/// interpolated in between.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: TimeGrid,
    values: Vec<f64>,
    kind: PathKind,
    origin: Option<RngSpec>,
}

impl SamplePath {
    pub fn new(grid: TimeGrid, values: Vec<f64>, kind: PathKind) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::usage(format!(
                "{} grid points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t: grid.times()[i] });
        }
        Ok(SamplePath { grid, values, kind, origin: None })
    }

    pub fn from_nodes(times: Vec<f64>, values: Vec<f64>, kind: PathKind) -> Result<Self> {
        SamplePath::new(TimeGrid::new(times)?, values, kind)
    }

    /// The path `t -> f(t)` sampled on `grid`.
    pub fn from_fn(grid: TimeGrid, kind: PathKind, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.times().iter().map(|&t| f(t)).collect();
        SamplePath::new(grid, values, kind)
    }

    pub fn with_origin(mut self, origin: RngSpec) -> Self {
        self.origin = Some(origin);
        self
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        self.grid.times()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn origin(&self) -> Option<RngSpec> {
        self.origin
    }

    pub fn start(&self) -> f64 {
        self.grid.start()
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Value at `t`: exact at nodes, linear in between.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !self.grid.contains(t) {
            return Err(Error::usage(format!(
                "t = {t} outside path horizon [{}, {}]",
                self.start(),
                self.horizon()
            )));
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        let times = self.grid.times();
        let i = self.grid.cell_of(t);
        let (t0, t1) = (times[i], times[i + 1]);
        if t == t0 {
            return self.values[i];
        }
        if t == t1 {
            return self.values[i + 1];
        }
        let w = (t - t0) / (t1 - t0);
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }

    /// Largest absolute node value (the sup-norm of the interpolant).
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Values multiplied by `factor`, same grid.
    pub fn scaled(&self, factor: f64) -> SamplePath {
        SamplePath {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
            kind: self.kind,
            origin: self.origin,
        }
    }

    /// Sub-path on the nodes inside `[a, b]`, with `a` and `b` inserted as
    /// nodes when they fall strictly inside a cell.
    pub fn restrict(&self, a: f64, b: f64) -> Result<SamplePath> {
        if !(a < b) || !self.grid.contains(a) || !self.grid.contains(b) {
            return Err(Error::usage(format!(
                "window [{a}, {b}] not inside [{}, {}]",
                self.start(),
                self.horizon()
            )));
        }
        let mut times = vec![a];
        let mut values = vec![self.eval_unchecked(a)];
        for (&t, &v) in self.times().iter().zip(&self.values) {
            if t > a && t < b {
                times.push(t);
                values.push(v);
            }
        }
        times.push(b);
        values.push(self.eval_unchecked(b));
        let mut p = SamplePath::from_nodes(times, values, self.kind)?;
        p.origin = self.origin;
        Ok(p)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["t", "value"])?;
        for (t, v) in self.times().iter().zip(&self.values) {
            wtr.write_record([format!("{t:?}"), format!("{v:?}")])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, kind: PathKind) -> Result<SamplePath> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "value" {
            return Err(Error::Parse(format!(
                "expected header `t,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("`{s}`: {e}")))
            };
            times.push(parse(&rec[0])?);
            values.push(parse(&rec[1])?);
        }
        SamplePath::from_nodes(times, values, kind)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load_csv(path: impl AsRef<Path>, kind: PathKind) -> Result<SamplePath> {
        SamplePath::read_csv(std::fs::File::open(path)?, kind)
    }

    pub fn to_json(&self) -> PathJson {
        PathJson {
            horizon: self.horizon(),
            times: self.times().to_vec(),
            values: self.values.clone(),
            kind: self.kind,
            seed: self.origin.map(|o| o.master_seed),
            stream: self.origin.map(|o| o.stream_id),
        }
    }

    pub fn from_json(j: PathJson) -> Result<SamplePath> {
        let mut p = SamplePath::from_nodes(j.times, j.values, j.kind)?;
        if p.horizon() != j.horizon {
            return Err(Error::Parse(format!(
                "horizon {} does not match last time {}",
                j.horizon,
                p.horizon()
            )));
        }
        if let (Some(seed), Some(stream)) = (j.seed, j.stream) {
            p.origin = Some(RngSpec::new(seed, stream));
        }
        Ok(p)
    }
}

/// JSON form of a [`SamplePath`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathJson {
    pub horizon: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: PathKind,
    pub seed: Option<u64>,
    pub stream: Option<u64>,
}

/// Brownian path on `grid` started at 0, increments `N(0, Δt)`.
pub fn sample_brownian(grid: &TimeGrid, rng: RngSpec) -> SamplePath {
    let mut gen = rng.rng();
    let times = grid.times();
    let mut values = Vec::with_capacity(times.len());
    let mut b = 0.0;
    values.push(b);
    for w in times.windows(2) {
        let z: f64 = StandardNormal.sample(&mut gen);
        b += (w[1] - w[0]).sqrt() * z;
        values.push(b);
    }
    SamplePath {
        grid: grid.clone(),
        values,
        kind: PathKind::Driver,
        origin: Some(rng),
    }
}

/// Brownian-bridge midpoint refinement of every cell inside `[a, b]`.
///
/// Each level halves the cells in the window; a new midpoint is drawn from
/// the bridge law `N((v_l + v_r) / 2, Δt / 4)` given its neighbours, so the
/// refined path is a finer sample of the same Brownian realization. Original
/// nodes keep their exact values.
pub fn refine_bridge(
    path: &SamplePath,
    a: f64,
    b: f64,
    levels: u32,
    rng: RngSpec,
) -> Result<SamplePath> {
    if path.kind != PathKind::Driver {
        return Err(Error::usage("only driver paths can be bridge-refined"));
    }
    if levels == 0 {
        return Err(Error::usage("refinement needs at least one level"));
    }
    if !(a < b) || !path.grid.contains(a) || !path.grid.contains(b) {
        return Err(Error::usage(format!(
            "refinement window [{a}, {b}] outside horizon [{}, {}]",
            path.start(),
            path.horizon()
        )));
    }
    let mut gen = rng.rng();
    let mut times = path.times().to_vec();
    let mut values = path.values.clone();
    for _ in 0..levels {
        let mut nt = Vec::with_capacity(2 * times.len());
        let mut nv = Vec::with_capacity(2 * times.len());
        for i in 0..times.len() - 1 {
            let (t0, t1) = (times[i], times[i + 1]);
            nt.push(t0);
            nv.push(values[i]);
            if t0 >= a && t1 <= b {
                let mid = 0.5 * (t0 + t1);
                if mid > t0 && mid < t1 {
                    let z: f64 = StandardNormal.sample(&mut gen);
                    nt.push(mid);
                    nv.push(0.5 * (values[i] + values[i + 1]) + 0.5 * (t1 - t0).sqrt() * z);
                }
            }
        }
        nt.push(times[times.len() - 1]);
        nv.push(values[values.len() - 1]);
        times = nt;
        values = nv;
    }
    Ok(SamplePath {
        grid: TimeGrid::new(times)?,
        values,
        kind: PathKind::Driver,
        origin: path.origin,
    })
}

/// Value of `path` at `t` (exact at nodes, linear between them).
pub fn eval_path(path: &SamplePath, t: f64) -> Result<f64> {
    path.eval(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_grid_spacing() {
        let g = make_uniform_grid(1.0, 4).unwrap();
        assert_eq!(g.times(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = make_uniform_grid(3.0, 3).unwrap();
        assert_eq!(g.times(), &[0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn uniform_grid_rejects_bad_input() {
        assert!(matches!(make_uniform_grid(1.0, 0), Err(Error::Usage(_))));
        assert!(matches!(make_uniform_grid(0.0, 4), Err(Error::Usage(_))));
        assert!(matches!(make_uniform_grid(-1.0, 4), Err(Error::Usage(_))));
    }

    #[test]
    fn time_grid_invariants() {
        assert!(TimeGrid::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, f64::NAN]).is_err());
        assert!(TimeGrid::new(vec![0.0]).is_err());
    }

    #[test]
    fn brownian_starts_at_zero_and_is_deterministic() {
        let g = make_uniform_grid(1.0, 64).unwrap();
        let a = sample_brownian(&g, RngSpec::new(11, 3));
        let b = sample_brownian(&g, RngSpec::new(11, 3));
        let c = sample_brownian(&g, RngSpec::new(11, 4));
        assert_eq!(a.values()[0], 0.0);
        assert_eq!(a, b);
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn eval_is_exact_at_nodes_and_linear_between() {
        let p = SamplePath::from_nodes(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, -1.0], PathKind::Driver)
            .unwrap();
        assert_eq!(p.eval(1.0).unwrap(), 2.0);
        assert_eq!(p.eval(0.5).unwrap(), 1.0);
        assert_relative_eq!(p.eval(1.5).unwrap(), 0.5);
        assert!(matches!(p.eval(2.1), Err(Error::Usage(_))));
        assert!(matches!(eval_path(&p, -0.1), Err(Error::Usage(_))));
    }

    #[test]
    fn refinement_preserves_original_nodes() {
        let g = make_uniform_grid(1.0, 8).unwrap();
        let p = sample_brownian(&g, RngSpec::new(5, 0));
        let r = refine_bridge(&p, 0.25, 0.75, 3, RngSpec::new(5, 1)).unwrap();
        for (&t, &v) in p.times().iter().zip(p.values()) {
            assert_eq!(r.eval(t).unwrap(), v);
        }
        // 4 cells inside the window, each split into 8.
        assert_eq!(r.len(), p.len() + 4 * 7);

        let one = SamplePath::from_nodes(vec![0.0, 1.0], vec![0.3, -0.2], PathKind::Driver).unwrap();
        let r1 = refine_bridge(&one, 0.0, 1.0, 1, RngSpec::new(1, 1)).unwrap();
        assert_eq!(r1.len(), 3);
        assert_eq!(r1.values()[0], 0.3);
        assert_eq!(r1.values()[2], -0.2);
    }

    #[test]
    fn refinement_rejects_bad_input() {
        let p = SamplePath::from_nodes(vec![0.0, 1.0], vec![0.0, 1.0], PathKind::Driver).unwrap();
        let rng = RngSpec::new(0, 0);
        assert!(matches!(refine_bridge(&p, 0.0, 1.0, 0, rng), Err(Error::Usage(_))));
        assert!(matches!(refine_bridge(&p, 0.0, 1.5, 1, rng), Err(Error::Usage(_))));
        let s = SamplePath::from_nodes(vec![0.0, 1.0], vec![0.0, 1.0], PathKind::Solution).unwrap();
        assert!(matches!(refine_bridge(&s, 0.0, 1.0, 1, rng), Err(Error::Usage(_))));
    }

    #[test]
    fn csv_and_json_round_trip() {
        let g = make_uniform_grid(2.0, 16).unwrap();
        let p = sample_brownian(&g, RngSpec::new(9, 2));
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"t,value\n"));
        let q = SamplePath::read_csv(buf.as_slice(), PathKind::Driver).unwrap();
        assert_eq!(p.times(), q.times());
        assert_eq!(p.values(), q.values());

        let j = serde_json::to_string(&p.to_json()).unwrap();
        let back = SamplePath::from_json(serde_json::from_str(&j).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn restrict_inserts_window_ends() {
        let p = SamplePath::from_nodes(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 0.0], PathKind::Driver)
            .unwrap();
        let r = p.restrict(0.5, 2.0).unwrap();
        assert_eq!(r.times(), &[0.5, 1.0, 2.0]);
        assert_eq!(r.values(), &[1.0, 2.0, 0.0]);
    }
}

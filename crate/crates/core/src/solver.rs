//! Pathwise integration of `X_t = X_0 + ∫ b(s, X_s) ds + B_t` against a fixed
//! piecewise-linear driver, the residual of that integral equation, and
//! level-crossing detection.
//!
//! On every region where the drift is affine the solution is written down
//! directly from the driver. Elsewhere each step is a Strang splitting: an
//! exact half step of the bridge term `(y - x)/(T - t)`, a trapezoidal
//! implicit step of `c/(x - a) + k` plus the driver increment, and another
//! exact bridge half step. The implicit step reduces to a quadratic whose
//! root is chosen on the side of `a` the solution started on, so repulsive
//! reciprocal terms can never be crossed.

use serde::{Deserialize, Serialize};

use crate::drifts::{eval_drift, DriftSpec, LocalForm, RecipTerm, Side};
use crate::error::{Error, Result};
use crate::paths::{PathKind, SamplePath};

/// Tuning knobs of the integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveOptions {
    /// Largest step taken.
    pub h_base: f64,
    /// Halvings allowed per step before giving up (repulsive terms fall
    /// back to a fully implicit step instead).
    pub max_refine_depth: u32,
    /// Minimum distance to a singular point, also the quadrature shift.
    pub sing_guard: f64,
    /// Width of the window before each bridge terminal time left out of the
    /// residual.
    pub pin_window: f64,
    /// Terminal values this close to the bridge target are reported as the
    /// target itself.
    pub pin_tol: f64,
    /// Initial displacement when starting on a reciprocal singularity.
    pub boot_floor: f64,
    /// Bound on `h·|c|/(x - a)^2` for an accepted step.
    pub step_growth_cap: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            h_base: 1.0 / 16384.0,
            max_refine_depth: 40,
            sing_guard: 1e-9,
            pin_window: 1e-4,
            pin_tol: 1e-6,
            boot_floor: 1e-8,
            step_growth_cap: 0.25,
        }
    }
}

impl SolveOptions {
    pub fn with_h_base(mut self, h: f64) -> Self {
        self.h_base = h;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("h_base", self.h_base),
            ("sing_guard", self.sing_guard),
            ("pin_window", self.pin_window),
            ("pin_tol", self.pin_tol),
            ("boot_floor", self.boot_floor),
            ("step_growth_cap", self.step_growth_cap),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::usage(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.max_refine_depth == 0 {
            return Err(Error::usage("max_refine_depth must be positive"));
        }
        Ok(())
    }
}

/// Initial value plus the side used when `x0` sits exactly on a region
/// boundary or singular point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Start {
    pub x0: f64,
    pub side: Side,
}

impl Start {
    pub fn new(x0: f64, side: Side) -> Self {
        Start { x0, side }
    }
}

impl From<f64> for Start {
    fn from(x0: f64) -> Self {
        let side = if x0 < 0.0 { Side::Below } else { Side::Above };
        Start { x0, side }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub drift: DriftSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub level: f64,
    pub time: f64,
}

/// One labelled decision taken while building a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchEntry {
    pub label: String,
    pub value: f64,
    pub detail: String,
}

impl BranchEntry {
    pub fn new(label: &str, value: f64, detail: impl Into<String>) -> Self {
        BranchEntry { label: label.to_string(), value, detail: detail.into() }
    }
}

/// A terminal value snapped to its bridge target; `raw` is the integrator's
/// own value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinRecord {
    pub time: f64,
    pub target: f64,
    pub raw: f64,
}

/// A solution path plus how it was built.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPath {
    pub path: SamplePath,
    pub segments: Vec<Segment>,
    pub hits: Vec<Hit>,
    pub branch_log: Vec<BranchEntry>,
    pub residual: Option<f64>,
    pub pins: Vec<PinRecord>,
}

/// JSON sidecar written next to a solution's CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub segments: Vec<Segment>,
    pub hits: Vec<Hit>,
    pub branch_log: Vec<BranchEntry>,
    pub residual: Option<f64>,
    #[serde(default)]
    pub pins: Vec<PinRecord>,
}

impl SolutionPath {
    pub fn from_path(path: SamplePath) -> Self {
        SolutionPath {
            path,
            segments: Vec::new(),
            hits: Vec::new(),
            branch_log: Vec::new(),
            residual: None,
            pins: Vec::new(),
        }
    }

    pub fn times(&self) -> &[f64] {
        self.path.times()
    }

    pub fn values(&self) -> &[f64] {
        self.path.values()
    }

    pub fn start(&self) -> f64 {
        self.path.start()
    }

    pub fn horizon(&self) -> f64 {
        self.path.horizon()
    }

    pub fn final_value(&self) -> f64 {
        self.path.last_value()
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.path.eval(t)
    }

    /// First logged decision with this label.
    pub fn branch(&self, label: &str) -> Option<&BranchEntry> {
        self.branch_log.iter().find(|b| b.label == label)
    }

    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            segments: self.segments.clone(),
            hits: self.hits.clone(),
            branch_log: self.branch_log.clone(),
            residual: self.residual,
            pins: self.pins.clone(),
        }
    }

    pub fn sidecar_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.sidecar())?)
    }

    pub fn from_parts(path: SamplePath, sidecar: Sidecar) -> Self {
        SolutionPath {
            path,
            segments: sidecar.segments,
            hits: sidecar.hits,
            branch_log: sidecar.branch_log,
            residual: sidecar.residual,
            pins: sidecar.pins,
        }
    }
}

/// Solves the integral equation for `spec` on `window` against `driver`.
pub fn solve_pathwise(
    spec: &DriftSpec,
    driver: &SamplePath,
    start: impl Into<Start>,
    window: (f64, f64),
    opts: &SolveOptions,
) -> Result<SolutionPath> {
    Integrator::new(spec, driver, start.into(), window, opts, None)?.run()
}

/// Like [`solve_pathwise`], but stops at the first crossing of `level`
/// (recorded in `hits`).
pub fn solve_until(
    spec: &DriftSpec,
    driver: &SamplePath,
    start: impl Into<Start>,
    window: (f64, f64),
    stop_level: f64,
    opts: &SolveOptions,
) -> Result<SolutionPath> {
    Integrator::new(spec, driver, start.into(), window, opts, Some(stop_level))?.run()
}

pub(crate) fn check_window(driver: &SamplePath, window: (f64, f64)) -> Result<()> {
    let (a, b) = window;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::usage(format!("invalid window [{a}, {b}]")));
    }
    if a < driver.start() || b > driver.horizon() {
        return Err(Error::usage(format!(
            "window [{a}, {b}] not inside driver horizon [{}, {}]",
            driver.start(),
            driver.horizon()
        )));
    }
    Ok(())
}

fn check_drift_window(spec: &DriftSpec, window: (f64, f64)) -> Result<()> {
    let (s, e, _) = spec.time_window();
    if window.0 < s || window.1 > e {
        return Err(Error::usage(format!(
            "window [{}, {}] outside the drift's time window [{s}, {e}]",
            window.0, window.1
        )));
    }
    Ok(())
}

/// Declared barrier of the one-sided primitives.
fn barrier(spec: &DriftSpec) -> Option<(f64, Side)> {
    match *spec {
        DriftSpec::Bes3 { center, side } | DriftSpec::BridgeOneSided { center, side, .. } => {
            Some((center, side))
        }
        _ => None,
    }
}

enum Scheme {
    Trapezoidal,
    Implicit,
}

/// Root of `u^2 - p u - q = 0` on the side `sigma` of 0.
///
/// For `q > 0` the roots have opposite signs and exactly one qualifies. For
/// `q < 0` both share the sign of `p`; the one continuous in the step size
/// (the larger in magnitude) is taken, and `None` means the step is too long.
fn side_root(p: f64, q: f64, sigma: f64) -> Option<f64> {
    let disc = p * p + 4.0 * q;
    if q > 0.0 {
        let r = disc.sqrt();
        let sp = sigma * p;
        let u = if sp >= 0.0 {
            sigma * 0.5 * (sp + r)
        } else {
            sigma * 2.0 * q / (r - sp)
        };
        Some(u)
    } else {
        if disc < 0.0 || sigma * p <= 0.0 {
            return None;
        }
        Some(sigma * 0.5 * (sigma * p + disc.sqrt()))
    }
}

/// One Strang step of `form` from `(t0, x0)` to `t1` with driver increment
/// `db`. `None` when the implicit equation has no root on the current side.
fn advance(form: &LocalForm, t0: f64, x0: f64, t1: f64, db: f64, scheme: Scheme) -> Option<f64> {
    let s = t1 - t0;
    let tm = 0.5 * (t0 + t1);
    let mut x = x0;
    if let Some(b) = form.bridge {
        x = b.target + (x - b.target) * ((b.t_end - tm) / (b.t_end - t0));
    }
    match form.recip {
        Some(RecipTerm { coef, center }) if coef != 0.0 => {
            let u0 = x - center;
            let sigma = u0.signum();
            let (p, q) = match scheme {
                Scheme::Trapezoidal => {
                    (u0 + db + form.constant * s + 0.5 * s * coef / u0, 0.5 * s * coef)
                }
                Scheme::Implicit => (u0 + db + form.constant * s, s * coef),
            };
            x = center + side_root(p, q, sigma)?;
        }
        _ => x += db + form.constant * s,
    }
    if let Some(b) = form.bridge {
        x = if t1 >= b.t_end {
            b.target
        } else {
            b.target + (x - b.target) * ((b.t_end - t1) / (b.t_end - tm))
        };
    }
    Some(x)
}

struct Anchor {
    form: LocalForm,
    t: f64,
    x: f64,
    b: f64,
}

struct Integrator<'a> {
    spec: &'a DriftSpec,
    opts: &'a SolveOptions,
    stop_level: Option<f64>,
    base: Vec<f64>,
    base_b: Vec<f64>,
    times: Vec<f64>,
    values: Vec<f64>,
    t: f64,
    x: f64,
    hint: Side,
    s_carry: f64,
    anchor: Option<Anchor>,
    pins: Vec<PinRecord>,
    hits: Vec<Hit>,
    barrier: Option<(f64, Side)>,
    window: (f64, f64),
}

enum Flow {
    Continue,
    Stop,
}

impl<'a> Integrator<'a> {
    fn new(
        spec: &'a DriftSpec,
        driver: &SamplePath,
        start: Start,
        window: (f64, f64),
        opts: &'a SolveOptions,
        stop_level: Option<f64>,
    ) -> Result<Self> {
        spec.validate()?;
        opts.validate()?;
        check_window(driver, window)?;
        check_drift_window(spec, window)?;
        if !start.x0.is_finite() {
            return Err(Error::usage(format!("x0 = {} is not finite", start.x0)));
        }
        let barrier = barrier(spec);
        let mut hint = start.side;
        if let Some((c, side)) = barrier {
            match Side::of(start.x0, c) {
                Some(s) if s != side => {
                    return Err(Error::SideViolation { t: window.0, x: start.x0, barrier: c });
                }
                None => hint = side,
                _ => {}
            }
        }
        let base = base_nodes(spec, driver, window, opts.h_base, opts.pin_window);
        let base_b = base.iter().map(|&t| driver.eval_unchecked(t)).collect();
        let cap = 2 * base.len();
        Ok(Integrator {
            spec,
            opts,
            stop_level,
            base,
            base_b,
            times: Vec::with_capacity(cap),
            values: Vec::with_capacity(cap),
            t: window.0,
            x: start.x0,
            hint,
            s_carry: opts.h_base,
            anchor: None,
            pins: Vec::new(),
            hits: Vec::new(),
            barrier,
            window,
        })
    }

    fn run(mut self) -> Result<SolutionPath> {
        self.times.push(self.t);
        self.values.push(self.x);
        'cells: for i in 0..self.base.len() - 1 {
            let (c0, c1) = (self.base[i], self.base[i + 1]);
            let (b0, b1) = (self.base_b[i], self.base_b[i + 1]);
            let slope = (b1 - b0) / (c1 - c0);
            let drv = |t: f64| {
                if t >= c1 {
                    b1
                } else {
                    b0 + slope * (t - c0)
                }
            };
            while self.t < c1 {
                let flow = self.step(c1, &drv)?;
                if let Flow::Stop = flow {
                    break 'cells;
                }
            }
        }
        let end = *self.times.last().unwrap();
        let path = SamplePath::from_nodes(self.times, self.values, PathKind::Solution)?;
        Ok(SolutionPath {
            path,
            segments: vec![Segment { start: self.window.0, end, drift: *self.spec }],
            hits: self.hits,
            branch_log: Vec::new(),
            residual: None,
            pins: self.pins,
        })
    }

    /// Advances from the current state towards `c1` (the end of the current
    /// driver-linear cell) by one accepted step, region crossing or boot.
    fn step(&mut self, c1: f64, drv: &impl Fn(f64) -> f64) -> Result<Flow> {
        let form = self.spec.local_form(self.t, self.x, self.hint);
        if form.is_affine() {
            return self.affine_step(form, c1, drv);
        }
        self.anchor = None;
        let Some(recip) = form.recip else {
            return self.smooth_step(form, c1, drv);
        };
        if self.x == recip.center {
            return self.boot(form, recip, c1, drv);
        }
        self.smooth_step(form, c1, drv)
    }

    fn affine_step(&mut self, form: LocalForm, c1: f64, drv: &impl Fn(f64) -> f64) -> Result<Flow> {
        let anchor = match &self.anchor {
            Some(a) if a.form == form => a,
            _ => {
                self.anchor = Some(Anchor { form, t: self.t, x: self.x, b: drv(self.t) });
                self.anchor.as_ref().unwrap()
            }
        };
        let x1 = anchor.x + (drv(c1) - anchor.b) + form.constant * (c1 - anchor.t);
        self.finish_step(form, c1, x1)
    }

    /// Accepts the candidate `(t1, x1)` reached from the current state inside
    /// `form`, cutting it at a region boundary or at the stop level.
    fn finish_step(&mut self, form: LocalForm, t1: f64, x1: f64) -> Result<Flow> {
        if !x1.is_finite() {
            return Err(Error::NonFinite { t: t1 });
        }
        let (t0, x0) = (self.t, self.x);
        let exit = if x1 < form.lo || (x1 == form.lo && x1 < x0) {
            Some(form.lo)
        } else if x1 > form.hi || (x1 == form.hi && x1 > x0) {
            Some(form.hi)
        } else {
            None
        };
        if let Some(stop) = self.stop_level {
            let crosses = x1 == stop || (x0 - stop) * (x1 - stop) < 0.0;
            let before_exit = match exit {
                Some(bd) => (stop - x0).abs() <= (bd - x0).abs(),
                None => true,
            };
            if crosses && before_exit && x0 != stop {
                let tc = crossing_time(t0, x0, t1, x1, stop);
                self.push(tc, stop);
                self.hits.push(Hit { level: stop, time: self.t });
                return Ok(Flow::Stop);
            }
        }
        match exit {
            None => {
                self.push(t1, x1);
                if let Some(b) = form.bridge {
                    if t1 >= b.t_end {
                        self.pin(b.target);
                    }
                }
            }
            Some(bd) => {
                let tc = crossing_time(t0, x0, t1, x1, bd);
                self.push(tc, bd);
                self.hint = if x1 > x0 { Side::Above } else { Side::Below };
                self.anchor = None;
            }
        }
        if let Some((c, side)) = self.barrier {
            if Side::of(self.x, c).is_some_and(|s| s != side) {
                return Err(Error::SideViolation { t: self.t, x: self.x, barrier: c });
            }
        }
        Ok(Flow::Continue)
    }

    fn push(&mut self, t: f64, x: f64) {
        if t > self.t {
            self.times.push(t);
            self.values.push(x);
            self.t = t;
        } else {
            *self.values.last_mut().unwrap() = x;
        }
        self.x = x;
    }

    fn pin(&mut self, target: f64) {
        let raw = self.x;
        if (raw - target).abs() < self.opts.pin_tol {
            *self.values.last_mut().unwrap() = target;
            self.x = target;
        }
        self.pins.push(PinRecord { time: self.t, target, raw });
    }

    fn boot(
        &mut self,
        form: LocalForm,
        recip: RecipTerm,
        c1: f64,
        drv: &impl Fn(f64) -> f64,
    ) -> Result<Flow> {
        if recip.coef < 0.0 {
            return Err(Error::SingularPoint { t: self.t, x: self.x });
        }
        let t0 = self.t;
        let xb = self.opts.boot_floor;
        let s0 = (xb * xb).max(64.0 * f64::EPSILON * t0.abs().max(1.0)).min(c1 - t0);
        let t1 = t0 + s0;
        let x0 = recip.center + self.hint.sign() * xb;
        let x1 = advance(&form, t0, x0, t1, drv(t1) - drv(t0), Scheme::Implicit)
            .ok_or(Error::StepUnderflow { t: t0, x: self.x, step: s0 })?;
        self.s_carry = s0;
        self.finish_step(form, t1, x1)
    }

    fn smooth_step(&mut self, form: LocalForm, c1: f64, drv: &impl Fn(f64) -> f64) -> Result<Flow> {
        let (t0, x0) = (self.t, self.x);
        let eta = self.opts.step_growth_cap;
        let mut s = self.s_carry.min(c1 - t0);
        let mut depth = 0;
        loop {
            let t1 = if s >= c1 - t0 { c1 } else { t0 + s };
            let exhausted = depth >= self.opts.max_refine_depth || t1 <= t0;
            let attempt = if exhausted {
                match form.recip {
                    Some(r) if r.coef > 0.0 => {
                        advance(&form, t0, x0, t1.max(next_up(t0)), drv(t1) - drv(t0), Scheme::Implicit)
                    }
                    _ => None,
                }
            } else {
                self.trial(&form, t0, x0, t1, drv(t1) - drv(t0), eta)
            };
            match attempt {
                Some(x1) => {
                    let t1 = t1.max(next_up(t0));
                    if depth > 0 {
                        self.s_carry = t1 - t0;
                    }
                    self.s_carry = (2.0 * self.s_carry).min(self.opts.h_base);
                    return self.finish_step(form, t1, x1);
                }
                None if exhausted => {
                    return Err(Error::StepUnderflow { t: t0, x: x0, step: s });
                }
                None => {
                    s *= 0.5;
                    depth += 1;
                }
            }
        }
    }

    fn trial(&self, form: &LocalForm, t0: f64, x0: f64, t1: f64, db: f64, eta: f64) -> Option<f64> {
        let s = t1 - t0;
        if let Some(r) = form.recip {
            let c = r.coef.abs();
            let u0 = x0 - r.center;
            if s * c > eta * u0 * u0 {
                return None;
            }
            let x1 = advance(form, t0, x0, t1, db, Scheme::Trapezoidal)?;
            let u1 = x1 - r.center;
            if s * c > eta * u1 * u1 {
                return None;
            }
            Some(x1)
        } else {
            advance(form, t0, x0, t1, db, Scheme::Trapezoidal)
        }
    }
}

fn next_up(t: f64) -> f64 {
    let b = t.to_bits();
    if t >= 0.0 {
        f64::from_bits(b + 1)
    } else {
        f64::from_bits(b - 1)
    }
}

fn crossing_time(t0: f64, x0: f64, t1: f64, x1: f64, level: f64) -> f64 {
    if x1 == x0 {
        return t1;
    }
    let theta = ((level - x0) / (x1 - x0)).clamp(0.0, 1.0);
    (t0 + theta * (t1 - t0)).min(t1)
}

/// Driver nodes in the window, the uniform `h` grid, time breaks, bridge
/// terminal times and the start of each terminal pin window; uniform points
/// crowding a mandatory node are dropped.
fn base_nodes(spec: &DriftSpec, driver: &SamplePath, window: (f64, f64), h: f64, pin_window: f64) -> Vec<f64> {
    let (a, b) = window;
    let mut mandatory: Vec<f64> = driver.times().iter().copied().filter(|&t| t > a && t < b).collect();
    mandatory.push(a);
    mandatory.push(b);
    mandatory.extend(spec.time_breaks().iter().copied().filter(|&t| t > a && t < b));
    for te in spec.terminal_times() {
        mandatory.extend([te, te - pin_window].into_iter().filter(|&t| t > a && t < b));
    }
    mandatory.sort_by(f64::total_cmp);
    mandatory.dedup();

    let gap = h * 1e-6;
    let n = ((b - a) / h).ceil() as usize;
    let mut out = Vec::with_capacity(mandatory.len() + n);
    let mut j = 0;
    for k in 0..=n {
        let u = a + k as f64 * h;
        if u >= b {
            break;
        }
        while j < mandatory.len() && mandatory[j] <= u + gap {
            out.push(mandatory[j]);
            j += 1;
        }
        let last = *out.last().unwrap();
        let next = mandatory.get(j).copied().unwrap_or(f64::INFINITY);
        if u > last + gap && u < next - gap {
            out.push(u);
        }
    }
    out.extend_from_slice(&mandatory[j..]);
    out
}

/// Settings of the residual quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResidualOptions {
    /// Uniform sub-cells per cell of the candidate's grid.
    pub quad_cells: usize,
    /// Left-out window before every bridge terminal time.
    pub pin_window: f64,
    /// Inward shift of an abscissa landing on a singular point.
    pub sing_guard: f64,
    /// Sub-cells are bisected while the path moves more than this fraction of
    /// its distance to the nearest spatial break.
    pub kappa: f64,
    pub max_bisections: u32,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        ResidualOptions {
            quad_cells: 8,
            pin_window: 1e-4,
            sing_guard: 1e-9,
            kappa: 0.1,
            max_bisections: 48,
        }
    }
}

impl From<&SolveOptions> for ResidualOptions {
    fn from(o: &SolveOptions) -> Self {
        ResidualOptions {
            pin_window: o.pin_window,
            sing_guard: o.sing_guard,
            ..ResidualOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    /// Largest defect over the candidate's nodes.
    pub sup: f64,
    /// Time where it occurs.
    pub at: f64,
    /// Windows left out before bridge terminal times.
    pub excluded: Vec<(f64, f64)>,
    /// Quadrature abscissae moved off a singular point.
    pub shifted_abscissae: usize,
}

/// Sup-norm defect of `candidate` in the integral equation on `window`.
///
/// The window is cut into pieces that skip `[T - pin_window, T]` for each
/// bridge terminal time `T`; every piece is checked from its own left end.
pub fn residual_sup(
    spec: &DriftSpec,
    candidate: &SamplePath,
    driver: &SamplePath,
    window: (f64, f64),
    opts: &ResidualOptions,
) -> Result<Residual> {
    check_window(driver, window)?;
    check_window(candidate, window)?;
    check_drift_window(spec, window)?;
    if opts.quad_cells == 0 || !(opts.pin_window > 0.0) || !(opts.sing_guard > 0.0) {
        return Err(Error::usage("invalid residual options"));
    }
    let (a, b) = window;
    let mut excluded = Vec::new();
    let mut pieces = Vec::new();
    let mut left = a;
    for te in spec.terminal_times() {
        if te > a && te <= b {
            let cut = (te - opts.pin_window).max(left);
            if cut > left {
                pieces.push((left, cut));
            }
            excluded.push((cut, te));
            left = te;
        }
    }
    if left < b {
        pieces.push((left, b));
    }

    let mut q = Quadrature { spec, opts, shifted: 0 };
    let mut best = Residual { sup: 0.0, at: a, excluded, shifted_abscissae: 0 };
    for (pa, pb) in pieces {
        let mut pts: Vec<f64> = vec![pa];
        pts.extend(candidate.times().iter().copied().filter(|&t| t > pa && t < pb));
        pts.extend(spec.time_breaks().iter().copied().filter(|&t| t > pa && t < pb));
        pts.push(pb);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let xs: Vec<f64> = pts.iter().map(|&t| candidate.eval_unchecked(t)).collect();
        let bs: Vec<f64> = pts.iter().map(|&t| driver.eval_unchecked(t)).collect();
        let mut integral = 0.0;
        for i in 0..pts.len() - 1 {
            integral += q.cell(pts[i], pts[i + 1], xs[i], xs[i + 1]);
            let defect = (xs[i + 1] - xs[0] - integral - (bs[i + 1] - bs[0])).abs();
            if !defect.is_finite() {
                return Err(Error::NonFinite { t: pts[i + 1] });
            }
            if defect > best.sup {
                best.sup = defect;
                best.at = pts[i + 1];
            }
        }
    }
    best.shifted_abscissae = q.shifted;
    Ok(best)
}

struct Quadrature<'a> {
    spec: &'a DriftSpec,
    opts: &'a ResidualOptions,
    shifted: usize,
}

impl Quadrature<'_> {
    fn cell(&mut self, t0: f64, t1: f64, x0: f64, x1: f64) -> f64 {
        let n = self.opts.quad_cells;
        let mut sum = 0.0;
        for k in 0..n {
            let l = k as f64 / n as f64;
            let r = (k + 1) as f64 / n as f64;
            let (sl, sr) = (t0 + l * (t1 - t0), t0 + r * (t1 - t0));
            let (yl, yr) = (x0 + l * (x1 - x0), x0 + r * (x1 - x0));
            sum += self.sub(sl, sr, yl, yr, 0);
        }
        sum
    }

    fn sub(&mut self, l: f64, r: f64, xl: f64, xr: f64, depth: u32) -> f64 {
        let tm = 0.5 * (l + r);
        let dx = (xr - xl).abs();
        if depth < self.opts.max_bisections && dx > 0.0 && tm > l && tm < r {
            let (lo, hi) = (xl.min(xr), xl.max(xr));
            let d = self
                .spec
                .spatial_breaks(tm)
                .as_slice()
                .iter()
                .map(|&p| if p < lo { lo - p } else if p > hi { p - hi } else { 0.0 })
                .fold(f64::INFINITY, f64::min);
            if dx > self.opts.kappa * d {
                let xm = 0.5 * (xl + xr);
                return self.sub(l, tm, xl, xm, depth + 1) + self.sub(tm, r, xm, xr, depth + 1);
            }
        }
        (r - l) * self.value(tm, 0.5 * (xl + xr), xl + xr)
    }

    fn value(&mut self, t: f64, x: f64, toward: f64) -> f64 {
        match eval_drift(self.spec, t, x) {
            Ok(v) => v,
            Err(Error::SingularPoint { .. }) => {
                self.shifted += 1;
                let dir = if toward >= 2.0 * x { 1.0 } else { -1.0 };
                eval_drift(self.spec, t, x + dir * self.opts.sing_guard).unwrap_or(0.0)
            }
            Err(_) => 0.0,
        }
    }
}

/// Earliest time in `window` where the interpolated path meets `level`.
pub fn detect_hit(path: &SamplePath, level: f64, window: (f64, f64)) -> Option<f64> {
    let (a, b) = window;
    let a = a.max(path.start());
    let b = b.min(path.horizon());
    if !(a <= b) {
        return None;
    }
    let mut t0 = a;
    let mut x0 = path.eval_unchecked(a);
    if x0 == level {
        return Some(a);
    }
    let times = path.times();
    let first = times.partition_point(|&t| t <= a);
    for (&t1, &x1) in times[first..].iter().zip(&path.values()[first..]) {
        let (t1, x1) = if t1 >= b { (b, path.eval_unchecked(b)) } else { (t1, x1) };
        if x1 == level {
            return Some(t1);
        }
        if (x0 - level) * (x1 - level) < 0.0 {
            return Some(crossing_time(t0, x0, t1, x1, level));
        }
        if t1 >= b {
            break;
        }
        t0 = t1;
        x0 = x1;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{make_uniform_grid, sample_brownian, RngSpec, TimeGrid};

    fn zero_driver(t: f64, n: usize) -> SamplePath {
        SamplePath::from_fn(make_uniform_grid(t, n).unwrap(), PathKind::Driver, |_| 0.0).unwrap()
    }

    #[test]
    fn side_root_picks_the_declared_side() {
        // u^2 - u - 2 = 0 has roots 2 and -1.
        assert_eq!(side_root(1.0, 2.0, 1.0), Some(2.0));
        assert_eq!(side_root(1.0, 2.0, -1.0), Some(-1.0));
        // u^2 - 3u + 2 = 0 has roots 1 and 2; the larger one is continuous.
        assert_eq!(side_root(3.0, -2.0, 1.0), Some(2.0));
        assert_eq!(side_root(-3.0, -2.0, 1.0), None);
        assert_eq!(side_root(1.0, -1.0, 1.0), None);
    }

    #[test]
    fn bes3_from_one_matches_closed_form() {
        let d = zero_driver(1.0, 4);
        let spec = DriftSpec::Bes3 { center: 0.0, side: Side::Above };
        let sol = solve_pathwise(&spec, &d, 1.0, (0.0, 1.0), &SolveOptions::default()).unwrap();
        assert!((sol.final_value() - 3f64.sqrt()).abs() <= 1e-6, "{}", sol.final_value());
    }

    #[test]
    fn constant_drift_is_exact() {
        let g = make_uniform_grid(2.0, 300).unwrap();
        let d = sample_brownian(&g, RngSpec::new(3, 0));
        let spec = DriftSpec::Constant { value: 2.0 };
        let opts = SolveOptions::default().with_h_base(1.0 / 64.0);
        let sol = solve_pathwise(&spec, &d, 0.5, (0.0, 2.0), &opts).unwrap();
        for (&t, &x) in sol.times().iter().zip(sol.values()) {
            assert!((x - d.eval(t).unwrap() - 2.0 * t - 0.5).abs() <= 1e-12);
        }
    }

    #[test]
    fn solution_grid_contains_driver_grid() {
        let g = TimeGrid::new(vec![0.0, 0.1, 0.37, 0.8, 1.0]).unwrap();
        let d = sample_brownian(&g, RngSpec::new(1, 1));
        let spec = DriftSpec::Bes3 { center: 0.0, side: Side::Above };
        let sol = solve_pathwise(&spec, &d, 0.0, (0.0, 1.0), &SolveOptions::default()).unwrap();
        for t in g.times() {
            assert!(sol.times().contains(t));
        }
        assert!(sol.values()[1..].iter().all(|&x| x > 0.0));
    }

    #[test]
    fn bridge_pins_to_target() {
        let d = zero_driver(1.0, 4);
        let spec = DriftSpec::BridgeTwoSided { y: 1.0, t_end: 1.0 };
        let opts = SolveOptions::default();
        let sol = solve_pathwise(&spec, &d, Start::new(0.0, Side::Above), (0.0, 1.0), &opts).unwrap();
        assert_eq!(sol.final_value(), 1.0);
        assert_eq!(sol.pins.len(), 1);
        let neg = solve_pathwise(&spec, &d, Start::new(0.0, Side::Below), (0.0, 1.0), &opts).unwrap();
        assert_eq!(neg.final_value(), -1.0);
    }

    #[test]
    fn wrong_side_start_is_rejected() {
        let d = zero_driver(1.0, 4);
        let spec = DriftSpec::Bes3 { center: 2.0, side: Side::Above };
        let err = solve_pathwise(&spec, &d, 1.0, (0.0, 1.0), &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::SideViolation { .. }));
    }

    #[test]
    fn attractive_singularity_underflows() {
        let d = zero_driver(1.0, 4);
        let spec = DriftSpec::NoWeak { tail: Default::default() };
        // x' = -1/(2x) from 0.5 reaches 0 at t = 0.25.
        let err = solve_pathwise(&spec, &d, 0.5, (0.0, 1.0), &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::StepUnderflow { .. }), "{err}");
    }

    #[test]
    fn stop_level_truncates() {
        let g = make_uniform_grid(1.0, 10).unwrap();
        let d = SamplePath::from_fn(g, PathKind::Driver, |t| -2.0 * t).unwrap();
        let spec = DriftSpec::Constant { value: 0.0 };
        let sol = solve_until(&spec, &d, 1.0, (0.0, 1.0), 0.0, &SolveOptions::default()).unwrap();
        assert_eq!(sol.hits.len(), 1);
        assert!((sol.hits[0].time - 0.5).abs() < 1e-12);
        assert_eq!(sol.final_value(), 0.0);
    }

    #[test]
    fn residual_of_shifted_candidate_is_the_shift() {
        let g = make_uniform_grid(1.0, 64).unwrap();
        let d = sample_brownian(&g, RngSpec::new(9, 2));
        let spec = DriftSpec::Constant { value: 0.0 };
        let r = residual_sup(&spec, &d, &d, (0.0, 1.0), &ResidualOptions::default()).unwrap();
        assert_eq!(r.sup, 0.0);
        let mut vals = d.values().to_vec();
        for v in vals.iter_mut().skip(1) {
            *v += 0.1;
        }
        let shifted = SamplePath::from_nodes(d.times().to_vec(), vals, PathKind::Solution).unwrap();
        let r = residual_sup(&spec, &shifted, &d, (0.0, 1.0), &ResidualOptions::default()).unwrap();
        assert!((r.sup - 0.1).abs() < 1e-12);
    }

    #[test]
    fn residual_of_closed_form_bes3() {
        let d = zero_driver(1.0, 4);
        let g = make_uniform_grid(1.0, 16384).unwrap();
        let exact = SamplePath::from_fn(g, PathKind::Solution, |t| (1.0 + 2.0 * t).sqrt()).unwrap();
        let spec = DriftSpec::Bes3 { center: 0.0, side: Side::Above };
        let r = residual_sup(&spec, &exact, &d, (0.0, 1.0), &ResidualOptions::default()).unwrap();
        assert!(r.sup <= 1e-8, "{}", r.sup);
    }

    #[test]
    fn hits() {
        let p = SamplePath::from_nodes(vec![0.0, 1.0], vec![1.0, -1.0], PathKind::Solution).unwrap();
        assert_eq!(detect_hit(&p, 0.0, (0.0, 1.0)), Some(0.5));
        let q = SamplePath::from_nodes(vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 2.0, 0.0, 1.0], PathKind::Solution)
            .unwrap();
        assert_eq!(detect_hit(&q, 0.0, (0.0, 3.0)), Some(2.0));
        assert_eq!(detect_hit(&q, -0.5, (0.0, 3.0)), None);
        assert_eq!(detect_hit(&q, 1.5, (1.2, 3.0)), Some(1.25));
    }
}

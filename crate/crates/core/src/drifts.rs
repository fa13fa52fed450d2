//! The drift catalogue.
//!
//! [`eval_drift`] evaluates each drift literally from its indicator formula.
//! The solver instead works with [`LocalForm`]s: on every region of the
//! `(t, x)` plane a catalogued drift is a sum of at most one bridge term
//! `(y - x) / (t_end - t)`, one reciprocal term `c / (x - a)` and a constant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side of a barrier. For two-sided bridges `Above` selects the nonnegative
/// solution and `Below` the nonpositive one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Above,
    Below,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Above => 1.0,
            Side::Below => -1.0,
        }
    }

    pub fn flip(self) -> Side {
        match self {
            Side::Above => Side::Below,
            Side::Below => Side::Above,
        }
    }

    /// Side of `c` on which `x` lies; `None` when `x == c`.
    pub fn of(x: f64, c: f64) -> Option<Side> {
        if x > c {
            Some(Side::Above)
        } else if x < c {
            Some(Side::Below)
        } else {
            None
        }
    }
}

/// Tail `f` of the no-weak-solution drift on `|x| > 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSpec {
    #[default]
    Zero,
    /// `1/(x-1)` for `x > 1`, `1/(x+1)` for `x < -1`.
    ReciprocalShifted,
}

/// One drift of the catalogue.
///
/// Times are absolute: a bridge with `t_end = 2` used on `[1, 2]` has the
/// term `(y - x) / (2 - t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", from = "DriftRepr")]
pub enum DriftSpec {
    /// `1{x>0}((y-x)/(t_end-t) + 1/x) + 1{x<0}((-y-x)/(t_end-t) + 1/x)`.
    BridgeTwoSided { y: f64, t_end: f64 },
    /// `1/(x - center)` on the declared side, 0 on the other.
    Bes3 { center: f64, side: Side },
    /// `(target - x)/(t_end - t) + 1/(x - center)` on the declared side, 0 on the other.
    BridgeOneSided { center: f64, target: f64, t_end: f64, side: Side },
    /// `-1{x≠0,|x|≤1}/(2x) + 1{|x|>1} f(x)`.
    NoWeak {
        #[serde(default)]
        tail: TailSpec,
    },
    /// Piecewise drift on `[0, 3]` with a two-sided bridge to ±1, a free
    /// stretch, and the no-weak-solution drift with shifted reciprocal tails.
    Ce1,
    /// Piecewise drift on `[0, 4]` with a pathwise unique weak solution but
    /// several path-by-path solutions.
    Ce2,
    /// [`DriftSpec::Ce2`] with the `x < 0` reciprocal removed after `t = 1`
    /// and `1/(x-1)` added on `x ≤ 0` after `t = 3`.
    Ce2Modified,
    /// Primitive `coef / (x - center)`.
    Reciprocal { coef: f64, center: f64 },
    /// Primitive constant drift.
    Constant { value: f64 },
}

// Unit variants of an internally tagged enum accept any extra key; this
// mirror uses empty struct variants so that unknown keys are rejected.
#[derive(Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
enum DriftRepr {
    BridgeTwoSided { y: f64, t_end: f64 },
    Bes3 { center: f64, side: Side },
    BridgeOneSided { center: f64, target: f64, t_end: f64, side: Side },
    NoWeak {
        #[serde(default)]
        tail: TailSpec,
    },
    Ce1 {},
    Ce2 {},
    Ce2Modified {},
    Reciprocal { coef: f64, center: f64 },
    Constant { value: f64 },
}

impl From<DriftRepr> for DriftSpec {
    fn from(r: DriftRepr) -> Self {
        match r {
            DriftRepr::BridgeTwoSided { y, t_end } => DriftSpec::BridgeTwoSided { y, t_end },
            DriftRepr::Bes3 { center, side } => DriftSpec::Bes3 { center, side },
            DriftRepr::BridgeOneSided { center, target, t_end, side } => {
                DriftSpec::BridgeOneSided { center, target, t_end, side }
            }
            DriftRepr::NoWeak { tail } => DriftSpec::NoWeak { tail },
            DriftRepr::Ce1 {} => DriftSpec::Ce1,
            DriftRepr::Ce2 {} => DriftSpec::Ce2,
            DriftRepr::Ce2Modified {} => DriftSpec::Ce2Modified,
            DriftRepr::Reciprocal { coef, center } => DriftSpec::Reciprocal { coef, center },
            DriftRepr::Constant { value } => DriftSpec::Constant { value },
        }
    }
}

/// Spatial singularities of a drift at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct Singularities {
    /// Sorted `x` values where the drift is unbounded.
    pub points: Vec<f64>,
    /// A bridge terminal time is closer than the caller's guard.
    pub near_terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct BridgeTerm {
    pub target: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RecipTerm {
    pub coef: f64,
    pub center: f64,
}

/// The drift restricted to one open region `lo < x < hi` at a given time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LocalForm {
    pub bridge: Option<BridgeTerm>,
    pub recip: Option<RecipTerm>,
    pub constant: f64,
    pub lo: f64,
    pub hi: f64,
}

const INF: f64 = f64::INFINITY;

impl LocalForm {
    fn zero(lo: f64, hi: f64) -> Self {
        LocalForm { bridge: None, recip: None, constant: 0.0, lo, hi }
    }

    fn recip(coef: f64, center: f64, lo: f64, hi: f64) -> Self {
        LocalForm {
            bridge: None,
            recip: Some(RecipTerm { coef, center }),
            constant: 0.0,
            lo,
            hi,
        }
    }

    fn bridge(target: f64, t_end: f64, center: f64, lo: f64, hi: f64) -> Self {
        LocalForm {
            bridge: Some(BridgeTerm { target, t_end }),
            recip: Some(RecipTerm { coef: 1.0, center }),
            constant: 0.0,
            lo,
            hi,
        }
    }

    pub fn is_affine(&self) -> bool {
        self.bridge.is_none() && self.recip.is_none()
    }

    #[cfg(test)]
    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    #[cfg(test)]
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let mut v = self.constant;
        if let Some(b) = self.bridge {
            v += (b.target - x) / (b.t_end - t);
        }
        if let Some(r) = self.recip {
            v += r.coef / (x - r.center);
        }
        v
    }
}

/// Strict comparisons that resolve ties on a boundary with a side.
#[derive(Clone, Copy)]
struct Probe {
    x: f64,
    side: Side,
}

impl Probe {
    fn gt(self, c: f64) -> bool {
        self.x > c || (self.x == c && self.side == Side::Above)
    }

    fn lt(self, c: f64) -> bool {
        self.x < c || (self.x == c && self.side == Side::Below)
    }
}

fn two_sided(y: f64, t_end: f64, p: Probe) -> LocalForm {
    if p.gt(0.0) {
        LocalForm::bridge(y, t_end, 0.0, 0.0, INF)
    } else {
        LocalForm::bridge(-y, t_end, 0.0, -INF, 0.0)
    }
}

fn no_weak(tail: TailSpec, p: Probe) -> LocalForm {
    if p.gt(1.0) {
        match tail {
            TailSpec::Zero => LocalForm::zero(1.0, INF),
            TailSpec::ReciprocalShifted => LocalForm::recip(1.0, 1.0, 1.0, INF),
        }
    } else if p.lt(-1.0) {
        match tail {
            TailSpec::Zero => LocalForm::zero(-INF, -1.0),
            TailSpec::ReciprocalShifted => LocalForm::recip(1.0, -1.0, -INF, -1.0),
        }
    } else if p.gt(0.0) {
        LocalForm::recip(-0.5, 0.0, 0.0, 1.0)
    } else {
        LocalForm::recip(-0.5, 0.0, -1.0, 0.0)
    }
}

fn ce2_row2(p: Probe, modified: bool) -> LocalForm {
    if p.lt(0.0) {
        if modified {
            LocalForm::zero(-INF, 0.0)
        } else {
            LocalForm::recip(1.0, 0.0, -INF, 0.0)
        }
    } else if p.gt(2.0) {
        LocalForm::bridge(3.0, 2.0, 2.0, 2.0, INF)
    } else {
        LocalForm::bridge(1.0, 2.0, 2.0, 0.0, 2.0)
    }
}

fn ce2_row4_above_one(p: Probe) -> LocalForm {
    if p.gt(3.0) {
        LocalForm::recip(1.0, 3.0, 3.0, INF)
    } else if p.gt(2.0) {
        LocalForm::recip(-0.5, 2.0, 2.0, 3.0)
    } else {
        LocalForm::recip(-0.5, 2.0, 1.0, 2.0)
    }
}

impl DriftSpec {
    /// Checks parameter invariants (`y > 0`, finite parameters, one-sided
    /// bridge targets on their side).
    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64, name: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::usage(format!("{name} must be finite")))
            }
        };
        match *self {
            DriftSpec::BridgeTwoSided { y, t_end } => {
                finite(y, "y")?;
                finite(t_end, "t_end")?;
                if y <= 0.0 {
                    return Err(Error::usage(format!("bridge level y must be positive, got {y}")));
                }
                if t_end <= 0.0 {
                    return Err(Error::usage("bridge t_end must be positive"));
                }
            }
            DriftSpec::Bes3 { center, .. } => finite(center, "center")?,
            DriftSpec::BridgeOneSided { center, target, t_end, side } => {
                finite(center, "center")?;
                finite(target, "target")?;
                finite(t_end, "t_end")?;
                if t_end <= 0.0 {
                    return Err(Error::usage("bridge t_end must be positive"));
                }
                if Side::of(target, center) != Some(side) {
                    return Err(Error::usage(format!(
                        "bridge target {target} is not on the {side:?} side of {center}"
                    )));
                }
            }
            DriftSpec::Reciprocal { coef, center } => {
                finite(coef, "coef")?;
                finite(center, "center")?;
            }
            DriftSpec::Constant { value } => finite(value, "value")?,
            DriftSpec::NoWeak { .. } | DriftSpec::Ce1 | DriftSpec::Ce2 | DriftSpec::Ce2Modified => {}
        }
        Ok(())
    }

    /// Time window `[start, end]`; `end_open` for bridges whose terminal time
    /// is excluded.
    pub fn time_window(&self) -> (f64, f64, bool) {
        match *self {
            DriftSpec::BridgeTwoSided { t_end, .. } | DriftSpec::BridgeOneSided { t_end, .. } => {
                (0.0, t_end, true)
            }
            DriftSpec::Ce1 => (0.0, 3.0, false),
            DriftSpec::Ce2 | DriftSpec::Ce2Modified => (0.0, 4.0, false),
            _ => (0.0, INF, false),
        }
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        let (a, b, open) = self.time_window();
        let inside = t.is_finite() && t >= a && (t < b || (!open && t == b));
        if inside {
            Ok(())
        } else {
            Err(Error::usage(format!(
                "t = {t} outside the drift's time window [{a}, {b}{}",
                if open { ")" } else { "]" }
            )))
        }
    }

    /// Times where the piecewise table switches rows.
    pub fn time_breaks(&self) -> &'static [f64] {
        match self {
            DriftSpec::Ce1 => &[1.0, 2.0],
            DriftSpec::Ce2 | DriftSpec::Ce2Modified => &[1.0, 2.0, 3.0],
            _ => &[],
        }
    }

    /// Terminal times of bridge terms, where the drift blows up in `t`.
    pub fn terminal_times(&self) -> Vec<f64> {
        match *self {
            DriftSpec::BridgeTwoSided { t_end, .. } | DriftSpec::BridgeOneSided { t_end, .. } => {
                vec![t_end]
            }
            DriftSpec::Ce1 => vec![1.0],
            DriftSpec::Ce2 | DriftSpec::Ce2Modified => vec![1.0, 2.0],
            _ => vec![],
        }
    }

    /// Terminal time of the bridge row active at `t`, if any.
    pub(crate) fn active_terminal(&self, t: f64) -> Option<f64> {
        match *self {
            DriftSpec::BridgeTwoSided { t_end, .. } | DriftSpec::BridgeOneSided { t_end, .. } => {
                Some(t_end)
            }
            DriftSpec::Ce1 if t < 1.0 => Some(1.0),
            DriftSpec::Ce2 | DriftSpec::Ce2Modified if t < 1.0 => Some(1.0),
            DriftSpec::Ce2 | DriftSpec::Ce2Modified if t < 2.0 => Some(2.0),
            _ => None,
        }
    }

    /// Local form of the drift around `(t, x)`. When `x` sits exactly on a
    /// region boundary, `side` picks the region.
    pub(crate) fn local_form(&self, t: f64, x: f64, side: Side) -> LocalForm {
        let p = Probe { x, side };
        match *self {
            DriftSpec::Constant { value } => LocalForm {
                constant: value,
                ..LocalForm::zero(-INF, INF)
            },
            DriftSpec::Reciprocal { coef, center } => {
                if p.gt(center) {
                    LocalForm::recip(coef, center, center, INF)
                } else {
                    LocalForm::recip(coef, center, -INF, center)
                }
            }
            DriftSpec::Bes3 { center, side: s } => match (s, p.gt(center)) {
                (Side::Above, true) => LocalForm::recip(1.0, center, center, INF),
                (Side::Above, false) => LocalForm::zero(-INF, center),
                (Side::Below, false) => LocalForm::recip(1.0, center, -INF, center),
                (Side::Below, true) => LocalForm::zero(center, INF),
            },
            DriftSpec::BridgeOneSided { center, target, t_end, side: s } => {
                match (s, p.gt(center)) {
                    (Side::Above, true) => LocalForm::bridge(target, t_end, center, center, INF),
                    (Side::Above, false) => LocalForm::zero(-INF, center),
                    (Side::Below, false) => LocalForm::bridge(target, t_end, center, -INF, center),
                    (Side::Below, true) => LocalForm::zero(center, INF),
                }
            }
            DriftSpec::BridgeTwoSided { y, t_end } => two_sided(y, t_end, p),
            DriftSpec::NoWeak { tail } => no_weak(tail, p),
            DriftSpec::Ce1 => {
                if t < 1.0 {
                    two_sided(1.0, 1.0, p)
                } else if t < 2.0 {
                    LocalForm::zero(-INF, INF)
                } else {
                    no_weak(TailSpec::ReciprocalShifted, p)
                }
            }
            DriftSpec::Ce2 => {
                if t < 1.0 {
                    two_sided(2.0, 1.0, p)
                } else if t < 2.0 {
                    ce2_row2(p, false)
                } else if t < 3.0 {
                    if p.lt(0.0) {
                        LocalForm::recip(1.0, 0.0, -INF, 0.0)
                    } else {
                        LocalForm::zero(0.0, INF)
                    }
                } else if p.lt(0.0) {
                    LocalForm::recip(1.0, 0.0, -INF, 0.0)
                } else if p.lt(1.0) {
                    LocalForm::recip(1.0, 1.0, 0.0, 1.0)
                } else {
                    ce2_row4_above_one(p)
                }
            }
            DriftSpec::Ce2Modified => {
                if t < 1.0 {
                    two_sided(2.0, 1.0, p)
                } else if t < 2.0 {
                    ce2_row2(p, true)
                } else if t < 3.0 {
                    LocalForm::zero(-INF, INF)
                } else if p.lt(1.0) {
                    LocalForm::recip(1.0, 1.0, -INF, 1.0)
                } else {
                    ce2_row4_above_one(p)
                }
            }
        }
    }

    /// Every `x` where the drift at time `t` is unbounded or jumps (region
    /// boundaries), sorted.
    pub(crate) fn spatial_breaks(&self, t: f64) -> Breaks {
        match *self {
            DriftSpec::NoWeak { .. } => Breaks::of(&[-1.0, 0.0, 1.0]),
            DriftSpec::Ce1 if t >= 2.0 => Breaks::of(&[-1.0, 0.0, 1.0]),
            DriftSpec::Ce2 | DriftSpec::Ce2Modified if (1.0..2.0).contains(&t) => {
                Breaks::of(&[0.0, 2.0])
            }
            DriftSpec::Ce2 if t >= 3.0 => Breaks::of(&[0.0, 1.0, 2.0, 3.0]),
            DriftSpec::Ce2Modified if t >= 3.0 => Breaks::of(&[1.0, 2.0, 3.0]),
            _ => singular_points(self, t),
        }
    }
}

/// Up to four sorted break points; avoids allocating in quadrature loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Breaks {
    pts: [f64; 4],
    len: usize,
}

impl Breaks {
    fn of(pts: &[f64]) -> Breaks {
        let mut b = Breaks { pts: [0.0; 4], len: pts.len() };
        b.pts[..pts.len()].copy_from_slice(pts);
        b
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.pts[..self.len]
    }
}

fn singular_points(spec: &DriftSpec, t: f64) -> Breaks {
    match *spec {
        DriftSpec::Constant { .. } => Breaks::of(&[]),
        DriftSpec::Reciprocal { center, .. }
        | DriftSpec::Bes3 { center, .. }
        | DriftSpec::BridgeOneSided { center, .. } => Breaks::of(&[center]),
        DriftSpec::BridgeTwoSided { .. } => Breaks::of(&[0.0]),
        DriftSpec::NoWeak { tail: TailSpec::Zero } => Breaks::of(&[0.0]),
        DriftSpec::NoWeak { tail: TailSpec::ReciprocalShifted } => Breaks::of(&[-1.0, 0.0, 1.0]),
        DriftSpec::Ce1 => {
            if t < 1.0 {
                Breaks::of(&[0.0])
            } else if t < 2.0 {
                Breaks::of(&[])
            } else {
                Breaks::of(&[-1.0, 0.0, 1.0])
            }
        }
        DriftSpec::Ce2 => {
            if t < 1.0 {
                Breaks::of(&[0.0])
            } else if t < 2.0 {
                Breaks::of(&[0.0, 2.0])
            } else if t < 3.0 {
                Breaks::of(&[0.0])
            } else {
                Breaks::of(&[0.0, 1.0, 2.0, 3.0])
            }
        }
        DriftSpec::Ce2Modified => {
            if t < 1.0 {
                Breaks::of(&[0.0])
            } else if t < 2.0 {
                Breaks::of(&[2.0])
            } else if t < 3.0 {
                Breaks::of(&[])
            } else {
                Breaks::of(&[1.0, 2.0, 3.0])
            }
        }
    }
}

fn bridge_two_sided_value(y: f64, t_end: f64, t: f64, x: f64) -> f64 {
    if x > 0.0 {
        (y - x) / (t_end - t) + 1.0 / x
    } else if x < 0.0 {
        (-y - x) / (t_end - t) + 1.0 / x
    } else {
        0.0
    }
}

fn no_weak_value(tail: TailSpec, x: f64) -> f64 {
    if x != 0.0 && x.abs() <= 1.0 {
        -1.0 / (2.0 * x)
    } else if x.abs() > 1.0 {
        match tail {
            TailSpec::Zero => 0.0,
            TailSpec::ReciprocalShifted => {
                if x > 1.0 {
                    1.0 / (x - 1.0)
                } else {
                    1.0 / (x + 1.0)
                }
            }
        }
    } else {
        0.0
    }
}

fn ce2_value(t: f64, x: f64) -> f64 {
    if t < 1.0 {
        bridge_two_sided_value(2.0, 1.0, t, x)
    } else if t < 2.0 {
        let mut v = 0.0;
        if x < 0.0 {
            v += 1.0 / x;
        }
        if x > 2.0 {
            v += (3.0 - x) / (2.0 - t) + 1.0 / (x - 2.0);
        }
        if x > 0.0 && x < 2.0 {
            v += (1.0 - x) / (2.0 - t) + 1.0 / (x - 2.0);
        }
        v
    } else if t < 3.0 {
        if x < 0.0 {
            1.0 / x
        } else {
            0.0
        }
    } else {
        let mut v = 0.0;
        if x < 0.0 {
            v += 1.0 / x;
        }
        if x != 2.0 && (x - 2.0).abs() <= 1.0 {
            v -= 1.0 / (2.0 * (x - 2.0));
        }
        if x > 3.0 {
            v += 1.0 / (x - 3.0);
        }
        if x > 0.0 && x < 1.0 {
            v += 1.0 / (x - 1.0);
        }
        v
    }
}

/// Value of the drift at `(t, x)`, straight from its indicator formula.
///
/// Indicator gaps (e.g. `x = 0` for the two-sided bridge) give 0. The
/// primitives with a bare reciprocal (`Bes3`, `BridgeOneSided`,
/// `Reciprocal`) report their center as [`Error::SingularPoint`].
pub fn eval_drift(spec: &DriftSpec, t: f64, x: f64) -> Result<f64> {
    spec.check_time(t)?;
    if !x.is_finite() {
        return Err(Error::usage(format!("x = {x} is not finite")));
    }
    let v = match *spec {
        DriftSpec::Constant { value } => value,
        DriftSpec::Reciprocal { coef, center } => {
            if x == center {
                return Err(Error::SingularPoint { t, x });
            }
            coef / (x - center)
        }
        DriftSpec::Bes3 { center, side } => match Side::of(x, center) {
            None => return Err(Error::SingularPoint { t, x }),
            Some(s) if s == side => 1.0 / (x - center),
            Some(_) => 0.0,
        },
        DriftSpec::BridgeOneSided { center, target, t_end, side } => match Side::of(x, center) {
            None => return Err(Error::SingularPoint { t, x }),
            Some(s) if s == side => (target - x) / (t_end - t) + 1.0 / (x - center),
            Some(_) => 0.0,
        },
        DriftSpec::BridgeTwoSided { y, t_end } => bridge_two_sided_value(y, t_end, t, x),
        DriftSpec::NoWeak { tail } => no_weak_value(tail, x),
        DriftSpec::Ce1 => {
            if t < 1.0 {
                bridge_two_sided_value(1.0, 1.0, t, x)
            } else if t < 2.0 {
                0.0
            } else {
                no_weak_value(TailSpec::ReciprocalShifted, x)
            }
        }
        DriftSpec::Ce2 => ce2_value(t, x),
        DriftSpec::Ce2Modified => {
            let mut v = ce2_value(t, x);
            if t >= 1.0 && x < 0.0 {
                v -= 1.0 / x;
            }
            if t >= 3.0 && x <= 0.0 {
                v += 1.0 / (x - 1.0);
            }
            v
        }
    };
    Ok(v)
}

/// Sorted spatial singularities of the drift at time `t`, plus a flag when a
/// bridge terminal time is within `terminal_guard` of `t`.
pub fn singularity_locations(spec: &DriftSpec, t: f64, terminal_guard: f64) -> Singularities {
    let near_terminal = spec
        .active_terminal(t)
        .is_some_and(|te| te - t < terminal_guard);
    Singularities { points: singular_points(spec, t).as_slice().to_vec(), near_terminal }
}

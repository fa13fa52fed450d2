//! Explicit path-by-path solutions: Bessel bridges, Bessel(3) extensions,
//! and the glued solutions for the two piecewise drifts `Ce1` and `Ce2`.

use serde::{Deserialize, Serialize};

use crate::drifts::{DriftSpec, Side};
use crate::error::{Error, Result};
use crate::paths::{PathKind, SamplePath};
use crate::solver::{
    check_window, solve_pathwise, solve_until, BranchEntry, Hit, Segment, SolutionPath,
    SolveOptions, Start,
};

/// Which bridge the `Ce1` solution follows on `[0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ce1Branch {
    /// Sign of `B_2 - B_1`.
    #[default]
    Auto,
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ce2Variant {
    /// The nonpositive solution, unique among weak solutions.
    #[default]
    Weak,
    /// The solution through `X_1 = 2`.
    Alternative,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchChoice {
    pub ce1: Ce1Branch,
    pub ce2: Ce2Variant,
}

const FREE: DriftSpec = DriftSpec::Constant { value: 0.0 };

/// Bridge solution on `[0, 1]` from 0 to `side.sign() * y`.
pub fn bridge_solution(side: Side, y: f64, driver: &SamplePath, opts: &SolveOptions) -> Result<SolutionPath> {
    let spec = DriftSpec::BridgeTwoSided { y, t_end: 1.0 };
    spec.validate()?;
    solve_pathwise(&spec, driver, Start::new(0.0, side), (0.0, 1.0), opts)
}

/// Solution of `dX = dt/(X - center) + dB` on `window`, kept on `side` of
/// `center`. Starting exactly at `center` boots off it on that side.
pub fn bes3_extension(
    x_start: f64,
    center: f64,
    side: Side,
    driver: &SamplePath,
    window: (f64, f64),
    opts: &SolveOptions,
) -> Result<SolutionPath> {
    let spec = DriftSpec::Bes3 { center, side };
    solve_pathwise(&spec, driver, Start::new(x_start, side), window, opts)
}

/// `x_start + B_t - B_a` on the driver nodes of `window`, cut at the first
/// crossing of `stop` if given.
pub fn translation(
    driver: &SamplePath,
    x_start: f64,
    window: (f64, f64),
    stop: Option<f64>,
) -> Result<SolutionPath> {
    check_window(driver, window)?;
    let (a, b) = window;
    let base = driver.eval_unchecked(a);
    let mut times = vec![a];
    let mut values = vec![x_start];
    let inner = driver.times().iter().copied().filter(|&t| t > a && t < b);
    let mut hits = Vec::new();
    for t in inner.chain(std::iter::once(b)) {
        let x = x_start + driver.eval_unchecked(t) - base;
        if let Some(level) = stop {
            let (t0, x0) = (*times.last().unwrap(), *values.last().unwrap());
            if x0 != level && (x == level || (x0 - level) * (x - level) < 0.0) {
                let theta = (level - x0) / (x - x0);
                let tc = (t0 + theta * (t - t0)).clamp(t0, t);
                if tc > t0 {
                    times.push(tc);
                    values.push(level);
                } else {
                    *values.last_mut().unwrap() = level;
                }
                hits.push(Hit { level, time: tc });
                break;
            }
        }
        times.push(t);
        values.push(x);
    }
    let end = *times.last().unwrap();
    let mut sol = SolutionPath::from_path(SamplePath::from_nodes(times, values, PathKind::Solution)?);
    sol.segments.push(Segment { start: a, end, drift: FREE });
    sol.hits = hits;
    Ok(sol)
}

/// Concatenates abutting solutions; junction values must agree within 1e-9.
pub fn glue(segments: Vec<SolutionPath>) -> Result<SolutionPath> {
    glue_with_tolerance(segments, SolveOptions::default().sing_guard)
}

pub fn glue_with_tolerance(segments: Vec<SolutionPath>, tol: f64) -> Result<SolutionPath> {
    let mut it = segments.into_iter();
    let first = it.next().ok_or_else(|| Error::usage("nothing to glue"))?;
    let mut times = first.times().to_vec();
    let mut values = first.values().to_vec();
    let mut out = SolutionPath { path: first.path.clone(), ..first };
    for seg in it {
        let (t_end, x_end) = (*times.last().unwrap(), *values.last().unwrap());
        if seg.start() != t_end {
            return Err(Error::usage(format!(
                "segments do not abut: one ends at {t_end}, the next starts at {}",
                seg.start()
            )));
        }
        let gap = (seg.values()[0] - x_end).abs();
        if !(gap <= tol) {
            return Err(Error::JunctionMismatch { t: t_end, gap });
        }
        times.extend_from_slice(&seg.times()[1..]);
        values.extend_from_slice(&seg.values()[1..]);
        out.segments.extend(seg.segments);
        out.hits.extend(seg.hits);
        out.branch_log.extend(seg.branch_log);
        out.pins.extend(seg.pins);
    }
    out.path = SamplePath::from_nodes(times, values, PathKind::Solution)?;
    out.residual = None;
    Ok(out)
}

fn increment(driver: &SamplePath, a: f64, b: f64) -> Result<f64> {
    Ok(driver.eval(b)? - driver.eval(a)?)
}

/// The path-by-path solution for [`DriftSpec::Ce1`] on `[0, 3]`.
///
/// A bridge to `±1` on `[0, 1]`, the driver's own increments on `[1, 2]`,
/// then the Bessel(3) flow centred at `±1` that keeps `|X| > 1` on `[2, 3]`.
pub fn construct_ce1(driver: &SamplePath, branch: Ce1Branch, opts: &SolveOptions) -> Result<SolutionPath> {
    check_window(driver, (0.0, 3.0))?;
    opts.validate()?;
    let inc = increment(driver, 1.0, 2.0)?;
    let g = opts.sing_guard;
    if inc.abs() <= g || (inc.abs() - 2.0).abs() <= g {
        return Err(Error::DegenerateIncrement { increment: inc });
    }
    let side = match branch {
        Ce1Branch::Auto => {
            if inc > 0.0 {
                Side::Above
            } else {
                Side::Below
            }
        }
        Ce1Branch::Positive => Side::Above,
        Ce1Branch::Negative => Side::Below,
    };
    let x2 = side.sign() + inc;
    if x2.abs() <= 1.0 {
        return Err(Error::InvalidBranch { x2 });
    }
    let mut log = vec![BranchEntry::new(
        if inc > 0.0 { "C1" } else { "C2" },
        inc,
        format!("B_2 - B_1 = {inc}"),
    )];
    if inc.abs() > 2.0 {
        let detail = if inc > 0.0 { "free choice" } else { "free choice (mirrored)" };
        log.push(BranchEntry::new("C3", side.sign(), format!("{detail}, branch {side:?}")));
    }

    let bridge = bridge_solution(side, 1.0, driver, opts)?;
    let free = translation(driver, bridge.final_value(), (1.0, 2.0), None)?;
    let outer = Side::of(x2, 0.0).unwrap();
    let ext = bes3_extension(free.final_value(), outer.sign(), outer, driver, (2.0, 3.0), opts)?;
    let mut sol = glue_with_tolerance(vec![bridge, free, ext], g)?;
    sol.branch_log = log;
    Ok(sol)
}

/// One of the two path-by-path solutions for [`DriftSpec::Ce2`] on `[0, 4]`.
pub fn construct_ce2(driver: &SamplePath, variant: Ce2Variant, opts: &SolveOptions) -> Result<SolutionPath> {
    check_window(driver, (0.0, 4.0))?;
    opts.validate()?;
    match variant {
        Ce2Variant::Weak => {
            let bridge = bridge_solution(Side::Below, 2.0, driver, opts)?;
            let ext = bes3_extension(bridge.final_value(), 0.0, Side::Below, driver, (1.0, 4.0), opts)?;
            let mut sol = glue_with_tolerance(vec![bridge, ext], opts.sing_guard)?;
            sol.branch_log = vec![BranchEntry::new("weak", -2.0, "nonpositive bridge to -2")];
            Ok(sol)
        }
        Ce2Variant::Alternative => alternative(driver, opts),
    }
}

fn alternative(driver: &SamplePath, opts: &SolveOptions) -> Result<SolutionPath> {
    let inc = increment(driver, 2.0, 3.0)?;
    if inc.abs() <= opts.sing_guard {
        return Err(Error::DegenerateIncrement { increment: inc });
    }
    let mut log = vec![BranchEntry::new("alt", 2.0, "nonnegative bridge to 2")];
    let bridge = bridge_solution(Side::Above, 2.0, driver, opts)?;
    let mut parts = vec![bridge];
    let hit_zero = if inc > 0.0 {
        log.push(BranchEntry::new("C1", inc, format!("B_3 - B_2 = {inc}")));
        let up = DriftSpec::BridgeOneSided { center: 2.0, target: 3.0, t_end: 2.0, side: Side::Above };
        parts.push(solve_pathwise(&up, driver, Start::new(2.0, Side::Above), (1.0, 2.0), opts)?);
        let free = translation(driver, 3.0, (2.0, 3.0), Some(0.0))?;
        let tau = free.hits.first().map(|h| h.time);
        match tau {
            Some(t) => log.push(BranchEntry::new("tau", t, "B_t - B_2 reaches -3")),
            None => log.push(BranchEntry::new("tau", 3.0, "tau > 3")),
        }
        let x3 = free.final_value();
        parts.push(free);
        if tau.is_none() {
            parts.push(bes3_extension(x3, 3.0, Side::Above, driver, (3.0, 4.0), opts)?);
        }
        tau
    } else {
        log.push(BranchEntry::new("C2", inc, format!("B_3 - B_2 = {inc}")));
        let down = DriftSpec::BridgeOneSided { center: 2.0, target: 1.0, t_end: 2.0, side: Side::Below };
        let mut tau0 = None;
        let seg = solve_until(&down, driver, Start::new(2.0, Side::Below), (1.0, 2.0), 0.0, opts)?;
        if !seg.hits.is_empty() {
            log.push(BranchEntry::new("exit", seg.horizon(), "bridge towards 1 left (0, 2)"));
            tau0 = Some(seg.horizon());
        }
        let mut x = seg.final_value();
        parts.push(seg);
        if tau0.is_none() {
            let free = translation(driver, x, (2.0, 3.0), Some(0.0))?;
            tau0 = free.hits.first().map(|h| h.time);
            x = free.final_value();
            parts.push(free);
        }
        if tau0.is_none() {
            let b = DriftSpec::Bes3 { center: 1.0, side: Side::Below };
            let seg = solve_until(&b, driver, Start::new(x, Side::Below), (3.0, 4.0), 0.0, opts)?;
            tau0 = seg.hits.first().map(|h| h.time);
            parts.push(seg);
        }
        log.push(BranchEntry::new("tau0", tau0.unwrap_or(4.0), "first return to 0 after t = 1, capped at 4"));
        tau0
    };
    if let Some(t) = hit_zero.filter(|&t| t < 4.0) {
        parts.push(bes3_extension(0.0, 0.0, Side::Below, driver, (t, 4.0), opts)?);
    }
    let mut sol = glue_with_tolerance(parts, opts.sing_guard)?;
    sol.branch_log = log;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::make_uniform_grid;

    /// Driver that is 0 on [0, 1] and then linear pieces through the given
    /// values at t = 2, 3, 4.
    fn driver(b2: f64, b3: f64) -> SamplePath {
        let g = make_uniform_grid(4.0, 400).unwrap();
        SamplePath::from_fn(g, PathKind::Driver, |t| {
            if t <= 1.0 {
                0.0
            } else if t <= 2.0 {
                b2 * (t - 1.0)
            } else if t <= 3.0 {
                b2 + (b3 - b2) * (t - 2.0)
            } else {
                b3
            }
        })
        .unwrap()
    }

    fn opts() -> SolveOptions {
        SolveOptions::default().with_h_base(1.0 / 1024.0)
    }

    #[test]
    fn ce1_auto_positive() {
        let sol = construct_ce1(&driver(0.7, 0.7), Ce1Branch::Auto, &opts()).unwrap();
        assert_eq!(sol.eval(1.0).unwrap(), 1.0);
        assert!((sol.eval(2.0).unwrap() - 1.7).abs() < 1e-12);
        assert_eq!(sol.branch_log[0].label, "C1");
        let late = sol.times().iter().zip(sol.values()).filter(|(t, _)| **t >= 2.0);
        assert!(late.into_iter().all(|(_, x)| *x > 1.0));
    }

    #[test]
    fn ce1_auto_negative() {
        let sol = construct_ce1(&driver(-0.7, -0.7), Ce1Branch::Auto, &opts()).unwrap();
        assert_eq!(sol.eval(1.0).unwrap(), -1.0);
        assert!((sol.eval(2.0).unwrap() + 1.7).abs() < 1e-12);
        assert_eq!(sol.branch_log[0].label, "C2");
    }

    #[test]
    fn ce1_forced_branches() {
        let sol = construct_ce1(&driver(2.5, 2.5), Ce1Branch::Negative, &opts()).unwrap();
        assert_eq!(sol.eval(1.0).unwrap(), -1.0);
        assert!((sol.eval(2.0).unwrap() - 1.5).abs() < 1e-12);
        assert!(sol.branch("C3").is_some());
        let err = construct_ce1(&driver(0.5, 0.5), Ce1Branch::Negative, &opts()).unwrap_err();
        match err {
            Error::InvalidBranch { x2 } => assert!((x2 + 0.5).abs() < 1e-12),
            e => panic!("{e}"),
        }
        let err = construct_ce1(&driver(0.0, 0.0), Ce1Branch::Auto, &opts()).unwrap_err();
        assert!(matches!(err, Error::DegenerateIncrement { .. }));
    }

    #[test]
    fn ce2_alternative_c1_without_hit() {
        let sol = construct_ce2(&driver(0.0, 0.5), Ce2Variant::Alternative, &opts()).unwrap();
        assert_eq!(sol.eval(1.0).unwrap(), 2.0);
        assert_eq!(sol.eval(2.0).unwrap(), 3.0);
        assert!((sol.eval(3.0).unwrap() - 3.5).abs() < 1e-12);
        let late = sol.times().iter().zip(sol.values()).filter(|(t, _)| **t >= 3.0);
        assert!(late.into_iter().all(|(_, x)| *x > 3.0));
        assert!(sol.branch("C1").is_some());
    }

    #[test]
    fn ce2_alternative_c2() {
        let sol = construct_ce2(&driver(0.0, -0.5), Ce2Variant::Alternative, &opts()).unwrap();
        assert_eq!(sol.eval(1.0).unwrap(), 2.0);
        assert_eq!(sol.eval(2.0).unwrap(), 1.0);
        assert!((sol.eval(3.0).unwrap() - 0.5).abs() < 1e-12);
        let late = sol.times().iter().zip(sol.values()).filter(|(t, _)| **t > 3.0);
        assert!(late.into_iter().all(|(_, x)| *x < 1.0));
        assert!(sol.branch("C2").is_some());
        assert!(sol.branch("tau0").is_some());
    }

    #[test]
    fn ce2_alternative_c1_with_hit() {
        // B_t - B_2 falls to -3.5 at t = 2.5, then returns to +0.5 at t = 3.
        let g = make_uniform_grid(4.0, 400).unwrap();
        let d = SamplePath::from_fn(g, PathKind::Driver, |t| {
            if t <= 2.0 {
                0.0
            } else if t <= 2.5 {
                -7.0 * (t - 2.0)
            } else if t <= 3.0 {
                -3.5 + 8.0 * (t - 2.5)
            } else {
                0.5
            }
        })
        .unwrap();
        let sol = construct_ce2(&d, Ce2Variant::Alternative, &opts()).unwrap();
        let tau = sol.branch("tau").unwrap().value;
        assert!((tau - (2.0 + 3.0 / 7.0)).abs() < 1e-12);
        let late = sol.times().iter().zip(sol.values()).filter(|(t, _)| **t > tau);
        assert!(late.into_iter().all(|(_, x)| *x < 0.0));
    }

    #[test]
    fn ce2_weak_is_negative() {
        let sol = construct_ce2(&driver(0.3, -0.4), Ce2Variant::Weak, &opts()).unwrap();
        assert_eq!(sol.eval(1.0).unwrap(), -2.0);
        assert!(sol.values().iter().skip(1).all(|&x| x < 0.0));
    }

    #[test]
    fn glue_rules() {
        let a = SamplePath::from_nodes(vec![0.0, 1.0], vec![0.0, 1.0], PathKind::Solution).unwrap();
        let b = SamplePath::from_nodes(vec![1.0, 2.0], vec![1.0, 3.0], PathKind::Solution).unwrap();
        let c = SamplePath::from_nodes(vec![1.0, 2.0], vec![1.5, 3.0], PathKind::Solution).unwrap();
        let g = glue(vec![SolutionPath::from_path(a.clone()), SolutionPath::from_path(b)]).unwrap();
        assert_eq!(g.times(), &[0.0, 1.0, 2.0]);
        let err = glue(vec![SolutionPath::from_path(a), SolutionPath::from_path(c)]).unwrap_err();
        match err {
            Error::JunctionMismatch { gap, .. } => assert_eq!(gap, 0.5),
            e => panic!("{e}"),
        }
        assert!(matches!(glue(vec![]), Err(Error::Usage(_))));
    }

    #[test]
    fn bes3_extension_closed_form_and_side() {
        let g = make_uniform_grid(1.0, 4).unwrap();
        let zero = SamplePath::from_fn(g, PathKind::Driver, |_| 0.0).unwrap();
        let sol = bes3_extension(3.0, 2.0, Side::Above, &zero, (0.0, 1.0), &SolveOptions::default()).unwrap();
        assert!((sol.final_value() - (2.0 + 3f64.sqrt())).abs() < 1e-6);
        let err = bes3_extension(1.0, 2.0, Side::Above, &zero, (0.0, 1.0), &SolveOptions::default());
        assert!(matches!(err, Err(Error::SideViolation { .. })));
    }
}

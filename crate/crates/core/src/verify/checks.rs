use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::drivers::{brownian_driver, conditioned_ce1_drivers, small_driver, SmallShape};
use super::stats::{ks_two_sample, ks_two_sample_noise, mean_sd};
use super::{McOptions, Relation, VerificationReport};
use crate::constructions::{bridge_solution, construct_ce1, construct_ce2, Ce1Branch, Ce2Variant};
use crate::drifts::{eval_drift, DriftSpec, Side, TailSpec};
use crate::error::{Error, Result};
use crate::paths::{RngSpec, SamplePath};
use crate::solver::{residual_sup, solve_pathwise, ResidualOptions, SolutionPath, SolveOptions, Start};

const TAG_CANCEL: u64 = 1;
const TAG_BRIDGE: u64 = 2;
const TAG_SMALL: u64 = 3;
const TAG_BES3: u64 = 4;
const TAG_ORACLE: u64 = 5;
const TAG_CE1: u64 = 6;
const TAG_C3: u64 = 7;
const TAG_CE2: u64 = 8;
const TAG_CONV: u64 = 9;
const TAG_CONTROL: u64 = 100;

/// `P(N(0, 1) > 2)`.
const GAUSS_TAIL_2: f64 = 0.022_750_131_948_179_2;

fn par_map<T: Send>(n: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..n as u64).into_par_iter().map(f).collect()
}

fn fraction(ok: &[bool]) -> f64 {
    ok.iter().filter(|&&b| b).count() as f64 / ok.len().max(1) as f64
}

fn failing(ok: &[bool]) -> Vec<u64> {
    ok.iter().enumerate().filter(|(_, &b)| !b).map(|(k, _)| k as u64).collect()
}

fn residual_of(spec: &DriftSpec, sol: &SolutionPath, driver: &SamplePath, window: (f64, f64), mc: &McOptions) -> f64 {
    residual_sup(spec, &sol.path, driver, window, &ResidualOptions::from(&mc.solve))
        .map_or(f64::INFINITY, |r| r.sup)
}

/// Strict sign `side` at every node after `t_min`.
fn keeps_sign(sol: &SamplePath, t_min: f64, side: Side) -> bool {
    sol.times()
        .iter()
        .zip(sol.values())
        .filter(|(t, _)| **t > t_min)
        .all(|(_, &x)| Side::of(x, 0.0) == Some(side))
}

/// Drifts of the form `-1/(2(x - a))` and their regions `(drift, a, t-range)`.
const CANCELLATION_REGIONS: [(&str, DriftSpec, f64, (f64, f64)); 3] = [
    ("no_weak", DriftSpec::NoWeak { tail: TailSpec::Zero }, 0.0, (0.0, 1.0)),
    ("ce1_row3", DriftSpec::Ce1, 0.0, (2.0, 3.0)),
    ("ce2_row4", DriftSpec::Ce2, 2.0, (3.0, 4.0)),
];

const CHUNK: usize = 8192;

/// Largest `|2(x - a) b(t, x) + 1|` over `n_points` uniform points of the
/// regions where the drift is `-1/(2(x - a))`, `0 < |x - a| <= 1`.
pub fn test_cancellation(n_points: usize, seed: u64) -> VerificationReport {
    test_cancellation_with_coefficient(n_points, seed, 2.0)
}

/// As [`test_cancellation`] with the drift replaced by `-1/(coef (x - a))`
/// on the same regions; any `coef != 2` is a mutated drift.
pub fn test_cancellation_with_coefficient(n_points: usize, seed: u64, coef: f64) -> VerificationReport {
    let start = Instant::now();
    let scale = 2.0 / coef;
    let per_region = n_points / 3;
    let mut maxima = Vec::new();
    let mut stat = 0.0f64;
    for (r, (name, spec, a, (t0, t1))) in CANCELLATION_REGIONS.iter().enumerate() {
        let count = if r == 0 { n_points - 2 * per_region } else { per_region };
        let chunks = count.div_ceil(CHUNK);
        let worst = par_map(chunks, |c| {
            let mut gen = RngSpec::new(seed, ((r as u64) << 32) | c).derive(TAG_CANCEL).rng();
            let len = CHUNK.min(count - c as usize * CHUNK);
            let mut m = 0.0f64;
            let mut done = 0;
            while done < len {
                let u: f64 = gen.random_range(-1.0..=1.0);
                if u == 0.0 {
                    continue;
                }
                let t = gen.random_range(*t0..=*t1);
                let b = eval_drift(spec, t, a + u).expect("in-window point off the singular set") * scale;
                m = m.max((2.0 * u * b + 1.0).abs());
                done += 1;
            }
            m
        })
        .into_iter()
        .fold(0.0, f64::max);
        stat = stat.max(worst);
        maxima.push(format!("{name}: {worst:e}"));
    }
    let mut rep = VerificationReport::new("cancellation", n_points, seed, stat, 1e-12, Relation::AtMost);
    if coef != 2.0 {
        rep = rep.note(format!("mutated drift -1/({coef} (x - a))"));
    }
    rep.note(maxima.join(", "))
        .note("checks the cancellation mechanism only; non-existence of weak solutions is outside empirical scope")
        .timed(start)
}

/// Fraction of Brownian drivers for which the nonnegative bridge to `y`
/// ends within 1e-2 of `y` and stays positive on `(1e-3, 1]`.
pub fn test_bridge_properties(n: usize, y: f64, seed: u64, mc: &McOptions) -> VerificationReport {
    let start = Instant::now();
    let ok = par_map(n, |k| {
        let d = brownian_driver(1.0, mc.driver_steps, RngSpec::new(seed, k).derive(TAG_BRIDGE));
        match bridge_solution(Side::Above, y, &d, &mc.solve) {
            Ok(sol) => (sol.final_value() - y).abs() <= 1e-2 && keeps_sign(&sol.path, 1e-3, Side::Above),
            Err(_) => false,
        }
    });
    VerificationReport::new(&format!("bridge_properties_y{y}"), n, seed, fraction(&ok), 1.0, Relation::AtLeast)
        .failures(failing(&ok))
        .timed(start)
}

/// Which containment event is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Containment {
    /// `sup X < 2` for the nonnegative bridge from 0 to 1.
    Sup2,
    /// `inf X > 0` for the bridge from 2 down to 1, kept below 2.
    Inf0,
}

/// Containment under small drivers: the statistic is the largest `sup X`
/// (mode `Sup2`) or smallest `inf X` (mode `Inf0`) over `n` synthetic
/// drivers with sup-norm `amplitude`.
pub fn test_small_driver_bound(
    n: usize,
    amplitude: f64,
    mode: Containment,
    seed: u64,
    mc: &McOptions,
) -> Result<VerificationReport> {
    if !(amplitude > 0.0 && amplitude < 1.0 / 6.0) {
        return Err(Error::usage(format!("driver amplitude must lie in (0, 1/6), got {amplitude}")));
    }
    Ok(small_driver_bound(n, amplitude, mode, seed, mc, TAG_SMALL, ""))
}

fn containment_extreme(mode: Containment, d: &SamplePath, opts: &SolveOptions) -> Result<f64> {
    match mode {
        Containment::Sup2 => {
            let sol = bridge_solution(Side::Above, 1.0, d, opts)?;
            Ok(sol.values().iter().copied().fold(f64::NEG_INFINITY, f64::max))
        }
        Containment::Inf0 => {
            let spec = DriftSpec::BridgeOneSided { center: 2.0, target: 1.0, t_end: 1.0, side: Side::Below };
            let sol = solve_pathwise(&spec, d, Start::new(2.0, Side::Below), (0.0, 1.0), opts)?;
            Ok(sol.values().iter().copied().fold(f64::INFINITY, f64::min))
        }
    }
}

fn small_driver_bound(
    n: usize,
    amplitude: f64,
    mode: Containment,
    seed: u64,
    mc: &McOptions,
    tag: u64,
    suffix: &str,
) -> VerificationReport {
    let start = Instant::now();
    let extremes = par_map(n, |k| {
        let d = small_driver(SmallShape::cycle(k), amplitude, mc.driver_steps, RngSpec::new(seed, k).derive(tag));
        containment_extreme(mode, &d, &mc.solve).ok()
    });
    let (stat, threshold, relation, name) = match mode {
        Containment::Sup2 => {
            let s = extremes.iter().map(|e| e.unwrap_or(f64::INFINITY)).fold(f64::NEG_INFINITY, f64::max);
            (s, 2.0, Relation::Below, format!("small_driver_sup2{suffix}"))
        }
        Containment::Inf0 => {
            let s = extremes.iter().map(|e| e.unwrap_or(f64::NEG_INFINITY)).fold(f64::INFINITY, f64::min);
            (s, 0.0, Relation::Above, format!("small_driver_inf0{suffix}"))
        }
    };
    let ok: Vec<bool> = extremes.iter().map(|e| e.is_some_and(|v| relation.holds(v, threshold))).collect();
    VerificationReport::new(&name, n, seed, stat, threshold, relation)
        .failures(failing(&ok))
        .note(format!("driver sup-norm {amplitude}; shapes cycle brownian, brownian, sawtooth, sinusoid"))
        .note("threshold is the strict bound itself; no margin is claimed")
        .timed(start)
}

/// Both halves of the Bessel(3) law check.
#[derive(Debug, Clone, PartialEq)]
pub struct Bes3Law {
    /// Two-sample KS distance to the norm of a standard 3-dimensional Gaussian.
    pub ks: VerificationReport,
    /// Distance of the sample mean from `2 sqrt(2/pi)` in standard errors.
    pub mean: VerificationReport,
}

fn bes3_terminal(n: usize, seed: u64, mc: &McOptions, tag: u64) -> Vec<Option<f64>> {
    let spec = DriftSpec::Bes3 { center: 0.0, side: Side::Above };
    par_map(n, |k| {
        let d = brownian_driver(1.0, mc.driver_steps, RngSpec::new(seed, k).derive(tag));
        solve_pathwise(&spec, &d, Start::new(0.0, Side::Above), (0.0, 1.0), &mc.solve)
            .ok()
            .map(|s| s.final_value())
    })
}

fn gaussian_norms(n: usize, seed: u64, dim: usize) -> Vec<f64> {
    par_map(n, |k| {
        let mut gen = RngSpec::new(seed, k).derive(TAG_ORACLE).rng();
        (0..dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut gen);
                z * z
            })
            .sum::<f64>()
            .sqrt()
    })
}

/// Law of `X_1` for the Bessel(3) solution from 0 against an independent
/// sample of `|(Z_1, Z_2, Z_3)|`.
pub fn test_bes3_law(n: usize, seed: u64, mc: &McOptions) -> Result<Bes3Law> {
    if n < 10_000 {
        return Err(Error::usage(format!("the law test needs n >= 10000, got {n}")));
    }
    let start = Instant::now();
    let raw = bes3_terminal(n, seed, mc, TAG_BES3);
    let ok: Vec<bool> = raw.iter().map(Option::is_some).collect();
    let xs: Vec<f64> = raw.iter().flatten().copied().collect();
    let oracle = gaussian_norms(n, seed, 3);
    let ks = ks_two_sample(&xs, &oracle);
    let noise = ks_two_sample_noise(xs.len(), n);
    let threshold = (2.5 * noise).max(0.01);
    let ks_rep = VerificationReport::new("bes3_law_ks", n, seed, ks, threshold, Relation::AtMost)
        .failures(failing(&ok))
        .note(format!("two-sample noise floor {noise:.5}; threshold max(0.01, 2.5 x noise)"))
        .timed(start);

    let (mean, _) = mean_sd(&xs);
    let target = 2.0 * (2.0 / std::f64::consts::PI).sqrt();
    let sd = (3.0 - 8.0 / std::f64::consts::PI).sqrt();
    let z = (mean - target).abs() / (sd / (xs.len() as f64).sqrt());
    let mean_rep = VerificationReport::new("bes3_law_mean", n, seed, z, 3.0, Relation::AtMost)
        .failures(failing(&ok))
        .note(format!("sample mean {mean:.6}, target {target:.6}, in standard errors"))
        .timed(start);
    Ok(Bes3Law { ks: ks_rep, mean: mean_rep })
}

/// Validity of the automatic `Ce1` construction on Brownian drivers:
/// residual within tolerance, `X_1 = ±1` within 1e-2 and `|X| > 1` on `[2, 3]`.
pub fn test_ce1_validity(n: usize, seed: u64, mc: &McOptions) -> VerificationReport {
    let start = Instant::now();
    let ok = par_map(n, |k| {
        let d = brownian_driver(3.0, mc.driver_steps, RngSpec::new(seed, k).derive(TAG_CE1));
        let Ok(sol) = construct_ce1(&d, Ce1Branch::Auto, &mc.solve) else {
            return false;
        };
        let x1 = sol.eval(1.0).unwrap_or(f64::NAN);
        let outside = sol.times().iter().zip(sol.values()).filter(|(t, _)| **t >= 2.0).all(|(_, x)| x.abs() > 1.0);
        residual_of(&DriftSpec::Ce1, &sol, &d, (0.0, 3.0), mc) <= mc.residual_tol
            && (x1.abs() - 1.0).abs() <= 1e-2
            && outside
    });
    VerificationReport::new("ce1_validity", n, seed, fraction(&ok), 0.99, Relation::AtLeast)
        .failures(failing(&ok))
        .timed(start)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonuniquenessCase {
    /// Both `Ce1` branches on drivers with `B_2 - B_1 > 2`.
    Ce1C3,
    /// Weak and alternative `Ce2` solutions on unconditioned drivers.
    Ce2,
}

/// Two different solutions of one equation on one driver.
pub fn demo_nonuniqueness(case: NonuniquenessCase, n: usize, seed: u64, mc: &McOptions) -> Result<VerificationReport> {
    if n < 50 {
        return Err(Error::usage(format!("the non-uniqueness demo needs n >= 50, got {n}")));
    }
    Ok(match case {
        NonuniquenessCase::Ce1C3 => ce1_pairs(n, seed, mc, TAG_C3, |inc| inc > 2.0, "nonuniqueness_ce1_c3"),
        NonuniquenessCase::Ce2 => ce2_pairs(n, seed, mc),
    })
}

fn ce1_pairs(
    n: usize,
    seed: u64,
    mc: &McOptions,
    tag: u64,
    accept: impl Fn(f64) -> bool + Sync,
    name: &str,
) -> VerificationReport {
    let start = Instant::now();
    let (drivers, raw) = conditioned_ce1_drivers(n, seed, mc.driver_steps, tag, accept);
    let ok: Vec<bool> = drivers
        .par_iter()
        .map(|(_, d)| {
            let both = construct_ce1(d, Ce1Branch::Positive, &mc.solve)
                .and_then(|p| Ok((p, construct_ce1(d, Ce1Branch::Negative, &mc.solve)?)));
            let Ok((p, m)) = both else {
                return false;
            };
            let gap = p.eval(1.0).unwrap_or(f64::NAN) - m.eval(1.0).unwrap_or(f64::NAN);
            residual_of(&DriftSpec::Ce1, &p, d, (0.0, 3.0), mc) <= mc.residual_tol
                && residual_of(&DriftSpec::Ce1, &m, d, (0.0, 3.0), mc) <= mc.residual_tol
                && (gap - 2.0).abs() <= 2e-2
        })
        .collect();
    let failures = drivers.iter().zip(&ok).filter(|(_, &o)| !o).map(|((k, _), _)| *k).collect();
    VerificationReport::new(name, n, seed, fraction(&ok), 0.99, Relation::AtLeast)
        .failures(failures)
        .note(format!("rejection sampling accepted {n} of {raw} drivers (rate {:.5})", n as f64 / raw as f64))
        .timed(start)
}

fn ce2_pairs(n: usize, seed: u64, mc: &McOptions) -> VerificationReport {
    let start = Instant::now();
    // (pass, took C2, left (0, 2) on [1, 2])
    let results = par_map(n, |k| {
        let d = brownian_driver(4.0, mc.driver_steps, RngSpec::new(seed, k).derive(TAG_CE2));
        let (Ok(w), Ok(a)) = (
            construct_ce2(&d, Ce2Variant::Weak, &mc.solve),
            construct_ce2(&d, Ce2Variant::Alternative, &mc.solve),
        ) else {
            return (false, false, false);
        };
        let (w1, a1) = (w.eval(1.0).unwrap_or(f64::NAN), a.eval(1.0).unwrap_or(f64::NAN));
        let negative = w.times().iter().zip(w.values()).filter(|(t, _)| **t >= 1.01).all(|(_, &x)| x < 0.0);
        let pass = residual_of(&DriftSpec::Ce2, &w, &d, (0.0, 4.0), mc) <= mc.residual_tol
            && residual_of(&DriftSpec::Ce2, &a, &d, (0.0, 4.0), mc) <= mc.residual_tol
            && (w1 + 2.0).abs() <= 1e-2
            && negative
            && (a1 - w1 - 4.0).abs() <= 2e-2;
        (pass, a.branch("C2").is_some(), a.branch("exit").is_some())
    });
    let ok: Vec<bool> = results.iter().map(|r| r.0).collect();
    let c2 = results.iter().filter(|r| r.1).count();
    let exits = results.iter().filter(|r| r.2).count();
    VerificationReport::new("nonuniqueness_ce2", n, seed, fraction(&ok), 0.99, Relation::AtLeast)
        .failures(failing(&ok))
        .note(format!(
            "{c2} drivers in C2; the bridge towards 1 left (0, 2) on {exits} of them and was continued below 0"
        ))
        .timed(start)
}

/// Rejection-sampler acceptance rate for `B_2 - B_1 > 2` over `n_raw`
/// candidate drivers; the statistic is its distance from `P(N(0,1) > 2)`.
pub fn conditioned_acceptance_rate(n_raw: usize, seed: u64, steps_per_unit: usize) -> VerificationReport {
    let start = Instant::now();
    let hits = par_map(n_raw, |k| {
        let d = brownian_driver(3.0, steps_per_unit, RngSpec::new(seed, k).derive(TAG_C3));
        d.eval_unchecked(2.0) - d.eval_unchecked(1.0) > 2.0
    });
    let rate = fraction(&hits);
    let se = (GAUSS_TAIL_2 * (1.0 - GAUSS_TAIL_2) / n_raw as f64).sqrt();
    VerificationReport::new("conditioned_acceptance_rate", n_raw, seed, (rate - GAUSS_TAIL_2).abs(), 3.0 * se, Relation::AtMost)
        .note(format!("rate {rate:.5}, expected {GAUSS_TAIL_2:.5} +- 3 x {se:.5}"))
        .timed(start)
}

fn convergence_ratios(d: &SamplePath, mc: &McOptions, hs: &[f64]) -> Vec<Vec<f64>> {
    let d1 = d.restrict(0.0, 1.0).expect("driver covers [0, 1]");
    let d3 = d.restrict(0.0, 3.0).expect("driver covers [0, 3]");
    let bridge = DriftSpec::BridgeTwoSided { y: 1.0, t_end: 1.0 };
    let bes3 = DriftSpec::Bes3 { center: 0.0, side: Side::Above };
    let mut res = vec![Vec::new(); 5];
    for &h in hs {
        let o = mc.solve.with_h_base(h);
        let m = McOptions { solve: o, ..*mc };
        let cases: [(&DriftSpec, Result<SolutionPath>, &SamplePath, f64); 5] = [
            (&bridge, bridge_solution(Side::Above, 1.0, &d1, &o), &d1, 1.0),
            (&bes3, solve_pathwise(&bes3, &d1, Start::new(0.0, Side::Above), (0.0, 1.0), &o), &d1, 1.0),
            (&DriftSpec::Ce1, construct_ce1(&d3, Ce1Branch::Auto, &o), &d3, 3.0),
            (&DriftSpec::Ce2, construct_ce2(d, Ce2Variant::Weak, &o), d, 4.0),
            (&DriftSpec::Ce2, construct_ce2(d, Ce2Variant::Alternative, &o), d, 4.0),
        ];
        for (i, (spec, sol, drv, end)) in cases.into_iter().enumerate() {
            res[i].push(sol.map_or(f64::NAN, |s| residual_of(spec, &s, drv, (0.0, end), &m)));
        }
    }
    res
}

/// Residual decrease per halving of `h_base`, from `2^-coarse_exp` over
/// `halvings` halvings, on drivers with `2^coarse_exp` cells per unit, for
/// the bridge, the Bessel(3) solution from 0, `Ce1` and both `Ce2` solutions.
/// The statistic is the smallest ratio seen.
pub fn test_convergence(n_drivers: usize, seed: u64, coarse_exp: u32, halvings: u32, mc: &McOptions) -> VerificationReport {
    let hs: Vec<f64> = (0..=halvings).map(|j| (0.5f64).powi((coarse_exp + j) as i32)).collect();
    convergence_with(n_drivers, seed, coarse_exp, &hs, mc, "convergence", Relation::AtLeast)
}

fn convergence_with(
    n_drivers: usize,
    seed: u64,
    coarse_exp: u32,
    hs: &[f64],
    mc: &McOptions,
    name: &str,
    relation: Relation,
) -> VerificationReport {
    let start = Instant::now();
    let steps = 1usize << coarse_exp;
    let per_driver = par_map(n_drivers, |k| {
        let d = brownian_driver(4.0, steps, RngSpec::new(seed, k).derive(TAG_CONV));
        convergence_ratios(&d, mc, hs)
    });
    let mut ratios = Vec::new();
    let mut ok = Vec::new();
    for res in &per_driver {
        let mut good = true;
        for case in res {
            for w in case.windows(2) {
                let r = if w[1] == 0.0 && w[0] == 0.0 { 1.0 } else { w[0] / w[1] };
                let r = if r.is_nan() { 0.0 } else { r };
                good &= r >= 1.3;
                ratios.push(r);
            }
        }
        ok.push(good);
    }
    let stat = match relation {
        Relation::AtLeast | Relation::Above => ratios.iter().copied().fold(f64::INFINITY, f64::min),
        _ => ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    VerificationReport::new(name, n_drivers, seed, stat, 1.3, relation)
        .failures(failing(&ok))
        .note(format!("h_base {:e} .. {:e}; cases bridge, bes3, ce1, ce2 weak, ce2 alternative", hs[0], hs[hs.len() - 1]))
        .timed(start)
}

/// Mutated inputs that each check must reject. A control report passes
/// when its statistic lands on the failing side of the original criterion.
pub mod controls {
    use super::*;

    /// Drift `-1/(2.1 x)`: defect `1 - 2/2.1` at every point.
    pub fn cancellation(n_points: usize, seed: u64) -> VerificationReport {
        let r = test_cancellation_with_coefficient(n_points, seed, 2.1);
        let mut c = VerificationReport::new("cancellation.control", n_points, seed, r.statistic, 1e-12, Relation::Above);
        c.notes = r.notes;
        c.runtime_s = r.runtime_s;
        c
    }

    /// Zero drift from 0: the solution is the driver, which changes sign.
    /// Statistic: fraction of sign-constant paths on `(1e-3, 1]`.
    pub fn bridge_sign(n: usize, seed: u64, mc: &McOptions) -> VerificationReport {
        let start = Instant::now();
        let constant = par_map(n, |k| {
            let d = brownian_driver(1.0, mc.driver_steps, RngSpec::new(seed, k).derive(TAG_BRIDGE + TAG_CONTROL));
            keeps_sign(&d, 1e-3, Side::Above) || keeps_sign(&d, 1e-3, Side::Below)
        });
        VerificationReport::new("bridge_properties.control", n, seed, fraction(&constant), 0.1, Relation::Below)
            .note("zero drift from 0; sign-constant fraction must stay below 0.1")
            .timed(start)
    }

    /// Drivers of sup-norm 3, far outside the small-driver regime.
    pub fn small_driver(n: usize, mode: Containment, seed: u64, mc: &McOptions) -> VerificationReport {
        let r = small_driver_bound(n, 3.0, mode, seed, mc, TAG_SMALL + TAG_CONTROL, ".control");
        let relation = match mode {
            Containment::Sup2 => Relation::AtLeast,
            Containment::Inf0 => Relation::AtMost,
        };
        let mut c = VerificationReport::new(&r.test, n, seed, r.statistic, r.threshold, relation);
        c.notes = r.notes;
        c.runtime_s = r.runtime_s;
        c
    }

    /// The solver's `X_1` against `|N(0, 1)|` instead of the 3-dimensional norm.
    pub fn bes3_half_normal(n: usize, seed: u64, mc: &McOptions) -> VerificationReport {
        let start = Instant::now();
        let xs: Vec<f64> = bes3_terminal(n, seed, mc, TAG_BES3 + TAG_CONTROL).into_iter().flatten().collect();
        let wrong = gaussian_norms(n, seed ^ TAG_CONTROL, 1);
        VerificationReport::new("bes3_law.control", n, seed, ks_two_sample(&xs, &wrong), 0.01, Relation::Above)
            .note("oracle replaced by |N(0, 1)|")
            .timed(start)
    }

    /// Both `Ce1` branches forced on drivers with `0 < B_2 - B_1 < 2`, where
    /// the negative branch is invalid.
    pub fn nonuniqueness_invalid(n: usize, seed: u64, mc: &McOptions) -> VerificationReport {
        let r = ce1_pairs(n, seed, mc, TAG_C3 + TAG_CONTROL, |inc| inc > 0.0 && inc < 2.0, "nonuniqueness.control");
        let mut c = VerificationReport::new(&r.test, n, seed, r.statistic, 0.99, Relation::Below);
        c.notes = r.notes;
        c.runtime_s = r.runtime_s;
        c
    }

    /// `h_base` held fixed: no halving, so every ratio is 1.
    pub fn convergence_frozen(n_drivers: usize, seed: u64, coarse_exp: u32, halvings: u32, mc: &McOptions) -> VerificationReport {
        let h = (0.5f64).powi(coarse_exp as i32);
        let hs = vec![h; halvings as usize + 1];
        convergence_with(n_drivers, seed, coarse_exp, &hs, mc, "convergence.control", Relation::Below)
    }
}

use serde::{Deserialize, Serialize};

use super::checks::{
    conditioned_acceptance_rate, controls, demo_nonuniqueness, test_bes3_law, test_bridge_properties,
    test_cancellation_with_coefficient, test_ce1_validity, test_convergence, test_small_driver_bound,
    Containment, NonuniquenessCase,
};
use super::{McOptions, VerificationReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Sample sizes reduced about tenfold.
    Quick,
    #[default]
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestName {
    Cancellation,
    BridgeProperties,
    SmallDriver,
    Bes3Law,
    Ce1Validity,
    NonuniquenessCe1,
    NonuniquenessCe2,
    AcceptanceRate,
    Convergence,
}

impl TestName {
    pub const ALL: [TestName; 9] = [
        TestName::Cancellation,
        TestName::BridgeProperties,
        TestName::SmallDriver,
        TestName::Bes3Law,
        TestName::Ce1Validity,
        TestName::NonuniquenessCe1,
        TestName::NonuniquenessCe2,
        TestName::AcceptanceRate,
        TestName::Convergence,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub seed: u64,
    pub profile: Profile,
    /// Worker threads; `None` uses the global pool. Results do not depend on it.
    pub threads: Option<usize>,
    /// Tests to run; `None` runs all of them.
    pub tests: Option<Vec<TestName>>,
    /// Also run the negative controls.
    pub controls: bool,
    /// Coefficient `c` of the drift `-1/(c (x - a))` fed to the
    /// cancellation check; anything but 2 is a mutated drift.
    pub cancellation_coefficient: f64,
    pub mc: McOptions,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 1,
            profile: Profile::Full,
            threads: None,
            tests: None,
            controls: true,
            cancellation_coefficient: 2.0,
            mc: McOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub reports: Vec<VerificationReport>,
    /// Every report passed.
    pub pass: bool,
}

struct Sizes {
    cancellation: usize,
    bridge: usize,
    small: usize,
    bes3: usize,
    ce1: usize,
    nonuniqueness: usize,
    acceptance_raw: usize,
    convergence: usize,
}

impl Profile {
    fn sizes(self) -> Sizes {
        match self {
            Profile::Full => Sizes {
                cancellation: 1_000_000,
                bridge: 1000,
                small: 500,
                bes3: 100_000,
                ce1: 200,
                nonuniqueness: 200,
                acceptance_raw: 10_000,
                convergence: 20,
            },
            Profile::Quick => Sizes {
                cancellation: 100_000,
                bridge: 100,
                small: 50,
                bes3: 10_000,
                ce1: 20,
                nonuniqueness: 50,
                acceptance_raw: 10_000,
                convergence: 2,
            },
        }
    }
}

/// Runs the selected checks in a fixed order and collects every report,
/// failing ones included.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteOutcome> {
    if config.tests.as_ref().is_some_and(Vec::is_empty) {
        return Err(Error::usage("the suite configuration selects no tests"));
    }
    if !(config.cancellation_coefficient.is_finite() && config.cancellation_coefficient != 0.0) {
        return Err(Error::usage("cancellation_coefficient must be finite and nonzero"));
    }
    if config.threads == Some(0) {
        return Err(Error::usage("threads must be positive"));
    }
    config.mc.solve.validate()?;
    match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::usage(format!("cannot start {t} worker threads: {e}")))?
            .install(|| run_all(config)),
        None => run_all(config),
    }
}

fn run_all(config: &SuiteConfig) -> Result<SuiteOutcome> {
    let sz = config.profile.sizes();
    let (seed, mc) = (config.seed, &config.mc);
    let selected = |t: TestName| config.tests.as_ref().is_none_or(|v| v.contains(&t));
    let mut reports = Vec::new();

    if selected(TestName::Cancellation) {
        reports.push(test_cancellation_with_coefficient(sz.cancellation, seed, config.cancellation_coefficient));
        if config.controls {
            reports.push(controls::cancellation(sz.cancellation, seed));
        }
    }
    if selected(TestName::BridgeProperties) {
        for y in [1.0, 2.0] {
            reports.push(test_bridge_properties(sz.bridge, y, seed, mc));
        }
        if config.controls {
            reports.push(controls::bridge_sign(sz.bridge, seed, mc));
        }
    }
    if selected(TestName::SmallDriver) {
        for mode in [Containment::Sup2, Containment::Inf0] {
            reports.push(test_small_driver_bound(sz.small, 0.15, mode, seed, mc)?);
            if config.controls {
                reports.push(controls::small_driver((sz.small / 10).max(10), mode, seed, mc));
            }
        }
    }
    if selected(TestName::Bes3Law) {
        let law = test_bes3_law(sz.bes3, seed, mc)?;
        reports.push(law.ks);
        reports.push(law.mean);
        if config.controls {
            reports.push(controls::bes3_half_normal(sz.bes3 / 10, seed, mc));
        }
    }
    if selected(TestName::Ce1Validity) {
        reports.push(test_ce1_validity(sz.ce1, seed, mc));
    }
    if selected(TestName::NonuniquenessCe1) {
        reports.push(demo_nonuniqueness(NonuniquenessCase::Ce1C3, sz.nonuniqueness, seed, mc)?);
        if config.controls {
            reports.push(controls::nonuniqueness_invalid(50, seed, mc));
        }
    }
    if selected(TestName::NonuniquenessCe2) {
        reports.push(demo_nonuniqueness(NonuniquenessCase::Ce2, sz.nonuniqueness, seed, mc)?);
    }
    if selected(TestName::AcceptanceRate) {
        reports.push(conditioned_acceptance_rate(sz.acceptance_raw, seed, mc.driver_steps));
    }
    if selected(TestName::Convergence) {
        reports.push(test_convergence(sz.convergence, seed, 8, 3, mc));
        if config.controls {
            reports.push(controls::convergence_frozen(sz.convergence.min(2), seed, 8, 3, mc));
        }
    }
    let pass = reports.iter().all(|r| r.pass);
    Ok(SuiteOutcome { reports, pass })
}

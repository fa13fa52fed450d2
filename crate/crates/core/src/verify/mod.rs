//! Monte Carlo and deterministic checks, each reduced to one statistic
//! compared against a fixed threshold.
//!
//! Every path `k` of a check draws from its own substream `(seed, k)`, paths
//! are solved in parallel with an order-preserving collect, and all
//! reductions run sequentially afterwards; reports therefore do not depend
//! on the number of worker threads.

mod checks;
mod drivers;
pub mod stats;
mod suite;

use serde::{Deserialize, Serialize};

pub use checks::{
    conditioned_acceptance_rate, demo_nonuniqueness, test_bes3_law, test_bridge_properties,
    test_cancellation, test_cancellation_with_coefficient, test_ce1_validity, test_convergence,
    test_small_driver_bound, Bes3Law, Containment, NonuniquenessCase,
};
pub use checks::controls;
pub use drivers::{brownian_driver, conditioned_ce1_drivers, small_driver, SmallShape};
pub use suite::{run_suite, Profile, SuiteConfig, SuiteOutcome, TestName};

use crate::solver::SolveOptions;

/// How a statistic is compared with its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">")]
    Above,
}

impl Relation {
    pub fn holds(self, statistic: f64, threshold: f64) -> bool {
        match self {
            Relation::AtMost => statistic <= threshold,
            Relation::AtLeast => statistic >= threshold,
            Relation::Below => statistic < threshold,
            Relation::Above => statistic > threshold,
        }
    }
}

/// Outcome of one check. One JSON object per line in suite output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationReport {
    pub test: String,
    pub n: usize,
    pub seed: u64,
    pub statistic: f64,
    pub threshold: f64,
    pub relation: Relation,
    pub pass: bool,
    /// Stream ids of the paths that failed their per-path predicate.
    pub failures: Vec<u64>,
    pub runtime_s: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub(crate) fn new(
        test: &str,
        n: usize,
        seed: u64,
        statistic: f64,
        threshold: f64,
        relation: Relation,
    ) -> Self {
        // JSON has no infinities; a clamped value compares the same way.
        let statistic = statistic.clamp(-f64::MAX, f64::MAX);
        VerificationReport {
            test: test.to_string(),
            n,
            seed,
            statistic,
            threshold,
            relation,
            pass: relation.holds(statistic, threshold),
            failures: Vec::new(),
            runtime_s: 0.0,
            notes: Vec::new(),
        }
    }

    pub(crate) fn failures(mut self, f: Vec<u64>) -> Self {
        self.failures = f;
        self
    }

    pub(crate) fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }

    pub(crate) fn timed(mut self, start: std::time::Instant) -> Self {
        self.runtime_s = start.elapsed().as_secs_f64();
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }

    /// The JSON line with `runtime_s` removed: identical across reruns with
    /// the same inputs.
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("reports serialize");
        if let Some(o) = v.as_object_mut() {
            o.remove("runtime_s");
        }
        v.to_string()
    }
}

/// Shared settings of the Monte Carlo checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McOptions {
    pub solve: SolveOptions,
    /// Driver grid cells per unit of time.
    pub driver_steps: usize,
    /// Largest residual accepted for a constructed solution.
    pub residual_tol: f64,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions { solve: SolveOptions::default(), driver_steps: 4096, residual_tol: 5e-3 }
    }
}

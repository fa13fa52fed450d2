//! Acceptance criteria, one line each. Run with
//! `cargo test -p pathwise-core --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use pathwise::verify::{
    controls, demo_nonuniqueness, run_suite, test_bes3_law, test_bridge_properties, test_cancellation,
    test_ce1_validity, test_convergence, test_small_driver_bound, Containment, McOptions, NonuniquenessCase,
    Profile, SuiteConfig, VerificationReport,
};

const SEED: u64 = 1;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn(&McOptions) -> Vec<VerificationReport>,
}

fn cancellation(_: &McOptions) -> Vec<VerificationReport> {
    vec![test_cancellation(1_000_000, SEED), controls::cancellation(1_000_000, SEED)]
}

fn bridge(mc: &McOptions) -> Vec<VerificationReport> {
    assert_eq!(mc.solve.h_base, 1.0 / 16384.0);
    vec![test_bridge_properties(1000, 1.0, SEED, mc), test_bridge_properties(1000, 2.0, SEED, mc)]
}

fn bes3(mc: &McOptions) -> Vec<VerificationReport> {
    let law = test_bes3_law(100_000, SEED, mc).expect("n is large enough");
    assert_eq!(law.ks.threshold, 0.01);
    vec![law.ks, law.mean]
}

fn containment(mc: &McOptions) -> Vec<VerificationReport> {
    [Containment::Sup2, Containment::Inf0]
        .into_iter()
        .map(|m| test_small_driver_bound(500, 0.15, m, SEED, mc).expect("0.15 < 1/6"))
        .collect()
}

fn ce1_validity(mc: &McOptions) -> Vec<VerificationReport> {
    vec![test_ce1_validity(200, SEED, mc)]
}

fn ce1_witness(mc: &McOptions) -> Vec<VerificationReport> {
    vec![demo_nonuniqueness(NonuniquenessCase::Ce1C3, 200, SEED, mc).expect("n >= 50")]
}

fn ce2_pair(mc: &McOptions) -> Vec<VerificationReport> {
    vec![demo_nonuniqueness(NonuniquenessCase::Ce2, 200, SEED, mc).expect("n >= 50")]
}

fn convergence(mc: &McOptions) -> Vec<VerificationReport> {
    vec![test_convergence(20, SEED, 8, 3, mc)]
}

/// The quick suite with controls under 1, 4 and 8 worker threads; the
/// statistic is the number of thread counts whose canonical reports differ
/// from the single-threaded run.
fn determinism(mc: &McOptions) -> Vec<VerificationReport> {
    let run = |threads| {
        let cfg = SuiteConfig { seed: SEED, profile: Profile::Quick, threads: Some(threads), mc: *mc, ..SuiteConfig::default() };
        run_suite(&cfg).expect("valid configuration").reports
    };
    let reference = run(1);
    let lines = |rs: &[VerificationReport]| rs.iter().map(VerificationReport::canonical_json).collect::<Vec<_>>();
    let mismatches = [4, 8].into_iter().filter(|&t| lines(&run(t)) != lines(&reference)).count();
    let mut out = vec![VerificationReport {
        test: "determinism_1_4_8_threads".into(),
        n: reference.len(),
        seed: SEED,
        statistic: mismatches as f64,
        threshold: 0.0,
        relation: pathwise::verify::Relation::AtMost,
        pass: mismatches == 0,
        failures: Vec::new(),
        runtime_s: 0.0,
        notes: Vec::new(),
    }];
    out.extend(reference);
    out
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mc = McOptions::default();
    let criteria = [
        Criterion { id: 1, name: "cancellation identity", limit: Duration::from_secs(5), run: cancellation },
        Criterion { id: 2, name: "bridge pinning and sign constancy", limit: Duration::from_secs(120), run: bridge },
        Criterion { id: 3, name: "bessel(3) law from 0", limit: Duration::from_secs(600), run: bes3 },
        Criterion { id: 4, name: "small-driver containment", limit: Duration::from_secs(60), run: containment },
        Criterion { id: 5, name: "ce1 construction validity", limit: Duration::from_secs(300), run: ce1_validity },
        Criterion { id: 6, name: "ce1 non-uniqueness witness", limit: Duration::from_secs(600), run: ce1_witness },
        Criterion { id: 7, name: "ce2 two solutions per driver", limit: Duration::from_secs(600), run: ce2_pair },
        Criterion { id: 8, name: "residual convergence", limit: Duration::from_secs(600), run: convergence },
        Criterion { id: 9, name: "thread-count determinism", limit: Duration::MAX, run: determinism },
    ];
    let mut all = true;
    for c in criteria {
        let start = Instant::now();
        let reports = (c.run)(&mc);
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.limit;
        let pass = in_time && reports.iter().all(|r| r.pass);
        all &= pass;
        let detail: Vec<String> = reports
            .iter()
            .filter(|r| c.id != 9 || r.test.starts_with("determinism") || !r.pass)
            .map(|r| {
                let rel = serde_json::to_value(r.relation).unwrap();
                format!("{} {:.6e} {} {:e}{}", r.test, r.statistic, rel.as_str().unwrap(), r.threshold, if r.pass { "" } else { " FAIL" })
            })
            .collect();
        let limit = if c.limit == Duration::MAX { "none".to_string() } else { format!("{}s", c.limit.as_secs()) };
        println!(
            "criterion {} [{}] {}: {:.1}s (limit {limit}) | {}",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.name,
            elapsed.as_secs_f64(),
            detail.join("; ")
        );
        for r in reports.iter().filter(|r| !r.pass) {
            println!("    {}", r.to_json_line());
        }
    }
    println!("acceptance: {}", if all { "PASS" } else { "FAIL" });
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

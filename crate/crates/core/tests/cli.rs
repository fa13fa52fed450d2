use std::path::Path;
use std::process::{Command, Output};

use pathwise::verify::VerificationReport;
use pathwise::{make_uniform_grid, PathKind, SamplePath};

fn pathwise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathwise"))
        .args(args)
        .env_remove("PATHWISE_SEED")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn config_line(o: &Output) -> serde_json::Value {
    let err = stderr(o);
    let line = err.lines().find_map(|l| l.strip_prefix("# config ")).expect("config is echoed");
    serde_json::from_str(line).unwrap()
}

/// Driver on [0, 3] with the given increment over [1, 2].
fn write_driver(path: &Path, increment: f64) {
    let grid = make_uniform_grid(3.0, 3 * 256).unwrap();
    let d = SamplePath::from_fn(grid, PathKind::Driver, |t| increment * (t - 1.0).clamp(0.0, 1.0)).unwrap();
    d.save_csv(path).unwrap();
}

#[test]
fn bes3_from_one_on_the_zero_driver() {
    let o = pathwise(&["simulate", "--drift", "bes3", "--x0", "1", "--driver", "zero", "--T", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    let last = out.lines().last().unwrap();
    let x: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!((x - 3f64.sqrt()).abs() <= 1e-6, "{x}");
}

#[test]
fn invalid_branch_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let drv = dir.path().join("d.csv");
    write_driver(&drv, 0.5);
    let src = format!("csv:{}", drv.display());
    let o = pathwise(&["construct", "--case", "ce1", "--branch", "negative", "--driver", &src]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("InvalidBranch"), "{}", stderr(&o));

    let o = pathwise(&["construct", "--case", "ce1", "--branch", "positive", "--driver", &src]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(pathwise(&["construct", "--case", "ce1", "--steps", "-1"]).status.code(), Some(2));
    assert_eq!(pathwise(&["construct", "--case", "ce1", "--steps", "0"]).status.code(), Some(2));
    assert_eq!(pathwise(&["construct", "--bogus"]).status.code(), Some(2));
    assert_eq!(pathwise(&["simulate", "--drift", "ce1", "--y", "2"]).status.code(), Some(2));
    assert_eq!(pathwise(&["simulate", "--driver", "csv:/nonexistent.csv", "--drift", "ce1"]).status.code(), Some(2));
}

#[test]
fn flags_override_the_config_file_and_everything_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 3\n[driver]\nsteps = 512\n[construct]\ncase = \"ce1\"\nbranch = \"auto\"\n").unwrap();
    let out = dir.path().join("x.csv");
    let o = pathwise(&[
        "construct",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let c = config_line(&o);
    assert_eq!(c["seed"], 7);
    assert_eq!(c["seed_source"], "flag");
    assert_eq!(c["driver"]["steps"], 512);
    assert_eq!(c["case"], "ce1");
    assert!(SamplePath::load_csv(&out, PathKind::Solution).is_ok());

    std::fs::write(&cfg, "[construct]\ncase = \"ce1\"\nunknown = 1\n").unwrap();
    let o = pathwise(&["construct", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn environment_seed_is_used_and_echoed() {
    let o = Command::new(env!("CARGO_BIN_EXE_pathwise"))
        .args(["gen-driver", "--steps", "8"])
        .env("PATHWISE_SEED", "42")
        .output()
        .unwrap();
    assert!(o.status.success());
    let c = config_line(&o);
    assert_eq!(c["seed"], 42);
    assert_eq!(c["seed_source"], "env");
}

#[test]
fn outputs_reproduce_byte_for_byte() {
    let run = || pathwise(&["construct", "--case", "ce2", "--variant", "alternative", "--seed", "9", "--steps", "512"]);
    let (a, b) = (run(), run());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn construct_then_residual_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let drv = dir.path().join("d.csv");
    let sol = dir.path().join("s.csv");
    let side = dir.path().join("s.json");
    let o = pathwise(&["gen-driver", "--seed", "4", "--steps", "1024", "--T", "3", "--out", drv.to_str().unwrap()]);
    assert!(o.status.success());
    let src = format!("csv:{}", drv.display());
    let o = pathwise(&["construct", "--case", "ce1", "--driver", &src, "--out", sol.to_str().unwrap(), "--sidecar", side.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sidecar: pathwise::Sidecar = serde_json::from_str(&std::fs::read_to_string(&side).unwrap()).unwrap();
    assert!(sidecar.residual.unwrap() <= 5e-3);
    let o = pathwise(&["residual", "--drift", "ce1", "--driver", &src, "--candidate", sol.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["pass"], true);
    assert_eq!(r["sup"], sidecar.residual.unwrap());
}

#[test]
fn suite_reports_are_json_lines_and_mutation_fails() {
    let o = pathwise(&["verify-suite", "--profile", "quick", "--tests", "cancellation,acceptance_rate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let reports: Vec<VerificationReport> = String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(reports.len(), 3);
    assert!(reports.iter().all(|r| r.pass));

    let o = pathwise(&["verify-suite", "--profile", "quick", "--tests", "cancellation", "--cancellation-coefficient", "2.1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("suite FAIL: cancellation"));
}

#[test]
fn empty_suite_selection_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    std::fs::write(&cfg, "[verify-suite]\ntests = []\n").unwrap();
    let o = pathwise(&["verify-suite", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("Usage"));
}

//! The `pathwise` command line.
//!
//! Every option can also come from a TOML file given with `--config`; a flag
//! on the command line wins over the file. The file has one table per
//! option group:
//!
//! ```toml
//! seed = 7
//!
//! [driver]
//! driver = "brownian"   # zero | brownian | csv:<path>
//! steps = 4096          # grid cells per unit of time
//! T = 3.0
//! stream = 0
//!
//! [solve]               # any SolveOptions field
//! h_base = 6.103515625e-5
//!
//! [drift]
//! drift = "bes3"
//! center = 0.0
//! side = "above"
//!
//! [construct]
//! case = "ce1"
//! branch = "auto"
//! ```
//!
//! The other subcommand tables are `[gen-driver]`, `[simulate]`,
//! `[verify-suite]` and `[residual]`. Unknown keys are rejected. The
//! resolved configuration is echoed to stderr as one JSON line prefixed by
//! `# config `. Exit codes: 0 success, 1 failed check or numerical error,
//! 2 usage error.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::constructions::{bridge_solution, construct_ce1, construct_ce2, Ce1Branch, Ce2Variant};
use crate::drifts::{DriftSpec, Side, TailSpec};
use crate::error::{Error, Result};
use crate::paths::{make_uniform_grid, refine_bridge, PathKind, RngSpec, SamplePath};
use crate::solver::{residual_sup, solve_pathwise, solve_until, ResidualOptions, SolutionPath, SolveOptions, Start};
use crate::verify::{brownian_driver, run_suite, McOptions, Profile, SuiteConfig, TestName};

/// Environment variable read for the master seed when neither flag nor file sets it.
pub const SEED_ENV: &str = "PATHWISE_SEED";

const DEFAULT_SEED: u64 = 1;
const DEFAULT_STEPS: usize = 4096;
const REFINE_TAG: u64 = 0x5245_4649;

#[derive(Debug, Parser)]
#[command(name = "pathwise", version, about = "Pathwise solutions of singular-drift SDEs")]
struct Cli {
    /// TOML file with option defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (falls back to the file, then PATHWISE_SEED, then 1).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a Brownian driver (optionally bridge-refined) to CSV.
    GenDriver {
        #[command(flatten)]
        driver: DriverArgs,
        #[command(flatten)]
        args: GenDriverArgs,
    },
    /// Solve one drift on one driver.
    Simulate {
        #[command(flatten)]
        driver: DriverArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[command(flatten)]
        drift: DriftArgs,
        #[command(flatten)]
        args: SimulateArgs,
    },
    /// Build the bridge, Ce1 or Ce2 solution.
    Construct {
        #[command(flatten)]
        driver: DriverArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[command(flatten)]
        args: ConstructArgs,
    },
    /// Run the verification suite and print one JSON report per line.
    VerifySuite {
        #[command(flatten)]
        solve: SolveArgs,
        #[command(flatten)]
        args: SuiteArgs,
    },
    /// Residual of a stored candidate against a driver.
    Residual {
        #[command(flatten)]
        driver: DriverArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[command(flatten)]
        drift: DriftArgs,
        #[command(flatten)]
        args: ResidualArgs,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DriverSource {
    Zero,
    Brownian,
    Csv(PathBuf),
}

impl FromStr for DriverSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "zero" => Ok(DriverSource::Zero),
            "brownian" => Ok(DriverSource::Brownian),
            _ => match s.strip_prefix("csv:") {
                Some(p) if !p.is_empty() => Ok(DriverSource::Csv(PathBuf::from(p))),
                _ => Err(format!("unknown driver '{s}', expected zero, brownian or csv:<path>")),
            },
        }
    }
}

impl TryFrom<String> for DriverSource {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl fmt::Display for DriverSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriverSource::Zero => f.write_str("zero"),
            DriverSource::Brownian => f.write_str("brownian"),
            DriverSource::Csv(p) => write!(f, "csv:{}", p.display()),
        }
    }
}

impl From<DriverSource> for String {
    fn from(d: DriverSource) -> String {
        d.to_string()
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DriverArgs {
    /// zero, brownian or csv:<path>.
    #[arg(long)]
    driver: Option<DriverSource>,
    /// Grid cells per unit of time.
    #[arg(long)]
    steps: Option<usize>,
    /// Horizon.
    #[arg(long = "T")]
    #[serde(rename = "T")]
    horizon: Option<f64>,
    /// Substream of the master seed used for the driver.
    #[arg(long)]
    stream: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveArgs {
    /// Largest integrator step.
    #[arg(long)]
    h_base: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DriftArgs {
    /// Catalogue name (bridge_two_sided, bes3, bridge_one_sided, no_weak,
    /// ce1, ce2, ce2_modified, reciprocal, constant) or a JSON object.
    #[arg(long)]
    drift: Option<String>,
    #[arg(long)]
    y: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    center: Option<f64>,
    #[arg(long)]
    target: Option<f64>,
    #[arg(long)]
    side: Option<Side>,
    #[arg(long)]
    coef: Option<f64>,
    #[arg(long)]
    value: Option<f64>,
    #[arg(long)]
    tail: Option<TailSpec>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenDriverArgs {
    /// Bridge-refinement levels applied to the whole driver.
    #[arg(long)]
    refine: Option<u32>,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateArgs {
    #[arg(long)]
    x0: Option<f64>,
    /// Side taken when x0 sits on a singular point or region boundary.
    #[arg(long)]
    start_side: Option<Side>,
    /// Start of the time window.
    #[arg(long)]
    t0: Option<f64>,
    /// Stop at the first crossing of this level.
    #[arg(long)]
    stop: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON sidecar with segments, hits and branch log.
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
enum Case {
    Ce1,
    Ce2,
    Bridge,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstructArgs {
    #[arg(long, value_enum)]
    case: Option<Case>,
    /// Ce1 branch: auto, positive or negative.
    #[arg(long)]
    branch: Option<Ce1Branch>,
    /// Ce2 variant: weak or alternative.
    #[arg(long)]
    variant: Option<Ce2Variant>,
    /// Bridge target.
    #[arg(long)]
    y: Option<f64>,
    /// Bridge side.
    #[arg(long)]
    side: Option<Side>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteArgs {
    /// quick or full.
    #[arg(long)]
    profile: Option<Profile>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Comma-separated subset of the tests.
    #[arg(long, value_delimiter = ',')]
    tests: Option<Vec<TestName>>,
    /// Run the negative controls (true or false).
    #[arg(long)]
    controls: Option<bool>,
    /// Coefficient c of the drift -1/(c x) in the cancellation check.
    #[arg(long)]
    cancellation_coefficient: Option<f64>,
    /// Driver grid cells per unit of time.
    #[arg(long)]
    driver_steps: Option<usize>,
    #[arg(long)]
    residual_tol: Option<f64>,
    /// JSON-lines output (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResidualArgs {
    /// Candidate solution CSV.
    #[arg(long)]
    candidate: Option<PathBuf>,
    #[arg(long)]
    t0: Option<f64>,
    /// Largest accepted residual.
    #[arg(long)]
    tol: Option<f64>,
}

macro_rules! value_parsers {
    ($($t:ty),*) => {$(
        impl clap::builder::ValueParserFactory for $t {
            type Parser = clap::builder::ValueParser;
            fn value_parser() -> Self::Parser {
                clap::builder::ValueParser::new(|s: &str| {
                    serde_json::from_value::<$t>(Value::String(s.to_string())).map_err(|e| e.to_string())
                })
            }
        }
    )*};
}

value_parsers!(Side, TailSpec, Ce1Branch, Ce2Variant, Profile, TestName);

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    seed: Option<u64>,
    driver: Option<DriverArgs>,
    solve: Option<SolveOptions>,
    drift: Option<DriftArgs>,
    gen_driver: Option<GenDriverArgs>,
    simulate: Option<SimulateArgs>,
    construct: Option<ConstructArgs>,
    verify_suite: Option<SuiteArgs>,
    residual: Option<ResidualArgs>,
}

/// Fills every `None` field of `$flag` from `$file`.
macro_rules! overlay {
    ($flag:expr, $file:expr, $($f:ident),*) => {{
        let file = $file.unwrap_or_default();
        let mut v = $flag;
        $( if v.$f.is_none() { v.$f = file.$f; } )*
        v
    }};
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let env_seed = std::env::var(SEED_ENV).ok();
    run_with(args, env_seed.as_deref(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// [`run`] with an explicit seed environment value and output streams.
pub fn run_with<I, T>(args: I, env_seed: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli, env_seed, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", e.name());
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) | Error::Parse(_) | Error::Io(_) => 2,
        _ => 1,
    }
}

fn load_file(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::usage(format!("config {}: {e}", path.display())))
}

fn resolve_seed(flag: Option<u64>, file: Option<u64>, env: Option<&str>) -> Result<(u64, &'static str)> {
    if let Some(s) = flag {
        return Ok((s, "flag"));
    }
    if let Some(s) = file {
        return Ok((s, "file"));
    }
    if let Some(s) = env {
        let v = s
            .trim()
            .parse()
            .map_err(|_| Error::usage(format!("{SEED_ENV}='{s}' is not an unsigned integer")))?;
        return Ok((v, "env"));
    }
    Ok((DEFAULT_SEED, "default"))
}

fn resolve_solve(flag: SolveArgs, file: Option<SolveOptions>) -> Result<SolveOptions> {
    let mut o = file.unwrap_or_default();
    if let Some(h) = flag.h_base {
        o.h_base = h;
    }
    o.validate()?;
    Ok(o)
}

struct DriverPlan {
    source: DriverSource,
    steps: usize,
    horizon: Option<f64>,
    stream: u64,
}

fn resolve_driver(flag: DriverArgs, file: Option<DriverArgs>) -> Result<DriverPlan> {
    let d = overlay!(flag, file, driver, steps, horizon, stream);
    let steps = d.steps.unwrap_or(DEFAULT_STEPS);
    if steps == 0 {
        return Err(Error::usage("steps must be positive"));
    }
    if let Some(t) = d.horizon {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::usage(format!("T must be positive and finite, got {t}")));
        }
    }
    Ok(DriverPlan {
        source: d.driver.unwrap_or(DriverSource::Brownian),
        steps,
        horizon: d.horizon,
        stream: d.stream.unwrap_or(0),
    })
}

impl DriverPlan {
    fn echo(&self, horizon: f64) -> Value {
        json!({"driver": self.source.to_string(), "steps": self.steps, "T": horizon, "stream": self.stream})
    }

    /// The driver covering at least `[0, horizon]`; a CSV driver keeps its own grid.
    fn build(&self, seed: u64, default_horizon: f64) -> Result<(SamplePath, f64)> {
        let horizon = self.horizon.unwrap_or(default_horizon);
        let cells = ((horizon * self.steps as f64).round() as usize).max(1);
        match &self.source {
            DriverSource::Zero => {
                let grid = make_uniform_grid(horizon, cells)?;
                Ok((SamplePath::from_fn(grid, PathKind::Driver, |_| 0.0)?, horizon))
            }
            DriverSource::Brownian => {
                Ok((brownian_driver(horizon, self.steps, RngSpec::new(seed, self.stream)), horizon))
            }
            DriverSource::Csv(p) => {
                let d = SamplePath::load_csv(p, PathKind::Driver)?;
                let horizon = self.horizon.unwrap_or(d.horizon());
                Ok((d, horizon))
            }
        }
    }
}

fn resolve_drift(flag: DriftArgs, file: Option<DriftArgs>, horizon_hint: f64) -> Result<DriftSpec> {
    let d = overlay!(flag, file, drift, y, t_end, center, target, side, coef, value, tail);
    let name = d.drift.ok_or_else(|| Error::usage("no drift given (--drift)"))?;
    let spec: DriftSpec = if name.trim_start().starts_with('{') {
        serde_json::from_str(&name).map_err(|e| Error::usage(format!("drift: {e}")))?
    } else {
        let mut m = Map::new();
        m.insert("variant".into(), Value::String(name.clone()));
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                m.insert(k.into(), v);
            }
        };
        put("y", d.y.map(Value::from));
        put("t_end", d.t_end.map(Value::from));
        put("center", d.center.map(Value::from));
        put("target", d.target.map(Value::from));
        put("side", d.side.map(|s| serde_json::to_value(s).expect("side serializes")));
        put("coef", d.coef.map(Value::from));
        put("value", d.value.map(Value::from));
        put("tail", d.tail.map(|s| serde_json::to_value(s).expect("tail serializes")));
        let defaults: Vec<(&str, Value)> = match name.as_str() {
            "bes3" => vec![("center", Value::from(0.0)), ("side", Value::from("above"))],
            "bridge_one_sided" => vec![
                ("center", Value::from(0.0)),
                ("side", Value::from("above")),
                ("t_end", Value::from(horizon_hint)),
            ],
            "bridge_two_sided" => vec![("t_end", Value::from(horizon_hint))],
            "reciprocal" => vec![("center", Value::from(0.0))],
            _ => Vec::new(),
        };
        for (k, v) in defaults {
            m.entry(k.to_string()).or_insert(v);
        }
        serde_json::from_value(Value::Object(m)).map_err(|e| Error::usage(format!("drift '{name}': {e}")))?
    };
    spec.validate()?;
    Ok(spec)
}

fn echo_config(err: &mut dyn Write, v: &Value) -> Result<()> {
    writeln!(err, "# config {v}")?;
    Ok(())
}

fn write_csv_to(path: Option<&Path>, p: &SamplePath, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(f) => p.save_csv(f),
        None => p.write_csv(&mut *out),
    }
}

fn write_sidecar(path: Option<&Path>, sol: &SolutionPath) -> Result<()> {
    if let Some(p) = path {
        std::fs::write(p, sol.sidecar_json()?)?;
    }
    Ok(())
}

fn dispatch(cli: Cli, env_seed: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let file = load_file(cli.config.as_deref())?;
    let (seed, seed_source) = resolve_seed(cli.seed, file.seed, env_seed)?;
    let base = json!({"seed": seed, "seed_source": seed_source});
    let with = |command: &str, extra: Value| {
        let mut v = base.clone();
        v["command"] = Value::from(command);
        if let (Some(o), Value::Object(e)) = (v.as_object_mut(), extra) {
            o.extend(e);
        }
        v
    };

    match cli.command {
        Command::GenDriver { driver, args } => {
            let plan = resolve_driver(driver, file.driver)?;
            let a = overlay!(args, file.gen_driver, refine, out);
            let (mut d, horizon) = plan.build(seed, 1.0)?;
            echo_config(err, &with("gen-driver", json!({"driver": plan.echo(horizon), "refine": a.refine, "out": a.out})))?;
            if let Some(levels) = a.refine.filter(|&l| l > 0) {
                let rng = RngSpec::new(seed, plan.stream).derive(REFINE_TAG);
                d = refine_bridge(&d, d.start(), d.horizon(), levels, rng)?;
            }
            write_csv_to(a.out.as_deref(), &d, out)?;
            Ok(0)
        }
        Command::Simulate { driver, solve, drift, args } => {
            let plan = resolve_driver(driver, file.driver)?;
            let opts = resolve_solve(solve, file.solve)?;
            let a = overlay!(args, file.simulate, x0, start_side, t0, stop, out, sidecar);
            let (d, horizon) = plan.build(seed, 1.0)?;
            let spec = resolve_drift(drift, file.drift, horizon)?;
            let x0 = a.x0.unwrap_or(0.0);
            let start = match a.start_side {
                Some(s) => Start::new(x0, s),
                None => Start::from(x0),
            };
            let t0 = a.t0.unwrap_or(d.start());
            echo_config(
                err,
                &with(
                    "simulate",
                    json!({"driver": plan.echo(horizon), "solve": opts, "drift": spec, "x0": x0,
                           "start_side": start.side, "t0": t0, "stop": a.stop, "out": a.out, "sidecar": a.sidecar}),
                ),
            )?;
            let sol = match a.stop {
                Some(level) => solve_until(&spec, &d, start, (t0, horizon), level, &opts)?,
                None => solve_pathwise(&spec, &d, start, (t0, horizon), &opts)?,
            };
            write_csv_to(a.out.as_deref(), &sol.path, out)?;
            write_sidecar(a.sidecar.as_deref(), &sol)?;
            Ok(0)
        }
        Command::Construct { driver, solve, args } => {
            let plan = resolve_driver(driver, file.driver)?;
            let opts = resolve_solve(solve, file.solve)?;
            let a = overlay!(args, file.construct, case, branch, variant, y, side, out, sidecar);
            let case = a.case.ok_or_else(|| Error::usage("no construction given (--case)"))?;
            let (spec, end) = match case {
                Case::Ce1 => (DriftSpec::Ce1, 3.0),
                Case::Ce2 => (DriftSpec::Ce2, 4.0),
                Case::Bridge => (DriftSpec::BridgeTwoSided { y: a.y.unwrap_or(1.0), t_end: 1.0 }, 1.0),
            };
            let (d, horizon) = plan.build(seed, end)?;
            if horizon < end {
                return Err(Error::usage(format!("the {case:?} construction needs T >= {end}, got {horizon}")));
            }
            let d = d.restrict(0.0, end)?;
            echo_config(
                err,
                &with(
                    "construct",
                    json!({"driver": plan.echo(end), "solve": opts, "case": case,
                           "branch": a.branch.unwrap_or_default(), "variant": a.variant.unwrap_or_default(),
                           "y": a.y.unwrap_or(1.0), "side": a.side.unwrap_or(Side::Above),
                           "out": a.out, "sidecar": a.sidecar}),
                ),
            )?;
            let mut sol = match case {
                Case::Ce1 => construct_ce1(&d, a.branch.unwrap_or_default(), &opts)?,
                Case::Ce2 => construct_ce2(&d, a.variant.unwrap_or_default(), &opts)?,
                Case::Bridge => bridge_solution(a.side.unwrap_or(Side::Above), a.y.unwrap_or(1.0), &d, &opts)?,
            };
            let res = residual_sup(&spec, &sol.path, &d, (0.0, end), &ResidualOptions::from(&opts))?;
            sol.residual = Some(res.sup);
            write_csv_to(a.out.as_deref(), &sol.path, out)?;
            write_sidecar(a.sidecar.as_deref(), &sol)?;
            let summary = json!({"final_value": sol.final_value(), "x1": sol.eval(1.0)?, "residual": res.sup,
                                 "branch_log": sol.branch_log});
            writeln!(err, "# result {summary}")?;
            Ok(0)
        }
        Command::VerifySuite { solve, args } => {
            let opts = resolve_solve(solve, file.solve)?;
            let a = overlay!(
                args,
                file.verify_suite,
                profile,
                threads,
                tests,
                controls,
                cancellation_coefficient,
                driver_steps,
                residual_tol,
                out
            );
            let defaults = SuiteConfig::default();
            let mc = McOptions {
                solve: opts,
                driver_steps: a.driver_steps.unwrap_or(defaults.mc.driver_steps),
                residual_tol: a.residual_tol.unwrap_or(defaults.mc.residual_tol),
            };
            if mc.driver_steps == 0 {
                return Err(Error::usage("driver_steps must be positive"));
            }
            let cfg = SuiteConfig {
                seed,
                profile: a.profile.unwrap_or(defaults.profile),
                threads: a.threads,
                tests: a.tests,
                controls: a.controls.unwrap_or(defaults.controls),
                cancellation_coefficient: a.cancellation_coefficient.unwrap_or(defaults.cancellation_coefficient),
                mc,
            };
            echo_config(err, &with("verify-suite", json!({"suite": cfg, "out": a.out})))?;
            let outcome = run_suite(&cfg)?;
            let mut lines = String::new();
            for r in &outcome.reports {
                lines.push_str(&r.to_json_line());
                lines.push('\n');
            }
            match &a.out {
                Some(p) => std::fs::write(p, lines)?,
                None => out.write_all(lines.as_bytes())?,
            }
            let failed: Vec<&str> = outcome.reports.iter().filter(|r| !r.pass).map(|r| r.test.as_str()).collect();
            if failed.is_empty() {
                writeln!(err, "# suite pass ({} reports)", outcome.reports.len())?;
                Ok(0)
            } else {
                writeln!(err, "# suite FAIL: {}", failed.join(", "))?;
                Ok(1)
            }
        }
        Command::Residual { driver, solve, drift, args } => {
            let plan = resolve_driver(driver, file.driver)?;
            let opts = resolve_solve(solve, file.solve)?;
            let a = overlay!(args, file.residual, candidate, t0, tol);
            let path = a.candidate.ok_or_else(|| Error::usage("no candidate given (--candidate)"))?;
            let cand = SamplePath::load_csv(&path, PathKind::Solution)?;
            let (d, horizon) = plan.build(seed, cand.horizon())?;
            let horizon = plan.horizon.unwrap_or(horizon.min(cand.horizon()));
            let spec = resolve_drift(drift, file.drift, horizon)?;
            let t0 = a.t0.unwrap_or(cand.start().max(d.start()));
            let tol = a.tol.unwrap_or(5e-3);
            echo_config(
                err,
                &with(
                    "residual",
                    json!({"driver": plan.echo(horizon), "solve": opts, "drift": spec,
                           "candidate": path, "t0": t0, "tol": tol}),
                ),
            )?;
            let r = residual_sup(&spec, &cand, &d, (t0, horizon), &ResidualOptions::from(&opts))?;
            let pass = r.sup <= tol;
            let mut v = serde_json::to_value(&r).expect("residual serializes");
            v["tol"] = Value::from(tol);
            v["pass"] = Value::from(pass);
            writeln!(out, "{v}")?;
            Ok(if pass { 0 } else { 1 })
        }
    }
}

//! Command-line front end.
//!
//! Every option can come from the command line or from a JSON file passed
//! with `--config`; command-line values win. Exit codes: 0 HOLDS, 1 FAILS,
//! 2 INCONCLUSIVE, 3 and up for errors, 64 for a malformed configuration.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expsum::ScanOptions;
use crate::oracle::mc_survival;
use crate::orders::{
    convex_check, convex_check_at, sign_map, star_check, star_check_n, violation_search,
    OrderOptions, OrderVerdict, Status,
};
use crate::systems::{failure_rate, HazardVector};

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_RESOLUTION: (usize, usize) = (100, 200);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Star transform order between two systems.
    CheckStar,
    /// Convex transform order, or a single (a, b) check with --a and --b.
    CheckConvex,
    /// Constructive search for a convex-order violation.
    FindCounterexample,
    /// Signs of V on an (a, x) grid, as CSV.
    SignMap,
    /// Failure rate of the system with rates --lambda at --x.
    FailureRate,
    /// Monte Carlo check of the survival function of --lambda.
    Simulate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// One run, as read from the command line and/or a config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub lambda: Vec<f64>,
    pub theta: Vec<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub a_min: Option<f64>,
    pub a_max: Option<f64>,
    pub x_max: Option<f64>,
    pub x: Option<f64>,
    /// `(a rows, x columns)` for the sign map.
    pub resolution: Option<(usize, usize)>,
    pub sign_floor: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub timing: bool,
}

#[derive(Debug, Parser)]
#[command(
    name = "transform-orders",
    version,
    about = "Star and convex transform orders for parallel systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    opts: Flags,
}

#[derive(Debug, Args)]
struct Flags {
    /// Component rates of X, comma separated.
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    lambda: Option<Vec<f64>>,
    /// Component rates of Y, comma separated.
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    theta: Option<Vec<f64>>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long, global = true)]
    a_min: Option<f64>,
    #[arg(long, global = true)]
    a_max: Option<f64>,
    #[arg(long, global = true)]
    x_max: Option<f64>,
    /// Evaluation point for failure-rate.
    #[arg(long, global = true, allow_negative_numbers = true)]
    x: Option<f64>,
    /// Sign-map grid as ROWSxCOLS, or N for N×N.
    #[arg(long, global = true, value_parser = parse_resolution)]
    resolution: Option<(usize, usize)>,
    #[arg(long, global = true)]
    sign_floor: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo sample count for simulate.
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Record wall-clock time in the report.
    #[arg(long, global = true)]
    timing: bool,
    /// JSON file with RunConfig fields; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

fn parse_resolution(s: &str) -> std::result::Result<(usize, usize), String> {
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|e| format!("bad resolution {s:?}: {e}"))
    };
    match s.split_once(['x', 'X']) {
        Some((r, c)) => Ok((parse(r)?, parse(c)?)),
        None => parse(s).map(|n| (n, n)),
    }
}

/// Failure to build a valid [`RunConfig`].
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

impl RunConfig {
    /// Overlay explicitly given flags on `self`.
    fn merge(mut self, f: Flags, command: Option<Command>) -> Self {
        self.command = command.or(self.command);
        if let Some(v) = f.lambda {
            self.lambda = v;
        }
        if let Some(v) = f.theta {
            self.theta = v;
        }
        macro_rules! take {
            ($($field:ident),*) => { $( if f.$field.is_some() { self.$field = f.$field; } )* };
        }
        take!(a, b, a_min, a_max, x_max, x, resolution, sign_floor, seed, samples, format, out);
        self.timing |= f.timing;
        self
    }

    pub fn validate(&self) -> std::result::Result<Command, UsageError> {
        let cmd = self.command.ok_or_else(|| usage("no command given"))?;
        let rates = |name: &str, v: &[f64]| -> std::result::Result<(), UsageError> {
            if v.is_empty() {
                return Err(usage(format!("--{name} is required")));
            }
            if let Some(bad) = v.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
                return Err(usage(format!(
                    "--{name} rates must be positive and finite, got {bad}"
                )));
            }
            Ok(())
        };
        rates("lambda", &self.lambda)?;
        let needs_theta = !matches!(cmd, Command::FailureRate | Command::Simulate);
        if needs_theta {
            rates("theta", &self.theta)?;
        }
        let positive = |name: &str, v: Option<f64>| match v {
            Some(v) if !(v.is_finite() && v > 0.0) => {
                Err(usage(format!("--{name} must be positive, got {v}")))
            }
            _ => Ok(()),
        };
        positive("a", self.a)?;
        positive("a-min", self.a_min)?;
        positive("a-max", self.a_max)?;
        positive("x-max", self.x_max)?;
        positive("sign-floor", self.sign_floor)?;
        if let Some(b) = self.b {
            if !(b.is_finite() && b >= 0.0) {
                return Err(usage(format!("--b must be >= 0, got {b}")));
            }
        }
        if let (Some(lo), Some(hi)) = (self.a_min, self.a_max) {
            if lo > hi {
                return Err(usage(format!("--a-min {lo} exceeds --a-max {hi}")));
            }
        }
        if let Some((r, c)) = self.resolution {
            if r < 2 || c < 2 {
                return Err(usage("--resolution must be at least 2x2"));
            }
        }
        if let Some(n) = self.samples {
            if n < 1000 {
                return Err(usage(format!("--samples must be at least 1000, got {n}")));
            }
        }
        match cmd {
            Command::CheckConvex if self.a.is_some() != self.b.is_some() => {
                Err(usage("check-convex needs both --a and --b, or neither"))
            }
            Command::FailureRate if self.x.is_none() => Err(usage("failure-rate needs --x")),
            _ => Ok(cmd),
        }
    }
}

/// Parse arguments (and the optional config file) into a [`RunConfig`].
pub fn parse_args<I, T>(args: I) -> std::result::Result<RunConfig, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| usage(e.to_string()))?;
    let base = match &cli.opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str::<RunConfig>(&text)
                .map_err(|e| usage(format!("malformed config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    Ok(base.merge(cli.opts, cli.command))
}

/// Multiplier for `sign_floor` from the `TOL_OVERRIDE` environment variable.
fn tol_override() -> std::result::Result<f64, UsageError> {
    match std::env::var("TOL_OVERRIDE") {
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(k) if k.is_finite() && k > 0.0 => Ok(k),
            _ => Err(usage(format!(
                "TOL_OVERRIDE must be a positive number, got {s:?}"
            ))),
        },
        Err(_) => Ok(1.0),
    }
}

/// A finished run: the rendered report and the exit code it maps to.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub report: String,
    pub summary: String,
}

fn order_options(cfg: &RunConfig, tol_scale: f64) -> OrderOptions {
    let mut opts = OrderOptions::default();
    opts.scan.sign_floor = cfg.sign_floor.unwrap_or(ScanOptions::default().sign_floor) * tol_scale;
    opts
}

fn hazard(rates: &[f64]) -> Result<HazardVector> {
    HazardVector::new(rates.to_vec())
}

fn status_code(s: Status) -> i32 {
    match s {
        Status::Holds => EXIT_HOLDS,
        Status::Fails => EXIT_FAILS,
        Status::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

/// Exit code for a library error.
pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::Inconclusive { .. } | Error::Search { .. } => EXIT_INCONCLUSIVE,
        Error::Domain(_) => 3,
        Error::Size { .. } => 4,
        Error::Overflow { .. } => 5,
        Error::Degenerate(_) => 6,
        Error::Unsupported(_) => 7,
        Error::Io(_) => 8,
        Error::Json(_) => 9,
    }
}

fn verdict_json(
    v: &OrderVerdict,
    timing: Value,
    echo: &RunConfig,
    details: Option<Value>,
) -> Result<Value> {
    let mut out = json!({
        "verdict": v.status,
        "certificate": v.certificate,
        "witness": v.witness.as_ref().map(|w| json!({
            "a": w.a,
            "b": w.b,
            "pattern": w.pattern.regions,
        })),
        "timing": timing,
        "config_echo": echo,
        "spot_checks": v.spot_checks,
        "suspect_region": v.suspect_region,
        "notes": v.notes,
    });
    if let Some(d) = details {
        out["details"] = d;
    }
    Ok(out)
}

fn verdict_csv(v: &OrderVerdict) -> String {
    let mut s = String::from("verdict,certificate,a,b,pattern\n");
    let status = serde_json::to_value(v.status)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    let (a, b, p) = match &v.witness {
        Some(w) => (w.a.to_string(), w.b.to_string(), w.pattern.signature()),
        None => (String::new(), String::new(), String::new()),
    };
    let _ = writeln!(
        s,
        "{status},{},{a},{b},\"{p}\"",
        v.certificate.as_deref().unwrap_or("")
    );
    s
}

fn summarize(v: &OrderVerdict) -> String {
    let mut s = format!("{:?}", v.status).to_uppercase();
    if let Some(c) = &v.certificate {
        let _ = write!(s, " (certificate: {c})");
    }
    if let Some(w) = &v.witness {
        let _ = write!(
            s,
            " witness a = {}, b = {}, pattern {}",
            w.a, w.b, w.pattern
        );
    }
    s
}

fn render(value: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Execute a validated configuration.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let cmd = cfg.validate().map_err(|e| Error::Domain(e.0))?;
    let tol_scale = tol_override().map_err(|e| Error::Domain(e.0))?;
    let started = Instant::now();
    let opts = order_options(cfg, tol_scale);
    let format = cfg.format.unwrap_or(if cmd == Command::SignMap {
        Format::Csv
    } else {
        Format::Json
    });
    let timing = |t: Instant| {
        if cfg.timing {
            json!({ "elapsed_ms": t.elapsed().as_secs_f64() * 1e3 })
        } else {
            Value::Null
        }
    };
    let lambda = hazard(&cfg.lambda)?;

    let verdict_outcome = |v: OrderVerdict, details: Option<Value>| -> Result<Outcome> {
        let report = match format {
            Format::Json => render(&verdict_json(&v, timing(started), cfg, details)?)?,
            Format::Csv => verdict_csv(&v),
        };
        Ok(Outcome {
            code: status_code(v.status),
            summary: summarize(&v),
            report,
        })
    };

    match cmd {
        Command::CheckStar => {
            let theta = hazard(&cfg.theta)?;
            let v = if lambda.len() == 2 && theta.len() == 2 {
                star_check(&lambda, &theta, &opts)?
            } else {
                star_check_n(&lambda, &theta, &opts)?
            };
            verdict_outcome(v, None)
        }
        Command::CheckConvex => {
            let theta = hazard(&cfg.theta)?;
            let v = match (cfg.a, cfg.b) {
                (Some(a), Some(b)) => convex_check_at(&lambda, &theta, a, b, &opts)?,
                _ => convex_check(&lambda, &theta, &opts)?,
            };
            verdict_outcome(v, None)
        }
        Command::FindCounterexample => {
            let theta = hazard(&cfg.theta)?;
            match violation_search(&lambda, &theta, &opts) {
                Ok(r) => {
                    let v = OrderVerdict::failing(r.a, r.b, r.pattern.certain_only());
                    verdict_outcome(v, Some(serde_json::to_value(&r)?))
                }
                Err(Error::Search { attempts }) => {
                    let v = OrderVerdict::inconclusive(format!(
                        "search exhausted {} seeds without a certified violation",
                        attempts.len()
                    ));
                    verdict_outcome(v, Some(json!({ "attempts": attempts })))
                }
                Err(e) => Err(e),
            }
        }
        Command::SignMap => {
            let theta = hazard(&cfg.theta)?;
            let t1 = theta.smallest();
            let a_range = (
                cfg.a_min.unwrap_or(0.5 * t1 / lambda.largest()),
                cfg.a_max.unwrap_or(1.25f64.max(t1 / lambda.smallest())),
            );
            let x_range = (0.0, cfg.x_max.unwrap_or(10.0 / t1));
            let b = cfg.b.unwrap_or(0.0);
            let m = sign_map(
                &lambda,
                &theta,
                b,
                a_range,
                x_range,
                cfg.resolution.unwrap_or(DEFAULT_RESOLUTION),
                &opts.scan,
            )?;
            let report = match format {
                Format::Csv => m.to_csv(),
                Format::Json => render(
                    &json!({ "sign_map": m, "timing": timing(started), "config_echo": cfg }),
                )?,
            };
            let summary = format!(
                "sign map: {} rows x {} columns at b = {b}",
                m.a_values.len(),
                m.x_values.len()
            );
            Ok(Outcome {
                code: 0,
                report,
                summary,
            })
        }
        Command::FailureRate => {
            let x = cfg.x.unwrap_or_default();
            let r = failure_rate(&lambda, x)?;
            let report = match format {
                Format::Csv => format!("x,failure_rate\n{x},{r}\n"),
                Format::Json => render(
                    &json!({ "x": x, "failure_rate": r, "timing": timing(started), "config_echo": cfg }),
                )?,
            };
            Ok(Outcome {
                code: 0,
                report,
                summary: format!("failure rate at x = {x}: {r}"),
            })
        }
        Command::Simulate => {
            let n = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
            let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
            let r = mc_survival(&lambda, n, seed)?;
            let report = match format {
                Format::Csv => {
                    let mut s = String::from("x,empirical,analytic\n");
                    for ((x, e), a) in r.grid_x.iter().zip(&r.empirical).zip(&r.analytic) {
                        let _ = writeln!(s, "{x},{e},{a}");
                    }
                    s
                }
                Format::Json => render(
                    &json!({ "simulation": r, "timing": timing(started), "config_echo": cfg }),
                )?,
            };
            let summary = format!("sup distance over {n} samples: {}", r.sup_distance);
            Ok(Outcome {
                code: 0,
                report,
                summary,
            })
        }
    }
}

/// Full program: parse, run, write the report, return the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    if let Err(e) = Cli::try_parse_from(&args) {
        use clap::error::ErrorKind;
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            let _ = e.print();
            return 0;
        }
    }
    let cfg = match parse_args(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_USAGE;
        }
    };
    if let Err(e) = cfg.validate().and_then(|_| tol_override()) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    match run(&cfg) {
        Ok(out) => {
            match &cfg.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &out.report) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return error_code(&Error::Io(e));
                    }
                    println!("{}", out.summary);
                }
                None => {
                    let mut stdout = std::io::stdout().lock();
                    let _ = stdout
                        .write_all(out.report.as_bytes())
                        .and_then(|_| stdout.flush());
                    eprintln!("{}", out.summary);
                }
            }
            out.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            error_code(&e)
        }
    }
}

//! `arith`: single evaluations, range sweeps and verification suites with
//! JSON, CSV or text reports.
//!
//! Exit codes: 0 when every record passes, 1 when any record fails its
//! oracle comparison, 2 on usage or configuration errors.

mod commands;
mod range;
mod report;
mod verify;

use std::io::{self, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use report::{num, Format, Report};

#[derive(Debug, Parser)]
#[command(name = "arith", version, about = "Analytic arithmetic sums checked against brute-force oracles")]
struct Cli {
    /// Values of t, comma separated (e.g. 0.8,1.0,1.5).
    #[arg(long, global = true, default_value = "1.0")]
    t: String,

    /// Absolute tolerance of each evaluation and of the oracle comparison.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,

    #[arg(long, global = true, default_value_t = 1_000_000)]
    max_terms: usize,

    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,

    /// Worker threads; the ARITH_JOBS environment variable takes precedence.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Report ms = 0 so that repeated runs are byte-identical.
    #[arg(long, global = true)]
    no_timing: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Square indicators q_{k,s}(N) against the definition.
    EvalQ {
        #[arg(long, default_value = "1")]
        k: String,
        #[arg(long, default_value = "1")]
        s: String,
        #[arg(long = "N", visible_alias = "n")]
        n: String,
    },
    /// Weighted sums over solutions of da² + kb² = N, kb² − da² = N, or over
    /// divisor pairs of N.
    Sum {
        #[arg(long, value_enum)]
        kind: SumKind,
        #[arg(long, default_value = "1")]
        d: String,
        #[arg(long, default_value = "1")]
        k: String,
        #[arg(long = "N", visible_alias = "n")]
        n: String,
        /// unit, alternating, reciprocal, geometric or zero.
        #[arg(long, default_value = "unit")]
        weight: String,
        /// closed: closed-form inner sums (unit and alternating weights);
        /// grouped: one shifted indicator per a. Defaults to closed where
        /// it applies.
        #[arg(long, value_enum)]
        method: Option<Method>,
        /// Enumeration horizon in b for the difference kind.
        #[arg(long, default_value_t = 100_000)]
        b_horizon: u64,
    },
    /// σ(N) from shifted indicators against divisor enumeration.
    Sigma {
        #[arg(long = "N", visible_alias = "n")]
        n: String,
    },
    /// Margins of σ(N) < H_N + e^{H_N} ln H_N.
    Rh {
        #[arg(long)]
        from: u64,
        #[arg(long)]
        to: u64,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
    },
    /// Identity and oracle suites.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: verify::Suite,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SumKind {
    Squares,
    Difference,
    DivisorPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Closed,
    Grouped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Analytic,
    Exact,
}

/// Validated global options.
pub struct Settings {
    pub ts: Vec<f64>,
    pub tol: f64,
    pub max_terms: usize,
    pub timing: bool,
    pool: rayon::ThreadPool,
    jobs: usize,
}

impl Settings {
    fn from_cli(cli: &Cli) -> Result<Self, String> {
        let ts = range::parse_positive_reals(&cli.t, "t")?;
        if !(cli.tol > 0.0 && cli.tol.is_finite()) {
            return Err(format!("tol must be positive, got {}", cli.tol));
        }
        if cli.max_terms == 0 {
            return Err("max-terms must be positive".into());
        }
        let jobs = match std::env::var("ARITH_JOBS") {
            Ok(v) => v.trim().parse::<usize>().map_err(|_| format!("ARITH_JOBS is not a count: {v:?}"))?,
            Err(_) => cli.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        };
        if jobs == 0 {
            return Err("the worker count must be at least 1".into());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| format!("cannot start {jobs} workers: {e}"))?;
        Ok(Self { ts, tol: cli.tol, max_terms: cli.max_terms, timing: !cli.no_timing, pool, jobs })
    }

    pub fn policy(&self, tol: f64) -> arith::TruncationPolicy {
        arith::TruncationPolicy { max_terms: self.max_terms, ..Default::default() }.with_tol(tol)
    }

    fn config(&self, cli: &Cli, command: &str, args: Vec<(&str, Value)>) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("command".into(), Value::from(command));
        for (k, v) in args {
            m.insert(k.into(), v);
        }
        m.insert("t".into(), Value::Array(self.ts.iter().map(|&t| num(t)).collect()));
        m.insert("tol".into(), num(self.tol));
        m.insert("max_terms".into(), Value::from(self.max_terms));
        m.insert("format".into(), Value::from(cli.format.name()));
        m.insert("jobs".into(), Value::from(self.jobs));
        m
    }
}

fn run(cli: &Cli) -> Result<Report, String> {
    let s = Settings::from_cli(cli)?;
    let text = |v: &str| Value::from(v);
    Ok(match &cli.command {
        Command::EvalQ { k, s: sv, n } => {
            let config = s.config(cli, "eval-q", vec![("k", text(k)), ("s", text(sv)), ("N", text(n))]);
            commands::eval_q(&s, config, k, sv, n)?
        }
        Command::Sum { kind, d, k, n, weight, method, b_horizon } => {
            let args = commands::SumArgs { kind: *kind, d, k, n, weight, method: *method, b_horizon: *b_horizon };
            let config = s.config(
                cli,
                "sum",
                vec![
                    ("kind", text(kind.to_possible_value().expect("named").get_name())),
                    ("d", text(d)),
                    ("k", text(k)),
                    ("N", text(n)),
                    ("weight", text(weight)),
                    ("method", method.map_or(Value::Null, |m| text(m.to_possible_value().expect("named").get_name()))),
                    ("b_horizon", Value::from(*b_horizon)),
                ],
            );
            commands::sum(&s, config, &args)?
        }
        Command::Sigma { n } => {
            let config = s.config(cli, "sigma", vec![("N", text(n))]);
            commands::sigma(&s, config, n)?
        }
        Command::Rh { from, to, mode } => {
            let name = mode.to_possible_value().expect("named").get_name().to_string();
            let config =
                s.config(cli, "rh", vec![("from", Value::from(*from)), ("to", Value::from(*to)), ("mode", text(&name))]);
            commands::rh(&s, config, *from, *to, *mode)?
        }
        Command::Verify { suite } => {
            let config =
                s.config(cli, "verify", vec![("suite", text(suite.name()))]);
            verify::run(&s, config, *suite)
        }
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let report = match run(&cli) {
        Ok(r) => r,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    match report.write(cli.format, &mut out).and_then(|_| out.flush()) {
        // a closed pipe (`| head`) is the reader's choice, not an error
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
        Err(e) => {
            eprintln!("error: cannot write report: {e}");
            return ExitCode::from(2);
        }
        Ok(()) => {}
    }
    if report.failures() > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

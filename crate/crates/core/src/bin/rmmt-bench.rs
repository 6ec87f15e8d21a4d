use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;
use std::time::Duration;

use clap::{ArgAction, Parser, ValueEnum};

use rmmt::bench::{emit_csv, run_benchmark_on, BenchConfig, BenchRecord, InputSpec};
use rmmt::engine::{ConcurrencyMode, MAX_STANDARD_RETRIES};
use rmmt::tree::{Rmmt, DEFAULT_LEAF_FILL};
use rmmt::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Rwlock,
    Speculative,
    Both,
}

/// Concurrent workload benchmark over a dynamic balanced-parentheses tree.
///
/// List-valued options take comma-separated values and are swept as a grid.
#[derive(Debug, Parser)]
#[command(name = "rmmt-bench", version)]
struct Cli {
    /// Concurrency modes to run.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "both")]
    mode: Vec<ModeArg>,

    /// Worker counts.
    #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,50,60,70,80,90,100,110,120,130,140,150,160,170,180,190,200,210,220,230,240,250,260")]
    threads: Vec<usize>,

    /// Seconds per run.
    #[arg(long, default_value_t = 10.0)]
    duration: f64,

    /// Writer probabilities in [0, 1].
    #[arg(long = "write-pct", value_delimiter = ',', default_value = "0.1,0.3,0.5")]
    write_pct: Vec<f64>,

    /// Speculative retries before the fallback lock (ignored in rwlock mode).
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    retries: Vec<u32>,

    /// Input tree: XML, parenthesis text or packed file; `-` for stdin.
    #[arg(long, conflicts_with = "random_nodes")]
    input: Option<String>,

    /// Generate a uniformly random tree with this many nodes.
    #[arg(long = "random-nodes", default_value_t = 100_000)]
    random_nodes: usize,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Repetitions per configuration; a mean row follows them.
    #[arg(long, default_value_t = 3)]
    reps: usize,

    /// CSV destination (default: stdout).
    #[arg(long)]
    csv: Option<String>,

    /// Check the tree structure after every run.
    #[arg(long, action = ArgAction::Set, default_value_t = true)]
    validate: bool,

    /// Exponential backoff between aborted speculative attempts.
    #[arg(long)]
    backoff: bool,
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("rmmt-bench: {msg}");
    ExitCode::from(code)
}

fn modes(cli: &Cli) -> Vec<ConcurrencyMode> {
    let mut out = Vec::new();
    let want = |m: ModeArg| cli.mode.contains(&m) || cli.mode.contains(&ModeArg::Both);
    if want(ModeArg::Rwlock) {
        out.push(ConcurrencyMode::GlobalRwLock);
    }
    if want(ModeArg::Speculative) {
        out.extend(cli.retries.iter().map(|&r| ConcurrencyMode::Speculative { retry_limit: r }));
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };

    if !(cli.duration.is_finite() && cli.duration > 0.0) {
        return fail(EXIT_CONFIG, format!("duration {} must be a positive number of seconds", cli.duration));
    }
    let input = match &cli.input {
        Some(p) => InputSpec::Path(p.clone()),
        None => InputSpec::Random { nodes: cli.random_nodes },
    };
    let base = BenchConfig {
        duration: Duration::from_secs_f64(cli.duration),
        input,
        seed: cli.seed,
        repetitions: cli.reps,
        validate: cli.validate,
        backoff: cli.backoff,
        ..BenchConfig::default()
    };

    let mut grid = Vec::new();
    for mode in modes(&cli) {
        for &threads in &cli.threads {
            for &write_pct in &cli.write_pct {
                let cfg = BenchConfig { mode, threads, write_pct, ..base.clone() };
                if let Err(e) = cfg.check() {
                    return fail(EXIT_CONFIG, e);
                }
                grid.push(cfg);
            }
        }
    }
    if grid.is_empty() {
        return fail(EXIT_CONFIG, "nothing to run");
    }
    if cli.retries.iter().any(|&r| r > MAX_STANDARD_RETRIES) {
        eprintln!("rmmt-bench: note: retry limits above {MAX_STANDARD_RETRIES} are outside the standard configuration");
    }

    let seq = match base.load_input() {
        Ok(s) => s,
        Err(e) => return fail(EXIT_INPUT, e),
    };
    let tree = match Rmmt::build(&seq, DEFAULT_LEAF_FILL) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_INPUT, e),
    };
    eprintln!("rmmt-bench: {} parentheses, tree height {}, {} configurations", tree.total_size(), tree.height(), grid.len());

    let mut records: Vec<BenchRecord> = Vec::new();
    let mut invalid = 0;
    for cfg in &grid {
        let outcome = match run_benchmark_on(cfg, &tree) {
            Ok(o) => o,
            Err(e) => return fail(EXIT_CONFIG, e),
        };
        eprintln!(
            "rmmt-bench: {} retries={} threads={} write_pct={}: {:.0} ops/s",
            cfg.mode.name(),
            cfg.mode.retry_limit(),
            cfg.threads,
            cfg.write_pct,
            outcome.mean.throughput
        );
        if !outcome.all_valid() {
            invalid += 1;
        }
        records.extend(outcome.records());
    }

    let out: Box<dyn Write> = match &cli.csv {
        None => Box::new(io::stdout().lock()),
        Some(p) => match File::create(p) {
            Ok(f) => Box::new(BufWriter::new(f)),
            Err(e) => return fail(EXIT_CONFIG, format!("{p}: {e}")),
        },
    };
    if let Err(e) = emit_csv(&records, out) {
        let code = if matches!(e, Error::Accounting(_)) { EXIT_VALIDATION } else { EXIT_CONFIG };
        return fail(code, e);
    }
    if invalid > 0 {
        return fail(EXIT_VALIDATION, format!("{invalid} configuration(s) failed the post-run structural check"));
    }
    ExitCode::SUCCESS
}

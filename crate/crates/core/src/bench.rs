//! Timed mixed read/write workload over a shared tree.
//!
//! Each worker loops until the run time is up. Per iteration it becomes a
//! reader with probability `1 - write_pct` (one random navigation query) or
//! a writer (random leaf insert or leaf-pair delete, 50/50), then spends a
//! fixed quantum of work on a private array. The quantum is calibrated before
//! the run so that this non-critical work is about 1% of a worker's time when
//! uncontended.

use std::hint::black_box;
use std::io::Write;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Barrier;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bp::ParenSeq;
use crate::engine::{ConcurrencyMode, Engine, EngineOptions, TxnStats};
use crate::error::{Error, Result};
use crate::ingest;
use crate::tree::{NavKind, Query, Rmmt, Update, DEFAULT_LEAF_FILL};

pub const CSV_HEADER: &str =
    "mode,threads,duration_s,write_pct,retries,rep,ops_total,ops_read,ops_write,fast_commits,fallback_commits,aborts,throughput_ops_s";

/// Share of worker time spent outside the tree.
pub const NONCRITICAL_SHARE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InputSpec {
    /// XML, parenthesis text or packed file; `-` reads standard input.
    Path(String),
    /// Uniformly random tree with this many nodes, generated from the seed.
    Random { nodes: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub mode: ConcurrencyMode,
    pub threads: usize,
    pub duration: Duration,
    pub write_pct: f64,
    pub input: InputSpec,
    pub seed: u64,
    pub repetitions: usize,
    pub validate: bool,
    pub backoff: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            mode: ConcurrencyMode::Speculative { retry_limit: 2 },
            threads: 10,
            duration: Duration::from_secs(10),
            write_pct: 0.1,
            input: InputSpec::Random { nodes: 100_000 },
            seed: 1,
            repetitions: 3,
            validate: true,
            backoff: false,
        }
    }
}

impl BenchConfig {
    pub fn check(&self) -> Result<()> {
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if self.duration.is_zero() {
            return Err(Error::Config("duration must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.write_pct) {
            return Err(Error::Config(format!("write_pct {} outside [0, 1]", self.write_pct)));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        Ok(())
    }

    pub fn load_input(&self) -> Result<ParenSeq> {
        match &self.input {
            InputSpec::Path(p) => Ok(ingest::load(p)?.seq),
            InputSpec::Random { nodes } => Ok(ingest::random_balanced(*nodes, self.seed).seq),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rep {
    Run(usize),
    Mean,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub mode: ConcurrencyMode,
    pub threads: usize,
    pub duration_s: f64,
    pub write_pct: f64,
    pub rep: Rep,
    pub ops_total: u64,
    pub ops_read: u64,
    pub ops_write: u64,
    pub fast_commits: u64,
    pub fallback_commits: u64,
    pub aborts: u64,
    pub wall_seconds: f64,
    pub throughput: f64,
    /// Post-run structural check; `None` when disabled.
    pub valid: Option<bool>,
}

impl BenchRecord {
    pub fn retries(&self) -> u32 {
        self.mode.retry_limit()
    }

    fn from_stats(cfg: &BenchConfig, rep: usize, s: &TxnStats, wall: f64, valid: Option<bool>) -> Self {
        BenchRecord {
            mode: cfg.mode,
            threads: cfg.threads,
            duration_s: cfg.duration.as_secs_f64(),
            write_pct: cfg.write_pct,
            rep: Rep::Run(rep),
            ops_total: s.ops(),
            ops_read: s.reads_done,
            ops_write: s.writes_done,
            fast_commits: s.fast_commits,
            fallback_commits: s.fallback_commits,
            aborts: s.aborts,
            wall_seconds: wall,
            throughput: s.ops() as f64 / wall,
            valid,
        }
    }

    /// Mean over runs. Counts are rounded; the totals are then derived from
    /// the rounded parts so the accounting identities stay exact.
    pub fn mean(runs: &[BenchRecord]) -> Option<BenchRecord> {
        let first = runs.first()?;
        let k = runs.len() as f64;
        let avg = |f: fn(&BenchRecord) -> u64| (runs.iter().map(f).sum::<u64>() as f64 / k).round() as u64;
        let ops_read = avg(|r| r.ops_read);
        let ops_write = avg(|r| r.ops_write);
        let ops_total = ops_read + ops_write;
        let fast = avg(|r| r.fast_commits).min(ops_total);
        let wall = runs.iter().map(|r| r.wall_seconds).sum::<f64>() / k;
        let aborts = if first.mode == ConcurrencyMode::GlobalRwLock { 0 } else { avg(|r| r.aborts) };
        let fallback_commits = ops_total - fast;
        let valid = runs.iter().try_fold(true, |acc, r| r.valid.map(|v| acc && v));
        Some(BenchRecord {
            rep: Rep::Mean,
            ops_total,
            ops_read,
            ops_write,
            fast_commits: fast,
            fallback_commits,
            aborts,
            wall_seconds: wall,
            throughput: ops_total as f64 / wall,
            valid,
            ..first.clone()
        })
    }

    /// Checks the record's accounting identities.
    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Accounting(m));
        if self.ops_total != self.ops_read + self.ops_write {
            return bad(format!("ops_total {} != ops_read {} + ops_write {}", self.ops_total, self.ops_read, self.ops_write));
        }
        if self.fast_commits + self.fallback_commits != self.ops_total {
            return bad(format!(
                "fast_commits {} + fallback_commits {} != ops_total {}",
                self.fast_commits, self.fallback_commits, self.ops_total
            ));
        }
        if self.mode == ConcurrencyMode::GlobalRwLock && (self.aborts != 0 || self.fallback_commits != 0) {
            return bad("lock mode reported aborts or fallback commits".into());
        }
        let want = self.ops_total as f64 / self.wall_seconds;
        if !self.wall_seconds.is_finite() || self.wall_seconds <= 0.0 || (self.throughput - want).abs() > 1e-9 * want.max(1.0) {
            return bad(format!("throughput {} != ops_total / wall_seconds {want}", self.throughput));
        }
        Ok(())
    }
}

/// Formats a fraction with at most six decimals.
fn frac(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

/// Writes the CSV header and one row per record. Nothing is written if any
/// record breaks the accounting identities.
pub fn emit_csv<W: Write>(records: &[BenchRecord], mut out: W) -> Result<()> {
    for r in records {
        r.check()?;
    }
    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    for r in records {
        let rep = match r.rep {
            Rep::Run(i) => i.to_string(),
            Rep::Mean => "mean".into(),
        };
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.mode.name(),
            r.threads,
            frac(r.duration_s),
            frac(r.write_pct),
            r.retries(),
            rep,
            r.ops_total,
            r.ops_read,
            r.ops_write,
            r.fast_commits,
            r.fallback_commits,
            r.aborts,
            frac(r.throughput),
        ));
    }
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Read(Query),
    Write(Update),
}

/// Per-worker operation stream.
#[derive(Clone, Debug)]
pub struct WorkloadGen {
    rng: ChaCha8Rng,
    write_pct: f64,
}

const NAV_KINDS: [NavKind; 3] = [NavKind::FindClose, NavKind::Enclose, NavKind::Depth];

impl WorkloadGen {
    pub fn new(seed: u64, worker: usize, write_pct: f64) -> Self {
        WorkloadGen { rng: ChaCha8Rng::seed_from_u64(seed.wrapping_add(worker as u64)), write_pct }
    }

    pub fn next_op(&mut self) -> Op {
        let key = self.rng.gen::<u64>();
        if self.rng.gen::<f64>() < self.write_pct {
            if self.rng.gen_bool(0.5) {
                Op::Write(Update::RandomInsertLeaf { key })
            } else {
                Op::Write(Update::RandomDeleteLeaf { key })
            }
        } else {
            let kind = NAV_KINDS[self.rng.gen_range(0..NAV_KINDS.len())];
            Op::Read(Query::RandomNav { kind, key })
        }
    }
}

fn run_op(engine: &Engine, op: &Op) {
    // failures are counted by the engine; a random op never has an invalid precondition
    match op {
        Op::Read(q) => drop(engine.execute_read(q)),
        Op::Write(u) => drop(engine.execute_write(u)),
    }
}

/// Worker-private busy work standing in for the application's own code.
#[inline(never)]
fn noncritical(scratch: &mut [u64; 64], units: u64) {
    for k in 0..units {
        let slot = &mut scratch[(k & 63) as usize];
        *slot = slot.wrapping_mul(6364136223846793005).wrapping_add(k | 1);
    }
    black_box(scratch);
}

/// Picks the per-iteration work quantum from short uncontended pilots of
/// the operation mix and of the busy loop.
pub fn calibrate_quantum(tree: &Rmmt, cfg: &BenchConfig) -> u64 {
    let engine = Engine::new(tree.clone(), cfg.mode);
    let mut wl = WorkloadGen::new(cfg.seed ^ 0x5eed, usize::MAX, cfg.write_pct);
    let pilot = Duration::from_millis(30);
    let start = Instant::now();
    let mut ops = 0u64;
    while start.elapsed() < pilot || ops < 100 {
        for _ in 0..32 {
            run_op(&engine, &wl.next_op());
        }
        ops += 32;
    }
    let per_op = start.elapsed().as_secs_f64() / ops as f64;

    let mut scratch = [1u64; 64];
    let units = 1u64 << 16;
    let start = Instant::now();
    let mut reps = 0u64;
    while start.elapsed() < Duration::from_millis(10) {
        noncritical(&mut scratch, units);
        reps += 1;
    }
    let per_unit = start.elapsed().as_secs_f64() / (reps * units) as f64;
    let share = NONCRITICAL_SHARE / (1.0 - NONCRITICAL_SHARE);
    ((share * per_op / per_unit).round() as u64).max(1)
}

/// Per-run results plus their mean.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchOutcome {
    pub runs: Vec<BenchRecord>,
    pub mean: BenchRecord,
}

impl BenchOutcome {
    pub fn all_valid(&self) -> bool {
        self.runs.iter().all(|r| r.valid != Some(false))
    }

    /// Runs followed by the mean, ready for [`emit_csv`].
    pub fn records(&self) -> Vec<BenchRecord> {
        let mut v = self.runs.clone();
        v.push(self.mean.clone());
        v
    }
}

pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchOutcome> {
    cfg.check()?;
    let seq = cfg.load_input()?;
    let tree = Rmmt::build(&seq, DEFAULT_LEAF_FILL)?;
    run_benchmark_on(cfg, &tree)
}

/// Like [`run_benchmark`] over an already built tree; every repetition
/// starts from a copy of it.
pub fn run_benchmark_on(cfg: &BenchConfig, tree: &Rmmt) -> Result<BenchOutcome> {
    cfg.check()?;
    let quantum = calibrate_quantum(tree, cfg);
    let mut runs = Vec::with_capacity(cfg.repetitions);
    for rep in 0..cfg.repetitions {
        runs.push(run_once(cfg, tree.clone(), rep, quantum));
    }
    let mean = BenchRecord::mean(&runs).expect("at least one repetition");
    Ok(BenchOutcome { runs, mean })
}

fn run_once(cfg: &BenchConfig, tree: Rmmt, rep: usize, quantum: u64) -> BenchRecord {
    let opts = EngineOptions { backoff: cfg.backoff, ..EngineOptions::default() };
    let engine = Engine::with_options(tree, cfg.mode, opts);
    let stop = AtomicBool::new(false);
    let ready = Barrier::new(cfg.threads + 1);

    let wall = std::thread::scope(|scope| {
        for w in 0..cfg.threads {
            let (engine, stop, ready) = (&engine, &stop, &ready);
            std::thread::Builder::new()
                .stack_size(256 * 1024)
                .spawn_scoped(scope, move || {
                    let mut wl = WorkloadGen::new(cfg.seed, w, cfg.write_pct);
                    let mut scratch = [w as u64; 64];
                    ready.wait();
                    while !stop.load(Ordering::Relaxed) {
                        run_op(engine, &wl.next_op());
                        noncritical(&mut scratch, quantum);
                    }
                })
                .expect("spawn worker");
        }
        ready.wait();
        let start = Instant::now();
        std::thread::sleep(cfg.duration);
        stop.store(true, Ordering::Relaxed);
        start
    });
    let wall = wall.elapsed().as_secs_f64();

    let stats = engine.snapshot_stats();
    let valid = cfg.validate.then(|| engine.snapshot_tree().validate().ok());
    BenchRecord::from_stats(cfg, rep, &stats, wall, valid)
}

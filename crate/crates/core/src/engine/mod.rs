//! Concurrent access to one tree.
//!
//! Two modes share one interface:
//!
//! * [`ConcurrencyMode::GlobalRwLock`]: a structure-wide reader-writer lock.
//! * [`ConcurrencyMode::Speculative`]: every operation (reads included) runs
//!   as an optimistic transaction over per-node version stamps. After
//!   `retry_limit` aborted retries it takes the global fallback lock and runs
//!   alone. Speculative attempts wait for a held fallback lock to be released
//!   before starting and abort if it was taken while they ran.
//!
//! The transactional backend is selected by the tree algorithms' storage
//! traits ([`NodeRead`](crate::store::NodeRead) / [`NodeWrite`](crate::store::NodeWrite)),
//! so another backend can be slotted in behind the same engine.

mod arena;
mod stats;
mod txn;

use std::cell::RefCell;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use crate::error::Result;
use crate::node::NodeId;
use crate::store::Fault;
use crate::tree::{run_query, run_update, Answer, Applied, Query, Rmmt, Update};

use arena::SharedArena;
use stats::{Counters, OpCount};
use txn::{Buffers, Txn};

pub use stats::TxnStats;

/// Retry limits up to this value are the standard configuration.
pub const MAX_STANDARD_RETRIES: u32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConcurrencyMode {
    GlobalRwLock,
    Speculative { retry_limit: u32 },
}

impl ConcurrencyMode {
    /// True for retry limits outside `0..=MAX_STANDARD_RETRIES`; they are
    /// accepted but reported as non-standard.
    pub fn is_nonstandard(&self) -> bool {
        matches!(*self, ConcurrencyMode::Speculative { retry_limit } if retry_limit > MAX_STANDARD_RETRIES)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ConcurrencyMode::GlobalRwLock => "rwlock",
            ConcurrencyMode::Speculative { .. } => "speculative",
        }
    }

    pub fn retry_limit(&self) -> u32 {
        match *self {
            ConcurrencyMode::GlobalRwLock => 0,
            ConcurrencyMode::Speculative { retry_limit } => retry_limit,
        }
    }
}

/// Called right before a speculative attempt tries to commit. Returning
/// `true` aborts the attempt. Test harnesses use it to inject conflicts or to
/// line attempts up on a barrier.
pub type CommitHook = Arc<dyn Fn() -> bool + Send + Sync>;

#[derive(Clone, Default)]
pub struct EngineOptions {
    /// Exponential spin backoff between aborted attempts.
    pub backoff: bool,
    /// Keep every committed update with its commit stamp.
    pub log_writes: bool,
    pub commit_hook: Option<CommitHook>,
}

impl fmt::Debug for EngineOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EngineOptions")
            .field("backoff", &self.backoff)
            .field("log_writes", &self.log_writes)
            .field("commit_hook", &self.commit_hook.is_some())
            .finish()
    }
}

/// What happened while executing one operation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OpTrace {
    pub attempts: u32,
    pub aborts: u32,
    pub via_fallback: bool,
    /// Node reads by the execution that took effect.
    pub nodes_read: usize,
    /// Node ids written by the execution that took effect.
    pub nodes_written: Vec<NodeId>,
}

// one per engine, so the size gap costs nothing
#[allow(clippy::large_enum_variant)]
enum Backend {
    Locked(RwLock<Rmmt>),
    Speculative(SharedArena),
}

pub struct Engine {
    mode: ConcurrencyMode,
    opts: EngineOptions,
    backend: Backend,
    counters: Counters,
    log: Mutex<Vec<(u64, Applied)>>,
    lock_stamp: AtomicU64,
}

thread_local! {
    static BUFFERS: RefCell<Buffers> = RefCell::new(Buffers::default());
}

fn with_buffers<T>(f: impl FnOnce(&mut Buffers) -> T) -> T {
    BUFFERS.with(|cell| match cell.try_borrow_mut() {
        Ok(mut b) => f(&mut b),
        // re-entered from a commit hook
        Err(_) => f(&mut Buffers::default()),
    })
}

fn spin_backoff(aborts: u32) {
    for _ in 0..1u32 << aborts.min(10) {
        std::hint::spin_loop();
    }
}

impl Engine {
    pub fn new(tree: Rmmt, mode: ConcurrencyMode) -> Self {
        Self::with_options(tree, mode, EngineOptions::default())
    }

    pub fn with_options(tree: Rmmt, mode: ConcurrencyMode, opts: EngineOptions) -> Self {
        let backend = match mode {
            ConcurrencyMode::GlobalRwLock => Backend::Locked(RwLock::new(tree)),
            ConcurrencyMode::Speculative { .. } => Backend::Speculative(SharedArena::from_local(tree.store())),
        };
        Engine {
            mode,
            opts,
            backend,
            counters: Counters::new(),
            log: Mutex::new(Vec::new()),
            lock_stamp: AtomicU64::new(0),
        }
    }

    pub fn mode(&self) -> ConcurrencyMode {
        self.mode
    }

    pub fn execute_read(&self, q: &Query) -> Result<Answer> {
        self.run_read(q, false).0
    }

    pub fn execute_read_traced(&self, q: &Query) -> (Result<Answer>, OpTrace) {
        self.run_read(q, true)
    }

    pub fn execute_write(&self, u: &Update) -> Result<Applied> {
        self.run_write(u, false).0
    }

    pub fn execute_write_traced(&self, u: &Update) -> (Result<Applied>, OpTrace) {
        self.run_write(u, true)
    }

    pub fn snapshot_stats(&self) -> TxnStats {
        self.counters.snapshot()
    }

    /// Copy of the current tree, taken while no operation is mid-commit.
    pub fn snapshot_tree(&self) -> Rmmt {
        match &self.backend {
            Backend::Locked(lock) => lock.read().unwrap_or_else(|e| e.into_inner()).clone(),
            Backend::Speculative(arena) => arena.exclusive(|| Rmmt::from_store(arena.to_local())),
        }
    }

    pub fn into_tree(self) -> Rmmt {
        match self.backend {
            Backend::Locked(lock) => lock.into_inner().unwrap_or_else(|e| e.into_inner()),
            Backend::Speculative(arena) => Rmmt::from_store(arena.to_local()),
        }
    }

    /// Committed updates in commit order. Empty unless
    /// [`EngineOptions::log_writes`] is set.
    pub fn committed_writes(&self) -> Vec<Applied> {
        let mut log = self.log.lock().unwrap().clone();
        log.sort_by_key(|(stamp, _)| *stamp);
        log.into_iter().map(|(_, a)| a).collect()
    }

    fn record_applied(&self, stamp: u64, applied: Applied) {
        if self.opts.log_writes {
            self.log.lock().unwrap().push((stamp, applied));
        }
    }

    fn run_read(&self, q: &Query, traced: bool) -> (Result<Answer>, OpTrace) {
        let (res, trace, _) = match &self.backend {
            Backend::Locked(lock) => {
                let tree = lock.read().unwrap_or_else(|e| e.into_inner());
                let trace = OpTrace { attempts: 1, ..OpTrace::default() };
                (tree.query(q), trace, 0)
            }
            Backend::Speculative(arena) => self.speculate(arena, false, traced, |t| run_query(t, q)),
        };
        self.count(&trace, false);
        (res, trace)
    }

    fn run_write(&self, u: &Update, traced: bool) -> (Result<Applied>, OpTrace) {
        let (res, trace, stamp) = match &self.backend {
            Backend::Locked(lock) => {
                let mut tree = lock.write().unwrap_or_else(|e| e.into_inner());
                let res = tree.apply(u);
                let stamp = self.lock_stamp.fetch_add(1, Ordering::Relaxed);
                let mut trace = OpTrace { attempts: 1, ..OpTrace::default() };
                if traced {
                    let fp = tree.last_footprint();
                    trace.nodes_read = fp.nodes_read;
                    trace.nodes_written = fp.written.clone();
                }
                (res, trace, stamp)
            }
            Backend::Speculative(arena) => self.speculate(arena, true, traced, |t| run_update(t, u)),
        };
        if let Ok(applied) = res {
            self.record_applied(stamp, applied);
        }
        self.count(&trace, true);
        (res, trace)
    }

    fn count(&self, trace: &OpTrace, write: bool) {
        self.counters.record(OpCount {
            attempts: trace.attempts as u64,
            aborts: trace.aborts as u64,
            via_fallback: trace.via_fallback,
            write,
        });
    }

    /// Runs `body` speculatively up to `retry_limit + 1` times, then under the
    /// fallback lock. Returns the result, the trace and the commit stamp.
    fn speculate<T>(
        &self,
        arena: &SharedArena,
        write: bool,
        traced: bool,
        body: impl Fn(&mut Txn<'_>) -> std::result::Result<T, Fault>,
    ) -> (Result<T>, OpTrace, u64) {
        let retry_limit = self.mode.retry_limit();
        let mut trace = OpTrace::default();

        for _ in 0..=retry_limit {
            trace.attempts += 1;
            let outcome = with_buffers(|buf| {
                let seq = arena.wait_fallback_free();
                let mut txn = Txn::speculative(arena, buf, seq, write);
                let res = match body(&mut txn) {
                    Err(Fault::Conflict) => {
                        txn.abort();
                        return None;
                    }
                    Ok(v) => Ok(v),
                    Err(Fault::Op(e)) => {
                        txn.discard_writes();
                        Err(e)
                    }
                };
                if self.opts.commit_hook.as_ref().is_some_and(|h| h()) {
                    txn.abort();
                    return None;
                }
                let (read, written) = if traced { (txn.nodes_read(), collect_written(&txn)) } else { (0, Vec::new()) };
                txn.commit().map(|stamp| (res, stamp, read, written))
            });
            match outcome {
                Some((res, stamp, read, written)) => {
                    trace.nodes_read = read;
                    trace.nodes_written = written;
                    return (res, trace, stamp);
                }
                None => {
                    trace.aborts += 1;
                    if self.opts.backoff {
                        spin_backoff(trace.aborts);
                    }
                }
            }
        }

        trace.via_fallback = true;
        let (res, stamp, read, written) = with_buffers(|buf| {
            arena.exclusive(|| {
                let mut txn = Txn::irrevocable(arena, buf);
                let res = match body(&mut txn) {
                    Ok(v) => Ok(v),
                    Err(Fault::Op(e)) => {
                        txn.discard_writes();
                        Err(e)
                    }
                    Err(Fault::Conflict) => unreachable!("irrevocable transaction conflicted"),
                };
                let (read, written) = if traced { (txn.nodes_read(), collect_written(&txn)) } else { (0, Vec::new()) };
                let stamp = txn.commit().expect("irrevocable commit");
                (res, stamp, read, written)
            })
        });
        trace.nodes_read = read;
        trace.nodes_written = written;
        (res, trace, stamp)
    }
}

fn collect_written(txn: &Txn<'_>) -> Vec<NodeId> {
    txn.written().filter(|&id| id != 0).collect()
}

impl fmt::Debug for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Engine").field("mode", &self.mode).field("opts", &self.opts).finish_non_exhaustive()
    }
}

/// Engines are shared by reference across worker threads.
const _: fn() = || {
    fn assert_sync<T: Send + Sync>() {}
    assert_sync::<Engine>();
};


use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use crossbeam_utils::CachePadded;

/// Counters accumulated by an [`Engine`](super::Engine).
///
/// Every completed operation commits exactly once, either on the fast path or
/// under the fallback, so `fast_commits + fallback_commits == reads_done + writes_done`
/// and `attempts == fast_commits + aborts`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TxnStats {
    /// Speculative (or lock-mode) attempts started.
    pub attempts: u64,
    pub fast_commits: u64,
    pub fallback_commits: u64,
    pub aborts: u64,
    pub reads_done: u64,
    pub writes_done: u64,
}

impl TxnStats {
    pub fn ops(&self) -> u64 {
        self.reads_done + self.writes_done
    }

    /// Checks the accounting identities above.
    pub fn is_consistent(&self) -> bool {
        self.fast_commits + self.fallback_commits == self.ops() && self.attempts == self.fast_commits + self.aborts
    }

    pub fn since(&self, earlier: &TxnStats) -> TxnStats {
        TxnStats {
            attempts: self.attempts - earlier.attempts,
            fast_commits: self.fast_commits - earlier.fast_commits,
            fallback_commits: self.fallback_commits - earlier.fallback_commits,
            aborts: self.aborts - earlier.aborts,
            reads_done: self.reads_done - earlier.reads_done,
            writes_done: self.writes_done - earlier.writes_done,
        }
    }
}

#[derive(Default)]
struct Stripe {
    attempts: AtomicU64,
    fast_commits: AtomicU64,
    fallback_commits: AtomicU64,
    aborts: AtomicU64,
    reads: AtomicU64,
    writes: AtomicU64,
}

const STRIPES: usize = 64;

static NEXT_THREAD: AtomicUsize = AtomicUsize::new(0);

thread_local! {
    static STRIPE: usize = NEXT_THREAD.fetch_add(1, Ordering::Relaxed) % STRIPES;
}

/// Outcome of one operation, folded into the counters at once.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct OpCount {
    pub attempts: u64,
    pub aborts: u64,
    pub via_fallback: bool,
    pub write: bool,
}

pub(crate) struct Counters {
    stripes: Box<[CachePadded<Stripe>]>,
}

impl Counters {
    pub(crate) fn new() -> Self {
        Counters { stripes: (0..STRIPES).map(|_| CachePadded::new(Stripe::default())).collect() }
    }

    pub(crate) fn record(&self, c: OpCount) {
        let s = &self.stripes[STRIPE.with(|i| *i)];
        let add = |a: &AtomicU64, v: u64| {
            if v != 0 {
                a.fetch_add(v, Ordering::Relaxed);
            }
        };
        add(&s.attempts, c.attempts);
        add(&s.aborts, c.aborts);
        if c.via_fallback {
            add(&s.fallback_commits, 1);
        } else {
            add(&s.fast_commits, 1);
        }
        if c.write {
            add(&s.writes, 1);
        } else {
            add(&s.reads, 1);
        }
    }

    /// Sums the stripes. Exact once the workers have stopped.
    pub(crate) fn snapshot(&self) -> TxnStats {
        let mut t = TxnStats::default();
        for s in self.stripes.iter() {
            t.attempts += s.attempts.load(Ordering::Relaxed);
            t.fast_commits += s.fast_commits.load(Ordering::Relaxed);
            t.fallback_commits += s.fallback_commits.load(Ordering::Relaxed);
            t.aborts += s.aborts.load(Ordering::Relaxed);
            t.reads_done += s.reads.load(Ordering::Relaxed);
            t.writes_done += s.writes.load(Ordering::Relaxed);
        }
        t
    }
}

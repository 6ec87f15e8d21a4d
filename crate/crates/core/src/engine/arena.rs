//! Shared node arena with per-node version stamps.
//!
//! Each slot holds the 64-byte node image as eight atomic words plus a
//! version word `stamp << 1 | locked`. Slots live in segments of doubling
//! size that are never moved or freed while the arena is alive, so node ids
//! stay valid for concurrent readers. Freed ids are recycled; their version
//! keeps growing, which is what lets stale readers detect the reuse.

use std::sync::atomic::{fence, AtomicPtr, AtomicU32, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Mutex, MutexGuard};

use crossbeam_utils::{Backoff, CachePadded};

use crate::node::{NodeId, RawNode};
use crate::store::{Header, LocalStore};

const BASE: u64 = 64;

pub(crate) const PUB_ACTIVE_MASK: u64 = (1 << 32) - 1;
pub(crate) const PUB_DONE: u64 = 1 << 32;
const SEGMENTS: usize = 27;

#[repr(C, align(64))]
#[derive(Default)]
pub(crate) struct Slot {
    words: [AtomicU64; 8],
    pub(crate) version: AtomicU64,
}

impl Slot {
    /// Unsynchronized load; the caller validates with the version word.
    #[inline]
    pub(crate) fn load_words(&self) -> [u64; 8] {
        let mut out = [0u64; 8];
        for (o, w) in out.iter_mut().zip(&self.words) {
            *o = w.load(Ordering::Relaxed);
        }
        out
    }

    #[inline]
    pub(crate) fn store_words(&self, words: &[u64; 8]) {
        for (w, &v) in self.words.iter().zip(words) {
            w.store(v, Ordering::Relaxed);
        }
    }

    /// Consistent snapshot taken while the slot is unlocked: `(version, words)`.
    #[inline]
    pub(crate) fn read_consistent(&self) -> Option<(u64, [u64; 8])> {
        let v1 = self.version.load(Ordering::Acquire);
        if v1 & 1 == 1 {
            return None;
        }
        let words = self.load_words();
        fence(Ordering::Acquire);
        let v2 = self.version.load(Ordering::Relaxed);
        (v1 == v2).then_some((v1, words))
    }

    /// The three summary words, unvalidated.
    #[inline]
    pub(crate) fn load_summary_words(&self) -> [u64; 3] {
        [
            self.words[5].load(Ordering::Relaxed),
            self.words[6].load(Ordering::Relaxed),
            self.words[7].load(Ordering::Relaxed),
        ]
    }

    /// Like `read_consistent`, for the three summary words only.
    #[inline]
    pub(crate) fn read_summary_consistent(&self) -> Option<(u64, [u64; 3])> {
        let v1 = self.version.load(Ordering::Acquire);
        if v1 & 1 == 1 {
            return None;
        }
        let w = self.load_summary_words();
        fence(Ordering::Acquire);
        let v2 = self.version.load(Ordering::Relaxed);
        (v1 == v2).then_some((v1, w))
    }

    /// Publishes new contents under an already-held lock and stamps `wv`.
    #[inline]
    pub(crate) fn publish_locked(&self, words: &[u64; 8], wv: u64) {
        fence(Ordering::Release);
        self.store_words(words);
        self.version.store(wv << 1, Ordering::Release);
    }
}

fn locate(id: NodeId) -> (usize, usize) {
    let x = id as u64 / BASE + 1;
    let seg = 63 - x.leading_zeros() as usize;
    let first = BASE * ((1u64 << seg) - 1);
    (seg, (id as u64 - first) as usize)
}

pub(crate) struct SharedArena {
    /// Base of each segment; null until allocated, then fixed until drop.
    segments: [AtomicPtr<Slot>; SEGMENTS],
    grow: Mutex<()>,
    next: AtomicU32,
    free: Mutex<Vec<NodeId>>,
    pub(crate) clock: CachePadded<AtomicU64>,
    /// Sequence word of the fallback lock: odd while held.
    pub(crate) fallback_seq: CachePadded<AtomicU64>,
    fallback_lock: Mutex<()>,
    /// Speculative commits currently between validation and publication.
    pub(crate) inflight: CachePadded<AtomicUsize>,
    /// Completed publications in the high half, publications in progress in
    /// the low half. Read-only transactions that see it unchanged need no
    /// per-slot validation.
    pub(crate) publishing: CachePadded<AtomicU64>,
    leaf_cap: usize,
}

impl SharedArena {
    pub(crate) fn from_local(store: &LocalStore) -> Self {
        let arena = SharedArena {
            segments: std::array::from_fn(|_| AtomicPtr::new(std::ptr::null_mut())),
            grow: Mutex::new(()),
            next: AtomicU32::new(0),
            free: Mutex::new(store.free_list().to_vec()),
            clock: CachePadded::new(AtomicU64::new(0)),
            fallback_seq: CachePadded::new(AtomicU64::new(0)),
            fallback_lock: Mutex::new(()),
            inflight: CachePadded::new(AtomicUsize::new(0)),
            publishing: CachePadded::new(AtomicU64::new(0)),
            leaf_cap: crate::store::NodeRead::leaf_cap(&store),
        };
        let slots = store.slots();
        let n = slots.len() as NodeId;
        if n > 0 {
            arena.ensure(n - 1);
        }
        arena.next.store(n, Ordering::Relaxed);
        for (id, node) in slots.iter().enumerate().skip(1) {
            arena.slot(id as NodeId).store_words(&node.to_words());
        }
        arena.slot(0).store_words(&header_words(store.header_direct()));
        arena
    }

    /// Announces a publication; must precede taking the commit stamp.
    #[inline]
    pub(crate) fn begin_publish(&self) {
        self.publishing.fetch_add(1, Ordering::SeqCst);
    }

    /// Withdraws an announcement that published nothing.
    #[inline]
    pub(crate) fn cancel_publish(&self) {
        self.publishing.fetch_sub(1, Ordering::SeqCst);
    }

    #[inline]
    pub(crate) fn end_publish(&self) {
        self.publishing.fetch_add(PUB_DONE - 1, Ordering::Release);
    }

    /// True if no publication started since `seen` was read. Call after the
    /// data loads it is meant to cover.
    #[inline]
    pub(crate) fn unpublished_since(&self, seen: u64) -> bool {
        fence(Ordering::Acquire);
        self.publishing.load(Ordering::Relaxed) == seen
    }

    pub(crate) fn leaf_cap(&self) -> usize {
        self.leaf_cap
    }

    fn ensure(&self, id: NodeId) {
        let (seg, _) = locate(id);
        if !self.segments[seg].load(Ordering::Acquire).is_null() {
            return;
        }
        let _g = self.grow.lock().unwrap_or_else(|e| e.into_inner());
        for (s, base) in self.segments.iter().enumerate().take(seg + 1) {
            if base.load(Ordering::Acquire).is_null() {
                let slots: Box<[Slot]> = (0..BASE << s).map(|_| Slot::default()).collect();
                base.store(Box::into_raw(slots) as *mut Slot, Ordering::Release);
            }
        }
    }

    #[inline]
    pub(crate) fn slot(&self, id: NodeId) -> &Slot {
        let (seg, off) = locate(id);
        let base = self.segments[seg].load(Ordering::Acquire);
        assert!(!base.is_null(), "slot {id} outside allocated segments");
        // SAFETY: a non-null base points at a live segment of BASE << seg
        // slots that stays allocated until the arena drops, and off is
        // below that length by construction of `locate`.
        unsafe { &*base.add(off) }
    }

    pub(crate) fn alloc(&self) -> Option<NodeId> {
        if let Some(id) = self.free.lock().unwrap().pop() {
            return Some(id);
        }
        let id = self.next.fetch_add(1, Ordering::Relaxed);
        if id == NodeId::MAX {
            return None;
        }
        self.ensure(id);
        Some(id)
    }

    pub(crate) fn give_back(&self, ids: &[NodeId]) {
        if !ids.is_empty() {
            self.free.lock().unwrap().extend_from_slice(ids);
        }
    }

    /// Runs `f` with the fallback lock held and no speculative commit in
    /// flight. Every speculative attempt that overlaps this window aborts.
    pub(crate) fn exclusive<T>(&self, f: impl FnOnce() -> T) -> T {
        let _guard: MutexGuard<'_, ()> = self.fallback_lock.lock().unwrap_or_else(|e| e.into_inner());
        self.fallback_seq.fetch_add(1, Ordering::SeqCst);
        let backoff = Backoff::new();
        while self.inflight.load(Ordering::SeqCst) != 0 {
            backoff.snooze();
        }
        struct Release<'a>(&'a AtomicU64);
        impl Drop for Release<'_> {
            fn drop(&mut self) {
                self.0.fetch_add(1, Ordering::SeqCst);
            }
        }
        let _release = Release(&self.fallback_seq);
        f()
    }

    /// Blocks (politely) until the fallback lock is free and returns its
    /// current sequence value.
    pub(crate) fn wait_fallback_free(&self) -> u64 {
        let backoff = Backoff::new();
        loop {
            let s = self.fallback_seq.load(Ordering::SeqCst);
            if s & 1 == 0 {
                return s;
            }
            if backoff.is_completed() {
                std::thread::yield_now();
            } else {
                backoff.snooze();
            }
        }
    }

    /// Copies the current tree out. Must run inside [`SharedArena::exclusive`].
    pub(crate) fn to_local(&self) -> LocalStore {
        let n = self.next.load(Ordering::Relaxed);
        let mut nodes = Vec::with_capacity(n as usize);
        nodes.push(RawNode::default());
        for id in 1..n {
            nodes.push(RawNode::from_words(self.slot(id).load_words()));
        }
        let header = words_header(&self.slot(0).load_words());
        let free = self.free.lock().unwrap().clone();
        LocalStore::from_parts(nodes, free, header, self.leaf_cap)
    }
}

impl Drop for SharedArena {
    fn drop(&mut self) {
        for (s, base) in self.segments.iter_mut().enumerate() {
            let p = *base.get_mut();
            if !p.is_null() {
                // SAFETY: allocated in `ensure` as a boxed slice of this length
                drop(unsafe { Box::from_raw(std::ptr::slice_from_raw_parts_mut(p, (BASE << s) as usize)) });
            }
        }
    }
}

pub(crate) fn header_words(h: Header) -> [u64; 8] {
    [h.root as u64, h.height as u64, 0, 0, 0, 0, 0, 0]
}

pub(crate) fn words_header(w: &[u64; 8]) -> Header {
    Header { root: w[0] as NodeId, height: w[1] as u32 }
}

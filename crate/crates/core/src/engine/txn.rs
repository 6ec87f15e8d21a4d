//! Node-granular software transactions over a [`SharedArena`].
//!
//! Speculative transactions sample the global clock at begin and only accept
//! node versions no newer than that sample. Writes are buffered and published
//! at commit after locking the written slots and revalidating every read.
//! Irrevocable transactions run with the fallback lock held and write in place
//! through the same publication path, so concurrent speculative readers still
//! see version changes.
//!
//! A read-only transaction that starts while nothing is being published reads
//! without per-slot checks for as long as the arena's publication word stays
//! unchanged. Once it changes, the reads so far are revalidated against their
//! slot versions and the transaction continues with per-slot checks.

use std::sync::atomic::Ordering;

use crate::error::Error;
use crate::bp::NodeSummary;
use crate::node::{NodeId, RawNode};
use crate::store::{Fault, Header, NodeRead, NodeWrite};

use super::arena::{header_words, words_header, SharedArena, Slot, PUB_ACTIVE_MASK};

const HEADER: NodeId = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum TxnKind {
    Speculative,
    Irrevocable,
}

/// Reusable per-thread buffers.
#[derive(Default)]
pub(crate) struct Buffers {
    reads: Vec<NodeId>,
    writes: Vec<(NodeId, [u64; 8])>,
    allocated: Vec<NodeId>,
    released: Vec<NodeId>,
    locked: Vec<(NodeId, u64)>,
}

impl Buffers {
    fn clear(&mut self) {
        self.reads.clear();
        self.writes.clear();
        self.allocated.clear();
        self.released.clear();
        self.locked.clear();
    }
}

pub(crate) struct Txn<'a> {
    arena: &'a SharedArena,
    kind: TxnKind,
    rv: u64,
    fallback_seq: u64,
    track_reads: bool,
    /// Publication word seen at begin while reads skip per-slot checks.
    quiet: Option<u64>,
    buf: &'a mut Buffers,
    nodes_read: usize,
}

impl<'a> Txn<'a> {
    /// Starts a speculative attempt. `fallback_seq` is the (even) fallback
    /// sequence observed before starting; any change to it aborts the attempt.
    pub(crate) fn speculative(arena: &'a SharedArena, buf: &'a mut Buffers, fallback_seq: u64, track_reads: bool) -> Self {
        buf.clear();
        let rv = arena.clock.load(Ordering::SeqCst);
        let seen = arena.publishing.load(Ordering::SeqCst);
        let quiet = (!track_reads && seen & PUB_ACTIVE_MASK == 0).then_some(seen);
        Txn { arena, kind: TxnKind::Speculative, rv, fallback_seq, track_reads, quiet, buf, nodes_read: 0 }
    }

    /// Must be created inside [`SharedArena::exclusive`].
    pub(crate) fn irrevocable(arena: &'a SharedArena, buf: &'a mut Buffers) -> Self {
        buf.clear();
        Txn {
            arena,
            kind: TxnKind::Irrevocable,
            rv: u64::MAX,
            fallback_seq: 0,
            track_reads: false,
            quiet: None,
            buf,
            nodes_read: 0,
        }
    }

    pub(crate) fn nodes_read(&self) -> usize {
        self.nodes_read
    }

    #[inline]
    fn buffered(&self, id: NodeId) -> Option<&[u64; 8]> {
        if self.buf.writes.is_empty() {
            return None;
        }
        self.buf.writes.iter().rev().find(|(w, _)| *w == id).map(|(_, words)| words)
    }

    #[inline]
    fn load(&mut self, id: NodeId) -> Result<[u64; 8], Fault> {
        self.nodes_read += 1;
        if let Some(w) = self.buffered(id) {
            return Ok(*w);
        }
        let slot = self.arena.slot(id);
        if self.kind == TxnKind::Irrevocable {
            return Ok(slot.load_words());
        }
        if let Some(seen) = self.quiet {
            let words = slot.load_words();
            if self.arena.unpublished_since(seen) {
                self.buf.reads.push(id);
                return Ok(words);
            }
            self.leave_quiet()?;
        }
        match slot.read_consistent() {
            Some((v, words)) if v >> 1 <= self.rv => {
                self.note_read(id);
                Ok(words)
            }
            _ => Err(Fault::Conflict),
        }
    }

    #[inline]
    fn load_summary(&mut self, slot: &Slot, id: NodeId) -> Result<[u64; 3], Fault> {
        if let Some(seen) = self.quiet {
            let w = slot.load_summary_words();
            if self.arena.unpublished_since(seen) {
                self.buf.reads.push(id);
                return Ok(w);
            }
            self.leave_quiet()?;
        }
        match slot.read_summary_consistent() {
            Some((v, w)) if v >> 1 <= self.rv => {
                self.note_read(id);
                Ok(w)
            }
            _ => Err(Fault::Conflict),
        }
    }

    #[inline]
    fn note_read(&mut self, id: NodeId) {
        if self.track_reads {
            self.buf.reads.push(id);
        }
    }

    /// Something was published since begin: keep the reads so far only if
    /// every one of them is still at a version no newer than `rv`.
    #[cold]
    fn leave_quiet(&mut self) -> Result<(), Fault> {
        self.quiet = None;
        let fresh = self.buf.reads.iter().all(|&id| {
            let v = self.arena.slot(id).version.load(Ordering::Acquire);
            v & 1 == 0 && v >> 1 <= self.rv
        });
        self.buf.reads.clear();
        if fresh {
            Ok(())
        } else {
            Err(Fault::Conflict)
        }
    }

    fn store(&mut self, id: NodeId, words: [u64; 8]) {
        match self.buf.writes.iter_mut().find(|(w, _)| *w == id) {
            Some(entry) => entry.1 = words,
            None => self.buf.writes.push((id, words)),
        }
    }

    /// Ids written so far (including the header slot 0 when it changed).
    pub(crate) fn written(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.buf.writes.iter().map(|(id, _)| *id)
    }

    /// Forgets buffered writes, turning the transaction read-only. Used when
    /// the operation itself failed and must leave no trace.
    pub(crate) fn discard_writes(&mut self) {
        self.arena.give_back(&self.buf.allocated);
        self.buf.allocated.clear();
        self.buf.writes.clear();
        self.buf.released.clear();
    }

    /// Drops all effects; allocated ids go back to the free list.
    pub(crate) fn abort(self) {
        self.arena.give_back(&self.buf.allocated);
        self.buf.clear();
    }

    /// Publishes the write set. Returns the commit stamp, or `None` if
    /// validation failed (the transaction is then aborted).
    pub(crate) fn commit(self) -> Option<u64> {
        match self.kind {
            TxnKind::Irrevocable => Some(self.commit_irrevocable()),
            TxnKind::Speculative => self.commit_speculative(),
        }
    }

    fn commit_irrevocable(self) -> u64 {
        let arena = self.arena;
        if self.buf.writes.is_empty() {
            self.buf.clear();
            return arena.clock.load(Ordering::SeqCst);
        }
        arena.begin_publish();
        let wv = arena.clock.fetch_add(1, Ordering::SeqCst) + 1;
        for (id, words) in &self.buf.writes {
            let slot = arena.slot(*id);
            let v = slot.version.load(Ordering::Relaxed);
            slot.version.store(v | 1, Ordering::Relaxed);
            slot.publish_locked(words, wv);
        }
        arena.end_publish();
        arena.give_back(&self.buf.released);
        self.buf.clear();
        wv
    }

    fn commit_speculative(self) -> Option<u64> {
        let arena = self.arena;
        if self.buf.writes.is_empty() {
            // every read was already checked against rv at load time
            let ok = arena.fallback_seq.load(Ordering::SeqCst) == self.fallback_seq;
            self.buf.clear();
            return ok.then_some(self.rv);
        }

        arena.inflight.fetch_add(1, Ordering::SeqCst);
        if arena.fallback_seq.load(Ordering::SeqCst) != self.fallback_seq {
            arena.inflight.fetch_sub(1, Ordering::SeqCst);
            self.abort();
            return None;
        }

        self.buf.writes.sort_unstable_by_key(|(id, _)| *id);
        let mut ok = true;
        for &(id, _) in &self.buf.writes {
            let slot = arena.slot(id);
            let cur = slot.version.load(Ordering::Relaxed);
            let fresh = self.buf.allocated.contains(&id);
            if cur & 1 == 1
                || (!fresh && cur >> 1 > self.rv)
                || slot.version.compare_exchange(cur, cur | 1, Ordering::AcqRel, Ordering::Relaxed).is_err()
            {
                ok = false;
                break;
            }
            self.buf.locked.push((id, cur));
        }

        // announced before the stamp, so a reader whose rv covers this commit
        // either sees the announcement or the finished publication
        if ok {
            arena.begin_publish();
        }
        let wv = if ok { arena.clock.fetch_add(1, Ordering::SeqCst) + 1 } else { 0 };
        if ok && wv != self.rv + 1 {
            for &id in &self.buf.reads {
                if self.buf.locked.iter().any(|(l, _)| *l == id) {
                    continue;
                }
                let v = arena.slot(id).version.load(Ordering::Acquire);
                if v & 1 == 1 || v >> 1 > self.rv {
                    ok = false;
                    break;
                }
            }
        }

        if !ok {
            if wv != 0 {
                arena.cancel_publish();
            }
            for &(id, old) in &self.buf.locked {
                arena.slot(id).version.store(old, Ordering::Release);
            }
            arena.inflight.fetch_sub(1, Ordering::SeqCst);
            self.abort();
            return None;
        }

        for (id, words) in &self.buf.writes {
            arena.slot(*id).publish_locked(words, wv);
        }
        arena.end_publish();
        arena.inflight.fetch_sub(1, Ordering::SeqCst);
        arena.give_back(&self.buf.released);
        self.buf.clear();
        Some(wv)
    }
}

impl NodeRead for Txn<'_> {
    fn leaf_cap(&self) -> usize {
        self.arena.leaf_cap()
    }

    fn header(&mut self) -> Result<Header, Fault> {
        self.nodes_read = self.nodes_read.saturating_sub(1);
        Ok(words_header(&self.load(HEADER)?))
    }

    #[inline(always)]
    fn node(&mut self, id: NodeId) -> Result<RawNode, Fault> {
        Ok(RawNode::from_words(self.load(id)?))
    }

    #[inline(always)]
    fn summary(&mut self, id: NodeId) -> Result<NodeSummary, Fault> {
        self.nodes_read += 1;
        if let Some(w) = self.buffered(id) {
            return Ok(RawNode::summary_from_words([w[5], w[6], w[7]]));
        }
        let slot = self.arena.slot(id);
        let w = if self.kind == TxnKind::Irrevocable {
            slot.load_summary_words()
        } else {
            self.load_summary(slot, id)?
        };
        Ok(RawNode::summary_from_words(w))
    }
}

impl NodeWrite for Txn<'_> {
    fn set_header(&mut self, h: Header) -> Result<(), Fault> {
        self.store(HEADER, header_words(h));
        Ok(())
    }

    fn put(&mut self, id: NodeId, node: RawNode) -> Result<(), Fault> {
        self.store(id, node.to_words());
        Ok(())
    }

    fn alloc(&mut self) -> Result<NodeId, Fault> {
        let id = self.arena.alloc().ok_or(Fault::Op(Error::TooLarge { len: NodeId::MAX as usize }))?;
        self.buf.allocated.push(id);
        Ok(id)
    }

    fn release(&mut self, id: NodeId) -> Result<(), Fault> {
        self.store(id, RawNode::default().to_words());
        self.buf.released.push(id);
        Ok(())
    }
}

//! The dynamic range min-max tree.
//!
//! A B+ tree of arity [`ARITY`](crate::node::ARITY) whose leaves hold up to
//! `leaf_cap` parentheses and whose nodes each carry the [`NodeSummary`] of
//! the range below them. Positions are 0-based parenthesis indices and the
//! represented sequence may be a forest.

mod build;
pub(crate) mod query;
pub(crate) mod update;
mod validate;

use crate::bp::{BwdMatch, NodeSummary, Paren, ParenSeq, LEAF_CAP};
use crate::error::Result;
use crate::node::NodeId;
use crate::store::{Fault, Footprint, LocalStore, NodeRead, NodeWrite};

pub use validate::{ValidationReport, Violation};

/// Default share of `leaf_cap` filled by [`Rmmt::build`].
pub const DEFAULT_LEAF_FILL: f64 = 0.75;

/// A read-only request.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Query {
    Access(usize),
    Excess(usize),
    FwdSearch(usize, i32),
    BwdSearch(usize, i32),
    FindClose(usize),
    FindOpen(usize),
    Enclose(usize),
    Depth(usize),
    SubtreeSize(usize),
    RangeMin(usize, usize),
    TotalSize,
    /// `kind` applied to the node covering position `key % len`, resolved
    /// inside the operation so it stays valid under concurrent updates.
    RandomNav { kind: NavKind, key: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NavKind {
    FindClose,
    Enclose,
    Depth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Answer {
    Paren(Paren),
    Excess(i32),
    /// `fwd_search` result.
    Forward(Option<usize>),
    Backward(BwdMatch),
    Position(usize),
    /// `enclose` result; `None` for a root of the forest.
    Parent(Option<usize>),
    Count(usize),
    RangeMin { min: i32, count: u32 },
    /// Outcome of [`Query::RandomNav`]: the open position used (none on an
    /// empty tree) and the navigation answer.
    Nav { at: Option<usize>, value: Option<usize> },
}

/// A structural update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Update {
    InsertPair(usize, usize),
    InsertLeaf(usize),
    DeletePair(usize),
    /// Insert `()` at `key % (len + 1)`.
    RandomInsertLeaf { key: u64 },
    /// Delete the first leaf pair at or after `key % len` (wrapping); inserts
    /// instead when the tree is empty.
    RandomDeleteLeaf { key: u64 },
}

/// The concrete effect of an update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Applied {
    Inserted { open: usize, close: usize },
    Deleted { open: usize, close: usize },
}

impl Applied {
    /// The positional update that reproduces this effect.
    pub fn as_update(&self) -> Update {
        match *self {
            Applied::Inserted { open, close } => Update::InsertPair(open, close - 1),
            Applied::Deleted { open, .. } => Update::DeletePair(open),
        }
    }

    pub fn is_insert(&self) -> bool {
        matches!(self, Applied::Inserted { .. })
    }
}

pub(crate) fn run_query<S: NodeRead>(s: &mut S, q: &Query) -> std::result::Result<Answer, Fault> {
    Ok(match *q {
        Query::Access(i) => Answer::Paren(query::access(s, i)?),
        Query::Excess(i) => Answer::Excess(query::excess(s, i)?),
        Query::FwdSearch(i, d) => Answer::Forward(query::fwd_search(s, i, d)?),
        Query::BwdSearch(i, d) => Answer::Backward(query::bwd_search(s, i, d)?),
        Query::FindClose(i) => Answer::Position(query::find_close(s, i)?),
        Query::FindOpen(i) => Answer::Position(query::find_open(s, i)?),
        Query::Enclose(i) => Answer::Parent(query::enclose(s, i)?),
        Query::Depth(i) => Answer::Count(query::depth(s, i)?),
        Query::SubtreeSize(i) => Answer::Count(query::subtree_size(s, i)?),
        Query::RangeMin(i, j) => {
            let (min, count) = query::range_min(s, i, j)?;
            Answer::RangeMin { min, count }
        }
        Query::TotalSize => Answer::Count(query::total(s)?),
        Query::RandomNav { kind, key } => {
            let mut p = query::Probe::new();
            if query::open_at_key(s, key, &mut p)? {
                let value = match kind {
                    NavKind::FindClose => Some(query::close_of(s, &p)?),
                    NavKind::Enclose => query::parent_of(s, &p)?,
                    NavKind::Depth => Some(query::depth_of(&p)?),
                };
                Answer::Nav { at: Some(p.pos()), value }
            } else {
                Answer::Nav { at: None, value: None }
            }
        }
    })
}

pub(crate) fn run_update<S: NodeWrite>(s: &mut S, u: &Update) -> std::result::Result<Applied, Fault> {
    match *u {
        Update::InsertPair(i, j) => {
            update::insert_pair(s, i, j)?;
            Ok(Applied::Inserted { open: i, close: j + 1 })
        }
        Update::InsertLeaf(i) => {
            update::insert_pair(s, i, i)?;
            Ok(Applied::Inserted { open: i, close: i + 1 })
        }
        Update::DeletePair(i) => {
            let close = update::delete_pair(s, i)?;
            Ok(Applied::Deleted { open: i, close })
        }
        Update::RandomInsertLeaf { key } => {
            let n = query::total(s)?;
            run_update(s, &Update::InsertLeaf((key % (n as u64 + 1)) as usize))
        }
        Update::RandomDeleteLeaf { key } => {
            let n = query::total(s)?;
            if n == 0 {
                return run_update(s, &Update::InsertLeaf(0));
            }
            let from = (key % n as u64) as usize;
            let q = match query::leaf_pair_from(s, from)? {
                Some(q) => Some(q),
                None => query::leaf_pair_from(s, 0)?,
            };
            match q {
                Some(q) => run_update(s, &Update::DeletePair(q)),
                None => run_update(s, &Update::InsertLeaf(from)),
            }
        }
    }
}

/// Sequential handle over a privately owned tree.
#[derive(Clone, Debug)]
pub struct Rmmt {
    store: LocalStore,
}

fn seq<T>(r: std::result::Result<T, Fault>) -> Result<T> {
    r.map_err(Fault::into_error)
}

impl Default for Rmmt {
    fn default() -> Self {
        Self::new()
    }
}

impl Rmmt {
    /// An empty tree with the default leaf capacity.
    pub fn new() -> Self {
        Self::build(&ParenSeq::new(), DEFAULT_LEAF_FILL).expect("empty build")
    }

    /// Bottom-up construction, each leaf filled to `leaf_fill * LEAF_CAP`.
    pub fn build(seq: &ParenSeq, leaf_fill: f64) -> Result<Self> {
        Self::build_with_capacity(seq, LEAF_CAP, leaf_fill)
    }

    /// Like [`Rmmt::build`] with a smaller leaf capacity; mostly for tests
    /// that want many levels out of short sequences.
    pub fn build_with_capacity(seq: &ParenSeq, leaf_cap: usize, leaf_fill: f64) -> Result<Self> {
        Ok(Rmmt { store: build::build(seq, leaf_cap, leaf_fill)? })
    }

    pub(crate) fn from_store(store: LocalStore) -> Self {
        Rmmt { store }
    }

    pub(crate) fn store(&self) -> &LocalStore {
        &self.store
    }

    #[cfg(test)]
    pub(crate) fn store_mut(&mut self) -> &mut LocalStore {
        &mut self.store
    }

    pub fn leaf_cap(&self) -> usize {
        self.store.leaf_cap()
    }

    pub fn height(&self) -> usize {
        self.store.header_direct().height as usize
    }

    /// Number of live tree nodes.
    pub fn node_count(&self) -> usize {
        self.store.live_nodes()
    }

    pub fn summary(&self) -> NodeSummary {
        let h = self.store.header_direct();
        self.store.get(h.root).summary()
    }

    /// Number of parentheses.
    pub fn total_size(&self) -> usize {
        self.summary().num_parens as usize
    }

    pub fn is_empty(&self) -> bool {
        self.total_size() == 0
    }

    fn reader(&self) -> &LocalStore {
        &self.store
    }

    pub fn access(&self, i: usize) -> Result<Paren> {
        seq(query::access(&mut self.reader(), i))
    }

    pub fn excess(&self, i: usize) -> Result<i32> {
        seq(query::excess(&mut self.reader(), i))
    }

    pub fn fwd_search(&self, i: usize, d: i32) -> Result<Option<usize>> {
        seq(query::fwd_search(&mut self.reader(), i, d))
    }

    pub fn bwd_search(&self, i: usize, d: i32) -> Result<BwdMatch> {
        seq(query::bwd_search(&mut self.reader(), i, d))
    }

    pub fn find_close(&self, i: usize) -> Result<usize> {
        seq(query::find_close(&mut self.reader(), i))
    }

    pub fn find_open(&self, i: usize) -> Result<usize> {
        seq(query::find_open(&mut self.reader(), i))
    }

    pub fn enclose(&self, i: usize) -> Result<Option<usize>> {
        seq(query::enclose(&mut self.reader(), i))
    }

    pub fn depth(&self, i: usize) -> Result<usize> {
        seq(query::depth(&mut self.reader(), i))
    }

    pub fn subtree_size(&self, i: usize) -> Result<usize> {
        seq(query::subtree_size(&mut self.reader(), i))
    }

    /// Minimum excess over `i..=j` and the number of positions reaching it.
    pub fn range_min(&self, i: usize, j: usize) -> Result<(i32, u32)> {
        seq(query::range_min(&mut self.reader(), i, j))
    }

    pub fn query(&self, q: &Query) -> Result<Answer> {
        seq(run_query(&mut self.reader(), q))
    }

    pub fn apply(&mut self, u: &Update) -> Result<Applied> {
        self.store.reset_footprint();
        seq(run_update(&mut self.store, u))
    }

    pub fn insert_pair(&mut self, i: usize, j: usize) -> Result<()> {
        self.apply(&Update::InsertPair(i, j)).map(drop)
    }

    pub fn insert_leaf(&mut self, i: usize) -> Result<()> {
        self.apply(&Update::InsertLeaf(i)).map(drop)
    }

    pub fn delete_pair(&mut self, i: usize) -> Result<()> {
        self.apply(&Update::DeletePair(i)).map(drop)
    }

    /// Nodes read and written by the most recent update.
    pub fn last_footprint(&self) -> &Footprint {
        self.store.footprint()
    }

    /// Node ids from the root down to the leaf holding position `i`
    /// (the last leaf when `i == total_size()`).
    pub fn path_to(&self, i: usize) -> Vec<NodeId> {
        let s = &self.store;
        let mut id = s.header_direct().root;
        let mut out = vec![id];
        let mut pos = i;
        loop {
            let node = s.get(id);
            if node.is_leaf() {
                return out;
            }
            let k = node.child_count();
            for c in 0..k {
                let child = node.child(c);
                let len = s.get(child).len();
                if pos < len || c + 1 == k {
                    id = child;
                    break;
                }
                pos -= len;
            }
            out.push(id);
        }
    }

    /// Ids of the children of an internal node; empty for a leaf.
    pub fn children_of(&self, id: NodeId) -> Vec<NodeId> {
        let n = self.store.get(id);
        if n.is_leaf() {
            Vec::new()
        } else {
            n.children().collect()
        }
    }

    /// Parenthesis counts of all leaves, left to right.
    pub fn leaf_sizes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![self.store.header_direct().root];
        while let Some(id) = stack.pop() {
            let n = self.store.get(id);
            if n.is_leaf() {
                out.push(n.len());
            } else {
                let kids: Vec<NodeId> = n.children().collect();
                stack.extend(kids.into_iter().rev());
            }
        }
        out
    }

    pub fn to_seq(&self) -> ParenSeq {
        let mut out = ParenSeq::with_capacity(self.total_size());
        let mut stack = vec![self.store.header_direct().root];
        while let Some(id) = stack.pop() {
            let n = self.store.get(id);
            if n.is_leaf() {
                for p in n.block().iter() {
                    out.push(p);
                }
            } else {
                let kids: Vec<NodeId> = n.children().collect();
                stack.extend(kids.into_iter().rev());
            }
        }
        out
    }

    pub fn validate(&self) -> ValidationReport {
        validate::validate(&self.store)
    }
}

//! Paired insertions and deletions with B+-tree rebalancing.
//!
//! Leaves are measured in parentheses (`leaf_cap`, minimum `leaf_cap / 2`),
//! internal nodes in children (`ARITY`, minimum `MIN_CHILDREN`). The root is
//! exempt from the minimums. Overflow splits into ceil/floor halves; underflow
//! steals from the left sibling (right one for a first child) when it can
//! spare enough units, otherwise the two are merged.

use crate::bp::{combine, NodeSummary, Paren, ParenBlock};
use crate::error::Error;
use crate::node::{NodeId, RawNode, ARITY, MIN_CHILDREN};
use crate::store::{Fault, Header, NodeRead, NodeWrite};

use super::query;

/// Largest sequence the 32-bit summaries can describe.
pub(crate) const MAX_PARENS: usize = i32::MAX as usize;

pub(crate) fn min_leaf(leaf_cap: usize) -> usize {
    leaf_cap / 2
}

/// Child list with room for one overflow entry.
#[derive(Clone, Copy, Debug)]
struct Children {
    ids: [NodeId; ARITY + 1],
    len: usize,
}

impl Children {
    fn from_slice(ids: &[NodeId]) -> Self {
        let mut c = Children { ids: [0; ARITY + 1], len: ids.len() };
        c.ids[..ids.len()].copy_from_slice(ids);
        c
    }

    fn as_slice(&self) -> &[NodeId] {
        &self.ids[..self.len]
    }

    fn len(&self) -> usize {
        self.len
    }

    fn insert(&mut self, at: usize, id: NodeId) {
        assert!(self.len <= ARITY);
        self.ids.copy_within(at..self.len, at + 1);
        self.ids[at] = id;
        self.len += 1;
    }

    fn remove(&mut self, at: usize) -> NodeId {
        let id = self.ids[at];
        self.ids.copy_within(at + 1..self.len, at);
        self.len -= 1;
        id
    }
}

fn children_of(node: &RawNode) -> Children {
    let mut ids = [0; ARITY];
    let k = node.child_count();
    for (c, id) in node.children().enumerate() {
        ids[c] = id;
    }
    Children::from_slice(&ids[..k])
}

fn fold_children<S: NodeRead>(s: &mut S, ids: &[NodeId]) -> Result<NodeSummary, Fault> {
    let mut acc = NodeSummary::EMPTY;
    for &id in ids {
        acc = combine(acc, s.summary(id)?);
    }
    Ok(acc)
}

fn put_internal<S: NodeWrite>(s: &mut S, id: NodeId, ids: &[NodeId]) -> Result<(), Fault> {
    let sum = fold_children(s, ids)?;
    s.put(id, RawNode::internal(ids, sum))
}

struct Step {
    id: NodeId,
    node: RawNode,
    child: usize,
}

/// Descends towards `pos`; `append_ok` lets a position equal to a child's
/// length stay in that child (insertion at its end).
fn descend<S: NodeRead>(s: &mut S, pos: usize, append_ok: bool) -> Result<(Vec<Step>, NodeId, RawNode, usize), Fault> {
    let h = s.header()?;
    let mut path = Vec::with_capacity(h.height as usize);
    let mut id = h.root;
    let mut node = s.node(id)?;
    let mut pos = pos;
    while !node.is_leaf() {
        let k = node.child_count();
        let mut chosen = None;
        for c in 0..k {
            let cid = node.child(c);
            if c + 1 < k {
                let len = s.summary(cid)?.num_parens as usize;
                let fits = if append_ok { pos <= len } else { pos < len };
                if !fits {
                    pos -= len;
                    continue;
                }
            }
            chosen = Some((c, cid, s.node(cid)?));
            break;
        }
        let (c, cid, child) = chosen.expect("internal node without children");
        path.push(Step { id, node, child: c });
        id = cid;
        node = child;
    }
    Ok((path, id, node, pos))
}

/// Inserts one parenthesis so that it lands at `pos`.
pub(crate) fn insert_at<S: NodeWrite>(s: &mut S, pos: usize, p: Paren) -> Result<(), Fault> {
    insert_run(s, pos, &[p])
}

/// Inserts `run` so that it starts at `pos`. A run that does not fit in the
/// target leaf goes in one parenthesis at a time.
fn insert_run<S: NodeWrite>(s: &mut S, pos: usize, run: &[Paren]) -> Result<(), Fault> {
    let cap = s.leaf_cap();
    let (path, leaf_id, leaf, local) = descend(s, pos, true)?;
    let block = leaf.block();
    let mut carry = if block.len() + run.len() <= cap {
        let mut b = block;
        for (k, &p) in run.iter().enumerate() {
            b.insert(local + k, p);
        }
        s.put(leaf_id, RawNode::leaf(&b))?;
        None
    } else if run.len() > 1 {
        for &p in run.iter().rev() {
            insert_run(s, pos, &[p])?;
        }
        return Ok(());
    } else {
        let (left, right) = block.insert_split(local, run[0]);
        let rid = s.alloc()?;
        s.put(leaf_id, RawNode::leaf(&left))?;
        s.put(rid, RawNode::leaf(&right))?;
        Some(rid)
    };

    for step in path.iter().rev() {
        let mut ids = children_of(&step.node);
        if let Some(new) = carry.take() {
            ids.insert(step.child + 1, new);
        }
        if ids.len() <= ARITY {
            put_internal(s, step.id, ids.as_slice())?;
        } else {
            let split = ids.len().div_ceil(2);
            let rid = s.alloc()?;
            put_internal(s, step.id, &ids.as_slice()[..split])?;
            put_internal(s, rid, &ids.as_slice()[split..])?;
            carry = Some(rid);
        }
    }

    if let Some(new) = carry {
        let h = s.header()?;
        let root = s.alloc()?;
        put_internal(s, root, &[h.root, new])?;
        s.set_header(Header { root, height: h.height + 1 })?;
    }
    Ok(())
}

/// Repairs the underflowing child at index `c` of `ids` by stealing from or
/// merging with an adjacent sibling.
fn repair<S: NodeWrite>(s: &mut S, ids: &mut Children, c: usize) -> Result<(), Fault> {
    let cap = s.leaf_cap();
    let sib = if c > 0 { c - 1 } else { c + 1 };
    let (l, r) = if sib < c { (sib, c) } else { (c, sib) };
    let (lid, rid) = (ids.as_slice()[l], ids.as_slice()[r]);
    let (left, right) = (s.node(lid)?, s.node(rid)?);
    let (short, donor) = if sib < c { (&right, &left) } else { (&left, &right) };

    if left.is_leaf() {
        let min = min_leaf(cap);
        let need = min - short.len();
        let (lb, rb) = (left.block(), right.block());
        if donor.len() >= min + need {
            let (nl, nr) = if sib < c {
                // left donates its tail
                let mut moved = lb.slice(lb.len() - need, lb.len());
                moved.append(&rb);
                (lb.slice(0, lb.len() - need), moved)
            } else {
                let mut kept = lb;
                kept.append(&rb.slice(0, need));
                (kept, rb.slice(need, rb.len()))
            };
            s.put(lid, RawNode::leaf(&nl))?;
            s.put(rid, RawNode::leaf(&nr))?;
        } else {
            let mut merged: ParenBlock = lb;
            merged.append(&rb);
            s.put(lid, RawNode::leaf(&merged))?;
            s.release(rid)?;
            ids.remove(r);
        }
    } else {
        let need = MIN_CHILDREN - short.child_count();
        let lk = children_of(&left);
        let rk = children_of(&right);
        let mut all = [0 as NodeId; 2 * ARITY];
        let n = lk.len() + rk.len();
        all[..lk.len()].copy_from_slice(lk.as_slice());
        all[lk.len()..n].copy_from_slice(rk.as_slice());
        if donor.child_count() >= MIN_CHILDREN + need {
            let cut = if sib < c { lk.len() - need } else { lk.len() + need };
            put_internal(s, lid, &all[..cut])?;
            put_internal(s, rid, &all[cut..n])?;
        } else {
            put_internal(s, lid, &all[..n])?;
            s.release(rid)?;
            ids.remove(r);
        }
    }
    Ok(())
}

/// Removes the parenthesis at `pos` and returns it.
pub(crate) fn delete_at<S: NodeWrite>(s: &mut S, pos: usize) -> Result<Paren, Fault> {
    delete_run(s, pos, 1)
}

/// Removes `count` parentheses starting at `pos` and returns the first.
/// A run that spans two leaves is removed one parenthesis at a time.
fn delete_run<S: NodeWrite>(s: &mut S, pos: usize, count: usize) -> Result<Paren, Fault> {
    let cap = s.leaf_cap();
    let (path, leaf_id, leaf, local) = descend(s, pos, false)?;
    let mut b = leaf.block();
    if local + count > b.len() {
        for k in (1..count).rev() {
            delete_run(s, pos + k, 1)?;
        }
        return delete_run(s, pos, 1);
    }
    let removed = b.get(local);
    for _ in 0..count {
        b.remove(local);
    }
    s.put(leaf_id, RawNode::leaf(&b))?;

    let mut child_short = !path.is_empty() && b.len() < min_leaf(cap);
    for (depth, step) in path.iter().enumerate().rev() {
        let mut ids = children_of(&step.node);
        if child_short {
            repair(s, &mut ids, step.child)?;
        }
        put_internal(s, step.id, ids.as_slice())?;
        child_short = depth > 0 && ids.len() < MIN_CHILDREN;
    }

    // collapse single-child roots
    loop {
        let h = s.header()?;
        let root = s.node(h.root)?;
        if root.is_leaf() || root.child_count() > 1 {
            break;
        }
        let only = root.child(0);
        s.release(h.root)?;
        s.set_header(Header { root: only, height: h.height - 1 })?;
    }
    Ok(removed)
}

/// Wraps the run `[i, j)` of complete subtrees in a new node: an open lands
/// at `i` and its close at `j + 1`.
pub(crate) fn insert_pair<S: NodeWrite>(s: &mut S, i: usize, j: usize) -> Result<(), Fault> {
    let n = query::total(s)?;
    if j > n {
        return Err(Error::OutOfRange { pos: j, len: n }.into());
    }
    if i > j {
        return Err(Error::BadRange { from: i, to: j }.into());
    }
    if n + 2 > MAX_PARENS {
        return Err(Error::TooLarge { len: n + 2 }.into());
    }
    if j > i {
        let run = query::range_summary(s, i, j)?;
        if run.total_excess != 0 || run.min_excess < 0 {
            return Err(Error::InvalidWrap { from: i, to: j }.into());
        }
    }
    if i == j {
        return insert_run(s, i, &[Paren::Open, Paren::Close]);
    }
    insert_at(s, j, Paren::Close)?;
    insert_at(s, i, Paren::Open)?;
    Ok(())
}

/// Removes the node opened at `i`; its children move up to its parent.
/// Returns the position of the removed close.
pub(crate) fn delete_pair<S: NodeWrite>(s: &mut S, i: usize) -> Result<usize, Fault> {
    let close = query::find_close(s, i)?;
    if close == i + 1 {
        delete_run(s, i, 2)?;
    } else {
        delete_at(s, close)?;
        delete_at(s, i)?;
    }
    Ok(close)
}

//! Read-only navigation over any [`NodeRead`] store.
//!
//! Searches descend only into children whose `[min, max]` excess window
//! contains the target, so each query reads O(height * ARITY) nodes.

use arrayvec::ArrayVec;

use crate::bp::{BwdMatch, NodeSummary, Paren, ParenBlock};
use crate::error::Error;
use crate::node::{NodeId, RawNode, ARITY};
use crate::store::{Fault, NodeRead};

pub(crate) fn root<S: NodeRead>(s: &mut S) -> Result<RawNode, Fault> {
    let h = s.header()?;
    s.node(h.root)
}

pub(crate) fn total<S: NodeRead>(s: &mut S) -> Result<usize, Fault> {
    Ok(root(s)?.len())
}

fn check_pos(pos: usize, len: usize) -> Result<(), Fault> {
    if pos < len {
        Ok(())
    } else {
        Err(Error::OutOfRange { pos, len }.into())
    }
}

/// Non-root internal nodes keep at least three children, so no addressable
/// tree gets this deep.
const MAX_HEIGHT: usize = 24;

/// One internal node on the path to a probed leaf.
#[derive(Clone, Copy, Default)]
struct Level {
    kids: [NodeId; ARITY],
    count: u8,
    chosen: u8,
}

/// A located position: its leaf block, the offset inside it, the leaf's
/// first position, the excess right before the leaf, and the internal nodes
/// above it (root first).
pub(crate) struct Probe {
    block: ParenBlock,
    local: usize,
    start: usize,
    base: i32,
    path: ArrayVec<Level, MAX_HEIGHT>,
}

impl Probe {
    pub(crate) fn pos(&self) -> usize {
        self.start + self.local
    }

    pub(crate) fn paren(&self) -> Paren {
        self.block.get(self.local)
    }

    pub(crate) fn excess(&self) -> i32 {
        self.base + self.block.prefix_excess(self.local)
    }

    pub(crate) fn new() -> Probe {
        Probe {
            block: ParenBlock::new(),
            local: 0,
            start: 0,
            base: 0,
            path: ArrayVec::new(),
        }
    }

    fn levels(&self) -> impl Iterator<Item = &Level> {
        self.path.iter().rev()
    }
}

/// Descends to the leaf holding position `i`, recording the way into `p`.
pub(crate) fn probe<S: NodeRead>(s: &mut S, i: usize, p: &mut Probe) -> Result<(), Fault> {
    let mut node = root(s)?;
    check_pos(i, node.len())?;
    p.path.clear();
    let (mut pos, mut start, mut base) = (i, 0, 0);
    while !node.is_leaf() {
        let k = node.child_count();
        let mut level = Level { count: k as u8, ..Level::default() };
        level.kids[..k].copy_from_slice(&node.child_ids()[..k]);
        for c in 0..k {
            let id = node.child(c);
            if c + 1 < k {
                let sum = s.summary(id)?;
                let len = sum.num_parens as usize;
                if pos >= len {
                    pos -= len;
                    start += len;
                    base += sum.total_excess;
                    continue;
                }
            }
            level.chosen = c as u8;
            node = s.node(id)?;
            break;
        }
        p.path.push(level);
    }
    p.block = node.block();
    p.local = pos;
    p.start = start;
    p.base = base;
    Ok(())
}

pub(crate) fn access<S: NodeRead>(s: &mut S, i: usize) -> Result<Paren, Fault> {
    let mut p = Probe::new();
    probe(s, i, &mut p)?;
    Ok(p.paren())
}

pub(crate) fn excess<S: NodeRead>(s: &mut S, i: usize) -> Result<i32, Fault> {
    let mut p = Probe::new();
    probe(s, i, &mut p)?;
    Ok(p.excess())
}

fn fwd_in<S: NodeRead>(
    s: &mut S,
    node: &RawNode,
    start: usize,
    base: i32,
    from: usize,
    target: i32,
) -> Result<Option<usize>, Fault> {
    if node.is_leaf() {
        let b = node.block();
        let local = from.saturating_sub(start);
        if local >= b.len() {
            return Ok(None);
        }
        let before = base + b.excess_before(local);
        return Ok(b.scan_fwd(local, before, target).map(|j| start + j));
    }
    let mut cs = start;
    let mut cb = base;
    for id in node.children() {
        let sum = s.summary(id)?;
        let len = sum.num_parens as usize;
        if cs + len > from && sum.reaches(cb, target) {
            let child = s.node(id)?;
            if let Some(j) = fwd_in(s, &child, cs, cb, from, target)? {
                return Ok(Some(j));
            }
        }
        cs += len;
        cb += sum.total_excess;
    }
    Ok(None)
}

fn bwd_in<S: NodeRead>(
    s: &mut S,
    node: &RawNode,
    start: usize,
    base: i32,
    before: usize,
    target: i32,
) -> Result<Option<usize>, Fault> {
    if node.is_leaf() {
        let b = node.block();
        let local = (before - start).min(b.len());
        let end = base + b.excess_before(local);
        return Ok(b.scan_bwd(local, end, target).ok().map(|j| start + j));
    }
    let mut kids = [(0, NodeSummary::EMPTY, 0usize, 0i32); ARITY];
    let mut n = 0;
    let mut cs = start;
    let mut cb = base;
    for id in node.children() {
        if cs >= before {
            break;
        }
        let sum = s.summary(id)?;
        kids[n] = (id, sum, cs, cb);
        n += 1;
        cs += sum.num_parens as usize;
        cb += sum.total_excess;
    }
    for &(id, sum, cs, cb) in kids[..n].iter().rev() {
        if sum.reaches(cb, target) {
            let child = s.node(id)?;
            if let Some(j) = bwd_in(s, &child, cs, cb, before, target)? {
                return Ok(Some(j));
            }
        }
    }
    Ok(None)
}

/// Smallest `j` after the probed position with `excess(j) = target`. The
/// probed leaf is scanned first, then right siblings along the path upwards.
fn fwd_after<S: NodeRead>(s: &mut S, p: &Probe, target: i32) -> Result<Option<usize>, Fault> {
    if let Some(j) = p.block.scan_fwd(p.local + 1, p.excess(), target) {
        return Ok(Some(p.start + j));
    }
    let mut end = p.start + p.block.len();
    let mut eb = p.base + p.block.excess_before(p.block.len());
    for level in p.levels() {
        for &id in &level.kids[level.chosen as usize + 1..level.count as usize] {
            let sum = s.summary(id)?;
            if sum.reaches(eb, target) {
                let child = s.node(id)?;
                if let Some(j) = fwd_in(s, &child, end, eb, end, target)? {
                    return Ok(Some(j));
                }
            }
            end += sum.num_parens as usize;
            eb += sum.total_excess;
        }
    }
    Ok(None)
}

/// Largest `j` before the probed position with `excess(j) = target`.
fn bwd_from<S: NodeRead>(s: &mut S, p: &Probe, target: i32) -> Result<BwdMatch, Fault> {
    let end = p.base + p.block.excess_before(p.local);
    if let Ok(j) = p.block.scan_bwd(p.local, end, target) {
        return Ok(BwdMatch::At(p.start + j));
    }
    let mut start = p.start;
    let mut base = p.base;
    for level in p.levels() {
        for &id in level.kids[..level.chosen as usize].iter().rev() {
            let sum = s.summary(id)?;
            let before = start;
            start -= sum.num_parens as usize;
            base -= sum.total_excess;
            if sum.reaches(base, target) {
                let child = s.node(id)?;
                if let Some(j) = bwd_in(s, &child, start, base, before, target)? {
                    return Ok(BwdMatch::At(j));
                }
            }
        }
    }
    Ok(if target == 0 { BwdMatch::LeftEdge } else { BwdMatch::NotFound })
}

/// Smallest `j > i` with `excess(j) = excess(i) + d`.
pub(crate) fn fwd_search<S: NodeRead>(s: &mut S, i: usize, d: i32) -> Result<Option<usize>, Fault> {
    let mut p = Probe::new();
    probe(s, i, &mut p)?;
    fwd_after(s, &p, p.excess() + d)
}

/// Largest `j < i` with `excess(j) = excess(i) + d`, or the left-edge sentinel.
pub(crate) fn bwd_search<S: NodeRead>(s: &mut S, i: usize, d: i32) -> Result<BwdMatch, Fault> {
    let mut p = Probe::new();
    probe(s, i, &mut p)?;
    bwd_from(s, &p, p.excess() + d)
}

fn expect_open(p: &Probe) -> Result<(), Fault> {
    if p.paren() == Paren::Open {
        Ok(())
    } else {
        Err(Error::NotOpen(p.pos()).into())
    }
}

pub(crate) fn close_of<S: NodeRead>(s: &mut S, p: &Probe) -> Result<usize, Fault> {
    expect_open(p)?;
    fwd_after(s, p, p.excess() - 1)?.ok_or(Fault::Op(Error::Unmatched(p.pos())))
}

pub(crate) fn parent_of<S: NodeRead>(s: &mut S, p: &Probe) -> Result<Option<usize>, Fault> {
    expect_open(p)?;
    let e = p.excess();
    if e == 1 {
        return Ok(None);
    }
    match bwd_from(s, p, e - 2)?.next_position() {
        Some(j) => Ok(Some(j)),
        None => Err(Error::Unmatched(p.pos()).into()),
    }
}

pub(crate) fn depth_of(p: &Probe) -> Result<usize, Fault> {
    expect_open(p)?;
    Ok(p.excess().max(0) as usize)
}

pub(crate) fn find_close<S: NodeRead>(s: &mut S, i: usize) -> Result<usize, Fault> {
    let mut p = Probe::new();
    probe(s, i, &mut p)?;
    close_of(s, &p)
}

pub(crate) fn find_open<S: NodeRead>(s: &mut S, i: usize) -> Result<usize, Fault> {
    let mut p = Probe::new();
    probe(s, i, &mut p)?;
    if p.paren() != Paren::Close {
        return Err(Error::NotClose(i).into());
    }
    bwd_from(s, &p, p.excess())?.next_position().ok_or(Fault::Op(Error::Unmatched(i)))
}

/// Opening position of the parent, `None` for a root of the forest.
pub(crate) fn enclose<S: NodeRead>(s: &mut S, i: usize) -> Result<Option<usize>, Fault> {
    let mut p = Probe::new();
    probe(s, i, &mut p)?;
    parent_of(s, &p)
}

pub(crate) fn depth<S: NodeRead>(s: &mut S, i: usize) -> Result<usize, Fault> {
    let mut p = Probe::new();
    probe(s, i, &mut p)?;
    depth_of(&p)
}

pub(crate) fn subtree_size<S: NodeRead>(s: &mut S, i: usize) -> Result<usize, Fault> {
    let c = find_close(s, i)?;
    Ok((c - i).div_ceil(2))
}

fn range_in<S: NodeRead>(s: &mut S, node: &RawNode, start: usize, from: usize, to: usize) -> Result<NodeSummary, Fault> {
    let end = start + node.len();
    if from <= start && end <= to {
        return Ok(node.summary());
    }
    if node.is_leaf() {
        let b = node.block();
        let lo = from.max(start) - start;
        let hi = to.min(end) - start;
        return Ok(b.summarize_range(lo, hi));
    }
    let mut acc = NodeSummary::EMPTY;
    let mut cs = start;
    for id in node.children() {
        if cs >= to {
            break;
        }
        let child = s.node(id)?;
        let ce = cs + child.len();
        if ce > from {
            acc = crate::bp::combine(acc, range_in(s, &child, cs, from, to)?);
        }
        cs = ce;
    }
    Ok(acc)
}

/// Relative summary of the positions `from..to`.
pub(crate) fn range_summary<S: NodeRead>(s: &mut S, from: usize, to: usize) -> Result<NodeSummary, Fault> {
    let r = root(s)?;
    if from >= to {
        return Ok(NodeSummary::EMPTY);
    }
    range_in(s, &r, 0, from, to)
}

/// Minimum of `excess(k)` over `k` in `i..=j` and how often it occurs.
pub(crate) fn range_min<S: NodeRead>(s: &mut S, i: usize, j: usize) -> Result<(i32, u32), Fault> {
    let n = total(s)?;
    if i > j {
        return Err(Error::BadRange { from: i, to: j }.into());
    }
    check_pos(j, n)?;
    let base = if i == 0 { 0 } else { excess(s, i - 1)? };
    let sum = range_summary(s, i, j + 1)?;
    Ok((base + sum.min_excess, sum.min_count))
}

/// Smallest `q >= from` such that positions `q, q + 1` hold `()`.
pub(crate) fn leaf_pair_from<S: NodeRead>(s: &mut S, from: usize) -> Result<Option<usize>, Fault> {
    let n = total(s)?;
    let mut pos = from;
    let mut prev_open = false;
    let mut p = Probe::new();
    while pos < n {
        probe(s, pos, &mut p)?;
        let b = &p.block;
        for k in p.local..b.len() {
            let q = b.get(k);
            if q == Paren::Close && prev_open {
                return Ok(Some(p.start + k - 1));
            }
            prev_open = q == Paren::Open;
        }
        pos = p.start + b.len();
    }
    Ok(None)
}

/// Probes the node covering position `key % len` into `p`: the position
/// itself if it is an open, else its matching open. False on an empty tree.
pub(crate) fn open_at_key<S: NodeRead>(s: &mut S, key: u64, p: &mut Probe) -> Result<bool, Fault> {
    let n = total(s)?;
    if n == 0 {
        return Ok(false);
    }
    probe(s, (key % n as u64) as usize, p)?;
    if p.paren() == Paren::Close {
        let o = bwd_from(s, p, p.excess())?.next_position().ok_or(Fault::Op(Error::Unmatched(p.pos())))?;
        if o >= p.start {
            p.local = o - p.start;
        } else {
            probe(s, o, p)?;
        }
    }
    Ok(true)
}

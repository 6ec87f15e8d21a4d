use crate::bp::{combine, NodeSummary, ParenSeq};
use crate::error::Error;
use crate::node::{NodeId, RawNode, ARITY, MIN_CHILDREN};
use crate::store::{Header, LocalStore};

use super::update::{min_leaf, MAX_PARENS};

/// Splits `n` units into chunks of `per`, folding a short tail into the
/// previous chunk (or splitting the two evenly when they do not fit).
fn chunk_sizes(n: usize, per: usize, min: usize, cap: usize) -> Vec<usize> {
    let mut sizes = vec![per; n / per];
    let rem = n % per;
    if rem > 0 {
        if sizes.is_empty() || rem >= min {
            sizes.push(rem);
        } else {
            let joined = sizes.pop().unwrap() + rem;
            if joined <= cap {
                sizes.push(joined);
            } else {
                sizes.push(joined.div_ceil(2));
                sizes.push(joined / 2);
            }
        }
    }
    sizes
}

pub(crate) fn build(seq: &ParenSeq, leaf_cap: usize, leaf_fill: f64) -> Result<LocalStore, Error> {
    if !(leaf_fill > 0.0 && leaf_fill <= 1.0) {
        return Err(Error::Config(format!("leaf fill {leaf_fill} outside (0, 1]")));
    }
    if !(2..=crate::bp::LEAF_CAP).contains(&leaf_cap) {
        return Err(Error::Config(format!("leaf capacity {leaf_cap} outside [2, {}]", crate::bp::LEAF_CAP)));
    }
    if seq.len() > MAX_PARENS {
        return Err(Error::TooLarge { len: seq.len() });
    }
    let n = seq.len();
    let min = min_leaf(leaf_cap);
    let per = ((leaf_fill * leaf_cap as f64).floor() as usize).clamp(min.max(1), leaf_cap);

    let mut store = LocalStore::new(leaf_cap);
    let mut level: Vec<(NodeId, NodeSummary)> = Vec::new();
    let mut at = 0;
    for size in chunk_sizes(n, per, min, leaf_cap) {
        let leaf = RawNode::leaf(&seq.block(at, size));
        level.push((store.push(leaf), leaf.summary()));
        at += size;
    }
    if level.is_empty() {
        let leaf = RawNode::leaf(&crate::bp::ParenBlock::new());
        level.push((store.push(leaf), leaf.summary()));
    }

    let mut height = 1;
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len() / ARITY + 2);
        let mut it = level.iter();
        for size in chunk_sizes(level.len(), ARITY, MIN_CHILDREN, ARITY) {
            let group: Vec<(NodeId, NodeSummary)> = it.by_ref().take(size).copied().collect();
            let ids: Vec<NodeId> = group.iter().map(|g| g.0).collect();
            let sum = group.iter().fold(NodeSummary::EMPTY, |acc, g| combine(acc, g.1));
            next.push((store.push(RawNode::internal(&ids, sum)), sum));
        }
        level = next;
        height += 1;
    }
    store.set_header_direct(Header { root: level[0].0, height });
    Ok(store)
}

//! One-cache-line node layout.
//!
//! Every node is exactly 64 bytes: five 8-byte slots (child references for
//! internal nodes, parenthesis bits for leaves), the five 4-byte summary
//! values, and a 4-byte discriminator. The same bytes can be viewed as eight
//! `u64` words, which is how the shared arena moves them around.

use crate::bp::{NodeSummary, ParenBlock, LEAF_WORDS};

/// Maximum number of children of an internal node.
pub const ARITY: usize = 5;

/// Minimum number of children of a non-root internal node.
pub const MIN_CHILDREN: usize = ARITY.div_ceil(2);

/// Index of a node in its store. Stored in 8-byte slots.
pub type NodeId = u32;

const TAG_LEAF: u32 = 0;
const TAG_INTERNAL: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Leaf,
    Internal,
}

#[repr(C, align(64))]
#[derive(Clone, Copy, PartialEq, Eq, Default)]
pub struct RawNode {
    slots: [u64; ARITY],
    total_excess: i32,
    min_excess: i32,
    max_excess: i32,
    min_count: u32,
    num_parens: u32,
    // low byte: kind; next byte: child count for internal nodes
    tag: u32,
}

const _: () = assert!(std::mem::size_of::<RawNode>() == 64);
const _: () = assert!(std::mem::align_of::<RawNode>() == 64);
const _: () = assert!(ARITY == LEAF_WORDS);

impl RawNode {
    pub fn leaf(block: &ParenBlock) -> Self {
        let mut n = RawNode { slots: *block.words(), tag: TAG_LEAF, ..Default::default() };
        n.set_summary(crate::bp::summarize_block(block));
        n
    }

    pub fn internal(children: &[NodeId], summary: NodeSummary) -> Self {
        assert!(!children.is_empty() && children.len() <= ARITY, "bad child count {}", children.len());
        let mut slots = [0u64; ARITY];
        for (s, &c) in slots.iter_mut().zip(children) {
            *s = c as u64;
        }
        let mut n = RawNode { slots, tag: TAG_INTERNAL | ((children.len() as u32) << 8), ..Default::default() };
        n.set_summary(summary);
        n
    }

    #[inline]
    pub fn kind(&self) -> NodeKind {
        if self.tag & 0xff == TAG_LEAF {
            NodeKind::Leaf
        } else {
            NodeKind::Internal
        }
    }

    #[inline]
    pub fn is_leaf(&self) -> bool {
        self.kind() == NodeKind::Leaf
    }

    #[inline]
    pub fn summary(&self) -> NodeSummary {
        NodeSummary {
            total_excess: self.total_excess,
            min_excess: self.min_excess,
            max_excess: self.max_excess,
            min_count: self.min_count,
            num_parens: self.num_parens,
        }
    }

    pub fn set_summary(&mut self, s: NodeSummary) {
        self.total_excess = s.total_excess;
        self.min_excess = s.min_excess;
        self.max_excess = s.max_excess;
        self.min_count = s.min_count;
        self.num_parens = s.num_parens;
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.num_parens as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.num_parens == 0
    }

    /// The parenthesis bits of a leaf.
    #[inline]
    pub fn block(&self) -> ParenBlock {
        debug_assert!(self.is_leaf());
        ParenBlock::from_words(self.slots, self.num_parens as usize)
    }

    #[inline]
    pub fn child_count(&self) -> usize {
        debug_assert!(!self.is_leaf());
        ((self.tag >> 8) & 0xff) as usize
    }

    #[inline]
    pub fn child(&self, k: usize) -> NodeId {
        debug_assert!(k < self.child_count());
        self.slots[k] as NodeId
    }

    /// Child ids of an internal node, one per slot.
    #[inline]
    pub fn child_ids(&self) -> [NodeId; ARITY] {
        self.slots.map(|w| w as NodeId)
    }

    pub fn children(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.slots[..self.child_count()].iter().map(|&s| s as NodeId)
    }

    /// The eight-word image used by the shared arena.
    pub fn to_words(&self) -> [u64; 8] {
        let pair = |lo: u32, hi: u32| (lo as u64) | ((hi as u64) << 32);
        [
            self.slots[0],
            self.slots[1],
            self.slots[2],
            self.slots[3],
            self.slots[4],
            pair(self.total_excess as u32, self.min_excess as u32),
            pair(self.max_excess as u32, self.min_count),
            pair(self.num_parens, self.tag),
        ]
    }

    /// Summary decoded from the last three words of the image.
    pub fn summary_from_words(w: [u64; 3]) -> NodeSummary {
        NodeSummary {
            total_excess: w[0] as u32 as i32,
            min_excess: (w[0] >> 32) as u32 as i32,
            max_excess: w[1] as u32 as i32,
            min_count: (w[1] >> 32) as u32,
            num_parens: w[2] as u32,
        }
    }

    pub fn from_words(w: [u64; 8]) -> Self {
        let lo = |x: u64| x as u32;
        let hi = |x: u64| (x >> 32) as u32;
        RawNode {
            slots: [w[0], w[1], w[2], w[3], w[4]],
            total_excess: lo(w[5]) as i32,
            min_excess: hi(w[5]) as i32,
            max_excess: lo(w[6]) as i32,
            min_count: hi(w[6]),
            num_parens: lo(w[7]),
            tag: hi(w[7]),
        }
    }
}

impl std::fmt::Debug for RawNode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind() {
            NodeKind::Leaf => f.debug_struct("Leaf").field("summary", &self.summary()).field("block", &self.block()).finish(),
            NodeKind::Internal => f
                .debug_struct("Internal")
                .field("summary", &self.summary())
                .field("children", &self.children().collect::<Vec<_>>())
                .finish(),
        }
    }
}

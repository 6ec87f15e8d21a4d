//! Balanced-parentheses kernel.
//!
//! Sequential primitives over raw parenthesis blocks: prefix-excess scans,
//! block summaries and the summary algebra used by the internal nodes of
//! the min-max tree.
//!
//! Bits are stored LSB-first inside little 64-bit words, `1` is an open
//! parenthesis and `0` a close one. Excess values are inclusive prefix sums
//! (`excess(i)` counts position `i`), with the sentinel `excess(-1) = 0`.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Maximum number of parentheses stored in one leaf: five 64-bit words.
pub const LEAF_CAP: usize = 320;

/// Number of words backing a [`ParenBlock`].
pub const LEAF_WORDS: usize = LEAF_CAP / 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Paren {
    Open,
    Close,
}

impl Paren {
    #[inline]
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Paren::Open
        } else {
            Paren::Close
        }
    }

    #[inline]
    pub fn is_open(self) -> bool {
        self == Paren::Open
    }

    /// `+1` for an open parenthesis, `-1` for a close one.
    #[inline]
    pub fn step(self) -> i32 {
        match self {
            Paren::Open => 1,
            Paren::Close => -1,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Paren::Open => '(',
            Paren::Close => ')',
        }
    }
}

/// The five values kept for every range of the sequence.
///
/// The empty range is represented by all zeros; it is the identity of
/// [`combine`] and its `min_excess`/`max_excess` are never consulted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct NodeSummary {
    pub total_excess: i32,
    pub min_excess: i32,
    pub max_excess: i32,
    pub min_count: u32,
    pub num_parens: u32,
}

impl NodeSummary {
    pub const EMPTY: NodeSummary = NodeSummary {
        total_excess: 0,
        min_excess: 0,
        max_excess: 0,
        min_count: 0,
        num_parens: 0,
    };

    pub const OPEN: NodeSummary = NodeSummary {
        total_excess: 1,
        min_excess: 1,
        max_excess: 1,
        min_count: 1,
        num_parens: 1,
    };

    pub const CLOSE: NodeSummary = NodeSummary {
        total_excess: -1,
        min_excess: -1,
        max_excess: -1,
        min_count: 1,
        num_parens: 1,
    };

    #[inline]
    pub fn of(p: Paren) -> Self {
        match p {
            Paren::Open => Self::OPEN,
            Paren::Close => Self::CLOSE,
        }
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.num_parens == 0
    }

    /// True when `base + min_excess ..= base + max_excess` contains `target`,
    /// i.e. some prefix inside the range reaches `target` given the excess
    /// `base` right before the range.
    #[inline]
    pub fn reaches(&self, base: i32, target: i32) -> bool {
        self.num_parens > 0 && base + self.min_excess <= target && target <= base + self.max_excess
    }
}

/// Composes the summaries of two adjacent ranges.
#[inline]
pub fn combine(left: NodeSummary, right: NodeSummary) -> NodeSummary {
    if left.num_parens == 0 {
        return right;
    }
    if right.num_parens == 0 {
        return left;
    }
    let right_min = left.total_excess + right.min_excess;
    let right_max = left.total_excess + right.max_excess;
    let (min_excess, min_count) = match left.min_excess.cmp(&right_min) {
        std::cmp::Ordering::Less => (left.min_excess, left.min_count),
        std::cmp::Ordering::Greater => (right_min, right.min_count),
        std::cmp::Ordering::Equal => (left.min_excess, left.min_count + right.min_count),
    };
    NodeSummary {
        total_excess: left.total_excess + right.total_excess,
        min_excess,
        max_excess: left.max_excess.max(right_max),
        min_count,
        num_parens: left.num_parens + right.num_parens,
    }
}

// Per-byte summaries, bits read LSB-first.
const BYTE_SUMMARY: [NodeSummary; 256] = build_byte_table();

const fn build_byte_table() -> [NodeSummary; 256] {
    let mut table = [NodeSummary::EMPTY; 256];
    let mut b = 0;
    while b < 256 {
        let mut cur = 0i32;
        let mut min = i32::MAX;
        let mut max = i32::MIN;
        let mut count = 0u32;
        let mut t = 0;
        while t < 8 {
            cur += if (b >> t) & 1 == 1 { 1 } else { -1 };
            if cur < min {
                min = cur;
                count = 1;
            } else if cur == min {
                count += 1;
            }
            if cur > max {
                max = cur;
            }
            t += 1;
        }
        table[b] = NodeSummary {
            total_excess: cur,
            min_excess: min,
            max_excess: max,
            min_count: count,
            num_parens: 8,
        };
        b += 1;
    }
    table
}

/// A slice of at most [`LEAF_CAP`] parentheses, bit-packed.
///
/// Bits past `len` are always zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ParenBlock {
    words: [u64; LEAF_WORDS],
    len: u16,
}

impl ParenBlock {
    pub const fn new() -> Self {
        ParenBlock { words: [0; LEAF_WORDS], len: 0 }
    }

    /// Rebuilds a block from raw leaf words. Bits at or above `len` are cleared.
    pub fn from_words(words: [u64; LEAF_WORDS], len: usize) -> Self {
        assert!(len <= LEAF_CAP, "block length {len} exceeds {LEAF_CAP}");
        let mut b = ParenBlock { words, len: len as u16 };
        b.clear_tail();
        b
    }

    /// Builds a block from parentheses; `None` if there are more than [`LEAF_CAP`].
    pub fn from_parens<I: IntoIterator<Item = Paren>>(parens: I) -> Option<Self> {
        let mut b = ParenBlock::new();
        for p in parens {
            if b.is_full() {
                return None;
            }
            b.push(p);
        }
        Some(b)
    }

    #[inline]
    pub fn words(&self) -> &[u64; LEAF_WORDS] {
        &self.words
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn is_full(&self) -> bool {
        self.len() == LEAF_CAP
    }

    #[inline]
    pub fn get(&self, i: usize) -> Paren {
        debug_assert!(i < self.len());
        Paren::from_bit((self.words[i / 64] >> (i % 64)) & 1 == 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = Paren> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    pub fn push(&mut self, p: Paren) {
        assert!(!self.is_full(), "push into a full block");
        let i = self.len();
        if p.is_open() {
            self.words[i / 64] |= 1 << (i % 64);
        }
        self.len += 1;
    }

    /// Inserts `p` so that it ends up at position `i`. The block must not be full.
    pub fn insert(&mut self, i: usize, p: Paren) {
        assert!(i <= self.len(), "insert position {i} past length {}", self.len());
        assert!(!self.is_full(), "insert into a full block");
        let w = i / 64;
        let off = i % 64;
        for j in (w + 1..LEAF_WORDS).rev() {
            self.words[j] = (self.words[j] << 1) | (self.words[j - 1] >> 63);
        }
        let low_mask = (1u64 << off) - 1;
        let low = self.words[w] & low_mask;
        let high = (self.words[w] & !low_mask) << 1;
        let bit = if p.is_open() { 1u64 << off } else { 0 };
        self.words[w] = low | high | bit;
        self.len += 1;
    }

    /// Removes and returns the parenthesis at position `i`.
    pub fn remove(&mut self, i: usize) -> Paren {
        assert!(i < self.len(), "remove position {i} out of range");
        let removed = self.get(i);
        let w = i / 64;
        let off = i % 64;
        let low_mask = (1u64 << off) - 1;
        let low = self.words[w] & low_mask;
        let high = (self.words[w] >> 1) & !low_mask;
        self.words[w] = low | high;
        for j in w..LEAF_WORDS - 1 {
            self.words[j] |= (self.words[j + 1] & 1) << 63;
            self.words[j + 1] >>= 1;
        }
        self.len -= 1;
        self.clear_tail();
        removed
    }

    /// Copies positions `from..to` into a new block.
    pub fn slice(&self, from: usize, to: usize) -> ParenBlock {
        assert!(from <= to && to <= self.len());
        let n = to - from;
        let mut out = ParenBlock::new();
        let shift = from % 64;
        let base = from / 64;
        for k in 0..n.div_ceil(64) {
            let lo = self.words.get(base + k).copied().unwrap_or(0) >> shift;
            let hi = if shift == 0 {
                0
            } else {
                self.words.get(base + k + 1).copied().unwrap_or(0) << (64 - shift)
            };
            out.words[k] = lo | hi;
        }
        out.len = n as u16;
        out.clear_tail();
        out
    }

    /// Appends all of `other`. The combined length must fit.
    pub fn append(&mut self, other: &ParenBlock) {
        let n = self.len();
        assert!(n + other.len() <= LEAF_CAP, "append overflows block");
        let shift = n % 64;
        let base = n / 64;
        for k in 0..other.len().div_ceil(64) {
            let w = other.words[k];
            self.words[base + k] |= w << shift;
            if shift != 0 && base + k + 1 < LEAF_WORDS {
                self.words[base + k + 1] |= w >> (64 - shift);
            }
        }
        self.len += other.len;
    }

    /// Inserts `p` at `i` and splits the result in two halves, the left one
    /// taking the ceiling. Works on full blocks as well.
    pub fn insert_split(&self, i: usize, p: Paren) -> (ParenBlock, ParenBlock) {
        let n = self.len();
        assert!(i <= n);
        let left_len = (n + 2) / 2;
        if !self.is_full() {
            let mut b = *self;
            b.insert(i, p);
            return (b.slice(0, left_len), b.slice(left_len, n + 1));
        }
        if i < left_len {
            let mut left = self.slice(0, left_len - 1);
            left.insert(i, p);
            (left, self.slice(left_len - 1, n))
        } else {
            let left = self.slice(0, left_len);
            let mut right = self.slice(left_len, n);
            right.insert(i - left_len, p);
            (left, right)
        }
    }

    fn clear_tail(&mut self) {
        let n = self.len();
        for (k, w) in self.words.iter_mut().enumerate() {
            let start = k * 64;
            if start >= n {
                *w = 0;
            } else if n - start < 64 {
                *w &= (1u64 << (n - start)) - 1;
            }
        }
    }

    #[inline]
    fn byte(&self, b: usize) -> u8 {
        (self.words[b / 8] >> ((b % 8) * 8)) as u8
    }

    /// Number of opens in positions `0..n`.
    #[inline]
    pub fn ones_before(&self, n: usize) -> usize {
        debug_assert!(n <= self.len());
        let full = n / 64;
        let mut c: u32 = self.words[..full].iter().map(|w| w.count_ones()).sum();
        if !n.is_multiple_of(64) {
            c += (self.words[full] & ((1u64 << (n % 64)) - 1)).count_ones();
        }
        c as usize
    }

    /// Inclusive local prefix excess at `i`; `i = -1` is not representable, use 0.
    #[inline]
    pub fn prefix_excess(&self, i: usize) -> i32 {
        let ones = self.ones_before(i + 1) as i32;
        2 * ones - (i as i32 + 1)
    }

    /// Excess of the prefix `0..n` (exclusive end), 0 for `n = 0`.
    #[inline]
    pub fn excess_before(&self, n: usize) -> i32 {
        2 * self.ones_before(n) as i32 - n as i32
    }

    /// Summary of positions `from..to` (exclusive end).
    pub fn summarize_range(&self, from: usize, to: usize) -> NodeSummary {
        debug_assert!(from <= to && to <= self.len());
        let mut acc = NodeSummary::EMPTY;
        let mut i = from;
        while i < to && !i.is_multiple_of(8) {
            acc = combine(acc, NodeSummary::of(self.get(i)));
            i += 1;
        }
        while i + 8 <= to {
            acc = combine(acc, BYTE_SUMMARY[self.byte(i / 8) as usize]);
            i += 8;
        }
        while i < to {
            acc = combine(acc, NodeSummary::of(self.get(i)));
            i += 1;
        }
        acc
    }

    /// Smallest `j >= from` whose prefix equals `target`, where `base` is the
    /// prefix value right before `from` (any consistent origin).
    pub fn scan_fwd(&self, from: usize, base: i32, target: i32) -> Option<usize> {
        let n = self.len();
        let mut cur = base;
        let mut i = from;
        while i < n && !i.is_multiple_of(8) {
            cur += self.get(i).step();
            if cur == target {
                return Some(i);
            }
            i += 1;
        }
        while i + 8 <= n {
            let s = BYTE_SUMMARY[self.byte(i / 8) as usize];
            if s.reaches(cur, target) {
                break;
            }
            cur += s.total_excess;
            i += 8;
        }
        while i < n {
            cur += self.get(i).step();
            if cur == target {
                return Some(i);
            }
            i += 1;
        }
        None
    }

    /// Largest `j < before` whose prefix equals `target`. `end` is the prefix
    /// value at `before - 1` (or the value before the block when `before = 0`).
    /// Also returns the prefix value just before position 0 (for the caller's
    /// sentinel handling) when nothing matches.
    pub fn scan_bwd(&self, before: usize, end: i32, target: i32) -> Result<usize, i32> {
        let mut cur = end; // prefix value at position i - 1
        let mut i = before;
        while i > 0 && !i.is_multiple_of(8) {
            let j = i - 1;
            if cur == target {
                return Ok(j);
            }
            cur -= self.get(j).step();
            i -= 1;
        }
        while i >= 8 {
            let s = BYTE_SUMMARY[self.byte(i / 8 - 1) as usize];
            let start = cur - s.total_excess;
            if s.reaches(start, target) {
                // the match is inside this byte
                for j in (i - 8..i).rev() {
                    if cur == target {
                        return Ok(j);
                    }
                    cur -= self.get(j).step();
                }
                unreachable!("byte summary promised a match");
            }
            cur = start;
            i -= 8;
        }
        while i > 0 {
            let j = i - 1;
            if cur == target {
                return Ok(j);
            }
            cur -= self.get(j).step();
            i -= 1;
        }
        Err(cur)
    }
}

impl fmt::Debug for ParenBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ParenBlock(\"")?;
        for p in self.iter() {
            write!(f, "{}", p.as_char())?;
        }
        write!(f, "\")")
    }
}

impl FromStr for ParenBlock {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let seq: ParenSeq = s.parse()?;
        ParenBlock::from_parens(seq.iter()).ok_or(Error::TooLarge { len: seq.len() })
    }
}

/// Summary of a whole block.
pub fn summarize_block(block: &ParenBlock) -> NodeSummary {
    block.summarize_range(0, block.len())
}

/// Smallest `j >= start` whose local prefix equals the prefix before `start`
/// plus `delta`.
pub fn fwd_search_block(block: &ParenBlock, start: usize, delta: i32) -> Option<usize> {
    assert!(start <= block.len(), "start {start} past block length {}", block.len());
    let base = block.excess_before(start);
    block.scan_fwd(start, base, base + delta)
}

/// Outcome of a backward search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BwdMatch {
    At(usize),
    /// Only the virtual position `-1` (excess 0) matches.
    LeftEdge,
    NotFound,
}

impl BwdMatch {
    /// Position right after the match: the sentinel maps to 0.
    pub fn next_position(self) -> Option<usize> {
        match self {
            BwdMatch::At(j) => Some(j + 1),
            BwdMatch::LeftEdge => Some(0),
            BwdMatch::NotFound => None,
        }
    }
}

/// Largest `j < start` whose local prefix equals `prefix(start) + delta`.
pub fn bwd_search_block(block: &ParenBlock, start: usize, delta: i32) -> BwdMatch {
    assert!(start < block.len(), "start {start} out of block range {}", block.len());
    let at_start = block.prefix_excess(start);
    let target = at_start + delta;
    let before = at_start - block.get(start).step();
    match block.scan_bwd(start, before, target) {
        Ok(j) => BwdMatch::At(j),
        Err(edge) if edge == target => BwdMatch::LeftEdge,
        Err(_) => BwdMatch::NotFound,
    }
}

/// A bit-packed, growable parenthesis sequence.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct ParenSeq {
    words: Vec<u64>,
    len: usize,
}

impl ParenSeq {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        ParenSeq { words: Vec::with_capacity(n.div_ceil(64)), len: 0 }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, p: Paren) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        if p.is_open() {
            self.words[self.len / 64] |= 1 << (self.len % 64);
        }
        self.len += 1;
    }

    pub fn get(&self, i: usize) -> Option<Paren> {
        (i < self.len).then(|| Paren::from_bit((self.words[i / 64] >> (i % 64)) & 1 == 1))
    }

    pub fn iter(&self) -> impl Iterator<Item = Paren> + '_ {
        (0..self.len).map(move |i| Paren::from_bit((self.words[i / 64] >> (i % 64)) & 1 == 1))
    }

    /// Copies `len <= LEAF_CAP` parentheses starting at `from` into a block.
    pub fn block(&self, from: usize, len: usize) -> ParenBlock {
        assert!(len <= LEAF_CAP && from + len <= self.len);
        let mut words = [0u64; LEAF_WORDS];
        let shift = from % 64;
        let base = from / 64;
        for (k, w) in words.iter_mut().enumerate().take(len.div_ceil(64)) {
            let lo = self.words.get(base + k).copied().unwrap_or(0) >> shift;
            let hi = if shift == 0 { 0 } else { self.words.get(base + k + 1).copied().unwrap_or(0) << (64 - shift) };
            *w = lo | hi;
        }
        ParenBlock::from_words(words, len)
    }

    /// Summary of the whole sequence.
    pub fn summary(&self) -> NodeSummary {
        self.iter().fold(NodeSummary::EMPTY, |acc, p| combine(acc, NodeSummary::of(p)))
    }

    /// Total excess 0 and no negative prefix.
    pub fn is_balanced(&self) -> bool {
        let s = self.summary();
        s.total_excess == 0 && (s.is_empty() || s.min_excess >= 0)
    }
}

impl FromIterator<Paren> for ParenSeq {
    fn from_iter<I: IntoIterator<Item = Paren>>(iter: I) -> Self {
        let mut s = ParenSeq::new();
        for p in iter {
            s.push(p);
        }
        s
    }
}

impl FromStr for ParenSeq {
    type Err = Error;

    /// Reads `(` and `)`; anything else is rejected.
    fn from_str(s: &str) -> Result<Self, Error> {
        let mut seq = ParenSeq::with_capacity(s.len());
        for (pos, ch) in s.char_indices() {
            match ch {
                '(' => seq.push(Paren::Open),
                ')' => seq.push(Paren::Close),
                _ => return Err(Error::BadChar { pos, ch }),
            }
        }
        Ok(seq)
    }
}

impl fmt::Display for ParenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.iter().map(Paren::as_char).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for ParenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 64 {
            write!(f, "ParenSeq(\"{self}\")")
        } else {
            write!(f, "ParenSeq(len={})", self.len)
        }
    }
}

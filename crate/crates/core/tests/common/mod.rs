//! Test support shared by the integration targets: a flat linear-scan model
//! of the sequence and a linearizability checker for recorded histories.

#![allow(dead_code)]

pub mod fixtures;
pub mod xml;

use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmmt::{
    Answer, Applied, BwdMatch, ConcurrencyMode, Engine, EngineOptions, Error, NavKind, Paren, ParenSeq, Query, Rmmt, Update,
};

/// The sequence as a plain vector; every answer is a direct scan.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Flat {
    pub bits: Vec<bool>,
}

type R<T> = Result<T, Error>;

impl Flat {
    pub fn parse(s: &str) -> Flat {
        Flat { bits: s.chars().filter(|c| !c.is_whitespace()).map(|c| c == '(').collect() }
    }

    pub fn from_seq(seq: &ParenSeq) -> Flat {
        Flat { bits: seq.iter().map(|p| p == Paren::Open).collect() }
    }

    pub fn from_tree(t: &Rmmt) -> Flat {
        Flat::from_seq(&t.to_seq())
    }

    pub fn to_seq(&self) -> ParenSeq {
        self.bits.iter().map(|&b| if b { Paren::Open } else { Paren::Close }).collect()
    }

    pub fn text(&self) -> String {
        self.bits.iter().map(|&b| if b { '(' } else { ')' }).collect()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    fn step(&self, k: usize) -> i32 {
        if self.bits[k] {
            1
        } else {
            -1
        }
    }

    fn check(&self, i: usize) -> R<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::OutOfRange { pos: i, len: self.len() })
        }
    }

    fn open_at(&self, i: usize) -> R<()> {
        self.check(i)?;
        if self.bits[i] {
            Ok(())
        } else {
            Err(Error::NotOpen(i))
        }
    }

    pub fn excess(&self, i: usize) -> R<i32> {
        self.check(i)?;
        Ok((0..=i).map(|k| self.step(k)).sum())
    }

    pub fn access(&self, i: usize) -> R<Paren> {
        self.check(i)?;
        Ok(if self.bits[i] { Paren::Open } else { Paren::Close })
    }

    pub fn fwd_search(&self, i: usize, d: i32) -> R<Option<usize>> {
        let target = self.excess(i)? + d;
        let mut e = self.excess(i)?;
        for j in i + 1..self.len() {
            e += self.step(j);
            if e == target {
                return Ok(Some(j));
            }
        }
        Ok(None)
    }

    pub fn bwd_search(&self, i: usize, d: i32) -> R<BwdMatch> {
        let target = self.excess(i)? + d;
        // e = excess(j) for j = i - 1 down to 0
        let mut e = self.excess(i)? - self.step(i);
        for j in (0..i).rev() {
            if e == target {
                return Ok(BwdMatch::At(j));
            }
            e -= self.step(j);
        }
        Ok(if target == 0 { BwdMatch::LeftEdge } else { BwdMatch::NotFound })
    }

    pub fn find_close(&self, i: usize) -> R<usize> {
        self.open_at(i)?;
        let mut d = 0;
        for j in i..self.len() {
            d += self.step(j);
            if d == 0 {
                return Ok(j);
            }
        }
        Err(Error::Unmatched(i))
    }

    pub fn find_open(&self, i: usize) -> R<usize> {
        self.check(i)?;
        if self.bits[i] {
            return Err(Error::NotClose(i));
        }
        let mut d = 0;
        for j in (0..=i).rev() {
            d += self.step(j);
            if d == 0 {
                return Ok(j);
            }
        }
        Err(Error::Unmatched(i))
    }

    /// Nearest open strictly before `i` whose pair contains `i`: walking left,
    /// the first open not matched by a close seen on the way.
    pub fn enclose(&self, i: usize) -> R<Option<usize>> {
        self.open_at(i)?;
        let mut pending = 0;
        for j in (0..i).rev() {
            if !self.bits[j] {
                pending += 1;
            } else if pending == 0 {
                return Ok(Some(j));
            } else {
                pending -= 1;
            }
        }
        Ok(None)
    }

    /// One more than the number of opens before `i` still unmatched at `i`.
    pub fn depth(&self, i: usize) -> R<usize> {
        self.open_at(i)?;
        let mut stack = Vec::new();
        for j in 0..i {
            if self.bits[j] {
                stack.push(j);
            } else {
                stack.pop();
            }
        }
        Ok(stack.len() + 1)
    }

    pub fn subtree_size(&self, i: usize) -> R<usize> {
        let c = self.find_close(i)?;
        Ok((i..=c).filter(|&k| self.bits[k]).count())
    }

    pub fn range_min(&self, i: usize, j: usize) -> R<(i32, u32)> {
        if i > j {
            return Err(Error::BadRange { from: i, to: j });
        }
        self.check(j)?;
        let mut e = self.excess(i)? - self.step(i);
        let values: Vec<i32> = (i..=j)
            .map(|k| {
                e += self.step(k);
                e
            })
            .collect();
        let min = *values.iter().min().unwrap();
        Ok((min, values.iter().filter(|&&v| v == min).count() as u32))
    }

    fn nav(&self, kind: NavKind, key: u64) -> R<Answer> {
        if self.len() == 0 {
            return Ok(Answer::Nav { at: None, value: None });
        }
        let p = (key % self.len() as u64) as usize;
        let at = if self.bits[p] { p } else { self.find_open(p)? };
        let value = match kind {
            NavKind::FindClose => Some(self.find_close(at)?),
            NavKind::Enclose => self.enclose(at)?,
            NavKind::Depth => Some(self.depth(at)?),
        };
        Ok(Answer::Nav { at: Some(at), value })
    }

    pub fn answer(&self, q: &Query) -> R<Answer> {
        Ok(match *q {
            Query::Access(i) => Answer::Paren(self.access(i)?),
            Query::Excess(i) => Answer::Excess(self.excess(i)?),
            Query::FwdSearch(i, d) => Answer::Forward(self.fwd_search(i, d)?),
            Query::BwdSearch(i, d) => Answer::Backward(self.bwd_search(i, d)?),
            Query::FindClose(i) => Answer::Position(self.find_close(i)?),
            Query::FindOpen(i) => Answer::Position(self.find_open(i)?),
            Query::Enclose(i) => Answer::Parent(self.enclose(i)?),
            Query::Depth(i) => Answer::Count(self.depth(i)?),
            Query::SubtreeSize(i) => Answer::Count(self.subtree_size(i)?),
            Query::RangeMin(i, j) => {
                let (min, count) = self.range_min(i, j)?;
                Answer::RangeMin { min, count }
            }
            Query::TotalSize => Answer::Count(self.len()),
            Query::RandomNav { kind, key } => self.nav(kind, key)?,
        })
    }

    pub fn insert_pair(&mut self, i: usize, j: usize) -> R<()> {
        if j > self.len() {
            return Err(Error::OutOfRange { pos: j, len: self.len() });
        }
        if i > j {
            return Err(Error::BadRange { from: i, to: j });
        }
        let mut e = 0;
        for k in i..j {
            e += self.step(k);
            if e < 0 {
                return Err(Error::InvalidWrap { from: i, to: j });
            }
        }
        if e != 0 {
            return Err(Error::InvalidWrap { from: i, to: j });
        }
        self.bits.insert(j, false);
        self.bits.insert(i, true);
        Ok(())
    }

    pub fn delete_pair(&mut self, i: usize) -> R<usize> {
        let c = self.find_close(i)?;
        self.bits.remove(c);
        self.bits.remove(i);
        Ok(c)
    }

    pub fn apply(&mut self, u: &Update) -> R<Applied> {
        match *u {
            Update::InsertPair(i, j) => {
                self.insert_pair(i, j)?;
                Ok(Applied::Inserted { open: i, close: j + 1 })
            }
            Update::InsertLeaf(i) => {
                self.insert_pair(i, i)?;
                Ok(Applied::Inserted { open: i, close: i + 1 })
            }
            Update::DeletePair(i) => {
                let close = self.delete_pair(i)?;
                Ok(Applied::Deleted { open: i, close })
            }
            Update::RandomInsertLeaf { key } => {
                let at = (key % (self.len() as u64 + 1)) as usize;
                self.apply(&Update::InsertLeaf(at))
            }
            Update::RandomDeleteLeaf { key } => {
                let n = self.len();
                if n == 0 {
                    return self.apply(&Update::InsertLeaf(0));
                }
                let from = (key % n as u64) as usize;
                let is_pair = |q: usize| q + 1 < n && self.bits[q] && !self.bits[q + 1];
                match (from..n).chain(0..from).find(|&q| is_pair(q)) {
                    Some(q) => self.apply(&Update::DeletePair(q)),
                    None => self.apply(&Update::InsertLeaf(from)),
                }
            }
        }
    }
}

/// Uniform random balanced sequence of `2 * nodes` symbols, built by the
/// cycle lemma independently of the library generator.
pub fn random_dyck<G: Rng>(rng: &mut G, nodes: usize) -> Flat {
    // n + 1 opens and n closes; rotate after the last minimum, then drop the
    // leading open
    let mut v: Vec<bool> = std::iter::repeat_n(true, nodes + 1).chain(std::iter::repeat_n(false, nodes)).collect();
    for k in (1..v.len()).rev() {
        let j = rng.gen_range(0..=k);
        v.swap(k, j);
    }
    let (mut e, mut min, mut at) = (0i64, i64::MAX, 0);
    for (k, &b) in v.iter().enumerate() {
        e += if b { 1 } else { -1 };
        if e <= min {
            min = e;
            at = k + 1;
        }
    }
    let len = v.len();
    v.rotate_left(at % len);
    v.remove(0);
    Flat { bits: v }
}

/// Every balanced sequence of exactly `len` symbols (forests included).
pub fn all_balanced(len: usize) -> Vec<Flat> {
    fn go(len: usize, cur: &mut Vec<bool>, e: usize, out: &mut Vec<Flat>) {
        if cur.len() == len {
            if e == 0 {
                out.push(Flat { bits: cur.clone() });
            }
            return;
        }
        if e < len - cur.len() {
            cur.push(true);
            go(len, cur, e + 1, out);
            cur.pop();
        }
        if e > 0 {
            cur.push(false);
            go(len, cur, e - 1, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(len, &mut Vec::new(), 0, &mut out);
    out
}

/// Every query over positions of `f`, with search offsets in `-3..=3`.
pub fn all_queries(f: &Flat) -> Vec<Query> {
    let n = f.len();
    let mut qs = vec![Query::TotalSize];
    for i in 0..=n {
        qs.extend([
            Query::Access(i),
            Query::Excess(i),
            Query::FindClose(i),
            Query::FindOpen(i),
            Query::Enclose(i),
            Query::Depth(i),
            Query::SubtreeSize(i),
        ]);
        for d in -3..=3 {
            qs.push(Query::FwdSearch(i, d));
            qs.push(Query::BwdSearch(i, d));
        }
        for j in 0..=n {
            qs.push(Query::RangeMin(i, j));
        }
    }
    for key in 0..n as u64 + 1 {
        for kind in [NavKind::FindClose, NavKind::Enclose, NavKind::Depth] {
            qs.push(Query::RandomNav { kind, key });
        }
    }
    qs
}

/// A random query at a valid position of a sequence of length `n > 0`.
pub fn random_query<G: Rng>(rng: &mut G, n: usize) -> Query {
    let i = rng.gen_range(0..n);
    match rng.gen_range(0..11) {
        0 => Query::Access(i),
        1 => Query::Excess(i),
        2 => Query::FwdSearch(i, rng.gen_range(-4..=4)),
        3 => Query::BwdSearch(i, rng.gen_range(-4..=4)),
        4 => Query::FindClose(i),
        5 => Query::FindOpen(i),
        6 => Query::Enclose(i),
        7 => Query::Depth(i),
        8 => Query::SubtreeSize(i),
        9 => {
            let j = rng.gen_range(i..n);
            Query::RangeMin(i, j)
        }
        _ => Query::RandomNav {
            kind: [NavKind::FindClose, NavKind::Enclose, NavKind::Depth][rng.gen_range(0..3)],
            key: rng.gen(),
        },
    }
}

/// Number of logical CPUs.
pub fn cores() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

// ---------------------------------------------------------------------------
// histories

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Call {
    Read(Query),
    Write(Update),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ret {
    Read(Result<Answer, Error>),
    Write(Result<Applied, Error>),
}

/// One completed operation with its invocation and response instants.
#[derive(Clone, Debug)]
pub struct Event {
    pub thread: usize,
    pub call: Call,
    pub ret: Ret,
    pub invoked: u64,
    pub returned: u64,
}

/// Shared logical clock for stamping invocations and responses.
#[derive(Default)]
pub struct Clock(AtomicU64);

impl Clock {
    pub fn tick(&self) -> u64 {
        self.0.fetch_add(1, Ordering::SeqCst)
    }
}

fn random_call<G: Rng>(rng: &mut G) -> Call {
    let small = |rng: &mut G| rng.gen_range(0..12usize);
    match rng.gen_range(0..10) {
        0 | 1 => Call::Read(Query::RandomNav {
            kind: [NavKind::FindClose, NavKind::Enclose, NavKind::Depth][rng.gen_range(0..3)],
            key: rng.gen(),
        }),
        2 => Call::Read(Query::TotalSize),
        3 => Call::Read(Query::Excess(small(rng))),
        4 => Call::Read(Query::FindClose(small(rng))),
        5 => Call::Write(Update::RandomInsertLeaf { key: rng.gen() }),
        6 => Call::Write(Update::RandomDeleteLeaf { key: rng.gen() }),
        7 => Call::Write(Update::InsertPair(small(rng), small(rng))),
        8 => Call::Write(Update::DeletePair(small(rng))),
        _ => Call::Write(Update::InsertLeaf(small(rng))),
    }
}

/// Runs `threads` workers issuing `per_thread` random ops each against one
/// engine and returns the initial sequence with the recorded history.
pub fn record(mode: ConcurrencyMode, threads: usize, per_thread: usize, seed: u64) -> (Flat, Vec<Event>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = rng.gen_range(0..8);
    let initial = random_dyck(&mut rng, nodes);
    let tree = Rmmt::build_with_capacity(&initial.to_seq(), 4, 0.75).unwrap();

    // yield inside some attempts so speculative runs overlap even on one core
    let salt = AtomicU64::new(seed);
    let hook = Arc::new(move || {
        if salt.fetch_add(0x9e37_79b9, Ordering::Relaxed).is_multiple_of(3) {
            thread::yield_now();
        }
        false
    });
    let opts = EngineOptions { commit_hook: Some(hook), ..EngineOptions::default() };
    let engine = Engine::with_options(tree, mode, opts);
    let clock = Clock::default();

    let mut history = Vec::new();
    thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let (engine, clock) = (&engine, &clock);
                let mut rng = ChaCha8Rng::seed_from_u64(seed * 31 + t as u64);
                s.spawn(move || {
                    let mut out = Vec::with_capacity(per_thread);
                    for _ in 0..per_thread {
                        let call = random_call(&mut rng);
                        let invoked = clock.tick();
                        let ret = match &call {
                            Call::Read(q) => Ret::Read(engine.execute_read(q)),
                            Call::Write(u) => Ret::Write(engine.execute_write(u)),
                        };
                        let returned = clock.tick();
                        out.push(Event { thread: t, call, ret, invoked, returned });
                        if rng.gen_bool(0.3) {
                            thread::yield_now();
                        }
                    }
                    out
                })
            })
            .collect();
        for h in handles {
            history.extend(h.join().unwrap());
        }
    });
    assert!(engine.snapshot_tree().validate().ok());
    (initial, history)
}

fn run_model(model: &mut Flat, call: &Call) -> Ret {
    match call {
        Call::Read(q) => Ret::Read(model.answer(q)),
        Call::Write(u) => {
            let mut next = model.clone();
            match next.apply(u) {
                Ok(a) => {
                    *model = next;
                    Ret::Write(Ok(a))
                }
                Err(e) => Ret::Write(Err(e)),
            }
        }
    }
}

/// Searches for a sequential order of `history` that respects real-time
/// precedence and reproduces every recorded response when replayed on
/// `initial`. Explores depth-first and memoizes (linearized set, state)
/// pairs that are known dead ends.
pub fn linearizable(initial: &Flat, history: &[Event]) -> bool {
    let n = history.len();
    let words = n.div_ceil(64).max(1);
    let mut done = vec![0u64; words];
    let mut model = initial.clone();
    let mut seen: HashSet<(Vec<u64>, Flat)> = HashSet::new();

    // frames: (model before the step, op index taken, next candidate to try)
    let mut stack: Vec<(Flat, usize)> = Vec::new();
    let mut next_try = 0usize;
    let is_done = |d: &[u64], k: usize| d[k / 64] >> (k % 64) & 1 == 1;

    loop {
        if stack.len() == n {
            return true;
        }
        // an op may go next only if no pending op returned before it was invoked
        let horizon = (0..n).filter(|&k| !is_done(&done, k)).map(|k| history[k].returned).min().unwrap();
        let mut advanced = false;
        let mut k = next_try;
        while k < n {
            if !is_done(&done, k) && history[k].invoked <= horizon {
                let mut m = model.clone();
                if run_model(&mut m, &history[k].call) == history[k].ret {
                    let mut d = done.clone();
                    d[k / 64] |= 1 << (k % 64);
                    if seen.insert((d.clone(), m.clone())) {
                        stack.push((std::mem::replace(&mut model, m), k));
                        done = d;
                        next_try = 0;
                        advanced = true;
                        break;
                    }
                }
            }
            k += 1;
        }
        if advanced {
            continue;
        }
        match stack.pop() {
            None => return false,
            Some((prev, k)) => {
                model = prev;
                done[k / 64] &= !(1 << (k % 64));
                next_try = k + 1;
            }
        }
    }
}

//! C ABI over the `rmmt` crate.
//!
//! Trees and engines cross the boundary as opaque pointers that the caller
//! frees with the matching `_free` function. Every entry point returns an
//! [`RmmtStatus`]; results go through out-pointers that are only written on
//! success. Panics are caught at the boundary and reported as
//! `RMMT_STATUS_PANIC`.
//!
//! A tree handle must not be used from two threads at once. An engine handle
//! may be shared freely between threads until it is freed.

use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use rmmt::ingest::{parse_bp_text, random_balanced, serialize_bp, xml_to_bp, BpDocument, BpFormat, TextOptions};
use rmmt::{Answer, Applied, BwdMatch, ConcurrencyMode, Engine, Error, Paren, Query, Rmmt, Update};

/// Result of every call. Values are stable.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RmmtStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    BadRange = 4,
    NotOpen = 5,
    NotClose = 6,
    InvalidWrap = 7,
    Unmatched = 8,
    TooLarge = 9,
    MalformedXml = 10,
    BadChar = 11,
    Unbalanced = 12,
    BadPacked = 13,
    Io = 14,
    BufferTooSmall = 15,
    Panic = 16,
}

impl From<Error> for RmmtStatus {
    fn from(e: Error) -> Self {
        match e {
            Error::OutOfRange { .. } => RmmtStatus::OutOfRange,
            Error::BadRange { .. } => RmmtStatus::BadRange,
            Error::NotOpen(_) => RmmtStatus::NotOpen,
            Error::NotClose(_) => RmmtStatus::NotClose,
            Error::InvalidWrap { .. } => RmmtStatus::InvalidWrap,
            Error::Unmatched(_) => RmmtStatus::Unmatched,
            Error::TooLarge { .. } => RmmtStatus::TooLarge,
            Error::MalformedXml(_) => RmmtStatus::MalformedXml,
            Error::BadChar { .. } => RmmtStatus::BadChar,
            Error::Unbalanced(_) => RmmtStatus::Unbalanced,
            Error::BadPacked(_) => RmmtStatus::BadPacked,
            Error::Io(_) => RmmtStatus::Io,
            Error::Config(_) | Error::Accounting(_) => RmmtStatus::InvalidArgument,
        }
    }
}

/// Values for [`RmmtQuery::kind`].
#[repr(u32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RmmtQueryKind {
    Access = 0,
    Excess = 1,
    FwdSearch = 2,
    BwdSearch = 3,
    FindClose = 4,
    FindOpen = 5,
    Enclose = 6,
    Depth = 7,
    SubtreeSize = 8,
    RangeMin = 9,
    TotalSize = 10,
}

/// Values for [`RmmtUpdate::kind`].
#[repr(u32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RmmtUpdateKind {
    InsertPair = 0,
    InsertLeaf = 1,
    DeletePair = 2,
}

/// Values for the `mode` argument of [`rmmt_engine_new`].
#[repr(u32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RmmtMode {
    RwLock = 0,
    Speculative = 1,
}

/// A read request. `i` is the position (the left end for range-min), `j` the
/// right end for range-min, `delta` the excess offset for the searches.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct RmmtQuery {
    pub kind: u32,
    pub i: usize,
    pub j: usize,
    pub delta: i32,
}

/// A read result.
///
/// `value` holds the answer: 1 or 0 for access (open or close), the excess,
/// a position, a depth or size, or the minimum for range-min. `present` is
/// false when a search finds nothing or enclose is asked about a root. A
/// backward search that only matches the virtual position before the start
/// reports `value = -1`. `count` is the number of minima for range-min.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RmmtAnswer {
    pub present: bool,
    pub value: i64,
    pub count: u32,
}

/// A structural update: insert `(` at `i` and `)` at `j` (positions in the
/// original sequence), insert `()` at `i`, or delete the pair opened at `i`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct RmmtUpdate {
    pub kind: u32,
    pub i: usize,
    pub j: usize,
}

/// Positions of the pair an update inserted or deleted.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RmmtApplied {
    pub inserted: bool,
    pub open: usize,
    pub close: usize,
}

/// Engine counters.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RmmtStats {
    pub attempts: u64,
    pub fast_commits: u64,
    pub fallback_commits: u64,
    pub aborts: u64,
    pub reads_done: u64,
    pub writes_done: u64,
}

/// Opaque single-threaded tree.
pub struct RmmtTree(Rmmt);

/// Opaque thread-safe engine owning a tree.
pub struct RmmtEngine(Engine);

fn guard(f: impl FnOnce() -> Result<(), RmmtStatus>) -> RmmtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RmmtStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => RmmtStatus::Panic,
    }
}

unsafe fn get<'a, T>(p: *const T) -> Result<&'a T, RmmtStatus> {
    p.as_ref().ok_or(RmmtStatus::NullArgument)
}

unsafe fn get_mut<'a, T>(p: *mut T) -> Result<&'a mut T, RmmtStatus> {
    p.as_mut().ok_or(RmmtStatus::NullArgument)
}

unsafe fn bytes<'a>(data: *const u8, len: usize) -> Result<&'a [u8], RmmtStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(RmmtStatus::NullArgument);
    }
    Ok(slice::from_raw_parts(data, len))
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), RmmtStatus> {
    *get_mut(out)? = v;
    Ok(())
}

fn into_handle<T>(out: *mut *mut T, v: T) -> Result<(), RmmtStatus> {
    if out.is_null() {
        return Err(RmmtStatus::NullArgument);
    }
    // SAFETY: checked non-null; the caller promises it is writable
    unsafe { *out = Box::into_raw(Box::new(v)) };
    Ok(())
}

fn to_query(q: &RmmtQuery) -> Result<Query, RmmtStatus> {
    // numbering as in RmmtQueryKind
    Ok(match q.kind {
        0 => Query::Access(q.i),
        1 => Query::Excess(q.i),
        2 => Query::FwdSearch(q.i, q.delta),
        3 => Query::BwdSearch(q.i, q.delta),
        4 => Query::FindClose(q.i),
        5 => Query::FindOpen(q.i),
        6 => Query::Enclose(q.i),
        7 => Query::Depth(q.i),
        8 => Query::SubtreeSize(q.i),
        9 => Query::RangeMin(q.i, q.j),
        10 => Query::TotalSize,
        _ => return Err(RmmtStatus::InvalidArgument),
    })
}

fn to_update(u: &RmmtUpdate) -> Result<Update, RmmtStatus> {
    Ok(match u.kind {
        0 => Update::InsertPair(u.i, u.j),
        1 => Update::InsertLeaf(u.i),
        2 => Update::DeletePair(u.i),
        _ => return Err(RmmtStatus::InvalidArgument),
    })
}

fn from_answer(a: Answer) -> RmmtAnswer {
    let some = |v: usize| RmmtAnswer { present: true, value: v as i64, count: 0 };
    let none = RmmtAnswer::default();
    match a {
        Answer::Paren(p) => some(usize::from(p == Paren::Open)),
        Answer::Excess(e) => RmmtAnswer { present: true, value: e.into(), count: 0 },
        Answer::Forward(r) | Answer::Parent(r) => r.map_or(none, some),
        Answer::Backward(BwdMatch::At(j)) => some(j),
        Answer::Backward(BwdMatch::LeftEdge) => RmmtAnswer { present: true, value: -1, count: 0 },
        Answer::Backward(BwdMatch::NotFound) => none,
        Answer::Position(p) | Answer::Count(p) => some(p),
        Answer::RangeMin { min, count } => RmmtAnswer { present: true, value: min.into(), count },
        Answer::Nav { value, .. } => value.map_or(none, some),
    }
}

fn from_applied(a: Applied) -> RmmtApplied {
    match a {
        Applied::Inserted { open, close } => RmmtApplied { inserted: true, open, close },
        Applied::Deleted { open, close } => RmmtApplied { inserted: false, open, close },
    }
}

fn build(doc: rmmt::Result<BpDocument>) -> Result<RmmtTree, RmmtStatus> {
    Ok(RmmtTree(Rmmt::build(&doc?.seq, rmmt::tree::DEFAULT_LEAF_FILL)?))
}

/// Static, NUL-terminated description of a status.
#[no_mangle]
pub extern "C" fn rmmt_status_message(status: RmmtStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        RmmtStatus::Ok => b"ok\0",
        RmmtStatus::NullArgument => b"null argument\0",
        RmmtStatus::InvalidArgument => b"invalid argument\0",
        RmmtStatus::OutOfRange => b"position out of range\0",
        RmmtStatus::BadRange => b"empty or reversed range\0",
        RmmtStatus::NotOpen => b"not an open parenthesis\0",
        RmmtStatus::NotClose => b"not a close parenthesis\0",
        RmmtStatus::InvalidWrap => b"insertion would unbalance the sequence\0",
        RmmtStatus::Unmatched => b"parenthesis has no match\0",
        RmmtStatus::TooLarge => b"sequence too large\0",
        RmmtStatus::MalformedXml => b"malformed XML\0",
        RmmtStatus::BadChar => b"unexpected character\0",
        RmmtStatus::Unbalanced => b"unbalanced sequence\0",
        RmmtStatus::BadPacked => b"bad packed stream\0",
        RmmtStatus::Io => b"i/o error\0",
        RmmtStatus::BufferTooSmall => b"buffer too small\0",
        RmmtStatus::Panic => b"internal panic\0",
    };
    s.as_ptr().cast()
}

/// Empty tree.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn rmmt_tree_new(out: *mut *mut RmmtTree) -> RmmtStatus {
    guard(|| into_handle(out, RmmtTree(Rmmt::new())))
}

/// Tree from `(`/`)` text; whitespace is ignored.
///
/// # Safety
/// `data` must point at `len` readable bytes (or be null with `len` 0) and
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn rmmt_tree_from_bp(data: *const u8, len: usize, out: *mut *mut RmmtTree) -> RmmtStatus {
    guard(|| {
        let input = bytes(data, len)?;
        into_handle(out, build(parse_bp_text(input, TextOptions::default(), "<ffi>"))?)
    })
}

/// Tree of the element structure of an XML document.
///
/// # Safety
/// As for [`rmmt_tree_from_bp`].
#[no_mangle]
pub unsafe extern "C" fn rmmt_tree_from_xml(data: *const u8, len: usize, out: *mut *mut RmmtTree) -> RmmtStatus {
    guard(|| {
        let input = bytes(data, len)?;
        into_handle(out, build(xml_to_bp(input, "<ffi>"))?)
    })
}

/// Uniformly random tree with `nodes` nodes.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn rmmt_tree_random(nodes: usize, seed: u64, out: *mut *mut RmmtTree) -> RmmtStatus {
    guard(|| into_handle(out, build(Ok(random_balanced(nodes, seed)))?))
}

/// Deep copy.
///
/// # Safety
/// `tree` must be null or a live tree handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rmmt_tree_clone(tree: *const RmmtTree, out: *mut *mut RmmtTree) -> RmmtStatus {
    guard(|| into_handle(out, RmmtTree(get(tree)?.0.clone())))
}

/// Frees a tree. Null is a no-op.
///
/// # Safety
/// `tree` must be null or a live tree handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rmmt_tree_free(tree: *mut RmmtTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Number of parentheses.
///
/// # Safety
/// `tree` must be null or a live tree handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rmmt_tree_len(tree: *const RmmtTree, out: *mut usize) -> RmmtStatus {
    guard(|| put(out, get(tree)?.0.total_size()))
}

/// Runs one query.
///
/// # Safety
/// `tree` must be null or a live tree handle; `query` null or readable;
/// `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rmmt_tree_query(tree: *const RmmtTree, query: *const RmmtQuery, out: *mut RmmtAnswer) -> RmmtStatus {
    guard(|| {
        let q = to_query(get(query)?)?;
        let a = get(tree)?.0.query(&q)?;
        put(out, from_answer(a))
    })
}

/// Applies one update. `out` may be null.
///
/// # Safety
/// `tree` must be null or a live tree handle; `update` null or readable;
/// `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rmmt_tree_update(tree: *mut RmmtTree, update: *const RmmtUpdate, out: *mut RmmtApplied) -> RmmtStatus {
    guard(|| {
        let u = to_update(get(update)?)?;
        let a = get_mut(tree)?.0.apply(&u)?;
        if !out.is_null() {
            *out = from_applied(a);
        }
        Ok(())
    })
}

/// Checks every structural invariant; `ok` is set to the verdict.
///
/// # Safety
/// `tree` must be null or a live tree handle; `ok` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rmmt_tree_validate(tree: *const RmmtTree, ok: *mut bool) -> RmmtStatus {
    guard(|| put(ok, get(tree)?.0.validate().ok()))
}

/// Writes the sequence as `(`/`)` text without a terminator. `needed`
/// receives the byte count; when `cap` is smaller nothing is written and
/// `RMMT_STATUS_BUFFER_TOO_SMALL` is returned. `buf` may be null when `cap`
/// is 0.
///
/// # Safety
/// `tree` must be null or a live tree handle; `buf` must have `cap`
/// writable bytes; `needed` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rmmt_tree_write_bp(tree: *const RmmtTree, buf: *mut u8, cap: usize, needed: *mut usize) -> RmmtStatus {
    guard(|| {
        let doc = BpDocument { seq: get(tree)?.0.to_seq(), source: String::new() };
        let mut text = Vec::with_capacity(doc.len());
        serialize_bp(&doc, BpFormat::Text, &mut text)?;
        put(needed, text.len())?;
        if cap < text.len() {
            return Err(RmmtStatus::BufferTooSmall);
        }
        if !text.is_empty() {
            if buf.is_null() {
                return Err(RmmtStatus::NullArgument);
            }
            std::ptr::copy_nonoverlapping(text.as_ptr(), buf, text.len());
        }
        Ok(())
    })
}

/// Wraps a tree in an engine. The tree handle is consumed on success and
/// must not be used or freed afterwards; on failure it is left untouched.
/// `retries` is the speculative retry limit and is ignored for the lock.
///
/// # Safety
/// `tree` must be null or a live tree handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rmmt_engine_new(tree: *mut RmmtTree, mode: u32, retries: u32, out: *mut *mut RmmtEngine) -> RmmtStatus {
    guard(|| {
        let mode = match mode {
            0 => ConcurrencyMode::GlobalRwLock,
            1 => ConcurrencyMode::Speculative { retry_limit: retries },
            _ => return Err(RmmtStatus::InvalidArgument),
        };
        if tree.is_null() || out.is_null() {
            return Err(RmmtStatus::NullArgument);
        }
        let t = Box::from_raw(tree).0;
        into_handle(out, RmmtEngine(Engine::new(t, mode)))
    })
}

/// Frees an engine and its tree. Null is a no-op.
///
/// # Safety
/// `engine` must be null or a live engine handle that no other thread is
/// using, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rmmt_engine_free(engine: *mut RmmtEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Runs one query atomically. Safe to call from many threads at once.
///
/// # Safety
/// `engine` must be null or a live engine handle; `query` null or readable;
/// `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rmmt_engine_query(engine: *const RmmtEngine, query: *const RmmtQuery, out: *mut RmmtAnswer) -> RmmtStatus {
    guard(|| {
        let q = to_query(get(query)?)?;
        let a = get(engine)?.0.execute_read(&q)?;
        put(out, from_answer(a))
    })
}

/// Applies one update atomically. Safe to call from many threads at once.
/// `out` may be null.
///
/// # Safety
/// `engine` must be null or a live engine handle; `update` null or
/// readable; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rmmt_engine_update(engine: *const RmmtEngine, update: *const RmmtUpdate, out: *mut RmmtApplied) -> RmmtStatus {
    guard(|| {
        let u = to_update(get(update)?)?;
        let a = get(engine)?.0.execute_write(&u)?;
        if !out.is_null() {
            *out = from_applied(a);
        }
        Ok(())
    })
}

/// Current counters.
///
/// # Safety
/// `engine` must be null or a live engine handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rmmt_engine_stats(engine: *const RmmtEngine, out: *mut RmmtStats) -> RmmtStatus {
    guard(|| {
        let s = get(engine)?.0.snapshot_stats();
        put(
            out,
            RmmtStats {
                attempts: s.attempts,
                fast_commits: s.fast_commits,
                fallback_commits: s.fallback_commits,
                aborts: s.aborts,
                reads_done: s.reads_done,
                writes_done: s.writes_done,
            },
        )
    })
}

/// Copies the engine's current tree into a new tree handle.
///
/// # Safety
/// `engine` must be null or a live engine handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rmmt_engine_snapshot(engine: *const RmmtEngine, out: *mut *mut RmmtTree) -> RmmtStatus {
    guard(|| into_handle(out, RmmtTree(get(engine)?.0.snapshot_tree())))
}

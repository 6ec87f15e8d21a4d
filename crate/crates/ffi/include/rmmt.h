#ifndef RMMT_H
#define RMMT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Values for the `mode` argument of [`rmmt_engine_new`].
 */
enum RmmtMode
#ifdef __cplusplus
  : uint32_t
#endif // __cplusplus
 {
  RMMT_MODE_RW_LOCK = 0,
  RMMT_MODE_SPECULATIVE = 1,
};
#ifndef __cplusplus
typedef uint32_t RmmtMode;
#endif // __cplusplus

/**
 * Values for [`RmmtQuery::kind`].
 */
enum RmmtQueryKind
#ifdef __cplusplus
  : uint32_t
#endif // __cplusplus
 {
  RMMT_QUERY_KIND_ACCESS = 0,
  RMMT_QUERY_KIND_EXCESS = 1,
  RMMT_QUERY_KIND_FWD_SEARCH = 2,
  RMMT_QUERY_KIND_BWD_SEARCH = 3,
  RMMT_QUERY_KIND_FIND_CLOSE = 4,
  RMMT_QUERY_KIND_FIND_OPEN = 5,
  RMMT_QUERY_KIND_ENCLOSE = 6,
  RMMT_QUERY_KIND_DEPTH = 7,
  RMMT_QUERY_KIND_SUBTREE_SIZE = 8,
  RMMT_QUERY_KIND_RANGE_MIN = 9,
  RMMT_QUERY_KIND_TOTAL_SIZE = 10,
};
#ifndef __cplusplus
typedef uint32_t RmmtQueryKind;
#endif // __cplusplus

/**
 * Result of every call. Values are stable.
 */
typedef enum RmmtStatus {
  RMMT_STATUS_OK = 0,
  RMMT_STATUS_NULL_ARGUMENT = 1,
  RMMT_STATUS_INVALID_ARGUMENT = 2,
  RMMT_STATUS_OUT_OF_RANGE = 3,
  RMMT_STATUS_BAD_RANGE = 4,
  RMMT_STATUS_NOT_OPEN = 5,
  RMMT_STATUS_NOT_CLOSE = 6,
  RMMT_STATUS_INVALID_WRAP = 7,
  RMMT_STATUS_UNMATCHED = 8,
  RMMT_STATUS_TOO_LARGE = 9,
  RMMT_STATUS_MALFORMED_XML = 10,
  RMMT_STATUS_BAD_CHAR = 11,
  RMMT_STATUS_UNBALANCED = 12,
  RMMT_STATUS_BAD_PACKED = 13,
  RMMT_STATUS_IO = 14,
  RMMT_STATUS_BUFFER_TOO_SMALL = 15,
  RMMT_STATUS_PANIC = 16,
} RmmtStatus;

/**
 * Values for [`RmmtUpdate::kind`].
 */
enum RmmtUpdateKind
#ifdef __cplusplus
  : uint32_t
#endif // __cplusplus
 {
  RMMT_UPDATE_KIND_INSERT_PAIR = 0,
  RMMT_UPDATE_KIND_INSERT_LEAF = 1,
  RMMT_UPDATE_KIND_DELETE_PAIR = 2,
};
#ifndef __cplusplus
typedef uint32_t RmmtUpdateKind;
#endif // __cplusplus

/**
 * Opaque thread-safe engine owning a tree.
 */
typedef struct RmmtEngine RmmtEngine;

/**
 * Opaque single-threaded tree.
 */
typedef struct RmmtTree RmmtTree;

/**
 * A read request. `i` is the position (the left end for range-min), `j` the
 * right end for range-min, `delta` the excess offset for the searches.
 */
typedef struct RmmtQuery {
  uint32_t kind;
  size_t i;
  size_t j;
  int32_t delta;
} RmmtQuery;

/**
 * A read result.
 *
 * `value` holds the answer: 1 or 0 for access (open or close), the excess,
 * a position, a depth or size, or the minimum for range-min. `present` is
 * false when a search finds nothing or enclose is asked about a root. A
 * backward search that only matches the virtual position before the start
 * reports `value = -1`. `count` is the number of minima for range-min.
 */
typedef struct RmmtAnswer {
  bool present;
  int64_t value;
  uint32_t count;
} RmmtAnswer;

/**
 * A structural update: insert `(` at `i` and `)` at `j` (positions in the
 * original sequence), insert `()` at `i`, or delete the pair opened at `i`.
 */
typedef struct RmmtUpdate {
  uint32_t kind;
  size_t i;
  size_t j;
} RmmtUpdate;

/**
 * Positions of the pair an update inserted or deleted.
 */
typedef struct RmmtApplied {
  bool inserted;
  size_t open;
  size_t close;
} RmmtApplied;

/**
 * Engine counters.
 */
typedef struct RmmtStats {
  uint64_t attempts;
  uint64_t fast_commits;
  uint64_t fallback_commits;
  uint64_t aborts;
  uint64_t reads_done;
  uint64_t writes_done;
} RmmtStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static, NUL-terminated description of a status.
 */
const char *rmmt_status_message(enum RmmtStatus status);

/**
 * Empty tree.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum RmmtStatus rmmt_tree_new(struct RmmtTree **out);

/**
 * Tree from `(`/`)` text; whitespace is ignored.
 *
 * # Safety
 * `data` must point at `len` readable bytes (or be null with `len` 0) and
 * `out` must be null or writable.
 */
enum RmmtStatus rmmt_tree_from_bp(const uint8_t *data, size_t len, struct RmmtTree **out);

/**
 * Tree of the element structure of an XML document.
 *
 * # Safety
 * As for [`rmmt_tree_from_bp`].
 */
enum RmmtStatus rmmt_tree_from_xml(const uint8_t *data, size_t len, struct RmmtTree **out);

/**
 * Uniformly random tree with `nodes` nodes.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum RmmtStatus rmmt_tree_random(size_t nodes, uint64_t seed, struct RmmtTree **out);

/**
 * Deep copy.
 *
 * # Safety
 * `tree` must be null or a live tree handle; `out` null or writable.
 */
enum RmmtStatus rmmt_tree_clone(const struct RmmtTree *tree, struct RmmtTree **out);

/**
 * Frees a tree. Null is a no-op.
 *
 * # Safety
 * `tree` must be null or a live tree handle, not used afterwards.
 */
void rmmt_tree_free(struct RmmtTree *tree);

/**
 * Number of parentheses.
 *
 * # Safety
 * `tree` must be null or a live tree handle; `out` null or writable.
 */
enum RmmtStatus rmmt_tree_len(const struct RmmtTree *tree, size_t *out);

/**
 * Runs one query.
 *
 * # Safety
 * `tree` must be null or a live tree handle; `query` null or readable;
 * `out` null or writable.
 */
enum RmmtStatus rmmt_tree_query(const struct RmmtTree *tree,
                                const struct RmmtQuery *query,
                                struct RmmtAnswer *out);

/**
 * Applies one update. `out` may be null.
 *
 * # Safety
 * `tree` must be null or a live tree handle; `update` null or readable;
 * `out` null or writable.
 */
enum RmmtStatus rmmt_tree_update(struct RmmtTree *tree,
                                 const struct RmmtUpdate *update,
                                 struct RmmtApplied *out);

/**
 * Checks every structural invariant; `ok` is set to the verdict.
 *
 * # Safety
 * `tree` must be null or a live tree handle; `ok` null or writable.
 */
enum RmmtStatus rmmt_tree_validate(const struct RmmtTree *tree, bool *ok);

/**
 * Writes the sequence as `(`/`)` text without a terminator. `needed`
 * receives the byte count; when `cap` is smaller nothing is written and
 * `RMMT_STATUS_BUFFER_TOO_SMALL` is returned. `buf` may be null when `cap`
 * is 0.
 *
 * # Safety
 * `tree` must be null or a live tree handle; `buf` must have `cap`
 * writable bytes; `needed` null or writable.
 */
enum RmmtStatus rmmt_tree_write_bp(const struct RmmtTree *tree,
                                   uint8_t *buf,
                                   size_t cap,
                                   size_t *needed);

/**
 * Wraps a tree in an engine. The tree handle is consumed on success and
 * must not be used or freed afterwards; on failure it is left untouched.
 * `retries` is the speculative retry limit and is ignored for the lock.
 *
 * # Safety
 * `tree` must be null or a live tree handle; `out` null or writable.
 */
enum RmmtStatus rmmt_engine_new(struct RmmtTree *tree,
                                uint32_t mode,
                                uint32_t retries,
                                struct RmmtEngine **out);

/**
 * Frees an engine and its tree. Null is a no-op.
 *
 * # Safety
 * `engine` must be null or a live engine handle that no other thread is
 * using, not used afterwards.
 */
void rmmt_engine_free(struct RmmtEngine *engine);

/**
 * Runs one query atomically. Safe to call from many threads at once.
 *
 * # Safety
 * `engine` must be null or a live engine handle; `query` null or readable;
 * `out` null or writable.
 */
enum RmmtStatus rmmt_engine_query(const struct RmmtEngine *engine,
                                  const struct RmmtQuery *query,
                                  struct RmmtAnswer *out);

/**
 * Applies one update atomically. Safe to call from many threads at once.
 * `out` may be null.
 *
 * # Safety
 * `engine` must be null or a live engine handle; `update` null or
 * readable; `out` null or writable.
 */
enum RmmtStatus rmmt_engine_update(const struct RmmtEngine *engine,
                                   const struct RmmtUpdate *update,
                                   struct RmmtApplied *out);

/**
 * Current counters.
 *
 * # Safety
 * `engine` must be null or a live engine handle; `out` null or writable.
 */
enum RmmtStatus rmmt_engine_stats(const struct RmmtEngine *engine, struct RmmtStats *out);

/**
 * Copies the engine's current tree into a new tree handle.
 *
 * # Safety
 * `engine` must be null or a live engine handle; `out` null or writable.
 */
enum RmmtStatus rmmt_engine_snapshot(const struct RmmtEngine *engine, struct RmmtTree **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RMMT_H */

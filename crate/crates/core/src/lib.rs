//! Dynamic balanced-parentheses trees indexed by a range min-max tree, with
//! concurrent access under a reader-writer lock or speculative transactions.

pub mod bench;
pub mod bp;
pub mod engine;
pub mod error;
pub mod ingest;
pub mod node;
pub mod store;
pub mod tree;

pub use bp::{BwdMatch, NodeSummary, Paren, ParenBlock, ParenSeq, LEAF_CAP};
pub use engine::{CommitHook, ConcurrencyMode, Engine, EngineOptions, OpTrace, TxnStats};
pub use error::{Error, Result};
pub use tree::{Answer, Applied, NavKind, Query, Rmmt, Update, ValidationReport, Violation};

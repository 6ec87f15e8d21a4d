use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("position {pos} out of range for {len} parentheses")]
    OutOfRange { pos: usize, len: usize },
    #[error("empty or reversed range [{from}, {to}]")]
    BadRange { from: usize, to: usize },
    #[error("position {0} does not hold an open parenthesis")]
    NotOpen(usize),
    #[error("position {0} does not hold a close parenthesis")]
    NotClose(usize),
    #[error("wrapping [{from}, {to}) would unbalance the sequence")]
    InvalidWrap { from: usize, to: usize },
    #[error("parenthesis at {0} has no match")]
    Unmatched(usize),
    #[error("{len} parentheses exceed the 32-bit node layout")]
    TooLarge { len: usize },
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("unexpected character {ch:?} at offset {pos}")]
    BadChar { pos: usize, ch: char },
    #[error("unbalanced sequence: {0}")]
    Unbalanced(String),
    #[error("bad packed stream: {0}")]
    BadPacked(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("accounting violation: {0}")]
    Accounting(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

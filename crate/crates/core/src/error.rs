use thiserror::Error;

use crate::interval::Interval;
use crate::symbolic::Word;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("edge {edge} is not part of the alphabet (size {size})")]
    UnknownEdge { edge: u32, size: String },

    #[error("word {word} is not admissible")]
    Inadmissible { word: Word },

    #[error("terminal vertex of edge {from} differs from initial vertex of edge {to}")]
    DomainMismatch { from: u32, to: u32 },

    #[error("word {word} cannot be closed into a cycle")]
    NotCyclable { word: Word },

    #[error("no connector of length <= {max_len} joins edge {from} to edge {to}")]
    NotIrreducible { from: u32, to: u32, max_len: usize },

    #[error("negative beta coefficient {0} is outside the supported domain")]
    NegativeBeta(f64),

    #[error("root lies below the admissible parameter domain (pressure at {at} is already negative)")]
    RootBelowDomain { at: f64 },

    #[error("{what}: budget exhausted{}", best.map(|b| format!(", best enclosure {b}")).unwrap_or_default())]
    BudgetExceeded { what: String, best: Option<Interval> },

    #[error("pressure bracket too wide at n={n}: enclosure {enclosure}, estimated word length needed {required_n}")]
    BracketTooWide { n: usize, enclosure: Interval, required_n: usize },

    #[error("expression error: {0}")]
    Expression(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

use std::path::PathBuf;

use thiserror::Error;

use crate::hmm::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid model: {}", format_violations(.0))]
    InvalidModel(Vec<Violation>),

    #[error("symbol sequence must not be empty")]
    EmptySequence,

    #[error("alphabet mismatch: symbol {symbol} at position {position} is outside an alphabet of {n_symbols}")]
    AlphabetMismatch {
        position: usize,
        symbol: usize,
        n_symbols: usize,
    },

    #[error("sequence has zero probability under the model")]
    ImpossibleSequence,

    #[error("training sequence {index} has zero probability under the starting model")]
    TrainingDegenerate { index: usize },

    #[error("no training sequences supplied")]
    NoTrainingData,

    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("task registry is empty")]
    EmptyRegistry,

    #[error("task '{task}' uses a different alphabet than task '{reference}'")]
    RegistryAlphabetMismatch { task: String, reference: String },

    #[error("no decision possible: every task scores -inf")]
    NoDecision,

    #[error("unknown symbol '{name}' at token {position}")]
    UnknownSymbol { name: String, position: usize },

    #[error("unsupported format version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

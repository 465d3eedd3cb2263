use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: file not found")]
    MissingFile { path: PathBuf },

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: duplicate coordinate ({row}, {col})")]
    DuplicateCoordinate {
        path: PathBuf,
        line: usize,
        row: usize,
        col: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("property row {row} is not one-hot")]
    NonOneHotProperty { row: usize },

    #[error("invalid matrix entry: {0}")]
    InvalidEntry(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("negative input to {0}")]
    NegativeInput(&'static str),

    #[error("zero rank variance in {0}")]
    ZeroVariance(&'static str),

    #[error("zero-norm row {row}")]
    ZeroNorm { row: usize },

    #[error("group {group} has fewer than 2 members")]
    GroupTooSmall { group: u8 },

    #[error("no known positives in the label vector")]
    NoKnownPositives,

    #[error("labels contain a single class")]
    SingleClass,

    #[error("class with {size} members is smaller than k = {k}")]
    ClassTooSmall { size: usize, k: usize },

    #[error("only {0} nonzero paired differences (need at least 5)")]
    TooFewPairs(usize),

    #[error("degenerate likelihoods: {0}")]
    DegenerateLikelihoods(&'static str),

    #[error("positive and negative training slices overlap ({positives} + {negatives} > {available})")]
    SliceOverlap {
        positives: usize,
        negatives: usize,
        available: usize,
    },

    #[error("dataset has no {0}")]
    MissingComponent(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

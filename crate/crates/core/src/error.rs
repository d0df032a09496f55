use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("weight vector is empty")]
    EmptyWeights,

    #[error("all weights are zero")]
    AllZero,

    #[error("weights for document {doc}, position {pos} sum to zero")]
    AllZeroDraw { doc: usize, pos: usize },

    #[error("weight {index} is negative or not finite: {value}")]
    InvalidWeight { index: usize, value: f64 },

    #[error("prefix table is not monotonically nondecreasing at index {index}")]
    NotMonotone { index: usize },

    #[error("lane {lane} requested source lane {src}, warp has {lanes} lanes")]
    LaneOutOfRange {
        lane: usize,
        src: usize,
        lanes: usize,
    },

    #[error("shuffle mask {mask} out of range for {lanes} lanes")]
    MaskOutOfRange { mask: usize, lanes: usize },

    #[error("lane {lane}: access to {array}[{index}] is out of bounds")]
    OutOfBounds {
        lane: usize,
        array: &'static str,
        index: String,
    },

    #[error("lane {lane}: stop value {stop} outside [0, {total}]")]
    StopOutOfRange { lane: usize, stop: f64, total: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: word id {word} is not below vocabulary size {vocab}")]
    WordIdOutOfRange {
        path: PathBuf,
        line: usize,
        word: usize,
        vocab: usize,
    },

    #[error("chi-square needs at least two bins with non-zero expectation")]
    DegenerateBins,

    #[error("injected uniform stream has no value for document {doc}, position {pos}")]
    MissingUniform { doc: usize, pos: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

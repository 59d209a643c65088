use std::io;

use thiserror::Error;

/// Errors raised by the alignment engine and its file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: left is {left_width}x{left_dim}, right is {right_width}x{right_dim}")]
    ShapeMismatch {
        left_width: usize,
        left_dim: usize,
        right_width: usize,
        right_dim: usize,
    },

    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("projection seed mismatch: reference {}, query {}", seed_text(*.reference), seed_text(*.query))]
    SeedMismatch {
        reference: Option<u64>,
        query: Option<u64>,
    },

    #[error("corrupt bundle: {0}")]
    Format(String),

    #[error("checksum mismatch: header says {expected:#018x}, payload hashes to {found:#018x}")]
    Checksum { expected: u64, found: u64 },

    #[error("ground truth table: {0}")]
    GroundTruth(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

fn seed_text(seed: Option<u64>) -> String {
    seed.map_or_else(
        || "is unprojected".to_string(),
        |s| format!("uses seed {s}"),
    )
}

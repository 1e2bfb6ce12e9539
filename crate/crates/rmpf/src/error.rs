use thiserror::Error;

/// Errors from parameter construction, matrix algebra, and serialization.
#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("modulus must be nonzero")]
    ZeroModulus,

    #[error("{0} is not an odd prime >= 5")]
    NotPrime(u64),

    #[error("prime size {0} bits out of range [8, 64]")]
    PrimeBits(u32),

    #[error("invalid dimensions {rows}x{cols}: need rows > cols >= 1")]
    BadDims { rows: usize, cols: usize },

    #[error("dimension mismatch: {left_rows}x{left_cols} against {right_rows}x{right_cols}")]
    DimMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("operands use different moduli: {0} vs {1}")]
    ModulusMismatch(u64, u64),

    #[error("entry {value} at index {index} outside [{min}, {max}]")]
    EntryOutOfRange {
        index: usize,
        value: u64,
        min: u64,
        max: u64,
    },

    #[error("entry count {got} does not match {rows}x{cols}")]
    EntryCount { got: usize, rows: usize, cols: usize },

    #[error("scalar {value} outside [{min}, {max}]")]
    ScalarOutOfRange { value: u64, min: u64, max: u64 },

    #[error("malformed encoding: {0}")]
    Encoding(&'static str),

    #[error("invalid hex: {0}")]
    Hex(#[from] hex::FromHexError),

    #[error("search space {domain} candidates exceeds limit {limit}; pick a smaller prime or the reduced mode")]
    SearchSpaceTooLarge { domain: u128, limit: u128 },
}

pub type Result<T> = std::result::Result<T, Error>;

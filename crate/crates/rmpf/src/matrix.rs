//! Rectangular matrix types: multiplicative-entry matrices over `Z_p*`
//! ("base" matrices) and additive exponent matrices over `Z_{p-1}`.
//!
//! Matrices are strictly tall (`rows > cols`), stored row-major, and carry
//! a fixed byte encoding: `u16` big-endian rows, `u16` big-endian cols,
//! then one `u64` big-endian word per entry in row-major order.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::modarith::Modulus;

/// Shape of a tall rectangular matrix: `rows > cols >= 1`, `rows <= 65535`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    rows: usize,
    cols: usize,
}

impl Dims {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if cols == 0 || rows <= cols || rows > u16::MAX as usize {
            return Err(Error::BadDims { rows, cols });
        }
        Ok(Dims { rows, cols })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false // rows > cols >= 1 always holds
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

/// A tall matrix with entries in `[1, p-1]`, i.e. units of `Z_p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseMatrix {
    dims: Dims,
    modulus: Modulus,
    entries: Vec<u64>,
}

/// A tall matrix of exponents with entries in `[0, p-2]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpMatrix {
    dims: Dims,
    modulus: Modulus,
    entries: Vec<u64>,
}

fn check_entry_count(dims: Dims, got: usize) -> Result<()> {
    if got != dims.len() {
        return Err(Error::EntryCount {
            got,
            rows: dims.rows(),
            cols: dims.cols(),
        });
    }
    Ok(())
}

impl BaseMatrix {
    /// Builds a matrix from row-major entries, each in `[1, p-1]`.
    pub fn from_entries(dims: Dims, modulus: Modulus, entries: Vec<u64>) -> Result<Self> {
        check_entry_count(dims, entries.len())?;
        for (index, &value) in entries.iter().enumerate() {
            if value == 0 || value >= modulus.p() {
                return Err(Error::EntryOutOfRange {
                    index,
                    value,
                    min: 1,
                    max: modulus.p() - 1,
                });
            }
        }
        Ok(BaseMatrix {
            dims,
            modulus,
            entries,
        })
    }

    /// Draws every entry uniformly from `[1, p-1]`.
    pub fn random<R: Rng>(dims: Dims, modulus: Modulus, rng: &mut R) -> Self {
        let entries = (0..dims.len())
            .map(|_| rng.gen_range(1..modulus.p()))
            .collect();
        BaseMatrix {
            dims,
            modulus,
            entries,
        }
    }

    pub(crate) fn from_raw(dims: Dims, modulus: Modulus, entries: Vec<u64>) -> Self {
        debug_assert_eq!(entries.len(), dims.len());
        debug_assert!(entries.iter().all(|&v| v >= 1 && v < modulus.p()));
        BaseMatrix {
            dims,
            modulus,
            entries,
        }
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    /// Entry at 0-indexed `(row, col)`.
    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> u64 {
        self.entries[row * self.dims.cols() + col]
    }

    #[inline]
    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[u64] {
        let n = self.dims.cols();
        &self.entries[row * n..(row + 1) * n]
    }

    /// Canonical encoding: `u16be rows || u16be cols || u64be entries`.
    pub fn to_bytes(&self) -> Vec<u8> {
        encode_shape_and_entries(self.dims, &self.entries)
    }

    /// Decodes one matrix from the front of `bytes`, validating shape and
    /// the `[1, p-1]` entry range. Returns the matrix and bytes consumed.
    pub fn from_bytes(bytes: &[u8], modulus: Modulus) -> Result<(Self, usize)> {
        let (dims, entries, used) = decode_shape_and_entries(bytes)?;
        let matrix = BaseMatrix::from_entries(dims, modulus, entries)?;
        Ok((matrix, used))
    }
}

impl ExpMatrix {
    /// Builds a matrix from row-major entries, each in `[0, p-2]`.
    pub fn from_entries(dims: Dims, modulus: Modulus, entries: Vec<u64>) -> Result<Self> {
        check_entry_count(dims, entries.len())?;
        for (index, &value) in entries.iter().enumerate() {
            if value >= modulus.q() {
                return Err(Error::EntryOutOfRange {
                    index,
                    value,
                    min: 0,
                    max: modulus.q() - 1,
                });
            }
        }
        Ok(ExpMatrix {
            dims,
            modulus,
            entries,
        })
    }

    /// Builds a matrix from arbitrary entries, reducing each mod `p - 1`.
    pub fn from_unreduced(dims: Dims, modulus: Modulus, entries: &[u64]) -> Result<Self> {
        check_entry_count(dims, entries.len())?;
        let entries = entries.iter().map(|&v| modulus.reduce_exp(v)).collect();
        Ok(ExpMatrix {
            dims,
            modulus,
            entries,
        })
    }

    /// Draws every entry uniformly from `[0, p-1]` and reduces mod `p - 1`,
    /// matching how secret exponent matrices are sampled.
    pub fn random<R: Rng>(dims: Dims, modulus: Modulus, rng: &mut R) -> Self {
        let entries = (0..dims.len())
            .map(|_| modulus.reduce_exp(rng.gen_range(0..modulus.p())))
            .collect();
        ExpMatrix {
            dims,
            modulus,
            entries,
        }
    }

    pub(crate) fn from_raw(dims: Dims, modulus: Modulus, entries: Vec<u64>) -> Self {
        debug_assert_eq!(entries.len(), dims.len());
        debug_assert!(entries.iter().all(|&v| v < modulus.q()));
        ExpMatrix {
            dims,
            modulus,
            entries,
        }
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    /// Entry at 0-indexed `(row, col)`.
    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> u64 {
        self.entries[row * self.dims.cols() + col]
    }

    #[inline]
    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[u64] {
        let n = self.dims.cols();
        &self.entries[row * n..(row + 1) * n]
    }

    /// Canonical encoding: `u16be rows || u16be cols || u64be entries`.
    pub fn to_bytes(&self) -> Vec<u8> {
        encode_shape_and_entries(self.dims, &self.entries)
    }

    /// Decodes one matrix from the front of `bytes`, validating shape and
    /// the `[0, p-2]` entry range. Returns the matrix and bytes consumed.
    pub fn from_bytes(bytes: &[u8], modulus: Modulus) -> Result<(Self, usize)> {
        let (dims, entries, used) = decode_shape_and_entries(bytes)?;
        let matrix = ExpMatrix::from_entries(dims, modulus, entries)?;
        Ok((matrix, used))
    }
}

fn encode_shape_and_entries(dims: Dims, entries: &[u64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + entries.len() * 8);
    out.extend_from_slice(&(dims.rows() as u16).to_be_bytes());
    out.extend_from_slice(&(dims.cols() as u16).to_be_bytes());
    for &e in entries {
        out.extend_from_slice(&e.to_be_bytes());
    }
    out
}

fn decode_shape_and_entries(bytes: &[u8]) -> Result<(Dims, Vec<u64>, usize)> {
    if bytes.len() < 4 {
        return Err(Error::Encoding("truncated matrix header"));
    }
    let rows = u16::from_be_bytes([bytes[0], bytes[1]]) as usize;
    let cols = u16::from_be_bytes([bytes[2], bytes[3]]) as usize;
    let dims = Dims::new(rows, cols)?;
    // Shape is bounded by u16 x u16, so this never overflows usize and the
    // length check below runs before any allocation.
    let body = dims.len() * 8;
    let used = 4 + body;
    if bytes.len() < used {
        return Err(Error::Encoding("truncated matrix body"));
    }
    let entries = bytes[4..used]
        .chunks_exact(8)
        .map(|c| u64::from_be_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((dims, entries, used))
}

fn fmt_rows(f: &mut fmt::Formatter<'_>, dims: Dims, entries: &[u64]) -> fmt::Result {
    let width = entries.iter().map(|e| e.to_string().len()).max().unwrap_or(1);
    for r in 0..dims.rows() {
        for c in 0..dims.cols() {
            if c > 0 {
                write!(f, " ")?;
            }
            write!(f, "{:>width$}", entries[r * dims.cols() + c])?;
        }
        if r + 1 < dims.rows() {
            writeln!(f)?;
        }
    }
    Ok(())
}

impl fmt::Display for BaseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_rows(f, self.dims, &self.entries)
    }
}

impl fmt::Display for ExpMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_rows(f, self.dims, &self.entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn m7() -> Modulus {
        Modulus::new(7).unwrap()
    }

    #[test]
    fn dims_must_be_tall() {
        assert!(Dims::new(5, 3).is_ok());
        assert!(Dims::new(2, 1).is_ok());
        assert_eq!(
            Dims::new(3, 3),
            Err(Error::BadDims { rows: 3, cols: 3 })
        );
        assert_eq!(
            Dims::new(2, 3),
            Err(Error::BadDims { rows: 2, cols: 3 })
        );
        assert_eq!(
            Dims::new(3, 0),
            Err(Error::BadDims { rows: 3, cols: 0 })
        );
        assert_eq!(
            Dims::new(70_000, 3),
            Err(Error::BadDims {
                rows: 70_000,
                cols: 3
            })
        );
    }

    #[test]
    fn base_entry_range_is_enforced() {
        let dims = Dims::new(2, 1).unwrap();
        assert!(BaseMatrix::from_entries(dims, m7(), vec![1, 6]).is_ok());
        let zero = BaseMatrix::from_entries(dims, m7(), vec![0, 6]);
        assert_eq!(
            zero,
            Err(Error::EntryOutOfRange {
                index: 0,
                value: 0,
                min: 1,
                max: 6
            })
        );
        let big = BaseMatrix::from_entries(dims, m7(), vec![1, 7]);
        assert_eq!(
            big,
            Err(Error::EntryOutOfRange {
                index: 1,
                value: 7,
                min: 1,
                max: 6
            })
        );
    }

    #[test]
    fn exp_entry_range_is_enforced() {
        let dims = Dims::new(2, 1).unwrap();
        assert!(ExpMatrix::from_entries(dims, m7(), vec![0, 5]).is_ok());
        let big = ExpMatrix::from_entries(dims, m7(), vec![0, 6]);
        assert_eq!(
            big,
            Err(Error::EntryOutOfRange {
                index: 1,
                value: 6,
                min: 0,
                max: 5
            })
        );
    }

    #[test]
    fn entry_count_must_match_shape() {
        let dims = Dims::new(3, 2).unwrap();
        assert_eq!(
            BaseMatrix::from_entries(dims, m7(), vec![1; 5]),
            Err(Error::EntryCount {
                got: 5,
                rows: 3,
                cols: 2
            })
        );
    }

    #[test]
    fn unreduced_entries_fold_mod_q() {
        let dims = Dims::new(2, 1).unwrap();
        let m = ExpMatrix::from_unreduced(dims, m7(), &[6, 13]).unwrap();
        assert_eq!(m.entries(), &[0, 1]);
    }

    #[test]
    fn encoding_round_trips() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let modulus = Modulus::new(104_729).unwrap();
        let dims = Dims::new(5, 3).unwrap();
        let a = BaseMatrix::random(dims, modulus, &mut rng);
        let bytes = a.to_bytes();
        assert_eq!(bytes.len(), 4 + 15 * 8);
        let (back, used) = BaseMatrix::from_bytes(&bytes, modulus).unwrap();
        assert_eq!(used, bytes.len());
        assert_eq!(back, a);

        let x = ExpMatrix::random(dims, modulus, &mut rng);
        let (back, used) = ExpMatrix::from_bytes(&x.to_bytes(), modulus).unwrap();
        assert_eq!(used, x.to_bytes().len());
        assert_eq!(back, x);
    }

    #[test]
    fn encoding_is_the_documented_layout() {
        let dims = Dims::new(2, 1).unwrap();
        let m = BaseMatrix::from_entries(dims, m7(), vec![3, 5]).unwrap();
        assert_eq!(
            m.to_bytes(),
            [
                0, 2, // rows
                0, 1, // cols
                0, 0, 0, 0, 0, 0, 0, 3, // entry (0,0)
                0, 0, 0, 0, 0, 0, 0, 5, // entry (1,0)
            ]
        );
    }

    #[test]
    fn decode_rejects_malformed_input() {
        let modulus = m7();
        assert!(matches!(
            BaseMatrix::from_bytes(&[0, 2, 0], modulus),
            Err(Error::Encoding("truncated matrix header"))
        ));
        // Header promises 2x1 but only one entry follows.
        let mut short = vec![0, 2, 0, 1];
        short.extend_from_slice(&3u64.to_be_bytes());
        assert!(matches!(
            BaseMatrix::from_bytes(&short, modulus),
            Err(Error::Encoding("truncated matrix body"))
        ));
        // Square shape in the header.
        let square = [0, 2, 0, 2];
        assert_eq!(
            BaseMatrix::from_bytes(&square, modulus),
            Err(Error::BadDims { rows: 2, cols: 2 })
        );
        // Huge claimed shape with no body must fail before allocating.
        let huge = [0xff, 0xff, 0x00, 0x01];
        assert!(matches!(
            BaseMatrix::from_bytes(&huge, modulus),
            Err(Error::Encoding("truncated matrix body"))
        ));
        // Entry out of range for the modulus.
        let mut bad = vec![0, 2, 0, 1];
        bad.extend_from_slice(&7u64.to_be_bytes());
        bad.extend_from_slice(&1u64.to_be_bytes());
        assert!(matches!(
            BaseMatrix::from_bytes(&bad, modulus),
            Err(Error::EntryOutOfRange { .. })
        ));
    }

    #[test]
    fn trailing_bytes_are_reported_via_consumed_length() {
        let dims = Dims::new(2, 1).unwrap();
        let m = BaseMatrix::from_entries(dims, m7(), vec![3, 5]).unwrap();
        let mut bytes = m.to_bytes();
        bytes.push(0xAA);
        let (back, used) = BaseMatrix::from_bytes(&bytes, m7()).unwrap();
        assert_eq!(back, m);
        assert_eq!(used, bytes.len() - 1);
    }

    #[test]
    fn display_lays_out_rows() {
        let dims = Dims::new(3, 2).unwrap();
        let m = BaseMatrix::from_entries(dims, m7(), vec![1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(m.to_string(), "1 2\n3 4\n5 6");
    }
}

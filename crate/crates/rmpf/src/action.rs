//! Entry-wise power actions of exponent matrices on base matrices.
//!
//! For a tall base matrix `W` (shape `m x n`, `m > n`) and exponent
//! matrices `X`, `Y` of the same shape, with all products running over the
//! narrow dimension `n`:
//!
//! * left action:      `(X * W)[i][j]  = prod_k W[k][j] ^ X[i][k]  (mod p)`
//! * right action:     `(W * Y)[i][j]  = prod_l W[i][l] ^ Y[l][j]  (mod p)`
//! * two-sided action: `(X * W * Y)[i][j] = prod_{k,l} W[k][l] ^ (X[i][k] * Y[l][j])`
//!
//! The two-sided action factors as `X * (W * Y)`, which costs
//! `n^3 + m * n^2` modular exponentiations instead of the direct
//! `m * n^3`; `two_sided_action` uses the factored form and
//! `two_sided_action_naive` keeps the direct form as a cross-check.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{BaseMatrix, Dims, ExpMatrix};
use crate::modarith::Modulus;

/// Entry counts at or above this run the data-parallel path when the
/// `parallel` feature is enabled. Small shapes stay sequential: forking
/// per-entry work packets costs more than a handful of exponentiations.
#[cfg(feature = "parallel")]
const PAR_MIN_ENTRIES: usize = 64;

fn check_shapes(a: Dims, am: Modulus, b: Dims, bm: Modulus) -> Result<()> {
    if a != b {
        return Err(Error::DimMismatch {
            left_rows: a.rows(),
            left_cols: a.cols(),
            right_rows: b.rows(),
            right_cols: b.cols(),
        });
    }
    if am != bm {
        return Err(Error::ModulusMismatch(am.p(), bm.p()));
    }
    Ok(())
}

fn map_entries<F>(len: usize, f: F) -> Vec<u64>
where
    F: Fn(usize) -> u64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if len >= PAR_MIN_ENTRIES {
        return (0..len).into_par_iter().map(f).collect();
    }
    (0..len).map(f).collect()
}

/// `X` acting from the left: output row `i` mixes the top `n` rows of `W`
/// using row `i` of `X` as exponents.
pub fn left_action(x: &ExpMatrix, w: &BaseMatrix) -> Result<BaseMatrix> {
    check_shapes(x.dims(), x.modulus(), w.dims(), w.modulus())?;
    let dims = w.dims();
    let modulus = w.modulus();
    let n = dims.cols();
    let entries = map_entries(dims.len(), |idx| {
        let (i, j) = (idx / n, idx % n);
        let mut acc = 1u64;
        for k in 0..n {
            acc = modulus.mul(acc, modulus.pow(w.entry(k, j), x.entry(i, k)));
        }
        acc
    });
    Ok(BaseMatrix::from_raw(dims, modulus, entries))
}

/// `Y` acting from the right: output column `j` mixes the columns of `W`
/// within each row, using column `j` of `Y`'s top `n x n` block.
pub fn right_action(w: &BaseMatrix, y: &ExpMatrix) -> Result<BaseMatrix> {
    check_shapes(w.dims(), w.modulus(), y.dims(), y.modulus())?;
    let dims = w.dims();
    let modulus = w.modulus();
    let n = dims.cols();
    let entries = map_entries(dims.len(), |idx| {
        let (i, j) = (idx / n, idx % n);
        let mut acc = 1u64;
        for l in 0..n {
            acc = modulus.mul(acc, modulus.pow(w.entry(i, l), y.entry(l, j)));
        }
        acc
    });
    Ok(BaseMatrix::from_raw(dims, modulus, entries))
}

/// Two-sided action `X * W * Y`, evaluated in the factored form
/// `X * (W * Y)` where only the top `n` rows of the inner product are
/// ever needed.
pub fn two_sided_action(
    x: &ExpMatrix,
    w: &BaseMatrix,
    y: &ExpMatrix,
) -> Result<BaseMatrix> {
    check_shapes(x.dims(), x.modulus(), w.dims(), w.modulus())?;
    check_shapes(w.dims(), w.modulus(), y.dims(), y.modulus())?;
    let dims = w.dims();
    let modulus = w.modulus();
    let n = dims.cols();

    // Top n x n block of W * Y: n^3 exponentiations.
    let top = inner_top_block(w, y);

    // X applied to that block: m * n^2 exponentiations.
    let entries = map_entries(dims.len(), |idx| {
        let (i, j) = (idx / n, idx % n);
        let mut acc = 1u64;
        for k in 0..n {
            acc = modulus.mul(acc, modulus.pow(top[k * n + j], x.entry(i, k)));
        }
        acc
    });
    Ok(BaseMatrix::from_raw(dims, modulus, entries))
}

/// Top `n x n` block of the right action, row-major.
fn inner_top_block(w: &BaseMatrix, y: &ExpMatrix) -> Vec<u64> {
    let modulus = w.modulus();
    let n = w.dims().cols();
    map_entries(n * n, |idx| {
        let (k, j) = (idx / n, idx % n);
        let mut acc = 1u64;
        for l in 0..n {
            acc = modulus.mul(acc, modulus.pow(w.entry(k, l), y.entry(l, j)));
        }
        acc
    })
}

/// Direct evaluation of the two-sided action: every output entry takes the
/// full double product over `(k, l)`. Quadratic per entry; kept as an
/// independent cross-check for the factored form.
pub fn two_sided_action_naive(
    x: &ExpMatrix,
    w: &BaseMatrix,
    y: &ExpMatrix,
) -> Result<BaseMatrix> {
    check_shapes(x.dims(), x.modulus(), w.dims(), w.modulus())?;
    check_shapes(w.dims(), w.modulus(), y.dims(), y.modulus())?;
    let dims = w.dims();
    let modulus = w.modulus();
    let n = dims.cols();
    let entries = map_entries(dims.len(), |idx| {
        let (i, j) = (idx / n, idx % n);
        let mut acc = 1u64;
        for k in 0..n {
            for l in 0..n {
                let e = modulus.exp_mul(x.entry(i, k), y.entry(l, j));
                acc = modulus.mul(acc, modulus.pow(w.entry(k, l), e));
            }
        }
        acc
    });
    Ok(BaseMatrix::from_raw(dims, modulus, entries))
}

/// Factored two-sided action that also reports how many modular
/// exponentiations it performed (`n^3 + m * n^2`). Always sequential so
/// the count is exact and scheduling-independent.
pub fn two_sided_action_counted(
    x: &ExpMatrix,
    w: &BaseMatrix,
    y: &ExpMatrix,
) -> Result<(BaseMatrix, u64)> {
    check_shapes(x.dims(), x.modulus(), w.dims(), w.modulus())?;
    check_shapes(w.dims(), w.modulus(), y.dims(), y.modulus())?;
    let dims = w.dims();
    let modulus = w.modulus();
    let n = dims.cols();
    let mut pows: u64 = 0;

    let mut top = vec![1u64; n * n];
    for k in 0..n {
        for j in 0..n {
            let mut acc = 1u64;
            for l in 0..n {
                acc = modulus.mul(acc, modulus.pow(w.entry(k, l), y.entry(l, j)));
                pows += 1;
            }
            top[k * n + j] = acc;
        }
    }

    let mut entries = vec![1u64; dims.len()];
    for i in 0..dims.rows() {
        for j in 0..n {
            let mut acc = 1u64;
            for k in 0..n {
                acc = modulus.mul(acc, modulus.pow(top[k * n + j], x.entry(i, k)));
                pows += 1;
            }
            entries[i * n + j] = acc;
        }
    }
    Ok((BaseMatrix::from_raw(dims, modulus, entries), pows))
}

/// Direct two-sided action with an exponentiation count (`m * n^3`).
pub fn two_sided_action_naive_counted(
    x: &ExpMatrix,
    w: &BaseMatrix,
    y: &ExpMatrix,
) -> Result<(BaseMatrix, u64)> {
    check_shapes(x.dims(), x.modulus(), w.dims(), w.modulus())?;
    check_shapes(w.dims(), w.modulus(), y.dims(), y.modulus())?;
    let dims = w.dims();
    let modulus = w.modulus();
    let n = dims.cols();
    let mut pows: u64 = 0;
    let mut entries = vec![1u64; dims.len()];
    for i in 0..dims.rows() {
        for j in 0..n {
            let mut acc = 1u64;
            for k in 0..n {
                for l in 0..n {
                    let e = modulus.exp_mul(x.entry(i, k), y.entry(l, j));
                    acc = modulus.mul(acc, modulus.pow(w.entry(k, l), e));
                    pows += 1;
                }
            }
            entries[i * n + j] = acc;
        }
    }
    Ok((BaseMatrix::from_raw(dims, modulus, entries), pows))
}

/// Multiplies every exponent entry by `scalar`, mod `p - 1`.
pub fn scalar_mul(scalar: u64, x: &ExpMatrix) -> ExpMatrix {
    let modulus = x.modulus();
    let entries = x
        .entries()
        .iter()
        .map(|&e| modulus.exp_mul(scalar, e))
        .collect();
    ExpMatrix::from_raw(x.dims(), modulus, entries)
}

/// Raises every entry of a base matrix to the power `e`, mod `p`.
pub fn entrywise_pow(w: &BaseMatrix, e: u64) -> BaseMatrix {
    let modulus = w.modulus();
    let entries = w
        .entries()
        .iter()
        .map(|&v| modulus.pow(v, e))
        .collect();
    BaseMatrix::from_raw(w.dims(), modulus, entries)
}

/// Whether `x^T * u` and `u^T * x` agree as `n x n` matrices mod `p - 1`.
///
/// Pairs satisfying this commute through the two-sided action, which is
/// what makes scalar multiples of the public exponent matrices usable as
/// secrets.
pub fn commutes(x: &ExpMatrix, u: &ExpMatrix) -> Result<bool> {
    check_shapes(x.dims(), x.modulus(), u.dims(), u.modulus())?;
    let modulus = x.modulus();
    let (m, n) = (x.dims().rows(), x.dims().cols());
    for a in 0..n {
        for b in 0..n {
            let mut xu = 0u64;
            let mut ux = 0u64;
            for i in 0..m {
                xu = modulus.exp_add(xu, modulus.exp_mul(x.entry(i, a), u.entry(i, b)));
                ux = modulus.exp_add(ux, modulus.exp_mul(u.entry(i, a), x.entry(i, b)));
            }
            if xu != ux {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Exponent matrix `Z` with `left_action(Z, W) = left_action(Y, left_action(X, W))`
/// for every `W`: the row-space product `Z[i][k] = sum_t Y[i][t] * X[t][k]`
/// over the top `n` rows of `X`, mod `p - 1`.
pub fn compose_left(y: &ExpMatrix, x: &ExpMatrix) -> Result<ExpMatrix> {
    check_shapes(y.dims(), y.modulus(), x.dims(), x.modulus())?;
    let dims = x.dims();
    let modulus = x.modulus();
    let n = dims.cols();
    let mut entries = vec![0u64; dims.len()];
    for i in 0..dims.rows() {
        for k in 0..n {
            let mut acc = 0u64;
            for t in 0..n {
                acc = modulus.exp_add(acc, modulus.exp_mul(y.entry(i, t), x.entry(t, k)));
            }
            entries[i * n + k] = acc;
        }
    }
    Ok(ExpMatrix::from_raw(dims, modulus, entries))
}

/// Exponent matrix `Z` with `right_action(right_action(W, Y1), Y2) =
/// right_action(W, Z)` for every `W`. Only the top `n x n` blocks of the
/// inputs matter; rows below the top block are zeroed in the result.
pub fn compose_right(y1: &ExpMatrix, y2: &ExpMatrix) -> Result<ExpMatrix> {
    check_shapes(y1.dims(), y1.modulus(), y2.dims(), y2.modulus())?;
    let dims = y1.dims();
    let modulus = y1.modulus();
    let n = dims.cols();
    let mut entries = vec![0u64; dims.len()];
    for l in 0..n {
        for j in 0..n {
            let mut acc = 0u64;
            for t in 0..n {
                acc = modulus.exp_add(acc, modulus.exp_mul(y1.entry(l, t), y2.entry(t, j)));
            }
            entries[l * n + j] = acc;
        }
    }
    Ok(ExpMatrix::from_raw(dims, modulus, entries))
}

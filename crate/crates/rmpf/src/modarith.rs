//! Modular arithmetic over `u64` operands: multiply, exponentiate,
//! deterministic primality, and prime generation.
//!
//! All routines widen to `u128` internally, so any `u64` modulus is safe
//! from overflow.

use rand::Rng;

use crate::error::{Error, Result};

/// `(a * b) mod n`. Fails only for `n == 0`.
#[inline]
pub fn mod_mul(a: u64, b: u64, n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::ZeroModulus);
    }
    Ok(mul_mod_unchecked(a % n, b % n, n))
}

/// `base^exp mod n` by square-and-multiply. Fails only for `n == 0`.
///
/// `0^0` follows the empty-product convention and yields `1 mod n`.
#[inline]
pub fn mod_pow(base: u64, exp: u64, n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::ZeroModulus);
    }
    Ok(pow_mod_unchecked(base % n, exp, n))
}

#[inline(always)]
fn mul_mod_unchecked(a: u64, b: u64, n: u64) -> u64 {
    (a as u128 * b as u128 % n as u128) as u64
}

fn pow_mod_unchecked(mut base: u64, mut exp: u64, n: u64) -> u64 {
    let mut acc: u64 = 1 % n;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod_unchecked(acc, base, n);
        }
        base = mul_mod_unchecked(base, base, n);
        exp >>= 1;
    }
    acc
}

/// Witnesses that make Miller-Rabin deterministic for every `n < 2^64`.
const MR_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic Miller-Rabin primality test, exact for all `u64` inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for w in MR_WITNESSES {
        if n == w {
            return true;
        }
        if n.is_multiple_of(w) {
            return false;
        }
    }
    // n is odd and > 37 here; write n - 1 = d * 2^r with d odd.
    let r = (n - 1).trailing_zeros();
    let d = (n - 1) >> r;
    'witness: for w in MR_WITNESSES {
        let mut x = pow_mod_unchecked(w, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod_unchecked(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Draws a random prime with exactly `bits` significant bits (top bit set).
///
/// `bits` must lie in `[8, 64]`. Deterministic for a seeded `rng`.
pub fn generate_prime<R: Rng>(bits: u32, rng: &mut R) -> Result<u64> {
    if !(8..=64).contains(&bits) {
        return Err(Error::PrimeBits(bits));
    }
    let top = 1u64 << (bits - 1);
    let mask = top | (top - 1);
    loop {
        // Force the top bit for the exact width and the low bit for oddness.
        let candidate = (rng.gen::<u64>() & mask) | top | 1;
        if is_prime(candidate) {
            return Ok(candidate);
        }
    }
}

/// A verified odd prime `p >= 5` together with the exponent modulus `p - 1`.
///
/// Base-matrix entries live in `[1, p-1]` and exponents in `[0, p-2]`;
/// methods on this type assume those ranges and never fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Modulus {
    p: u64,
    q: u64,
}

impl Modulus {
    /// Validates that `p` is a prime with `p >= 5`.
    pub fn new(p: u64) -> Result<Self> {
        if p < 5 || !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Modulus { p, q: p - 1 })
    }

    /// The prime modulus for base entries.
    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    /// The exponent modulus `p - 1`.
    #[inline]
    pub fn q(&self) -> u64 {
        self.q
    }

    /// `(a * b) mod p`.
    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        mul_mod_unchecked(a, b, self.p)
    }

    /// `base^exp mod p`.
    #[inline]
    pub fn pow(&self, base: u64, exp: u64) -> u64 {
        pow_mod_unchecked(base, exp, self.p)
    }

    /// `x mod (p - 1)`.
    #[inline]
    pub fn reduce_exp(&self, x: u64) -> u64 {
        x % self.q
    }

    /// `(a * b) mod (p - 1)` for exponent arithmetic.
    #[inline]
    pub fn exp_mul(&self, a: u64, b: u64) -> u64 {
        mul_mod_unchecked(a % self.q, b % self.q, self.q)
    }

    /// `(a + b) mod (p - 1)` for exponent arithmetic.
    #[inline]
    pub fn exp_add(&self, a: u64, b: u64) -> u64 {
        (((a % self.q) as u128 + (b % self.q) as u128) % self.q as u128) as u64
    }
}

//! Key agreement over the two-sided matrix action.
//!
//! Public parameters fix a prime `p`, a tall shape, a base matrix `W`, and
//! two public exponent matrices `X`, `Y`. Each party picks secret scalars
//! `(lambda, omega)`, forms the commuting pair `(lambda * X, omega * Y)`,
//! and publishes its two-sided action on `W` as a token. Applying one's
//! own pair to the peer token lands both sides on the same matrix, which
//! is then hashed into a 32-byte session key.

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::action::{scalar_mul, two_sided_action};
use crate::error::{Error, Result};
use crate::matrix::{BaseMatrix, Dims, ExpMatrix};
use crate::modarith::{generate_prime, Modulus};

const PARAMS_MAGIC: &[u8; 4] = b"RMPF";
const PARAMS_VERSION: u8 = 0x01;
const KDF_LABEL: &[u8] = b"RMPF-KAP-v1";

/// All-zero transcript hash used when keys are derived offline, outside
/// any recorded handshake.
pub const ZERO_TRANSCRIPT: [u8; 32] = [0u8; 32];

/// Public parameters: prime modulus, shape, base matrix, and the two
/// public exponent matrices every secret is built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicParams {
    modulus: Modulus,
    dims: Dims,
    base: BaseMatrix,
    x: ExpMatrix,
    y: ExpMatrix,
}

impl PublicParams {
    /// Generates fresh parameters with a random prime of exactly
    /// `p_bits` bits. Deterministic for a seeded `rng`.
    pub fn generate<R: Rng>(p_bits: u32, dims: Dims, rng: &mut R) -> Result<Self> {
        let p = generate_prime(p_bits, rng)?;
        Self::with_prime(p, dims, rng)
    }

    /// Generates random parameter contents over a caller-chosen prime.
    pub fn with_prime<R: Rng>(p: u64, dims: Dims, rng: &mut R) -> Result<Self> {
        let modulus = Modulus::new(p)?;
        let base = BaseMatrix::random(dims, modulus, rng);
        let x = ExpMatrix::random(dims, modulus, rng);
        let y = ExpMatrix::random(dims, modulus, rng);
        Ok(PublicParams {
            modulus,
            dims,
            base,
            x,
            y,
        })
    }

    /// Assembles parameters from explicit entries. Base entries must lie
    /// in `[1, p-1]`; exponent entries may be unreduced and are folded
    /// mod `p - 1`.
    pub fn from_parts(
        p: u64,
        dims: Dims,
        base_entries: Vec<u64>,
        x_entries: &[u64],
        y_entries: &[u64],
    ) -> Result<Self> {
        let modulus = Modulus::new(p)?;
        let base = BaseMatrix::from_entries(dims, modulus, base_entries)?;
        let x = ExpMatrix::from_unreduced(dims, modulus, x_entries)?;
        let y = ExpMatrix::from_unreduced(dims, modulus, y_entries)?;
        Ok(PublicParams {
            modulus,
            dims,
            base,
            x,
            y,
        })
    }

    #[inline]
    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    #[inline]
    pub fn prime(&self) -> u64 {
        self.modulus.p()
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn base(&self) -> &BaseMatrix {
        &self.base
    }

    #[inline]
    pub fn x(&self) -> &ExpMatrix {
        &self.x
    }

    #[inline]
    pub fn y(&self) -> &ExpMatrix {
        &self.y
    }

    /// Serializes as `"RMPF" || version || u64be p || base || x || y`
    /// with each matrix in its canonical encoding.
    pub fn to_bytes(&self) -> Vec<u8> {
        let base = self.base.to_bytes();
        let x = self.x.to_bytes();
        let y = self.y.to_bytes();
        let mut out = Vec::with_capacity(13 + base.len() + x.len() + y.len());
        out.extend_from_slice(PARAMS_MAGIC);
        out.push(PARAMS_VERSION);
        out.extend_from_slice(&self.modulus.p().to_be_bytes());
        out.extend_from_slice(&base);
        out.extend_from_slice(&x);
        out.extend_from_slice(&y);
        out
    }

    /// Parses and fully validates a parameter blob: magic, version, prime
    /// modulus, entry ranges, matching shapes, and no trailing bytes.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 13 {
            return Err(Error::Encoding("parameter blob too short"));
        }
        if &bytes[..4] != PARAMS_MAGIC {
            return Err(Error::Encoding("bad magic"));
        }
        if bytes[4] != PARAMS_VERSION {
            return Err(Error::Encoding("unsupported version"));
        }
        let p = u64::from_be_bytes(bytes[5..13].try_into().expect("8 bytes"));
        let modulus = Modulus::new(p)?;
        let mut offset = 13;
        let (base, used) = BaseMatrix::from_bytes(&bytes[offset..], modulus)?;
        offset += used;
        let (x, used) = ExpMatrix::from_bytes(&bytes[offset..], modulus)?;
        offset += used;
        let (y, used) = ExpMatrix::from_bytes(&bytes[offset..], modulus)?;
        offset += used;
        if offset != bytes.len() {
            return Err(Error::Encoding("trailing bytes after parameters"));
        }
        let dims = base.dims();
        if x.dims() != dims || y.dims() != dims {
            return Err(Error::DimMismatch {
                left_rows: dims.rows(),
                left_cols: dims.cols(),
                right_rows: x.dims().rows().max(y.dims().rows()),
                right_cols: x.dims().cols().max(y.dims().cols()),
            });
        }
        Ok(PublicParams {
            modulus,
            dims,
            base,
            x,
            y,
        })
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(text: &str) -> Result<Self> {
        let bytes = hex::decode(text.trim())?;
        Self::from_bytes(&bytes)
    }

    /// SHA-256 of the canonical serialization; identifies a parameter set.
    pub fn fingerprint(&self) -> [u8; 32] {
        Sha256::digest(self.to_bytes()).into()
    }
}

/// One party's secret: scalars `(lambda, omega)` plus the derived
/// commuting exponent pair `(lambda * X, omega * Y)`.
#[derive(Clone, PartialEq, Eq)]
pub struct PrivateKey {
    lambda: u64,
    omega: u64,
    a: ExpMatrix,
    b: ExpMatrix,
}

impl std::fmt::Debug for PrivateKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // Secrets stay out of debug logs.
        f.debug_struct("PrivateKey").finish_non_exhaustive()
    }
}

impl PrivateKey {
    /// Draws scalars uniformly from `[1, p-2]`, rejecting pairs whose
    /// product vanishes mod `p - 1` (those collapse the token to all ones
    /// and agree on a key with every other vanishing pair).
    pub fn generate<R: Rng>(params: &PublicParams, rng: &mut R) -> Self {
        let q = params.modulus().q();
        loop {
            let lambda = rng.gen_range(1..q);
            let omega = rng.gen_range(1..q);
            if params.modulus().exp_mul(lambda, omega) != 0 {
                return Self::assemble(params, lambda, omega);
            }
        }
    }

    /// Builds the secret for explicit scalars, each in `[1, p-2]`.
    /// Unlike [`PrivateKey::generate`], a vanishing product is accepted;
    /// exhaustive sweeps need the full range.
    pub fn from_scalars(params: &PublicParams, lambda: u64, omega: u64) -> Result<Self> {
        let q = params.modulus().q();
        for scalar in [lambda, omega] {
            if scalar == 0 || scalar >= q {
                return Err(Error::ScalarOutOfRange {
                    value: scalar,
                    min: 1,
                    max: q - 1,
                });
            }
        }
        Ok(Self::assemble(params, lambda, omega))
    }

    fn assemble(params: &PublicParams, lambda: u64, omega: u64) -> Self {
        PrivateKey {
            lambda,
            omega,
            a: scalar_mul(lambda, params.x()),
            b: scalar_mul(omega, params.y()),
        }
    }

    #[inline]
    pub fn lambda(&self) -> u64 {
        self.lambda
    }

    #[inline]
    pub fn omega(&self) -> u64 {
        self.omega
    }

    /// The left exponent matrix `lambda * X`.
    #[inline]
    pub fn left(&self) -> &ExpMatrix {
        &self.a
    }

    /// The right exponent matrix `omega * Y`.
    #[inline]
    pub fn right(&self) -> &ExpMatrix {
        &self.b
    }
}

/// A party's public token: its secret pair's two-sided action on the base.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token(BaseMatrix);

impl Token {
    #[inline]
    pub fn matrix(&self) -> &BaseMatrix {
        &self.0
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.0.to_bytes()
    }

    /// Decodes a token and checks it against the parameter set: same
    /// shape, same modulus, entries in `[1, p-1]`, no trailing bytes.
    pub fn from_bytes(bytes: &[u8], params: &PublicParams) -> Result<Self> {
        let (matrix, used) = BaseMatrix::from_bytes(bytes, params.modulus())?;
        if used != bytes.len() {
            return Err(Error::Encoding("trailing bytes after token"));
        }
        if matrix.dims() != params.dims() {
            return Err(Error::DimMismatch {
                left_rows: params.dims().rows(),
                left_cols: params.dims().cols(),
                right_rows: matrix.dims().rows(),
                right_cols: matrix.dims().cols(),
            });
        }
        Ok(Token(matrix))
    }

}

/// The agreed matrix together with the 32-byte session key hashed from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedKey {
    matrix: BaseMatrix,
    session_key: [u8; 32],
}

impl SharedKey {
    #[inline]
    pub fn matrix(&self) -> &BaseMatrix {
        &self.matrix
    }

    #[inline]
    pub fn session_key(&self) -> &[u8; 32] {
        &self.session_key
    }
}

/// Computes this party's token over the public base matrix.
pub fn make_token(params: &PublicParams, key: &PrivateKey) -> Result<Token> {
    let matrix = two_sided_action(key.left(), params.base(), key.right())?;
    Ok(Token(matrix))
}

/// Derives the shared key from a peer token, outside any transcript
/// (the transcript slot is pinned to all zeroes).
pub fn derive_key(params: &PublicParams, key: &PrivateKey, peer: &Token) -> Result<SharedKey> {
    derive_key_with_transcript(params, key, peer, &ZERO_TRANSCRIPT)
}

/// Derives the shared key from a peer token, binding the session key to a
/// handshake transcript hash. The token must belong to `params`: same
/// shape, same modulus.
pub fn derive_key_with_transcript(
    params: &PublicParams,
    key: &PrivateKey,
    peer: &Token,
    transcript: &[u8; 32],
) -> Result<SharedKey> {
    if peer.matrix().dims() != params.dims() {
        return Err(Error::DimMismatch {
            left_rows: params.dims().rows(),
            left_cols: params.dims().cols(),
            right_rows: peer.matrix().dims().rows(),
            right_cols: peer.matrix().dims().cols(),
        });
    }
    if peer.matrix().modulus() != params.modulus() {
        return Err(Error::ModulusMismatch(
            params.prime(),
            peer.matrix().modulus().p(),
        ));
    }
    let matrix = two_sided_action(key.left(), peer.matrix(), key.right())?;
    let session_key = kdf(&matrix, transcript);
    Ok(SharedKey {
        matrix,
        session_key,
    })
}

/// Session key derivation: SHA-256 over a fixed label, the transcript
/// hash, the canonical encoding of the agreed matrix, and the prime.
pub fn kdf(key_matrix: &BaseMatrix, transcript: &[u8; 32]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(KDF_LABEL);
    hasher.update(transcript);
    hasher.update(key_matrix.to_bytes());
    hasher.update(key_matrix.modulus().p().to_be_bytes());
    hasher.finalize().into()
}

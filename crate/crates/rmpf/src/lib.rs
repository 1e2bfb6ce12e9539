//! Key agreement built on entry-wise power actions of exponent matrices
//! on a rectangular matrix over a prime field, together with a framed
//! wire protocol for running the handshake over a socket and an analysis
//! toolkit that measures how cheaply the scheme's secrets can be
//! recovered by brute force.
//!
//! Modules, bottom up:
//!
//! * [`modarith`] — `u64` modular arithmetic, primality, prime generation.
//! * [`matrix`] — tall matrix types over `Z_p*` and `Z_{p-1}`, with a
//!   canonical byte encoding.
//! * [`action`] — the left/right/two-sided power actions and their
//!   algebraic laws (composition, commuting pairs, scalar extraction).
//! * [`kap`] — public parameters, private scalars, tokens, and session-key
//!   derivation.
//! * [`wire`] — length-prefixed frames and the blocking two-party
//!   handshake with transcript binding and key confirmation.
//! * [`analysis`] — brute-force secret recovery, attack-cost curves, and
//!   evaluation-cost instrumentation.
//! * [`toy`] — a fully pinned example session usable as golden vectors.
//!
//! The `parallel` feature (on by default) lets the action evaluations and
//! the brute-force scans fan out via rayon; without it every code path
//! runs sequentially with identical results.

pub mod action;
pub mod analysis;
mod error;
pub mod kap;
pub mod matrix;
pub mod modarith;
pub mod toy;
pub mod wire;

pub use error::{Error, Result};

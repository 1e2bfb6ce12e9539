//! Length-prefixed wire protocol and the blocking two-party handshake.
//!
//! Frame layout: `u32` big-endian payload length, one message-type byte,
//! then the payload. The handshake exchanges parameters and tokens, hashes
//! the exact bytes of those three frames into a transcript, derives the
//! session key bound to that transcript, and finishes with hash-based key
//! confirmation in both directions.
//!
//! ```text
//! initiator                         responder
//!     | -- PARAMS ------------------->  validate
//!     | -- TOKEN_I ------------------>  validate
//!     |  <------------------ TOKEN_R -- |
//!     |        (both derive the session key)
//!     | -- CONFIRM_I ---------------->  verify
//!     |  <---------------- CONFIRM_R -- verify
//! ```

use std::io::{Read, Write};

use rand::Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::kap::{
    derive_key_with_transcript, make_token, PrivateKey, PublicParams, SharedKey, Token,
};

/// Hard cap on frame payloads; enforced before any allocation.
pub const MAX_PAYLOAD: u32 = 1 << 20;

/// Bytes in the fixed frame header: length word plus type byte.
pub const HEADER_LEN: usize = 5;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("frame payload of {0} bytes exceeds the {MAX_PAYLOAD}-byte cap")]
    Oversize(u32),

    #[error("unknown message type {0:#04x}")]
    UnknownType(u8),

    #[error("unexpected {got:?} frame in phase {phase:?}")]
    UnexpectedFrame { got: MsgType, phase: Phase },

    #[error("peer reported: {0}")]
    Peer(String),

    #[error("invalid handshake payload: {0}")]
    Payload(#[from] crate::error::Error),

    #[error("peer parameters do not match the pinned set")]
    ParamsMismatch,

    #[error("key confirmation failed")]
    ConfirmFailed,

    #[error("transcript is not complete in phase {0:?}")]
    TranscriptIncomplete(Phase),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum MsgType {
    Params = 0x01,
    TokenI = 0x02,
    TokenR = 0x03,
    ConfirmI = 0x04,
    ConfirmR = 0x05,
    Error = 0x7F,
}

impl MsgType {
    pub fn from_byte(b: u8) -> Result<Self, WireError> {
        Ok(match b {
            0x01 => MsgType::Params,
            0x02 => MsgType::TokenI,
            0x03 => MsgType::TokenR,
            0x04 => MsgType::ConfirmI,
            0x05 => MsgType::ConfirmR,
            0x7F => MsgType::Error,
            other => return Err(WireError::UnknownType(other)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireFrame {
    pub msg_type: MsgType,
    pub payload: Vec<u8>,
}

impl WireFrame {
    pub fn new(msg_type: MsgType, payload: Vec<u8>) -> Self {
        WireFrame { msg_type, payload }
    }

    /// `u32be length || type byte || payload`.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.push(self.msg_type as u8);
        out.extend_from_slice(&self.payload);
        out
    }
}

/// Parses one frame from the front of `buf`. Returns `Ok(None)` when more
/// bytes are needed, otherwise the frame and the bytes consumed.
pub fn decode_frame(buf: &[u8]) -> Result<Option<(WireFrame, usize)>, WireError> {
    if buf.len() < HEADER_LEN {
        return Ok(None);
    }
    let len = u32::from_be_bytes(buf[..4].try_into().expect("4 bytes"));
    if len > MAX_PAYLOAD {
        return Err(WireError::Oversize(len));
    }
    let msg_type = MsgType::from_byte(buf[4])?;
    let total = HEADER_LEN + len as usize;
    if buf.len() < total {
        return Ok(None);
    }
    let payload = buf[HEADER_LEN..total].to_vec();
    Ok(Some((WireFrame { msg_type, payload }, total)))
}

/// Reads exactly one frame from a blocking stream.
pub fn read_frame<S: Read>(io: &mut S) -> Result<WireFrame, WireError> {
    let mut header = [0u8; HEADER_LEN];
    io.read_exact(&mut header)?;
    let len = u32::from_be_bytes(header[..4].try_into().expect("4 bytes"));
    if len > MAX_PAYLOAD {
        return Err(WireError::Oversize(len));
    }
    let msg_type = MsgType::from_byte(header[4])?;
    let mut payload = vec![0u8; len as usize];
    io.read_exact(&mut payload)?;
    Ok(WireFrame { msg_type, payload })
}

pub fn write_frame<S: Write>(io: &mut S, frame: &WireFrame) -> Result<(), WireError> {
    io.write_all(&frame.encode())?;
    io.flush()?;
    Ok(())
}

/// Handshake progress. Phases only move forward; every protocol error
/// lands in `Failed` and stays there.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Start,
    ParamsExchanged,
    TokenSent,
    TokensExchanged,
    Confirmed,
    Failed,
}

/// Transcript and phase bookkeeping shared by both handshake roles.
///
/// The three framed messages `PARAMS`, `TOKEN_I`, `TOKEN_R` are absorbed
/// into a running SHA-256 in exactly that order — sender and receiver hash
/// the same bytes, so both land on the same transcript.
pub struct Session {
    phase: Phase,
    hasher: Sha256,
    transcript: Option<[u8; 32]>,
}

impl Session {
    pub fn new() -> Self {
        Session {
            phase: Phase::Start,
            hasher: Sha256::new(),
            transcript: None,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Feeds one of the transcript frames in. Order is fixed: `Params`,
    /// then `TokenI`, then `TokenR`; anything else fails the session.
    pub fn absorb(&mut self, frame: &WireFrame) -> Result<(), WireError> {
        let next = match (self.phase, frame.msg_type) {
            (Phase::Start, MsgType::Params) => Phase::ParamsExchanged,
            (Phase::ParamsExchanged, MsgType::TokenI) => Phase::TokenSent,
            (Phase::TokenSent, MsgType::TokenR) => Phase::TokensExchanged,
            (phase, got) => {
                self.phase = Phase::Failed;
                return Err(WireError::UnexpectedFrame { got, phase });
            }
        };
        self.hasher.update(frame.encode());
        if next == Phase::TokensExchanged {
            self.transcript = Some(self.hasher.clone().finalize().into());
        }
        self.phase = next;
        Ok(())
    }

    /// The transcript hash, available once both tokens are absorbed.
    pub fn transcript_hash(&self) -> Result<[u8; 32], WireError> {
        self.transcript
            .ok_or(WireError::TranscriptIncomplete(self.phase))
    }

    pub fn mark_confirmed(&mut self) -> Result<(), WireError> {
        if self.phase != Phase::TokensExchanged {
            let phase = self.phase;
            self.phase = Phase::Failed;
            return Err(WireError::TranscriptIncomplete(phase));
        }
        self.phase = Phase::Confirmed;
        Ok(())
    }

    pub fn mark_failed(&mut self) {
        self.phase = Phase::Failed;
    }
}

impl Default for Session {
    fn default() -> Self {
        Self::new()
    }
}

/// Result of a completed handshake.
pub struct HandshakeOutcome {
    pub shared: SharedKey,
    pub transcript: [u8; 32],
    pub peer_token: Token,
}

fn confirm_payload(label: &[u8], shared: &SharedKey) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(label);
    hasher.update(shared.session_key());
    hasher.finalize().into()
}

/// Best-effort error report to the peer before tearing the session down.
fn send_error<S: Read + Write>(io: &mut S, reason: &str) {
    let frame = WireFrame::new(MsgType::Error, reason.as_bytes().to_vec());
    let _ = write_frame(io, &frame);
}

fn expect_frame<S: Read>(
    io: &mut S,
    want: MsgType,
    session: &mut Session,
) -> Result<WireFrame, WireError> {
    let frame = read_frame(io)?;
    if frame.msg_type == MsgType::Error {
        session.mark_failed();
        return Err(WireError::Peer(
            String::from_utf8_lossy(&frame.payload).into_owned(),
        ));
    }
    if frame.msg_type != want {
        let phase = session.phase();
        session.mark_failed();
        return Err(WireError::UnexpectedFrame {
            got: frame.msg_type,
            phase,
        });
    }
    Ok(frame)
}

/// Drives the initiating side of the handshake over a blocking stream.
pub fn run_initiator<S: Read + Write>(
    io: &mut S,
    params: &PublicParams,
    key: &PrivateKey,
) -> Result<HandshakeOutcome, WireError> {
    let mut session = Session::new();

    let params_frame = WireFrame::new(MsgType::Params, params.to_bytes());
    session.absorb(&params_frame)?;
    write_frame(io, &params_frame)?;

    let token = make_token(params, key)?;
    let token_frame = WireFrame::new(MsgType::TokenI, token.to_bytes());
    session.absorb(&token_frame)?;
    write_frame(io, &token_frame)?;

    let reply = expect_frame(io, MsgType::TokenR, &mut session)?;
    let peer_token = match Token::from_bytes(&reply.payload, params) {
        Ok(t) => t,
        Err(e) => {
            session.mark_failed();
            send_error(io, "invalid token");
            return Err(e.into());
        }
    };
    session.absorb(&reply)?;

    let transcript = session.transcript_hash()?;
    let shared = derive_key_with_transcript(params, key, &peer_token, &transcript)?;

    let confirm = WireFrame::new(
        MsgType::ConfirmI,
        confirm_payload(b"confirm-I", &shared).to_vec(),
    );
    write_frame(io, &confirm)?;

    let peer_confirm = expect_frame(io, MsgType::ConfirmR, &mut session)?;
    if peer_confirm.payload != confirm_payload(b"confirm-R", &shared) {
        session.mark_failed();
        send_error(io, "key confirmation failed");
        return Err(WireError::ConfirmFailed);
    }
    session.mark_confirmed()?;

    Ok(HandshakeOutcome {
        shared,
        transcript,
        peer_token,
    })
}

/// Drives the responding side. When `expected` is given, the initiator's
/// parameters must match it byte for byte; otherwise any well-formed
/// parameter set is accepted. Returns the accepted parameters alongside
/// the outcome.
pub fn run_responder<S: Read + Write, R: Rng>(
    io: &mut S,
    expected: Option<&PublicParams>,
    rng: &mut R,
) -> Result<(PublicParams, HandshakeOutcome), WireError> {
    let mut session = Session::new();

    let params_frame = expect_frame(io, MsgType::Params, &mut session)?;
    let params = match PublicParams::from_bytes(&params_frame.payload) {
        Ok(p) => p,
        Err(e) => {
            session.mark_failed();
            send_error(io, "invalid parameters");
            return Err(e.into());
        }
    };
    if let Some(want) = expected {
        if params != *want {
            session.mark_failed();
            send_error(io, "parameters do not match the pinned set");
            return Err(WireError::ParamsMismatch);
        }
    }
    session.absorb(&params_frame)?;

    let token_frame = expect_frame(io, MsgType::TokenI, &mut session)?;
    let peer_token = match Token::from_bytes(&token_frame.payload, &params) {
        Ok(t) => t,
        Err(e) => {
            session.mark_failed();
            send_error(io, "invalid token");
            return Err(e.into());
        }
    };
    session.absorb(&token_frame)?;

    let key = PrivateKey::generate(&params, rng);
    let token = make_token(&params, &key)?;
    let reply = WireFrame::new(MsgType::TokenR, token.to_bytes());
    session.absorb(&reply)?;
    write_frame(io, &reply)?;

    let transcript = session.transcript_hash()?;
    let shared = derive_key_with_transcript(&params, &key, &peer_token, &transcript)?;

    let peer_confirm = expect_frame(io, MsgType::ConfirmI, &mut session)?;
    if peer_confirm.payload != confirm_payload(b"confirm-I", &shared) {
        session.mark_failed();
        send_error(io, "key confirmation failed");
        return Err(WireError::ConfirmFailed);
    }

    let confirm = WireFrame::new(
        MsgType::ConfirmR,
        confirm_payload(b"confirm-R", &shared).to_vec(),
    );
    write_frame(io, &confirm)?;
    session.mark_confirmed()?;

    Ok((
        params,
        HandshakeOutcome {
            shared,
            transcript,
            peer_token,
        },
    ))
}

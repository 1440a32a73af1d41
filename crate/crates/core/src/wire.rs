//! Framed channel emulator.
//!
//! Alice, Bob and Eve can run as separate processes connected by byte
//! streams. A symbol travels as a physics descriptor (its circle angle and
//! mean photon number); all quantum noise is injected when a receiver
//! measures it. The descriptor is in cleartext: this layer emulates the
//! optical channel and is not itself a secure transport.
//!
//! Every frame starts with a 6-byte preamble, `"AETA"`, version `1` and a
//! type byte. All multi-byte fields are little-endian.
//!
//! | type | payload                                                         | bytes |
//! |------|-----------------------------------------------------------------|-------|
//! | 3    | session: `m: u32`, `transmissivity: f64`, `symbol_count: u64`, 28 zero bytes | 48 |
//! | 1    | symbol: `symbol_index: u64`, `circle_angle: f64`, `mean_photons: f64`, 14 zero bytes | 38 |
//! | 2    | end of stream                                                   | 0     |
//!
//! The session transmissivity is the loss still to be applied on the way to
//! the next receiver. A tap applies it and forwards `1.0` downstream.

use std::f64::consts::TAU;
use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::keystream::{expand_running_key, SeedKey};
use crate::parties::{basis_axis, bob_decide, eve_opaque, plan_symbol, SymbolPlan};
use crate::photonics::{CoherentAmplitude, DetectionRecord, PolarizationPoint};
use crate::rng::{substream, Domain};

pub const MAGIC: [u8; 4] = *b"AETA";
pub const VERSION: u8 = 1;
pub const PREAMBLE_LEN: usize = 6;
pub const SYMBOL_PAYLOAD_LEN: usize = 38;
pub const SESSION_PAYLOAD_LEN: usize = 48;

const TYPE_SYMBOL: u8 = 1;
const TYPE_EOS: u8 = 2;
const TYPE_SESSION: u8 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WireError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported frame version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown frame type {0}")]
    UnknownType(u8),
    #[error("truncated frame: need {needed} bytes, have {got}")]
    Truncated { needed: usize, got: usize },
    #[error("reserved bytes are not zero")]
    NonZeroReserved,
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("unexpected frame: {0}")]
    Protocol(String),
}

impl WireError {
    /// Stable numeric code per error kind.
    pub fn code(&self) -> u8 {
        match self {
            WireError::BadMagic(_) => 1,
            WireError::UnsupportedVersion(_) => 2,
            WireError::UnknownType(_) => 3,
            WireError::Truncated { .. } => 4,
            WireError::NonZeroReserved => 5,
            WireError::InvalidField(_) => 6,
            WireError::Protocol(_) => 7,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub m: u32,
    pub transmissivity: f64,
    pub symbol_count: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolFrame {
    pub symbol_index: u64,
    pub circle_angle: f64,
    pub mean_photons: f64,
}

impl SymbolFrame {
    pub fn for_point(symbol_index: u64, point: PolarizationPoint, mean_photons: f64) -> Self {
        SymbolFrame {
            symbol_index,
            circle_angle: point.circle_angle(),
            mean_photons,
        }
    }

    pub fn physical_angle(&self) -> f64 {
        0.5 * self.circle_angle
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Frame {
    Session(SessionHeader),
    Symbol(SymbolFrame),
    EndOfStream,
}

fn validate(frame: &Frame) -> Result<(), WireError> {
    match frame {
        Frame::Session(h) => {
            if h.m < 2 || h.m % 2 != 0 {
                return Err(WireError::InvalidField(format!("m = {} must be even", h.m)));
            }
            if !(0.0..=1.0).contains(&h.transmissivity) {
                return Err(WireError::InvalidField(format!(
                    "transmissivity {} outside [0, 1]",
                    h.transmissivity
                )));
            }
        }
        Frame::Symbol(s) => {
            if !(0.0..TAU).contains(&s.circle_angle) {
                return Err(WireError::InvalidField(format!(
                    "circle angle {} outside [0, 2π)",
                    s.circle_angle
                )));
            }
            if !(s.mean_photons.is_finite() && s.mean_photons >= 0.0) {
                return Err(WireError::InvalidField(format!(
                    "mean photons {} must be >= 0",
                    s.mean_photons
                )));
            }
        }
        Frame::EndOfStream => {}
    }
    Ok(())
}

pub fn encode_frame(frame: &Frame) -> Result<Vec<u8>, WireError> {
    validate(frame)?;
    let mut out = Vec::with_capacity(PREAMBLE_LEN + SESSION_PAYLOAD_LEN);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    match frame {
        Frame::Session(h) => {
            out.push(TYPE_SESSION);
            out.extend_from_slice(&h.m.to_le_bytes());
            out.extend_from_slice(&h.transmissivity.to_le_bytes());
            out.extend_from_slice(&h.symbol_count.to_le_bytes());
            out.resize(PREAMBLE_LEN + SESSION_PAYLOAD_LEN, 0);
        }
        Frame::Symbol(s) => {
            out.push(TYPE_SYMBOL);
            out.extend_from_slice(&s.symbol_index.to_le_bytes());
            out.extend_from_slice(&s.circle_angle.to_le_bytes());
            out.extend_from_slice(&s.mean_photons.to_le_bytes());
            out.resize(PREAMBLE_LEN + SYMBOL_PAYLOAD_LEN, 0);
        }
        Frame::EndOfStream => out.push(TYPE_EOS),
    }
    Ok(out)
}

fn payload_len(kind: u8) -> Result<usize, WireError> {
    match kind {
        TYPE_SYMBOL => Ok(SYMBOL_PAYLOAD_LEN),
        TYPE_SESSION => Ok(SESSION_PAYLOAD_LEN),
        TYPE_EOS => Ok(0),
        other => Err(WireError::UnknownType(other)),
    }
}

fn check_preamble(pre: &[u8]) -> Result<u8, WireError> {
    let magic: [u8; 4] = pre[..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(WireError::BadMagic(magic));
    }
    if pre[4] != VERSION {
        return Err(WireError::UnsupportedVersion(pre[4]));
    }
    payload_len(pre[5])?;
    Ok(pre[5])
}

fn le_u64(b: &[u8]) -> u64 {
    u64::from_le_bytes(b[..8].try_into().expect("8 bytes"))
}

fn le_f64(b: &[u8]) -> f64 {
    f64::from_le_bytes(b[..8].try_into().expect("8 bytes"))
}

fn parse_payload(kind: u8, p: &[u8]) -> Result<Frame, WireError> {
    let frame = match kind {
        TYPE_SESSION => {
            if p[20..].iter().any(|&b| b != 0) {
                return Err(WireError::NonZeroReserved);
            }
            Frame::Session(SessionHeader {
                m: u32::from_le_bytes(p[..4].try_into().expect("4 bytes")),
                transmissivity: le_f64(&p[4..]),
                symbol_count: le_u64(&p[12..]),
            })
        }
        TYPE_SYMBOL => {
            if p[24..].iter().any(|&b| b != 0) {
                return Err(WireError::NonZeroReserved);
            }
            Frame::Symbol(SymbolFrame {
                symbol_index: le_u64(p),
                circle_angle: le_f64(&p[8..]),
                mean_photons: le_f64(&p[16..]),
            })
        }
        _ => Frame::EndOfStream,
    };
    validate(&frame)?;
    Ok(frame)
}

/// Decodes one frame from the front of `bytes`, returning it with the number
/// of bytes consumed.
pub fn decode_frame(bytes: &[u8]) -> Result<(Frame, usize), WireError> {
    if bytes.len() < PREAMBLE_LEN {
        return Err(WireError::Truncated {
            needed: PREAMBLE_LEN,
            got: bytes.len(),
        });
    }
    let kind = check_preamble(&bytes[..PREAMBLE_LEN])?;
    let total = PREAMBLE_LEN + payload_len(kind)?;
    if bytes.len() < total {
        return Err(WireError::Truncated {
            needed: total,
            got: bytes.len(),
        });
    }
    Ok((parse_payload(kind, &bytes[PREAMBLE_LEN..total])?, total))
}

pub fn write_frame<W: Write>(out: &mut W, frame: &Frame) -> Result<()> {
    out.write_all(&encode_frame(frame)?)?;
    Ok(())
}

fn read_full<R: Read>(input: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Reads the next frame; `None` on a clean end of input.
pub fn read_frame<R: Read>(input: &mut R) -> Result<Option<Frame>> {
    let mut pre = [0u8; PREAMBLE_LEN];
    let got = read_full(input, &mut pre)?;
    if got == 0 {
        return Ok(None);
    }
    if got < PREAMBLE_LEN {
        return Err(WireError::Truncated {
            needed: PREAMBLE_LEN,
            got,
        }
        .into());
    }
    let kind = check_preamble(&pre)?;
    let mut payload = vec![0u8; payload_len(kind)?];
    let got = read_full(input, &mut payload)?;
    if got < payload.len() {
        return Err(WireError::Truncated {
            needed: PREAMBLE_LEN + payload.len(),
            got: PREAMBLE_LEN + got,
        }
        .into());
    }
    Ok(Some(parse_payload(kind, &payload)?))
}

/// Lossy channel: scales the photon number, leaves the angle alone.
pub fn channel_apply(frame: SymbolFrame, t: f64) -> SymbolFrame {
    SymbolFrame {
        mean_photons: frame.mean_photons * t,
        ..frame
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TapMode {
    /// Eve takes all the power that would have reached Bob.
    Opaque,
    /// Eve diverts the given fraction of the power.
    Beamsplit(f64),
}

/// Splits a frame between Eve and Bob; returns `(eve, bob)`.
pub fn tap(frame: SymbolFrame, mode: TapMode) -> Result<(SymbolFrame, SymbolFrame)> {
    let eve_share = match mode {
        TapMode::Opaque => frame.mean_photons,
        TapMode::Beamsplit(f) => {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Parameter(format!("tap fraction {f} outside [0, 1]")));
            }
            frame.mean_photons * f
        }
    };
    // The larger share is taken by subtraction from the total so both
    // differences below are exact and the shares sum back bit-for-bit.
    let total = frame.mean_photons;
    let (eve_mean, bob_mean) = if eve_share <= 0.5 * total {
        let bob = total - eve_share;
        (total - bob, bob)
    } else {
        (eve_share, total - eve_share)
    };
    let eve = SymbolFrame {
        mean_photons: eve_mean,
        ..frame
    };
    let bob = SymbolFrame {
        mean_photons: bob_mean,
        ..frame
    };
    Ok((eve, bob))
}

/// Exact size of a session carrying `n` symbols.
pub fn stream_len(n: u64) -> u64 {
    (PREAMBLE_LEN + SESSION_PAYLOAD_LEN) as u64
        + n * (PREAMBLE_LEN + SYMBOL_PAYLOAD_LEN) as u64
        + PREAMBLE_LEN as u64
}

/// Alice: encodes `bits` under the running key of `key` and writes a complete
/// session. Returns the symbol plan.
pub fn transmit<W: Write>(
    out: &mut W,
    key: &SeedKey,
    bits: &[u8],
    m: u32,
    mean_photons: f64,
    transmissivity: f64,
) -> Result<Vec<SymbolPlan>> {
    crate::parties::check_mapping(m)?;
    CoherentAmplitude::from_mean_photons(mean_photons)?.with_transmissivity(transmissivity)?;
    let running = expand_running_key(key, m, bits.len())?;
    let plans = bits
        .iter()
        .zip(running.bases())
        .map(|(&b, &r)| plan_symbol(b, r, m))
        .collect::<Result<Vec<_>>>()?;
    write_frame(
        out,
        &Frame::Session(SessionHeader {
            m,
            transmissivity,
            symbol_count: bits.len() as u64,
        }),
    )?;
    for (i, plan) in plans.iter().enumerate() {
        let point = PolarizationPoint::new(plan.point, m)?;
        write_frame(
            out,
            &Frame::Symbol(SymbolFrame::for_point(i as u64, point, mean_photons)),
        )?;
    }
    write_frame(out, &Frame::EndOfStream)?;
    out.flush()?;
    Ok(plans)
}

fn expect_session<R: Read>(input: &mut R) -> Result<SessionHeader> {
    match read_frame(input)? {
        Some(Frame::Session(h)) => Ok(h),
        Some(other) => Err(WireError::Protocol(format!("expected session header, got {other:?}")).into()),
        None => Err(WireError::Protocol("empty stream".into()).into()),
    }
}

/// Channel tap: applies the session's loss, splits every symbol and writes
/// Bob's and Eve's streams. Downstream headers carry `transmissivity = 1`.
pub fn tap_stream<R: Read, B: Write, E: Write>(
    input: &mut R,
    bob_out: &mut B,
    eve_out: &mut E,
    mode: TapMode,
) -> Result<SessionHeader> {
    let header = expect_session(input)?;
    let downstream = Frame::Session(SessionHeader {
        transmissivity: 1.0,
        ..header
    });
    write_frame(bob_out, &downstream)?;
    write_frame(eve_out, &downstream)?;
    loop {
        match read_frame(input)? {
            Some(Frame::Symbol(s)) => {
                let (eve, bob) = tap(channel_apply(s, header.transmissivity), mode)?;
                write_frame(bob_out, &Frame::Symbol(bob))?;
                write_frame(eve_out, &Frame::Symbol(eve))?;
            }
            Some(Frame::EndOfStream) => break,
            Some(Frame::Session(_)) => {
                return Err(WireError::Protocol("second session header".into()).into())
            }
            None => return Err(WireError::Protocol("stream ended without end-of-stream".into()).into()),
        }
    }
    write_frame(bob_out, &Frame::EndOfStream)?;
    write_frame(eve_out, &Frame::EndOfStream)?;
    bob_out.flush()?;
    eve_out.flush()?;
    Ok(header)
}

/// Who is measuring at the end of the line.
#[derive(Clone, Debug)]
pub enum ReceiverRole {
    /// Keyed receiver: rotates the analyzer to each symbol's basis.
    Bob(SeedKey),
    /// Unkeyed receiver: fixed analyzer at 0, angle reconstruction over
    /// points `0..=M/2`.
    Eve,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReceivedSymbol {
    pub symbol_index: u64,
    pub n_h: u64,
    pub n_v: u64,
    pub vh_difference: i64,
    pub decided_bit: u8,
    pub erasure: bool,
}

/// Receiver: reads a session, applies any remaining channel loss, measures
/// each symbol with counts drawn from the `(seed, symbol_index)` substream and
/// decides its bit.
pub fn receive<R: Read>(
    input: &mut R,
    role: &ReceiverRole,
    dark_rate: f64,
    seed: u64,
) -> Result<(SessionHeader, Vec<ReceivedSymbol>)> {
    let header = expect_session(input)?;
    let m = header.m;
    crate::parties::check_mapping(m)?;
    let running = match role {
        ReceiverRole::Bob(key) => Some(expand_running_key(key, m, header.symbol_count as usize)?),
        ReceiverRole::Eve => None,
    };
    let mut out = Vec::with_capacity(header.symbol_count as usize);
    loop {
        let frame = match read_frame(input)? {
            Some(Frame::Symbol(s)) => channel_apply(s, header.transmissivity),
            Some(Frame::EndOfStream) => break,
            Some(Frame::Session(_)) => {
                return Err(WireError::Protocol("second session header".into()).into())
            }
            None => return Err(WireError::Protocol("stream ended without end-of-stream".into()).into()),
        };
        let i = frame.symbol_index;
        let amp = CoherentAmplitude::new(frame.mean_photons.sqrt(), 1.0, dark_rate)?;
        let mut rng = substream(seed, Domain::Wire, i);
        let symbol = match &running {
            Some(rk) => {
                let r = *rk.bases().get(i as usize).ok_or_else(|| {
                    WireError::Protocol(format!("symbol {i} beyond announced count"))
                })?;
                let rec = DetectionRecord::measure(frame.physical_angle(), basis_axis(r, m), &amp, i, &mut rng);
                let d = bob_decide(&rec, r, m, seed);
                ReceivedSymbol {
                    symbol_index: i,
                    n_h: rec.n_h,
                    n_v: rec.n_v,
                    vh_difference: d.vh_difference,
                    decided_bit: d.bit_estimate,
                    erasure: d.erasure,
                }
            }
            None => {
                let rec = DetectionRecord::measure(frame.physical_angle(), 0.0, &amp, i, &mut rng);
                let e = eve_opaque(&rec, m, 0..=m / 2, seed)?;
                ReceivedSymbol {
                    symbol_index: i,
                    n_h: rec.n_h,
                    n_v: rec.n_v,
                    vh_difference: rec.vh_difference(),
                    decided_bit: e.bit_guess,
                    erasure: e.point_estimate.is_none(),
                }
            }
        };
        out.push(symbol);
    }
    Ok((header, out))
}

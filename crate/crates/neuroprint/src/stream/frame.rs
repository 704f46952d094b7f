//! Wire codec. Every frame is `0xB2, version 0x01, kind, u32 LE payload
//! length, payload`. Payloads (all little-endian):
//! HELLO — u16 protocol version, u16 channel count, f32 sampling rate;
//! SAMPLE — u16 channel count, then that many f32 values;
//! DECISION — u16 class id, f32 confidence, u16 vote count, u64
//! microsecond timestamp; ERROR — UTF-8 message.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const FRAME_MAGIC: u8 = 0xB2;
pub const PROTOCOL_VERSION: u8 = 0x01;
const HEADER_LEN: usize = 7;

const KIND_HELLO: u8 = 0x01;
const KIND_SAMPLE: u8 = 0x02;
const KIND_DECISION: u8 = 0x03;
const KIND_ERROR: u8 = 0x04;

#[derive(Debug, Clone, PartialEq)]
pub enum Frame {
    Hello {
        version: u16,
        channels: u16,
        rate: f32,
    },
    Sample {
        values: Vec<f32>,
    },
    Decision {
        class: u16,
        confidence: f32,
        votes: u16,
        timestamp_us: u64,
    },
    Error {
        message: String,
    },
}

impl Frame {
    fn kind_byte(&self) -> u8 {
        match self {
            Frame::Hello { .. } => KIND_HELLO,
            Frame::Sample { .. } => KIND_SAMPLE,
            Frame::Decision { .. } => KIND_DECISION,
            Frame::Error { .. } => KIND_ERROR,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Frame::Hello { .. } => "HELLO",
            Frame::Sample { .. } => "SAMPLE",
            Frame::Decision { .. } => "DECISION",
            Frame::Error { .. } => "ERROR",
        }
    }
}

fn payload(frame: &Frame) -> Vec<u8> {
    match frame {
        Frame::Hello {
            version,
            channels,
            rate,
        } => {
            let mut p = Vec::with_capacity(8);
            p.extend_from_slice(&version.to_le_bytes());
            p.extend_from_slice(&channels.to_le_bytes());
            p.extend_from_slice(&rate.to_le_bytes());
            p
        }
        Frame::Sample { values } => {
            let mut p = Vec::with_capacity(2 + 4 * values.len());
            p.extend_from_slice(&(values.len() as u16).to_le_bytes());
            for v in values {
                p.extend_from_slice(&v.to_le_bytes());
            }
            p
        }
        Frame::Decision {
            class,
            confidence,
            votes,
            timestamp_us,
        } => {
            let mut p = Vec::with_capacity(16);
            p.extend_from_slice(&class.to_le_bytes());
            p.extend_from_slice(&confidence.to_le_bytes());
            p.extend_from_slice(&votes.to_le_bytes());
            p.extend_from_slice(&timestamp_us.to_le_bytes());
            p
        }
        Frame::Error { message } => message.as_bytes().to_vec(),
    }
}

pub fn encode_frame(frame: &Frame) -> Vec<u8> {
    let body = payload(frame);
    if let Frame::Sample { values } = frame {
        assert!(values.len() <= u16::MAX as usize, "too many channels");
    }
    let mut out = Vec::with_capacity(HEADER_LEN + body.len());
    out.push(FRAME_MAGIC);
    out.push(PROTOCOL_VERSION);
    out.push(frame.kind_byte());
    out.extend_from_slice(&(body.len() as u32).to_le_bytes());
    out.extend_from_slice(&body);
    out
}

fn le_u16(b: &[u8]) -> u16 {
    u16::from_le_bytes([b[0], b[1]])
}

fn le_f32(b: &[u8]) -> f32 {
    f32::from_le_bytes([b[0], b[1], b[2], b[3]])
}

fn decode_payload(kind: u8, p: &[u8]) -> Result<Frame> {
    let mismatch = |decoded: usize| Error::FramePayloadMismatch {
        declared: p.len(),
        decoded,
    };
    match kind {
        KIND_HELLO => {
            if p.len() != 8 {
                return Err(mismatch(8));
            }
            Ok(Frame::Hello {
                version: le_u16(&p[0..2]),
                channels: le_u16(&p[2..4]),
                rate: le_f32(&p[4..8]),
            })
        }
        KIND_SAMPLE => {
            if p.len() < 2 {
                return Err(mismatch(2));
            }
            let n = le_u16(&p[0..2]) as usize;
            if p.len() != 2 + 4 * n {
                return Err(mismatch(2 + 4 * n));
            }
            Ok(Frame::Sample {
                values: p[2..].chunks_exact(4).map(le_f32).collect(),
            })
        }
        KIND_DECISION => {
            if p.len() != 16 {
                return Err(mismatch(16));
            }
            Ok(Frame::Decision {
                class: le_u16(&p[0..2]),
                confidence: le_f32(&p[2..6]),
                votes: le_u16(&p[6..8]),
                timestamp_us: u64::from_le_bytes(p[8..16].try_into().expect("8 bytes")),
            })
        }
        KIND_ERROR => Ok(Frame::Error {
            message: String::from_utf8_lossy(p).into_owned(),
        }),
        other => Err(Error::UnknownFrameKind { kind: other }),
    }
}

/// Decodes one frame that must span the entire buffer.
pub fn decode_frame(bytes: &[u8]) -> Result<Frame> {
    if bytes.is_empty() || bytes[0] != FRAME_MAGIC {
        return Err(Error::BadFrameMagic {
            got: bytes.first().copied().unwrap_or(0),
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedPayload {
            expected: HEADER_LEN,
            got: bytes.len(),
        });
    }
    if bytes[1] != PROTOCOL_VERSION {
        return Err(Error::BadProtocolVersion { got: bytes[1] });
    }
    let declared = u32::from_le_bytes(bytes[3..7].try_into().expect("4 bytes")) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != declared {
        return Err(Error::TruncatedPayload {
            expected: HEADER_LEN + declared,
            got: bytes.len(),
        });
    }
    decode_payload(bytes[2], body)
}

/// Writes one frame and flushes.
pub fn write_frame<W: Write>(w: &mut W, frame: &Frame) -> Result<()> {
    w.write_all(&encode_frame(frame))?;
    w.flush()?;
    Ok(())
}

/// Reads one frame; `Ok(None)` on a clean end-of-stream at a frame
/// boundary. EOF inside a frame is a truncation error.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<Frame>> {
    let mut header = [0u8; HEADER_LEN];
    let mut filled = 0;
    while filled < HEADER_LEN {
        let n = r.read(&mut header[filled..])?;
        if n == 0 {
            if filled == 0 {
                return Ok(None);
            }
            return Err(Error::TruncatedPayload {
                expected: HEADER_LEN,
                got: filled,
            });
        }
        filled += n;
    }
    if header[0] != FRAME_MAGIC {
        return Err(Error::BadFrameMagic { got: header[0] });
    }
    if header[1] != PROTOCOL_VERSION {
        return Err(Error::BadProtocolVersion { got: header[1] });
    }
    let declared = u32::from_le_bytes(header[3..7].try_into().expect("4 bytes")) as usize;
    let mut body = vec![0u8; declared];
    r.read_exact(&mut body).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::TruncatedPayload {
                expected: HEADER_LEN + declared,
                got: HEADER_LEN,
            }
        } else {
            Error::Io(e)
        }
    })?;
    decode_payload(header[2], &body).map(Some)
}

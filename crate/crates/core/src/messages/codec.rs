//! Fixed-layout binary wire format.
//!
//! ```text
//! tag: u8 | version: u16 BE | fields in declaration order
//! ```
//!
//! Integers are big-endian fixed width, reals are IEEE-754 binary64 (big-endian
//! bit pattern), enumerations are one byte, lists and opaque payloads are
//! prefixed with a `u32` BE count. Negative zero is never written; decoding
//! rejects it along with every other non-canonical value so that
//! `encode(decode(b)) == b` whenever decoding succeeds.
//!
//! | message | layout after the header |
//! |---------|-------------------------|
//! | CAM  (0x01) | station_id u32, station_type u8, latitude f64, longitude f64, speed f64, heading f64, generation_tick u64 |
//! | DENM (0x02) | station_id u32, cause_code u8, latitude f64, longitude f64, action u8, sequence_number u32 |
//! | CPM  (0x03) | station_id u32, latitude f64, longitude f64, count u32, count × (x f64, y f64, speed f64, heading f64, object_type u8, confidence f64) |
//! | stubs (0x10..=0x15) | length u32, payload bytes |

use std::f64::consts::TAU;

use thiserror::Error;

use super::{
    Cam, CauseCode, Cpm, Denm, DenmAction, PerceivedObject, StationId, StationType, StubKind, V2xMessage,
};
use crate::geom::Point;

pub const SCHEMA_VERSION: u16 = 1;

const TAG_CAM: u8 = 0x01;
const TAG_DENM: u8 = 0x02;
const TAG_CPM: u8 = 0x03;
const OBJECT_LEN: usize = 4 * 8 + 1 + 8;

fn stub_tag(kind: StubKind) -> u8 {
    match kind {
        StubKind::Spatem => 0x10,
        StubKind::Mapem => 0x11,
        StubKind::Ivim => 0x12,
        StubKind::Srem => 0x13,
        StubKind::Ssem => 0x14,
        StubKind::Rum => 0x15,
    }
}

fn stub_from_tag(tag: u8) -> Option<StubKind> {
    StubKind::ALL.into_iter().find(|k| stub_tag(*k) == tag)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("unknown {what} tag {value:#04x} at byte {offset}")]
    UnknownTag {
        offset: usize,
        what: &'static str,
        value: u8,
    },
    #[error("schema version {found} at byte {offset}, expected {SCHEMA_VERSION}")]
    VersionMismatch { offset: usize, found: u16 },
    #[error("truncated at byte {offset}: need {needed} more bytes")]
    Truncated { offset: usize, needed: usize },
    #[error("invariant violated at byte {offset}: {reason}")]
    InvariantViolation { offset: usize, reason: String },
    #[error("{count} trailing bytes at byte {offset}")]
    TrailingBytes { offset: usize, count: usize },
}

impl CodecError {
    pub fn offset(&self) -> usize {
        match self {
            CodecError::UnknownTag { offset, .. }
            | CodecError::VersionMismatch { offset, .. }
            | CodecError::Truncated { offset, .. }
            | CodecError::InvariantViolation { offset, .. }
            | CodecError::TrailingBytes { offset, .. } => *offset,
        }
    }
}

fn violation(offset: usize, reason: impl Into<String>) -> CodecError {
    CodecError::InvariantViolation {
        offset,
        reason: reason.into(),
    }
}

#[derive(Clone, Copy)]
enum Real {
    Any,
    NonNegative,
    Latitude,
    Longitude,
    Heading,
    Fraction,
}

fn check_real(v: f64, rule: Real, field: &str, offset: usize) -> Result<(), CodecError> {
    if !v.is_finite() {
        return Err(violation(offset, format!("{field} is not finite")));
    }
    let ok = match rule {
        Real::Any => true,
        Real::NonNegative => v >= 0.0,
        Real::Latitude => v.abs() <= 90.0,
        Real::Longitude => v.abs() <= 180.0,
        Real::Heading => (0.0..TAU).contains(&v),
        Real::Fraction => (0.0..=1.0).contains(&v),
    };
    if ok {
        Ok(())
    } else {
        Err(violation(offset, format!("{field} out of range: {v}")))
    }
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn header(tag: u8) -> Self {
        let mut buf = Vec::with_capacity(64);
        buf.push(tag);
        buf.extend_from_slice(&SCHEMA_VERSION.to_be_bytes());
        Writer { buf }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    fn real(&mut self, v: f64, rule: Real, field: &str) -> Result<(), CodecError> {
        check_real(v, rule, field, self.buf.len())?;
        // canonical zero
        let v = if v == 0.0 { 0.0 } else { v };
        self.buf.extend_from_slice(&v.to_bits().to_be_bytes());
        Ok(())
    }

    fn len(&mut self, n: usize, field: &str) -> Result<(), CodecError> {
        let n = u32::try_from(n).map_err(|_| violation(self.buf.len(), format!("{field} too long")))?;
        self.u32(n);
        Ok(())
    }
}

/// Serializes a message, validating its field invariants first.
pub fn encode(msg: &V2xMessage) -> Result<Vec<u8>, CodecError> {
    let w = match msg {
        V2xMessage::Cam(cam) => {
            let mut w = Writer::header(TAG_CAM);
            w.u32(cam.station_id.0);
            w.u8(cam.station_type.code());
            w.real(cam.latitude, Real::Latitude, "latitude")?;
            w.real(cam.longitude, Real::Longitude, "longitude")?;
            w.real(cam.speed, Real::NonNegative, "speed")?;
            w.real(cam.heading, Real::Heading, "heading")?;
            w.u64(cam.generation_tick);
            w
        }
        V2xMessage::Denm(denm) => {
            let mut w = Writer::header(TAG_DENM);
            w.u32(denm.station_id.0);
            w.u8(denm.cause_code.code());
            w.real(denm.event_latitude, Real::Latitude, "event latitude")?;
            w.real(denm.event_longitude, Real::Longitude, "event longitude")?;
            w.u8(match denm.action {
                DenmAction::New => 0,
                DenmAction::Terminate => 1,
            });
            w.u32(denm.sequence_number);
            w
        }
        V2xMessage::Cpm(cpm) => {
            let mut w = Writer::header(TAG_CPM);
            w.u32(cpm.station_id.0);
            w.real(cpm.origin_latitude, Real::Latitude, "origin latitude")?;
            w.real(cpm.origin_longitude, Real::Longitude, "origin longitude")?;
            w.len(cpm.objects.len(), "object list")?;
            for o in &cpm.objects {
                w.real(o.rel_position.x, Real::Any, "object x")?;
                w.real(o.rel_position.y, Real::Any, "object y")?;
                w.real(o.speed, Real::NonNegative, "object speed")?;
                w.real(o.heading, Real::Heading, "object heading")?;
                w.u8(o.object_type.code());
                w.real(o.confidence, Real::Fraction, "object confidence")?;
            }
            w
        }
        V2xMessage::Stub { kind, payload } => {
            let mut w = Writer::header(stub_tag(*kind));
            w.len(payload.len(), "payload")?;
            w.buf.extend_from_slice(payload);
            w
        }
    };
    Ok(w.buf)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let rest = self.buf.len() - self.pos;
        if rest < n {
            return Err(CodecError::Truncated {
                offset: self.pos,
                needed: n - rest,
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from_be_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    fn real(&mut self, rule: Real, field: &str) -> Result<f64, CodecError> {
        let at = self.pos;
        let bits = u64::from_be_bytes(self.array()?);
        let v = f64::from_bits(bits);
        check_real(v, rule, field, at)?;
        if bits == (-0.0f64).to_bits() {
            return Err(violation(at, format!("{field} is negative zero")));
        }
        Ok(v)
    }

    fn station_type(&mut self) -> Result<StationType, CodecError> {
        let at = self.pos;
        let code = self.u8()?;
        StationType::from_code(code).ok_or(CodecError::UnknownTag {
            offset: at,
            what: "station type",
            value: code,
        })
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

/// Parses one message. The input must contain exactly one message.
pub fn decode(bytes: &[u8]) -> Result<V2xMessage, CodecError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let tag = r.u8()?;
    if !matches!(tag, TAG_CAM | TAG_DENM | TAG_CPM) && stub_from_tag(tag).is_none() {
        return Err(CodecError::UnknownTag {
            offset: 0,
            what: "message",
            value: tag,
        });
    }
    let version = r.u16()?;
    if version != SCHEMA_VERSION {
        return Err(CodecError::VersionMismatch {
            offset: 1,
            found: version,
        });
    }
    let msg = match tag {
        TAG_CAM => V2xMessage::Cam(Cam {
            station_id: StationId(r.u32()?),
            station_type: r.station_type()?,
            latitude: r.real(Real::Latitude, "latitude")?,
            longitude: r.real(Real::Longitude, "longitude")?,
            speed: r.real(Real::NonNegative, "speed")?,
            heading: r.real(Real::Heading, "heading")?,
            generation_tick: r.u64()?,
        }),
        TAG_DENM => {
            let station_id = StationId(r.u32()?);
            let at = r.pos;
            let code = r.u8()?;
            let cause_code = CauseCode::from_code(code).ok_or(CodecError::UnknownTag {
                offset: at,
                what: "cause code",
                value: code,
            })?;
            let event_latitude = r.real(Real::Latitude, "event latitude")?;
            let event_longitude = r.real(Real::Longitude, "event longitude")?;
            let at = r.pos;
            let action = match r.u8()? {
                0 => DenmAction::New,
                1 => DenmAction::Terminate,
                value => {
                    return Err(CodecError::UnknownTag {
                        offset: at,
                        what: "DENM action",
                        value,
                    })
                }
            };
            V2xMessage::Denm(Denm {
                station_id,
                cause_code,
                event_latitude,
                event_longitude,
                action,
                sequence_number: r.u32()?,
            })
        }
        TAG_CPM => {
            let station_id = StationId(r.u32()?);
            let origin_latitude = r.real(Real::Latitude, "origin latitude")?;
            let origin_longitude = r.real(Real::Longitude, "origin longitude")?;
            let count = r.u32()? as usize;
            let mut objects = Vec::with_capacity(count.min(r.remaining() / OBJECT_LEN));
            for _ in 0..count {
                let x = r.real(Real::Any, "object x")?;
                let y = r.real(Real::Any, "object y")?;
                objects.push(PerceivedObject {
                    rel_position: Point::new(x, y),
                    speed: r.real(Real::NonNegative, "object speed")?,
                    heading: r.real(Real::Heading, "object heading")?,
                    object_type: r.station_type()?,
                    confidence: r.real(Real::Fraction, "object confidence")?,
                });
            }
            V2xMessage::Cpm(Cpm {
                station_id,
                origin_latitude,
                origin_longitude,
                objects,
            })
        }
        _ => {
            let kind = stub_from_tag(tag).expect("tag checked above");
            let len = r.u32()? as usize;
            let payload = r.take(len)?.to_vec();
            V2xMessage::Stub { kind, payload }
        }
    };
    if r.remaining() > 0 {
        return Err(CodecError::TrailingBytes {
            offset: r.pos,
            count: r.remaining(),
        });
    }
    Ok(msg)
}

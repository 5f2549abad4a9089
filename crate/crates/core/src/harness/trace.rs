//! Trace events and their line-delimited JSON encoding.
//!
//! One event per line, fields always in the same order:
//!
//! ```text
//! {"tick":12,"kind":"MsgSent","payload":{"sender":1,"message":"Denm","bytes":"0200..."}}
//! ```

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{PedestrianMode, Phase, RobotAction};
use crate::geom::Point;
use crate::hazard::HazardDecision;
use crate::messages::{MessageKind, StationId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSample {
    pub id: StationId,
    pub position: Point,
    pub speed: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedestrianSample {
    pub id: u32,
    pub position: Point,
    pub mode: PedestrianMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    /// Pedestrian and vehicle inside the zone closer than the conflict distance.
    Conflict,
    /// Pedestrian stepped into the zone while the robot was signalling stop.
    EnteredAgainstStop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum Event {
    PhaseChange {
        from: Phase,
        to: Phase,
        decision: HazardDecision,
    },
    Action {
        action: RobotAction,
    },
    MsgSent {
        sender: StationId,
        message: MessageKind,
        bytes: String,
    },
    MsgDelivered {
        sender: StationId,
        receiver: StationId,
        message: MessageKind,
        bytes: String,
    },
    MsgDropped {
        sender: StationId,
        receiver: StationId,
        message: MessageKind,
    },
    DisplayChange {
        station: StationId,
        text: Option<String>,
    },
    PositionSample {
        robot: Point,
        vehicles: Vec<VehicleSample>,
        pedestrians: Vec<PedestrianSample>,
    },
    Violation {
        reason: ViolationKind,
        pedestrian: u32,
        vehicle: Option<StationId>,
        distance: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub tick: u64,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace I/O: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Format {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: tick {tick} precedes tick {previous}")]
    Order { line: usize, tick: u64, previous: u64 },
}

pub fn write_trace<W: Write>(mut out: W, events: &[TraceEvent]) -> io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Reads a trace, checking that ticks never decrease.
pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<TraceEvent>, TraceError> {
    let mut events = Vec::new();
    let mut previous = 0;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ev: TraceEvent =
            serde_json::from_str(&line).map_err(|source| TraceError::Format { line: i + 1, source })?;
        if ev.tick < previous {
            return Err(TraceError::Order {
                line: i + 1,
                tick: ev.tick,
                previous,
            });
        }
        previous = ev.tick;
        events.push(ev);
    }
    Ok(events)
}

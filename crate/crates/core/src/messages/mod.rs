//! V2X message vocabulary exchanged between the robot, vehicles and roadside units.
//!
//! Only CAM, DENM and CPM carry semantics here. The remaining ITS message
//! families are declared so that they can be carried and logged, but their
//! payloads stay opaque.

mod codec;
mod fusion;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geom::Point;

pub use codec::{decode, encode, CodecError, SCHEMA_VERSION};
pub use fusion::{fuse_perception, MERGE_RADIUS_M};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StationId(pub u32);

impl fmt::Display for StationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Station categories. Wire codes follow the ITS station type numbering where
/// one exists; `Robot` uses a private code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StationType {
    Pedestrian,
    Cyclist,
    Moped,
    PassengerCar,
    Bus,
    RoadSideUnit,
    Robot,
}

impl StationType {
    pub const ALL: [StationType; 7] = [
        StationType::Pedestrian,
        StationType::Cyclist,
        StationType::Moped,
        StationType::PassengerCar,
        StationType::Bus,
        StationType::RoadSideUnit,
        StationType::Robot,
    ];

    pub fn code(self) -> u8 {
        match self {
            StationType::Pedestrian => 1,
            StationType::Cyclist => 2,
            StationType::Moped => 3,
            StationType::PassengerCar => 5,
            StationType::Bus => 6,
            StationType::RoadSideUnit => 15,
            StationType::Robot => 254,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        StationType::ALL.into_iter().find(|t| t.code() == code)
    }

    pub fn is_vehicle(self) -> bool {
        matches!(
            self,
            StationType::Cyclist | StationType::Moped | StationType::PassengerCar | StationType::Bus
        )
    }
}

/// Cooperative awareness message: periodic position/speed/heading beacon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cam {
    pub station_id: StationId,
    pub station_type: StationType,
    pub latitude: f64,
    pub longitude: f64,
    /// m/s
    pub speed: f64,
    /// radians, `[0, 2π)`
    pub heading: f64,
    pub generation_tick: u64,
}

/// DENM cause codes (ITS numbering).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CauseCode {
    TrafficCondition,
    Accident,
    Roadworks,
    HazardousLocationObstacleOnTheRoad,
    HumanPresenceOnTheRoad,
    StationaryVehicle,
    CollisionRisk,
    DangerousSituation,
}

impl CauseCode {
    pub const ALL: [CauseCode; 8] = [
        CauseCode::TrafficCondition,
        CauseCode::Accident,
        CauseCode::Roadworks,
        CauseCode::HazardousLocationObstacleOnTheRoad,
        CauseCode::HumanPresenceOnTheRoad,
        CauseCode::StationaryVehicle,
        CauseCode::CollisionRisk,
        CauseCode::DangerousSituation,
    ];

    pub fn code(self) -> u8 {
        match self {
            CauseCode::TrafficCondition => 1,
            CauseCode::Accident => 2,
            CauseCode::Roadworks => 3,
            CauseCode::HazardousLocationObstacleOnTheRoad => 10,
            CauseCode::HumanPresenceOnTheRoad => 12,
            CauseCode::StationaryVehicle => 94,
            CauseCode::CollisionRisk => 97,
            CauseCode::DangerousSituation => 99,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        CauseCode::ALL.into_iter().find(|c| c.code() == code)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DenmAction {
    New,
    Terminate,
}

/// Decentralized environmental notification: an event-triggered warning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Denm {
    pub station_id: StationId,
    pub cause_code: CauseCode,
    pub event_latitude: f64,
    pub event_longitude: f64,
    pub action: DenmAction,
    pub sequence_number: u32,
}

/// An object seen by some station's sensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceivedObject {
    /// Offset from the reporting station (or from the frame origin after fusion).
    pub rel_position: Point,
    pub speed: f64,
    pub heading: f64,
    pub object_type: StationType,
    pub confidence: f64,
}

/// Collective perception message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpm {
    pub station_id: StationId,
    pub origin_latitude: f64,
    pub origin_longitude: f64,
    pub objects: Vec<PerceivedObject>,
}

/// Message families without modelled semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StubKind {
    Spatem,
    Mapem,
    Ivim,
    Srem,
    Ssem,
    /// Robotic unit message; content not yet defined.
    Rum,
}

impl StubKind {
    pub const ALL: [StubKind; 6] = [
        StubKind::Spatem,
        StubKind::Mapem,
        StubKind::Ivim,
        StubKind::Srem,
        StubKind::Ssem,
        StubKind::Rum,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum V2xMessage {
    Cam(Cam),
    Denm(Denm),
    Cpm(Cpm),
    Stub { kind: StubKind, payload: Vec<u8> },
}

/// Short label used in traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MessageKind {
    Cam,
    Denm,
    Cpm,
    Spatem,
    Mapem,
    Ivim,
    Srem,
    Ssem,
    Rum,
}

impl V2xMessage {
    pub fn kind(&self) -> MessageKind {
        match self {
            V2xMessage::Cam(_) => MessageKind::Cam,
            V2xMessage::Denm(_) => MessageKind::Denm,
            V2xMessage::Cpm(_) => MessageKind::Cpm,
            V2xMessage::Stub { kind, .. } => match kind {
                StubKind::Spatem => MessageKind::Spatem,
                StubKind::Mapem => MessageKind::Mapem,
                StubKind::Ivim => MessageKind::Ivim,
                StubKind::Srem => MessageKind::Srem,
                StubKind::Ssem => MessageKind::Ssem,
                StubKind::Rum => MessageKind::Rum,
            },
        }
    }

    /// Originating station, if the message format carries one.
    pub fn station_id(&self) -> Option<StationId> {
        match self {
            V2xMessage::Cam(c) => Some(c.station_id),
            V2xMessage::Denm(d) => Some(d.station_id),
            V2xMessage::Cpm(c) => Some(c.station_id),
            V2xMessage::Stub { .. } => None,
        }
    }
}

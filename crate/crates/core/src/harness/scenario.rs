//! Scenario files (TOML) and their validation.
//!
//! ```toml
//! name = "example"
//! seed = 7
//! tick_duration = 0.1          # seconds, optional
//! duration_ticks = 600
//!
//! [geo_ref]
//! lat = 49.0
//! lon = 8.4
//!
//! [robot]
//! station_id = 1
//! position = [0.0, 0.0]
//! zod = { ll = 30.0, rl = 30.0, uw = 0.0, lw = 30.0 }
//! threshold = 5.0              # optional
//! sensor_range = 100.0         # optional
//! # [robot.timers] patience_ticks, crossing_timeout_ticks, cam_interval_ticks,
//! #                denm_repeat_ticks, staleness_ticks (all optional)
//!
//! [channel]                    # optional, every field optional
//! range = 400.0
//! loss_probability = 0.0
//! latency_ticks = 1
//! jitter_ticks = 0
//!
//! [[vehicles]]
//! station_id = 10
//! station_type = "Cyclist"     # optional
//! position = [-50.0, -15.0]
//! speed = 5.0
//! heading = 0.0                # radians, 0 = east
//! speed_changes = [{ tick = 100, speed = 3.0 }]   # optional
//!
//! [[pedestrians]]
//! id = 1
//! spawn_tick = 0
//! position = [0.0, 3.0]
//! speed = 1.4                  # optional
//! faces_robot = true           # optional
//! compliant = true             # optional
//! delay_ticks = 0              # optional
//!
//! [[roadside_units]]           # optional CPM senders
//! station_id = 50
//! position = [0.0, 10.0]
//! sensor_range = 80.0
//! cpm_interval_ticks = 10
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::agents::{EbikeScript, PedestrianScript, RobotConfig, RobotTimers, SpeedChange};
use crate::geom::{GeoRef, KinematicState, Point};
use crate::hazard::{Zod, DEFAULT_THRESHOLD_S};
use crate::messages::{StationId, StationType};
use crate::netsim::{ChannelConfig, DEFAULT_RANGE_M};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line} ({field}): {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadsideUnit {
    pub station_id: StationId,
    pub position: Point,
    pub sensor_range: f64,
    pub cpm_interval_ticks: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub geo_ref: GeoRef,
    pub tick_duration: f64,
    pub duration_ticks: u64,
    pub robot: RobotConfig,
    pub channel: ChannelConfig,
    pub vehicles: Vec<EbikeScript>,
    pub pedestrians: Vec<PedestrianScript>,
    pub roadside_units: Vec<RoadsideUnit>,
}

impl Scenario {
    /// Same scenario under another seed; the channel follows the scenario seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.channel.seed = seed;
        self
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_tick")]
    tick_duration: f64,
    duration_ticks: u64,
    geo_ref: RawGeoRef,
    robot: RawRobot,
    #[serde(default)]
    channel: RawChannel,
    #[serde(default)]
    vehicles: Vec<RawVehicle>,
    #[serde(default)]
    pedestrians: Vec<RawPedestrian>,
    #[serde(default)]
    roadside_units: Vec<RawRsu>,
}

fn default_tick() -> f64 {
    0.1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeoRef {
    lat: f64,
    lon: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawZod {
    ll: f64,
    rl: f64,
    uw: f64,
    lw: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRobot {
    station_id: u32,
    position: [f64; 2],
    zod: RawZod,
    #[serde(default = "default_threshold")]
    threshold: f64,
    #[serde(default = "default_sensor_range")]
    sensor_range: f64,
    #[serde(default)]
    timers: RobotTimers,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD_S
}

fn default_sensor_range() -> f64 {
    100.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawChannel {
    range: f64,
    loss_probability: f64,
    latency_ticks: u64,
    jitter_ticks: u64,
}

impl Default for RawChannel {
    fn default() -> Self {
        RawChannel {
            range: DEFAULT_RANGE_M,
            loss_probability: 0.0,
            latency_ticks: 1,
            jitter_ticks: 0,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVehicle {
    station_id: u32,
    #[serde(default = "default_vehicle_type")]
    station_type: StationType,
    position: [f64; 2],
    speed: f64,
    heading: f64,
    #[serde(default)]
    speed_changes: Vec<SpeedChange>,
    #[serde(default = "default_cam_interval")]
    cam_interval_ticks: u64,
}

fn default_vehicle_type() -> StationType {
    StationType::Cyclist
}

fn default_cam_interval() -> u64 {
    10
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPedestrian {
    id: u32,
    #[serde(default)]
    spawn_tick: u64,
    position: [f64; 2],
    #[serde(default = "default_walk_speed")]
    speed: f64,
    #[serde(default = "yes")]
    faces_robot: bool,
    #[serde(default = "yes")]
    compliant: bool,
    #[serde(default)]
    delay_ticks: u64,
}

fn default_walk_speed() -> f64 {
    1.4
}

fn yes() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRsu {
    station_id: u32,
    position: [f64; 2],
    sensor_range: f64,
    #[serde(default = "default_cam_interval")]
    cpm_interval_ticks: u64,
}

fn point(field: &str, p: [f64; 2]) -> Result<Point, ScenarioError> {
    let p = Point::new(p[0], p[1]);
    if !p.is_finite() {
        return Err(invalid(field, "coordinates must be finite"));
    }
    Ok(p)
}

fn positive(field: &str, v: f64) -> Result<f64, ScenarioError> {
    if !(v.is_finite() && v > 0.0) {
        return Err(invalid(field, format!("must be positive, got {v}")));
    }
    Ok(v)
}

fn non_negative(field: &str, v: f64) -> Result<f64, ScenarioError> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(invalid(field, format!("must be non-negative, got {v}")));
    }
    Ok(v)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates scenario text.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ScenarioError::Parse {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        field: String::from("<syntax>"),
        message: e.message().to_owned(),
    })?;
    let raw: RawScenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        ScenarioError::Parse {
            line: inner.span().map_or(1, |s| line_of(text, s.start)),
            field,
            message: inner.message().to_owned(),
        }
    })?;
    validate(raw)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_scenario(&text)
}

fn validate(raw: RawScenario) -> Result<Scenario, ScenarioError> {
    if raw.name.trim().is_empty() {
        return Err(invalid("name", "must not be empty"));
    }
    let tick_duration = positive("tick_duration", raw.tick_duration)?;
    if raw.duration_ticks == 0 {
        return Err(invalid("duration_ticks", "must be greater than zero"));
    }
    let geo_ref =
        GeoRef::new(raw.geo_ref.lat, raw.geo_ref.lon).map_err(|e| invalid("geo_ref", e.to_string()))?;

    let r = raw.robot;
    let anchor = point("robot.position", r.position)?;
    let zod = Zod::new(anchor, r.zod.ll, r.zod.rl, r.zod.uw, r.zod.lw)
        .map_err(|e| invalid("robot.zod", e.to_string()))?;
    let robot = RobotConfig {
        station_id: StationId(r.station_id),
        zod,
        threshold: positive("robot.threshold", r.threshold)?,
        sensor_range: non_negative("robot.sensor_range", r.sensor_range)?,
        timers: r.timers,
    };
    if robot.timers.cam_interval_ticks == 0 {
        return Err(invalid(
            "robot.timers.cam_interval_ticks",
            "must be greater than zero",
        ));
    }

    let channel = ChannelConfig {
        range: raw.channel.range,
        loss_probability: raw.channel.loss_probability,
        latency_ticks: raw.channel.latency_ticks,
        jitter_ticks: raw.channel.jitter_ticks,
        seed: raw.seed,
    };
    channel
        .validate()
        .map_err(|e| invalid("channel", e.to_string()))?;

    let mut stations = BTreeSet::from([r.station_id]);
    let mut claim = |id: u32, field: String| {
        if stations.insert(id) {
            Ok(())
        } else {
            Err(invalid(field, format!("duplicate station id {id}")))
        }
    };

    let mut vehicles = Vec::with_capacity(raw.vehicles.len());
    for (i, v) in raw.vehicles.into_iter().enumerate() {
        let field = |name: &str| format!("vehicles[{i}].{name}");
        claim(v.station_id, field("station_id"))?;
        if !v.station_type.is_vehicle() {
            return Err(invalid(
                field("station_type"),
                format!("{:?} is not a vehicle", v.station_type),
            ));
        }
        let pos = point(&field("position"), v.position)?;
        let s = non_negative(&field("speed"), v.speed)?;
        if !v.heading.is_finite() {
            return Err(invalid(field("heading"), "must be finite"));
        }
        for (j, c) in v.speed_changes.iter().enumerate() {
            non_negative(&field(&format!("speed_changes[{j}].speed")), c.speed)?;
        }
        if v.cam_interval_ticks == 0 {
            return Err(invalid(field("cam_interval_ticks"), "must be greater than zero"));
        }
        vehicles.push(EbikeScript {
            station_id: StationId(v.station_id),
            station_type: v.station_type,
            initial: KinematicState::new(pos, s, v.heading)
                .map_err(|e| invalid(field("speed"), e.to_string()))?,
            speed_changes: v.speed_changes,
            cam_interval_ticks: v.cam_interval_ticks,
        });
    }

    let mut roadside_units = Vec::with_capacity(raw.roadside_units.len());
    for (i, u) in raw.roadside_units.into_iter().enumerate() {
        let field = |name: &str| format!("roadside_units[{i}].{name}");
        claim(u.station_id, field("station_id"))?;
        if u.cpm_interval_ticks == 0 {
            return Err(invalid(field("cpm_interval_ticks"), "must be greater than zero"));
        }
        roadside_units.push(RoadsideUnit {
            station_id: StationId(u.station_id),
            position: point(&field("position"), u.position)?,
            sensor_range: non_negative(&field("sensor_range"), u.sensor_range)?,
            cpm_interval_ticks: u.cpm_interval_ticks,
        });
    }

    let mut ped_ids = BTreeSet::new();
    let mut pedestrians = Vec::with_capacity(raw.pedestrians.len());
    for (i, p) in raw.pedestrians.into_iter().enumerate() {
        let field = |name: &str| format!("pedestrians[{i}].{name}");
        if !ped_ids.insert(p.id) {
            return Err(invalid(field("id"), format!("duplicate pedestrian id {}", p.id)));
        }
        pedestrians.push(PedestrianScript {
            id: p.id,
            spawn_tick: p.spawn_tick,
            spawn_position: point(&field("position"), p.position)?,
            speed: non_negative(&field("speed"), p.speed)?,
            faces_robot: p.faces_robot,
            compliant: p.compliant,
            delay_ticks: p.delay_ticks,
        });
    }
    vehicles.sort_by_key(|v| v.station_id);
    pedestrians.sort_by_key(|p| p.id);
    roadside_units.sort_by_key(|u| u.station_id);

    Ok(Scenario {
        name: raw.name,
        seed: raw.seed,
        geo_ref,
        tick_duration,
        duration_ticks: raw.duration_ticks,
        robot,
        channel,
        vehicles,
        pedestrians,
        roadside_units,
    })
}

//! Planar geometry, kinematics and the simulation time base.
//!
//! Everything runs in a flat local frame measured in meters: `x` grows east,
//! `y` grows north. Headings use the mathematical convention (0 = east,
//! counterclockwise, radians).

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius used by the equirectangular projection.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("non-finite value for {0}")]
    NonFinite(&'static str),
    #[error("negative speed {0}")]
    NegativeSpeed(f64),
    #[error("latitude {0} outside [-90, 90]")]
    LatitudeOutOfRange(f64),
    #[error("longitude {0} outside [-180, 180]")]
    LongitudeOutOfRange(f64),
    #[error("tick duration must be positive, got {0}")]
    BadTickDuration(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn offset(&self, dx: f64, dy: f64) -> Point {
        Point::new(self.x + dx, self.y + dy)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.3}, {:.3})", self.x, self.y)
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_heading(h: f64) -> f64 {
    let r = h.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU || r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Position, speed and heading of a road user moving in a straight line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicState {
    pub pos: Point,
    speed: f64,
    heading: f64,
}

impl KinematicState {
    /// Builds a state, normalizing the heading into `[0, 2π)`.
    pub fn new(pos: Point, speed: f64, heading: f64) -> Result<Self, GeomError> {
        if !pos.is_finite() {
            return Err(GeomError::NonFinite("position"));
        }
        if !speed.is_finite() {
            return Err(GeomError::NonFinite("speed"));
        }
        if !heading.is_finite() {
            return Err(GeomError::NonFinite("heading"));
        }
        if speed < 0.0 {
            return Err(GeomError::NegativeSpeed(speed));
        }
        Ok(KinematicState {
            pos,
            speed: speed + 0.0,
            heading: normalize_heading(heading),
        })
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    /// Velocity components `(vx, vy)` in m/s.
    pub fn velocity(&self) -> (f64, f64) {
        (self.speed * self.heading.cos(), self.speed * self.heading.sin())
    }

    pub fn with_speed(self, speed: f64) -> Result<Self, GeomError> {
        KinematicState::new(self.pos, speed, self.heading)
    }

    /// State after travelling `t` seconds at constant velocity.
    pub fn advanced(&self, t: f64) -> KinematicState {
        KinematicState {
            pos: predict_position(self, t),
            ..*self
        }
    }
}

/// Constant-velocity extrapolation: `x0 + s·t·cos h`, `y0 + s·t·sin h`.
///
/// Negative `t` looks into the past.
pub fn predict_position(state: &KinematicState, t: f64) -> Point {
    let (vx, vy) = state.velocity();
    Point::new(state.pos.x + vx * t, state.pos.y + vy * t)
}

/// Discrete simulation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimClock {
    tick: u64,
    tick_duration: f64,
}

impl SimClock {
    pub const DEFAULT_TICK: f64 = 0.1;

    pub fn new(tick_duration: f64) -> Result<Self, GeomError> {
        if !(tick_duration.is_finite() && tick_duration > 0.0) {
            return Err(GeomError::BadTickDuration(tick_duration));
        }
        Ok(SimClock {
            tick: 0,
            tick_duration,
        })
    }

    pub fn at(tick: u64, tick_duration: f64) -> Result<Self, GeomError> {
        let mut c = SimClock::new(tick_duration)?;
        c.tick = tick;
        Ok(c)
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn tick_duration(&self) -> f64 {
        self.tick_duration
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.tick_duration
    }

    /// Seconds elapsed between `earlier` and the current tick.
    pub fn seconds_since(&self, earlier: u64) -> f64 {
        (self.tick as f64 - earlier as f64) * self.tick_duration
    }

    pub fn advance(&mut self) {
        self.tick += 1;
    }
}

impl Default for SimClock {
    fn default() -> Self {
        SimClock {
            tick: 0,
            tick_duration: Self::DEFAULT_TICK,
        }
    }
}

/// WGS84 anchor of the local frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoRef {
    origin_lat: f64,
    origin_lon: f64,
}

fn check_lat_lon(lat: f64, lon: f64) -> Result<(), GeomError> {
    if !(lat.is_finite() && lat.abs() <= 90.0) {
        return Err(GeomError::LatitudeOutOfRange(lat));
    }
    if !(lon.is_finite() && lon.abs() <= 180.0) {
        return Err(GeomError::LongitudeOutOfRange(lon));
    }
    Ok(())
}

impl GeoRef {
    pub fn new(origin_lat: f64, origin_lon: f64) -> Result<Self, GeomError> {
        check_lat_lon(origin_lat, origin_lon)?;
        Ok(GeoRef {
            origin_lat,
            origin_lon,
        })
    }

    pub fn lat(&self) -> f64 {
        self.origin_lat
    }

    pub fn lon(&self) -> f64 {
        self.origin_lon
    }

    /// Equirectangular projection of `(lat, lon)` into the local frame.
    pub fn to_local(&self, lat: f64, lon: f64) -> Result<Point, GeomError> {
        check_lat_lon(lat, lon)?;
        let cos_ref = self.origin_lat.to_radians().cos();
        let x = EARTH_RADIUS_M * (lon - self.origin_lon).to_radians() * cos_ref;
        let y = EARTH_RADIUS_M * (lat - self.origin_lat).to_radians();
        Ok(Point::new(x, y))
    }

    /// Inverse of [`GeoRef::to_local`]. Returns `(lat, lon)` in degrees.
    pub fn to_geo(&self, p: Point) -> (f64, f64) {
        let cos_ref = self.origin_lat.to_radians().cos();
        let lat = self.origin_lat + (p.y / EARTH_RADIUS_M).to_degrees();
        let lon = self.origin_lon + (p.x / (EARTH_RADIUS_M * cos_ref)).to_degrees();
        (lat, lon)
    }
}

pub fn geo_to_local(geo_ref: &GeoRef, lat: f64, lon: f64) -> Result<Point, GeomError> {
    geo_ref.to_local(lat, lon)
}

pub fn local_to_geo(geo_ref: &GeoRef, p: Point) -> (f64, f64) {
    geo_ref.to_geo(p)
}

//! Zone-of-danger geometry and vehicle incursion prediction.
//!
//! The zone is an axis-aligned rectangle hung off the robot's position. A
//! vehicle's straight-line trajectory is intersected with it using the slab
//! method, which yields the exact window of time during which the vehicle is
//! inside the zone.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{KinematicState, Point};

/// Default entry-time threshold below which a vehicle counts as imminent.
pub const DEFAULT_THRESHOLD_S: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZodError {
    #[error("zone extent {0} must be finite and non-negative")]
    BadExtent(&'static str),
    #[error("zone has zero {0}")]
    Degenerate(&'static str),
    #[error("zone anchor is not finite")]
    BadAnchor,
}

/// Zone of danger: `anchor.x - ll ≤ x ≤ anchor.x + rl`, `anchor.y - lw ≤ y ≤ anchor.y + uw`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zod {
    anchor: Point,
    ll: f64,
    rl: f64,
    uw: f64,
    lw: f64,
}

impl Zod {
    pub fn new(anchor: Point, ll: f64, rl: f64, uw: f64, lw: f64) -> Result<Self, ZodError> {
        if !anchor.is_finite() {
            return Err(ZodError::BadAnchor);
        }
        for (name, v) in [("ll", ll), ("rl", rl), ("uw", uw), ("lw", lw)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ZodError::BadExtent(name));
            }
        }
        if ll + rl <= 0.0 {
            return Err(ZodError::Degenerate("length"));
        }
        if uw + lw <= 0.0 {
            return Err(ZodError::Degenerate("width"));
        }
        Ok(Zod {
            anchor,
            ll,
            rl,
            uw,
            lw,
        })
    }

    pub fn anchor(&self) -> Point {
        self.anchor
    }

    /// `(ll, rl, uw, lw)`
    pub fn extents(&self) -> (f64, f64, f64, f64) {
        (self.ll, self.rl, self.uw, self.lw)
    }

    pub fn min_x(&self) -> f64 {
        self.anchor.x - self.ll
    }

    pub fn max_x(&self) -> f64 {
        self.anchor.x + self.rl
    }

    pub fn min_y(&self) -> f64 {
        self.anchor.y - self.lw
    }

    pub fn max_y(&self) -> f64 {
        self.anchor.y + self.uw
    }

    pub fn with_anchor(self, anchor: Point) -> Self {
        Zod { anchor, ..self }
    }

    /// Boundary-inclusive membership test.
    pub fn contains(&self, p: Point) -> bool {
        self.min_x() <= p.x && p.x <= self.max_x() && self.min_y() <= p.y && p.y <= self.max_y()
    }
}

pub fn contains(zod: &Zod, p: Point) -> bool {
    zod.contains(p)
}

/// Times (relative to now) during which a trajectory is inside the zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum TimeInterval {
    Empty,
    /// `entry` may be negative when the vehicle is already inside.
    Bounded {
        entry: f64,
        exit: f64,
    },
    /// Stationary inside the zone.
    AlwaysInside,
}

impl TimeInterval {
    pub fn is_empty(&self) -> bool {
        matches!(self, TimeInterval::Empty)
    }

    /// Whether the trajectory is inside the zone at relative time `t`.
    pub fn covers(&self, t: f64) -> bool {
        match *self {
            TimeInterval::Empty => false,
            TimeInterval::Bounded { entry, exit } => entry <= t && t <= exit,
            TimeInterval::AlwaysInside => true,
        }
    }
}

// Time window an axis coordinate spends within [lo, hi]; None if never.
fn axis_window(pos: f64, vel: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    if vel == 0.0 {
        if lo <= pos && pos <= hi {
            Some((f64::NEG_INFINITY, f64::INFINITY))
        } else {
            None
        }
    } else {
        let a = (lo - pos) / vel;
        let b = (hi - pos) / vel;
        Some((a.min(b), a.max(b)))
    }
}

/// Exact incursion window of a constant-velocity trajectory into `zod`.
///
/// Windows that closed in the past (exit < 0) are reported as empty.
pub fn incursion_interval(zod: &Zod, state: &KinematicState) -> TimeInterval {
    let (vx, vy) = state.velocity();
    let Some((ex, xx)) = axis_window(state.pos.x, vx, zod.min_x(), zod.max_x()) else {
        return TimeInterval::Empty;
    };
    let Some((ey, xy)) = axis_window(state.pos.y, vy, zod.min_y(), zod.max_y()) else {
        return TimeInterval::Empty;
    };
    let entry = ex.max(ey);
    let exit = xx.min(xy);
    if entry > exit {
        return TimeInterval::Empty;
    }
    if entry == f64::NEG_INFINITY && exit == f64::INFINITY {
        return TimeInterval::AlwaysInside;
    }
    if exit < 0.0 {
        return TimeInterval::Empty;
    }
    TimeInterval::Bounded { entry, exit }
}

/// Severity ordering: `Safe < Imminent < Active`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HazardTag {
    Safe,
    Imminent,
    Active,
}

impl HazardTag {
    pub fn is_hazard(self) -> bool {
        self != HazardTag::Safe
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HazardDecision {
    pub tag: HazardTag,
    pub interval: TimeInterval,
}

impl HazardDecision {
    pub const SAFE: HazardDecision = HazardDecision {
        tag: HazardTag::Safe,
        interval: TimeInterval::Empty,
    };
}

pub fn classify(interval: TimeInterval, threshold: f64) -> HazardDecision {
    debug_assert!(threshold > 0.0, "threshold must be positive");
    let tag = match interval {
        TimeInterval::Empty => HazardTag::Safe,
        TimeInterval::AlwaysInside => HazardTag::Active,
        TimeInterval::Bounded { entry, exit } => {
            if entry <= 0.0 && 0.0 <= exit {
                HazardTag::Active
            } else if entry > 0.0 && entry < threshold {
                HazardTag::Imminent
            } else {
                HazardTag::Safe
            }
        }
    };
    HazardDecision { tag, interval }
}

/// The most severe of several decisions; the earliest wins among equals.
pub fn worst<I: IntoIterator<Item = HazardDecision>>(decisions: I) -> HazardDecision {
    decisions.into_iter().fold(
        HazardDecision::SAFE,
        |acc, d| if d.tag > acc.tag { d } else { acc },
    )
}

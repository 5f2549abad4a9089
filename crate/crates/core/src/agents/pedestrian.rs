use serde::{Deserialize, Serialize};

use super::robot::{Gesture, RobotAction};
use crate::geom::{Point, SimClock};
use crate::hazard::Zod;

/// Pedestrians stop approaching once this close to the robot.
pub const APPROACH_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PedestrianScript {
    pub id: u32,
    pub spawn_tick: u64,
    pub spawn_position: Point,
    /// Walking speed, m/s.
    pub speed: f64,
    pub faces_robot: bool,
    /// Compliant pedestrians wait for the robot's cross gesture.
    pub compliant: bool,
    /// Non-compliant pedestrians start crossing this many ticks after arriving.
    pub delay_ticks: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PedestrianMode {
    Pending,
    Approaching,
    Waiting,
    Crossing,
    Done,
}

impl PedestrianMode {
    pub fn is_active(self) -> bool {
        matches!(
            self,
            PedestrianMode::Approaching | PedestrianMode::Waiting | PedestrianMode::Crossing
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PedestrianState {
    pub mode: PedestrianMode,
    pub position: Point,
    /// Set once a cross gesture has been seen.
    pub cleared: bool,
    pub waiting_since: Option<u64>,
}

impl PedestrianState {
    pub fn new(script: &PedestrianScript) -> Self {
        PedestrianState {
            mode: PedestrianMode::Pending,
            position: script.spawn_position,
            cleared: false,
            waiting_since: None,
        }
    }

    pub fn facing_robot(&self, script: &PedestrianScript) -> bool {
        script.faces_robot && matches!(self.mode, PedestrianMode::Approaching | PedestrianMode::Waiting)
    }
}

/// Where the crossing happens: the robot and its danger zone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingSite {
    pub robot: Point,
    pub zod: Zod,
}

pub fn pedestrian_step(
    script: &PedestrianScript,
    state: &PedestrianState,
    robot_actions_visible: &[RobotAction],
    clock: &SimClock,
    site: &CrossingSite,
) -> PedestrianState {
    let tick = clock.tick();
    let stride = script.speed * clock.tick_duration();
    let mut next = state.clone();
    let saw_cross = robot_actions_visible.contains(&RobotAction::Gesture(Gesture::Cross));

    match state.mode {
        PedestrianMode::Pending => {
            if tick >= script.spawn_tick {
                next.mode = PedestrianMode::Approaching;
                next.position = script.spawn_position;
                if next.position.distance(site.robot) <= APPROACH_DISTANCE_M {
                    next.mode = PedestrianMode::Waiting;
                    next.waiting_since = Some(tick);
                }
            }
        }
        PedestrianMode::Approaching => {
            let d = state.position.distance(site.robot);
            let remaining = d - APPROACH_DISTANCE_M;
            let step = stride.min(remaining.max(0.0));
            if d > 0.0 {
                let k = step / d;
                next.position = Point::new(
                    state.position.x + (site.robot.x - state.position.x) * k,
                    state.position.y + (site.robot.y - state.position.y) * k,
                );
            }
            if remaining - step <= 1e-9 {
                next.mode = PedestrianMode::Waiting;
                next.waiting_since = Some(tick);
            }
        }
        PedestrianMode::Waiting => {
            let since = state.waiting_since.unwrap_or(tick);
            let go = if script.compliant {
                state.cleared
            } else {
                tick > since + script.delay_ticks
            };
            if go {
                next.mode = PedestrianMode::Crossing;
                next.position.y -= stride;
            }
        }
        PedestrianMode::Crossing => {
            next.position.y -= stride;
        }
        PedestrianMode::Done => {}
    }
    if next.mode == PedestrianMode::Crossing && next.position.y < site.zod.min_y() {
        next.mode = PedestrianMode::Done;
    }
    if saw_cross && next.mode != PedestrianMode::Pending {
        next.cleared = true;
    }
    next
}

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geom::{predict_position, GeoRef, KinematicState, SimClock};
use crate::messages::{Cam, CauseCode, DenmAction, StationId, StationType, V2xMessage};

/// Text shown on the rider display while a pedestrian warning is active.
pub const WARNING_TEXT: &str = "Pedestrian In Front";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedChange {
    pub tick: u64,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EbikeScript {
    pub station_id: StationId,
    pub station_type: StationType,
    pub initial: KinematicState,
    pub speed_changes: Vec<SpeedChange>,
    pub cam_interval_ticks: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EbikeState {
    pub kinematics: KinematicState,
    pub display: Option<String>,
    warnings: BTreeSet<(StationId, u32)>,
}

impl EbikeState {
    pub fn new(script: &EbikeScript) -> Self {
        EbikeState {
            kinematics: script.initial,
            display: None,
            warnings: BTreeSet::new(),
        }
    }
}

/// Moves the vehicle one tick and updates its warning display.
///
/// Warnings never influence speed; only the script does.
pub fn ebike_step(
    script: &EbikeScript,
    state: &EbikeState,
    delivered: &[V2xMessage],
    clock: &SimClock,
) -> (EbikeState, Option<String>) {
    let mut next = state.clone();
    for msg in delivered {
        if let V2xMessage::Denm(d) = msg {
            if d.cause_code != CauseCode::HumanPresenceOnTheRoad {
                continue;
            }
            let key = (d.station_id, d.sequence_number);
            match d.action {
                DenmAction::New => {
                    next.warnings.insert(key);
                }
                DenmAction::Terminate => {
                    next.warnings.remove(&key);
                }
            }
        }
    }
    next.display = (!next.warnings.is_empty()).then(|| WARNING_TEXT.to_owned());

    for change in script.speed_changes.iter().filter(|c| c.tick == clock.tick()) {
        if let Ok(k) = next.kinematics.with_speed(change.speed) {
            next.kinematics = k;
        }
    }
    next.kinematics.pos = predict_position(&next.kinematics, clock.tick_duration());
    let display = next.display.clone();
    (next, display)
}

pub fn ebike_cam(script: &EbikeScript, state: &EbikeState, geo_ref: &GeoRef, tick: u64) -> Cam {
    let (latitude, longitude) = geo_ref.to_geo(state.kinematics.pos);
    Cam {
        station_id: script.station_id,
        station_type: script.station_type,
        latitude,
        longitude,
        speed: state.kinematics.speed(),
        heading: state.kinematics.heading(),
        generation_tick: tick,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use crate::messages::Denm;

    fn script() -> EbikeScript {
        EbikeScript {
            station_id: StationId(10),
            station_type: StationType::Cyclist,
            initial: KinematicState::new(Point::new(-50.0, -15.0), 5.0, 0.0).unwrap(),
            speed_changes: vec![SpeedChange { tick: 3, speed: 2.0 }],
            cam_interval_ticks: 10,
        }
    }

    fn denm(action: DenmAction) -> V2xMessage {
        V2xMessage::Denm(Denm {
            station_id: StationId(1),
            cause_code: CauseCode::HumanPresenceOnTheRoad,
            event_latitude: 0.0,
            event_longitude: 0.0,
            action,
            sequence_number: 1,
        })
    }

    fn clock(t: u64) -> SimClock {
        SimClock::at(t, 0.1).unwrap()
    }

    #[test]
    fn advances_half_a_meter_per_tick() {
        let s = script();
        let (st, display) = ebike_step(&s, &EbikeState::new(&s), &[], &clock(0));
        assert!((st.kinematics.pos.x + 49.5).abs() < 1e-12);
        assert_eq!(st.kinematics.pos.y, -15.0);
        assert_eq!(display, None);
    }

    #[test]
    fn warning_shows_without_slowing() {
        let s = script();
        let (st, display) = ebike_step(&s, &EbikeState::new(&s), &[denm(DenmAction::New)], &clock(0));
        assert_eq!(display.as_deref(), Some("Pedestrian In Front"));
        assert_eq!(st.kinematics.speed(), 5.0);
        let (st, display) = ebike_step(&s, &st, &[], &clock(1));
        assert!(display.is_some());
        let (_, display) = ebike_step(&s, &st, &[denm(DenmAction::Terminate)], &clock(2));
        assert_eq!(display, None);
    }

    #[test]
    fn scripted_speed_change_applies() {
        let s = script();
        let mut st = EbikeState::new(&s);
        for t in 0..4 {
            st = ebike_step(&s, &st, &[denm(DenmAction::New)], &clock(t)).0;
        }
        assert_eq!(st.kinematics.speed(), 2.0);
        assert!((st.kinematics.pos.x - (-50.0 + 1.5 + 0.2)).abs() < 1e-12);
    }
}

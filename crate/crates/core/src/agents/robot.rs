//! The crossing-mediation state machine.
//!
//! ```text
//! Waiting ──pedestrian ≤ 2 m──▶ IdentifyCrossingIntent ──facing──▶ IdentifyHazard
//!    ▲                                   │ patience expired              │
//!    └───────────────────────────────────┘                     hazard │ │ safe
//!    │                                                                ▼ ▼
//! PostInteraction ◀──crossed / timeout── Crossing ◀──safe── ReactToHazard ⟲
//! ```
//!
//! The robot makes exactly one transition per tick at most. Vehicle knowledge
//! (CAMs, own sensing, received CPMs) is refreshed on every tick regardless of
//! phase.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geom::{GeoRef, KinematicState, Point, SimClock};
use crate::hazard::{classify, incursion_interval, worst, HazardDecision, Zod};
use crate::messages::{
    fuse_perception, Cam, CauseCode, Denm, DenmAction, PerceivedObject, StationId, StationType, V2xMessage,
};

/// A pedestrian closer than this is considered to be standing in front of the robot.
pub const DETECTION_RANGE_M: f64 = 2.0;
pub const SAY_STOP: &str = "stop";
pub const SAY_CROSS: &str = "You can cross";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    Waiting,
    IdentifyCrossingIntent,
    IdentifyHazard,
    ReactToHazard,
    Crossing,
    PostInteraction,
}

/// Coarse interaction phases shared by all use cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeneralPhase {
    PreInteraction,
    SocialInteraction,
    PostInteraction,
}

impl Phase {
    pub const ALL: [Phase; 6] = [
        Phase::Waiting,
        Phase::IdentifyCrossingIntent,
        Phase::IdentifyHazard,
        Phase::ReactToHazard,
        Phase::Crossing,
        Phase::PostInteraction,
    ];

    pub fn general(self) -> GeneralPhase {
        match self {
            Phase::Waiting | Phase::IdentifyCrossingIntent => GeneralPhase::PreInteraction,
            Phase::IdentifyHazard | Phase::ReactToHazard | Phase::Crossing => GeneralPhase::SocialInteraction,
            Phase::PostInteraction => GeneralPhase::PostInteraction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gesture {
    Stop,
    Cross,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RobotAction {
    Gesture(Gesture),
    Say(String),
    SendDenm { action: DenmAction, sequence: u32 },
    SendCam,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotTimers {
    pub patience_ticks: u64,
    pub crossing_timeout_ticks: u64,
    pub cam_interval_ticks: u64,
    pub denm_repeat_ticks: u64,
    pub staleness_ticks: u64,
}

impl Default for RobotTimers {
    fn default() -> Self {
        RobotTimers {
            patience_ticks: 20,
            crossing_timeout_ticks: 300,
            cam_interval_ticks: 10,
            denm_repeat_ticks: 10,
            staleness_ticks: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotConfig {
    pub station_id: StationId,
    pub zod: Zod,
    pub threshold: f64,
    pub sensor_range: f64,
    pub timers: RobotTimers,
}

impl RobotConfig {
    pub fn position(&self) -> Point {
        self.zod.anchor()
    }
}

/// Key of the known-vehicle table: CAM senders by station id, sensed objects by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TrackId {
    Station(StationId),
    Sensed(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnownVehicle {
    pub state: KinematicState,
    pub last_update_tick: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedestrianSighting {
    pub id: u32,
    pub position: Point,
    pub distance: f64,
    pub facing_robot: bool,
}

/// Everything the robot perceives during one tick.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Observation {
    pub tick: u64,
    pub pedestrians: Vec<PedestrianSighting>,
    /// Own-sensor detections, positions relative to the robot.
    pub perceived: Vec<PerceivedObject>,
    pub delivered_messages: Vec<V2xMessage>,
}

impl Observation {
    /// Nearest pedestrian within detection range, excluding `skip`.
    pub fn pedestrian_detected(&self, skip: &BTreeSet<u32>) -> Option<&PedestrianSighting> {
        self.pedestrians
            .iter()
            .filter(|p| p.distance <= DETECTION_RANGE_M && !skip.contains(&p.id))
            .min_by(|a, b| a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id)))
    }

    fn sighting(&self, id: u32) -> Option<&PedestrianSighting> {
        self.pedestrians.iter().find(|p| p.id == id)
    }
}

/// Outcome of one completed mediation, kept for later analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub pedestrian: u32,
    pub engaged_tick: u64,
    pub cross_permitted_tick: Option<u64>,
    pub finished_tick: u64,
    pub timed_out: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub config: RobotConfig,
    pub phase: Phase,
    pub phase_since: u64,
    pub known_vehicles: BTreeMap<TrackId, KnownVehicle>,
    pub active_denm: Option<u32>,
    pub target_pedestrian: Option<u32>,
    /// Worst hazard over the known-vehicle table as of the last step.
    pub last_decision: HazardDecision,
    next_denm_seq: u32,
    last_denm_tick: u64,
    engaged_tick: u64,
    cross_permitted_tick: Option<u64>,
    served: BTreeSet<u32>,
    pub interactions: Vec<InteractionRecord>,
}

impl RobotState {
    pub fn new(config: RobotConfig) -> Self {
        RobotState {
            config,
            phase: Phase::Waiting,
            phase_since: 0,
            known_vehicles: BTreeMap::new(),
            active_denm: None,
            target_pedestrian: None,
            last_decision: HazardDecision::SAFE,
            next_denm_seq: 1,
            last_denm_tick: 0,
            engaged_tick: 0,
            cross_permitted_tick: None,
            served: BTreeSet::new(),
            interactions: Vec::new(),
        }
    }

    pub fn position(&self) -> Point {
        self.config.position()
    }

    /// Classifies every known vehicle as seen from `clock`'s tick.
    pub fn assess(&self, clock: &SimClock) -> Vec<(TrackId, HazardDecision)> {
        self.known_vehicles
            .iter()
            .map(|(id, kv)| {
                let now = kv.state.advanced(clock.seconds_since(kv.last_update_tick));
                (
                    *id,
                    classify(incursion_interval(&self.config.zod, &now), self.config.threshold),
                )
            })
            .collect()
    }

    pub fn cam(&self, geo_ref: &GeoRef, tick: u64) -> Cam {
        let (latitude, longitude) = geo_ref.to_geo(self.position());
        Cam {
            station_id: self.config.station_id,
            station_type: StationType::Robot,
            latitude,
            longitude,
            speed: 0.0,
            heading: 0.0,
            generation_tick: tick,
        }
    }

    pub fn denm(&self, geo_ref: &GeoRef, action: DenmAction, sequence: u32) -> Denm {
        let (event_latitude, event_longitude) = geo_ref.to_geo(self.position());
        Denm {
            station_id: self.config.station_id,
            cause_code: CauseCode::HumanPresenceOnTheRoad,
            event_latitude,
            event_longitude,
            action,
            sequence_number: sequence,
        }
    }

    fn refresh_knowledge(&mut self, obs: &Observation, clock: &SimClock, geo_ref: &GeoRef) {
        let now = clock.tick();
        let mut cpms = Vec::new();
        for msg in &obs.delivered_messages {
            match msg {
                V2xMessage::Cam(cam) if cam.station_type.is_vehicle() => {
                    let Ok(pos) = geo_ref.to_local(cam.latitude, cam.longitude) else {
                        continue;
                    };
                    let Ok(state) = KinematicState::new(pos, cam.speed, cam.heading) else {
                        continue;
                    };
                    let key = TrackId::Station(cam.station_id);
                    let newer = self
                        .known_vehicles
                        .get(&key)
                        .is_none_or(|kv| kv.last_update_tick <= cam.generation_tick);
                    if newer && cam.generation_tick <= now {
                        self.known_vehicles.insert(
                            key,
                            KnownVehicle {
                                state,
                                last_update_tick: cam.generation_tick,
                            },
                        );
                    }
                }
                V2xMessage::Cpm(cpm) => cpms.push(cpm.clone()),
                _ => {}
            }
        }

        // sensed tracks are rebuilt from scratch every tick
        self.known_vehicles
            .retain(|k, _| matches!(k, TrackId::Station(_)));
        let fused = fuse_perception(&obs.perceived, &cpms, self.position(), geo_ref);
        let mut idx = 0;
        for obj in fused.into_iter().filter(|o| o.object_type.is_vehicle()) {
            if let Ok(state) = KinematicState::new(obj.rel_position, obj.speed, obj.heading) {
                self.known_vehicles.insert(
                    TrackId::Sensed(idx),
                    KnownVehicle {
                        state,
                        last_update_tick: now,
                    },
                );
                idx += 1;
            }
        }

        let staleness = self.config.timers.staleness_ticks;
        self.known_vehicles
            .retain(|_, kv| now.saturating_sub(kv.last_update_tick) <= staleness);
    }

    fn enter(&mut self, phase: Phase, tick: u64) {
        self.phase = phase;
        self.phase_since = tick;
    }

    fn permit_crossing(&mut self, tick: u64, actions: &mut Vec<RobotAction>) {
        actions.push(RobotAction::Gesture(Gesture::Cross));
        actions.push(RobotAction::Say(SAY_CROSS.to_owned()));
        self.cross_permitted_tick = Some(tick);
        self.enter(Phase::Crossing, tick);
    }

    fn finish_interaction(&mut self, tick: u64, timed_out: bool) {
        if let Some(p) = self.target_pedestrian.take() {
            self.served.insert(p);
            self.interactions.push(InteractionRecord {
                pedestrian: p,
                engaged_tick: self.engaged_tick,
                cross_permitted_tick: self.cross_permitted_tick.take(),
                finished_tick: tick,
                timed_out,
            });
        }
        self.enter(Phase::PostInteraction, tick);
    }

    /// Advances the machine by one tick, returning the actions to perform.
    pub fn step(&mut self, obs: &Observation, clock: &SimClock, geo_ref: &GeoRef) -> Vec<RobotAction> {
        debug_assert_eq!(obs.tick, clock.tick(), "observation from another tick");
        let tick = clock.tick();
        let timers = self.config.timers;
        self.refresh_knowledge(obs, clock, geo_ref);
        let decision = worst(self.assess(clock).into_iter().map(|(_, d)| d));
        self.last_decision = decision;
        let hazardous = decision.tag.is_hazard();

        let mut actions = Vec::new();
        match self.phase {
            Phase::Waiting => {
                if let Some(p) = obs.pedestrian_detected(&self.served) {
                    self.target_pedestrian = Some(p.id);
                    self.engaged_tick = tick;
                    self.enter(Phase::IdentifyCrossingIntent, tick);
                }
            }
            Phase::IdentifyCrossingIntent => {
                let facing = self
                    .target_pedestrian
                    .and_then(|id| obs.sighting(id))
                    .is_some_and(|p| p.facing_robot);
                if facing {
                    self.enter(Phase::IdentifyHazard, tick);
                } else if tick - self.phase_since >= timers.patience_ticks {
                    self.target_pedestrian = None;
                    self.enter(Phase::Waiting, tick);
                }
            }
            Phase::IdentifyHazard => {
                if hazardous {
                    let seq = self.next_denm_seq;
                    self.next_denm_seq = self.next_denm_seq.wrapping_add(1).max(1);
                    self.active_denm = Some(seq);
                    self.last_denm_tick = tick;
                    actions.push(RobotAction::Gesture(Gesture::Stop));
                    actions.push(RobotAction::Say(SAY_STOP.to_owned()));
                    actions.push(RobotAction::SendDenm {
                        action: DenmAction::New,
                        sequence: seq,
                    });
                    self.enter(Phase::ReactToHazard, tick);
                } else {
                    self.permit_crossing(tick, &mut actions);
                }
            }
            Phase::ReactToHazard => {
                let seq = self.active_denm.expect("active DENM while reacting to a hazard");
                if hazardous {
                    let due = tick - self.last_denm_tick >= timers.denm_repeat_ticks;
                    if due {
                        self.last_denm_tick = tick;
                        actions.push(RobotAction::SendDenm {
                            action: DenmAction::New,
                            sequence: seq,
                        });
                        // pedestrian ignoring the stop: repeat it
                        let zod = self.config.zod;
                        let target_inside = self
                            .target_pedestrian
                            .and_then(|id| obs.sighting(id))
                            .is_some_and(|p| zod.contains(p.position));
                        if target_inside {
                            actions.push(RobotAction::Gesture(Gesture::Stop));
                            actions.push(RobotAction::Say(SAY_STOP.to_owned()));
                        }
                    }
                } else {
                    actions.push(RobotAction::SendDenm {
                        action: DenmAction::Terminate,
                        sequence: seq,
                    });
                    self.active_denm = None;
                    self.permit_crossing(tick, &mut actions);
                }
            }
            Phase::Crossing => {
                let far_side = self.config.zod.min_y();
                let crossed = self
                    .target_pedestrian
                    .and_then(|id| obs.sighting(id))
                    .is_some_and(|p| p.position.y < far_side);
                let timed_out = tick - self.phase_since >= timers.crossing_timeout_ticks;
                if crossed || timed_out {
                    self.finish_interaction(tick, !crossed);
                }
            }
            Phase::PostInteraction => {
                // outcomes are already in `interactions`; no parameter adaptation
                self.enter(Phase::Waiting, tick);
            }
        }

        if timers.cam_interval_ticks > 0 && tick.is_multiple_of(timers.cam_interval_ticks) {
            actions.push(RobotAction::SendCam);
        }
        actions
    }
}

/// Pure form of [`RobotState::step`].
pub fn robot_step(
    state: &RobotState,
    obs: &Observation,
    clock: &SimClock,
    geo_ref: &GeoRef,
) -> (RobotState, Vec<RobotAction>) {
    let mut next = state.clone();
    let actions = next.step(obs, clock, geo_ref);
    (next, actions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hazard::HazardTag;

    fn geo() -> GeoRef {
        GeoRef::new(49.0, 8.4).unwrap()
    }

    fn robot() -> RobotState {
        RobotState::new(RobotConfig {
            station_id: StationId(1),
            zod: Zod::new(Point::ORIGIN, 30.0, 30.0, 0.0, 30.0).unwrap(),
            threshold: 5.0,
            sensor_range: 100.0,
            timers: RobotTimers::default(),
        })
    }

    fn clock(tick: u64) -> SimClock {
        SimClock::at(tick, 0.1).unwrap()
    }

    fn ped(dist: f64, facing: bool) -> PedestrianSighting {
        PedestrianSighting {
            id: 7,
            position: Point::new(0.0, dist),
            distance: dist,
            facing_robot: facing,
        }
    }

    fn bike_cam(x: f64, y: f64, tick: u64) -> V2xMessage {
        let (latitude, longitude) = geo().to_geo(Point::new(x, y));
        V2xMessage::Cam(Cam {
            station_id: StationId(10),
            station_type: StationType::Cyclist,
            latitude,
            longitude,
            speed: 5.0,
            heading: 0.0,
            generation_tick: tick,
        })
    }

    fn obs(tick: u64, peds: Vec<PedestrianSighting>, msgs: Vec<V2xMessage>) -> Observation {
        Observation {
            tick,
            pedestrians: peds,
            perceived: vec![],
            delivered_messages: msgs,
        }
    }

    #[test]
    fn phase_table() {
        use GeneralPhase::*;
        let expected = [
            (Phase::Waiting, PreInteraction),
            (Phase::IdentifyCrossingIntent, PreInteraction),
            (Phase::IdentifyHazard, SocialInteraction),
            (Phase::ReactToHazard, SocialInteraction),
            (Phase::Crossing, SocialInteraction),
            (Phase::PostInteraction, PostInteraction),
        ];
        for (p, g) in expected {
            assert_eq!(p.general(), g);
        }
        assert_eq!(Phase::ALL.len(), expected.len());
    }

    #[test]
    fn detects_pedestrian_in_front() {
        let (r, a) = robot_step(&robot(), &obs(1, vec![ped(1.5, true)], vec![]), &clock(1), &geo());
        assert_eq!(r.phase, Phase::IdentifyCrossingIntent);
        assert_eq!(r.target_pedestrian, Some(7));
        assert!(a.is_empty());
    }

    #[test]
    fn ignores_pedestrian_beyond_two_meters() {
        let (r, _) = robot_step(&robot(), &obs(1, vec![ped(2.5, true)], vec![]), &clock(1), &geo());
        assert_eq!(r.phase, Phase::Waiting);
    }

    #[test]
    fn idle_robot_only_beacons() {
        let mut r = robot();
        for t in 0..30 {
            let a = r.step(&obs(t, vec![], vec![]), &clock(t), &geo());
            assert_eq!(r.phase, Phase::Waiting);
            if t % 10 == 0 {
                assert_eq!(a, vec![RobotAction::SendCam]);
            } else {
                assert!(a.is_empty());
            }
        }
    }

    #[test]
    fn patience_expires_without_facing() {
        let mut r = robot();
        r.step(&obs(1, vec![ped(1.0, false)], vec![]), &clock(1), &geo());
        for t in 2..21 {
            r.step(&obs(t, vec![ped(1.0, false)], vec![]), &clock(t), &geo());
            assert_eq!(r.phase, Phase::IdentifyCrossingIntent);
        }
        r.step(&obs(21, vec![ped(1.0, false)], vec![]), &clock(21), &geo());
        assert_eq!(r.phase, Phase::Waiting);
        assert_eq!(r.target_pedestrian, None);
    }

    fn in_identify_hazard() -> RobotState {
        let mut r = robot();
        r.step(&obs(1, vec![ped(1.0, true)], vec![]), &clock(1), &geo());
        r.step(&obs(2, vec![ped(1.0, true)], vec![]), &clock(2), &geo());
        assert_eq!(r.phase, Phase::IdentifyHazard);
        r
    }

    #[test]
    fn imminent_vehicle_triggers_stop_and_denm() {
        let r = in_identify_hazard();
        let (r, a) = robot_step(
            &r,
            &obs(3, vec![ped(1.0, true)], vec![bike_cam(-50.0, -15.0, 3)]),
            &clock(3),
            &geo(),
        );
        assert_eq!(r.phase, Phase::ReactToHazard);
        assert_eq!(r.last_decision.tag, HazardTag::Imminent);
        assert!(a.contains(&RobotAction::Gesture(Gesture::Stop)));
        assert!(a.contains(&RobotAction::Say("stop".into())));
        assert!(a.contains(&RobotAction::SendDenm {
            action: DenmAction::New,
            sequence: 1
        }));
        assert_eq!(r.active_denm, Some(1));
    }

    #[test]
    fn passed_vehicle_terminates_denm_and_permits_crossing() {
        let r = in_identify_hazard();
        let (r, _) = robot_step(
            &r,
            &obs(3, vec![ped(1.0, true)], vec![bike_cam(-50.0, -15.0, 3)]),
            &clock(3),
            &geo(),
        );
        let (r, a) = robot_step(
            &r,
            &obs(4, vec![ped(1.0, true)], vec![bike_cam(35.0, -15.0, 4)]),
            &clock(4),
            &geo(),
        );
        assert_eq!(r.phase, Phase::Crossing);
        assert_eq!(r.active_denm, None);
        assert_eq!(
            a[0],
            RobotAction::SendDenm {
                action: DenmAction::Terminate,
                sequence: 1
            }
        );
        assert!(a.contains(&RobotAction::Gesture(Gesture::Cross)));
        assert!(a.contains(&RobotAction::Say("You can cross".into())));
    }

    #[test]
    fn no_vehicles_means_crossing() {
        let r = in_identify_hazard();
        let (r, a) = robot_step(&r, &obs(3, vec![ped(1.0, true)], vec![]), &clock(3), &geo());
        assert_eq!(r.phase, Phase::Crossing);
        assert!(!a.iter().any(|x| matches!(x, RobotAction::SendDenm { .. })));
    }

    #[test]
    fn sensed_vehicle_gates_crossing_without_messages() {
        let r = in_identify_hazard();
        let mut o = obs(3, vec![ped(1.0, true)], vec![]);
        o.perceived.push(PerceivedObject {
            rel_position: Point::new(-40.0, -15.0),
            speed: 5.0,
            heading: 0.0,
            object_type: StationType::Cyclist,
            confidence: 0.9,
        });
        let (r, _) = robot_step(&r, &o, &clock(3), &geo());
        assert_eq!(r.phase, Phase::ReactToHazard);
    }

    #[test]
    fn stale_cams_are_evicted() {
        let mut r = robot();
        r.step(
            &obs(0, vec![], vec![bike_cam(-300.0, -15.0, 0)]),
            &clock(0),
            &geo(),
        );
        assert_eq!(r.known_vehicles.len(), 1);
        for t in 1..=20 {
            r.step(&obs(t, vec![], vec![]), &clock(t), &geo());
        }
        assert_eq!(r.known_vehicles.len(), 1);
        r.step(&obs(21, vec![], vec![]), &clock(21), &geo());
        assert!(r.known_vehicles.is_empty());
    }

    #[test]
    fn cam_extrapolates_to_current_tick() {
        let mut r = robot();
        r.step(
            &obs(0, vec![], vec![bike_cam(-50.0, -15.0, 0)]),
            &clock(0),
            &geo(),
        );
        let a = r.assess(&clock(10));
        match a[0].1.interval {
            crate::hazard::TimeInterval::Bounded { entry, .. } => assert!((entry - 3.0).abs() < 1e-6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn crossing_completes_on_far_side() {
        let r = in_identify_hazard();
        let (mut r, _) = robot_step(&r, &obs(3, vec![ped(1.0, true)], vec![]), &clock(3), &geo());
        let mut far = ped(31.0, true);
        far.position = Point::new(0.0, -30.5);
        r.step(&obs(4, vec![ped(10.0, true)], vec![]), &clock(4), &geo());
        assert_eq!(r.phase, Phase::Crossing);
        r.step(&obs(5, vec![far], vec![]), &clock(5), &geo());
        assert_eq!(r.phase, Phase::PostInteraction);
        assert_eq!(r.target_pedestrian, None);
        assert_eq!(r.interactions.len(), 1);
        assert!(!r.interactions[0].timed_out);
        r.step(&obs(6, vec![], vec![]), &clock(6), &geo());
        assert_eq!(r.phase, Phase::Waiting);
    }

    #[test]
    fn crossing_times_out() {
        let r = in_identify_hazard();
        let (mut r, _) = robot_step(&r, &obs(3, vec![ped(1.0, true)], vec![]), &clock(3), &geo());
        for t in 4..303 {
            r.step(&obs(t, vec![], vec![]), &clock(t), &geo());
            assert_eq!(r.phase, Phase::Crossing);
        }
        r.step(&obs(303, vec![], vec![]), &clock(303), &geo());
        assert_eq!(r.phase, Phase::PostInteraction);
        assert!(r.interactions[0].timed_out);
    }

    #[test]
    fn served_pedestrian_is_not_reengaged() {
        let mut r = robot();
        r.served.insert(7);
        r.step(&obs(1, vec![ped(1.0, true)], vec![]), &clock(1), &geo());
        assert_eq!(r.phase, Phase::Waiting);
    }
}

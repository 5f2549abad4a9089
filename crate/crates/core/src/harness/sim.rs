//! The deterministic simulation loop.
//!
//! Each tick runs, in order:
//!
//! 1. deliver due messages from the channel,
//! 2. step the robot on its observation,
//! 3. step vehicles (by station id), then pedestrians (by id),
//! 4. broadcast what was produced this tick (robot, vehicles, roadside units);
//!    CAM and CPM content is captured before anyone moves, so a message
//!    stamped with tick `k` describes the state at time `k · tick_duration`,
//! 5. sample positions and check for conflicts.

use std::collections::{BTreeMap, BTreeSet};

use super::metrics::{MetricsFold, MetricsSummary};
use super::scenario::Scenario;
use super::trace::{Event, PedestrianSample, TraceEvent, VehicleSample, ViolationKind};
use crate::agents::{
    ebike_cam, ebike_step, pedestrian_step, CrossingSite, EbikeState, Observation, PedestrianMode,
    PedestrianSighting, PedestrianState, Phase, RobotAction, RobotState,
};
use crate::geom::{Point, SimClock};
use crate::messages::{decode, encode, Cpm, PerceivedObject, StationId, V2xMessage};
use crate::netsim::{broadcast, Mailbox};

/// A pedestrian and a vehicle inside the zone closer than this are in conflict.
pub const CONFLICT_DISTANCE_M: f64 = 2.0;
/// Confidence attached to simulated sensor detections.
pub const SENSOR_CONFIDENCE: f64 = 0.9;

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Vec<TraceEvent>,
    pub metrics: MetricsSummary,
}

pub struct Simulation {
    scenario: Scenario,
    clock: SimClock,
    robot: RobotState,
    vehicles: Vec<EbikeState>,
    pedestrians: Vec<PedestrianState>,
    mailbox: Mailbox,
    fold: MetricsFold,
    flagged_against_stop: BTreeSet<u32>,
    last_actions: Vec<RobotAction>,
    finished: bool,
}

impl Simulation {
    pub fn new(scenario: &Scenario) -> Self {
        let scenario = scenario.clone();
        Simulation {
            clock: SimClock::new(scenario.tick_duration).expect("validated tick duration"),
            robot: RobotState::new(scenario.robot.clone()),
            vehicles: scenario.vehicles.iter().map(EbikeState::new).collect(),
            pedestrians: scenario.pedestrians.iter().map(PedestrianState::new).collect(),
            mailbox: Mailbox::new(),
            fold: MetricsFold::new(),
            flagged_against_stop: BTreeSet::new(),
            last_actions: Vec::new(),
            finished: false,
            scenario,
        }
    }

    pub fn clock(&self) -> &SimClock {
        &self.clock
    }

    pub fn robot(&self) -> &RobotState {
        &self.robot
    }

    pub fn vehicles(&self) -> &[EbikeState] {
        &self.vehicles
    }

    pub fn pedestrians(&self) -> &[PedestrianState] {
        &self.pedestrians
    }

    /// Robot actions of the most recent tick.
    pub fn last_actions(&self) -> &[RobotAction] {
        &self.last_actions
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn metrics(&self) -> MetricsSummary {
        self.fold.summary()
    }

    fn observe_robot(&self, tick: u64, delivered: Vec<V2xMessage>) -> Observation {
        let here = self.robot.position();
        // pedestrians are always tracked; sensor_range limits vehicle sensing only
        let pedestrians = self
            .scenario
            .pedestrians
            .iter()
            .zip(&self.pedestrians)
            .filter(|(_, st)| st.mode != PedestrianMode::Pending)
            .map(|(script, st)| PedestrianSighting {
                id: script.id,
                position: st.position,
                distance: st.position.distance(here),
                facing_robot: st.facing_robot(script),
            })
            .collect();
        Observation {
            tick,
            pedestrians,
            perceived: self.sense_vehicles(here, self.scenario.robot.sensor_range),
            delivered_messages: delivered,
        }
    }

    fn sense_vehicles(&self, from: Point, range: f64) -> Vec<PerceivedObject> {
        self.scenario
            .vehicles
            .iter()
            .zip(&self.vehicles)
            .filter(|(_, st)| st.kinematics.pos.distance(from) <= range)
            .map(|(script, st)| PerceivedObject {
                rel_position: Point::new(st.kinematics.pos.x - from.x, st.kinematics.pos.y - from.y),
                speed: st.kinematics.speed(),
                heading: st.kinematics.heading(),
                object_type: script.station_type,
                confidence: SENSOR_CONFIDENCE,
            })
            .collect()
    }

    fn stations(&self) -> Vec<(StationId, Point)> {
        let mut out = vec![(self.scenario.robot.station_id, self.robot.position())];
        out.extend(
            self.scenario
                .vehicles
                .iter()
                .zip(&self.vehicles)
                .map(|(s, st)| (s.station_id, st.kinematics.pos)),
        );
        out.extend(
            self.scenario
                .roadside_units
                .iter()
                .map(|u| (u.station_id, u.position)),
        );
        out
    }

    /// Runs one tick and returns the events it produced.
    pub fn step(&mut self) -> Vec<TraceEvent> {
        if self.finished {
            return Vec::new();
        }
        let tick = self.clock.tick();
        let geo_ref = self.scenario.geo_ref;
        let mut events = Vec::new();
        let mut emit = |event: Event| events.push(TraceEvent { tick, event });

        let mut inbox: BTreeMap<StationId, Vec<V2xMessage>> = BTreeMap::new();
        for m in self.mailbox.poll(&self.clock) {
            let msg = decode(&m.payload).expect("channel carries only encoded messages");
            emit(Event::MsgDelivered {
                sender: m.sender,
                receiver: m.receiver,
                message: msg.kind(),
                bytes: hex::encode(&m.payload),
            });
            inbox.entry(m.receiver).or_default().push(msg);
        }

        let robot_id = self.scenario.robot.station_id;
        let obs = self.observe_robot(tick, inbox.remove(&robot_id).unwrap_or_default());
        let before = self.robot.phase;
        let actions = self.robot.step(&obs, &self.clock, &geo_ref);
        if self.robot.phase != before {
            emit(Event::PhaseChange {
                from: before,
                to: self.robot.phase,
                decision: self.robot.last_decision,
            });
        }
        for a in &actions {
            emit(Event::Action { action: a.clone() });
        }

        // outgoing messages describe the world as it was at the start of the tick
        let mut outgoing: Vec<(StationId, Point, V2xMessage)> = Vec::new();
        for a in &actions {
            let msg = match a {
                RobotAction::SendCam => V2xMessage::Cam(self.robot.cam(&geo_ref, tick)),
                RobotAction::SendDenm { action, sequence } => {
                    V2xMessage::Denm(self.robot.denm(&geo_ref, *action, *sequence))
                }
                _ => continue,
            };
            outgoing.push((robot_id, self.robot.position(), msg));
        }
        for (script, state) in self.scenario.vehicles.iter().zip(&self.vehicles) {
            if tick.is_multiple_of(script.cam_interval_ticks) {
                let cam = ebike_cam(script, state, &geo_ref, tick);
                outgoing.push((script.station_id, state.kinematics.pos, V2xMessage::Cam(cam)));
            }
        }
        for rsu in &self.scenario.roadside_units {
            if tick.is_multiple_of(rsu.cpm_interval_ticks) {
                let (origin_latitude, origin_longitude) = geo_ref.to_geo(rsu.position);
                let cpm = Cpm {
                    station_id: rsu.station_id,
                    origin_latitude,
                    origin_longitude,
                    objects: self.sense_vehicles(rsu.position, rsu.sensor_range),
                };
                outgoing.push((rsu.station_id, rsu.position, V2xMessage::Cpm(cpm)));
            }
        }
        let stations = self.stations();

        for (script, state) in self.scenario.vehicles.iter().zip(self.vehicles.iter_mut()) {
            let delivered = inbox.remove(&script.station_id).unwrap_or_default();
            let (next, display) = ebike_step(script, state, &delivered, &self.clock);
            if display != state.display {
                emit(Event::DisplayChange {
                    station: script.station_id,
                    text: display,
                });
            }
            *state = next;
        }

        let site = CrossingSite {
            robot: self.robot.position(),
            zod: self.scenario.robot.zod,
        };
        for (script, state) in self.scenario.pedestrians.iter().zip(self.pedestrians.iter_mut()) {
            *state = pedestrian_step(script, state, &actions, &self.clock, &site);
        }

        let mut sent_per_station: BTreeMap<StationId, u32> = BTreeMap::new();
        for (sender, pos, msg) in outgoing {
            let bytes = encode(&msg).expect("simulated stations emit valid messages");
            let index = sent_per_station.entry(sender).or_default();
            let outcome = broadcast(
                &self.scenario.channel,
                &self.clock,
                sender,
                pos,
                *index,
                &bytes,
                &stations,
            );
            *index += 1;
            emit(Event::MsgSent {
                sender,
                message: msg.kind(),
                bytes: hex::encode(&bytes),
            });
            for receiver in outcome.dropped {
                emit(Event::MsgDropped {
                    sender,
                    receiver,
                    message: msg.kind(),
                });
            }
            self.mailbox.extend(outcome.scheduled);
        }

        emit(Event::PositionSample {
            robot: self.robot.position(),
            vehicles: self
                .scenario
                .vehicles
                .iter()
                .zip(&self.vehicles)
                .map(|(s, st)| VehicleSample {
                    id: s.station_id,
                    position: st.kinematics.pos,
                    speed: st.kinematics.speed(),
                    heading: st.kinematics.heading(),
                })
                .collect(),
            pedestrians: self
                .scenario
                .pedestrians
                .iter()
                .zip(&self.pedestrians)
                .map(|(s, st)| PedestrianSample {
                    id: s.id,
                    position: st.position,
                    mode: st.mode,
                })
                .collect(),
        });

        let zod = self.scenario.robot.zod;
        for (script, ped) in self.scenario.pedestrians.iter().zip(&self.pedestrians) {
            if !ped.mode.is_active() || !zod.contains(ped.position) {
                continue;
            }
            if self.robot.phase == Phase::ReactToHazard && self.flagged_against_stop.insert(script.id) {
                emit(Event::Violation {
                    reason: ViolationKind::EnteredAgainstStop,
                    pedestrian: script.id,
                    vehicle: None,
                    distance: None,
                });
            }
            for (vs, v) in self.scenario.vehicles.iter().zip(&self.vehicles) {
                let d = ped.position.distance(v.kinematics.pos);
                if zod.contains(v.kinematics.pos) && d < CONFLICT_DISTANCE_M {
                    emit(Event::Violation {
                        reason: ViolationKind::Conflict,
                        pedestrian: script.id,
                        vehicle: Some(vs.station_id),
                        distance: Some(d),
                    });
                }
            }
        }

        for e in &events {
            self.fold.observe(e);
        }
        self.last_actions = actions;
        self.clock.advance();

        let all_crossed =
            !self.pedestrians.is_empty() && self.pedestrians.iter().all(|p| p.mode == PedestrianMode::Done);
        if self.clock.tick() >= self.scenario.duration_ticks
            || (all_crossed && self.robot.phase == Phase::Waiting)
        {
            self.finished = true;
        }
        events
    }
}

/// Runs a scenario to completion.
pub fn run(scenario: &Scenario) -> RunOutput {
    let mut sim = Simulation::new(scenario);
    let mut trace = Vec::new();
    while !sim.is_finished() {
        trace.extend(sim.step());
    }
    RunOutput {
        metrics: sim.metrics(),
        trace,
    }
}

//! Helpers shared by the integration test targets: independent oracles,
//! random input generators and trace checkers.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::path::PathBuf;

use rand::{Rng, RngExt};

use crossguard::agents::{Gesture, RobotAction};
use crossguard::geom::{predict_position, KinematicState, Point};
use crossguard::harness::{
    load_scenario, parse_scenario, Event, Scenario, TraceEvent, ViolationKind, CONFLICT_DISTANCE_M,
};
use crossguard::hazard::{TimeInterval, Zod};
use crossguard::messages::{
    Cam, CauseCode, Cpm, Denm, DenmAction, PerceivedObject, StationId, StationType, StubKind, V2xMessage,
};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.toml"))
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("golden")
        .join(name)
}

pub fn bundled(name: &str) -> Scenario {
    load_scenario(scenario_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub const BUNDLED: [&str; 4] = [
    "poc_kit_campus",
    "no_vehicles",
    "noncompliant_conflict",
    "lossy_junction",
];

// ---------------------------------------------------------------------------
// incursion oracle

/// Whether `t` lies within `tol` seconds of an endpoint of `interval`.
pub fn near_endpoint(interval: &TimeInterval, t: f64, tol: f64) -> bool {
    match *interval {
        TimeInterval::Bounded { entry, exit } => (t - entry).abs() <= tol || (t - exit).abs() <= tol,
        _ => false,
    }
}

/// Samples the straight-line trajectory on `[from, to]` with step `dt` and
/// reports every sample where the interval disagrees with direct containment,
/// ignoring samples within `tol` of an endpoint. Past-only incursions are
/// reported as `Empty`, so for those only `t >= 0` is compared.
pub fn interval_disagreements(
    zod: &Zod,
    state: &KinematicState,
    interval: &TimeInterval,
    (from, to, dt): (f64, f64, f64),
    tol: f64,
) -> Vec<f64> {
    let n = ((to - from) / dt).round() as i64;
    let mut bad = Vec::new();
    for i in 0..=n {
        let t = from + i as f64 * dt;
        if t < 0.0 && interval.is_empty() {
            continue;
        }
        let truth = zod.contains(predict_position(state, t));
        if truth != interval.covers(t) && !near_endpoint(interval, t, tol) {
            bad.push(t);
        }
    }
    bad
}

pub fn random_zod<R: Rng>(rng: &mut R) -> Zod {
    let anchor = Point::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
    let mut ext = || {
        if rng.random_bool(0.1) {
            0.0
        } else {
            rng.random_range(0.5..40.0)
        }
    };
    let (ll, rl, uw, lw) = (ext(), ext(), ext(), ext());
    // keep the zone at least a little wide in each direction
    let (ll, rl) = if ll + rl == 0.0 { (1.0, rl) } else { (ll, rl) };
    let (uw, lw) = if uw + lw == 0.0 { (uw, 1.0) } else { (uw, lw) };
    Zod::new(anchor, ll, rl, uw, lw).expect("valid extents")
}

pub fn random_state<R: Rng>(rng: &mut R, zod: &Zod) -> KinematicState {
    let a = zod.anchor();
    let pos = Point::new(
        a.x + rng.random_range(-120.0..120.0),
        a.y + rng.random_range(-120.0..120.0),
    );
    let speed = match rng.random_range(0..10) {
        0 => 0.0,
        _ => rng.random_range(0.0..15.0),
    };
    let heading = match rng.random_range(0..5) {
        0 => [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2][rng.random_range(0..4)],
        _ => rng.random_range(0.0..TAU),
    };
    // aim a share of the trajectories at the zone so that incursions are common
    let heading = if rng.random_bool(0.4) {
        let target = Point::new(
            rng.random_range(zod.min_x()..=zod.max_x()),
            rng.random_range(zod.min_y()..=zod.max_y()),
        );
        (target.y - pos.y).atan2(target.x - pos.x).rem_euclid(TAU) % TAU
    } else {
        heading
    };
    KinematicState::new(pos, speed, heading).expect("finite state")
}

// ---------------------------------------------------------------------------
// messages

fn random_real<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    match rng.random_range(0..12) {
        0 => lo,
        1 => 0.0_f64.clamp(lo, hi),
        _ => rng.random_range(lo..hi),
    }
}

fn random_station_type<R: Rng>(rng: &mut R) -> StationType {
    StationType::ALL[rng.random_range(0..StationType::ALL.len())]
}

pub fn random_message<R: Rng>(rng: &mut R) -> V2xMessage {
    match rng.random_range(0..4) {
        0 => V2xMessage::Cam(Cam {
            station_id: StationId(rng.random()),
            station_type: random_station_type(rng),
            latitude: random_real(rng, -90.0, 90.0),
            longitude: random_real(rng, -180.0, 180.0),
            speed: random_real(rng, 0.0, 60.0),
            heading: random_real(rng, 0.0, TAU),
            generation_tick: rng.random(),
        }),
        1 => V2xMessage::Denm(Denm {
            station_id: StationId(rng.random()),
            cause_code: CauseCode::ALL[rng.random_range(0..CauseCode::ALL.len())],
            event_latitude: random_real(rng, -90.0, 90.0),
            event_longitude: random_real(rng, -180.0, 180.0),
            action: if rng.random_bool(0.5) {
                DenmAction::New
            } else {
                DenmAction::Terminate
            },
            sequence_number: rng.random(),
        }),
        2 => V2xMessage::Cpm(Cpm {
            station_id: StationId(rng.random()),
            origin_latitude: random_real(rng, -90.0, 90.0),
            origin_longitude: random_real(rng, -180.0, 180.0),
            objects: (0..rng.random_range(0..8))
                .map(|_| PerceivedObject {
                    rel_position: Point::new(random_real(rng, -1e4, 1e4), random_real(rng, -1e4, 1e4)),
                    speed: random_real(rng, 0.0, 60.0),
                    heading: random_real(rng, 0.0, TAU),
                    object_type: random_station_type(rng),
                    confidence: random_real(rng, 0.0, 1.0),
                })
                .collect(),
        }),
        _ => V2xMessage::Stub {
            kind: StubKind::ALL[rng.random_range(0..StubKind::ALL.len())],
            payload: (0..rng.random_range(0..64)).map(|_| rng.random()).collect(),
        },
    }
}

/// A copy of `bytes` with one random corruption applied.
pub fn mutate<R: Rng>(rng: &mut R, bytes: &[u8]) -> Vec<u8> {
    let mut out = bytes.to_vec();
    match rng.random_range(0..4) {
        0 if !out.is_empty() => {
            let i = rng.random_range(0..out.len());
            out[i] ^= 1 << rng.random_range(0..8);
        }
        1 if !out.is_empty() => {
            let i = rng.random_range(0..out.len());
            out[i] = rng.random();
        }
        2 => {
            let n = rng.random_range(0..=out.len());
            out.truncate(n);
        }
        _ => out.extend((0..rng.random_range(1..4)).map(|_| rng.random::<u8>())),
    }
    out
}

// ---------------------------------------------------------------------------
// traces

/// Conflicts recomputed from the position samples alone.
pub fn recompute_conflicts(trace: &[TraceEvent], zod: &Zod) -> Vec<(u64, u32, StationId)> {
    let mut out = Vec::new();
    for e in trace {
        if let Event::PositionSample {
            vehicles,
            pedestrians,
            ..
        } = &e.event
        {
            for p in pedestrians {
                if !p.mode.is_active() || !zod.contains(p.position) {
                    continue;
                }
                for v in vehicles {
                    if zod.contains(v.position) && p.position.distance(v.position) < CONFLICT_DISTANCE_M {
                        out.push((e.tick, p.id, v.id));
                    }
                }
            }
        }
    }
    out
}

pub fn reported_conflicts(trace: &[TraceEvent]) -> Vec<(u64, u32, StationId)> {
    trace
        .iter()
        .filter_map(|e| match &e.event {
            Event::Violation {
                reason: ViolationKind::Conflict,
                pedestrian,
                vehicle: Some(v),
                ..
            } => Some((e.tick, *pedestrian, *v)),
            _ => None,
        })
        .collect()
}

/// Every DENM New is eventually followed by its Terminate, and at most one
/// DENM is active at a time.
pub fn check_denm_pairing(trace: &[TraceEvent], run_finished_early: bool) -> Result<(), String> {
    let mut active: Option<u32> = None;
    for e in trace {
        if let Event::Action {
            action: RobotAction::SendDenm { action, sequence },
        } = &e.event
        {
            match (action, active) {
                (DenmAction::New, None) => active = Some(*sequence),
                (DenmAction::New, Some(a)) if a == *sequence => {}
                (DenmAction::New, Some(a)) => {
                    return Err(format!(
                        "tick {}: DENM {sequence} opened while {a} active",
                        e.tick
                    ))
                }
                (DenmAction::Terminate, Some(a)) if a == *sequence => active = None,
                (DenmAction::Terminate, _) => {
                    return Err(format!(
                        "tick {}: DENM {sequence} terminated but not active",
                        e.tick
                    ))
                }
            }
        }
    }
    match active {
        Some(a) if run_finished_early => Err(format!("DENM {a} never terminated")),
        _ => Ok(()),
    }
}

pub fn phase_changes(trace: &[TraceEvent]) -> Vec<&TraceEvent> {
    trace
        .iter()
        .filter(|e| matches!(e.event, Event::PhaseChange { .. }))
        .collect()
}

pub fn actions_at(trace: &[TraceEvent], tick: u64) -> Vec<RobotAction> {
    trace
        .iter()
        .filter(|e| e.tick == tick)
        .filter_map(|e| match &e.event {
            Event::Action { action } => Some(action.clone()),
            _ => None,
        })
        .collect()
}

pub fn is_cross_gesture(a: &RobotAction) -> bool {
    matches!(a, RobotAction::Gesture(Gesture::Cross))
}

/// Dropped deliveries keyed by (tick, sender, receiver), counted.
pub fn drop_decisions(trace: &[TraceEvent]) -> BTreeMap<(u64, StationId, StationId), usize> {
    let mut out = BTreeMap::new();
    for e in trace {
        if let Event::MsgDropped { sender, receiver, .. } = &e.event {
            *out.entry((e.tick, *sender, *receiver)).or_default() += 1;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// random scenarios

/// A random street scene around a robot at the origin, written as a scenario
/// file and parsed back.
pub fn random_scenario<R: Rng>(rng: &mut R, index: usize) -> Scenario {
    let mut toml = format!(
        "name = \"random_{index}\"\nseed = {}\nduration_ticks = 800\n\n\
         [geo_ref]\nlat = 49.0126\nlon = 8.4165\n\n\
         [robot]\nstation_id = 1\nposition = [0.0, 0.0]\n\
         zod = {{ ll = 30.0, rl = 30.0, uw = 0.0, lw = 30.0 }}\n\
         threshold = {}\nsensor_range = {}\n\n\
         [channel]\nrange = {}\nloss_probability = {}\nlatency_ticks = {}\njitter_ticks = {}\n",
        rng.random::<u32>(),
        rng.random_range(1.0..10.0),
        if rng.random_bool(0.2) {
            0.0
        } else {
            rng.random_range(10.0..150.0)
        },
        rng.random_range(50.0..500.0),
        rng.random_range(0.0..=1.0),
        rng.random_range(0..=10),
        rng.random_range(0..=3),
    );
    for v in 0..rng.random_range(0..=5) {
        let eastbound = rng.random_bool(0.5);
        let heading = match rng.random_range(0..4) {
            0 => rng.random_range(0.0..TAU),
            _ if eastbound => 0.0,
            _ => PI,
        };
        let x = if eastbound {
            rng.random_range(-200.0..0.0)
        } else {
            rng.random_range(0.0..200.0)
        };
        toml += &format!(
            "\n[[vehicles]]\nstation_id = {}\nposition = [{x}, {}]\nspeed = {}\nheading = {heading}\n",
            10 + v,
            rng.random_range(-29.0..-1.0),
            rng.random_range(0.0..=15.0),
        );
        if rng.random_bool(0.3) {
            toml += &format!(
                "speed_changes = [{{ tick = {}, speed = {} }}]\n",
                rng.random_range(1..400),
                rng.random_range(0.0..=15.0)
            );
        }
    }
    for p in 0..rng.random_range(1..=2) {
        toml += &format!(
            "\n[[pedestrians]]\nid = {}\nspawn_tick = {}\nposition = [{}, {}]\nspeed = {}\nfaces_robot = {}\n",
            p + 1,
            rng.random_range(0..150),
            rng.random_range(-1.5..1.5),
            rng.random_range(1.0..6.0),
            rng.random_range(0.8..2.0),
            rng.random_bool(0.9),
        );
    }
    if rng.random_bool(0.3) {
        toml += &format!(
            "\n[[roadside_units]]\nstation_id = 50\nposition = [0.0, 8.0]\nsensor_range = {}\ncpm_interval_ticks = {}\n",
            rng.random_range(20.0..200.0),
            rng.random_range(1..20),
        );
    }
    parse_scenario(&toml).unwrap_or_else(|e| panic!("generated scenario invalid: {e}\n{toml}"))
}

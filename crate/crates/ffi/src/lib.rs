//! C ABI for the crossguard simulator.
//!
//! Every fallible function returns a [`CgStatus`]; on failure a description
//! is available from [`cg_last_error`] on the same thread. Scenarios and
//! simulations are opaque handles that must be released with their `_free`
//! function. Panics never cross the boundary: they are reported as
//! [`CgStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufWriter;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use crossguard::agents::Phase;
use crossguard::geom::{KinematicState, Point};
use crossguard::harness::{
    load_scenario, parse_scenario, run, write_trace, MetricsSummary, Scenario, ScenarioError, Simulation,
    TraceEvent,
};
use crossguard::hazard::{classify, incursion_interval, HazardTag, TimeInterval, Zod};
use crossguard::messages::{decode, encode, Cam, StationId, StationType, V2xMessage};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    IoError = 4,
    CodecError = 5,
    BufferTooSmall = 6,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgPhase {
    Waiting = 0,
    IdentifyCrossingIntent = 1,
    IdentifyHazard = 2,
    ReactToHazard = 3,
    Crossing = 4,
    PostInteraction = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgHazardTag {
    Safe = 0,
    Imminent = 1,
    Active = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgIntervalKind {
    Empty = 0,
    Bounded = 1,
    AlwaysInside = 2,
}

/// Zone of danger: anchor point plus left, right, upper and lower extents (m).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CgZod {
    pub anchor_x: f64,
    pub anchor_y: f64,
    pub ll: f64,
    pub rl: f64,
    pub uw: f64,
    pub lw: f64,
}

/// Position (m), speed (m/s) and heading (rad, 0 = +x, counter-clockwise).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CgState {
    pub x: f64,
    pub y: f64,
    pub speed: f64,
    pub heading: f64,
}

/// `entry` and `exit` are meaningful only for `Bounded`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CgInterval {
    pub kind: CgIntervalKind,
    pub entry: f64,
    pub exit: f64,
}

/// `min_ped_vehicle_distance` is meaningful only when `has_min_distance` is set.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CgMetrics {
    pub pedestrian_wait_ticks: u64,
    pub crossing_completed: bool,
    pub denm_count: u32,
    pub denm_delivery_ratio: f64,
    pub has_min_distance: bool,
    pub min_ped_vehicle_distance: f64,
    pub violations: u32,
}

/// `station_type` uses the on-air station type codes.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CgCam {
    pub station_id: u32,
    pub station_type: u8,
    pub latitude: f64,
    pub longitude: f64,
    pub speed: f64,
    pub heading: f64,
    pub generation_tick: u64,
}

/// Opaque scenario handle.
pub struct CgScenario {
    inner: Scenario,
}

/// Opaque simulation handle; keeps the trace produced so far.
pub struct CgSimulation {
    sim: Simulation,
    trace: Vec<TraceEvent>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CgStatus, String);

fn fail<T>(status: CgStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CgStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".to_owned());
            set_error(format!("panic: {msg}"));
            CgStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    match p.as_ref() {
        Some(r) => Ok(r),
        None => fail(CgStatus::NullPointer, format!("{what} is null")),
    }
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    match p.as_mut() {
        Some(r) => Ok(r),
        None => fail(CgStatus::NullPointer, format!("{what} is null")),
    }
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(CgStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(CgStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn scenario_failure(e: ScenarioError) -> Failure {
    let status = match e {
        ScenarioError::Io { .. } => CgStatus::IoError,
        _ => CgStatus::ParseError,
    };
    Failure(status, e.to_string())
}

fn metrics_out(m: &MetricsSummary) -> CgMetrics {
    CgMetrics {
        pedestrian_wait_ticks: m.pedestrian_wait_ticks,
        crossing_completed: m.crossing_completed,
        denm_count: m.denm_count,
        denm_delivery_ratio: m.denm_delivery_ratio,
        has_min_distance: m.min_ped_vehicle_distance.is_some(),
        min_ped_vehicle_distance: m.min_ped_vehicle_distance.unwrap_or(f64::NAN),
        violations: m.violations,
    }
}

/// Last error message on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn cg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---------------------------------------------------------------------------
// scenarios

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cg_scenario_load(path: *const c_char, out: *mut *mut CgScenario) -> CgStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let path = string(path, "path")?;
        let inner = load_scenario(path).map_err(scenario_failure)?;
        *out = Box::into_raw(Box::new(CgScenario { inner }));
        Ok(())
    })
}

/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cg_scenario_parse(text: *const c_char, out: *mut *mut CgScenario) -> CgStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let text = string(text, "text")?;
        let inner = parse_scenario(text).map_err(scenario_failure)?;
        *out = Box::into_raw(Box::new(CgScenario { inner }));
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from `cg_scenario_load` or `cg_scenario_parse`.
#[no_mangle]
pub unsafe extern "C" fn cg_scenario_set_seed(scenario: *mut CgScenario, seed: u64) -> CgStatus {
    guard(|| {
        let s = deref_mut(scenario, "scenario")?;
        s.inner = s.inner.clone().with_seed(seed);
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn cg_scenario_free(scenario: *mut CgScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs a scenario to completion.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cg_run(scenario: *const CgScenario, out: *mut CgMetrics) -> CgStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        let out = deref_mut(out, "out")?;
        *out = metrics_out(&run(&s.inner).metrics);
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// simulations

/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer. The
/// simulation keeps its own copy of the scenario.
#[no_mangle]
pub unsafe extern "C" fn cg_simulation_new(
    scenario: *const CgScenario,
    out: *mut *mut CgSimulation,
) -> CgStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        let out = deref_mut(out, "out")?;
        *out = Box::into_raw(Box::new(CgSimulation {
            sim: Simulation::new(&s.inner),
            trace: Vec::new(),
        }));
        Ok(())
    })
}

/// Advances one tick. `finished` is set once the run has ended; stepping a
/// finished simulation does nothing.
///
/// # Safety
/// `sim` must be a live handle; `finished` may be null.
#[no_mangle]
pub unsafe extern "C" fn cg_simulation_step(sim: *mut CgSimulation, finished: *mut bool) -> CgStatus {
    guard(|| {
        let h = deref_mut(sim, "simulation")?;
        let events = h.sim.step();
        h.trace.extend(events);
        if let Some(f) = finished.as_mut() {
            *f = h.sim.is_finished();
        }
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle and `tick` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cg_simulation_tick(sim: *const CgSimulation, tick: *mut u64) -> CgStatus {
    guard(|| {
        let h = deref(sim, "simulation")?;
        *deref_mut(tick, "tick")? = h.sim.clock().tick();
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle and `phase` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cg_simulation_phase(sim: *const CgSimulation, phase: *mut CgPhase) -> CgStatus {
    guard(|| {
        let h = deref(sim, "simulation")?;
        *deref_mut(phase, "phase")? = match h.sim.robot().phase {
            Phase::Waiting => CgPhase::Waiting,
            Phase::IdentifyCrossingIntent => CgPhase::IdentifyCrossingIntent,
            Phase::IdentifyHazard => CgPhase::IdentifyHazard,
            Phase::ReactToHazard => CgPhase::ReactToHazard,
            Phase::Crossing => CgPhase::Crossing,
            Phase::PostInteraction => CgPhase::PostInteraction,
        };
        Ok(())
    })
}

/// Metrics over the ticks run so far.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cg_simulation_metrics(sim: *const CgSimulation, out: *mut CgMetrics) -> CgStatus {
    guard(|| {
        let h = deref(sim, "simulation")?;
        *deref_mut(out, "out")? = metrics_out(&h.sim.metrics());
        Ok(())
    })
}

/// Writes the trace so far as JSON lines.
///
/// # Safety
/// `sim` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cg_simulation_write_trace(
    sim: *const CgSimulation,
    path: *const c_char,
) -> CgStatus {
    guard(|| {
        let h = deref(sim, "simulation")?;
        let path = string(path, "path")?;
        let f = File::create(path).or_else(|e| fail(CgStatus::IoError, format!("{path}: {e}")))?;
        write_trace(BufWriter::new(f), &h.trace).or_else(|e| fail(CgStatus::IoError, e.to_string()))
    })
}

/// # Safety
/// `sim` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn cg_simulation_free(sim: *mut CgSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

// ---------------------------------------------------------------------------
// hazard

fn zod_in(z: &CgZod) -> Result<Zod, Failure> {
    Zod::new(Point::new(z.anchor_x, z.anchor_y), z.ll, z.rl, z.uw, z.lw)
        .or_else(|e| fail(CgStatus::InvalidArgument, e.to_string()))
}

fn state_in(s: &CgState) -> Result<KinematicState, Failure> {
    KinematicState::new(Point::new(s.x, s.y), s.speed, s.heading)
        .or_else(|e| fail(CgStatus::InvalidArgument, e.to_string()))
}

/// Time window (s, relative to now) during which the state's straight-line
/// path lies inside the zone.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cg_incursion_interval(
    zod: *const CgZod,
    state: *const CgState,
    out: *mut CgInterval,
) -> CgStatus {
    guard(|| {
        let zod = zod_in(deref(zod, "zod")?)?;
        let state = state_in(deref(state, "state")?)?;
        let out = deref_mut(out, "out")?;
        *out = match incursion_interval(&zod, &state) {
            TimeInterval::Empty => CgInterval {
                kind: CgIntervalKind::Empty,
                entry: f64::NAN,
                exit: f64::NAN,
            },
            TimeInterval::Bounded { entry, exit } => CgInterval {
                kind: CgIntervalKind::Bounded,
                entry,
                exit,
            },
            TimeInterval::AlwaysInside => CgInterval {
                kind: CgIntervalKind::AlwaysInside,
                entry: f64::NEG_INFINITY,
                exit: f64::INFINITY,
            },
        };
        Ok(())
    })
}

/// # Safety
/// `interval` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cg_classify(
    interval: *const CgInterval,
    threshold: f64,
    out: *mut CgHazardTag,
) -> CgStatus {
    guard(|| {
        let i = deref(interval, "interval")?;
        let out = deref_mut(out, "out")?;
        if !(threshold.is_finite() && threshold > 0.0) {
            return fail(
                CgStatus::InvalidArgument,
                format!("threshold {threshold} must be positive"),
            );
        }
        let interval = match i.kind {
            CgIntervalKind::Empty => TimeInterval::Empty,
            CgIntervalKind::AlwaysInside => TimeInterval::AlwaysInside,
            CgIntervalKind::Bounded => {
                if !(i.entry.is_finite() && i.exit.is_finite() && i.entry <= i.exit) {
                    return fail(
                        CgStatus::InvalidArgument,
                        "bounded interval needs finite entry <= exit",
                    );
                }
                TimeInterval::Bounded {
                    entry: i.entry,
                    exit: i.exit,
                }
            }
        };
        *out = match classify(interval, threshold).tag {
            HazardTag::Safe => CgHazardTag::Safe,
            HazardTag::Imminent => CgHazardTag::Imminent,
            HazardTag::Active => CgHazardTag::Active,
        };
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// codec

/// Encodes a CAM into `buf`. `written` receives the encoded length; with
/// `BufferTooSmall` it receives the length needed.
///
/// # Safety
/// `cam` and `written` must be valid; `buf` must hold `capacity` bytes (may be
/// null when `capacity` is 0).
#[no_mangle]
pub unsafe extern "C" fn cg_cam_encode(
    cam: *const CgCam,
    buf: *mut u8,
    capacity: usize,
    written: *mut usize,
) -> CgStatus {
    guard(|| {
        let c = deref(cam, "cam")?;
        let written = deref_mut(written, "written")?;
        let Some(station_type) = StationType::from_code(c.station_type) else {
            return fail(
                CgStatus::InvalidArgument,
                format!("unknown station type {}", c.station_type),
            );
        };
        let msg = V2xMessage::Cam(Cam {
            station_id: StationId(c.station_id),
            station_type,
            latitude: c.latitude,
            longitude: c.longitude,
            speed: c.speed,
            heading: c.heading,
            generation_tick: c.generation_tick,
        });
        let bytes = encode(&msg).or_else(|e| fail(CgStatus::CodecError, e.to_string()))?;
        *written = bytes.len();
        if bytes.len() > capacity {
            return fail(
                CgStatus::BufferTooSmall,
                format!("need {} bytes, have {capacity}", bytes.len()),
            );
        }
        if buf.is_null() {
            return fail(CgStatus::NullPointer, "buf is null");
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
        Ok(())
    })
}

/// # Safety
/// `buf` must hold `len` bytes and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cg_cam_decode(buf: *const u8, len: usize, out: *mut CgCam) -> CgStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let bytes = if len == 0 {
            &[][..]
        } else if buf.is_null() {
            return fail(CgStatus::NullPointer, "buf is null");
        } else {
            std::slice::from_raw_parts(buf, len)
        };
        match decode(bytes) {
            Ok(V2xMessage::Cam(c)) => {
                *out = CgCam {
                    station_id: c.station_id.0,
                    station_type: c.station_type.code(),
                    latitude: c.latitude,
                    longitude: c.longitude,
                    speed: c.speed,
                    heading: c.heading,
                    generation_tick: c.generation_tick,
                };
                Ok(())
            }
            Ok(other) => fail(
                CgStatus::CodecError,
                format!("expected a CAM, found {:?}", other.kind()),
            ),
            Err(e) => fail(CgStatus::CodecError, e.to_string()),
        }
    })
}

//! Scenario ingestion, the simulation loop, traces, metrics and sweeps.

mod metrics;
mod scenario;
mod sim;
mod sweep;
mod trace;

pub use metrics::{metrics_from_trace, MetricsFold, MetricsSummary};
pub use scenario::{load_scenario, parse_scenario, RoadsideUnit, Scenario, ScenarioError};
pub use sim::{run, RunOutput, Simulation, CONFLICT_DISTANCE_M, SENSOR_CONFIDENCE};
pub use sweep::{format_table, sweep, SweepParam, SweepRow};
pub use trace::{
    read_trace, write_trace, Event, PedestrianSample, TraceError, TraceEvent, VehicleSample, ViolationKind,
};

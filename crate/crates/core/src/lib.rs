//! Deterministic simulation of a robot that mediates pedestrian road crossings.
//!
//! The robot watches for pedestrians, listens to V2X traffic (CAM, DENM, CPM)
//! over a lossy broadcast channel, predicts whether any vehicle will enter its
//! zone of danger soon, and either holds the pedestrian back (warning the
//! vehicle with a DENM) or signals that crossing is safe.
//!
//! Modules, bottom-up:
//!
//! - [`geom`]: local frame, kinematics, clock
//! - [`hazard`]: zone of danger and incursion intervals
//! - [`messages`]: message schemas, binary codec, perception fusion
//! - [`netsim`]: broadcast channel
//! - [`agents`]: robot state machine, e-bike and pedestrian scripts
//! - [`harness`]: scenarios, simulation loop, traces, metrics, sweeps

pub mod agents;
pub mod geom;
pub mod harness;
pub mod hazard;
pub mod messages;
pub mod netsim;

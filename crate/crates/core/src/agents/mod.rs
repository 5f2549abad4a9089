//! Simulated actors: the mediating robot and the scripted road users around it.

mod ebike;
mod pedestrian;
mod robot;

pub use ebike::{ebike_cam, ebike_step, EbikeScript, EbikeState, SpeedChange, WARNING_TEXT};
pub use pedestrian::{
    pedestrian_step, CrossingSite, PedestrianMode, PedestrianScript, PedestrianState, APPROACH_DISTANCE_M,
};
pub use robot::{
    robot_step, GeneralPhase, Gesture, KnownVehicle, Observation, PedestrianSighting, Phase, RobotAction,
    RobotConfig, RobotState, RobotTimers, TrackId, DETECTION_RANGE_M, SAY_CROSS, SAY_STOP,
};

//! Run metrics, computed as a fold over trace events so that a stored trace
//! reproduces them exactly.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::trace::{Event, TraceEvent, ViolationKind};
use crate::agents::{PedestrianMode, RobotAction};
use crate::messages::{DenmAction, MessageKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    /// Ticks spent waiting at the kerb, summed over pedestrians.
    pub pedestrian_wait_ticks: u64,
    /// Every pedestrian reached the far side.
    pub crossing_completed: bool,
    /// Distinct DENMs raised by the robot.
    pub denm_count: u32,
    /// Delivered / (delivered + lost) DENM transmissions; 1.0 when none were attempted.
    pub denm_delivery_ratio: f64,
    /// Closest pedestrian-vehicle approach; absent when they never coexisted.
    pub min_ped_vehicle_distance: Option<f64>,
    /// Pedestrian-vehicle conflicts inside the zone.
    pub violations: u32,
}

#[derive(Debug, Clone, Default)]
pub struct MetricsFold {
    wait_ticks: u64,
    pedestrians: BTreeMap<u32, bool>,
    denms: BTreeSet<u32>,
    denm_delivered: u64,
    denm_dropped: u64,
    min_distance: Option<f64>,
    violations: u32,
}

impl MetricsFold {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, event: &TraceEvent) {
        match &event.event {
            Event::Action {
                action:
                    RobotAction::SendDenm {
                        action: DenmAction::New,
                        sequence,
                    },
            } => {
                self.denms.insert(*sequence);
            }
            Event::MsgDelivered {
                message: MessageKind::Denm,
                ..
            } => self.denm_delivered += 1,
            Event::MsgDropped {
                message: MessageKind::Denm,
                ..
            } => self.denm_dropped += 1,
            Event::PositionSample {
                vehicles,
                pedestrians,
                ..
            } => {
                for p in pedestrians {
                    let done = self.pedestrians.entry(p.id).or_insert(false);
                    *done |= p.mode == PedestrianMode::Done;
                    if p.mode == PedestrianMode::Waiting {
                        self.wait_ticks += 1;
                    }
                    if !p.mode.is_active() {
                        continue;
                    }
                    for v in vehicles {
                        let d = p.position.distance(v.position);
                        self.min_distance = Some(self.min_distance.map_or(d, |m| m.min(d)));
                    }
                }
            }
            Event::Violation {
                reason: ViolationKind::Conflict,
                ..
            } => self.violations += 1,
            _ => {}
        }
    }

    pub fn summary(&self) -> MetricsSummary {
        let attempts = self.denm_delivered + self.denm_dropped;
        MetricsSummary {
            pedestrian_wait_ticks: self.wait_ticks,
            crossing_completed: !self.pedestrians.is_empty() && self.pedestrians.values().all(|done| *done),
            denm_count: self.denms.len() as u32,
            denm_delivery_ratio: if attempts == 0 {
                1.0
            } else {
                self.denm_delivered as f64 / attempts as f64
            },
            min_ped_vehicle_distance: self.min_distance,
            violations: self.violations,
        }
    }
}

/// Recomputes metrics from a trace.
pub fn metrics_from_trace(events: &[TraceEvent]) -> MetricsSummary {
    let mut fold = MetricsFold::new();
    for e in events {
        fold.observe(e);
    }
    fold.summary()
}

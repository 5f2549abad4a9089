//! Parameter sweeps over a base scenario.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use super::metrics::MetricsSummary;
use super::scenario::{Scenario, ScenarioError};
use super::sim::run;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    LossProbability,
    LatencyTicks,
    Threshold,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::LossProbability => "loss_probability",
            SweepParam::LatencyTicks => "latency_ticks",
            SweepParam::Threshold => "threshold",
        }
    }

    fn apply(self, scenario: &mut Scenario, value: f64) -> Result<(), ScenarioError> {
        let bad = |reason: String| ScenarioError::Validation {
            field: self.name().to_owned(),
            reason,
        };
        match self {
            SweepParam::LossProbability => {
                if !(0.0..=1.0).contains(&value) {
                    return Err(bad(format!("{value} is outside [0, 1]")));
                }
                scenario.channel.loss_probability = value;
            }
            SweepParam::LatencyTicks => {
                if !(value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                    return Err(bad(format!("{value} is not a tick count")));
                }
                scenario.channel.latency_ticks = value as u64;
            }
            SweepParam::Threshold => {
                if !(value.is_finite() && value > 0.0) {
                    return Err(bad(format!("{value} must be positive")));
                }
                scenario.robot.threshold = value;
            }
        }
        Ok(())
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "loss_probability" | "loss" => Ok(SweepParam::LossProbability),
            "latency_ticks" | "latency" => Ok(SweepParam::LatencyTicks),
            "threshold" => Ok(SweepParam::Threshold),
            other => Err(format!(
                "unknown parameter {other:?} (expected loss_probability, latency_ticks or threshold)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub seed: u64,
    pub metrics: MetricsSummary,
}

/// One run per value, seeded with `scenario.seed ^ index`. Rows keep the order of `values`.
pub fn sweep(scenario: &Scenario, param: SweepParam, values: &[f64]) -> Result<Vec<SweepRow>, ScenarioError> {
    let variants = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let seed = scenario.seed ^ i as u64;
            let mut s = scenario.clone().with_seed(seed);
            param.apply(&mut s, v)?;
            Ok((v, seed, s))
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;
    Ok(variants
        .into_par_iter()
        .map(|(value, seed, s)| SweepRow {
            value,
            seed,
            metrics: run(&s).metrics,
        })
        .collect())
}

pub fn format_table(param: SweepParam, rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>16} {:>20} {:>10} {:>9} {:>10} {:>12} {:>10}",
        param.name(),
        "seed",
        "wait_ticks",
        "completed",
        "denm_count",
        "denm_ratio",
        "violations"
    );
    for r in rows {
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{:>16} {:>20} {:>10} {:>9} {:>10} {:>12.4} {:>10}",
            r.value,
            r.seed,
            m.pedestrian_wait_ticks,
            m.crossing_completed,
            m.denm_count,
            m.denm_delivery_ratio,
            m.violations
        );
    }
    out
}

//! Broadcast radio channel with range cutoff, per-receiver loss and latency.
//!
//! Random decisions come from a ChaCha stream seeded by the tuple
//! `(seed, sender, tick, message index, receiver)`, so outcomes do not depend on
//! the order in which stations are visited.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Point, SimClock};
use crate::messages::StationId;

/// Nominal V2X radio range.
pub const DEFAULT_RANGE_M: f64 = 400.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("loss_probability must be within [0, 1], got {0}")]
    LossProbability(f64),
    #[error("range must be positive and finite, got {0}")]
    Range(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub range: f64,
    pub loss_probability: f64,
    pub latency_ticks: u64,
    pub jitter_ticks: u64,
    pub seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            range: DEFAULT_RANGE_M,
            loss_probability: 0.0,
            latency_ticks: 1,
            jitter_ticks: 0,
            seed: 0,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(0.0..=1.0).contains(&self.loss_probability) {
            return Err(ChannelError::LossProbability(self.loss_probability));
        }
        if !(self.range.is_finite() && self.range > 0.0) {
            return Err(ChannelError::Range(self.range));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InFlightMessage {
    pub payload: Vec<u8>,
    pub sender: StationId,
    pub sender_pos: Point,
    pub sent_at: u64,
    pub deliver_at: u64,
    pub receiver: StationId,
}

/// Result of one broadcast: scheduled deliveries and loss victims.
/// Receivers out of range appear in neither list.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BroadcastOutcome {
    pub scheduled: Vec<InFlightMessage>,
    pub dropped: Vec<StationId>,
}

fn stream(seed: u64, sender: StationId, tick: u64, index: u32, receiver: StationId) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..12].copy_from_slice(&sender.0.to_le_bytes());
    key[12..20].copy_from_slice(&tick.to_le_bytes());
    key[20..24].copy_from_slice(&index.to_le_bytes());
    key[24..28].copy_from_slice(&receiver.0.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Decides the fate of one message towards every other station.
///
/// `index` distinguishes several messages sent by the same station in the same
/// tick; it is part of the random-stream key.
pub fn broadcast(
    config: &ChannelConfig,
    clock: &SimClock,
    sender: StationId,
    sender_pos: Point,
    index: u32,
    msg_bytes: &[u8],
    stations: &[(StationId, Point)],
) -> BroadcastOutcome {
    let tick = clock.tick();
    let mut out = BroadcastOutcome::default();
    for &(receiver, pos) in stations {
        if receiver == sender || sender_pos.distance(pos) > config.range {
            continue;
        }
        let mut rng = stream(config.seed, sender, tick, index, receiver);
        let roll: f64 = rng.random();
        if roll < config.loss_probability {
            out.dropped.push(receiver);
            continue;
        }
        let jitter = if config.jitter_ticks > 0 {
            rng.random_range(0..=config.jitter_ticks)
        } else {
            0
        };
        out.scheduled.push(InFlightMessage {
            payload: msg_bytes.to_vec(),
            sender,
            sender_pos,
            sent_at: tick,
            deliver_at: tick + config.latency_ticks + jitter,
            receiver,
        });
    }
    out
}

/// Pending deliveries, released in `(deliver_at, sender, insertion)` order.
#[derive(Debug, Default)]
pub struct Mailbox {
    pending: Vec<(u64, InFlightMessage)>,
    inserted: u64,
}

impl Mailbox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, msg: InFlightMessage) {
        self.pending.push((self.inserted, msg));
        self.inserted += 1;
    }

    pub fn extend<I: IntoIterator<Item = InFlightMessage>>(&mut self, msgs: I) {
        for m in msgs {
            self.push(m);
        }
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    /// Removes and returns everything due at or before the clock's tick.
    pub fn poll(&mut self, clock: &SimClock) -> Vec<InFlightMessage> {
        let now = clock.tick();
        let (mut due, keep): (Vec<_>, Vec<_>) = std::mem::take(&mut self.pending)
            .into_iter()
            .partition(|(_, m)| m.deliver_at <= now);
        self.pending = keep;
        due.sort_by_key(|(seq, m)| (m.deliver_at, m.sender, *seq));
        due.into_iter().map(|(_, m)| m).collect()
    }
}

pub fn poll(clock: &SimClock, mailbox: &mut Mailbox) -> Vec<(StationId, Vec<u8>)> {
    mailbox
        .poll(clock)
        .into_iter()
        .map(|m| (m.receiver, m.payload))
        .collect()
}

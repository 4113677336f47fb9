//! Queue admission control: the per-arrival decision interface and the
//! classic controllers (DropTail, RED, Blue, PI).

mod blue;
mod pi;
mod red;

pub use blue::{BlueParams, BlueState};
pub use pi::{PiParams, PiState};
pub use red::{RedParams, RedState};

use rand::RngCore;

use crate::sim::{QueueState, SimTime};

/// Verdict on an arriving packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AqmDecision {
    Enqueue,
    Drop,
}

/// Admission policy in front of the bottleneck buffer.
///
/// The engine consults `decide` once per arrival with the pre-admission
/// queue snapshot, and additionally enforces the physical buffer bound:
/// if a controller says enqueue while the buffer is full, the packet is
/// dropped anyway and the controller hears about it via `on_forced_drop`.
pub trait Aqm: Send {
    fn name(&self) -> &'static str;

    fn decide(&mut self, queue: &QueueState, now: SimTime, rng: &mut dyn RngCore) -> AqmDecision;

    /// The link just went idle: empty buffer, nothing in service.
    fn on_idle(&mut self, _now: SimTime) {}

    /// The engine dropped the packet on buffer overflow after an
    /// enqueue decision.
    fn on_forced_drop(&mut self, _now: SimTime) {}

    /// Periodic controller sampling, scheduled every `tick_interval()`
    /// seconds when that returns `Some`.
    fn on_tick(&mut self, _queue: &QueueState, _now: SimTime) {}

    fn tick_interval(&self) -> Option<f64> {
        None
    }
}

/// Drops only on buffer overflow.
#[derive(Debug, Clone, Copy, Default)]
pub struct DropTail;

impl Aqm for DropTail {
    fn name(&self) -> &'static str {
        "droptail"
    }

    fn decide(&mut self, queue: &QueueState, _now: SimTime, _rng: &mut dyn RngCore) -> AqmDecision {
        if queue.is_full() {
            AqmDecision::Drop
        } else {
            AqmDecision::Enqueue
        }
    }
}

/// One uniform draw against `p`. p <= 0 never drops, p >= 1 always does.
pub(crate) fn bernoulli(p: f64, rng: &mut dyn RngCore) -> bool {
    use rand::Rng;
    rng.gen::<f64>() < p
}

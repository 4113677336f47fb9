//! Blue: a single marking probability adjusted by events — up on buffer
//! overflow, down on link idle — independent of queue length.

use rand::RngCore;

use crate::sim::{QueueState, SimTime};

use super::{bernoulli, Aqm, AqmDecision};

#[derive(Debug, Clone, Copy)]
pub struct BlueParams {
    /// Added to p_m on an overflow loss (d1).
    pub increment: f64,
    /// Subtracted from p_m on a link-idle event (d2).
    pub decrement: f64,
    /// Minimum spacing between successive p_m updates.
    pub freeze_time_s: f64,
}

impl Default for BlueParams {
    fn default() -> Self {
        BlueParams {
            increment: 0.02,
            decrement: 0.002,
            freeze_time_s: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BlueState {
    params: BlueParams,
    p_m: f64,
    last_update: Option<SimTime>,
}

impl BlueState {
    pub fn new(params: BlueParams) -> BlueState {
        assert!(params.increment > 0.0 && params.increment <= 1.0);
        assert!(params.decrement > 0.0 && params.decrement <= 1.0);
        assert!(params.freeze_time_s > 0.0);
        BlueState {
            params,
            p_m: 0.0,
            last_update: None,
        }
    }

    pub fn params(&self) -> &BlueParams {
        &self.params
    }

    pub fn marking_prob(&self) -> f64 {
        self.p_m
    }

    #[cfg(test)]
    pub(crate) fn set_marking_prob(&mut self, p: f64) {
        self.p_m = p;
    }

    fn frozen(&self, now: SimTime) -> bool {
        matches!(self.last_update, Some(t)
            if now.as_secs() - t.as_secs() < self.params.freeze_time_s)
    }

    /// A buffer-overflow loss occurred: push p_m up, at most once per
    /// freeze window.
    pub fn on_overflow(&mut self, now: SimTime) {
        if self.frozen(now) {
            return;
        }
        self.p_m = (self.p_m + self.params.increment).min(1.0);
        self.last_update = Some(now);
    }

    /// The link went idle: relax p_m, at most once per freeze window.
    pub fn on_idle_event(&mut self, now: SimTime) {
        if self.frozen(now) {
            return;
        }
        self.p_m = (self.p_m - self.params.decrement).max(0.0);
        self.last_update = Some(now);
    }
}

impl Aqm for BlueState {
    fn name(&self) -> &'static str {
        "blue"
    }

    fn decide(&mut self, queue: &QueueState, now: SimTime, rng: &mut dyn RngCore) -> AqmDecision {
        if queue.is_full() {
            self.on_overflow(now);
            return AqmDecision::Drop;
        }
        if bernoulli(self.p_m, rng) {
            AqmDecision::Drop
        } else {
            AqmDecision::Enqueue
        }
    }

    fn on_idle(&mut self, now: SimTime) {
        self.on_idle_event(now);
    }

    fn on_forced_drop(&mut self, now: SimTime) {
        self.on_overflow(now);
    }
}

//! Random Early Detection: probabilistic early dropping driven by an EWMA
//! of the queue length between two thresholds.

use rand::RngCore;

use crate::sim::{QueueState, SimTime};

use super::{bernoulli, Aqm, AqmDecision};

#[derive(Debug, Clone, Copy)]
pub struct RedParams {
    /// EWMA weight, in (0, 1].
    pub w_q: f64,
    /// No early drops while the average sits below this.
    pub min_th: f64,
    /// Everything is dropped once the average reaches this.
    pub max_th: f64,
    /// Drop probability at the top of the linear ramp, in (0, 1].
    pub max_p: f64,
    /// Spread drops evenly by inflating the ramp probability with the
    /// count of packets admitted since the last drop.
    pub count_correction: bool,
    /// Typical per-packet service time; sets how many EWMA steps toward
    /// zero an idle gap is worth.
    pub idle_service_time_s: f64,
}

impl Default for RedParams {
    fn default() -> Self {
        RedParams {
            w_q: 0.002,
            min_th: 100.0,
            max_th: 300.0,
            max_p: 0.1,
            count_correction: true,
            idle_service_time_s: 0.004,
        }
    }
}

/// Controller state: the queue-length average, and the packet count since
/// the last drop used by the count correction.
#[derive(Debug, Clone)]
pub struct RedState {
    params: RedParams,
    avg: f64,
    count: u64,
    idle_since: Option<SimTime>,
}

impl RedState {
    pub fn new(params: RedParams) -> RedState {
        assert!(
            params.w_q > 0.0 && params.w_q <= 1.0,
            "w_q must be in (0,1]"
        );
        assert!(params.min_th < params.max_th, "min_th must be below max_th");
        assert!(
            params.max_p > 0.0 && params.max_p <= 1.0,
            "max_p must be in (0,1]"
        );
        assert!(params.idle_service_time_s > 0.0);
        RedState {
            params,
            avg: 0.0,
            count: 0,
            idle_since: None,
        }
    }

    pub fn params(&self) -> &RedParams {
        &self.params
    }

    pub fn avg(&self) -> f64 {
        self.avg
    }

    #[cfg(test)]
    pub(crate) fn set_avg(&mut self, avg: f64) {
        self.avg = avg;
    }

    /// One EWMA step toward the instantaneous queue length.
    pub fn avg_update(&mut self, q: f64) {
        debug_assert!(q >= 0.0);
        self.avg = (1.0 - self.params.w_q) * self.avg + self.params.w_q * q;
    }

    /// Decay the average as if the queue had been empty for the whole
    /// idle gap, applied lazily on the next arrival.
    fn apply_idle_decay(&mut self, now: SimTime) {
        if let Some(t0) = self.idle_since.take() {
            let gap = (now.as_secs() - t0.as_secs()).max(0.0);
            let steps = gap / self.params.idle_service_time_s;
            self.avg *= (1.0 - self.params.w_q).powf(steps);
        }
    }

    /// Drop probability for the currently held average: zero below
    /// `min_th`, one at or above `max_th`, a linear ramp in between,
    /// optionally inflated by the inter-drop count.
    pub fn drop_prob(&self) -> f64 {
        let p = &self.params;
        if self.avg < p.min_th {
            return 0.0;
        }
        if self.avg >= p.max_th {
            return 1.0;
        }
        let p_b = p.max_p * (self.avg - p.min_th) / (p.max_th - p.min_th);
        if !p.count_correction {
            return p_b.clamp(0.0, 1.0);
        }
        let denom = 1.0 - self.count as f64 * p_b;
        if denom <= 0.0 {
            1.0
        } else {
            (p_b / denom).clamp(0.0, 1.0)
        }
    }
}

impl Aqm for RedState {
    fn name(&self) -> &'static str {
        "red"
    }

    fn decide(&mut self, queue: &QueueState, now: SimTime, rng: &mut dyn RngCore) -> AqmDecision {
        self.apply_idle_decay(now);
        self.avg_update(queue.occupancy as f64);
        if self.avg < self.params.min_th {
            self.count = 0;
            return AqmDecision::Enqueue;
        }
        let p = self.drop_prob();
        if bernoulli(p, rng) {
            self.count = 0;
            AqmDecision::Drop
        } else {
            if self.avg < self.params.max_th {
                self.count += 1;
            }
            AqmDecision::Enqueue
        }
    }

    fn on_idle(&mut self, now: SimTime) {
        if self.idle_since.is_none() {
            self.idle_since = Some(now);
        }
    }

    fn on_forced_drop(&mut self, _now: SimTime) {
        self.count = 0;
    }
}

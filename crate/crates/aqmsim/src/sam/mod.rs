//! SAM: the SVM-backed admission controller. Classifies the buffer
//! utilization pattern observed at the last five packet arrivals into
//! drop / enqueue, using a model trained offline on generated patterns.

mod dataset;

pub use dataset::{gen_dataset, train_sam, DatasetError, SamTrainError, TrainReport};

use rand::RngCore;

use crate::aqm::{Aqm, AqmDecision};
use crate::sim::{QueueState, SimTime};
use crate::svm::{Features, SvmModel, FEATURE_DIM};

/// Sliding window over the buffer utilization seen at the last five
/// packet arrivals, oldest first. Slots not yet filled read as zero — at
/// start-up an empty history and an empty queue coincide, which biases
/// cold-start decisions toward enqueue.
#[derive(Debug, Clone, Default)]
pub struct PatternWindow {
    ring: Features,
    filled: usize,
}

impl PatternWindow {
    pub fn new() -> PatternWindow {
        PatternWindow::default()
    }

    /// Record the pre-admission utilization for an arriving packet. Must
    /// run before the drop decision so the pattern never depends on the
    /// decision's own outcome.
    pub fn record_arrival(&mut self, queue: &QueueState) {
        self.push(queue.utilization());
    }

    pub fn push(&mut self, utilization: f64) {
        debug_assert!((0.0..=1.0).contains(&utilization));
        self.ring.copy_within(1.., 0);
        self.ring[FEATURE_DIM - 1] = utilization;
        self.filled = (self.filled + 1).min(FEATURE_DIM);
    }

    /// The 5-sample pattern, oldest first, zero-padded until five
    /// arrivals have been seen.
    pub fn features(&self) -> Features {
        self.ring
    }

    pub fn filled(&self) -> usize {
        self.filled
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error("weights must be non-negative with a positive sum")]
    BadWeights,
    #[error("theta must lie strictly between 0 and 1, got {0}")]
    BadTheta(f64),
    #[error("trend gain must be non-negative, got {0}")]
    BadGain(f64),
}

/// Deterministic teacher used to label utilization patterns: a
/// recency-weighted utilization level plus a linear trend term. Patterns
/// scoring above `theta` mean the buffer is filling and trending up, and
/// are labeled drop (+1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelPolicy {
    weights: [f64; FEATURE_DIM],
    pub theta: f64,
    pub trend_gain: f64,
}

impl Default for LabelPolicy {
    fn default() -> Self {
        LabelPolicy::new([1.0, 2.0, 3.0, 4.0, 5.0], 0.5, 2.0).expect("default policy is valid")
    }
}

impl LabelPolicy {
    /// Weights are normalized to sum to one.
    pub fn new(
        raw_weights: [f64; FEATURE_DIM],
        theta: f64,
        trend_gain: f64,
    ) -> Result<LabelPolicy, PolicyError> {
        if raw_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(PolicyError::BadWeights);
        }
        let sum: f64 = raw_weights.iter().sum();
        if sum <= 0.0 {
            return Err(PolicyError::BadWeights);
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(PolicyError::BadTheta(theta));
        }
        if !(trend_gain.is_finite() && trend_gain >= 0.0) {
            return Err(PolicyError::BadGain(trend_gain));
        }
        let mut weights = raw_weights;
        for w in &mut weights {
            *w /= sum;
        }
        Ok(LabelPolicy {
            weights,
            theta,
            trend_gain,
        })
    }

    pub fn weights(&self) -> &[f64; FEATURE_DIM] {
        &self.weights
    }

    /// Recency-weighted utilization plus trend:
    /// sum_i w_i u_i + g (u5 - u1) / 4.
    pub fn score(&self, x: &Features) -> f64 {
        let level: f64 = self.weights.iter().zip(x).map(|(w, u)| w * u).sum();
        let trend = (x[FEATURE_DIM - 1] - x[0]) / (FEATURE_DIM - 1) as f64;
        level + self.trend_gain * trend
    }

    /// +1 (drop) iff the score exceeds theta.
    pub fn label(&self, x: &Features) -> i8 {
        if self.score(x) > self.theta {
            1
        } else {
            -1
        }
    }
}

/// Model-backed verdict for one arrival. `window` must already contain
/// this arrival's pre-admission utilization. A full buffer drops
/// unconditionally; the model is only consulted when there is room.
pub fn sam_decision(model: &SvmModel, window: &PatternWindow, queue: &QueueState) -> AqmDecision {
    if queue.is_full() {
        return AqmDecision::Drop;
    }
    if model.classify(&window.features()) == 1 {
        AqmDecision::Drop
    } else {
        AqmDecision::Enqueue
    }
}

/// AQM adapter owning the trained model and the per-queue window.
pub struct SamAqm {
    model: SvmModel,
    window: PatternWindow,
}

impl SamAqm {
    pub fn new(model: SvmModel) -> SamAqm {
        SamAqm {
            model,
            window: PatternWindow::new(),
        }
    }

    pub fn model(&self) -> &SvmModel {
        &self.model
    }

    pub fn window(&self) -> &PatternWindow {
        &self.window
    }
}

impl Aqm for SamAqm {
    fn name(&self) -> &'static str {
        "sam"
    }

    fn decide(&mut self, queue: &QueueState, _now: SimTime, _rng: &mut dyn RngCore) -> AqmDecision {
        self.window.record_arrival(queue);
        sam_decision(&self.model, &self.window, queue)
    }
}

//! Binary support vector classifier with an RBF kernel.
//!
//! Everything needed by the SAM controller lives here: the kernel, a
//! small SMO trainer for the soft-margin dual, the decision function, and
//! the line-oriented text format models are saved in. Feature vectors are
//! fixed at five dimensions (buffer utilization at the last five packet
//! arrivals); the kernel enum leaves room for other kernels, but only RBF
//! is implemented.

mod model_file;
mod smo;

pub use model_file::{load_model, parse_model, save_model, write_model, ModelFileError};
pub use smo::{dual_objective, kkt_max_violation, smo_train, SmoOutput, TrainError};

/// Number of features per pattern.
pub const FEATURE_DIM: usize = 5;

/// A point in feature space, oldest utilization sample first.
pub type Features = [f64; FEATURE_DIM];

/// A labeled training pattern. `y` is +1 (drop) or -1 (enqueue).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub x: Features,
    pub y: i8,
}

impl Sample {
    pub fn new(x: Features, y: i8) -> Sample {
        assert!(y == 1 || y == -1, "label must be +1 or -1, got {y}");
        Sample { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Rbf,
}

/// exp(-gamma * ||x - z||^2). Symmetric, in (0, 1], and K(x, x) = 1.
pub fn rbf_kernel(x: &Features, z: &Features, gamma: f64) -> f64 {
    debug_assert!(gamma > 0.0);
    let mut d2 = 0.0;
    for k in 0..FEATURE_DIM {
        let d = x[k] - z[k];
        d2 += d * d;
    }
    (-gamma * d2).exp()
}

/// A trained classifier: f(x) = sum_i coeffs[i] * K(sv[i], x) + bias.
#[derive(Debug, Clone)]
pub struct SvmModel {
    pub kernel: KernelKind,
    /// RBF width, positive.
    pub gamma: f64,
    pub bias: f64,
    pub support_vectors: Vec<Features>,
    /// alpha_i * y_i for each support vector; same length as
    /// `support_vectors`, never empty.
    pub coeffs: Vec<f64>,
}

impl SvmModel {
    pub fn decision_value(&self, x: &Features) -> f64 {
        let mut f = self.bias;
        for (sv, c) in self.support_vectors.iter().zip(&self.coeffs) {
            f += c * rbf_kernel(sv, x, self.gamma);
        }
        f
    }

    /// Sign of the decision value. Exactly zero classifies as -1
    /// (enqueue): dropping is the costly action, so ties never punish
    /// traffic.
    pub fn classify(&self, x: &Features) -> i8 {
        if self.decision_value(x) > 0.0 {
            1
        } else {
            -1
        }
    }

    pub fn n_support(&self) -> usize {
        self.support_vectors.len()
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    /// Box constraint, positive.
    pub c: f64,
    /// RBF width, positive.
    pub gamma: f64,
    /// KKT tolerance, positive.
    pub tol: f64,
    /// Sweep budget before training gives up.
    pub max_passes: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 10.0,
            gamma: 2.0,
            tol: 1e-3,
            max_passes: 200,
        }
    }
}

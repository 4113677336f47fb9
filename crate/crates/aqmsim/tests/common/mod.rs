//! Shared helpers for the integration suites: canned configurations, a
//! lazily trained default model, and an independent projected-gradient
//! solver for the SVM dual used as the training oracle.

// each test binary uses a different subset
#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use aqmsim::config::{load_scenario, ControllerKind, Preset, ScenarioConfig};
use aqmsim::sam::LabelPolicy;
use aqmsim::sim::{RngStreams, StreamId};
use aqmsim::svm::{rbf_kernel, Sample, TrainConfig};

/// Desk-preset scenario for one controller and seed.
pub fn desk_config(controller: ControllerKind, seed: u64) -> ScenarioConfig {
    let mut cfg = load_scenario(None, Some(Preset::Desk), &[]).expect("desk preset is valid");
    cfg.controller = controller;
    cfg.seed = seed;
    // harmless for the classic controllers, required for sam
    cfg.sam_model_path = Some(default_model_path().clone());
    cfg
}

/// Train the default pipeline once per test binary and reuse the file.
pub fn default_model_path() -> &'static PathBuf {
    static PATH: OnceLock<PathBuf> = OnceLock::new();
    PATH.get_or_init(|| {
        let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("sam-default.svm");
        let cfg = TrainConfig::default();
        let mut rng = RngStreams::new(1).stream(StreamId::Training);
        aqmsim::sam::train_sam(&cfg, &LabelPolicy::default(), 2000, &mut rng, &path)
            .expect("default training pipeline");
        path
    })
}

/// Coefficient of variation of tick-sampled queue lengths after the
/// warmup cutoff.
pub fn queue_cov(ticks: &[(f64, usize)], warmup_s: f64) -> f64 {
    let warm: Vec<f64> = ticks
        .iter()
        .filter(|(t, _)| *t >= warmup_s)
        .map(|(_, q)| *q as f64)
        .collect();
    assert!(!warm.is_empty(), "no samples past warmup");
    let mean = warm.iter().sum::<f64>() / warm.len() as f64;
    if mean == 0.0 {
        return 0.0;
    }
    let var = warm.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / warm.len() as f64;
    var.sqrt() / mean
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

// ---------------------------------------------------------------------
// Independent QP oracle: projected gradient ascent on the SVM dual.
// ---------------------------------------------------------------------

/// Exact Euclidean projection onto {0 <= a <= C, sum_i y_i a_i = 0} via
/// bisection on the equality multiplier.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let h = |lambda: f64| -> f64 {
        v.iter()
            .zip(y)
            .map(|(vi, yi)| yi * (vi - lambda * yi).clamp(0.0, c))
            .sum()
    };
    let bound = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    debug_assert!(h(lo) >= 0.0 && h(hi) <= 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    v.iter()
        .zip(y)
        .map(|(vi, yi)| (vi - lambda * yi).clamp(0.0, c))
        .collect()
}

/// Maximize W(a) = sum a - 1/2 a' Q a over the dual feasible set by
/// projected gradient ascent. Deliberately brute force: no working sets,
/// no caching tricks — a different algorithm family than SMO.
pub fn qp_oracle(data: &[Sample], c: f64, gamma: f64) -> Vec<f64> {
    let n = data.len();
    let y: Vec<f64> = data.iter().map(|s| f64::from(s.y)).collect();
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            q[i * n + j] = y[i] * y[j] * rbf_kernel(&data[i].x, &data[j].x, gamma);
        }
    }
    // Gershgorin bound on the largest eigenvalue gives a safe step size.
    let lmax = (0..n)
        .map(|i| (0..n).map(|j| q[i * n + j].abs()).sum::<f64>())
        .fold(1.0f64, f64::max);
    let step = 1.0 / lmax;

    let mut a = vec![0.0; n];
    let mut grad = vec![0.0; n];
    for _ in 0..60_000 {
        for i in 0..n {
            let mut qa = 0.0;
            for j in 0..n {
                qa += q[i * n + j] * a[j];
            }
            grad[i] = 1.0 - qa;
        }
        let trial: Vec<f64> = (0..n).map(|i| a[i] + step * grad[i]).collect();
        let next = project(&trial, &y, c);
        let delta: f64 = next
            .iter()
            .zip(&a)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        a = next;
        if delta < 1e-12 {
            break;
        }
    }
    a
}

/// Bias consistent with an oracle solution: mean over free support
/// vectors, or the midpoint of the feasible bias interval when none are
/// free.
pub fn oracle_bias(data: &[Sample], alphas: &[f64], c: f64, gamma: f64) -> f64 {
    let n = data.len();
    let score = |i: usize| -> f64 {
        (0..n)
            .map(|j| alphas[j] * f64::from(data[j].y) * rbf_kernel(&data[j].x, &data[i].x, gamma))
            .sum()
    };
    let eps = 1e-9;
    let free: Vec<usize> = (0..n)
        .filter(|&i| alphas[i] > eps && alphas[i] < c - eps)
        .collect();
    if !free.is_empty() {
        return free
            .iter()
            .map(|&i| f64::from(data[i].y) - score(i))
            .sum::<f64>()
            / free.len() as f64;
    }
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for i in 0..n {
        let yi = f64::from(data[i].y);
        let s = score(i);
        // at alpha=0 we need y(s + b) >= 1, at alpha=C we need <= 1
        if alphas[i] <= eps {
            if yi > 0.0 {
                lo = lo.max(1.0 - s);
            } else {
                hi = hi.min(-1.0 - s);
            }
        } else {
            if yi > 0.0 {
                hi = hi.min(1.0 - s);
            } else {
                lo = lo.max(-1.0 - s);
            }
        }
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo,
        (false, true) => hi,
        (false, false) => 0.0,
    }
}

/// Decision value of an oracle solution at an arbitrary point.
pub fn oracle_decision(
    data: &[Sample],
    alphas: &[f64],
    bias: f64,
    gamma: f64,
    x: &[f64; 5],
) -> f64 {
    let mut f = bias;
    for (s, a) in data.iter().zip(alphas) {
        if *a > 0.0 {
            f += a * f64::from(s.y) * rbf_kernel(&s.x, x, gamma);
        }
    }
    f
}

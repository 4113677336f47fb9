//! Sequential minimal optimization for the soft-margin dual.
//!
//! Working-set selection is deliberately simple: the outer loop sweeps
//! first-index candidates, alternating between all points and the
//! non-bound subset, and the partner index is picked at random. Datasets
//! here are small (a few thousand patterns at most), so a full Gram
//! matrix is kept and no shrinking is done.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{rbf_kernel, KernelKind, Sample, SvmModel, TrainConfig};

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("training set is empty")]
    Empty,
    #[error("training set contains a single class; need both +1 and -1 labels")]
    SingleClass,
    #[error("no convergence after {passes} passes (worst KKT violation {worst:.3e})")]
    NoConvergence { passes: usize, worst: f64 },
}

/// Result of a training run: the model plus the full multiplier vector
/// (index-aligned with the training set) for optimality checks.
#[derive(Debug, Clone)]
pub struct SmoOutput {
    pub model: SvmModel,
    pub alphas: Vec<f64>,
    pub passes: usize,
}

/// Multipliers below this are treated as zero, above C minus this as C.
const ALPHA_EPS: f64 = 1e-12;
/// Smallest multiplier step worth committing.
const MIN_STEP: f64 = 1e-10;

struct Solver<'d> {
    data: &'d [Sample],
    c: f64,
    gram: Vec<f64>,
    y: Vec<f64>,
    alpha: Vec<f64>,
    /// Score cache: s[i] = sum_j alpha[j] y[j] K(i, j), bias excluded.
    s: Vec<f64>,
    b: f64,
}

impl<'d> Solver<'d> {
    fn new(data: &'d [Sample], cfg: &TrainConfig) -> Solver<'d> {
        let n = data.len();
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let k = rbf_kernel(&data[i].x, &data[j].x, cfg.gamma);
                gram[i * n + j] = k;
                gram[j * n + i] = k;
            }
        }
        Solver {
            data,
            c: cfg.c,
            gram,
            y: data.iter().map(|s| f64::from(s.y)).collect(),
            alpha: vec![0.0; n],
            s: vec![0.0; n],
            b: 0.0,
        }
    }

    fn n(&self) -> usize {
        self.data.len()
    }

    fn k(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.n() + j]
    }

    /// KKT excess for index `i` under bias `b`: how far the optimality
    /// condition for its multiplier is violated.
    fn violation(&self, i: usize, b: f64) -> f64 {
        let r = self.y[i] * (self.s[i] + b) - 1.0;
        if self.alpha[i] <= ALPHA_EPS {
            (-r).max(0.0)
        } else if self.alpha[i] >= self.c - ALPHA_EPS {
            r.max(0.0)
        } else {
            r.abs()
        }
    }

    fn worst_violation(&self, b: f64) -> f64 {
        let balance: f64 = (0..self.n()).map(|i| self.alpha[i] * self.y[i]).sum();
        (0..self.n())
            .map(|i| self.violation(i, b))
            .fold(balance.abs(), f64::max)
    }

    /// Joint optimization of the pair (i, j); returns false when the pair
    /// admits no useful step.
    fn take_step(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (yi, yj) = (self.y[i], self.y[j]);
        let (ai, aj) = (self.alpha[i], self.alpha[j]);
        let ei = self.s[i] + self.b - yi;
        let ej = self.s[j] + self.b - yj;

        let (lo, hi) = if yi != yj {
            ((aj - ai).max(0.0), (self.c + aj - ai).min(self.c))
        } else {
            ((ai + aj - self.c).max(0.0), (ai + aj).min(self.c))
        };
        if lo >= hi {
            return false;
        }

        let (kii, kjj, kij) = (self.k(i, i), self.k(j, j), self.k(i, j));
        let eta = 2.0 * kij - kii - kjj;
        if eta >= -1e-12 {
            // degenerate pair (near-duplicate points)
            return false;
        }

        let aj_new = (aj - yj * (ei - ej) / eta).clamp(lo, hi);
        if (aj_new - aj).abs() < MIN_STEP {
            return false;
        }
        let ai_new = ai + yi * yj * (aj - aj_new);

        let di = (ai_new - ai) * yi;
        let dj = (aj_new - aj) * yj;
        let b1 = self.b - ei - di * kii - dj * kij;
        let b2 = self.b - ej - di * kij - dj * kjj;
        self.b = if ai_new > ALPHA_EPS && ai_new < self.c - ALPHA_EPS {
            b1
        } else if aj_new > ALPHA_EPS && aj_new < self.c - ALPHA_EPS {
            b2
        } else {
            0.5 * (b1 + b2)
        };

        let n = self.n();
        for k in 0..n {
            self.s[k] += di * self.gram[i * n + k] + dj * self.gram[j * n + k];
        }
        self.alpha[i] = ai_new;
        self.alpha[j] = aj_new;
        true
    }

    /// If `i` violates KKT beyond `tol`, try partners in random order
    /// until one admits a step.
    fn examine(&mut self, i: usize, tol: f64, order: &mut Vec<usize>, rng: &mut impl Rng) -> bool {
        if self.violation(i, self.b) <= tol {
            return false;
        }
        order.clear();
        order.extend(0..self.n());
        order.shuffle(rng);
        for idx in 0..order.len() {
            let j = order[idx];
            if j != i && self.take_step(i, j) {
                return true;
            }
        }
        false
    }

    /// Canonical bias: mean of y_i - s_i over free support vectors. With
    /// none free the bias is only pinned to an interval; take its
    /// midpoint.
    fn final_bias(&self) -> f64 {
        let free: Vec<usize> = (0..self.n())
            .filter(|&i| self.alpha[i] > ALPHA_EPS && self.alpha[i] < self.c - ALPHA_EPS)
            .collect();
        if !free.is_empty() {
            return free.iter().map(|&i| self.y[i] - self.s[i]).sum::<f64>() / free.len() as f64;
        }
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for i in 0..self.n() {
            // alpha = 0 wants y (s + b) >= 1, alpha = C wants <= 1
            let margin = self.y[i] - self.s[i];
            if self.alpha[i] <= ALPHA_EPS {
                if self.y[i] > 0.0 {
                    lo = lo.max(margin);
                } else {
                    hi = hi.min(margin);
                }
            } else if self.y[i] > 0.0 {
                hi = hi.min(margin);
            } else {
                lo = lo.max(margin);
            }
        }
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => self.b,
        }
    }
}

/// Train a classifier on `data`. Fails when only one class is present or
/// the pass budget runs out before the KKT conditions hold within
/// `cfg.tol`.
pub fn smo_train(
    data: &[Sample],
    cfg: &TrainConfig,
    rng: &mut impl Rng,
) -> Result<SmoOutput, TrainError> {
    if data.is_empty() {
        return Err(TrainError::Empty);
    }
    if data.iter().all(|s| s.y == 1) || data.iter().all(|s| s.y == -1) {
        return Err(TrainError::SingleClass);
    }

    let mut solver = Solver::new(data, cfg);
    // Sweep against half the target tolerance so the final check, done
    // with the recomputed bias, has slack.
    let tol_in = cfg.tol * 0.5;
    let mut order = Vec::with_capacity(data.len());

    let mut passes = 0usize;
    let mut examine_all = true;
    loop {
        // A pass is one full sweep; the cheap non-bound refinement sweeps
        // in between ride along free.
        if examine_all {
            passes += 1;
            if passes > cfg.max_passes {
                let worst = solver.worst_violation(solver.final_bias());
                return Err(TrainError::NoConvergence {
                    passes: passes - 1,
                    worst,
                });
            }
        }

        let candidates: Vec<usize> = if examine_all {
            (0..solver.n()).collect()
        } else {
            (0..solver.n())
                .filter(|&i| solver.alpha[i] > ALPHA_EPS && solver.alpha[i] < solver.c - ALPHA_EPS)
                .collect()
        };
        let mut changed = 0usize;
        for i in candidates {
            if solver.examine(i, tol_in, &mut order, rng) {
                changed += 1;
            }
        }

        if examine_all {
            if changed == 0 {
                let bias = solver.final_bias();
                if solver.worst_violation(bias) <= cfg.tol {
                    return Ok(build_output(solver, bias, cfg, passes));
                }
            } else {
                examine_all = false;
            }
        } else if changed == 0 {
            examine_all = true;
        }
    }
}

fn build_output(solver: Solver<'_>, bias: f64, cfg: &TrainConfig, passes: usize) -> SmoOutput {
    let mut support_vectors = Vec::new();
    let mut coeffs = Vec::new();
    for i in 0..solver.n() {
        if solver.alpha[i] > ALPHA_EPS {
            support_vectors.push(solver.data[i].x);
            coeffs.push(solver.alpha[i] * solver.y[i]);
        }
    }
    assert!(
        !support_vectors.is_empty(),
        "converged model has no support vectors"
    );
    let balance: f64 = coeffs.iter().sum();
    debug_assert!(balance.abs() <= 1e-6, "dual balance violated: {balance}");
    SmoOutput {
        model: SvmModel {
            kernel: KernelKind::Rbf,
            gamma: cfg.gamma,
            bias,
            support_vectors,
            coeffs,
        },
        alphas: solver.alpha,
        passes,
    }
}

/// Worst KKT violation of a multiplier vector for `data` under the given
/// bias; recomputes scores from scratch (independent of the solver cache).
pub fn kkt_max_violation(data: &[Sample], alphas: &[f64], bias: f64, cfg: &TrainConfig) -> f64 {
    assert_eq!(data.len(), alphas.len());
    let n = data.len();
    let mut worst: f64 = (0..n)
        .map(|i| alphas[i] * f64::from(data[i].y))
        .sum::<f64>()
        .abs();
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            if alphas[j] > 0.0 {
                s += alphas[j]
                    * f64::from(data[j].y)
                    * rbf_kernel(&data[j].x, &data[i].x, cfg.gamma);
            }
        }
        let r = f64::from(data[i].y) * (s + bias) - 1.0;
        let v = if alphas[i] <= ALPHA_EPS {
            (-r).max(0.0)
        } else if alphas[i] >= cfg.c - ALPHA_EPS {
            r.max(0.0)
        } else {
            r.abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Dual objective W(alpha) = sum_i alpha_i - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
pub fn dual_objective(data: &[Sample], alphas: &[f64], gamma: f64) -> f64 {
    assert_eq!(data.len(), alphas.len());
    let n = data.len();
    let mut obj: f64 = alphas.iter().sum();
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if alphas[j] == 0.0 {
                continue;
            }
            obj -= 0.5
                * alphas[i]
                * alphas[j]
                * f64::from(data[i].y)
                * f64::from(data[j].y)
                * rbf_kernel(&data[i].x, &data[j].x, gamma);
        }
    }
    obj
}

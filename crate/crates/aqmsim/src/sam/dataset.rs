//! Training-set generation and the offline training pipeline.
//!
//! Patterns are half i.i.d. uniform 5-vectors (coverage of the cube) and
//! half bounded random walks (the smooth trajectories a real queue
//! produces), labeled by the deterministic policy.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::svm::{
    save_model, smo_train, Features, ModelFileError, Sample, TrainConfig, TrainError, FEATURE_DIM,
};

use super::LabelPolicy;

/// Random-walk step width.
const WALK_SIGMA: f64 = 0.05;
/// Full-set regeneration attempts before a policy is declared degenerate.
const MAX_REGEN_ROUNDS: usize = 20;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("need at least 2 samples, got {0}")]
    TooSmall(usize),
    #[error("labeling policy produced a single class in {0} generation rounds")]
    Degenerate(usize),
}

#[derive(Debug, thiserror::Error)]
pub enum SamTrainError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("cannot write model: {0}")]
    Save(#[from] ModelFileError),
}

fn uniform_pattern(rng: &mut impl Rng) -> Features {
    std::array::from_fn(|_| rng.gen())
}

fn walk_pattern(rng: &mut impl Rng) -> Features {
    let normal = Normal::new(0.0, WALK_SIGMA).expect("valid walk step");
    let mut x = [0.0; FEATURE_DIM];
    x[0] = rng.gen();
    for k in 1..FEATURE_DIM {
        x[k] = (x[k - 1] + normal.sample(rng)).clamp(0.0, 1.0);
    }
    x
}

/// Generate `n` labeled patterns (even indices uniform, odd indices
/// walks). Regenerates the whole set — bounded — until both classes are
/// present.
pub fn gen_dataset(
    n: usize,
    policy: &LabelPolicy,
    rng: &mut impl Rng,
) -> Result<Vec<Sample>, DatasetError> {
    if n < 2 {
        return Err(DatasetError::TooSmall(n));
    }
    for _ in 0..MAX_REGEN_ROUNDS {
        let samples: Vec<Sample> = (0..n)
            .map(|k| {
                let x = if k % 2 == 0 {
                    uniform_pattern(rng)
                } else {
                    walk_pattern(rng)
                };
                Sample::new(x, policy.label(&x))
            })
            .collect();
        let pos = samples.iter().filter(|s| s.y == 1).count();
        if pos > 0 && pos < n {
            return Ok(samples);
        }
    }
    Err(DatasetError::Degenerate(MAX_REGEN_ROUNDS))
}

/// What the training pipeline produced.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub n: usize,
    pub n_drop: usize,
    pub n_enqueue: usize,
    /// Fraction of training patterns the model labels like the policy.
    pub training_accuracy: f64,
    pub support_vectors: usize,
    pub passes: usize,
}

/// Full pipeline: generate a dataset, train, measure training accuracy,
/// and save the model file.
pub fn train_sam(
    cfg: &TrainConfig,
    policy: &LabelPolicy,
    n: usize,
    rng: &mut impl Rng,
    path: &Path,
) -> Result<TrainReport, SamTrainError> {
    let data = gen_dataset(n, policy, rng)?;
    let out = smo_train(&data, cfg, rng)?;
    let correct = data
        .iter()
        .filter(|s| out.model.classify(&s.x) == s.y)
        .count();
    save_model(&out.model, path)?;
    let n_drop = data.iter().filter(|s| s.y == 1).count();
    Ok(TrainReport {
        n,
        n_drop,
        n_enqueue: n - n_drop,
        training_accuracy: correct as f64 / n as f64,
        support_vectors: out.model.n_support(),
        passes: out.passes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::load_model;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dataset_has_both_classes_and_sane_balance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data = gen_dataset(1000, &LabelPolicy::default(), &mut rng).unwrap();
        assert_eq!(data.len(), 1000);
        let pos = data.iter().filter(|s| s.y == 1).count();
        let frac = pos as f64 / 1000.0;
        assert!(
            (0.1..=0.9).contains(&frac),
            "class balance {frac} out of range"
        );
        for s in &data {
            assert!(s.x.iter().all(|u| (0.0..=1.0).contains(u)));
        }
    }

    #[test]
    fn dataset_is_deterministic_per_seed() {
        let gen = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            gen_dataset(64, &LabelPolicy::default(), &mut rng).unwrap()
        };
        assert_eq!(gen(5), gen(5));
        assert_ne!(gen(5), gen(6));
    }

    #[test]
    fn labels_match_the_policy() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let policy = LabelPolicy::default();
        let data = gen_dataset(256, &policy, &mut rng).unwrap();
        for s in &data {
            assert_eq!(s.y, policy.label(&s.x));
        }
    }

    #[test]
    fn degenerate_policy_errors_after_bounded_resampling() {
        // theta close to 1 with no trend term: a weighted mean of values
        // in [0,1] can only reach 1 on a measure-zero set, so with the
        // top threshold every pattern labels -1.
        let policy = LabelPolicy::new([1.0, 2.0, 3.0, 4.0, 5.0], 0.999999, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        match gen_dataset(2, &policy, &mut rng) {
            Err(DatasetError::Degenerate(rounds)) => assert_eq!(rounds, MAX_REGEN_ROUNDS),
            other => panic!("expected degenerate-policy error, got {other:?}"),
        }
    }

    #[test]
    fn tiny_datasets_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(matches!(
            gen_dataset(1, &LabelPolicy::default(), &mut rng),
            Err(DatasetError::TooSmall(1))
        ));
    }

    #[test]
    fn minimal_pipeline_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.svm");
        let cfg = TrainConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let report = train_sam(&cfg, &LabelPolicy::default(), 2, &mut rng, &path).unwrap();
        assert_eq!(report.n, 2);
        let model = load_model(&path).unwrap();
        assert!(model.n_support() >= 1);
    }

    #[test]
    fn pipeline_is_deterministic_per_seed() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = TrainConfig::default();
        let write = |name: &str| {
            let path = dir.path().join(name);
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            train_sam(&cfg, &LabelPolicy::default(), 200, &mut rng, &path).unwrap();
            std::fs::read(path).unwrap()
        };
        assert_eq!(write("a.svm"), write("b.svm"));
    }
}

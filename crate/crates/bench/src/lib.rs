//! Fixed inputs for the estimator benchmarks.

use smoothcert_core::smoothing::{sample_counts, sample_prob_matrix};
use smoothcert_core::{AffineClassifier, CountsVector, NoiseConfig, ProbabilityMatrix, SimplexMapSpec};

/// A three-class affine model with a clear winner at [`INPUT`].
pub fn classifier() -> AffineClassifier {
    AffineClassifier::new(
        vec![vec![1.0, 0.2], vec![0.3, 0.8], vec![-0.5, 0.4]],
        vec![0.0, 0.0, 0.0],
    )
    .expect("valid weights")
}

pub const INPUT: [f64; 2] = [0.9, 0.2];

pub fn counts(n: usize) -> CountsVector {
    let cfg = NoiseConfig::new(0.5, n, 17).expect("valid noise");
    sample_counts(&classifier(), &INPUT, &cfg).expect("sampling succeeds")
}

pub fn matrix(n: usize) -> ProbabilityMatrix {
    let cfg = NoiseConfig::new(0.5, n, 17).expect("valid noise");
    sample_prob_matrix(&classifier(), &INPUT, &cfg, SimplexMapSpec::SoftmaxTempered(1.0))
        .expect("sampling succeeds")
}

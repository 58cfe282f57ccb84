use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{apply_simplex_map, argmax, BaseClassifier, CountsVector, ProbabilityMatrix, SimplexMapSpec};
use crate::error::{invalid, CertError, Result};

/// Gaussian noise settings for one input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub sigma: f64,
    pub n: usize,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn new(sigma: f64, n: usize, seed: u64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("sigma must be positive, got {sigma}")));
        }
        if n == 0 {
            return Err(invalid("sample count must be at least 1"));
        }
        Ok(NoiseConfig { sigma, n, seed })
    }
}

/// Mixes an experiment seed with an input id (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, input_id: u64) -> u64 {
    let mut z = seed ^ input_id.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Noise for sample `index`: one ChaCha stream per sample, so the draw does
/// not depend on evaluation order.
fn perturbed(x: &[f64], cfg: &NoiseConfig, index: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    x.iter()
        .map(|xi| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            xi + cfg.sigma * eps
        })
        .collect()
}

fn checked_logits<C: BaseClassifier + ?Sized>(classifier: &C, input: &[f64]) -> Result<Vec<f64>> {
    let logits = classifier.logits(input)?;
    if logits.len() != classifier.num_classes() {
        return Err(CertError::Classifier(format!(
            "classifier returned {} logits, expected {}",
            logits.len(),
            classifier.num_classes()
        )));
    }
    Ok(logits)
}

fn evaluate<C, T, F>(classifier: &C, x: &[f64], cfg: &NoiseConfig, f: F) -> Result<Vec<T>>
where
    C: BaseClassifier + ?Sized,
    T: Send,
    F: Fn(Vec<f64>) -> T + Sync,
{
    if x.len() != classifier.input_dim() {
        return Err(invalid(format!(
            "input has dimension {}, classifier expects {}",
            x.len(),
            classifier.input_dim()
        )));
    }
    let one = |i: usize| checked_logits(classifier, &perturbed(x, cfg, i)).map(&f);
    if classifier.is_serial() {
        (0..cfg.n).map(one).collect()
    } else {
        (0..cfg.n).into_par_iter().map(one).collect()
    }
}

/// Hard-output Monte Carlo: counts of the argmax class of `f(x + ε_i)`.
pub fn sample_counts<C: BaseClassifier + ?Sized>(
    classifier: &C,
    x: &[f64],
    cfg: &NoiseConfig,
) -> Result<CountsVector> {
    let classes = evaluate(classifier, x, cfg, |logits| argmax(&logits))?;
    let mut counts = vec![0u64; classifier.num_classes()];
    for c in classes {
        counts[c] += 1;
    }
    CountsVector::new(counts)
}

/// Soft-output Monte Carlo: row `i` is `s(f(x + ε_i))`.
pub fn sample_prob_matrix<C: BaseClassifier + ?Sized>(
    classifier: &C,
    x: &[f64],
    cfg: &NoiseConfig,
    spec: SimplexMapSpec,
) -> Result<ProbabilityMatrix> {
    let rows = evaluate(classifier, x, cfg, |logits| apply_simplex_map(&logits, spec))?;
    let classes = classifier.num_classes();
    Ok(ProbabilityMatrix::from_flat_unchecked(rows.concat(), classes))
}

use crate::error::{invalid, CertError, Result};
use crate::special::normal_cdf;

/// Black-box base classifier `f: R^d -> R^m` producing logits.
///
/// Implementations must be deterministic in their input and safe to call
/// from several threads; a classifier that cannot be called concurrently
/// should return `true` from [`BaseClassifier::is_serial`].
pub trait BaseClassifier: Sync {
    fn num_classes(&self) -> usize;

    fn input_dim(&self) -> usize;

    fn logits(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn is_serial(&self) -> bool {
        false
    }
}

/// One-dimensional classifier whose hard output under `N(0, scale²)` input
/// noise at the origin is distributed exactly as `Categorical(probs)`.
///
/// The class is read off the inverse CDF of `probs` at `Φ(x / scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedMultinomialClassifier {
    cumulative: Vec<f64>,
    scale: f64,
}

impl FixedMultinomialClassifier {
    pub fn new(probs: &[f64], scale: f64) -> Result<Self> {
        if probs.len() < 2 {
            return Err(invalid("fixed multinomial classifier needs at least two classes"));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(invalid("class probabilities must lie in [0, 1]"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("class probabilities sum to {total}, not 1")));
        }
        if scale.is_nan() || scale <= 0.0 {
            return Err(invalid("noise scale must be positive"));
        }
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(FixedMultinomialClassifier { cumulative, scale })
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cumulative
            .iter()
            .map(|c| {
                let p = c - prev;
                prev = *c;
                p
            })
            .collect()
    }

    pub fn class_of(&self, x: f64) -> usize {
        let u = normal_cdf(x / self.scale);
        let last = self.cumulative.len() - 1;
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(last)
            .min(last)
    }
}

impl BaseClassifier for FixedMultinomialClassifier {
    fn num_classes(&self) -> usize {
        self.cumulative.len()
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.num_classes()];
        out[self.class_of(x[0])] = 1.0;
        Ok(out)
    }
}

/// Affine logits `f(x) = W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineClassifier {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl AffineClassifier {
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.len() != bias.len() {
            return Err(invalid("weight rows and bias must be nonempty and equally long"));
        }
        let d = weights[0].len();
        if d == 0 || weights.iter().any(|w| w.len() != d) {
            return Err(invalid("weight rows must share a positive dimension"));
        }
        Ok(AffineClassifier { weights, bias })
    }

    /// Probability that the smoothed two-class classifier outputs class 0 at
    /// `x` under `N(0, sigma² I)` noise:
    /// `Φ(((w₀-w₁)·x + b₀-b₁) / (σ ‖w₀-w₁‖))`.
    pub fn two_class_probability(&self, x: &[f64], sigma: f64) -> Result<f64> {
        if self.weights.len() != 2 {
            return Err(invalid("closed form exists for two classes only"));
        }
        let diff: Vec<f64> = self.weights[0]
            .iter()
            .zip(&self.weights[1])
            .map(|(a, b)| a - b)
            .collect();
        let norm = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
        let offset = diff.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + self.bias[0]
            - self.bias[1];
        if norm == 0.0 {
            return Ok(if offset >= 0.0 { 1.0 } else { 0.0 });
        }
        Ok(normal_cdf(offset / (sigma * norm)))
    }
}

impl BaseClassifier for AffineClassifier {
    fn num_classes(&self) -> usize {
        self.weights.len()
    }

    fn input_dim(&self) -> usize {
        self.weights[0].len()
    }

    fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(CertError::Classifier(format!(
                "expected input of dimension {}, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b)
            .collect())
    }
}

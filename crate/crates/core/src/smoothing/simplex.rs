use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Normalizing layer mapping logits onto the probability simplex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SimplexMapSpec {
    Hardmax,
    SoftmaxTempered(f64),
    Sparsemax,
}

impl SimplexMapSpec {
    pub fn softmax(temperature: f64) -> Result<Self> {
        if temperature > 0.0 && temperature.is_finite() {
            Ok(SimplexMapSpec::SoftmaxTempered(temperature))
        } else {
            Err(invalid(format!("temperature must be positive, got {temperature}")))
        }
    }
}

pub fn apply_simplex_map(logits: &[f64], spec: SimplexMapSpec) -> Vec<f64> {
    match spec {
        SimplexMapSpec::Hardmax => hardmax(logits),
        SimplexMapSpec::SoftmaxTempered(t) => tempered_softmax(logits, t),
        SimplexMapSpec::Sparsemax => sparsemax(logits),
    }
}

/// One-hot vector at the argmax (lowest index on ties).
pub fn hardmax(logits: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; logits.len()];
    if !logits.is_empty() {
        out[super::argmax(logits)] = 1.0;
    }
    out
}

/// `exp(x_i/T) / Σ_j exp(x_j/T)`, shifted by the max for stability.
pub fn tempered_softmax(logits: &[f64], temperature: f64) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|x| ((x - max) / temperature).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    out
}

/// Euclidean projection of `logits` onto the simplex.
pub fn sparsemax(logits: &[f64]) -> Vec<f64> {
    let mut sorted = logits.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut support_sum = 0.0;
    let mut support = 0usize;
    for (k, z) in sorted.iter().enumerate() {
        cumsum += z;
        if 1.0 + (k + 1) as f64 * z > cumsum {
            support = k + 1;
            support_sum = cumsum;
        }
    }
    let tau = (support_sum - 1.0) / support as f64;
    let mut out: Vec<f64> = logits.iter().map(|z| (z - tau).max(0.0)).collect();
    // Sums to one up to rounding; renormalize so entries never exceed one.
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    out
}

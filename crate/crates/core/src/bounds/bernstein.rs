use super::ConfidenceLevel;
use crate::error::{invalid, CertError, Result};

/// Samples known a priori to lie in `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedSampleBatch {
    values: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl BoundedSampleBatch {
    pub fn new(values: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(invalid(format!("invalid range [{lo}, {hi}]")));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(lo..=hi).contains(*v))
        {
            return Err(invalid(format!(
                "value {v} at index {i} lies outside [{lo}, {hi}]"
            )));
        }
        Ok(BoundedSampleBatch { values, lo, hi })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Unbiased sample variance (`n - 1` denominator).
    pub fn sample_variance(&self) -> f64 {
        let mean = self.mean();
        let ss: f64 = self.values.iter().map(|v| (v - mean).powi(2)).sum();
        ss / (self.values.len() - 1) as f64
    }

    fn deviation(&self, delta: ConfidenceLevel) -> Result<f64> {
        let n = self.values.len();
        if n < 2 {
            return Err(CertError::InsufficientSamples { needed: 2, got: n });
        }
        let log_term = (1.0 / delta.alpha()).ln();
        let nf = n as f64;
        let variance_term = (2.0 * self.sample_variance() * log_term / nf).sqrt();
        let range_term = 7.0 * (self.hi - self.lo) * log_term / (3.0 * (nf - 1.0));
        Ok(variance_term + range_term)
    }
}

/// Maurer–Pontil empirical Bernstein upper bound on the mean:
/// `X̄ + √(2 V ln(1/δ)/n) + 7(b-a) ln(1/δ) / (3(n-1))`.
pub fn empirical_bernstein_upper(batch: &BoundedSampleBatch, delta: ConfidenceLevel) -> Result<f64> {
    Ok(batch.mean() + batch.deviation(delta)?)
}

/// Lower analogue of [`empirical_bernstein_upper`] (the bound applied to `-X`).
pub fn empirical_bernstein_lower(batch: &BoundedSampleBatch, delta: ConfidenceLevel) -> Result<f64> {
    Ok(batch.mean() - batch.deviation(delta)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_batch_keeps_only_range_term() {
        let batch = BoundedSampleBatch::new(vec![0.5; 50], 0.0, 1.0).unwrap();
        let delta = ConfidenceLevel::new(0.05).unwrap();
        let expected = 0.5 + 7.0 * 20f64.ln() / (3.0 * 49.0);
        assert!((empirical_bernstein_upper(&batch, delta).unwrap() - expected).abs() < 1e-14);
        let expected = 0.5 - 7.0 * 20f64.ln() / (3.0 * 49.0);
        assert!((empirical_bernstein_lower(&batch, delta).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn lower_is_reflected_upper() {
        let vals = vec![0.1, 0.9, 0.4, 0.3, 0.75];
        let neg: Vec<f64> = vals.iter().map(|v| -v).collect();
        let delta = ConfidenceLevel::new(0.1).unwrap();
        let b = BoundedSampleBatch::new(vals, 0.0, 1.0).unwrap();
        let nb = BoundedSampleBatch::new(neg, -1.0, 0.0).unwrap();
        let lo = empirical_bernstein_lower(&b, delta).unwrap();
        let up = empirical_bernstein_upper(&nb, delta).unwrap();
        assert!((lo + up).abs() < 1e-14);
    }

    #[test]
    fn needs_two_samples() {
        let batch = BoundedSampleBatch::new(vec![0.3], 0.0, 1.0).unwrap();
        let delta = ConfidenceLevel::new(0.05).unwrap();
        assert_eq!(
            empirical_bernstein_upper(&batch, delta),
            Err(CertError::InsufficientSamples { needed: 2, got: 1 })
        );
    }

    #[test]
    fn rejects_out_of_range_values() {
        assert!(BoundedSampleBatch::new(vec![0.2, 1.5], 0.0, 1.0).is_err());
        assert!(BoundedSampleBatch::new(vec![0.2], 1.0, 1.0).is_err());
    }

    #[test]
    fn bound_tightens_along_a_stream_with_stable_profile() {
        // Repeating a fixed block keeps mean and variance profile fixed.
        let block = [0.2, 0.8, 0.5, 0.35];
        let delta = ConfidenceLevel::new(0.05).unwrap();
        let mut prev = f64::INFINITY;
        for reps in [2usize, 4, 8, 16, 32] {
            let vals: Vec<f64> = block.iter().copied().cycle().take(block.len() * reps).collect();
            let b = BoundedSampleBatch::new(vals, 0.0, 1.0).unwrap();
            let up = empirical_bernstein_upper(&b, delta).unwrap();
            assert!(up <= prev);
            prev = up;
        }
    }
}

//! Direct bounds on the mean of the per-sample margin `Z`, so a single
//! interval replaces the per-class Bonferroni split.

use serde::{Deserialize, Serialize};

use crate::bounds::{
    bonferroni_margin, empirical_bernstein_lower, BoundProvider, BoundedSampleBatch,
    ConfidenceLevel, ConfidenceSequenceState, EstimatorMethod, MarginData, MarginEstimate,
    MarginKind,
};
use crate::error::{invalid, CertError, Result};
use crate::smoothing::{argmax_excluding, ProbabilityMatrix};
use crate::special::{TaylorOrder, TaylorQuantile};

/// Per-row margin samples with the a-priori range they live in.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginSampleStream {
    z_values: Vec<f64>,
    kind: MarginKind,
    range: (f64, f64),
    predicted: usize,
}

impl MarginSampleStream {
    pub fn new(z_values: Vec<f64>, kind: MarginKind, range: (f64, f64), predicted: usize) -> Result<Self> {
        let (lo, hi) = range;
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(invalid(format!("invalid range [{lo}, {hi}]")));
        }
        let slack = 1e-12 * (hi - lo);
        if let Some(z) = z_values.iter().find(|z| !(**z >= lo - slack && **z <= hi + slack)) {
            return Err(invalid(format!("sample {z} outside [{lo}, {hi}]")));
        }
        let z_values = z_values.into_iter().map(|z| z.clamp(lo, hi)).collect();
        Ok(MarginSampleStream {
            z_values,
            kind,
            range,
            predicted,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.z_values
    }

    pub fn kind(&self) -> MarginKind {
        self.kind
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    pub fn predicted(&self) -> usize {
        self.predicted
    }

    pub fn len(&self) -> usize {
        self.z_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.z_values.iter().sum::<f64>() / self.z_values.len() as f64
    }

    fn rescaled(&self) -> impl Iterator<Item = f64> + '_ {
        let (lo, hi) = self.range;
        self.z_values
            .iter()
            .map(move |z| ((z - lo) / (hi - lo)).clamp(0.0, 1.0))
    }
}

/// The second-margin stream is not built when the predicted class has a
/// sample mean below one half; the caller should use the Bonferroni bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FallbackSignal {
    pub predicted_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SecondStream {
    Stream(MarginSampleStream),
    Fallback(FallbackSignal),
}

/// Which direct interval to apply to the stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirectMethod {
    EmpiricalBernstein,
    ConfidenceSequence,
}

impl DirectMethod {
    pub fn method(self) -> EstimatorMethod {
        match self {
            DirectMethod::EmpiricalBernstein => EstimatorMethod::ContDirectEb,
            DirectMethod::ConfidenceSequence => EstimatorMethod::ContDirectCs,
        }
    }

    pub fn baseline(self) -> BoundProvider {
        match self {
            DirectMethod::EmpiricalBernstein => BoundProvider::EmpiricalBernstein,
            DirectMethod::ConfidenceSequence => BoundProvider::ConfidenceSequence,
        }
    }
}

fn check_classes(matrix: &ProbabilityMatrix, predicted: usize) -> Result<()> {
    let m = matrix.num_classes();
    if m < 2 {
        return Err(CertError::Degenerate(format!(
            "margin needs at least two classes, got {m}"
        )));
    }
    if predicted >= m {
        return Err(invalid(format!("class index {predicted} out of range for {m} classes")));
    }
    Ok(())
}

/// `Z_i = X_i^pred - max_{j≠pred} X_i^j`, in `[-1, 1]`.
pub fn build_z_first(matrix: &ProbabilityMatrix, predicted: usize) -> Result<MarginSampleStream> {
    check_classes(matrix, predicted)?;
    let z = matrix
        .rows()
        .map(|row| row[predicted] - row[argmax_excluding(row, predicted)])
        .collect();
    MarginSampleStream::new(z, MarginKind::First, (-1.0, 1.0), predicted)
}

/// `Z_i = Φ⁻¹_M(X_i^pred) - max_{j≠pred} Φ⁻¹_M(X_i^j)`, in
/// `[-2Φ⁻¹_M(1), 2Φ⁻¹_M(1)]`; requires a predicted-class mean of at least 1/2.
pub fn build_z_second(
    matrix: &ProbabilityMatrix,
    predicted: usize,
    order: TaylorOrder,
) -> Result<SecondStream> {
    check_classes(matrix, predicted)?;
    let mean = matrix.column(predicted).sum::<f64>() / matrix.num_rows() as f64;
    if mean < 0.5 {
        return Ok(SecondStream::Fallback(FallbackSignal {
            predicted_mean: mean,
        }));
    }
    let tq = TaylorQuantile::new(order);
    let bound = 2.0 * tq.bound();
    let z = matrix
        .rows()
        .map(|row| {
            // Φ⁻¹_M is increasing, so the competitor max commutes with it.
            tq.eval(row[predicted]) - tq.eval(row[argmax_excluding(row, predicted)])
        })
        .collect();
    MarginSampleStream::new(z, MarginKind::Second, (-bound, bound), predicted).map(SecondStream::Stream)
}

/// `(1 - α)` lower confidence bound on `E[Z]` from a single interval on the
/// rescaled stream.
pub fn continuous_margin_lcb(
    stream: &MarginSampleStream,
    level: ConfidenceLevel,
    method: DirectMethod,
) -> Result<MarginEstimate> {
    let (lo, hi) = stream.range();
    let unit_lower = match method {
        DirectMethod::EmpiricalBernstein => {
            if stream.len() < 2 {
                return Err(CertError::InsufficientSamples {
                    needed: 2,
                    got: stream.len(),
                });
            }
            let batch = BoundedSampleBatch::new(stream.rescaled().collect(), 0.0, 1.0)?;
            empirical_bernstein_lower(&batch, level)?.max(0.0)
        }
        DirectMethod::ConfidenceSequence => {
            if stream.is_empty() {
                return Err(CertError::InsufficientSamples { needed: 1, got: 0 });
            }
            ConfidenceSequenceState::from_stream(level, stream.rescaled())?
                .running_interval()?
                .0
        }
    };
    Ok(MarginEstimate::new(
        lo + (hi - lo) * unit_lower,
        stream.kind(),
        level,
        method.method(),
        stream.predicted(),
    ))
}

/// End-to-end direct estimate for a matrix: builds the stream for `kind` at
/// the predicted class and, on a second-margin fallback, returns the
/// matching Bonferroni bound with `fallback` set.
pub fn continuous_margin(
    matrix: &ProbabilityMatrix,
    level: ConfidenceLevel,
    kind: MarginKind,
    method: DirectMethod,
    order: TaylorOrder,
) -> Result<MarginEstimate> {
    let predicted = matrix.predicted();
    let stream = match kind {
        MarginKind::First => build_z_first(matrix, predicted)?,
        MarginKind::Second => match build_z_second(matrix, predicted, order)? {
            SecondStream::Stream(s) => s,
            SecondStream::Fallback(_) => {
                let mut est = bonferroni_margin(
                    MarginData::Matrix(matrix),
                    predicted,
                    level,
                    MarginKind::Second,
                    method.baseline(),
                )?;
                est.method = method.method();
                est.fallback = true;
                return Ok(est);
            }
        },
    };
    continuous_margin_lcb(&stream, level, method)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lvl(a: f64) -> ConfidenceLevel {
        ConfidenceLevel::new(a).unwrap()
    }

    #[test]
    fn one_hot_and_uniform_rows() {
        let m = ProbabilityMatrix::from_rows(vec![vec![0.0, 1.0, 0.0]; 10]).unwrap();
        assert!(build_z_first(&m, 1).unwrap().values().iter().all(|z| *z == 1.0));
        let u = ProbabilityMatrix::from_rows(vec![vec![0.25; 4]; 10]).unwrap();
        assert!(build_z_first(&u, 0).unwrap().values().iter().all(|z| *z == 0.0));
    }

    #[test]
    fn second_stream_fallback_and_constant_rows() {
        let low = ProbabilityMatrix::from_rows(vec![vec![0.4, 0.35, 0.25]; 5]).unwrap();
        assert!(matches!(
            build_z_second(&low, 0, TaylorOrder::DEFAULT).unwrap(),
            SecondStream::Fallback(FallbackSignal { predicted_mean }) if (predicted_mean - 0.4).abs() < 1e-12
        ));
        let hot = ProbabilityMatrix::from_rows(vec![vec![1.0, 0.0]; 5]).unwrap();
        let tq = TaylorQuantile::new(TaylorOrder::DEFAULT);
        match build_z_second(&hot, 0, TaylorOrder::DEFAULT).unwrap() {
            SecondStream::Stream(s) => {
                let want = tq.eval(1.0) - tq.eval(0.0);
                assert!(s.values().iter().all(|z| (z - want).abs() < 1e-12));
            }
            SecondStream::Fallback(_) => panic!("unexpected fallback"),
        }
    }

    #[test]
    fn constant_stream_bernstein() {
        let s = MarginSampleStream::new(vec![0.8; 100], MarginKind::First, (-1.0, 1.0), 0).unwrap();
        let est = continuous_margin_lcb(&s, lvl(0.05), DirectMethod::EmpiricalBernstein).unwrap();
        let expect = 0.8 - 2.0 * 7.0 * 20f64.ln() / (3.0 * 99.0);
        assert!((est.value - expect).abs() < 1e-12);
        assert_eq!(est.method, EstimatorMethod::ContDirectEb);
    }

    #[test]
    fn confidence_sequence_lower_is_below_mean() {
        let s = MarginSampleStream::new([0.5, 0.7, 0.6, 0.4, 0.9, 0.3].repeat(50), MarginKind::First, (-1.0, 1.0), 0)
            .unwrap();
        let est = continuous_margin_lcb(&s, lvl(0.05), DirectMethod::ConfidenceSequence).unwrap();
        assert!(est.value < s.mean() && est.value > 0.0);
    }

    #[test]
    fn insufficient_samples() {
        let s = MarginSampleStream::new(vec![0.3], MarginKind::First, (-1.0, 1.0), 0).unwrap();
        assert!(matches!(
            continuous_margin_lcb(&s, lvl(0.05), DirectMethod::EmpiricalBernstein),
            Err(CertError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn out_of_range_samples_are_rejected() {
        assert!(MarginSampleStream::new(vec![1.5], MarginKind::First, (-1.0, 1.0), 0).is_err());
    }

    #[test]
    fn single_class_is_degenerate() {
        let m = ProbabilityMatrix::from_rows(vec![vec![1.0]; 3]).unwrap();
        assert!(matches!(build_z_first(&m, 0), Err(CertError::Degenerate(_))));
    }
}

use super::{
    clopper_pearson_lower, clopper_pearson_upper, empirical_bernstein_lower,
    empirical_bernstein_upper, BoundedSampleBatch, ConfidenceLevel, ConfidenceSequenceState,
    EstimatorMethod, MarginEstimate, MarginKind,
};
use crate::error::{invalid, CertError, Result};
use crate::smoothing::{CountsVector, ProbabilityMatrix};
use crate::special::gaussian_quantile;

/// Probabilities are clipped to `[PROBABILITY_CLIP, 1 - PROBABILITY_CLIP]`
/// before the Gaussian quantile is applied.
pub const PROBABILITY_CLIP: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub enum MarginData<'a> {
    Counts(&'a CountsVector),
    Matrix(&'a ProbabilityMatrix),
}

impl MarginData<'_> {
    pub fn num_classes(&self) -> usize {
        match self {
            MarginData::Counts(c) => c.num_classes(),
            MarginData::Matrix(m) => m.num_classes(),
        }
    }

    pub fn predicted(&self) -> usize {
        match self {
            MarginData::Counts(c) => c.predicted(),
            MarginData::Matrix(m) => m.predicted(),
        }
    }

    /// Raw frequencies (counts) or column means (matrix).
    pub fn plug_in(&self) -> Vec<f64> {
        match self {
            MarginData::Counts(c) => c.frequencies(),
            MarginData::Matrix(m) => m.column_means(),
        }
    }
}

/// Per-class interval routine used by the Bonferroni estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundProvider {
    /// Exact binomial bounds; requires counts.
    ClopperPearson,
    /// Empirical Bernstein on a matrix column; requires a matrix.
    EmpiricalBernstein,
    /// Running intersection of the betting confidence sequence on a matrix
    /// column, consumed in row order; requires a matrix.
    ConfidenceSequence,
}

impl BoundProvider {
    pub fn method(self) -> EstimatorMethod {
        match self {
            BoundProvider::ClopperPearson => EstimatorMethod::CpBonferroni,
            BoundProvider::EmpiricalBernstein => EstimatorMethod::EbBonferroni,
            BoundProvider::ConfidenceSequence => EstimatorMethod::CsBonferroni,
        }
    }

    fn class_bound(
        self,
        data: MarginData<'_>,
        class: usize,
        level: ConfidenceLevel,
        upper: bool,
    ) -> Result<f64> {
        match (self, data) {
            (BoundProvider::ClopperPearson, MarginData::Counts(c)) => {
                let k = c.counts()[class];
                if upper {
                    clopper_pearson_upper(k, c.total(), level)
                } else {
                    clopper_pearson_lower(k, c.total(), level)
                }
            }
            (BoundProvider::EmpiricalBernstein, MarginData::Matrix(m)) => {
                let batch = BoundedSampleBatch::new(m.column(class).collect(), 0.0, 1.0)?;
                let b = if upper {
                    empirical_bernstein_upper(&batch, level)?
                } else {
                    empirical_bernstein_lower(&batch, level)?
                };
                Ok(b.clamp(0.0, 1.0))
            }
            (BoundProvider::ConfidenceSequence, MarginData::Matrix(m)) => {
                let cs = ConfidenceSequenceState::from_stream(level, m.column(class))?;
                let (lo, hi) = cs.running_interval()?;
                Ok(if upper { hi } else { lo })
            }
            (BoundProvider::ClopperPearson, MarginData::Matrix(_)) => {
                Err(invalid("Clopper-Pearson bounds need a counts vector"))
            }
            (_, MarginData::Counts(_)) => Err(invalid(
                "empirical Bernstein and confidence-sequence bounds need a probability matrix",
            )),
        }
    }
}

fn clip(p: f64) -> (f64, bool) {
    let c = p.clamp(PROBABILITY_CLIP, 1.0 - PROBABILITY_CLIP);
    (c, c != p)
}

/// Baseline margin estimator: a lower bound on the `predicted` class and an
/// upper bound on every other class, each at budget `α/m`; the margin is
/// taken against the largest competing upper bound. For the second margin
/// the bounds are clipped and mapped through `Φ⁻¹`.
pub fn bonferroni_margin(
    data: MarginData<'_>,
    predicted: usize,
    level: ConfidenceLevel,
    kind: MarginKind,
    provider: BoundProvider,
) -> Result<MarginEstimate> {
    let m = data.num_classes();
    if m < 2 {
        return Err(CertError::Degenerate(format!(
            "margin needs at least two classes, got {m}"
        )));
    }
    if predicted >= m {
        return Err(invalid(format!("class index {predicted} out of range for {m} classes")));
    }
    let per_class = level.split(m);
    let lower = provider.class_bound(data, predicted, per_class, false)?;
    let mut upper = f64::NEG_INFINITY;
    for j in (0..m).filter(|&j| j != predicted) {
        upper = upper.max(provider.class_bound(data, j, per_class, true)?);
    }
    let mut estimate = MarginEstimate::new(lower - upper, kind, level, provider.method(), predicted);
    if kind == MarginKind::Second {
        let (lo, clipped_lo) = clip(lower);
        let (up, clipped_up) = clip(upper);
        estimate.value = gaussian_quantile(lo)? - gaussian_quantile(up)?;
        estimate.clipped = clipped_lo || clipped_up;
    }
    Ok(estimate)
}

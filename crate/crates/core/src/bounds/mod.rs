//! Confidence bounds on Bernoulli and bounded means, and the per-class
//! Bonferroni margin estimator built from them.

mod bernstein;
mod bonferroni;
mod clopper_pearson;
mod sequence;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use bernstein::{empirical_bernstein_lower, empirical_bernstein_upper, BoundedSampleBatch};
pub use bonferroni::{bonferroni_margin, BoundProvider, MarginData, PROBABILITY_CLIP};
pub use clopper_pearson::{clopper_pearson_lower, clopper_pearson_upper};
pub use sequence::ConfidenceSequenceState;

/// Miscoverage budget `α`; the bound holds with probability `1 - α`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ConfidenceLevel(f64);

impl ConfidenceLevel {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(ConfidenceLevel(alpha))
        } else {
            Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")))
        }
    }

    pub fn alpha(self) -> f64 {
        self.0
    }

    pub fn level(self) -> f64 {
        1.0 - self.0
    }

    /// Splits the budget evenly across `parts` bounds.
    pub fn split(self, parts: usize) -> Self {
        ConfidenceLevel(self.0 / parts.max(1) as f64)
    }
}

impl TryFrom<f64> for ConfidenceLevel {
    type Error = crate::error::CertError;

    fn try_from(alpha: f64) -> Result<Self> {
        ConfidenceLevel::new(alpha)
    }
}

impl From<ConfidenceLevel> for f64 {
    fn from(level: ConfidenceLevel) -> f64 {
        level.0
    }
}

/// Which margin is bounded: in probability space (`First`) or in Gaussian
/// quantile space (`Second`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MarginKind {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EstimatorMethod {
    CpBonferroni,
    EbBonferroni,
    CsBonferroni,
    DiscreteJoint,
    ContDirectEb,
    ContDirectCs,
}

impl EstimatorMethod {
    pub const ALL: [EstimatorMethod; 6] = [
        EstimatorMethod::CpBonferroni,
        EstimatorMethod::EbBonferroni,
        EstimatorMethod::CsBonferroni,
        EstimatorMethod::DiscreteJoint,
        EstimatorMethod::ContDirectEb,
        EstimatorMethod::ContDirectCs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorMethod::CpBonferroni => "CP_BONFERRONI",
            EstimatorMethod::EbBonferroni => "EB_BONFERRONI",
            EstimatorMethod::CsBonferroni => "CS_BONFERRONI",
            EstimatorMethod::DiscreteJoint => "DISCRETE_JOINT",
            EstimatorMethod::ContDirectEb => "CONT_DIRECT_EB",
            EstimatorMethod::ContDirectCs => "CONT_DIRECT_CS",
        }
    }

    pub fn is_discrete(self) -> bool {
        matches!(
            self,
            EstimatorMethod::CpBonferroni | EstimatorMethod::DiscreteJoint
        )
    }

    pub fn is_bonferroni(self) -> bool {
        matches!(
            self,
            EstimatorMethod::CpBonferroni
                | EstimatorMethod::EbBonferroni
                | EstimatorMethod::CsBonferroni
        )
    }
}

impl std::fmt::Display for EstimatorMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EstimatorMethod {
    type Err = crate::error::CertError;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorMethod::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| invalid(format!("unknown method identifier `{s}`")))
    }
}

/// A lower confidence bound on the first or second margin of the smoothed
/// classifier at the predicted class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginEstimate {
    pub value: f64,
    pub kind: MarginKind,
    pub level: ConfidenceLevel,
    pub method: EstimatorMethod,
    pub predicted: usize,
    /// A probability bound was clipped away from {0, 1} before `Φ⁻¹`.
    pub clipped: bool,
    /// The estimator delegated to the Bonferroni baseline.
    pub fallback: bool,
}

impl MarginEstimate {
    pub(crate) fn new(
        value: f64,
        kind: MarginKind,
        level: ConfidenceLevel,
        method: EstimatorMethod,
        predicted: usize,
    ) -> Self {
        MarginEstimate {
            value,
            kind,
            level,
            method,
            predicted,
            clipped: false,
            fallback: false,
        }
    }
}

//! Certified margins and robustness radii for randomized smoothing.
//!
//! Hard-output counts are bounded either per class with a Bonferroni split
//! ([`bounds`]) or jointly through the exact law of the margin statistic
//! ([`discrete`]); soft-output probability matrices are bounded through the
//! per-sample margin ([`continuous`]). [`radius`] turns the bounds into
//! radii and accuracy curves.

pub mod bounds;
pub mod continuous;
pub mod discrete;
pub mod error;
pub mod io;
pub mod radius;
pub mod smoothing;
pub mod special;

pub use bounds::{
    bonferroni_margin, BoundProvider, ConfidenceLevel, ConfidenceSequenceState, EstimatorMethod,
    MarginData, MarginEstimate, MarginKind,
};
pub use continuous::{continuous_margin, DirectMethod, MarginSampleStream};
pub use discrete::{first_margin_lcb, second_margin_lcb, SignomialSubproblem, SolverCertificate};
pub use error::{CertError, Result};
pub use radius::{cta_curve, gain_table, CTACurve, CertifiedRadius, Gain, RadiusKind};
pub use smoothing::{
    AffineClassifier, BaseClassifier, CountsVector, FixedMultinomialClassifier, NoiseConfig,
    ProbabilityMatrix, SimplexMapSpec,
};
pub use special::TaylorOrder;

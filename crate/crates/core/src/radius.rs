//! Certified radii from margin bounds and certified test-set accuracy curves.

use std::f64::consts::SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bounds::{clopper_pearson_lower, ConfidenceLevel, MarginEstimate};
use crate::error::{invalid, CertError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RadiusKind {
    R1,
    R2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedRadius {
    pub value: f64,
    pub kind: RadiusKind,
    pub margin: MarginEstimate,
    /// Lipschitz constant (R1) or noise level (R2).
    pub scale: f64,
    pub correct: bool,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {v}")))
    }
}

/// `R₁ = M / (√2 L)`, zero when misclassified or the margin is not positive.
pub fn radius_first(margin: MarginEstimate, lipschitz: f64, correct: bool) -> Result<CertifiedRadius> {
    positive("Lipschitz constant", lipschitz)?;
    let value = if correct {
        margin.value.max(0.0) / (SQRT_2 * lipschitz)
    } else {
        0.0
    };
    Ok(CertifiedRadius {
        value,
        kind: RadiusKind::R1,
        margin,
        scale: lipschitz,
        correct,
    })
}

/// `R₂ = (σ/2) M`, zero when misclassified or the margin is not positive.
pub fn radius_second(margin: MarginEstimate, sigma: f64, correct: bool) -> Result<CertifiedRadius> {
    positive("sigma", sigma)?;
    let value = if correct {
        0.5 * sigma * margin.value.max(0.0)
    } else {
        0.0
    };
    Ok(CertifiedRadius {
        value,
        kind: RadiusKind::R2,
        margin,
        scale: sigma,
        correct,
    })
}

/// Certified test-set accuracy on a grid of radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CTACurve {
    pub radii: Vec<f64>,
    pub approx_acc: Vec<f64>,
    pub lcb_acc: Vec<f64>,
    pub n: usize,
}

impl CTACurve {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }
}

/// `(radius, correct)` pairs in, curve out. An input counts at `r` when it
/// is correct and its radius exceeds `r` strictly.
pub fn cta_curve(records: &[(f64, bool)], grid: &[f64], level: ConfidenceLevel) -> Result<CTACurve> {
    if records.is_empty() {
        return Err(CertError::EmptyInput);
    }
    if grid.iter().any(|r| !r.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("radius grid must be finite and strictly increasing"));
    }
    let n = records.len();
    let mut approx_acc = Vec::with_capacity(grid.len());
    let mut lcb_acc = Vec::with_capacity(grid.len());
    for &r in grid {
        let hits = records.iter().filter(|(rad, ok)| *ok && *rad > r).count();
        approx_acc.push(hits as f64 / n as f64);
        lcb_acc.push(clopper_pearson_lower(hits as u64, n as u64, level)?);
    }
    Ok(CTACurve {
        radii: grid.to_vec(),
        approx_acc,
        lcb_acc,
        n,
    })
}

/// Convenience form of [`cta_curve`] over certified radii.
pub fn cta_curve_from(
    radii: &[CertifiedRadius],
    grid: &[f64],
    level: ConfidenceLevel,
) -> Result<CTACurve> {
    let records: Vec<(f64, bool)> = radii.iter().map(|r| (r.value, r.correct)).collect();
    cta_curve(&records, grid, level)
}

/// Relative improvement of one accuracy over another, in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gain {
    Finite(f64),
    Infinite,
}

impl Gain {
    pub fn between(baseline: f64, ours: f64) -> Gain {
        if baseline == 0.0 {
            if ours > 0.0 {
                Gain::Infinite
            } else {
                Gain::Finite(0.0)
            }
        } else {
            Gain::Finite(100.0 * (ours - baseline) / baseline)
        }
    }
}

impl fmt::Display for Gain {
    /// Two decimals; infinite gains print as `inf`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gain::Finite(g) => write!(f, "{g:.2}"),
            Gain::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainRow {
    pub radius: f64,
    pub baseline: f64,
    pub ours: f64,
    pub gain: Gain,
}

/// Per-radius gains of `ours` over `baseline`, on the approximate accuracy.
pub fn gain_table(baseline: &CTACurve, ours: &CTACurve) -> Result<Vec<GainRow>> {
    if baseline.radii != ours.radii {
        return Err(CertError::GridMismatch(format!(
            "baseline has {} radii, ours has {}, or the values differ",
            baseline.radii.len(),
            ours.radii.len()
        )));
    }
    Ok(baseline
        .radii
        .iter()
        .zip(baseline.approx_acc.iter().zip(&ours.approx_acc))
        .map(|(&radius, (&b, &o))| GainRow {
            radius,
            baseline: b,
            ours: o,
            gain: Gain::between(b, o),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{EstimatorMethod, MarginKind};

    fn margin(v: f64, kind: MarginKind) -> MarginEstimate {
        MarginEstimate::new(v, kind, ConfidenceLevel::new(0.05).unwrap(), EstimatorMethod::DiscreteJoint, 0)
    }

    #[test]
    fn first_radius_identities() {
        assert_eq!(radius_first(margin(0.0, MarginKind::First), 2.0, true).unwrap().value, 0.0);
        let r = radius_first(margin(1.0, MarginKind::First), 1.0 / SQRT_2, true).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15);
        assert_eq!(radius_first(margin(0.9, MarginKind::First), 1.0, false).unwrap().value, 0.0);
        assert!(radius_first(margin(0.9, MarginKind::First), 0.0, true).is_err());
    }

    #[test]
    fn second_radius_identities() {
        assert_eq!(radius_second(margin(2.0, MarginKind::Second), 0.5, true).unwrap().value, 0.5);
        assert_eq!(radius_second(margin(-0.3, MarginKind::Second), 0.5, true).unwrap().value, 0.0);
        let a = radius_second(margin(1.3, MarginKind::Second), 0.25, true).unwrap().value;
        let b = radius_second(margin(1.3, MarginKind::Second), 0.5, true).unwrap().value;
        assert_eq!(2.0 * a, b);
        assert!(radius_second(margin(1.0, MarginKind::Second), -1.0, true).is_err());
    }

    #[test]
    fn counting_at_a_single_radius() {
        let recs: Vec<(f64, bool)> = [0.1, 0.2, 0.3, 0.4, 0.5].iter().map(|r| (*r, true)).collect();
        let c = cta_curve(&recs, &[0.25], ConfidenceLevel::new(0.05).unwrap()).unwrap();
        assert!((c.approx_acc[0] - 0.6).abs() < 1e-15);
        let strict = cta_curve(&recs, &[0.3], ConfidenceLevel::new(0.05).unwrap()).unwrap();
        assert!((strict.approx_acc[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn zero_radii_give_zero_curve() {
        let recs = vec![(0.0, true); 4];
        let c = cta_curve(&recs, &[0.0, 0.5, 1.0], ConfidenceLevel::new(0.05).unwrap()).unwrap();
        assert!(c.approx_acc.iter().all(|a| *a == 0.0));
    }

    #[test]
    fn curve_errors() {
        let level = ConfidenceLevel::new(0.05).unwrap();
        assert_eq!(cta_curve(&[], &[0.0], level), Err(CertError::EmptyInput));
        assert!(cta_curve(&[(1.0, true)], &[0.5, 0.5], level).is_err());
    }

    #[test]
    fn gain_formatting() {
        assert_eq!(Gain::between(0.774, 0.780).to_string(), "0.78");
        assert_eq!(Gain::between(0.582, 0.614).to_string(), "5.50");
        assert_eq!(Gain::between(0.0, 0.538).to_string(), "inf");
        assert_eq!(Gain::between(0.0, 0.0), Gain::Finite(0.0));
    }

    #[test]
    fn gain_table_requires_matching_grids() {
        let level = ConfidenceLevel::new(0.05).unwrap();
        let a = cta_curve(&[(1.0, true)], &[0.0, 0.5], level).unwrap();
        let b = cta_curve(&[(1.0, true)], &[0.0, 0.6], level).unwrap();
        assert!(matches!(gain_table(&a, &b), Err(CertError::GridMismatch(_))));
        assert_eq!(gain_table(&a, &a).unwrap().len(), 2);
    }
}

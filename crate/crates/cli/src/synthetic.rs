//! Synthetic data sources.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smoothcert_core::{AffineClassifier, FixedMultinomialClassifier};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticSpec {
    /// Random affine logits; weights uniform on `[-spread, spread]`, inputs
    /// uniform on `[-2, 2]^dim`.
    Affine {
        classes: usize,
        dim: usize,
        inputs: usize,
        spread: f64,
    },
    /// Every input draws its hard label from the same categorical law.
    Multinomial { probs: Vec<f64>, inputs: usize },
}

fn bad(spec: &str, why: impl fmt::Display) -> CliError {
    CliError::Config(format!("synthetic spec `{spec}`: {why}"))
}

impl FromStr for SyntheticSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (kind, rest) = s.split_once(':').ok_or_else(|| bad(s, "missing `kind:`"))?;
        match kind.trim() {
            "affine" => {
                let (mut classes, mut dim, mut inputs, mut spread) = (None, None, None, 1.0);
                for kv in rest.split(',') {
                    let (k, v) = kv.split_once('=').ok_or_else(|| bad(s, format!("`{kv}` is not key=value")))?;
                    let v = v.trim();
                    match k.trim() {
                        "classes" => classes = Some(v.parse().map_err(|e| bad(s, e))?),
                        "dim" => dim = Some(v.parse().map_err(|e| bad(s, e))?),
                        "inputs" => inputs = Some(v.parse().map_err(|e| bad(s, e))?),
                        "spread" => spread = v.parse().map_err(|e| bad(s, e))?,
                        other => return Err(bad(s, format!("unknown key `{other}`"))),
                    }
                }
                let classes: usize = classes.ok_or_else(|| bad(s, "missing classes"))?;
                let dim: usize = dim.ok_or_else(|| bad(s, "missing dim"))?;
                let inputs: usize = inputs.ok_or_else(|| bad(s, "missing inputs"))?;
                if classes < 2 || dim == 0 || inputs == 0 || !(spread > 0.0 && f64::is_finite(spread)) {
                    return Err(bad(s, "need classes >= 2, dim >= 1, inputs >= 1, spread > 0"));
                }
                Ok(SyntheticSpec::Affine {
                    classes,
                    dim,
                    inputs,
                    spread,
                })
            }
            "multinomial" => {
                let (probs, inputs) = rest.split_once(';').ok_or_else(|| bad(s, "missing `;inputs=`"))?;
                let probs = probs
                    .split(',')
                    .map(|p| p.trim().parse::<f64>().map_err(|e| bad(s, e)))
                    .collect::<Result<Vec<_>, _>>()?;
                let inputs = inputs
                    .trim()
                    .strip_prefix("inputs=")
                    .ok_or_else(|| bad(s, "expected inputs=<count>"))?
                    .parse()
                    .map_err(|e| bad(s, e))?;
                FixedMultinomialClassifier::new(&probs, 1.0).map_err(|e| bad(s, e))?;
                if inputs == 0 {
                    return Err(bad(s, "inputs must be at least 1"));
                }
                Ok(SyntheticSpec::Multinomial { probs, inputs })
            }
            other => Err(bad(s, format!("unknown kind `{other}`"))),
        }
    }
}

impl fmt::Display for SyntheticSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntheticSpec::Affine {
                classes,
                dim,
                inputs,
                spread,
            } => write!(f, "affine:classes={classes},dim={dim},inputs={inputs},spread={spread}"),
            SyntheticSpec::Multinomial { probs, inputs } => {
                let p: Vec<String> = probs.iter().map(|p| p.to_string()).collect();
                write!(f, "multinomial:{};inputs={inputs}", p.join(","))
            }
        }
    }
}

pub enum SyntheticModel {
    Affine(AffineClassifier),
    Multinomial(FixedMultinomialClassifier),
}

/// A classifier with the inputs to smooth it at and their labels.
pub struct SyntheticTask {
    pub model: SyntheticModel,
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |best, j| if v[j] > v[best] { j } else { best })
}

impl SyntheticSpec {
    /// Labels are the noiseless prediction (affine) or the most likely class
    /// (multinomial).
    pub fn build(&self, seed: u64, sigma: f64) -> Result<SyntheticTask, CliError> {
        match self {
            SyntheticSpec::Affine {
                classes,
                dim,
                inputs,
                spread,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let weights: Vec<Vec<f64>> = (0..*classes)
                    .map(|_| (0..*dim).map(|_| rng.random_range(-spread..=*spread)).collect())
                    .collect();
                let xs: Vec<Vec<f64>> = (0..*inputs)
                    .map(|_| (0..*dim).map(|_| rng.random_range(-2.0..=2.0)).collect())
                    .collect();
                let labels = xs
                    .iter()
                    .map(|x| {
                        let logits: Vec<f64> =
                            weights.iter().map(|w| w.iter().zip(x).map(|(a, b)| a * b).sum()).collect();
                        argmax(&logits)
                    })
                    .collect();
                let clf = AffineClassifier::new(weights, vec![0.0; *classes])?;
                Ok(SyntheticTask {
                    model: SyntheticModel::Affine(clf),
                    inputs: xs,
                    labels,
                })
            }
            SyntheticSpec::Multinomial { probs, inputs } => Ok(SyntheticTask {
                model: SyntheticModel::Multinomial(FixedMultinomialClassifier::new(probs, sigma)?),
                inputs: vec![vec![0.0]; *inputs],
                labels: vec![argmax(probs); *inputs],
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["affine:classes=10,dim=8,inputs=100,spread=1.5", "multinomial:0.6,0.3,0.1;inputs=50"] {
            let spec: SyntheticSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
    }

    #[test]
    fn parse_errors() {
        for s in [
            "affine:classes=1,dim=2,inputs=3",
            "affine:classes=3,dim=2",
            "affine:classes=3,dim=2,inputs=3,color=red",
            "multinomial:0.5,0.6;inputs=2",
            "multinomial:0.5,0.5",
            "gaussian:1",
        ] {
            assert!(s.parse::<SyntheticSpec>().is_err(), "{s}");
        }
    }

    #[test]
    fn build_is_deterministic() {
        let spec: SyntheticSpec = "affine:classes=4,dim=3,inputs=5,spread=1".parse().unwrap();
        let a = spec.build(3, 0.5).unwrap();
        let b = spec.build(3, 0.5).unwrap();
        assert_eq!(a.inputs, b.inputs);
        assert_eq!(a.labels, b.labels);
        assert!(a.labels.iter().all(|l| *l < 4));
    }
}

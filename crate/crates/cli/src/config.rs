//! Experiment configuration: a flat TOML file, overridden by flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use smoothcert_core::{ConfidenceLevel, EstimatorMethod, MarginKind, TaylorOrder};

use crate::error::CliError;
use crate::synthetic::SyntheticSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum RadiusChoice {
    R1,
    R2,
}

/// Every key is optional here; missing keys take defaults after merging.
#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    /// Experiment name, used as the output subdirectory.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Monte Carlo samples per input (synthetic sources).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Softmax temperature for continuous synthetic sources.
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Miscoverage of each margin bound.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub taylor_order: Option<usize>,
    /// Bisection tolerance of the joint bound.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Comma-separated method identifiers, e.g. CP_BONFERRONI,DISCRETE_JOINT.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Counts CSV (discrete) or probability JSON lines (continuous).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// `affine:classes=..,dim=..,inputs=..,spread=..` or
    /// `multinomial:p0,p1,...;inputs=..`.
    #[arg(long)]
    pub synthetic: Option<String>,
    #[arg(long, value_enum)]
    pub radius: Option<RadiusChoice>,
    /// Lipschitz constant of the base classifier, for R1.
    #[arg(long)]
    pub lipschitz: Option<f64>,
    /// Comma-separated radius grid for the CTA curves.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    /// Miscoverage of the CTA lower confidence bound.
    #[arg(long)]
    pub cta_alpha: Option<f64>,
    /// Output root directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RawConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Keys set in `other` win.
    pub fn overlay(self, other: RawConfig) -> RawConfig {
        RawConfig {
            name: other.name.or(self.name),
            mode: other.mode.or(self.mode),
            n: other.n.or(self.n),
            sigma: other.sigma.or(self.sigma),
            temperature: other.temperature.or(self.temperature),
            alpha: other.alpha.or(self.alpha),
            taylor_order: other.taylor_order.or(self.taylor_order),
            eps: other.eps.or(self.eps),
            methods: other.methods.or(self.methods),
            seed: other.seed.or(self.seed),
            data: other.data.or(self.data),
            synthetic: other.synthetic.or(self.synthetic),
            radius: other.radius.or(self.radius),
            lipschitz: other.lipschitz.or(self.lipschitz),
            radii: other.radii.or(self.radii),
            cta_alpha: other.cta_alpha.or(self.cta_alpha),
            out: other.out.or(self.out),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    File(PathBuf),
    Synthetic { spec: SyntheticSpec, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub mode: Mode,
    pub n: usize,
    pub sigma: f64,
    pub temperature: f64,
    pub alpha: ConfidenceLevel,
    pub taylor_order: TaylorOrder,
    pub eps: f64,
    pub methods: Vec<EstimatorMethod>,
    pub source: Source,
    pub radius: RadiusChoice,
    pub lipschitz: Option<f64>,
    pub radii: Vec<f64>,
    pub cta_alpha: ConfidenceLevel,
    pub out: PathBuf,
}

pub const DEFAULT_ALPHA: f64 = 0.001;

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

fn level(name: &str, a: f64) -> Result<ConfidenceLevel, CliError> {
    ConfidenceLevel::new(a).map_err(|e| CliError::Config(format!("{name}: {e}")))
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        let mode = raw.mode.unwrap_or(Mode::Discrete);
        let source = match (&raw.data, &raw.synthetic) {
            (Some(p), None) => Source::File(p.clone()),
            (None, Some(s)) => Source::Synthetic {
                spec: s.parse()?,
                seed: raw.seed.ok_or_else(|| {
                    CliError::Config("--seed is required for synthetic sources".into())
                })?,
            },
            _ => {
                return Err(CliError::Config(
                    "exactly one of `data` and `synthetic` must be set".into(),
                ))
            }
        };
        let methods = match &raw.methods {
            Some(names) => names
                .iter()
                .map(|s| s.parse::<EstimatorMethod>().map_err(|e| CliError::Config(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?,
            None => match mode {
                Mode::Discrete => vec![EstimatorMethod::CpBonferroni, EstimatorMethod::DiscreteJoint],
                Mode::Continuous => vec![
                    EstimatorMethod::EbBonferroni,
                    EstimatorMethod::ContDirectEb,
                    EstimatorMethod::CsBonferroni,
                    EstimatorMethod::ContDirectCs,
                ],
            },
        };
        if methods.is_empty() {
            return Err(CliError::Config("no methods requested".into()));
        }
        if let Some(m) = methods.iter().find(|m| m.is_discrete() != (mode == Mode::Discrete)) {
            return Err(CliError::Config(format!("method {m} does not apply to {mode:?} mode")));
        }
        let radius = raw.radius.unwrap_or(RadiusChoice::R2);
        let lipschitz = raw.lipschitz.map(|l| positive("lipschitz", l)).transpose()?;
        if radius == RadiusChoice::R1 && lipschitz.is_none() {
            return Err(CliError::Config("radius R1 needs a lipschitz constant".into()));
        }
        let radii = raw
            .radii
            .clone()
            .unwrap_or_else(|| (0..=40).map(|i| i as f64 / 20.0).collect());
        if radii.is_empty() || radii.windows(2).any(|w| w[0] >= w[1]) || radii.iter().any(|r| !r.is_finite()) {
            return Err(CliError::Config("radii must be a nonempty increasing list".into()));
        }
        let n = raw.n.unwrap_or(100);
        if n == 0 {
            return Err(CliError::Config("n must be at least 1".into()));
        }
        let order = raw.taylor_order.unwrap_or(TaylorOrder::DEFAULT.get());
        if order == 0 {
            return Err(CliError::Config("taylor_order must be at least 1".into()));
        }
        Ok(ExperimentConfig {
            name: raw.name.clone().unwrap_or_else(|| "experiment".into()),
            mode,
            n,
            sigma: positive("sigma", raw.sigma.unwrap_or(0.25))?,
            temperature: positive("temperature", raw.temperature.unwrap_or(1.0))?,
            alpha: level("alpha", raw.alpha.unwrap_or(DEFAULT_ALPHA))?,
            taylor_order: TaylorOrder::new(order),
            eps: positive("eps", raw.eps.unwrap_or(1e-3))?,
            methods,
            source,
            radius,
            lipschitz,
            radii,
            cta_alpha: level("cta_alpha", raw.cta_alpha.unwrap_or(0.05))?,
            out: raw.out.clone().unwrap_or_else(|| PathBuf::from("out")),
        })
    }

    pub fn margin_kind(&self) -> MarginKind {
        match self.radius {
            RadiusChoice::R1 => MarginKind::First,
            RadiusChoice::R2 => MarginKind::Second,
        }
    }

    /// The resolved configuration in the same flat format it is read from.
    pub fn echo(&self) -> String {
        let (data, synthetic, seed) = match &self.source {
            Source::File(p) => (Some(p.clone()), None, None),
            Source::Synthetic { spec, seed } => (None, Some(spec.to_string()), Some(*seed)),
        };
        let raw = RawConfig {
            name: Some(self.name.clone()),
            mode: Some(self.mode),
            n: Some(self.n),
            sigma: Some(self.sigma),
            temperature: Some(self.temperature),
            alpha: Some(self.alpha.alpha()),
            taylor_order: Some(self.taylor_order.get()),
            eps: Some(self.eps),
            methods: Some(self.methods.iter().map(|m| m.name().to_string()).collect()),
            seed,
            data,
            synthetic,
            radius: Some(self.radius),
            lipschitz: self.lipschitz,
            radii: Some(self.radii.clone()),
            cta_alpha: Some(self.cta_alpha.alpha()),
            out: Some(self.out.clone()),
        };
        toml::to_string(&raw).expect("flat config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(text: &str) -> Result<RawConfig, toml::de::Error> {
        toml::from_str(text)
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(raw("sigmaa = 0.5").is_err());
        assert!(raw("sigma = 0.5").is_ok());
    }

    #[test]
    fn flags_override_file() {
        let file = raw("sigma = 0.5\nn = 50").unwrap();
        let flags = RawConfig {
            sigma: Some(1.0),
            ..RawConfig::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.sigma, Some(1.0));
        assert_eq!(merged.n, Some(50));
    }

    #[test]
    fn validation() {
        let ok = raw("synthetic = \"multinomial:0.6,0.4;inputs=3\"\nseed = 1").unwrap();
        let cfg = ExperimentConfig::from_raw(&ok).unwrap();
        assert_eq!(cfg.alpha.alpha(), DEFAULT_ALPHA);
        assert_eq!(cfg.methods.len(), 2);

        let no_seed = raw("synthetic = \"multinomial:0.6,0.4;inputs=3\"").unwrap();
        assert!(ExperimentConfig::from_raw(&no_seed).is_err());
        let both = raw("synthetic = \"multinomial:0.6,0.4;inputs=3\"\nseed = 1\ndata = \"x.csv\"").unwrap();
        assert!(ExperimentConfig::from_raw(&both).is_err());
        let wrong_mode = raw("data = \"x.csv\"\nmethods = [\"CONT_DIRECT_EB\"]").unwrap();
        assert!(ExperimentConfig::from_raw(&wrong_mode).is_err());
        let r1 = raw("data = \"x.csv\"\nradius = \"R1\"").unwrap();
        assert!(ExperimentConfig::from_raw(&r1).is_err());
    }

    #[test]
    fn echo_parses_back() {
        let cfg = ExperimentConfig::from_raw(
            &raw("synthetic = \"affine:classes=3,dim=2,inputs=4,spread=1\"\nseed = 9\nmode = \"continuous\"").unwrap(),
        )
        .unwrap();
        let again = ExperimentConfig::from_raw(&raw(&cfg.echo()).unwrap()).unwrap();
        assert_eq!(again, cfg);
    }
}

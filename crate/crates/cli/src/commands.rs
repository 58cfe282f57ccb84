use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use smoothcert_core::io::{read_counts, read_prob_matrices, write_cta_csv};
use smoothcert_core::radius::{cta_curve, radius_first, radius_second};
use smoothcert_core::smoothing::{derive_seed, sample_counts, sample_prob_matrix};
use smoothcert_core::special::gaussian_quantile;
use smoothcert_core::{
    bonferroni_margin, continuous_margin, first_margin_lcb, gain_table, second_margin_lcb,
    BaseClassifier, BoundProvider, CTACurve, CountsVector, DirectMethod, EstimatorMethod,
    MarginData, MarginEstimate, MarginKind, NoiseConfig, ProbabilityMatrix, SimplexMapSpec,
};

use crate::config::{ExperimentConfig, Mode, RadiusChoice, Source};
use crate::error::CliError;
use crate::synthetic::{SyntheticModel, SyntheticSpec};

pub enum Observation {
    Counts(CountsVector),
    Matrix(ProbabilityMatrix),
}

pub struct Input {
    pub input_id: u64,
    pub label: usize,
    pub observation: Observation,
}

fn classifier(model: &SyntheticModel) -> &dyn BaseClassifier {
    match model {
        SyntheticModel::Affine(c) => c,
        SyntheticModel::Multinomial(c) => c,
    }
}

fn observe(
    clf: &dyn BaseClassifier,
    x: &[f64],
    noise: &NoiseConfig,
    cfg: &ExperimentConfig,
) -> Result<Observation, CliError> {
    Ok(match cfg.mode {
        Mode::Discrete => Observation::Counts(sample_counts(clf, x, noise)?),
        Mode::Continuous => {
            let spec = SimplexMapSpec::softmax(cfg.temperature)?;
            Observation::Matrix(sample_prob_matrix(clf, x, noise, spec)?)
        }
    })
}

pub fn load_inputs(cfg: &ExperimentConfig) -> Result<Vec<Input>, CliError> {
    match &cfg.source {
        Source::File(path) => {
            let file = File::open(path)
                .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
            let reader = BufReader::new(file);
            let inputs = match cfg.mode {
                Mode::Discrete => read_counts(reader)?
                    .into_iter()
                    .map(|r| Input {
                        input_id: r.input_id,
                        label: r.label,
                        observation: Observation::Counts(r.counts),
                    })
                    .collect(),
                Mode::Continuous => read_prob_matrices(reader)?
                    .into_iter()
                    .map(|r| Input {
                        input_id: r.input_id,
                        label: r.label,
                        observation: Observation::Matrix(r.matrix),
                    })
                    .collect(),
            };
            Ok(inputs)
        }
        Source::Synthetic { spec, seed } => {
            let task = spec.build(*seed, cfg.sigma)?;
            let clf = classifier(&task.model);
            task.inputs
                .par_iter()
                .zip(&task.labels)
                .enumerate()
                .map(|(i, (x, &label))| {
                    let noise = NoiseConfig::new(cfg.sigma, cfg.n, derive_seed(*seed, i as u64))?;
                    Ok(Input {
                        input_id: i as u64,
                        label,
                        observation: observe(clf, x, &noise, cfg)?,
                    })
                })
                .collect()
        }
    }
}

fn direct(method: EstimatorMethod) -> DirectMethod {
    match method {
        EstimatorMethod::ContDirectCs => DirectMethod::ConfidenceSequence,
        _ => DirectMethod::EmpiricalBernstein,
    }
}

pub fn estimate(
    obs: &Observation,
    method: EstimatorMethod,
    kind: MarginKind,
    cfg: &ExperimentConfig,
) -> Result<MarginEstimate, CliError> {
    let level = cfg.alpha;
    let est = match (obs, method) {
        (Observation::Counts(c), EstimatorMethod::CpBonferroni) => bonferroni_margin(
            MarginData::Counts(c),
            c.predicted(),
            level,
            kind,
            BoundProvider::ClopperPearson,
        )?,
        (Observation::Counts(c), EstimatorMethod::DiscreteJoint) => match kind {
            MarginKind::First => first_margin_lcb(c, level, cfg.eps, true)?,
            MarginKind::Second => second_margin_lcb(c, level, cfg.eps, cfg.taylor_order)?,
        },
        (Observation::Matrix(m), EstimatorMethod::EbBonferroni | EstimatorMethod::CsBonferroni) => {
            let provider = if method == EstimatorMethod::EbBonferroni {
                BoundProvider::EmpiricalBernstein
            } else {
                BoundProvider::ConfidenceSequence
            };
            bonferroni_margin(MarginData::Matrix(m), m.predicted(), level, kind, provider)?
        }
        (Observation::Matrix(m), EstimatorMethod::ContDirectEb | EstimatorMethod::ContDirectCs) => {
            continuous_margin(m, level, kind, direct(method), cfg.taylor_order)?
        }
        _ => {
            return Err(CliError::Config(format!(
                "method {method} does not apply to {:?} mode",
                cfg.mode
            )))
        }
    };
    Ok(est)
}

#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub input_id: u64,
    pub method: EstimatorMethod,
    pub margin: f64,
    pub radius: f64,
    pub correct: bool,
    pub clipped: bool,
    pub fallback: bool,
}

fn record(input: &Input, method: EstimatorMethod, cfg: &ExperimentConfig) -> Result<Record, CliError> {
    let est = estimate(&input.observation, method, cfg.margin_kind(), cfg)?;
    let correct = est.predicted == input.label;
    let radius = match cfg.radius {
        RadiusChoice::R1 => radius_first(est, cfg.lipschitz.unwrap_or(1.0), correct)?,
        RadiusChoice::R2 => radius_second(est, cfg.sigma, correct)?,
    };
    Ok(Record {
        input_id: input.input_id,
        method,
        margin: est.value,
        radius: radius.value,
        correct,
        clipped: est.clipped,
        fallback: est.fallback,
    })
}

/// Per-method records, ordered by input id.
pub fn certify_inputs(
    inputs: &[Input],
    cfg: &ExperimentConfig,
) -> Result<Vec<(EstimatorMethod, Vec<Record>)>, CliError> {
    cfg.methods
        .iter()
        .map(|&method| {
            let mut recs = inputs
                .par_iter()
                .map(|input| record(input, method, cfg))
                .collect::<Result<Vec<_>, _>>()?;
            recs.sort_by_key(|r| r.input_id);
            Ok((method, recs))
        })
        .collect()
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<(), CliError>) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Runs every method and writes `<out>/<name>/<method>/{cta.csv,records.jsonl}`
/// plus `<out>/<name>/config.echo`. Returns the experiment directory.
pub fn certify(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let inputs = load_inputs(cfg)?;
    let results = certify_inputs(&inputs, cfg)?;
    let dir = cfg.out.join(&cfg.name);
    fs::create_dir_all(&dir)?;
    write_file(&dir.join("config.echo"), |w| Ok(w.write_all(cfg.echo().as_bytes())?))?;
    for (method, recs) in results {
        let mdir = dir.join(method.name());
        fs::create_dir_all(&mdir)?;
        write_file(&mdir.join("records.jsonl"), |w| {
            for r in &recs {
                serde_json::to_writer(&mut *w, r).map_err(|e| CliError::Data(e.to_string()))?;
                w.write_all(b"\n")?;
            }
            Ok(())
        })?;
        let pairs: Vec<(f64, bool)> = recs.iter().map(|r| (r.radius, r.correct)).collect();
        let curve = cta_curve(&pairs, &cfg.radii, cfg.cta_alpha)?;
        write_file(&mdir.join("cta.csv"), |w| Ok(write_cta_csv(w, &curve)?))?;
    }
    Ok(dir)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepAxis {
    N,
    Sigma,
    Temperature,
}

/// One `certify` run per axis value, under `<name>/<axis>=<value>`.
pub fn sweep(cfg: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<PathBuf>, CliError> {
    if values.is_empty() || values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(CliError::Config("sweep values must be positive".into()));
    }
    values
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            let label = match axis {
                SweepAxis::N => {
                    if v.fract() != 0.0 {
                        return Err(CliError::Config(format!("n must be an integer, got {v}")));
                    }
                    c.n = v as usize;
                    format!("n={}", c.n)
                }
                SweepAxis::Sigma => {
                    c.sigma = v;
                    format!("sigma={v}")
                }
                SweepAxis::Temperature => {
                    c.temperature = v;
                    format!("temperature={v}")
                }
            };
            c.name = format!("{}/{label}", cfg.name);
            certify(&c)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub method: EstimatorMethod,
    pub replications: usize,
    pub misses: usize,
    pub miscoverage: f64,
    pub std_error: f64,
}

fn quantile_or_inf(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        gaussian_quantile(p).expect("p in (0, 1)")
    }
}

/// True margin of class `c` under the categorical law `probs`.
fn true_margin(probs: &[f64], c: usize, kind: MarginKind) -> f64 {
    let other = (0..probs.len())
        .filter(|&j| j != c)
        .map(|j| probs[j])
        .fold(f64::NEG_INFINITY, f64::max);
    match kind {
        MarginKind::First => probs[c] - other,
        MarginKind::Second => quantile_or_inf(probs[c]) - quantile_or_inf(other),
    }
}

/// Miscoverage of each discrete method against the known class law: a
/// replication misses when the bound exceeds the true margin of the class
/// it certifies.
pub fn coverage(cfg: &ExperimentConfig, replications: usize) -> Result<Vec<CoverageRow>, CliError> {
    let (probs, seed) = match &cfg.source {
        Source::Synthetic {
            spec: SyntheticSpec::Multinomial { probs, .. },
            seed,
        } if cfg.mode == Mode::Discrete => (probs.clone(), *seed),
        _ => {
            return Err(CliError::Config(
                "coverage needs a discrete multinomial synthetic source".into(),
            ))
        }
    };
    if replications == 0 {
        return Err(CliError::Config("replications must be at least 1".into()));
    }
    let task = SyntheticSpec::Multinomial {
        probs: probs.clone(),
        inputs: 1,
    }
    .build(seed, cfg.sigma)?;
    let clf = classifier(&task.model);
    let kind = cfg.margin_kind();
    let draws = (0..replications)
        .into_par_iter()
        .map(|r| {
            let noise = NoiseConfig::new(cfg.sigma, cfg.n, derive_seed(seed, r as u64))?;
            Ok(sample_counts(clf, &task.inputs[0], &noise)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    cfg.methods
        .iter()
        .map(|&method| {
            let misses = draws
                .par_iter()
                .map(|c| {
                    let est = estimate(&Observation::Counts(c.clone()), method, kind, cfg)?;
                    Ok(usize::from(est.value > true_margin(&probs, est.predicted, kind)))
                })
                .collect::<Result<Vec<_>, CliError>>()?
                .into_iter()
                .sum::<usize>();
            let rate = misses as f64 / replications as f64;
            Ok(CoverageRow {
                method,
                replications,
                misses,
                miscoverage: rate,
                std_error: (rate * (1.0 - rate) / replications as f64).sqrt(),
            })
        })
        .collect()
}

pub fn write_coverage<W: Write>(w: W, rows: &[CoverageRow]) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| CliError::Data(e.to_string());
    out.write_record(["method", "replications", "misses", "miscoverage", "std_error"])
        .map_err(err)?;
    for r in rows {
        out.write_record([
            r.method.name().to_string(),
            r.replications.to_string(),
            r.misses.to_string(),
            r.miscoverage.to_string(),
            r.std_error.to_string(),
        ])
        .map_err(err)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a curve written by `certify`. The lower-bound column is kept as is.
pub fn read_cta(path: &Path) -> Result<CTACurve, CliError> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let header = rdr.headers().map_err(|e| CliError::Data(e.to_string()))?;
    if header != vec!["r", "approx_acc", "lcb_acc"] {
        return Err(CliError::Data(format!("{}: expected header r,approx_acc,lcb_acc", path.display())));
    }
    let mut curve = CTACurve {
        radii: Vec::new(),
        approx_acc: Vec::new(),
        lcb_acc: Vec::new(),
        n: 0,
    };
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Data(e.to_string()))?;
        let field = |k: usize| -> Result<f64, CliError> {
            rec[k].trim().parse().map_err(|_| {
                CliError::Data(format!("{} line {}: bad number `{}`", path.display(), i + 2, &rec[k]))
            })
        };
        curve.radii.push(field(0)?);
        curve.approx_acc.push(field(1)?);
        curve.lcb_acc.push(field(2)?);
    }
    if curve.radii.is_empty() {
        return Err(CliError::Data(format!("{}: no rows", path.display())));
    }
    Ok(curve)
}

/// Three-row layout: the radius grid as header, then baseline, ours, gain.
pub fn compare<W: Write>(baseline: &CTACurve, ours: &CTACurve, w: W) -> Result<(), CliError> {
    let rows = gain_table(baseline, ours)?;
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| CliError::Data(e.to_string());
    let line = |name: &str, cells: Vec<String>| {
        std::iter::once(name.to_string()).chain(cells).collect::<Vec<_>>()
    };
    out.write_record(line("r", rows.iter().map(|g| g.radius.to_string()).collect())).map_err(err)?;
    out.write_record(line("baseline", rows.iter().map(|g| format!("{:.3}", g.baseline)).collect()))
        .map_err(err)?;
    out.write_record(line("ours", rows.iter().map(|g| format!("{:.3}", g.ours)).collect()))
        .map_err(err)?;
    out.write_record(line("gain", rows.iter().map(|g| g.gain.to_string()).collect())).map_err(err)?;
    out.flush()?;
    Ok(())
}

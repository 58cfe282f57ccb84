//! Sampling layer of the smoothed classifier: the base-classifier contract,
//! simplex maps, and the two Monte Carlo routines that produce either class
//! counts (hard outputs) or a matrix of simplex rows (soft outputs).

mod classifier;
mod sampling;
mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, CertError, Result};

pub use classifier::{AffineClassifier, BaseClassifier, FixedMultinomialClassifier};
pub use sampling::{derive_seed, sample_counts, sample_prob_matrix, NoiseConfig};
pub use simplex::{apply_simplex_map, hardmax, sparsemax, tempered_softmax, SimplexMapSpec};

/// Tolerance on row sums of a [`ProbabilityMatrix`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Index of the largest entry; ties go to the lowest index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Index of the largest entry other than `exclude`; ties go to the lowest index.
pub(crate) fn argmax_excluding(values: &[f64], exclude: usize) -> usize {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if i == exclude {
            continue;
        }
        match best {
            Some(b) if *v <= values[b] => {}
            _ => best = Some(i),
        }
    }
    best.unwrap_or(exclude)
}

/// Per-class hit counts from hard-output sampling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsVector {
    counts: Vec<u64>,
}

impl CountsVector {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(invalid("counts vector needs at least one class"));
        }
        if counts.iter().all(|&c| c == 0) {
            return Err(invalid("counts vector has zero total"));
        }
        Ok(CountsVector { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.total() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// Class with the highest count (lowest index on ties).
    pub fn predicted(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate().skip(1) {
            if c > self.counts[best] {
                best = i;
            }
        }
        best
    }

    /// Highest-count class other than `class` (lowest index on ties).
    pub fn runner_up(&self, class: usize) -> usize {
        let freqs: Vec<f64> = self.counts.iter().map(|&c| c as f64).collect();
        argmax_excluding(&freqs, class)
    }
}

/// `n × m` matrix whose rows are points on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    data: Vec<f64>,
    classes: usize,
}

impl ProbabilityMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let classes = rows.first().map(Vec::len).ok_or(CertError::EmptyInput)?;
        if classes == 0 {
            return Err(invalid("probability rows must have at least one entry"));
        }
        let mut data = Vec::with_capacity(rows.len() * classes);
        for (i, row) in rows.into_iter().enumerate() {
            check_simplex_row(&row, classes, i)?;
            data.extend(row);
        }
        Ok(ProbabilityMatrix { data, classes })
    }

    pub(crate) fn from_flat_unchecked(data: Vec<f64>, classes: usize) -> Self {
        debug_assert!(classes > 0 && data.len().is_multiple_of(classes));
        ProbabilityMatrix { data, classes }
    }

    pub fn num_rows(&self) -> usize {
        self.data.len() / self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.classes..(i + 1) * self.classes]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.classes)
    }

    pub fn column(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[k])
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.classes];
        for row in self.rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        let n = self.num_rows() as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }

    /// Argmax of the column means (lowest index on ties).
    pub fn predicted(&self) -> usize {
        argmax(&self.column_means())
    }
}

fn check_simplex_row(row: &[f64], classes: usize, index: usize) -> Result<()> {
    if row.len() != classes {
        return Err(invalid(format!(
            "row {index} has {} entries, expected {classes}",
            row.len()
        )));
    }
    if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(invalid(format!("row {index} has a negative or non-finite entry")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(invalid(format!("row {index} sums to {sum}, not 1")));
    }
    Ok(())
}

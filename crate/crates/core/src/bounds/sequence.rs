//! Predictable plug-in empirical-Bernstein confidence sequence for the mean
//! of `[0, 1]`-valued i.i.d. observations.
//!
//! Ingredients, with `t` counting observations:
//!
//! * `μ̂_t  = (1/2 + Σ_{i≤t} X_i) / (t + 1)`
//! * `σ̂²_t = (1/4 + Σ_{i≤t} (X_i - μ̂_i)²) / (t + 1)`
//! * `λ_t  = min(√(2 log(2/α) / (σ̂²_{t-1} t log(1 + t))), 1/2)`
//! * `v_t  = 4 (X_t - μ̂_{t-1})²`, `ψ(λ) = (-log(1 - λ) - λ) / 4`
//!
//! and the interval at time `t` is
//! `Σλ_i X_i / Σλ_i ± (log(2/α) + Σ v_i ψ(λ_i)) / Σλ_i`, clipped to `[0, 1]`.
//!
//! The bets are tuned for the level given at construction. Any predictable
//! bet sequence yields a valid sequence, so [`ConfidenceSequenceState::interval`]
//! may be queried at other levels; the running intersection is tracked at the
//! tuning level only.

use super::ConfidenceLevel;
use crate::error::{invalid, CertError, Result};

const BET_CAP: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceSequenceState {
    tuning: ConfidenceLevel,
    t: u64,
    sum_x: f64,
    // μ̂_t and σ̂²_t after the last observation (prior values at t = 0)
    mean_estimate: f64,
    variance_estimate: f64,
    sum_sq_dev: f64,
    weighted_sum: f64,
    weight: f64,
    slack: f64,
    running: (f64, f64),
}

fn psi(lambda: f64) -> f64 {
    (-(1.0 - lambda).ln() - lambda) / 4.0
}

impl ConfidenceSequenceState {
    pub fn new(tuning: ConfidenceLevel) -> Self {
        ConfidenceSequenceState {
            tuning,
            t: 0,
            sum_x: 0.0,
            mean_estimate: 0.5,
            variance_estimate: 0.25,
            sum_sq_dev: 0.0,
            weighted_sum: 0.0,
            weight: 0.0,
            slack: 0.0,
            running: (0.0, 1.0),
        }
    }

    /// Feeds a whole stream in order.
    pub fn from_stream<I>(tuning: ConfidenceLevel, values: I) -> Result<Self>
    where
        I: IntoIterator<Item = f64>,
    {
        let mut state = Self::new(tuning);
        for x in values {
            state.push(x)?;
        }
        Ok(state)
    }

    pub fn tuning_level(&self) -> ConfidenceLevel {
        self.tuning
    }

    pub fn count(&self) -> u64 {
        self.t
    }

    pub fn mean_estimate(&self) -> f64 {
        self.mean_estimate
    }

    pub fn variance_estimate(&self) -> f64 {
        self.variance_estimate
    }

    /// Returns the state after observing `x`.
    pub fn observe(&self, x: f64) -> Result<Self> {
        let mut next = self.clone();
        next.push(x)?;
        Ok(next)
    }

    pub fn push(&mut self, x: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&x) {
            return Err(invalid(format!(
                "confidence sequence observations must lie in [0, 1], got {x}"
            )));
        }
        let t = (self.t + 1) as f64;
        let log_term = (2.0 / self.tuning.alpha()).ln();
        let lambda = (2.0 * log_term / (self.variance_estimate * t * (1.0 + t).ln()))
            .sqrt()
            .min(BET_CAP);
        let v = 4.0 * (x - self.mean_estimate).powi(2);

        self.weighted_sum += lambda * x;
        self.weight += lambda;
        self.slack += v * psi(lambda);

        self.t += 1;
        self.sum_x += x;
        self.mean_estimate = (0.5 + self.sum_x) / (t + 1.0);
        self.sum_sq_dev += (x - self.mean_estimate).powi(2);
        self.variance_estimate = (0.25 + self.sum_sq_dev) / (t + 1.0);

        let (lo, hi) = self.interval_at(self.tuning);
        self.running = (self.running.0.max(lo), self.running.1.min(hi));
        Ok(())
    }

    fn interval_at(&self, level: ConfidenceLevel) -> (f64, f64) {
        let center = self.weighted_sum / self.weight;
        let radius = ((2.0 / level.alpha()).ln() + self.slack) / self.weight;
        ((center - radius).max(0.0), (center + radius).min(1.0))
    }

    /// The interval at the current time.
    pub fn interval(&self, level: ConfidenceLevel) -> Result<(f64, f64)> {
        if self.t == 0 {
            return Err(CertError::EmptyState);
        }
        Ok(self.interval_at(level))
    }

    /// Intersection of the intervals at every time so far, at the tuning
    /// level. May be empty (`lower > upper`) on a miscovering stream.
    pub fn running_interval(&self) -> Result<(f64, f64)> {
        if self.t == 0 {
            return Err(CertError::EmptyState);
        }
        Ok(self.running)
    }
}

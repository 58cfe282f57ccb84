use crate::error::{invalid, Result};
use crate::special::{ln_factorials, TaylorOrder, TaylorQuantile};

/// Terms below this are dropped once the walk moves away from the mode.
const NEGLIGIBLE: f64 = 1e-22;

/// Slack on the strict event `stat < θ̃`, so lattice points whose statistic
/// equals the observed one up to rounding are left out of the event.
const STRICT_SLACK: f64 = 1e-12;

const SIMPLEX_SLACK: f64 = 1e-9;

/// Whether the observed statistic itself belongs to the event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailEvent {
    /// `stat ≤ θ̃`
    AtMost,
    /// `stat < θ̃`
    Below,
}

/// Checks and normalizes a point of the 2-simplex.
pub(crate) fn simplex_point(q: [f64; 3]) -> Result<[f64; 3]> {
    if q.iter().any(|v| !v.is_finite() || *v < -SIMPLEX_SLACK) {
        return Err(invalid(format!("{q:?} is not a probability vector")));
    }
    let sum: f64 = q.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_SLACK {
        return Err(invalid(format!("{q:?} sums to {sum}, not 1")));
    }
    Ok(q.map(|v| v.max(0.0)))
}

/// Event `{x ∈ Ω²_n : x₁ ≤ t(x₂)}`, stored as the per-row cutoff `t`.
#[derive(Debug, Clone)]
pub(crate) struct MarginLattice {
    n: u64,
    ln_fact: Vec<f64>,
    cutoffs: Vec<i64>,
}

impl MarginLattice {
    /// `x₁ - x₂ ≤ k`.
    pub(crate) fn first(k: i64, n: u64) -> Self {
        let cutoffs = (0..=n as i64).map(|x2| k.saturating_add(x2)).collect();
        MarginLattice {
            n,
            ln_fact: ln_factorials(n as usize),
            cutoffs,
        }
    }

    /// `Φ⁻¹_M(x₁/n) - Φ⁻¹_M(x₂/n) ≤ θ̃` (or `<` for [`TailEvent::Below`]).
    pub(crate) fn second(theta: f64, n: u64, quantile: &TaylorQuantile, tail: TailEvent) -> Self {
        let scores: Vec<f64> = (0..=n).map(|x| quantile.eval(x as f64 / n as f64)).collect();
        let cutoffs = scores
            .iter()
            .map(|s2| {
                let inside = |s1: &f64| match tail {
                    TailEvent::AtMost => s1 - s2 <= theta,
                    TailEvent::Below => s1 - s2 < theta - STRICT_SLACK * (1.0 + theta.abs()),
                };
                scores.partition_point(inside) as i64 - 1
            })
            .collect();
        MarginLattice {
            n,
            ln_fact: ln_factorials(n as usize),
            cutoffs,
        }
    }

    /// `P(X ∈ event | q)` for `X ~ Multinomial(n, q)` on three cells, summed
    /// row by row: `X₂ ~ Bin(n, q₂)` and `X₁ | X₂ ~ Bin(n - X₂, q₁/(q₁+q₃))`.
    pub(crate) fn probability(&self, q1: f64, q2: f64) -> f64 {
        let q1 = q1.clamp(0.0, 1.0);
        let q2 = q2.clamp(0.0, 1.0 - q1);
        let q3 = (1.0 - q1 - q2).max(0.0);
        let rest = q1 + q3;
        let r = if rest > 0.0 { (q1 / rest).min(1.0) } else { 0.0 };
        let mut total = 0.0;
        binomial_walk(self.n, q2, &self.ln_fact, |x2, w| {
            let trials = self.n - x2;
            total += w * binomial_cdf(self.cutoffs[x2 as usize], trials, r, &self.ln_fact);
        });
        total.clamp(0.0, 1.0)
    }
}

fn ln_pmf(x: u64, trials: u64, p: f64, ln_fact: &[f64]) -> f64 {
    let (x, t) = (x as usize, trials as usize);
    let mut v = ln_fact[t] - ln_fact[x] - ln_fact[t - x];
    if x > 0 {
        v += x as f64 * p.ln();
    }
    if x < t {
        v += (t - x) as f64 * (-p).ln_1p();
    }
    v
}

/// Calls `f(x, P(X = x))` for `X ~ Bin(trials, p)` over every
/// non-negligible `x`, walking outward from the mode.
fn binomial_walk(trials: u64, p: f64, ln_fact: &[f64], mut f: impl FnMut(u64, f64)) {
    if p <= 0.0 {
        f(0, 1.0);
        return;
    }
    if p >= 1.0 {
        f(trials, 1.0);
        return;
    }
    let mode = (((trials + 1) as f64 * p).floor() as u64).min(trials);
    let peak = ln_pmf(mode, trials, p, ln_fact).exp();
    let odds = p / (1.0 - p);
    f(mode, peak);
    let mut term = peak;
    for x in (mode + 1)..=trials {
        term *= (trials - x + 1) as f64 / x as f64 * odds;
        if term < NEGLIGIBLE {
            break;
        }
        f(x, term);
    }
    term = peak;
    for x in (0..mode).rev() {
        term *= (x + 1) as f64 / (trials - x) as f64 / odds;
        if term < NEGLIGIBLE {
            break;
        }
        f(x, term);
    }
}

/// `P(X ≤ t)` for `X ~ Bin(trials, p)`. Sums whichever tail lies away from
/// the mode, so every summed term is monotone and the walk can stop early.
fn binomial_cdf(t: i64, trials: u64, p: f64, ln_fact: &[f64]) -> f64 {
    if t < 0 {
        return 0.0;
    }
    if t as u64 >= trials {
        return 1.0;
    }
    let t = t as u64;
    if p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return 0.0;
    }
    let mode = (((trials + 1) as f64 * p).floor() as u64).min(trials);
    let odds = p / (1.0 - p);
    if t < mode {
        let mut term = ln_pmf(t, trials, p, ln_fact).exp();
        let mut sum = term;
        for x in (0..t).rev() {
            term *= (x + 1) as f64 / (trials - x) as f64 / odds;
            if term < NEGLIGIBLE {
                break;
            }
            sum += term;
        }
        sum.min(1.0)
    } else {
        let mut term = ln_pmf(t + 1, trials, p, ln_fact).exp();
        let mut upper = term;
        for x in (t + 2)..=trials {
            term *= (trials - x + 1) as f64 / x as f64 * odds;
            if term < NEGLIGIBLE {
                break;
            }
            upper += term;
        }
        (1.0 - upper).max(0.0)
    }
}

/// `P(X₁ - X₂ ≤ k)` for `X ~ Multinomial(n, q)`, `q` on the 2-simplex.
pub fn multinomial_margin_cdf_first(k: i64, q: [f64; 3], n: u64) -> Result<f64> {
    let q = simplex_point(q)?;
    if n == 0 {
        return Err(invalid("sample count must be positive"));
    }
    Ok(MarginLattice::first(k, n).probability(q[0], q[1]))
}

/// `P(Φ⁻¹_M(X₁/n) - Φ⁻¹_M(X₂/n) ≤ θ̃)` for `X ~ Multinomial(n, q)`.
pub fn multinomial_margin_cdf_second(
    theta_tilde: f64,
    q: [f64; 3],
    n: u64,
    order: TaylorOrder,
) -> Result<f64> {
    let q = simplex_point(q)?;
    if n == 0 {
        return Err(invalid("sample count must be positive"));
    }
    if theta_tilde.is_nan() {
        return Err(invalid("statistic is NaN"));
    }
    let quantile = TaylorQuantile::new(order);
    Ok(MarginLattice::second(theta_tilde, n, &quantile, TailEvent::AtMost).probability(q[0], q[1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pmf(x1: u64, x2: u64, n: u64, q: [f64; 3]) -> f64 {
        let f = ln_factorials(n as usize);
        let x3 = n - x1 - x2;
        let c = (f[n as usize] - f[x1 as usize] - f[x2 as usize] - f[x3 as usize]).exp();
        c * q[0].powi(x1 as i32) * q[1].powi(x2 as i32) * q[2].powi(x3 as i32)
    }

    #[test]
    fn full_and_empty_support() {
        let q = [0.3, 0.5, 0.2];
        assert!((multinomial_margin_cdf_first(7, q, 7).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(multinomial_margin_cdf_first(-8, q, 7).unwrap(), 0.0);
    }

    #[test]
    fn two_trials_uniform() {
        let q = [1.0 / 3.0; 3];
        let mut expect = 0.0;
        for x1 in 0..=2u64 {
            for x2 in 0..=(2 - x1) {
                if x1 as i64 - x2 as i64 <= 0 {
                    expect += pmf(x1, x2, 2, q);
                }
            }
        }
        let got = multinomial_margin_cdf_first(0, q, 2).unwrap();
        assert!((got - expect).abs() < 1e-15);
        // outcomes with x1 ≤ x2: (0,0),(0,1),(0,2),(1,1) → (1 + 2 + 1 + 2) / 9
        assert!((got - 6.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn second_kind_small_enumeration() {
        let q = [0.5, 0.3, 0.2];
        let order = TaylorOrder::new(5);
        let tq = TaylorQuantile::new(order);
        let theta = 0.4;
        let mut expect = 0.0;
        for x1 in 0..=3u64 {
            for x2 in 0..=(3 - x1) {
                if tq.eval(x1 as f64 / 3.0) - tq.eval(x2 as f64 / 3.0) <= theta {
                    expect += pmf(x1, x2, 3, q);
                }
            }
        }
        let got = multinomial_margin_cdf_second(theta, q, 3, order).unwrap();
        assert!((got - expect).abs() < 1e-14);
        let top = 2.0 * tq.bound();
        assert!((multinomial_margin_cdf_second(top, q, 3, order).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(multinomial_margin_cdf_second(-top - 1.0, q, 3, order).unwrap(), 0.0);
    }

    #[test]
    fn strict_event_drops_the_boundary() {
        let tq = TaylorQuantile::new(TaylorOrder::DEFAULT);
        let n = 10;
        let theta = tq.eval(0.7) - tq.eval(0.2);
        let at_most = MarginLattice::second(theta, n, &tq, TailEvent::AtMost);
        let below = MarginLattice::second(theta, n, &tq, TailEvent::Below);
        assert_eq!(at_most.cutoffs[2], 7);
        assert_eq!(below.cutoffs[2], 6);
    }

    #[test]
    fn vertices_of_the_simplex() {
        assert_eq!(multinomial_margin_cdf_first(9, [1.0, 0.0, 0.0], 10).unwrap(), 0.0);
        assert_eq!(multinomial_margin_cdf_first(10, [1.0, 0.0, 0.0], 10).unwrap(), 1.0);
        assert_eq!(multinomial_margin_cdf_first(-10, [0.0, 1.0, 0.0], 10).unwrap(), 1.0);
        assert_eq!(multinomial_margin_cdf_first(-1, [0.0, 0.0, 1.0], 10).unwrap(), 0.0);
    }

    #[test]
    fn large_n_matches_direct_summation() {
        let n = 300u64;
        let q: [f64; 3] = [0.45, 0.35, 0.2];
        let f = ln_factorials(n as usize);
        let mut expect = 0.0;
        for x1 in 0..=n {
            for x2 in 0..=(n - x1) {
                if (x1 as i64) - (x2 as i64) <= 20 {
                    let x3 = n - x1 - x2;
                    let l = f[n as usize] - f[x1 as usize] - f[x2 as usize] - f[x3 as usize]
                        + x1 as f64 * q[0].ln()
                        + x2 as f64 * q[1].ln()
                        + x3 as f64 * q[2].ln();
                    expect += l.exp();
                }
            }
        }
        let got = multinomial_margin_cdf_first(20, q, n).unwrap();
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
    }

    #[test]
    fn rejects_non_simplex_points() {
        assert!(multinomial_margin_cdf_first(0, [0.5, 0.5, 0.5], 3).is_err());
        assert!(multinomial_margin_cdf_first(0, [1.2, -0.2, 0.0], 3).is_err());
    }
}

//! Special functions: the error function, the Gaussian quantile, the
//! truncated inverse-erf series used as a bounded quantile surrogate, and
//! the inverse regularized incomplete Beta function.
//!
//! `erf`/`erfc` come from `libm` and the regularized incomplete Beta
//! `I_x(a, b)` from `statrs`; the quantile inversions on top of them are done here by
//! bracketing bisection so that callers needing a one-sided answer can take
//! the appropriate end of the bracket.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{invalid, CertError, Result};

/// Truncation order of the inverse-erf power series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TaylorOrder(usize);

impl TaylorOrder {
    pub const DEFAULT: TaylorOrder = TaylorOrder(15);

    pub const fn new(order: usize) -> Self {
        TaylorOrder(order)
    }

    pub const fn get(self) -> usize {
        self.0
    }
}

impl Default for TaylorOrder {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl std::fmt::Display for TaylorOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard normal CDF, evaluated through `erfc` so the lower tail keeps
/// relative precision.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Gaussian quantile `Φ⁻¹(p)` for `0 < p < 1`.
///
/// Computed by inverting [`normal_cdf`] (bisection followed by Newton
/// polishing) on the lower half; the upper half uses `Φ⁻¹(p) = -Φ⁻¹(1-p)`,
/// which is exact in floating point for `p >= 1/2`. Near one half the
/// inversion runs on `erf` instead.
pub fn gaussian_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(CertError::Domain(format!(
            "gaussian quantile requires 0 < p < 1, got {p}"
        )));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if (0.25..=0.75).contains(&p) {
        return Ok(central_quantile(p));
    }
    if p > 0.5 {
        return Ok(-lower_half_quantile(1.0 - p));
    }
    Ok(lower_half_quantile(p))
}

/// Inverts `erf(x/√2) = 2p - 1`; `2p - 1` is exact here and `erf` keeps
/// relative precision near zero, unlike `Φ(x) - p`.
fn central_quantile(p: f64) -> f64 {
    let target = 2.0 * p - 1.0;
    let f = |x: f64| erf(x / SQRT_2) - target;
    let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..2 {
        let next = x - f(x) / (2.0 * normal_pdf(x));
        if !(lo..=hi).contains(&next) {
            break;
        }
        x = next;
    }
    x
}

fn lower_half_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 0.5);
    // Φ(-39) underflows to 0, so the root always lies in (-39, 0).
    let (mut lo, mut hi) = (-39.0_f64, 0.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..2 {
        let density = normal_pdf(x);
        if density <= 0.0 {
            break;
        }
        let step = (normal_cdf(x) - p) / density;
        let next = x - step;
        if !(lo..=hi).contains(&next) {
            break;
        }
        x = next;
    }
    x
}

/// Coefficients `c_0..=c_M` of the inverse-erf series:
/// `c_0 = 1`, `c_k = Σ_{m<k} c_m c_{k-1-m} / ((m+1)(2m+1))`.
pub fn erf_inv_coeffs(order: TaylorOrder) -> Vec<f64> {
    let len = order.get() + 1;
    let mut c = Vec::with_capacity(len);
    c.push(1.0);
    for k in 1..len {
        let ck = (0..k)
            .map(|m| c[m] * c[k - 1 - m] / (((m + 1) * (2 * m + 1)) as f64))
            .sum();
        c.push(ck);
    }
    c
}

/// Order-`M` truncation of the Gaussian quantile series,
/// `Φ⁻¹_M(p) = √2 Σ_{k≤M} c_k/(2k+1) (√π/2 (2p-1))^{2k+1}`.
///
/// Precomputes the series weights so repeated evaluation is a Horner pass.
#[derive(Debug, Clone)]
pub struct TaylorQuantile {
    order: TaylorOrder,
    // weights[k] = c_k / (2k+1)
    weights: Vec<f64>,
}

impl TaylorQuantile {
    pub fn new(order: TaylorOrder) -> Self {
        let weights = erf_inv_coeffs(order)
            .into_iter()
            .enumerate()
            .map(|(k, c)| c / (2 * k + 1) as f64)
            .collect();
        TaylorQuantile { order, weights }
    }

    pub fn order(&self) -> TaylorOrder {
        self.order
    }

    /// Evaluates the polynomial; defined on all of `[0, 1]`.
    pub fn eval(&self, p: f64) -> f64 {
        let y = 0.5 * PI.sqrt() * (2.0 * p - 1.0);
        let y2 = y * y;
        let mut acc = 0.0;
        for w in self.weights.iter().rev() {
            acc = acc * y2 + w;
        }
        SQRT_2 * y * acc
    }

    /// `Φ⁻¹_M(1)`; the polynomial maps `[0, 1]` onto `[-bound, bound]`.
    pub fn bound(&self) -> f64 {
        self.eval(1.0)
    }

    /// Bracket `(lo, hi)` on the preimage of `value` under the polynomial
    /// restricted to `[0, 1]`: `eval(lo) <= value <= eval(hi)` whenever
    /// `value` is in range; clamps to `0`/`1` outside it.
    pub fn inverse_bracket(&self, value: f64) -> (f64, f64) {
        if value <= -self.bound() {
            return (0.0, 0.0);
        }
        if value >= self.bound() {
            return (1.0, 1.0);
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) <= value {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo, hi)
    }
}

/// One-shot form of [`TaylorQuantile::eval`].
pub fn gaussian_quantile_taylor(p: f64, order: TaylorOrder) -> f64 {
    TaylorQuantile::new(order).eval(p)
}

/// Regularized incomplete Beta function `I_x(a, b)`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    statrs::function::beta::beta_reg(a, b, x)
}

/// Bracket `(lo, hi)` with `I_lo(a,b) <= target <= I_hi(a,b)` and
/// `hi - lo` at floating-point resolution.
pub fn beta_inv_bracket(target: f64, a: f64, b: f64) -> Result<(f64, f64)> {
    if !(target > 0.0 && target < 1.0) {
        return Err(CertError::Domain(format!(
            "beta quantile requires 0 < target < 1, got {target}"
        )));
    }
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(invalid(format!(
            "beta shape parameters must be positive, got a={a}, b={b}"
        )));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..1100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Inverse of the regularized incomplete Beta function in its first
/// argument: returns `x` with `I_x(a, b) = target`.
pub fn beta_inv_cdf(target: f64, a: f64, b: f64) -> Result<f64> {
    let (lo, hi) = beta_inv_bracket(target, a, b)?;
    Ok(0.5 * (lo + hi))
}

/// `ln(k!)` for `k = 0..=n`.
pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    table.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_is_odd_and_zero_at_origin() {
        assert_eq!(erf(0.0), 0.0);
        for x in [0.1, 0.5, 2.0] {
            assert_eq!(erf(x), -erf(-x));
        }
    }

    #[test]
    fn coefficients_start_with_known_values() {
        assert_eq!(erf_inv_coeffs(TaylorOrder::new(0)), vec![1.0]);
        let c = erf_inv_coeffs(TaylorOrder::new(3));
        assert_eq!(c.len(), 4);
        assert_eq!(c[1], 1.0);
        assert!((c[2] - 7.0 / 6.0).abs() < 1e-15);
        assert!((c[3] - 127.0 / 90.0).abs() < 1e-15);
        assert!(erf_inv_coeffs(TaylorOrder::new(30)).iter().all(|&c| c > 0.0));
    }

    #[test]
    fn quantile_median_and_symmetry() {
        assert_eq!(gaussian_quantile(0.5).unwrap(), 0.0);
        for p in [0.6, 0.9, 0.99] {
            let a = gaussian_quantile(p).unwrap();
            let b = gaussian_quantile(1.0 - p).unwrap();
            assert!((a + b).abs() < 1e-12, "{p}: {a} vs {b}");
        }
    }

    #[test]
    fn quantile_rejects_closed_endpoints() {
        assert!(matches!(gaussian_quantile(0.0), Err(CertError::Domain(_))));
        assert!(matches!(gaussian_quantile(1.0), Err(CertError::Domain(_))));
        assert!(gaussian_quantile(f64::NAN).is_err());
    }

    #[test]
    fn taylor_quantile_vanishes_at_half() {
        for m in [0, 1, 5, 15, 25] {
            assert_eq!(gaussian_quantile_taylor(0.5, TaylorOrder::new(m)), 0.0);
        }
    }

    #[test]
    fn taylor_quantile_below_exact_above_half() {
        let exact = gaussian_quantile(0.9).unwrap();
        assert!(gaussian_quantile_taylor(0.9, TaylorOrder::new(10)) <= exact);
    }

    #[test]
    fn taylor_inverse_bracket_straddles() {
        let tq = TaylorQuantile::new(TaylorOrder::DEFAULT);
        for v in [-1.5, -0.2, 0.0, 0.7, 2.0] {
            let (lo, hi) = tq.inverse_bracket(v);
            assert!(tq.eval(lo) <= v && v <= tq.eval(hi));
            assert!(hi - lo < 1e-15);
        }
        assert_eq!(tq.inverse_bracket(10.0), (1.0, 1.0));
        assert_eq!(tq.inverse_bracket(-10.0), (0.0, 0.0));
    }

    #[test]
    fn beta_inverse_closed_forms() {
        for q in [0.1, 0.5, 0.9] {
            assert!((beta_inv_cdf(q, 1.0, 1.0).unwrap() - q).abs() < 1e-10);
        }
        let x = beta_inv_cdf(0.025, 10.0, 1.0).unwrap();
        assert!((x - 0.025_f64.powf(0.1)).abs() < 1e-10);
        assert!((beta_inv_cdf(0.5, 2.0, 2.0).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn beta_inverse_rejects_bad_target() {
        assert!(beta_inv_cdf(0.0, 2.0, 2.0).is_err());
        assert!(beta_inv_cdf(1.0, 2.0, 2.0).is_err());
        assert!(beta_inv_cdf(0.5, 0.0, 2.0).is_err());
    }
}

use super::lattice::TailEvent;
use super::solver::{fast_solve_signomial, solve_signomial_against, SignomialSubproblem};
use crate::bounds::{
    bonferroni_margin, clopper_pearson_lower, BoundProvider, ConfidenceLevel, EstimatorMethod,
    MarginData, MarginEstimate, MarginKind,
};
use crate::error::{CertError, Result};
use crate::smoothing::CountsVector;
use crate::special::{TaylorOrder, TaylorQuantile};

/// Default bisection tolerance on the margin scale.
pub const DEFAULT_EPS: f64 = 1e-3;

/// Outcome of the bisection, with the solver work it took.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionTrace {
    pub bound: f64,
    pub steps: usize,
    pub evaluations: usize,
    /// Steps decided by the uncertified solver alone.
    pub fast_steps: usize,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(CertError::InvalidArgument(format!(
            "bisection tolerance must be positive, got {eps}"
        )))
    }
}

/// Largest `L` in `[0, θ̃]` (to within `eps`) at which the subproblem
/// infimum is certified to be at least `1 - α`.
///
/// With `fast` set, a feasible point whose probability is already below
/// `1 - α` rejects `L` without the certified solver; the first time the
/// local search cannot decide, the certified solver takes over for good.
pub fn bisect_margin(template: &SignomialSubproblem, eps: f64, fast: bool) -> Result<BisectionTrace> {
    check_eps(eps)?;
    let target = template.level.level();
    let mut trace = BisectionTrace {
        bound: 0.0,
        steps: 0,
        evaluations: 0,
        fast_steps: 0,
    };
    let (mut left, mut right) = (0.0, template.theta_tilde);
    let mut close = !fast;
    while right - left > eps {
        let mid = 0.5 * (left + right);
        let problem = template.with_bound(mid);
        trace.steps += 1;
        if !close {
            let probe = fast_solve_signomial(&problem)?;
            trace.evaluations += probe.evaluations;
            if probe.value < target {
                trace.fast_steps += 1;
                right = mid;
                continue;
            }
            close = true;
        }
        let cert = solve_signomial_against(&problem, target)?;
        trace.evaluations += cert.evaluations;
        if cert.value >= target {
            left = mid;
        } else {
            right = mid;
        }
    }
    trace.bound = left;
    Ok(trace)
}

fn top_two(counts: &CountsVector) -> Result<(usize, usize)> {
    if counts.num_classes() < 2 {
        return Err(CertError::Degenerate(
            "margin needs at least two classes".into(),
        ));
    }
    let predicted = counts.predicted();
    Ok((predicted, counts.runner_up(predicted)))
}

/// Joint lower confidence bound on `p₁ - p₂` from the exact law of the
/// count difference, inverted by bisection.
pub fn first_margin_lcb(
    counts: &CountsVector,
    level: ConfidenceLevel,
    eps: f64,
    fast: bool,
) -> Result<MarginEstimate> {
    check_eps(eps)?;
    let (predicted, runner) = top_two(counts)?;
    let n = counts.total();
    let c = counts.counts();
    let diff = c[predicted] as i64 - c[runner] as i64;
    let mut estimate = MarginEstimate::new(
        0.0,
        MarginKind::First,
        level,
        EstimatorMethod::DiscreteJoint,
        predicted,
    );
    if diff <= 0 {
        return Ok(estimate);
    }
    let theta = diff as f64 / n as f64;
    let template = SignomialSubproblem::first(0.0, theta, n, level).with_tail(TailEvent::Below);
    estimate.value = bisect_margin(&template, eps, fast)?.bound;
    Ok(estimate)
}

/// Joint lower confidence bound on the second margin. A Clopper-Pearson
/// pretest at `α/2` must place the top class above one half; the bisection
/// then runs at `α/2` on the Taylor-surrogate statistic. Otherwise the
/// Bonferroni baseline at `α` is returned with `fallback` set.
pub fn second_margin_lcb(
    counts: &CountsVector,
    level: ConfidenceLevel,
    eps: f64,
    order: TaylorOrder,
) -> Result<MarginEstimate> {
    check_eps(eps)?;
    let (predicted, runner) = top_two(counts)?;
    let n = counts.total();
    let c = counts.counts();
    let half = level.split(2);
    if clopper_pearson_lower(c[predicted], n, half)? <= 0.5 {
        let mut est = bonferroni_margin(
            MarginData::Counts(counts),
            predicted,
            level,
            MarginKind::Second,
            BoundProvider::ClopperPearson,
        )?;
        est.method = EstimatorMethod::DiscreteJoint;
        est.fallback = true;
        return Ok(est);
    }
    let tq = TaylorQuantile::new(order);
    let theta = tq.eval(c[predicted] as f64 / n as f64) - tq.eval(c[runner] as f64 / n as f64);
    let mut estimate = MarginEstimate::new(
        0.0,
        MarginKind::Second,
        level,
        EstimatorMethod::DiscreteJoint,
        predicted,
    );
    if theta <= 0.0 {
        return Ok(estimate);
    }
    let template =
        SignomialSubproblem::second(0.0, theta, n, order, half).with_tail(TailEvent::Below);
    estimate.value = bisect_margin(&template, eps, true)?.bound;
    Ok(estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gaussian_quantile;

    fn lvl(a: f64) -> ConfidenceLevel {
        ConfidenceLevel::new(a).unwrap()
    }

    #[test]
    fn all_mass_on_top_class() {
        // P(X₁ - X₂ < 10) = 1 - q₁¹⁰ and the largest feasible q₁ is (1 + L)/2.
        let c = CountsVector::new(vec![10, 0, 0]).unwrap();
        let est = first_margin_lcb(&c, lvl(0.05), 1e-4, false).unwrap();
        let exact = 2.0 * 0.05f64.powf(0.1) - 1.0;
        assert!(est.value <= exact + 1e-9);
        assert!(exact - est.value < 2e-4, "{} vs {exact}", est.value);
    }

    #[test]
    fn nonpositive_statistic_gives_zero() {
        let tie = CountsVector::new(vec![40, 40, 20]).unwrap();
        assert_eq!(first_margin_lcb(&tie, lvl(0.05), DEFAULT_EPS, true).unwrap().value, 0.0);
    }

    #[test]
    fn fast_and_exact_bisection_agree() {
        let c = CountsVector::new(vec![33, 12, 5]).unwrap();
        let a = first_margin_lcb(&c, lvl(0.05), DEFAULT_EPS, false).unwrap();
        let b = first_margin_lcb(&c, lvl(0.05), DEFAULT_EPS, true).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn never_exceeds_the_statistic() {
        let c = CountsVector::new(vec![70, 20, 10]).unwrap();
        let est = first_margin_lcb(&c, lvl(0.05), DEFAULT_EPS, true).unwrap();
        assert!(est.value > 0.0 && est.value <= 0.5);
    }

    #[test]
    fn second_margin_is_conservative() {
        let c = CountsVector::new(vec![90, 10]).unwrap();
        let est = second_margin_lcb(&c, lvl(0.05), DEFAULT_EPS, TaylorOrder::DEFAULT).unwrap();
        let plug = gaussian_quantile(0.9).unwrap() - gaussian_quantile(0.1).unwrap();
        assert!(!est.fallback);
        assert!(est.value > 0.0 && est.value <= plug);
    }

    #[test]
    fn second_margin_falls_back_below_one_half() {
        let c = CountsVector::new(vec![40, 35, 25]).unwrap();
        let est = second_margin_lcb(&c, lvl(0.05), DEFAULT_EPS, TaylorOrder::DEFAULT).unwrap();
        let bonf = bonferroni_margin(
            MarginData::Counts(&c),
            0,
            lvl(0.05),
            MarginKind::Second,
            BoundProvider::ClopperPearson,
        )
        .unwrap();
        assert!(est.fallback);
        assert_eq!(est.value, bonf.value);
    }

    #[test]
    fn invalid_inputs() {
        let c = CountsVector::new(vec![10]).unwrap();
        assert!(matches!(
            first_margin_lcb(&c, lvl(0.05), DEFAULT_EPS, true),
            Err(CertError::Degenerate(_))
        ));
        let c = CountsVector::new(vec![10, 2]).unwrap();
        assert!(first_margin_lcb(&c, lvl(0.05), 0.0, true).is_err());
    }
}

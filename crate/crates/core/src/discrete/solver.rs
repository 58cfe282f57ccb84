use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::lattice::{MarginLattice, TailEvent};
use crate::bounds::{ConfidenceLevel, MarginKind};
use crate::error::{invalid, CertError, Result};
use crate::special::{TaylorOrder, TaylorQuantile};

/// Default optimality gap of the certified solver.
pub const SOLVER_TOLERANCE: f64 = 1e-4;

const INITIAL_CELLS: usize = 16;
const MAX_EVALUATIONS: usize = 400_000;
const FAST_ITERATIONS: usize = 10;
// Guards the reported lower bound against rounding in the tail sums.
const EVAL_SLACK: f64 = 1e-12;

/// Inner problem of the bisection: the smallest probability of the observed
/// event over all parameters `q` whose margin does not exceed `bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignomialSubproblem {
    /// Candidate bound `L` on the margin.
    pub bound: f64,
    pub theta_tilde: f64,
    pub n: u64,
    pub kind: MarginKind,
    pub taylor_order: TaylorOrder,
    pub level: ConfidenceLevel,
    pub tail: TailEvent,
}

impl SignomialSubproblem {
    pub fn first(bound: f64, theta_tilde: f64, n: u64, level: ConfidenceLevel) -> Self {
        SignomialSubproblem {
            bound,
            theta_tilde,
            n,
            kind: MarginKind::First,
            taylor_order: TaylorOrder::DEFAULT,
            level,
            tail: TailEvent::AtMost,
        }
    }

    pub fn second(
        bound: f64,
        theta_tilde: f64,
        n: u64,
        order: TaylorOrder,
        level: ConfidenceLevel,
    ) -> Self {
        SignomialSubproblem {
            bound,
            theta_tilde,
            n,
            kind: MarginKind::Second,
            taylor_order: order,
            level,
            tail: TailEvent::AtMost,
        }
    }

    pub fn with_tail(mut self, tail: TailEvent) -> Self {
        self.tail = tail;
        self
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = bound;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("sample count must be positive"));
        }
        if !self.bound.is_finite() || self.theta_tilde.is_nan() {
            return Err(invalid("bound and statistic must be numbers"));
        }
        if self.kind == MarginKind::First {
            let scaled = self.theta_tilde * self.n as f64;
            if (scaled - scaled.round()).abs() > 1e-9 || self.theta_tilde.abs() > 1.0 + 1e-12 {
                return Err(invalid(format!(
                    "first-margin statistic {} is not on the 1/{} lattice",
                    self.theta_tilde, self.n
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverCertificate {
    pub value: f64,
    /// `value` is a proven lower bound on the infimum; otherwise it is the
    /// objective at a feasible point and so an upper bound.
    pub certified_lower: bool,
    pub evaluations: usize,
}

/// The objective restricted to the upper envelope of the feasible set.
///
/// The event probability falls when mass moves from `q₃` to `q₁` and rises
/// when it moves from `q₃` to `q₂`, so for each `q₂ = s` the infimum is
/// attained at the largest feasible `q₁`, written `u(s)`.
struct Envelope {
    kind: MarginKind,
    bound: f64,
    quantile: TaylorQuantile,
    lattice: MarginLattice,
    evaluations: usize,
}

impl Envelope {
    fn new(p: &SignomialSubproblem) -> Result<Self> {
        p.validate()?;
        let quantile = TaylorQuantile::new(p.taylor_order);
        let lattice = match p.kind {
            MarginKind::First => {
                let k = (p.theta_tilde * p.n as f64).round() as i64;
                let k = if p.tail == TailEvent::Below { k - 1 } else { k };
                MarginLattice::first(k, p.n)
            }
            MarginKind::Second => MarginLattice::second(p.theta_tilde, p.n, &quantile, p.tail),
        };
        Ok(Envelope {
            kind: p.kind,
            bound: p.bound,
            quantile,
            lattice,
            evaluations: 0,
        })
    }

    fn eval(&mut self, q1: f64, q2: f64) -> f64 {
        self.evaluations += 1;
        self.lattice.probability(q1, q2)
    }

    /// Range of `s = q₂` over which the feasible set is nonempty.
    fn support(&self) -> Result<(f64, f64)> {
        let l = self.bound;
        match self.kind {
            MarginKind::First => {
                if l < -1.0 {
                    return Err(CertError::Infeasible(format!("q1 - q2 <= {l} has no solution")));
                }
                Ok(((-l).max(0.0), 1.0))
            }
            MarginKind::Second => {
                // q₁ ≥ 1/2 forces s ≤ 1/2 and Φ⁻¹_M(q₁) ≥ 0.
                if l < 0.0 {
                    return Err(CertError::Infeasible(format!(
                        "second margin below {l} is impossible when q1 >= 1/2"
                    )));
                }
                let (lo, _) = self.quantile.inverse_bracket(-l);
                Ok((lo.min(0.5), 0.5))
            }
        }
    }

    /// Upper bound on `u(s)` for `s ∈ [a, b]`, at most `1 - a`.
    fn envelope_cap(&self, a: f64, b: f64) -> f64 {
        let cap = match self.kind {
            MarginKind::First => self.bound + b,
            MarginKind::Second => {
                let v = self.bound + self.quantile.eval(b);
                self.quantile.inverse_bracket(v + 1e-13 * (1.0 + v.abs())).1
            }
        };
        cap.min(1.0 - a).max(0.0)
    }

    /// A feasible `q₁` at `q₂ = s`, as close to `u(s)` as rounding allows.
    fn feasible_q1(&self, s: f64) -> Option<f64> {
        match self.kind {
            MarginKind::First => {
                let mut q1 = (self.bound + s).min(1.0 - s);
                if q1 < 0.0 {
                    return None;
                }
                if q1 - s > self.bound {
                    q1 = q1.next_down();
                }
                Some(q1)
            }
            MarginKind::Second => {
                let q1 = self
                    .quantile
                    .inverse_bracket(self.bound + self.quantile.eval(s))
                    .0
                    .min(1.0 - s);
                let ok = q1 >= 0.5
                    && self.quantile.eval(q1) - self.quantile.eval(s) <= self.bound;
                ok.then_some(q1)
            }
        }
    }

    fn cell_lower(&mut self, a: f64, b: f64) -> f64 {
        let cap = self.envelope_cap(a, b);
        self.eval(cap, a)
    }

    fn feasible_value(&mut self, s: f64) -> Option<f64> {
        let q1 = self.feasible_q1(s)?;
        Some(self.eval(q1, s))
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    lo: f64,
    hi: f64,
    lower: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    // Reversed so the heap pops the smallest lower bound first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.lower.total_cmp(&self.lower)
    }
}

/// Branch and bound over `s`. Stops when the gap is within `tolerance`, or
/// as soon as the answer relative to `target` is settled.
fn branch_and_bound(
    problem: &SignomialSubproblem,
    tolerance: f64,
    target: Option<f64>,
) -> Result<SolverCertificate> {
    let mut env = Envelope::new(problem)?;
    let (a, b) = env.support()?;
    let mut best = f64::INFINITY;
    let mut heap = BinaryHeap::new();
    let width = (b - a) / INITIAL_CELLS as f64;
    for i in 0..INITIAL_CELLS {
        let lo = a + width * i as f64;
        let hi = if i + 1 == INITIAL_CELLS { b } else { lo + width };
        let lower = env.cell_lower(lo, hi);
        if let Some(v) = env.feasible_value(0.5 * (lo + hi)) {
            best = best.min(v);
        }
        heap.push(Cell { lo, hi, lower });
        if width <= 0.0 {
            break;
        }
    }
    for s in [a, b] {
        if let Some(v) = env.feasible_value(s) {
            best = best.min(v);
        }
    }
    let lower = loop {
        let cell = heap.pop().expect("heap holds at least one cell");
        let done = best - cell.lower <= tolerance
            || target.is_some_and(|t| cell.lower >= t || best < t)
            || env.evaluations >= MAX_EVALUATIONS
            || cell.hi - cell.lo <= f64::EPSILON * cell.hi.max(1e-300);
        if done {
            break cell.lower;
        }
        let mid = 0.5 * (cell.lo + cell.hi);
        for (lo, hi) in [(cell.lo, mid), (mid, cell.hi)] {
            let lower = env.cell_lower(lo, hi).max(cell.lower);
            if let Some(v) = env.feasible_value(0.5 * (lo + hi)) {
                best = best.min(v);
            }
            heap.push(Cell { lo, hi, lower });
        }
    };
    Ok(SolverCertificate {
        value: (lower - EVAL_SLACK).max(0.0),
        certified_lower: true,
        evaluations: env.evaluations,
    })
}

/// Certified global lower bound on the subproblem infimum, within
/// [`SOLVER_TOLERANCE`] of the true value.
pub fn solve_signomial(problem: &SignomialSubproblem) -> Result<SolverCertificate> {
    branch_and_bound(problem, SOLVER_TOLERANCE / 2.0, None)
}

/// Certified lower bound that stops refining once it is known whether the
/// infimum reaches `target`: `value ≥ target` proves it does, and otherwise
/// the infimum is below `target` or within the solver tolerance of it.
pub fn solve_signomial_against(
    problem: &SignomialSubproblem,
    target: f64,
) -> Result<SolverCertificate> {
    branch_and_bound(problem, SOLVER_TOLERANCE / 2.0, Some(target))
}

/// Cheap local search along the envelope: endpoint and kink probes plus a
/// short golden-section search. The value is attained at a feasible point.
pub fn fast_solve_signomial(problem: &SignomialSubproblem) -> Result<SolverCertificate> {
    let mut env = Envelope::new(problem)?;
    let (a, b) = env.support()?;
    let mut best = f64::INFINITY;
    let mut probe = |env: &mut Envelope, s: f64| {
        let v = env.feasible_value(s).unwrap_or(f64::INFINITY);
        best = best.min(v);
        v
    };
    probe(&mut env, a);
    probe(&mut env, b);
    if env.kind == MarginKind::First {
        let kink = 0.5 * (1.0 - env.bound);
        if kink > a && kink < b {
            probe(&mut env, kink);
        }
    }
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = probe(&mut env, x1);
    let mut f2 = probe(&mut env, x2);
    for _ in 0..FAST_ITERATIONS {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = probe(&mut env, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = probe(&mut env, x2);
        }
    }
    if !best.is_finite() {
        return Err(CertError::Infeasible(
            "no feasible point found along the envelope".into(),
        ));
    }
    Ok(SolverCertificate {
        value: best,
        certified_lower: false,
        evaluations: env.evaluations,
    })
}

//! Joint margin bounds from hard-output counts: exact multinomial tails of
//! the margin statistic, the inner infimum over the constrained simplex, and
//! the bisection that inverts it.

mod bisection;
mod lattice;
mod solver;

pub use bisection::{bisect_margin, first_margin_lcb, second_margin_lcb, BisectionTrace, DEFAULT_EPS};
pub use lattice::{multinomial_margin_cdf_first, multinomial_margin_cdf_second, TailEvent};
pub use solver::{
    fast_solve_signomial, solve_signomial, solve_signomial_against, SignomialSubproblem,
    SolverCertificate, SOLVER_TOLERANCE,
};

use super::ConfidenceLevel;
use crate::error::{invalid, Result};
use crate::special::beta_inv_bracket;

fn check(successes: u64, trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(invalid("Clopper-Pearson bound needs at least one trial"));
    }
    if successes > trials {
        return Err(invalid(format!(
            "successes ({successes}) exceed trials ({trials})"
        )));
    }
    Ok(())
}

/// One-sided exact lower bound `BetaInv(α, k, n-k+1)` on a binomial
/// proportion; `0` when `k = 0`. Rounds down.
pub fn clopper_pearson_lower(successes: u64, trials: u64, level: ConfidenceLevel) -> Result<f64> {
    check(successes, trials)?;
    if successes == 0 {
        return Ok(0.0);
    }
    let k = successes as f64;
    let n = trials as f64;
    let (lo, _) = beta_inv_bracket(level.alpha(), k, n - k + 1.0)?;
    Ok(lo)
}

/// One-sided exact upper bound `BetaInv(1-α, k+1, n-k)`; `1` when `k = n`.
/// Rounds up.
pub fn clopper_pearson_upper(successes: u64, trials: u64, level: ConfidenceLevel) -> Result<f64> {
    check(successes, trials)?;
    if successes == trials {
        return Ok(1.0);
    }
    let k = successes as f64;
    let n = trials as f64;
    let (_, hi) = beta_inv_bracket(level.level(), k + 1.0, n - k)?;
    Ok(hi)
}

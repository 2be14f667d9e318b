use super::drop_largest;
use crate::constants::{ceil_count, ConstantsConfig};
use crate::error::{McError, Result};
use crate::linalg::{clamp, Factorization};
use crate::observe::{check_rate, empirical_sq_norms, IndexSubsets, Oracle};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterParams {
    /// Entry truncation level `τ`.
    pub tau: f64,
    /// Target row/column norm bound `ρ` (analysis only).
    pub rho: f64,
    /// Closeness bound `Δ`.
    pub delta: f64,
    pub gamma: f64,
    pub gamma_add: f64,
    /// Sampling rate per round.
    pub p: f64,
    pub fail_prob: f64,
}

/// Number of dropping rounds `ceil(c·log(mnτ²/(4Δ²)))`, zero when the
/// logarithm is not positive.
pub(crate) fn rounds(mult: f64, m: usize, n: usize, tau: f64, delta: f64) -> usize {
    let ratio = (m * n) as f64 * tau * tau / (4.0 * delta * delta);
    if ratio.is_finite() && ratio > 1.0 {
        ceil_count(mult * ratio.ln())
    } else {
        0
    }
}

/// Removes the rows and columns of `scope` carrying the most truncated
/// residual mass `[U·Vᵀ − M̂]^{≤τ}`.
///
/// Each of `t_max` rounds draws a fresh sample, estimates squared row and
/// column norms, and drops the `⌈γn⌉` largest of each; a last round drops
/// `⌈γ_drop·n/2⌉` with `γ_drop = 400γ log m`.
pub fn filter<T: Real, O: Oracle<T> + ?Sized>(
    oracle: &mut O,
    f: &Factorization<T>,
    scope: &IndexSubsets,
    params: &FilterParams,
    consts: &ConstantsConfig,
) -> Result<IndexSubsets> {
    let (m, n) = scope.shape();
    if m == 0 || n == 0 {
        return Ok(scope.clone());
    }
    let t_max = rounds(consts.filter_rounds, m, n, params.tau, params.delta);
    let gamma_drop = consts.filter_final_drop * params.gamma * (m as f64).ln();
    if gamma_drop * n as f64 >= m.min(n) as f64 {
        return Err(McError::InsufficientBudget(format!(
            "final drop γ_drop·n = {:.1} leaves nothing of {m}×{n}",
            gamma_drop * n as f64
        )));
    }
    let per_round = ceil_count(params.gamma * n as f64);
    let last = ceil_count(gamma_drop * n as f64 / 2.0);
    let total = t_max * per_round + last;
    if total >= m || total >= n {
        return Err(McError::InsufficientBudget(format!(
            "{t_max} rounds of {per_round} plus {last} remove every index of {m}×{n}"
        )));
    }
    if per_round == 0 && last == 0 {
        return Ok(scope.clone());
    }
    let p = check_rate(params.p, "filter", consts)?;
    let tau = T::c(params.tau);
    let mut current = scope.clone();
    for t in 0..=t_max {
        let count = if t < t_max { per_round } else { last };
        if count == 0 {
            continue;
        }
        let obs = oracle
            .observe(p, &current, "filter")?
            .map_values(|i, j, v| clamp(f.entry(i, j) - v, tau));
        let (rs, cs) = empirical_sq_norms(&obs, &current);
        current = IndexSubsets {
            rows: drop_largest(&current.rows, &rs, count),
            cols: drop_largest(&current.cols, &cs, count),
            parent: current.parent,
        };
    }
    Ok(current)
}

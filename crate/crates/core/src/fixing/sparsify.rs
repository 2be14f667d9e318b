use crate::constants::{ceil_count, ConstantsConfig};
use crate::error::{McError, Result};
use crate::linalg::Factorization;
use crate::observe::{check_rate, empirical_large_counts, IndexSubsets, Oracle};
use crate::partial::{drop_largest, filter, rounds, FilterParams};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparsifyParams {
    /// Magnitude at which a residual entry counts as large.
    pub tau: f64,
    pub delta: f64,
    pub gamma: f64,
    pub gamma_drop: f64,
    pub p: f64,
    pub fail_prob: f64,
}

/// Drops rows and columns holding many large residual entries, then runs
/// Filter with `ρ = ∞`.
///
/// Each of `t_max` rounds drops the `⌈γn⌉` rows and columns with the most
/// revealed entries of `|M − M̂| ≥ τ`; a final round drops `⌈γ_drop·n/4⌉`.
pub fn sparsify<T: Real, O: Oracle<T> + ?Sized>(
    oracle: &mut O,
    f: &Factorization<T>,
    scope: &IndexSubsets,
    params: &SparsifyParams,
    consts: &ConstantsConfig,
) -> Result<IndexSubsets> {
    let (m, n) = scope.shape();
    if m == 0 || n == 0 {
        return Ok(scope.clone());
    }
    let t_max = rounds(consts.sparsify_rounds, m, n, params.tau, params.delta);
    let per_round = ceil_count(params.gamma * n as f64);
    let last = ceil_count(params.gamma_drop * n as f64 / 4.0);
    let total = t_max * per_round + last;
    if total >= m || total >= n {
        return Err(McError::InsufficientBudget(format!(
            "{t_max} rounds of {per_round} plus {last} remove every index of {m}×{n}"
        )));
    }
    let mut current = scope.clone();
    if total > 0 {
        let p = check_rate(params.p, "sparsify", consts)?;
        for t in 0..=t_max {
            let count = if t < t_max { per_round } else { last };
            if count == 0 {
                continue;
            }
            let obs = oracle.observe(p, &current, "sparsify")?.map_values(|i, j, v| f.entry(i, j) - v);
            let (rs, cs) = empirical_large_counts(&obs, params.tau, &current);
            current = IndexSubsets {
                rows: drop_largest(&current.rows, &rs, count),
                cols: drop_largest(&current.cols, &cs, count),
                parent: current.parent,
            };
        }
    }
    let fp = FilterParams {
        tau: params.tau,
        rho: f64::INFINITY,
        delta: params.delta,
        gamma: params.gamma,
        gamma_add: params.gamma_drop,
        p: params.p,
        fail_prob: params.fail_prob / 2.0,
    };
    filter(oracle, f, &current, &fp, consts)
}

use crate::error::{McError, Result};
use crate::linalg::orthonormality_defect;
use crate::rng::Stream;
use crate::scalar::Real;
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest number of subsets exact mode will enumerate.
pub const ENUMERATION_BUDGET: u128 = 100_000_000;
const VERDICT_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum RegularityMode {
    Exact,
    /// One-sided: a failing witness is definitive, a pass is statistical.
    Sampled { trials: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityReport {
    pub mode: RegularityMode,
    pub alpha: f64,
    pub beta: f64,
    pub verdict: bool,
    /// Coordinates removed by the worst subset found.
    pub witness_excluded: Vec<usize>,
    /// `λ_min(Σ_{i∈S} b_i b_iᵀ)` of the worst subset.
    pub witness_min_eig: f64,
    /// Random subsets drawn in sampled mode.
    pub trials: Option<usize>,
    pub subsets_checked: u128,
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// `1 − λ_max(Σ_{i∈C} b_i b_iᵀ)`, the smallest eigenvalue of the Gram matrix
/// of the rows outside `C`.
fn kept_min_eig<T: Real>(b: &DMatrix<T>, excluded: &[usize]) -> f64 {
    if excluded.is_empty() || b.ncols() == 0 {
        return 1.0;
    }
    let rows = b.select_rows(excluded.iter());
    let g = rows.tr_mul(&rows);
    let top = g.symmetric_eigen().eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.f()));
    1.0 - top
}

fn check_basis<T: Real>(b: &DMatrix<T>) -> Result<()> {
    let deviation = orthonormality_defect(b);
    if deviation > T::ortho_tol() {
        return Err(McError::NotOrthonormal { deviation });
    }
    Ok(())
}

/// Advances `c` to the next `k`-combination of `0..d` in lexicographic order.
pub(crate) fn next_combination(c: &mut [usize], d: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < d - k + i {
            c[i] += 1;
            for t in i + 1..k {
                c[t] = c[t - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Checks whether the span of the orthonormal columns of `b` is
/// `(α, β)`-regular: every restriction to `⌈(1−α)d⌉` rows keeps Gram
/// eigenvalues at least `β²`.
pub fn regularity_check<T: Real>(
    b: &DMatrix<T>,
    alpha: f64,
    beta: f64,
    mode: RegularityMode,
    stream: &Stream,
) -> Result<RegularityReport> {
    check_basis(b)?;
    if !(0.0..1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) {
        return Err(McError::Precondition(format!("α = {alpha}, β = {beta} out of range")));
    }
    let d = b.nrows();
    let keep = ((1.0 - alpha) * d as f64 - 1e-9).ceil().max(0.0) as usize;
    let k = d - keep.min(d);
    let (witness, min_eig, checked) = match mode {
        RegularityMode::Exact => {
            let total = binomial(d, k);
            if total > ENUMERATION_BUDGET {
                return Err(McError::EnumerationBudget { count: total as f64, budget: ENUMERATION_BUDGET as f64 });
            }
            exact_worst(b, d, k, total)
        }
        RegularityMode::Sampled { trials } => {
            let mut best = (Vec::new(), f64::INFINITY);
            let mut rng = stream.rng();
            for _ in 0..trials.max(1) {
                let mut c = sample(&mut rng, d, k).into_vec();
                c.sort_unstable();
                let e = kept_min_eig(b, &c);
                if e < best.1 {
                    best = (c, e);
                }
            }
            (best.0, best.1, trials.max(1) as u128)
        }
    };
    Ok(RegularityReport {
        mode,
        alpha,
        beta,
        verdict: min_eig >= beta * beta - VERDICT_SLACK,
        witness_excluded: witness,
        witness_min_eig: min_eig,
        trials: match mode {
            RegularityMode::Sampled { trials } => Some(trials.max(1)),
            RegularityMode::Exact => None,
        },
        subsets_checked: checked,
    })
}

fn exact_worst<T: Real>(b: &DMatrix<T>, d: usize, k: usize, total: u128) -> (Vec<usize>, f64, u128) {
    if k == 0 {
        return (Vec::new(), kept_min_eig(b, &[]), 1);
    }
    // Split by the first excluded coordinate and reduce in parallel.
    let (witness, eig) = (0..=d - k)
        .into_par_iter()
        .map(|first| {
            let mut c: Vec<usize> = (first..first + k).collect();
            let mut best = (c.clone(), kept_min_eig(b, &c));
            while next_combination(&mut c[1..], d) {
                let e = kept_min_eig(b, &c);
                if e < best.1 {
                    best = (c.clone(), e);
                }
            }
            best
        })
        .reduce_with(|x, y| if y.1 < x.1 || (y.1 == x.1 && y.0 < x.0) { y } else { x })
        .expect("at least one subset");
    (witness, eig, total)
}

/// `μ = (d/r)·max_i ‖b_i‖²`, the least `μ` for which the span is `μ`-incoherent.
pub fn incoherence_mu<T: Real>(b: &DMatrix<T>) -> Result<f64> {
    check_basis(b)?;
    let (d, r) = b.shape();
    if r == 0 {
        return Ok(0.0);
    }
    let worst = (0..d).map(|i| b.row(i).norm_squared().f()).fold(0.0f64, f64::max);
    Ok(d as f64 / r as f64 * worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardParams {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
}

/// Completes `(α, β, μ)` to a parameter triple under which the span is standard.
///
/// Without `μ`, regularity alone gives `μ = 3/α`, and any larger `μ` is
/// capped there. With only `μ`, incoherence gives `(3/(4μr), 1/2, μ)`.
pub fn standardize_params(alpha: Option<f64>, beta: Option<f64>, mu: Option<f64>, r: usize) -> Result<StandardParams> {
    match (alpha, beta, mu) {
        (Some(alpha), Some(beta), mu) => {
            if !(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0) {
                return Err(McError::Precondition(format!("α = {alpha}, β = {beta} must lie in (0, 1)")));
            }
            let cap = 3.0 / alpha;
            let mu = match mu {
                Some(mu) if mu > 0.0 => mu.min(cap),
                Some(mu) => return Err(McError::Precondition(format!("μ = {mu} must be positive"))),
                None => cap,
            };
            Ok(StandardParams { alpha, beta, mu })
        }
        (None, None, Some(mu)) => {
            if !(mu >= 1.0) || r == 0 {
                return Err(McError::Precondition(format!("incoherence μ = {mu} must be ≥ 1 with r ≥ 1")));
            }
            Ok(StandardParams { alpha: 3.0 / (4.0 * mu * r as f64), beta: 0.5, mu })
        }
        _ => Err(McError::Precondition("give α and β together, or μ alone".into())),
    }
}

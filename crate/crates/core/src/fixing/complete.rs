use crate::constants::{ceil_count, ConstantsConfig};
use crate::error::{McError, Result};
use crate::linalg::{keep_above, Factorization};
use crate::observe::{position_map, IndexSubsets, ObservationSet};
use crate::scalar::Real;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

/// Step-size information for [`agd_regression`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Curvature {
    /// Extremal eigenvalues of `AᵀA`, computed exactly.
    Exact,
    /// Known bounds `lo·I ⪯ AᵀA ⪯ hi·I`.
    Bounds { lo: f64, hi: f64 },
}

/// Nesterov's accelerated gradient on `½‖A·x − b‖²` for `iters` steps from `x0`.
///
/// Stops early once the gradient vanishes to working precision.
pub fn agd_regression<T: Real>(
    a: &DMatrix<T>,
    b: &DVector<T>,
    x0: &DVector<T>,
    iters: usize,
    curvature: Curvature,
) -> Result<DVector<T>> {
    if iters == 0 {
        return Err(McError::Precondition("AGD needs at least one iteration".into()));
    }
    let r = a.ncols();
    if r == 0 {
        return Ok(DVector::zeros(0));
    }
    let (lo, hi) = match curvature {
        Curvature::Bounds { lo, hi } => (lo, hi),
        Curvature::Exact => {
            let eig = a.tr_mul(a).symmetric_eigen().eigenvalues;
            let hi = eig.iter().fold(0.0f64, |m, x| m.max(x.f()));
            let lo = eig.iter().fold(f64::INFINITY, |m, x| m.min(x.f()));
            if !(hi > 0.0) || lo <= 1e-12 * hi {
                return Err(McError::RankDeficient);
            }
            (lo, hi)
        }
    };
    let kappa = hi / lo;
    let momentum = T::c((kappa.sqrt() - 1.0) / (kappa.sqrt() + 1.0));
    let step = T::c(1.0 / hi);
    let atb = a.tr_mul(b);
    let floor = 4.0 * T::eps() * atb.norm().f();
    let mut x = x0.clone();
    let mut y = x0.clone();
    for k in 0..iters {
        let g = a.tr_mul(&(a * &y - b));
        let gn = g.norm().f();
        if gn <= floor + 4.0 * T::eps() * hi * y.norm().f() {
            return Ok(y);
        }
        if k == 0 {
            let curv = (a * &g).norm_squared().f();
            if curv <= 1e-14 * hi * gn * gn {
                return Err(McError::RankDeficient);
            }
        }
        let next = &y - g * step;
        y = &next + (&next - &x) * momentum;
        x = next;
    }
    Ok(x)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompleteParams {
    pub r_star: usize,
    /// Noise bound `Δ`.
    pub delta: f64,
    /// Closeness of the representative columns, `Δ̃`.
    pub delta_tilde: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Gram lower bound `γ` of the representative set.
    pub gamma: f64,
}

#[derive(Clone, Debug)]
pub struct CompleteOutcome<T: Real> {
    /// `U` over the rows of the scope, `V̂` over its columns.
    pub factorization: Factorization<T>,
    pub retained_rank: usize,
    /// The truncated SVD kept more than `2r⋆` directions.
    pub rank_guard: bool,
    pub leverage_rows: usize,
    pub iterations: usize,
    /// Columns whose regression had no usable samples.
    pub zeroed: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompleteSummary {
    pub retained_rank: usize,
    pub rank_guard: bool,
    pub leverage_rows: usize,
    pub iterations: usize,
    pub zeroed: usize,
}

impl<T: Real> CompleteOutcome<T> {
    pub fn summary(&self) -> CompleteSummary {
        CompleteSummary {
            retained_rank: self.retained_rank,
            rank_guard: self.rank_guard,
            leverage_rows: self.leverage_rows,
            iterations: self.iterations,
            zeroed: self.zeroed.len(),
        }
    }
}

/// Fills every column of `scope` by regressing its revealed entries on the
/// column span of `M_{:B}`.
///
/// `m_b` holds `M_{:B}` over the rows of `scope`; `obs` is indexed globally.
pub fn complete<T: Real>(
    obs: &ObservationSet<T>,
    m_b: &Factorization<T>,
    scope: &IndexSubsets,
    params: &CompleteParams,
    consts: &ConstantsConfig,
) -> Result<CompleteOutcome<T>> {
    let (ms, n) = scope.shape();
    if m_b.nrows() != ms {
        return Err(McError::Shape(format!("M_B has {} rows, scope has {ms}", m_b.nrows())));
    }
    if !(params.delta > 0.0) || !(params.beta > 0.0) || !(params.alpha > 0.0) {
        return Err(McError::Precondition("Complete needs Δ, α, β > 0".into()));
    }
    let threshold = consts.complete_threshold * params.delta_tilde / params.beta;
    let (_, svd) = keep_above(m_b.svd(), threshold);
    let u = svd.left;
    let r1 = u.ncols();
    if r1 > 2 * params.r_star {
        return Ok(CompleteOutcome {
            factorization: Factorization { u, v: DMatrix::zeros(n, r1) },
            retained_rank: r1,
            rank_guard: true,
            leverage_rows: 0,
            iterations: 0,
            zeroed: Vec::new(),
        });
    }

    let lev = consts.complete_leverage * r1 as f64 / (params.alpha * n as f64);
    let heavy: Vec<bool> = (0..ms).map(|i| u.row(i).norm_squared().f() >= lev).collect();
    let p = obs.p();
    let (d2, dt2, s2) = (params.delta.powi(2), params.delta_tilde.powi(2), params.sigma.powi(2));
    let ratio = consts.complete_agd_log * params.r_star as f64 * (d2 + dt2 + s2) * n as f64
        / (p * params.gamma.powi(2) * params.beta.powi(6) * d2);
    let iterations = ceil_count(consts.complete_agd / params.beta * ratio.max(1.0).ln()).max(1);
    let curvature = if consts.complete_exact_curvature {
        Curvature::Exact
    } else {
        Curvature::Bounds { lo: p * params.beta.powi(2) / 8.0, hi: 2.0 * p }
    };

    let rpos = position_map(&scope.rows, obs.shape().0);
    let cpos = position_map(&scope.cols, obs.shape().1);
    let mut per_col: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
    for &(i, j, v) in obs.triples() {
        if let (Some(a), Some(b)) = (rpos[i], cpos[j]) {
            if !heavy[a] {
                per_col[b].push((a, v));
            }
        }
    }
    let solved: Vec<Option<DVector<T>>> = per_col
        .par_iter()
        .map(|entries| {
            if entries.is_empty() || r1 == 0 {
                return Ok(None);
            }
            let a = DMatrix::from_fn(entries.len(), r1, |s, k| u[(entries[s].0, k)]);
            let b = DVector::from_iterator(entries.len(), entries.iter().map(|e| e.1));
            match agd_regression(&a, &b, &DVector::zeros(r1), iterations, curvature) {
                Ok(x) => Ok(Some(x)),
                Err(McError::RankDeficient) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let mut v = DMatrix::zeros(n, r1);
    let mut zeroed = Vec::new();
    for (b, x) in solved.into_iter().enumerate() {
        match x {
            Some(x) => v.row_mut(b).copy_from(&x.transpose()),
            None if r1 > 0 => zeroed.push(scope.cols[b]),
            None => {}
        }
    }
    Ok(CompleteOutcome {
        factorization: Factorization { u, v },
        retained_rank: r1,
        rank_guard: false,
        leverage_rows: heavy.iter().filter(|&&h| h).count(),
        iterations,
        zeroed,
    })
}

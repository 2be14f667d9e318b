use super::filter::{filter, FilterParams};
use crate::constants::ConstantsConfig;
use crate::error::Result;
use crate::linalg::{clamp, top_k_subspace, Factorization, LinearOperator};
use crate::observe::{check_rate, IndexSubsets, Oracle};
use crate::rng::Stream;
use crate::scalar::Real;
use nalgebra::DMatrix;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DescentParams {
    /// Current closeness bound `Δ`.
    pub delta: f64,
    pub gamma: f64,
    pub gamma_add: f64,
    /// Progress factor `ℓ`.
    pub ell: f64,
    pub fail_prob: f64,
    pub r_star: usize,
}

impl DescentParams {
    /// `τ = c·Δ·sqrt(r+r⋆)/(γ_add·n)`.
    pub fn tau(&self, r: usize, n: usize, consts: &ConstantsConfig) -> f64 {
        consts.descent_tau * self.delta * ((r + self.r_star) as f64).sqrt() / (self.gamma_add * n as f64)
    }

    /// `ρ = Δ/(c·ℓ·sqrt((γ+γ_add)n))`.
    pub fn rho(&self, n: usize, consts: &ConstantsConfig) -> f64 {
        self.delta / (consts.descent_rho * self.ell * ((self.gamma + self.gamma_add) * n as f64).sqrt())
    }

    /// Filter sampling rate.
    pub fn filter_rate(&self, r: usize, m: usize, n: usize, consts: &ConstantsConfig) -> f64 {
        let (g, ga) = (self.gamma, self.gamma_add);
        consts.descent_filter_p * (r + self.r_star) as f64 * self.ell * self.ell / n as f64 * (g + ga) / (ga * ga)
            * (300.0 * m as f64 / (self.fail_prob * ga)).ln()
    }

    /// Reveal rate of the update sample.
    pub fn update_rate(&self, r: usize, m: usize, n: usize, consts: &ConstantsConfig) -> f64 {
        consts.descent_q * (r + self.r_star) as f64 * self.ell * (6.0 * m as f64 / self.fail_prob).ln()
            / (self.gamma_add * n as f64)
    }
}

#[derive(Clone, Debug)]
pub struct DescentOutcome<T: Real> {
    pub factorization: Factorization<T>,
    pub subsets: IndexSubsets,
    pub trace: DescentTrace,
}

/// Parameters actually used by one Descent call.
#[derive(Clone, Debug, Serialize)]
pub struct DescentTrace {
    pub tau: f64,
    pub rho: f64,
    pub filter_rate: f64,
    pub update_rate: f64,
    pub appended: usize,
}

/// One short-flat progress step on the submatrix `scope`.
///
/// Filters out heavy rows and columns of the truncated residual, samples
/// `X = O_q([M̂ − U·Vᵀ]^{≤τ}_{S,T})`, and appends the top `2(r+r⋆)`
/// directions of `X/q` to the factorization. Appended columns vanish outside
/// the kept `(S, T)`.
pub fn descent<T: Real, O: Oracle<T> + ?Sized>(
    oracle: &mut O,
    f: &Factorization<T>,
    scope: &IndexSubsets,
    params: &DescentParams,
    consts: &ConstantsConfig,
    stream: &Stream,
) -> Result<DescentOutcome<T>> {
    let (m, n) = scope.shape();
    let r = f.rank();
    let tau = params.tau(r, n, consts);
    let rho = params.rho(n, consts);
    let filter_rate = params.filter_rate(r, m, n, consts);
    let fp = FilterParams {
        tau,
        rho,
        delta: consts.descent_filter_delta * params.delta,
        gamma: params.gamma,
        gamma_add: params.gamma_add,
        p: filter_rate,
        fail_prob: params.fail_prob / 3.0,
    };
    let kept = filter(oracle, f, scope, &fp, consts)?;
    let update_rate = params.update_rate(r, m, n, consts);
    let mut out = f.clone();
    let mut trace = DescentTrace { tau, rho, filter_rate, update_rate, appended: 0 };
    let (ms, ns) = kept.shape();
    if ms == 0 || ns == 0 {
        return Ok(DescentOutcome { factorization: out, subsets: kept, trace });
    }

    let q = check_rate(update_rate, "descent-update", consts)?;
    let t = T::c(tau);
    let obs = oracle.observe(q, &kept, "descent-update")?;
    let q = obs.p();
    if q == 0.0 {
        return Ok(DescentOutcome { factorization: out, subsets: kept, trace });
    }
    let x = obs.map_values(|i, j, v| clamp(v - f.entry(i, j), t)).to_sparse_local(&kept);
    let k = (2 * (r + params.r_star)).min(ms.min(ns));
    let u_hat = top_k_subspace(&x, k, consts.descent_power_eps, params.fail_prob / 3.0, &stream.named("power"), consts)?;
    let mut v_add = x.apply_t(&u_hat);
    v_add /= T::c(q);

    let width = u_hat.ncols();
    let mut du = DMatrix::zeros(f.nrows(), width);
    let mut dv = DMatrix::zeros(f.ncols(), width);
    for (a, &i) in kept.rows.iter().enumerate() {
        du.row_mut(i).copy_from(&u_hat.row(a));
    }
    for (b, &j) in kept.cols.iter().enumerate() {
        dv.row_mut(j).copy_from(&v_add.row(b));
    }
    out.append(&du, &dv);
    trace.appended = width;
    Ok(DescentOutcome { factorization: out, subsets: kept, trace })
}

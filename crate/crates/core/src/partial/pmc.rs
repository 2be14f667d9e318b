use super::descent::{descent, DescentParams, DescentTrace};
use crate::constants::{ceil_count, ConstantsConfig};
use crate::error::{McError, Result};
use crate::linalg::Factorization;
use crate::observe::{IndexSubsets, Oracle};
use crate::rng::Stream;
use crate::scalar::Real;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PmcParams {
    pub r_star: usize,
    /// Upper bound on `‖M⋆‖_op`.
    pub sigma: f64,
    /// Noise bound `Δ ≥ ‖N‖_F`.
    pub delta: f64,
    pub alpha: f64,
    pub fail_prob: f64,
    pub ell: f64,
}

impl PmcParams {
    fn validate(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x < 1.0;
        if self.r_star == 0 || !unit(self.alpha) || !unit(self.fail_prob) || !(self.ell >= 1.0) {
            return Err(McError::Precondition(format!(
                "need r⋆ ≥ 1, α, δ ∈ (0,1), ℓ ≥ 1 (got r⋆={}, α={}, δ={}, ℓ={})",
                self.r_star, self.alpha, self.fail_prob, self.ell
            )));
        }
        if !(self.sigma >= 0.0) || !(self.delta >= 0.0) {
            return Err(McError::Precondition("σ and Δ must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PmcReport {
    pub iterations: usize,
    pub rank: usize,
    pub kept_rows: usize,
    pub kept_cols: usize,
    pub gamma_add: f64,
    /// `Δ̃` before the first step and after each one.
    pub delta_tilde: Vec<f64>,
    pub steps: Vec<DescentTrace>,
}

/// Repeated Descent on a shrinking submatrix, starting from zero.
///
/// The first phase uses progress factor `ℓ` for at most `K+1` steps while
/// `Δ̃ ≥ 20ℓΔ`; the second repeats with `ℓ = e`.
pub fn partial_completion<T: Real, O: Oracle<T> + ?Sized>(
    oracle: &mut O,
    params: &PmcParams,
    consts: &ConstantsConfig,
    stream: &Stream,
) -> Result<(Factorization<T>, IndexSubsets, PmcReport)> {
    params.validate()?;
    let (m, n) = oracle.shape();
    let mut dt = (params.r_star as f64).sqrt() * params.sigma;
    let mut f = Factorization::zeros(m, n);
    let mut scope = IndexSubsets::full(m, n);
    let kk = ceil_count(params.ell.ln()).max(1);
    let k2 = (kk * kk) as f64;
    let gamma_add = params.alpha
        / (consts.pmc_gamma_log * k2 * (m as f64).ln()).max(consts.pmc_gamma_ell * params.ell * params.ell * k2);
    let mut report = PmcReport {
        iterations: 0,
        rank: 0,
        kept_rows: m,
        kept_cols: n,
        gamma_add,
        delta_tilde: vec![dt],
        steps: Vec::new(),
    };
    let mut k = 0usize;
    for (phase, ell) in [params.ell, std::f64::consts::E].into_iter().enumerate() {
        let start = k;
        while dt >= 20.0 * ell * params.delta && k - start <= kk {
            let dp = DescentParams {
                delta: dt,
                gamma: gamma_add * k as f64,
                gamma_add,
                ell,
                fail_prob: params.fail_prob / (2 * kk) as f64,
                r_star: params.r_star,
            };
            let sub = stream.split(((phase as u64) << 32) | k as u64);
            let out = descent(oracle, &f, &scope, &dp, consts, &sub)?;
            f = out.factorization;
            scope = out.subsets;
            report.steps.push(out.trace);
            dt /= ell;
            report.delta_tilde.push(dt);
            k += 1;
        }
    }
    report.iterations = k;
    report.rank = f.rank();
    report.kept_rows = scope.rows.len();
    report.kept_cols = scope.cols.len();
    Ok((f, scope, report))
}

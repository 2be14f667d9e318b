use super::opnorm::estimate_op_norm;
use crate::constants::{ceil_count, ln_floor2, ConstantsConfig, Profile};
use crate::error::{McError, Result};
use crate::fixing::{fix, FixParams, FixReport};
use crate::linalg::{top_rank_truncation, Factorization};
use crate::observe::{ClampRecord, IndexSubsets, Oracle, Transposed};
use crate::partial::{descent, DescentParams};
use crate::rng::Stream;
use crate::scalar::Real;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McParams {
    pub r_star: usize,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    /// Noise bound `Δ ≥ ‖N‖_F`.
    pub delta: f64,
    pub fail_prob: f64,
}

impl McParams {
    fn validate(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x < 1.0;
        if self.r_star == 0 || !unit(self.alpha) || !unit(self.beta) || !unit(self.fail_prob) {
            return Err(McError::Precondition(format!(
                "need r⋆ ≥ 1 and α, β, δ ∈ (0,1) (got r⋆={}, α={}, β={}, δ={})",
                self.r_star, self.alpha, self.beta, self.fail_prob
            )));
        }
        if !(self.mu > 0.0) || !(self.delta > 0.0) {
            return Err(McError::Precondition(format!("need μ > 0 and Δ > 0 (got μ={}, Δ={})", self.mu, self.delta)));
        }
        Ok(())
    }
}

/// One run of `K` Descent steps followed by Fix.
#[derive(Clone, Debug, Serialize)]
pub struct BlockTrace {
    pub delta_tilde_start: f64,
    /// `Δ̃` after the Descent steps, as handed to Fix.
    pub delta_tilde_fix: f64,
    pub delta_tilde_end: f64,
    pub descent_ranks: Vec<usize>,
    pub fix: FixReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompletionReport {
    pub output_rank: usize,
    pub loop_iterations: usize,
    pub fix_invocations: usize,
    pub final_delta_tilde: f64,
    pub user_delta: f64,
    pub widened_delta: f64,
    pub sigma_est: f64,
    pub ell: f64,
    pub k: usize,
    /// Fix blow-up `C_fix·r⋆·sqrt(r⋆ log r⋆)/β⁸`.
    pub fix_blowup: f64,
    pub gamma_add: f64,
    pub loop_cap: usize,
    pub blocks: Vec<BlockTrace>,
    pub final_fix: FixReport,
    pub transposed: bool,
    pub clamps: Vec<ClampRecord>,
    pub clamped: bool,
    pub samples_used: usize,
    pub oracle_calls: usize,
    pub profile: Profile,
    pub seed: Option<u64>,
}

/// Completes `M̂ = M⋆ + N` from sampled entries, given `‖N‖_F ≤ Δ`.
///
/// Blocks of `K` Descent steps, each shrinking the closeness bound `Δ̃` on a
/// submatrix by `ℓ`, alternate with one Fix that restores full-matrix
/// closeness at a bounded cost; `K` is chosen so a block gains a factor of at
/// least two. Once `Δ̃ < c·ℓΔ` a last Fix and a top-`r⋆` truncation produce
/// the output. Wide inputs are processed as their transpose.
pub fn matrix_completion<T: Real, O: Oracle<T> + ?Sized>(
    oracle: &mut O,
    params: &McParams,
    consts: &ConstantsConfig,
    stream: &Stream,
) -> Result<(Factorization<T>, CompletionReport)> {
    params.validate()?;
    let (m, n) = oracle.shape();
    if m < n {
        let mut view = Transposed(&mut *oracle);
        let (f, mut report) = run(&mut view, params, consts, stream)?;
        report.transposed = true;
        return Ok((f.transpose(), report));
    }
    run(oracle, params, consts, stream)
}

fn run<T: Real, O: Oracle<T> + ?Sized>(
    oracle: &mut O,
    params: &McParams,
    consts: &ConstantsConfig,
    stream: &Stream,
) -> Result<(Factorization<T>, CompletionReport)> {
    let (m, n) = oracle.shape();
    let (mf, nf) = (m as f64, n as f64);
    let McParams { r_star, alpha, beta, mu, fail_prob, .. } = *params;
    let rs = r_star as f64;
    let delta = consts.mc_widen * params.delta / beta;

    let p_norm = consts.opnorm_p * mu * rs / (beta * beta * nf) * nf.ln();
    let sigma = estimate_op_norm(oracle, p_norm, fail_prob / 4.0, beta, consts)?;
    let ell = (rs / beta).ln().max(0.0).sqrt().exp();
    let blowup = consts.c_fix * rs * (rs * ln_floor2(rs)).sqrt() / beta.powi(8);
    let k_block = if ell > 1.0 { ceil_count((2.0 * blowup).ln() / ell.ln()).max(1) } else { 1 };
    let mut dt = rs.sqrt() * sigma;
    let target = consts.mc_stop * ell * delta;
    let n_iter = k_block as f64 * (dt / target).log2().max(1.0);
    let loop_cap = ceil_count(consts.mc_loop_cap * n_iter).max(1);
    let gamma_add = alpha / (consts.mc_gamma * (mf / (alpha * beta)).ln() * ell * ell * (k_block * k_block) as f64);
    let step_fail = fail_prob / (4.0 * n_iter);
    let fix_params = |d: f64, fp: f64| FixParams { r_star, sigma, delta: d, alpha, beta, mu, fail_prob: fp };

    let mut f = Factorization::zeros(m, n);
    let mut scope = IndexSubsets::full(m, n);
    let mut k = 0usize;
    let mut iterations = 0usize;
    let mut blocks = Vec::new();
    let mut block_start = dt;
    let mut ranks = Vec::new();
    while dt >= target {
        if iterations >= loop_cap {
            return Err(McError::NonTermination { cap: loop_cap });
        }
        let dp = DescentParams {
            delta: dt,
            gamma: gamma_add * k as f64,
            gamma_add,
            ell,
            fail_prob: step_fail,
            r_star,
        };
        let out = descent(oracle, &f, &scope, &dp, consts, &stream.named("descent").split(iterations as u64))?;
        f = out.factorization;
        scope = out.subsets;
        ranks.push(f.rank());
        dt /= ell;
        k += 1;
        iterations += 1;
        if k == k_block {
            let sub = stream.named("fix").split(blocks.len() as u64);
            let (g, rep) = fix(oracle, &f, &scope, &fix_params(dt, step_fail), consts, &sub)?;
            let before = dt;
            f = g;
            dt *= blowup;
            blocks.push(BlockTrace {
                delta_tilde_start: block_start,
                delta_tilde_fix: before,
                delta_tilde_end: dt,
                descent_ranks: std::mem::take(&mut ranks),
                fix: rep,
            });
            block_start = dt;
            scope = IndexSubsets::full(m, n);
            k = 0;
        }
    }
    let (g, final_fix) = fix(oracle, &f, &scope, &fix_params(dt, fail_prob / 4.0), consts, &stream.named("final-fix"))?;
    let out = top_rank_truncation(&g, r_star);
    let ledger = oracle.ledger();
    let clamps = ledger.clamps();
    let report = CompletionReport {
        output_rank: out.rank(),
        loop_iterations: iterations,
        fix_invocations: blocks.len() + 1,
        final_delta_tilde: dt,
        user_delta: params.delta,
        widened_delta: delta,
        sigma_est: sigma,
        ell,
        k: k_block,
        fix_blowup: blowup,
        gamma_add,
        loop_cap,
        blocks,
        final_fix,
        transposed: false,
        clamped: !clamps.is_empty(),
        clamps,
        samples_used: ledger.samples_used(),
        oracle_calls: ledger.calls(),
        profile: consts.profile,
        seed: None,
    };
    Ok((out, report))
}

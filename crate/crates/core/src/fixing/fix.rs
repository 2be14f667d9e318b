use super::aggregate::aggregate;
use super::complete::{complete, CompleteParams, CompleteSummary};
use super::representative::representative;
use super::sparsify::{sparsify, SparsifyParams};
use crate::constants::{ceil_count, ln_floor2, ConstantsConfig};
use crate::error::{McError, Result};
use crate::linalg::Factorization;
use crate::observe::{check_rate, IndexSubsets, Oracle};
use crate::rng::Stream;
use crate::scalar::Real;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FixParams {
    pub r_star: usize,
    pub sigma: f64,
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub fail_prob: f64,
}

impl FixParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x < 1.0;
        if self.r_star == 0 || !unit(self.alpha) || !unit(self.beta) || !unit(self.fail_prob) {
            return Err(McError::Precondition(format!(
                "need r⋆ ≥ 1 and α, β, δ ∈ (0,1) (got r⋆={}, α={}, β={}, δ={})",
                self.r_star, self.alpha, self.beta, self.fail_prob
            )));
        }
        if !(self.mu > 0.0) || self.mu > 3.0 / self.alpha * (1.0 + 1e-12) {
            return Err(McError::Precondition(format!("μ = {} must lie in (0, 3/α]", self.mu)));
        }
        if !(self.delta > 0.0) || !(self.sigma >= 0.0) {
            return Err(McError::Precondition("Fix needs Δ > 0 and σ ≥ 0".into()));
        }
        Ok(())
    }

    /// Trial count `K`.
    pub fn trials(&self, consts: &ConstantsConfig) -> usize {
        consts
            .fix_trials_override
            .unwrap_or_else(|| ceil_count(consts.fix_trials * (6.0 / self.fail_prob).ln()))
            .max(1)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FixReport {
    pub rank: usize,
    pub trials: usize,
    pub kept_rows: usize,
    pub kept_cols: usize,
    pub representative_sizes: Vec<usize>,
    pub column_stage: Vec<CompleteSummary>,
    pub row_stage: Vec<CompleteSummary>,
    pub consensus_index: usize,
    pub row_consensus_index: usize,
    pub zeroed_columns: usize,
}

/// Recovers the rows and columns that partial completion gave up on.
///
/// Sparsify trims `(S, T)` to a set where the iterate is close away from a
/// sparse error. `K` trials of Representative and Complete then fill every
/// column on the kept rows and Aggregate selects one; the same is repeated on
/// the transpose, with the kept rows as representatives, to fill every row.
pub fn fix<T: Real, O: Oracle<T> + ?Sized>(
    oracle: &mut O,
    f: &Factorization<T>,
    scope: &IndexSubsets,
    params: &FixParams,
    consts: &ConstantsConfig,
    stream: &Stream,
) -> Result<(Factorization<T>, FixReport)> {
    params.validate()?;
    let (m, n) = oracle.shape();
    let (mf, nf) = (m as f64, n as f64);
    let FixParams { r_star, sigma, delta, alpha, beta, mu, fail_prob } = *params;
    let rs = r_star as f64;
    let r = f.rank().max(1) as f64;
    let lnm = mf.ln();
    let lnr = ln_floor2(rs);

    let p = consts.fix_p * mu * r * lnm * (600.0 * mf / fail_prob).ln() / (alpha * beta * beta * nf);
    let sp = SparsifyParams {
        tau: consts.fix_tau * (15.0 * mu * r * lnm).sqrt() / (alpha * beta * nf) * delta,
        delta: consts.fix_sparsify_delta * delta,
        gamma: alpha / (consts.fix_sparsify_gamma * lnm),
        gamma_drop: alpha / consts.fix_sparsify_drop,
        p: check_rate(p, "fix-sparsify", consts)?,
        fail_prob: fail_prob / 6.0,
    };
    let kept = sparsify(oracle, f, scope, &sp, consts)?;
    let trials = params.trials(consts);
    let q = consts.fix_q * mu * rs / (beta * beta * nf) * nf.ln();
    let q_obs = check_rate(consts.fix_q_complete * rs / (alpha * beta * beta * nf) * nf.ln(), "fix-complete", consts)?;
    let q = check_rate(q, "fix-representative", consts)?.min(1.0);
    let alpha_c = 2.0 * alpha / 3.0;

    // Column stage: fill all columns on the rows S'.
    let col_scope = IndexSubsets { rows: kept.rows.clone(), cols: (0..n).collect(), parent: (m, n) };
    let mut col_obs = Vec::with_capacity(trials);
    for _ in 0..trials {
        col_obs.push(oracle.observe(q_obs, &col_scope, "fix-complete")?);
    }
    let local = f.restrict(&kept.rows, &kept.cols);
    let phi = consts.fix_phi * lnm / (beta * nf.sqrt()) * delta;
    let cp = CompleteParams {
        r_star,
        delta: delta / consts.fix_complete_noise,
        delta_tilde: consts.fix_tilde_col * mu * rs * lnr / (beta.powi(3) * nf.sqrt()) * delta,
        sigma,
        alpha: alpha_c,
        beta,
        gamma: (q * beta * beta / 2.0).sqrt(),
    };
    let col_runs: Vec<_> = col_obs
        .par_iter()
        .enumerate()
        .map(|(k, obs)| {
            let sub = stream.named("column-trial").split(k as u64);
            let rep = representative(&local, phi, q, consts, &sub)?;
            let b: Vec<usize> = rep.b.iter().map(|&c| kept.cols[c]).collect();
            let m_b = f.restrict(&kept.rows, &b);
            let out = complete(obs, &m_b, &col_scope, &cp, consts)?;
            Ok((rep.b.len(), out))
        })
        .collect::<Result<_>>()?;
    let cands: Vec<_> = col_runs.iter().map(|(_, o)| o.factorization.clone()).collect();
    let radius = consts.fix_agg_col * rs * lnr.sqrt() / beta.powi(5) * delta;
    let agg = aggregate(&cands, radius, fail_prob / 6.0, consts, &stream.named("column-aggregate"))?;
    let chosen = &cands[agg.index];

    // Row stage on the transpose: the kept rows are the representatives.
    let row_scope = IndexSubsets { rows: (0..n).collect(), cols: (0..m).collect(), parent: (n, m) };
    let mut row_obs = Vec::with_capacity(trials);
    for _ in 0..trials {
        row_obs.push(oracle.observe(q_obs, &IndexSubsets::full(m, n), "fix-complete")?.transpose());
    }
    let m_b = Factorization { u: chosen.v.clone(), v: chosen.u.clone() };
    let rp = CompleteParams {
        delta_tilde: consts.fix_tilde_row * rs * lnr.sqrt() / beta.powi(5) * delta,
        gamma: beta,
        ..cp
    };
    let row_runs: Vec<_> = row_obs.par_iter().map(|obs| complete(obs, &m_b, &row_scope, &rp, consts)).collect::<Result<_>>()?;
    let cands: Vec<_> = row_runs.iter().map(|o| o.factorization.transpose()).collect();
    let radius = consts.fix_agg_row * rs * (rs * lnr).sqrt() / beta.powi(8) * delta;
    let agg_row = aggregate(&cands, radius, fail_prob / 6.0, consts, &stream.named("row-aggregate"))?;
    let out = cands[agg_row.index].clone();

    let report = FixReport {
        rank: out.rank(),
        trials,
        kept_rows: kept.rows.len(),
        kept_cols: kept.cols.len(),
        representative_sizes: col_runs.iter().map(|(s, _)| *s).collect(),
        column_stage: col_runs.iter().map(|(_, o)| o.summary()).collect(),
        row_stage: row_runs.iter().map(|o| o.summary()).collect(),
        consensus_index: agg.index,
        row_consensus_index: agg_row.index,
        zeroed_columns: col_runs[agg.index].1.zeroed.len() + row_runs[agg_row.index].zeroed.len(),
    };
    Ok((out, report))
}

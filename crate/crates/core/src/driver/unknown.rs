use super::completion::{matrix_completion, CompletionReport, McParams};
use super::opnorm::estimate_op_norm;
use crate::constants::{ceil_count, ConstantsConfig};
use crate::error::{ErrorClass, McError, Result};
use crate::linalg::Factorization;
use crate::observe::{check_rate, Oracle};
use crate::rng::Stream;
use crate::scalar::Real;
use crate::synth::estimate_completion_error;
use serde::Serialize;

/// One run of the halving loop.
#[derive(Clone, Debug, Serialize)]
pub struct AutoStep {
    pub delta: f64,
    pub d_est: Option<f64>,
    pub accepted: bool,
    /// Algorithmic failure of the run at this `Δ`, if any.
    pub failure: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AutoReport {
    pub delta_start: f64,
    pub delta_min: f64,
    pub chosen_delta: f64,
    pub chosen_d_est: f64,
    pub estimate_sets: usize,
    pub estimate_rate: f64,
    pub steps: Vec<AutoStep>,
    pub completion: CompletionReport,
}

/// Completion without a known noise level.
///
/// Starting from `Δ₀ = sqrt(r⋆)·σ` with `σ` the estimated operator norm,
/// runs [`matrix_completion`] at `Δ`, scores the output by `d_est` on a
/// held-out source and halves `Δ`. The loop stops when `d_est > c_hi·Δ`,
/// when `d_est` regresses past `c_reg` times the best score, when a run
/// fails after an accepted one, or when `Δ < Δ_min`. The best-scoring accepted
/// iterate is returned.
pub fn complete_unknown_noise<T: Real, O: Oracle<T> + ?Sized>(
    oracle: &mut O,
    params: &McParams,
    delta_min: f64,
    consts: &ConstantsConfig,
    stream: &Stream,
) -> Result<(Factorization<T>, AutoReport)> {
    if !(delta_min > 0.0) {
        return Err(McError::Precondition(format!("Δ_min = {delta_min} must be positive")));
    }
    let (m, n) = oracle.shape();
    let (mf, nf) = (m as f64, n as f64);
    let McParams { r_star, alpha, beta, mu, fail_prob, .. } = *params;
    let rs = r_star as f64;
    let mut holdout = oracle.holdout(consts.holdout_fraction, &stream.named("holdout"))?;
    let small = nf.min(mf);
    let p_norm = consts.opnorm_p * mu * rs / (beta * beta * small) * small.ln();
    let sigma = estimate_op_norm(oracle, p_norm, fail_prob / 4.0, beta, consts)?;
    let sets = ceil_count(consts.est_sets * (mf * nf / fail_prob).ln()).max(1);
    let rate = check_rate(consts.est_p * rs / (alpha * beta.powi(6) * small) * (mf * nf).ln(), "estimate-error", consts)?
        .min(1.0);
    let delta_start = rs.sqrt() * sigma;

    let mut delta = delta_start;
    let mut steps = Vec::new();
    let mut best: Option<(Factorization<T>, CompletionReport, f64, f64)> = None;
    let mut round = 0u64;
    while delta >= delta_min {
        let run = matrix_completion(oracle, &McParams { delta, ..*params }, consts, &stream.named("run").split(round));
        round += 1;
        let (f, report) = match run {
            Ok(out) => out,
            Err(e) if e.class() == ErrorClass::Algorithmic || (best.is_some() && e.class() != ErrorClass::Input) => {
                steps.push(AutoStep { delta, d_est: None, accepted: false, failure: Some(e.to_string()) });
                break;
            }
            Err(e) => return Err(e),
        };
        let d = estimate_completion_error(&mut holdout, &f, sets, rate)?;
        let accepted = d <= consts.cert_high * delta && best.as_ref().map_or(true, |b| d <= consts.cert_regress * b.2);
        steps.push(AutoStep { delta, d_est: Some(d), accepted, failure: None });
        if !accepted {
            break;
        }
        if best.as_ref().map_or(true, |b| d < b.2) {
            best = Some((f, report, d, delta));
        }
        delta /= 2.0;
    }
    let (f, completion, d, chosen) = best.ok_or(McError::DeltaMinReached)?;
    let report = AutoReport {
        delta_start,
        delta_min,
        chosen_delta: chosen,
        chosen_d_est: d,
        estimate_sets: sets,
        estimate_rate: rate,
        steps,
        completion,
    };
    Ok((f, report))
}

use crate::constants::{ceil_count, ConstantsConfig};
use crate::error::{McError, Result};
use crate::observe::{check_rate, IndexSubsets, Oracle};
use crate::scalar::Real;
use crate::synth::median;

/// Median over `ceil(c·log(1/δ))` draws of `sqrt(32/(pβ²))·‖O_p(M̂)‖_F`.
///
/// With the stated sampling rate and mild noise this lies in
/// `[‖M⋆‖_op, 2√n·‖M⋆‖_op]` with probability `1 − δ`.
pub fn estimate_op_norm<T: Real, O: Oracle<T> + ?Sized>(
    oracle: &mut O,
    p: f64,
    fail_prob: f64,
    beta: f64,
    consts: &ConstantsConfig,
) -> Result<f64> {
    if !(fail_prob > 0.0 && fail_prob < 1.0) || !(beta > 0.0) || !(p > 0.0) {
        return Err(McError::Precondition(format!("need p > 0, β > 0, δ ∈ (0,1); got p={p}, β={beta}, δ={fail_prob}")));
    }
    let p = check_rate(p, "estimate-op-norm", consts)?;
    let (m, n) = oracle.shape();
    let full = IndexSubsets::full(m, n);
    let draws = ceil_count(consts.opnorm_draws * (1.0 / fail_prob).ln()).max(1);
    let mut values = Vec::with_capacity(draws);
    for _ in 0..draws {
        let obs = oracle.observe(p, &full, "estimate-op-norm")?;
        let fro: f64 = obs.triples().iter().map(|t| t.2.f().powi(2)).sum::<f64>().sqrt();
        values.push((consts.opnorm_scale / (obs.p() * beta * beta)).sqrt() * fro);
    }
    Ok(median(&mut values))
}

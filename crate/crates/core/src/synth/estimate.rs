use crate::error::{McError, Result};
use crate::linalg::Factorization;
use crate::observe::{IndexSubsets, Oracle};
use crate::scalar::Real;

/// Median of `values`; an even count averages the two middle values.
pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

/// `d_est`: the median over `l` fresh sample sets at rate `p` of the
/// rescaled residual `sqrt(Σ (M̂_ij − F_ij)²) / sqrt(p)`.
pub fn estimate_completion_error<T: Real, O: Oracle<T> + ?Sized>(
    oracle: &mut O,
    f: &Factorization<T>,
    l: usize,
    p: f64,
) -> Result<f64> {
    let (m, n) = oracle.shape();
    if f.shape() != (m, n) {
        return Err(McError::Shape(format!("F is {:?}, oracle is {m}×{n}", f.shape())));
    }
    if l == 0 || !(p > 0.0 && p <= 1.0) {
        return Err(McError::Precondition(format!("need l ≥ 1 and p ∈ (0, 1], got l = {l}, p = {p}")));
    }
    let full = IndexSubsets::full(m, n);
    let mut values = Vec::with_capacity(l);
    for _ in 0..l {
        let obs = oracle.observe(p, &full, "estimate-error")?;
        let ss: f64 = obs.triples().iter().map(|&(i, j, v)| (v - f.entry(i, j)).f().powi(2)).sum();
        values.push((ss / obs.p()).sqrt());
    }
    Ok(median(&mut values))
}

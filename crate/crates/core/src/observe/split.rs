use super::ObservationSet;
use crate::error::{McError, Result};
use crate::rng::Stream;
use crate::scalar::Real;
use rand::seq::index::sample;
use rand::Rng;

/// Solves `1 − (1−q)^K = P` for `q` by bisection to `1e-12`.
pub fn solve_split_rate(k: usize, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    if total >= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - (1.0 - mid).powi(k as i32) < total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Draws the number of successes among `k` trials of rate `q`, conditioned
/// on at least one success, by inverting the truncated binomial CDF.
pub(crate) fn truncated_binomial<R: Rng + ?Sized>(k: usize, q: f64, rng: &mut R) -> usize {
    if q >= 1.0 {
        return k;
    }
    let norm = 1.0 - (1.0 - q).powi(k as i32);
    let u: f64 = rng.gen::<f64>() * norm;
    let mut acc = 0.0;
    let mut pmf = (1.0 - q).powi(k as i32);
    for c in 1..=k {
        pmf *= (k - c + 1) as f64 / c as f64 * q / (1.0 - q);
        acc += pmf;
        if u < acc {
            return c;
        }
    }
    k
}

/// Slots (out of `k` sequential calls) that reveal a given entry.
pub(crate) fn reveal_slots(k: usize, q: f64, stream: &Stream) -> Vec<usize> {
    let mut rng = stream.rng();
    let c = truncated_binomial(k, q, &mut rng);
    let mut slots = sample(&mut rng, k, c).into_vec();
    slots.sort_unstable();
    slots
}

/// Simulates `K = probs.len()` independent observation sets `O_{p_k}(M)` from
/// one draw `obs ~ O_{K·p}(M)`, where `p = obs.p/K` and every `p_k ≤ p`.
///
/// Each revealed entry gets the set of calls that would have revealed it
/// (a truncated binomial count of uniformly chosen slots at rate `q`,
/// `1 − (1−q)^K = K·p`); slot `k` then keeps it with probability `p_k/q`.
pub fn split_oracle<T: Real>(obs: &ObservationSet<T>, probs: &[f64], stream: &Stream) -> Result<Vec<ObservationSet<T>>> {
    let k = probs.len();
    if k == 0 {
        return Ok(vec![]);
    }
    let base = obs.p() / k as f64;
    if let Some(bad) = probs.iter().find(|&&pk| !(0.0..=base * (1.0 + 1e-12)).contains(&pk)) {
        return Err(McError::InvalidProbabilities(format!(
            "split probability {bad} not in [0, {base}] (obs rate {} over {k} calls)",
            obs.p()
        )));
    }
    let q = solve_split_rate(k, obs.p());
    let mut outputs: Vec<Vec<(usize, usize, T)>> = vec![Vec::new(); k];
    for &(i, j, v) in obs.triples() {
        let entry = stream.split(i as u64).split(j as u64);
        let thin = entry.named("thin");
        for slot in reveal_slots(k, q, &entry) {
            if probs[slot] > 0.0 && thin.coin_at(slot, 0, probs[slot] / q) {
                outputs[slot].push((i, j, v));
            }
        }
    }
    Ok(outputs
        .into_iter()
        .zip(probs)
        .map(|(t, &pk)| ObservationSet::from_sorted(obs.shape(), pk, t))
        .collect())
}

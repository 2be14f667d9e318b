use crate::constants::ConstantsConfig;
use crate::error::{McError, Result};
use crate::linalg::{sketch_rows, Factorization, Sketch};
use crate::rng::Stream;
use crate::scalar::Real;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateOutcome {
    pub index: usize,
    /// Candidates within `2.2Δ` of each candidate, itself included.
    pub neighbors: Vec<usize>,
    /// Sketched pairwise distances, row-major `k×k`.
    pub distances: Vec<f64>,
}

/// Picks a candidate close to the majority.
///
/// Every pairwise distance is sketched with one shared random projection.
/// Among candidates with at least `0.51k` neighbours within `2.2Δ`, the one
/// with the most neighbours wins, then the smallest summed distance, then the
/// lowest index, so the choice does not depend on the candidate order.
pub fn aggregate<T: Real>(
    candidates: &[Factorization<T>],
    delta: f64,
    fail_prob: f64,
    consts: &ConstantsConfig,
    stream: &Stream,
) -> Result<AggregateOutcome> {
    let k = candidates.len();
    if k == 0 {
        return Err(McError::NoConsensus { count: 0, needed: 0 });
    }
    let shape = candidates[0].shape();
    if candidates.iter().any(|c| c.shape() != shape) {
        return Err(McError::Shape("aggregate candidates differ in shape".into()));
    }
    let budget = fail_prob / (k * k) as f64;
    let sketch = Sketch::<T>::new(shape.0, sketch_rows(shape.0, budget, consts), stream);
    let proj: Vec<_> = candidates.iter().map(|c| sketch.project(c)).collect();
    let mut distances = vec![0.0; k * k];
    for i in 0..k {
        for j in i + 1..k {
            let d = sketch.distance(&proj[i], &candidates[i], &proj[j], &candidates[j]);
            distances[i * k + j] = d;
            distances[j * k + i] = d;
        }
    }
    let radius = consts.aggregate_radius * delta;
    let needed = consts.aggregate_quorum * k as f64;
    let neighbors: Vec<usize> =
        (0..k).map(|i| (0..k).filter(|&j| distances[i * k + j] <= radius).count()).collect();
    let spread = |i: usize| -> f64 { distances[i * k..(i + 1) * k].iter().sum() };
    let best = (0..k).filter(|&i| neighbors[i] as f64 >= needed).min_by(|&a, &b| {
        neighbors[b].cmp(&neighbors[a]).then(spread(a).total_cmp(&spread(b))).then(a.cmp(&b))
    });
    match best {
        Some(index) => Ok(AggregateOutcome { index, neighbors, distances }),
        None => Err(McError::NoConsensus {
            count: neighbors.iter().copied().max().unwrap_or(0),
            needed: needed.ceil() as usize,
        }),
    }
}

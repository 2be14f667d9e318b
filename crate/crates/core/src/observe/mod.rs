//! The random observation model `O_p`.

mod oracle;
mod split;

pub use oracle::{ClampRecord, FullOracle, Oracle, OracleLedger, ReuseOracle, SplitOracle, Transposed};
pub use split::{solve_split_rate, split_oracle};

use crate::constants::ConstantsConfig;
use crate::error::{McError, Result};
use crate::linalg::SparseMatrix;
use crate::rng::Stream;
use crate::scalar::Real;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Validates a reveal probability computed from a parameter formula.
///
/// Rates above one are an error unless the profile allows clamping, in
/// which case the oracle caps and logs them.
pub fn check_rate(p: f64, site: &'static str, consts: &ConstantsConfig) -> Result<f64> {
    if p.is_nan() || p < 0.0 {
        return Err(McError::InvalidProbabilities(format!("rate {p} at {site}")));
    }
    if p > 1.0 && !consts.clamp_probabilities {
        return Err(McError::ProbabilityOverflow { site, requested: p });
    }
    Ok(p)
}

/// Revealed entries `(row, col, value)`, sorted by position, with the reveal
/// probability that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSet<T: Real> {
    shape: (usize, usize),
    p: f64,
    triples: Vec<(usize, usize, T)>,
}

impl<T: Real> ObservationSet<T> {
    /// Sorts the triples and rejects duplicates or out-of-range positions.
    pub fn new(shape: (usize, usize), p: f64, mut triples: Vec<(usize, usize, T)>) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(McError::InvalidObservations(format!("p = {p} outside [0, 1]")));
        }
        triples.sort_by_key(|&(i, j, _)| (i, j));
        for w in triples.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(McError::InvalidObservations(format!("duplicate entry ({}, {})", w[0].0, w[0].1)));
            }
        }
        for &(i, j, v) in &triples {
            if i >= shape.0 || j >= shape.1 {
                return Err(McError::InvalidObservations(format!(
                    "entry ({i}, {j}) outside {}×{}",
                    shape.0, shape.1
                )));
            }
            if !v.is_finite() {
                return Err(McError::NonFinite { row: i, col: j });
            }
        }
        Ok(ObservationSet { shape, p, triples })
    }

    /// Constructor for triples already known to be sorted and unique.
    pub(crate) fn from_sorted(shape: (usize, usize), p: f64, triples: Vec<(usize, usize, T)>) -> Self {
        debug_assert!(triples.windows(2).all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1)));
        ObservationSet { shape, p, triples }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn triples(&self) -> &[(usize, usize, T)] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Entries with row in `S` and column in `T`.
    pub fn restrict(&self, within: &IndexSubsets) -> Self {
        let (rm, cm) = within.masks();
        let triples = self.triples.iter().copied().filter(|&(i, j, _)| rm[i] && cm[j]).collect();
        ObservationSet { shape: self.shape, p: self.p, triples }
    }

    pub fn transpose(&self) -> Self {
        let mut triples: Vec<_> = self.triples.iter().map(|&(i, j, v)| (j, i, v)).collect();
        triples.sort_by_key(|&(i, j, _)| (i, j));
        ObservationSet { shape: (self.shape.1, self.shape.0), p: self.p, triples }
    }

    /// Replaces every value by `f(i, j, value)`.
    pub fn map_values(&self, mut f: impl FnMut(usize, usize, T) -> T) -> Self {
        let triples = self.triples.iter().map(|&(i, j, v)| (i, j, f(i, j, v))).collect();
        ObservationSet { shape: self.shape, p: self.p, triples }
    }

    /// Revealed entries as a sparse matrix over the local coordinates of
    /// `within` (row `S[a]` becomes row `a`).
    pub fn to_sparse_local(&self, within: &IndexSubsets) -> SparseMatrix<T> {
        let rpos = position_map(&within.rows, self.shape.0);
        let cpos = position_map(&within.cols, self.shape.1);
        let trip = self
            .triples
            .iter()
            .filter_map(|&(i, j, v)| match (rpos[i], cpos[j]) {
                (Some(a), Some(b)) => Some((a, b, v)),
                _ => None,
            })
            .collect();
        SparseMatrix::from_triplets(within.rows.len(), within.cols.len(), trip)
    }
}

pub(crate) fn position_map(indices: &[usize], size: usize) -> Vec<Option<usize>> {
    let mut pos = vec![None; size];
    for (a, &i) in indices.iter().enumerate() {
        pos[i] = Some(a);
    }
    pos
}

/// Kept rows `S ⊆ [m]` and columns `T ⊆ [n]`, both sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSubsets {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub parent: (usize, usize),
}

impl IndexSubsets {
    pub fn full(m: usize, n: usize) -> Self {
        IndexSubsets { rows: (0..m).collect(), cols: (0..n).collect(), parent: (m, n) }
    }

    pub fn new(mut rows: Vec<usize>, mut cols: Vec<usize>, parent: (usize, usize)) -> Result<Self> {
        rows.sort_unstable();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        if rows.last().is_some_and(|&i| i >= parent.0) || cols.last().is_some_and(|&j| j >= parent.1) {
            return Err(McError::Shape(format!("index subsets exceed parent shape {parent:?}")));
        }
        Ok(IndexSubsets { rows, cols, parent })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }

    pub fn masks(&self) -> (Vec<bool>, Vec<bool>) {
        let mut rm = vec![false; self.parent.0];
        let mut cm = vec![false; self.parent.1];
        self.rows.iter().for_each(|&i| rm[i] = true);
        self.cols.iter().for_each(|&j| cm[j] = true);
        (rm, cm)
    }

    pub fn excluded_rows(&self) -> Vec<usize> {
        let (rm, _) = self.masks();
        (0..self.parent.0).filter(|&i| !rm[i]).collect()
    }

    pub fn excluded_cols(&self) -> Vec<usize> {
        let (_, cm) = self.masks();
        (0..self.parent.1).filter(|&j| !cm[j]).collect()
    }

    pub fn transpose(&self) -> Self {
        IndexSubsets { rows: self.cols.clone(), cols: self.rows.clone(), parent: (self.parent.1, self.parent.0) }
    }

    pub fn contains(&self, other: &IndexSubsets) -> bool {
        let (rm, cm) = self.masks();
        other.rows.iter().all(|&i| rm[i]) && other.cols.iter().all(|&j| cm[j])
    }
}

/// `O_p(M)`: each entry revealed independently with probability `p`.
///
/// The coin for `(i, j)` depends only on the stream and the position, so
/// sampling a submatrix and restricting a full sample agree exactly.
pub fn sample_oracle<T: Real>(m: &DMatrix<T>, p: f64, stream: &Stream) -> ObservationSet<T> {
    sample_submatrix(m, &IndexSubsets::full(m.nrows(), m.ncols()), p, stream)
}

/// `O_p(M_{S,T})` with global indices.
pub fn sample_submatrix<T: Real>(m: &DMatrix<T>, within: &IndexSubsets, p: f64, stream: &Stream) -> ObservationSet<T> {
    let mut triples = Vec::new();
    if p > 0.0 {
        for &i in &within.rows {
            for &j in &within.cols {
                if stream.coin_at(i, j, p) {
                    triples.push((i, j, m[(i, j)]));
                }
            }
        }
    }
    ObservationSet::from_sorted((m.nrows(), m.ncols()), p, triples)
}

/// `(1/p)·Σ value²` per row of `S` and per column of `T`.
pub fn empirical_sq_norms<T: Real>(obs: &ObservationSet<T>, within: &IndexSubsets) -> (Vec<f64>, Vec<f64>) {
    accumulate(obs, within, |v| {
        let x = v.f();
        x * x
    })
}

/// `(1/p)·|{revealed entries with |value| ≥ τ}|` per row of `S` and column of `T`.
pub fn empirical_large_counts<T: Real>(obs: &ObservationSet<T>, tau: f64, within: &IndexSubsets) -> (Vec<f64>, Vec<f64>) {
    accumulate(obs, within, |v| if v.f().abs() >= tau { 1.0 } else { 0.0 })
}

fn accumulate<T: Real>(obs: &ObservationSet<T>, within: &IndexSubsets, f: impl Fn(T) -> f64) -> (Vec<f64>, Vec<f64>) {
    let mut rows = vec![0.0; within.rows.len()];
    let mut cols = vec![0.0; within.cols.len()];
    if obs.p <= 0.0 {
        return (rows, cols);
    }
    let rpos = position_map(&within.rows, obs.shape.0);
    let cpos = position_map(&within.cols, obs.shape.1);
    for &(i, j, v) in &obs.triples {
        if let (Some(a), Some(b)) = (rpos[i], cpos[j]) {
            let x = f(v);
            rows[a] += x;
            cols[b] += x;
        }
    }
    let inv = 1.0 / obs.p;
    rows.iter_mut().chain(cols.iter_mut()).for_each(|x| *x *= inv);
    (rows, cols)
}

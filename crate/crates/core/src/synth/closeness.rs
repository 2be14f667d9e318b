use super::regularity::{binomial, next_combination};
use crate::error::{McError, Result};
use crate::observe::IndexSubsets;
use crate::scalar::Real;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Largest `C(m, b)·C(n, b)` exact mode accepts.
pub const CLOSENESS_BUDGET: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosenessMode {
    Exact,
    Greedy,
}

fn squared_diff<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] - b[(i, j)]).f().powi(2))
}

/// Columns to drop once the rows are fixed: the `budget` heaviest, lowest index first on ties.
fn heaviest_cols(d2: &DMatrix<f64>, row_kept: &[bool], budget: usize) -> (Vec<usize>, f64) {
    let mut mass: Vec<(usize, f64)> = (0..d2.ncols())
        .map(|j| (j, (0..d2.nrows()).filter(|&i| row_kept[i]).map(|i| d2[(i, j)]).sum()))
        .collect();
    mass.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let rest: f64 = mass[budget.min(mass.len())..].iter().map(|c| c.1).sum();
    let mut dropped: Vec<usize> = mass[..budget.min(mass.len())].iter().map(|c| c.0).collect();
    dropped.sort_unstable();
    (dropped, rest)
}

fn witness(m: usize, n: usize, drop_rows: &[usize], drop_cols: &[usize]) -> IndexSubsets {
    let rows = (0..m).filter(|i| !drop_rows.contains(i)).collect();
    let cols = (0..n).filter(|j| !drop_cols.contains(j)).collect();
    IndexSubsets { rows, cols, parent: (m, n) }
}

/// Smallest `Δ` for which `M1` and `M2` are `Δ`-close on a `γ`-submatrix,
/// with the kept rows and columns as witness.
///
/// Both sides may drop `⌊γ·min(m, n)⌋` indices. Exact mode enumerates the
/// dropped rows and drops the heaviest columns for each; greedy mode removes
/// the heaviest remaining row or column one at a time and returns an upper
/// bound.
pub fn submatrix_closeness<T: Real>(
    m1: &DMatrix<T>,
    m2: &DMatrix<T>,
    gamma: f64,
    mode: ClosenessMode,
) -> Result<(f64, IndexSubsets)> {
    if m1.shape() != m2.shape() {
        return Err(McError::Shape(format!("{:?} vs {:?}", m1.shape(), m2.shape())));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(McError::Precondition(format!("γ = {gamma} must lie in [0, 1]")));
    }
    let (m, n) = m1.shape();
    let budget = (gamma * m.min(n) as f64 + 1e-9).floor() as usize;
    let d2 = squared_diff(m1, m2);
    match mode {
        ClosenessMode::Exact => {
            let count = binomial(m, budget).saturating_mul(binomial(n, budget));
            if count > CLOSENESS_BUDGET {
                return Err(McError::EnumerationBudget { count: count as f64, budget: CLOSENESS_BUDGET as f64 });
            }
            let mut rows: Vec<usize> = (0..budget).collect();
            let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
            loop {
                let mut kept = vec![true; m];
                rows.iter().for_each(|&i| kept[i] = false);
                let (cols, mass) = heaviest_cols(&d2, &kept, budget);
                if best.as_ref().map_or(true, |b| mass < b.0) {
                    best = Some((mass, rows.clone(), cols));
                }
                if !next_combination(&mut rows, m) {
                    break;
                }
            }
            let (mass, rows, cols) = best.expect("at least one subset");
            Ok((mass.sqrt(), witness(m, n, &rows, &cols)))
        }
        ClosenessMode::Greedy => {
            let mut row_kept = vec![true; m];
            let mut col_kept = vec![true; n];
            let (mut dr, mut dc) = (Vec::new(), Vec::new());
            loop {
                let row_mass = |i: usize| (0..n).filter(|&j| col_kept[j]).map(|j| d2[(i, j)]).sum::<f64>();
                let col_mass = |j: usize| (0..m).filter(|&i| row_kept[i]).map(|i| d2[(i, j)]).sum::<f64>();
                let top_row = (dr.len() < budget)
                    .then(|| (0..m).filter(|&i| row_kept[i]).map(|i| (i, row_mass(i))).reduce(heavier))
                    .flatten();
                let top_col = (dc.len() < budget)
                    .then(|| (0..n).filter(|&j| col_kept[j]).map(|j| (j, col_mass(j))).reduce(heavier))
                    .flatten();
                match (top_row, top_col) {
                    (Some(r), c) if c.map_or(true, |c| r.1 >= c.1) && r.1 > 0.0 => {
                        row_kept[r.0] = false;
                        dr.push(r.0);
                    }
                    (_, Some(c)) if c.1 > 0.0 => {
                        col_kept[c.0] = false;
                        dc.push(c.0);
                    }
                    _ => break,
                }
            }
            let mass: f64 = (0..m)
                .filter(|&i| row_kept[i])
                .flat_map(|i| (0..n).filter(|&j| col_kept[j]).map(move |j| (i, j)))
                .map(|(i, j)| d2[(i, j)])
                .sum();
            Ok((mass.sqrt(), witness(m, n, &dr, &dc)))
        }
    }
}

fn heavier(a: (usize, f64), b: (usize, f64)) -> (usize, f64) {
    if b.1 > a.1 {
        b
    } else {
        a
    }
}

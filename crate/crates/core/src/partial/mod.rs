//! Partial completion: Filter, Descent and the recursive driver that
//! completes a matrix on all but a few rows and columns.

mod descent;
mod filter;
mod pmc;

pub use descent::{descent, DescentOutcome, DescentParams, DescentTrace};
pub use filter::{filter, FilterParams};
pub(crate) use filter::rounds;
pub use pmc::{partial_completion, PmcParams, PmcReport};

/// Indices of `indices` that survive dropping the `count` largest `stats`
/// (ties dropped in index order), returned in ascending order.
pub(crate) fn drop_largest(indices: &[usize], stats: &[f64], count: usize) -> Vec<usize> {
    debug_assert_eq!(indices.len(), stats.len());
    let mut order: Vec<usize> = (0..indices.len()).collect();
    order.sort_by(|&a, &b| stats[b].total_cmp(&stats[a]).then(indices[a].cmp(&indices[b])));
    let mut kept: Vec<usize> = order.into_iter().skip(count).map(|a| indices[a]).collect();
    kept.sort_unstable();
    kept
}

#[cfg(test)]
mod tests {
    use super::drop_largest;

    #[test]
    fn drop_ties_by_index() {
        assert_eq!(drop_largest(&[3, 5, 7, 9], &[1.0, 2.0, 2.0, 0.5], 1), vec![3, 7, 9]);
        assert_eq!(drop_largest(&[3, 5, 7, 9], &[1.0, 2.0, 2.0, 0.5], 2), vec![3, 9]);
        assert_eq!(drop_largest(&[1, 2], &[1.0, 1.0], 5), Vec::<usize>::new());
    }
}

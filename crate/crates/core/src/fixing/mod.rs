//! Recovery of dropped rows and columns: Sparsify, the ridge column test,
//! representative subsets, regression-based completion, aggregation and Fix.

mod aggregate;
mod complete;
mod fix;
mod representative;
mod sparsify;

pub use aggregate::{aggregate, AggregateOutcome};
pub use complete::{agd_regression, complete, CompleteOutcome, CompleteParams, CompleteSummary, Curvature};
pub use fix::{fix, FixParams, FixReport};
pub use representative::{representative, ridge_objective, test_column, RepresentativeResult};
pub use sparsify::{sparsify, SparsifyParams};

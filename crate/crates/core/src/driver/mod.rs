//! Top-level completion: operator-norm estimation, the Descent/Fix loop and
//! the wrapper for an unknown noise level.

mod completion;
mod opnorm;
mod unknown;

pub use completion::{matrix_completion, BlockTrace, CompletionReport, McParams};
pub use opnorm::estimate_op_norm;
pub use unknown::{complete_unknown_noise, AutoReport, AutoStep};

//! Synthetic instances and checkers used to verify completion guarantees
//! against ground truth.

mod closeness;
mod estimate;
mod instance;
mod regularity;

pub use closeness::{submatrix_closeness, ClosenessMode, CLOSENESS_BUDGET};
pub use estimate::{estimate_completion_error, median};
pub use instance::{planted_instance, random_standard_instance, InstanceMeta, InstanceOptions, PlantedKind, Planting, SyntheticInstance};
pub use regularity::{
    incoherence_mu, regularity_check, standardize_params, RegularityMode, RegularityReport, StandardParams,
    ENUMERATION_BUDGET,
};

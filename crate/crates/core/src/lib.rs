//! Low-rank matrix completion from randomly revealed entries under
//! adversarial noise.

pub mod constants;
pub mod driver;
pub mod error;
pub mod fixing;
pub mod io;
pub mod linalg;
pub mod observe;
pub mod partial;
pub mod rng;
pub mod scalar;
pub mod synth;

pub use constants::{ConstantsConfig, Profile};
pub use error::{McError, Result};
pub use linalg::{DenseMatrix, Factorization};
pub use observe::ObservationSet;
pub use rng::Stream;
pub use scalar::Real;

pub type Matrix64 = DenseMatrix<f64>;
pub type Matrix32 = DenseMatrix<f32>;
pub type Factorization64 = Factorization<f64>;
pub type Factorization32 = Factorization<f32>;
pub type Observations64 = ObservationSet<f64>;
pub type Observations32 = ObservationSet<f32>;

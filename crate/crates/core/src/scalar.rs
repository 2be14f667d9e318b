use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};

/// Floating-point element type for matrices.
///
/// Control parameters (probabilities, closeness bounds, thresholds) stay in
/// `f64`; only matrix entries use `T`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` constant into `Self`.
    fn c(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 conversion")
    }

    /// Converts `self` into `f64`.
    fn f(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("f64 conversion")
    }

    /// Tolerance for orthonormality checks (`‖UᵀU − I‖_max`).
    fn ortho_tol() -> f64;

    /// Tolerance for reconstruction identities, relative to the matrix norm.
    fn recon_tol() -> f64;

    /// Machine epsilon as `f64`.
    fn eps() -> f64;
}

impl Real for f64 {
    fn ortho_tol() -> f64 {
        1e-8
    }
    fn recon_tol() -> f64 {
        1e-8
    }
    fn eps() -> f64 {
        f64::EPSILON
    }
}

impl Real for f32 {
    fn ortho_tol() -> f64 {
        1e-4
    }
    fn recon_tol() -> f64 {
        1e-4
    }
    fn eps() -> f64 {
        f32::EPSILON as f64
    }
}

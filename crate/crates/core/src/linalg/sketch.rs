use super::{unit_rows, Factorization};
use crate::constants::{ceil_count, ConstantsConfig};
use crate::rng::Stream;
use crate::scalar::Real;
use nalgebra::DMatrix;

/// Number of sketch rows `ceil(c·log(m/δ))`, unless overridden.
pub fn sketch_rows(m: usize, delta: f64, consts: &ConstantsConfig) -> usize {
    consts
        .sketch_rows_override
        .unwrap_or_else(|| ceil_count(consts.sketch_rows * (m as f64 / delta).ln()))
        .max(1)
}

/// A `d×m` matrix of random unit rows, scaled so that
/// `E‖Q·x‖² = ‖x‖²` for every `x ∈ ℝ^m`.
#[derive(Clone, Debug)]
pub struct Sketch<T: Real> {
    q: DMatrix<T>,
}

impl<T: Real> Sketch<T> {
    pub fn new(m: usize, d: usize, stream: &Stream) -> Self {
        let mut q = unit_rows::<T>(d, m, stream);
        q *= T::c((m as f64 / d as f64).sqrt());
        Sketch { q }
    }

    /// `Q·U`, the only part of a factorization the sketch touches.
    pub fn project(&self, f: &Factorization<T>) -> DMatrix<T> {
        &self.q * &f.u
    }

    /// `‖Q·(U₁V₁ᵀ − U₂V₂ᵀ)‖_F` from precomputed projections.
    pub fn distance(&self, qu1: &DMatrix<T>, f1: &Factorization<T>, qu2: &DMatrix<T>, f2: &Factorization<T>) -> f64 {
        let d = self.q.nrows();
        let n = f1.ncols();
        let a = if f1.rank() == 0 { DMatrix::zeros(d, n) } else { qu1 * f1.v.transpose() };
        let b = if f2.rank() == 0 { DMatrix::zeros(d, n) } else { qu2 * f2.v.transpose() };
        (a - b).norm().f()
    }
}

/// Sketched estimate of `‖U₁V₁ᵀ − U₂V₂ᵀ‖_F`.
pub fn sketch_distance<T: Real>(
    f1: &Factorization<T>,
    f2: &Factorization<T>,
    delta: f64,
    stream: &Stream,
    consts: &ConstantsConfig,
) -> f64 {
    assert_eq!(f1.shape(), f2.shape(), "sketch_distance needs equal shapes");
    let m = f1.nrows();
    let sketch = Sketch::<T>::new(m, sketch_rows(m, delta, consts), stream);
    sketch.distance(&sketch.project(f1), f1, &sketch.project(f2), f2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gaussian_matrix;

    #[test]
    fn identical_inputs_give_zero() {
        let mut rng = Stream::new(5).rng();
        let f = Factorization::new(gaussian_matrix::<f64, _>(20, 2, &mut rng), gaussian_matrix(15, 2, &mut rng)).unwrap();
        assert_eq!(sketch_distance(&f, &f, 0.01, &Stream::new(9), &ConstantsConfig::desk()), 0.0);
    }

    #[test]
    fn rank_one_against_zero() {
        let mut rng = Stream::new(6).rng();
        let u = gaussian_matrix::<f64, _>(40, 1, &mut rng);
        let v = gaussian_matrix::<f64, _>(30, 1, &mut rng);
        let truth = u.norm() * v.norm();
        let f = Factorization::new(u, v).unwrap();
        let est = sketch_distance(&f, &Factorization::zeros(40, 30), 0.01, &Stream::new(1), &ConstantsConfig::desk());
        assert!((est - truth).abs() <= 0.1 * truth, "{est} vs {truth}");
    }
}

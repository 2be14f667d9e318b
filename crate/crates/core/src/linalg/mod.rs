//! Dense linear-algebra primitives: entry truncation, the rank factorization
//! type, top-k subspaces, SVDs of factorizations and sketched distances.

mod operator;
mod power;
mod sketch;
mod svd;

pub use operator::{LinearOperator, SparseMatrix};
pub use power::top_k_subspace;
pub use sketch::{sketch_distance, sketch_rows, Sketch};
pub(crate) use svd::keep_above;
pub use svd::{dense_svd, factorization_svd, top_rank_truncation, truncated_svd_drop_small, SvdResult};

use crate::error::{McError, Result};
use crate::rng::Stream;
use crate::scalar::Real;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// Dense matrix type used throughout.
pub type DenseMatrix<T> = DMatrix<T>;

/// `M^{≤τ}`: each entry replaced by the median of `−τ`, `τ` and itself.
pub fn truncate_entries<T: Real>(m: &DMatrix<T>, tau: f64) -> DMatrix<T> {
    if tau.is_infinite() {
        return m.clone();
    }
    let t = T::c(tau);
    m.map(|x| clamp(x, t))
}

#[inline]
pub(crate) fn clamp<T: Real>(x: T, tau: T) -> T {
    if x > tau {
        tau
    } else if x < -tau {
        -tau
    } else {
        x
    }
}

/// Fails on the first non-finite entry.
pub fn check_finite<T: Real>(m: &DMatrix<T>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(McError::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Matrix with i.i.d. standard Gaussian entries.
pub fn gaussian_matrix<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<T> {
    DMatrix::from_fn(rows, cols, |_, _| T::c(rng.sample::<f64, _>(StandardNormal)))
}

/// Thin orthonormal basis (`Q` of a QR decomposition) of the columns of `m`.
pub fn orthonormalize<T: Real>(m: DMatrix<T>) -> DMatrix<T> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return DMatrix::zeros(m.nrows(), m.ncols().min(m.nrows()));
    }
    m.qr().q()
}

/// Largest deviation of `UᵀU` from the identity.
pub fn orthonormality_defect<T: Real>(u: &DMatrix<T>) -> f64 {
    let g = u.tr_mul(u);
    let mut worst = 0.0f64;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)].f() - target).abs());
        }
    }
    worst
}

/// Spectral norm via a dense SVD.
pub fn op_norm<T: Real>(m: &DMatrix<T>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().fold(0.0f64, |a, s| a.max(s.f()))
}

/// A rank-`r` factorization `U·Vᵀ` with `U: m×r` and `V: n×r`.
#[derive(Clone, Debug, PartialEq)]
pub struct Factorization<T: Real> {
    pub u: DMatrix<T>,
    pub v: DMatrix<T>,
}

impl<T: Real> Factorization<T> {
    pub fn new(u: DMatrix<T>, v: DMatrix<T>) -> Result<Self> {
        if u.ncols() != v.ncols() {
            return Err(McError::Shape(format!(
                "factor ranks differ: U has {} columns, V has {}",
                u.ncols(),
                v.ncols()
            )));
        }
        check_finite(&u)?;
        check_finite(&v)?;
        Ok(Factorization { u, v })
    }

    /// The rank-0 factorization of the `m×n` zero matrix.
    pub fn zeros(m: usize, n: usize) -> Self {
        Factorization { u: DMatrix::zeros(m, 0), v: DMatrix::zeros(n, 0) }
    }

    pub fn nrows(&self) -> usize {
        self.u.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.v.nrows()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows(), self.ncols())
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    /// Entry `(i, j)` of `U·Vᵀ`, in `O(r)` time.
    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> T {
        let mut acc = T::zero();
        for k in 0..self.rank() {
            acc += self.u[(i, k)] * self.v[(j, k)];
        }
        acc
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        if self.rank() == 0 {
            return DMatrix::zeros(self.nrows(), self.ncols());
        }
        &self.u * self.v.transpose()
    }

    pub fn transpose(&self) -> Self {
        Factorization { u: self.v.clone(), v: self.u.clone() }
    }

    /// `[U·Vᵀ]_{rows, cols}` as a factorization of the same rank.
    pub fn restrict(&self, rows: &[usize], cols: &[usize]) -> Self {
        Factorization { u: self.u.select_rows(rows.iter()), v: self.v.select_rows(cols.iter()) }
    }

    /// Appends columns to both factors.
    pub fn append(&mut self, du: &DMatrix<T>, dv: &DMatrix<T>) {
        assert_eq!(du.ncols(), dv.ncols());
        let r = self.rank();
        let extra = du.ncols();
        let u = std::mem::replace(&mut self.u, DMatrix::zeros(0, 0)).resize_horizontally(r + extra, T::zero());
        let v = std::mem::replace(&mut self.v, DMatrix::zeros(0, 0)).resize_horizontally(r + extra, T::zero());
        self.u = u;
        self.v = v;
        self.u.columns_mut(r, extra).copy_from(du);
        self.v.columns_mut(r, extra).copy_from(dv);
    }

    /// Same product with `U` replaced by an orthonormal basis (the triangular
    /// QR factor is folded into `V`).
    pub fn with_orthonormal_left(&self) -> Self {
        let (m, n, r) = (self.nrows(), self.ncols(), self.rank());
        if r == 0 || m == 0 {
            return Factorization { u: DMatrix::zeros(m, 0), v: DMatrix::zeros(n, 0) };
        }
        let qr = self.u.clone().qr();
        let q = qr.q();
        let rt = qr.r();
        Factorization { u: q, v: &self.v * rt.transpose() }
    }

    /// SVD of `U·Vᵀ` for arbitrary `U`.
    pub fn svd(&self) -> SvdResult<T> {
        factorization_svd(&self.with_orthonormal_left()).expect("orthonormalized left factor")
    }

    /// `‖U·Vᵀ‖_F` computed from the `r×r` Gram matrices.
    pub fn fro_norm(&self) -> f64 {
        if self.rank() == 0 {
            return 0.0;
        }
        let gu = self.u.tr_mul(&self.u);
        let gv = self.v.tr_mul(&self.v);
        gu.component_mul(&gv).sum().f().max(0.0).sqrt()
    }

    /// Order-independent content hash, used to seed pairwise comparisons.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xCBF2_9CE4_8422_2325 ^ ((self.nrows() as u64) << 32 | self.ncols() as u64);
        for x in self.u.iter().chain(self.v.iter()) {
            h ^= x.f().to_bits();
            h = h.wrapping_mul(0x0100_0000_01B3).rotate_left(17);
        }
        h
    }
}

/// `‖A − B‖_F` for dense matrices.
pub fn fro_dist<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    (a - b).norm().f()
}

/// Dense Gaussian sketch matrix source with reproducible rows.
pub(crate) fn unit_rows<T: Real>(d: usize, m: usize, stream: &Stream) -> DMatrix<T> {
    let mut rng = stream.rng();
    let mut q = gaussian_matrix::<T, _>(d, m, &mut rng);
    for mut row in q.row_iter_mut() {
        let norm = row.norm();
        if norm > T::zero() {
            row /= norm;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn truncation_clamps() {
        let m = dmatrix![3.0, -0.5];
        assert_eq!(truncate_entries(&m, 1.0), dmatrix![1.0, -0.5]);
        assert_eq!(truncate_entries(&m, f64::INFINITY), m);
    }

    #[test]
    fn append_keeps_leading_columns() {
        let mut f = Factorization::new(dmatrix![1.0; 2.0], dmatrix![3.0; 4.0; 5.0]).unwrap();
        f.append(&dmatrix![0.0, 1.0; 1.0, 0.0], &dmatrix![1.0, 1.0; 0.0, 0.0; 2.0, 2.0]);
        assert_eq!(f.rank(), 3);
        assert_eq!(f.u.column(0), dmatrix![1.0; 2.0].column(0));
        assert_eq!(f.v.column(0), dmatrix![3.0; 4.0; 5.0].column(0));
    }

    #[test]
    fn fro_norm_matches_dense() {
        let f = Factorization::<f64>::new(dmatrix![1.0, 2.0; 0.0, 1.0; 3.0, -1.0], dmatrix![1.0, 0.5; -2.0, 1.0]).unwrap();
        assert!((f.fro_norm() - f.to_dense().norm()).abs() < 1e-12);
    }

    #[test]
    fn rank_zero_is_zero_matrix() {
        let f = Factorization::<f64>::zeros(3, 4);
        assert_eq!(f.to_dense(), DMatrix::zeros(3, 4));
        assert_eq!(f.entry(2, 3), 0.0);
        assert_eq!(f.fro_norm(), 0.0);
    }
}

use super::{orthonormality_defect, Factorization};
use crate::error::{McError, Result};
use crate::scalar::Real;
use nalgebra::{DMatrix, DVector};

/// Thin SVD `left·diag(singular)·rightᵀ` with singular values nonincreasing.
#[derive(Clone, Debug)]
pub struct SvdResult<T: Real> {
    pub left: DMatrix<T>,
    pub singular: Vec<T>,
    pub right: DMatrix<T>,
}

impl<T: Real> SvdResult<T> {
    pub fn rank(&self) -> usize {
        self.singular.len()
    }

    /// Keeps the leading `k` triplets.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.rank());
        SvdResult {
            left: self.left.columns(0, k).into_owned(),
            singular: self.singular[..k].to_vec(),
            right: self.right.columns(0, k).into_owned(),
        }
    }

    /// `(left·Σ, right)`.
    pub fn to_factorization(&self) -> Factorization<T> {
        let mut u = self.left.clone();
        for (k, s) in self.singular.iter().enumerate() {
            u.column_mut(k).scale_mut(*s);
        }
        Factorization { u, v: self.right.clone() }
    }

    pub fn reconstruct(&self) -> DMatrix<T> {
        self.to_factorization().to_dense()
    }
}

/// Dense thin SVD, sorted; ties keep the solver's order.
pub fn dense_svd<T: Real>(m: &DMatrix<T>) -> SvdResult<T> {
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return SvdResult {
            left: DMatrix::zeros(m.nrows(), 0),
            singular: vec![],
            right: DMatrix::zeros(m.ncols(), 0),
        };
    }
    let svd = m.clone().svd_unordered(true, true);
    let u = svd.u.expect("left vectors requested");
    let vt = svd.v_t.expect("right vectors requested");
    sorted(u, svd.singular_values, vt.transpose())
}

fn sorted<T: Real>(u: DMatrix<T>, s: DVector<T>, v: DMatrix<T>) -> SvdResult<T> {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).expect("finite singular values"));
    SvdResult {
        left: u.select_columns(order.iter()),
        singular: order.iter().map(|&i| s[i].max(T::zero())).collect(),
        right: v.select_columns(order.iter()),
    }
}

/// SVD of `U·Vᵀ` when `U` has orthonormal columns, in `O((m+n)r²)` time.
///
/// `V = Q_V·R_V`, so `U·Vᵀ = U·R_Vᵀ·Q_Vᵀ` and only the small `r×r` core
/// needs a dense SVD.
pub fn factorization_svd<T: Real>(f: &Factorization<T>) -> Result<SvdResult<T>> {
    let (m, n, r) = (f.nrows(), f.ncols(), f.rank());
    let deviation = orthonormality_defect(&f.u);
    if deviation > T::ortho_tol() {
        return Err(McError::NotOrthonormal { deviation });
    }
    if r == 0 || n == 0 || m == 0 {
        return Ok(SvdResult {
            left: DMatrix::zeros(m, 0),
            singular: vec![],
            right: DMatrix::zeros(n, 0),
        });
    }
    let qr = f.v.clone().qr();
    let qv = qr.q();
    let core = qr.r().transpose();
    let small = dense_svd(&core);
    let left = &f.u * &small.left;
    let right = &qv * &small.right;
    Ok(SvdResult { left, singular: small.singular, right })
}

/// SVD of a dense matrix restricted to singular values `≥ threshold`.
pub fn truncated_svd_drop_small<T: Real>(m: &DMatrix<T>, threshold: f64) -> (Factorization<T>, SvdResult<T>) {
    keep_above(dense_svd(m), threshold)
}

pub(crate) fn keep_above<T: Real>(svd: SvdResult<T>, threshold: f64) -> (Factorization<T>, SvdResult<T>) {
    let keep = svd.singular.iter().take_while(|s| s.f() >= threshold).count();
    let kept = svd.truncated(keep);
    (kept.to_factorization(), kept)
}

/// Best rank-`r` approximation of `U·Vᵀ` as a factorization.
pub fn top_rank_truncation<T: Real>(f: &Factorization<T>, r: usize) -> Factorization<T> {
    f.svd().truncated(r).to_factorization()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn axis_aligned_rank_one() {
        let u = DMatrix::<f64>::from_fn(4, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let v = DMatrix::<f64>::from_fn(3, 1, |i, _| if i == 0 { 2.0 } else { 0.0 });
        let s = factorization_svd(&Factorization::new(u, v).unwrap()).unwrap();
        assert_eq!(s.singular.len(), 1);
        assert!((s.singular[0] - 2.0).abs() < 1e-15);
        assert!((s.left[(0, 0)].abs() - 1.0).abs() < 1e-15);
        assert!((s.right[(0, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_right_factor_gives_zero_spectrum() {
        let u = DMatrix::from_fn(5, 2, |i, j| if i == j { 1.0 } else { 0.0 });
        let s = factorization_svd(&Factorization::new(u, DMatrix::zeros(4, 2)).unwrap()).unwrap();
        assert!(s.singular.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_non_orthonormal_left() {
        let f = Factorization::new(dmatrix![2.0; 0.0], dmatrix![1.0; 1.0]).unwrap();
        assert!(matches!(factorization_svd(&f), Err(McError::NotOrthonormal { .. })));
    }

    #[test]
    fn drop_small_keeps_clean_gap() {
        let (f, s) = truncated_svd_drop_small(&dmatrix![5.0, 0.0; 0.0, 1.0], 2.0);
        assert_eq!(s.rank(), 1);
        let d = f.to_dense();
        assert!((d - dmatrix![5.0, 0.0; 0.0, 0.0]).norm() < 1e-12);
    }
}

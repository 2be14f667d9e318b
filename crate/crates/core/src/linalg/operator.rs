use super::Factorization;
use crate::scalar::Real;
use nalgebra::DMatrix;

/// Anything that can multiply a block of vectors from the left, both as `A`
/// and as `Aᵀ`.
pub trait LinearOperator<T: Real> {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `A·x` for `x: ncols×b`.
    fn apply(&self, x: &DMatrix<T>) -> DMatrix<T>;
    /// `Aᵀ·y` for `y: nrows×b`.
    fn apply_t(&self, y: &DMatrix<T>) -> DMatrix<T>;
}

impl<T: Real> LinearOperator<T> for DMatrix<T> {
    fn nrows(&self) -> usize {
        self.nrows()
    }
    fn ncols(&self) -> usize {
        self.ncols()
    }
    fn apply(&self, x: &DMatrix<T>) -> DMatrix<T> {
        self * x
    }
    fn apply_t(&self, y: &DMatrix<T>) -> DMatrix<T> {
        self.tr_mul(y)
    }
}

impl<T: Real> LinearOperator<T> for Factorization<T> {
    fn nrows(&self) -> usize {
        self.u.nrows()
    }
    fn ncols(&self) -> usize {
        self.v.nrows()
    }
    fn apply(&self, x: &DMatrix<T>) -> DMatrix<T> {
        &self.u * self.v.tr_mul(x)
    }
    fn apply_t(&self, y: &DMatrix<T>) -> DMatrix<T> {
        &self.v * self.u.tr_mul(y)
    }
}

/// Compressed sparse rows; holds sampled matrices such as `O_q(D)`.
#[derive(Clone, Debug)]
pub struct SparseMatrix<T: Real> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> SparseMatrix<T> {
    /// Builds from triplets; entries with equal positions are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, T)>) -> Self {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut vals: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) outside {nrows}×{ncols}");
            if last == Some((i, j)) {
                *vals.last_mut().expect("previous entry") += v;
                continue;
            }
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            vals.push(v);
            last = Some((i, j));
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix { nrows, ncols, row_ptr, col_idx, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut out = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[(i, self.col_idx[k])] = self.vals[k];
            }
        }
        out
    }

    pub fn scale(&mut self, c: T) {
        for v in &mut self.vals {
            *v *= c;
        }
    }
}

impl<T: Real> LinearOperator<T> for SparseMatrix<T> {
    fn nrows(&self) -> usize {
        self.nrows
    }
    fn ncols(&self) -> usize {
        self.ncols
    }
    fn apply(&self, x: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(x.nrows(), self.ncols);
        let b = x.ncols();
        let mut out = DMatrix::zeros(self.nrows, b);
        for c in 0..b {
            let xc = x.column(c);
            let mut oc = out.column_mut(c);
            for i in 0..self.nrows {
                let mut acc = T::zero();
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.vals[k] * xc[self.col_idx[k]];
                }
                oc[i] = acc;
            }
        }
        out
    }
    fn apply_t(&self, y: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(y.nrows(), self.nrows);
        let b = y.ncols();
        let mut out = DMatrix::zeros(self.ncols, b);
        for c in 0..b {
            let yc = y.column(c);
            let mut oc = out.column_mut(c);
            for i in 0..self.nrows {
                let yi = yc[i];
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    oc[self.col_idx[k]] += self.vals[k] * yi;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn sparse_products_match_dense() {
        let s = SparseMatrix::from_triplets(3, 2, vec![(2, 1, 4.0), (0, 0, 1.0), (1, 1, -2.0), (2, 1, 1.0)]);
        let d = s.to_dense();
        assert_eq!(d, dmatrix![1.0, 0.0; 0.0, -2.0; 0.0, 5.0]);
        let x = dmatrix![1.0, 2.0; 3.0, -1.0];
        assert_eq!(s.apply(&x), &d * &x);
        let y = dmatrix![1.0; 2.0; 3.0];
        assert_eq!(s.apply_t(&y), d.tr_mul(&y));
    }
}

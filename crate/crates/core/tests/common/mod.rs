#![allow(dead_code)]

use matcomp::linalg::{gaussian_matrix, orthonormalize};
use matcomp::{Factorization, Stream};
use nalgebra::DMatrix;
use rand::Rng;

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    gaussian_matrix(rows, cols, &mut Stream::new(seed).rng())
}

pub fn random_factorization(m: usize, n: usize, r: usize, seed: u64) -> Factorization<f64> {
    let mut rng = Stream::new(seed).rng();
    Factorization::new(gaussian_matrix(m, r, &mut rng), gaussian_matrix(n, r, &mut rng)).unwrap()
}

/// Random rank-`r` matrix with singular values drawn from `[lo, hi]`.
pub fn random_rank<R: Rng>(m: usize, n: usize, r: usize, lo: f64, hi: f64, rng: &mut R) -> DMatrix<f64> {
    let u = orthonormalize(gaussian_matrix::<f64, _>(m, r, rng));
    let v = orthonormalize(gaussian_matrix::<f64, _>(n, r, rng));
    let s = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(r, |_, _| rng.gen_range(lo..=hi)));
    u * s * v.transpose()
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn nuclear_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).iter().sum()
}

mod common;

use common::{gaussian, nuclear_norm, random_factorization, random_rank, singular_values};
use matcomp::linalg::{
    dense_svd, factorization_svd, orthonormality_defect, sketch_distance, top_k_subspace, top_rank_truncation,
    truncate_entries, truncated_svd_drop_small,
};
use matcomp::{ConstantsConfig, Factorization, Stream};
use nalgebra::{dmatrix, DMatrix};
use proptest::prelude::*;

fn median3(a: f64, b: f64, c: f64) -> f64 {
    let mut v = [a, b, c];
    v.sort_by(f64::total_cmp);
    v[1]
}

#[test]
fn truncation_of_a_row() {
    let m = dmatrix![3.0, -0.5];
    assert_eq!(truncate_entries(&m, 1.0), dmatrix![1.0, -0.5]);
}

#[test]
fn infinite_threshold_is_identity() {
    let m = gaussian(4, 5, 1) * 1e6;
    assert_eq!(truncate_entries(&m, f64::INFINITY), m);
}

#[test]
fn truncation_agrees_with_scalar_median() {
    let m = gaussian(3, 3, 2);
    let t = truncate_entries(&m, 0.7);
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(t[(i, j)], median3(-0.7, 0.7, m[(i, j)]));
        }
    }
}

#[test]
fn power_residual_against_dense_svd() {
    let consts = ConstantsConfig::desk();
    let m = gaussian(50, 40, 3);
    let u = top_k_subspace(&m, 5, 0.1, 0.01, &Stream::new(4), &consts).unwrap();
    assert!(u.ncols() <= 5);
    let resid = &m - &u * (u.transpose() * &m);
    let s = singular_values(&m);
    assert!(common::op_norm(&resid) <= 1.1 * s[5]);
}

#[test]
fn factorization_svd_matches_dense_rank_three() {
    let f = random_factorization(40, 30, 3, 5).with_orthonormal_left();
    let s = factorization_svd(&f).unwrap();
    let dense = singular_values(&f.to_dense());
    for k in 0..3 {
        assert!((s.singular[k] - dense[k]).abs() <= 1e-10, "{} vs {}", s.singular[k], dense[k]);
    }
}

#[test]
fn drop_small_without_threshold_reconstructs() {
    let m = gaussian(12, 9, 6);
    let (f, svd) = truncated_svd_drop_small(&m, 0.0);
    assert_eq!(svd.rank(), 9);
    assert!((f.to_dense() - &m).norm() <= 1e-10);
}

#[test]
fn drop_small_on_diagonal() {
    let m = DMatrix::from_diagonal(&nalgebra::dvector![5.0, 1.0]);
    let (f, svd) = truncated_svd_drop_small(&m, 2.0);
    assert_eq!(svd.rank(), 1);
    assert!((f.to_dense() - dmatrix![5.0, 0.0; 0.0, 0.0]).norm() <= 1e-12);
}

#[test]
fn drop_small_with_everything_below_threshold_is_empty() {
    let (f, svd) = truncated_svd_drop_small(&gaussian(5, 5, 7), 1e6);
    assert_eq!((f.rank(), svd.rank()), (0, 0));
    assert_eq!(f.to_dense(), DMatrix::zeros(5, 5));
}

#[test]
fn perturbed_low_rank_keeps_at_most_twice_the_rank() {
    let mut rng = Stream::new(8).rng();
    for trial in 0..20 {
        let r = 1 + trial % 3;
        let l = random_rank(30, 25, r, 0.5, 4.0, &mut rng);
        let e = gaussian(30, 25, 100 + trial as u64);
        let delta = 0.3;
        let e = &e * (delta / e.norm());
        let theta = 0.2 + 0.6 * (trial as f64 / 20.0);
        let (_, svd) = truncated_svd_drop_small(&(l + e), delta / theta);
        assert!(svd.rank() <= 2 * r);
    }
}

#[test]
fn sketch_within_ten_percent_on_random_pairs() {
    let consts = ConstantsConfig::desk();
    let mut hits = 0;
    for seed in 0..30 {
        let f1 = random_factorization(60, 60, 4, 2 * seed);
        let f2 = random_factorization(60, 60, 4, 2 * seed + 1);
        let truth = (f1.to_dense() - f2.to_dense()).norm();
        let est = sketch_distance(&f1, &f2, 0.01, &Stream::new(seed).named("sketch"), &consts);
        hits += ((est - truth).abs() <= 0.1 * truth) as usize;
    }
    assert_eq!(hits, 30);
}

#[test]
fn top_rank_truncation_is_best_approximation() {
    let f = random_factorization(20, 15, 6, 9);
    let t = top_rank_truncation(&f, 2);
    let s = singular_values(&f.to_dense());
    let err = (t.to_dense() - f.to_dense()).norm();
    let tail: f64 = s[2..].iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!((err - tail).abs() <= 1e-9 * (1.0 + tail));
}

#[test]
fn small_maximal_set_example() {
    let m: DMatrix<f64> = dmatrix![1.0, 2.0; 2.0, 4.0];
    assert!((m[(0, 1)].abs() + m[(1, 0)].abs()) <= nuclear_norm(&m) + 1e-12);
}

fn arb_matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-10.0f64..10.0, rows * cols).prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

fn arb_shape() -> impl Strategy<Value = (usize, usize)> {
    (1usize..9, 1usize..9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn truncation_is_idempotent((m, tau) in arb_shape().prop_flat_map(|(r, c)| (arb_matrix(r, c), 0.0f64..5.0))) {
        let once = truncate_entries(&m, tau);
        prop_assert_eq!(truncate_entries(&once, tau), once);
    }

    #[test]
    fn power_output_is_orthonormal(seed in 0u64..1000, k in 1usize..6) {
        let m = gaussian(30, 20, seed);
        let u = top_k_subspace(&m, k, 0.1, 0.01, &Stream::new(seed), &ConstantsConfig::desk()).unwrap();
        prop_assert!(u.ncols() <= k);
        prop_assert!(orthonormality_defect(&u) <= 1e-8);
    }

    #[test]
    fn factorization_svd_reconstructs(seed in 0u64..1000, r in 1usize..5) {
        let f = random_factorization(25, 18, r, seed).with_orthonormal_left();
        let s = factorization_svd(&f).unwrap();
        let dense = f.to_dense();
        prop_assert!((s.reconstruct() - &dense).norm() <= 1e-8 * dense.norm());
        prop_assert!(s.singular.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(orthonormality_defect(&s.left) <= 1e-8);
        prop_assert!(orthonormality_defect(&s.right) <= 1e-8);
    }

    #[test]
    fn dense_svd_reconstructs(m in arb_shape().prop_flat_map(|(r, c)| arb_matrix(r, c))) {
        let s = dense_svd(&m);
        prop_assert!((s.reconstruct() - &m).norm() <= 1e-9 * (1.0 + m.norm()));
    }

    #[test]
    fn sketch_is_symmetric(seed in 0u64..1000) {
        let consts = ConstantsConfig::desk();
        let f1 = random_factorization(20, 12, 2, seed);
        let f2 = random_factorization(20, 12, 3, seed + 7);
        let s = Stream::new(seed);
        let a = sketch_distance(&f1, &f2, 0.05, &s, &consts);
        let b = sketch_distance(&f2, &f1, 0.05, &s, &consts);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
    }

    #[test]
    fn appending_preserves_leading_columns(seed in 0u64..1000) {
        let mut f = random_factorization(10, 8, 2, seed);
        let before = f.clone();
        f.append(&gaussian(10, 3, seed + 1), &gaussian(8, 3, seed + 2));
        prop_assert_eq!(f.rank(), 5);
        prop_assert_eq!(f.u.columns(0, 2).into_owned(), before.u);
        prop_assert_eq!(f.v.columns(0, 2).into_owned(), before.v);
    }
}

#[test]
fn generic_scalar_f32_path() {
    let mut rng = Stream::new(11).rng();
    let u: DMatrix<f32> = matcomp::linalg::gaussian_matrix(10, 2, &mut rng);
    let v: DMatrix<f32> = matcomp::linalg::gaussian_matrix(7, 2, &mut rng);
    let f: Factorization<f32> = Factorization::new(u, v).unwrap();
    let s = factorization_svd(&f.with_orthonormal_left()).unwrap();
    let err = (s.reconstruct() - f.to_dense()).norm();
    assert!(err <= 1e-4 * f.to_dense().norm());
}

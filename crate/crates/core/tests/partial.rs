mod common;

use common::{gaussian, nuclear_norm, random_rank};
use matcomp::linalg::{truncate_entries, Factorization};
use matcomp::observe::{sample_oracle, FullOracle, IndexSubsets, ReuseOracle};
use matcomp::partial::{descent, filter, partial_completion, DescentParams, FilterParams, PmcParams};
use matcomp::synth::{random_standard_instance, submatrix_closeness, ClosenessMode, InstanceOptions};
use matcomp::{ConstantsConfig, Stream};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::Rng;

fn restricted(m: &DMatrix<f64>, s: &IndexSubsets) -> DMatrix<f64> {
    m.select_rows(s.rows.iter()).select_columns(s.cols.iter())
}

fn filter_params(gamma: f64, tau: f64, delta: f64, p: f64) -> FilterParams {
    FilterParams { tau, rho: 0.01, delta, gamma, gamma_add: gamma, p, fail_prob: 0.1 }
}

#[test]
fn filter_with_zero_difference_meets_size_bounds() {
    let consts = ConstantsConfig::desk();
    let f = common::random_factorization(100, 100, 2, 1);
    let mut oracle = FullOracle::new(f.to_dense(), Stream::new(2));
    let params = filter_params(0.01, 10.0, 1.0, 0.5);
    let kept = filter(&mut oracle, &f, &IndexSubsets::full(100, 100), &params, &consts).unwrap();
    let gamma_drop = consts.filter_final_drop * params.gamma * 100f64.ln();
    assert!(kept.rows.len() as f64 >= 100.0 - gamma_drop * 100.0);
    assert!(kept.cols.len() as f64 >= (1.0 - gamma_drop) * 100.0);
    let diff = truncate_entries(&(f.to_dense() - f.to_dense()), params.tau);
    assert_eq!(restricted(&diff, &kept).norm(), 0.0);
}

#[test]
fn filter_drops_a_planted_heavy_row() {
    let consts = ConstantsConfig::desk();
    let rho = 0.01;
    let mut d = DMatrix::zeros(100, 100);
    for j in 0..100 {
        d[(37, j)] = 100.0 * rho / 10.0;
    }
    let mut oracle = FullOracle::new(d, Stream::new(3));
    let params = FilterParams { rho, ..filter_params(0.01, 10.0, 1.0, 1.0) };
    let kept = filter(&mut oracle, &Factorization::zeros(100, 100), &IndexSubsets::full(100, 100), &params, &consts).unwrap();
    assert!(!kept.rows.contains(&37));
}

#[test]
fn filter_keeps_truncated_residual_within_twice_delta() {
    let consts = ConstantsConfig::desk();
    let (m, n, delta, gamma) = (120, 120, 1.0, 0.01);
    let mut ok = 0;
    for seed in 0..100u64 {
        let mut rng = Stream::new(seed).rng();
        let truth = random_rank(m, n, 2, 1.0, 5.0, &mut rng);
        let bad = ((gamma * n as f64).ceil()) as usize;
        let dense = gaussian(m, n, seed + 1000);
        let mut diff = &dense * (0.5 * delta / dense.norm());
        for i in sample(&mut rng, m, bad) {
            for j in 0..n {
                diff[(i, j)] += rng.gen_range(-5.0..5.0);
            }
        }
        let f = Factorization::new(truth.clone() + &diff, DMatrix::identity(n, n)).unwrap();
        let mut oracle = FullOracle::new(truth.clone(), Stream::new(seed).named("oracle"));
        let params = filter_params(gamma, 3.0, delta, 0.3);
        let kept = filter(&mut oracle, &f, &IndexSubsets::full(m, n), &params, &consts).unwrap();
        let resid = restricted(&truncate_entries(&diff, params.tau), &kept).norm();
        ok += (resid <= 2.0 * delta) as usize;
    }
    assert!(ok >= 95, "{ok}/100");
}

fn descent_params(delta: f64, ell: f64, r_star: usize) -> DescentParams {
    DescentParams { delta, gamma: 0.0, gamma_add: 1e-6, ell, fail_prob: 0.01, r_star }
}

#[test]
fn descent_appends_and_respects_the_rank_contract() {
    let consts = ConstantsConfig::desk();
    let inst = random_standard_instance::<f64>(80, 80, 3, 0.0, &InstanceOptions::default(), 4).unwrap();
    let start = common::random_factorization(80, 80, 2, 5);
    let mut oracle = FullOracle::new(inst.observed_matrix(), Stream::new(6));
    let out = descent(&mut oracle, &start, &IndexSubsets::full(80, 80), &descent_params(2.0, 2.0, 3), &consts, &Stream::new(7))
        .unwrap();
    let f = out.factorization;
    assert!(f.rank() <= 3 * (2 + 3));
    assert_eq!(f.u.columns(0, 2).into_owned(), start.u);
    assert_eq!(f.v.columns(0, 2).into_owned(), start.v);
}

#[test]
fn noiseless_full_reveal_rank_one_step() {
    let consts = ConstantsConfig::desk().with_overrides(["descent_q=1e9"]).unwrap();
    let inst = random_standard_instance::<f64>(64, 64, 1, 0.0, &InstanceOptions::default(), 8).unwrap();
    let truth = inst.m_star.to_dense();
    let mut oracle = FullOracle::new(truth.clone(), Stream::new(9));
    let (delta, ell) = (1.0, 2.0);
    let params = DescentParams { gamma_add: 0.01, ..descent_params(delta, ell, 1) };
    let out = descent(&mut oracle, &Factorization::zeros(64, 64), &IndexSubsets::full(64, 64), &params, &consts, &Stream::new(1))
        .unwrap();
    let a = restricted(&out.factorization.to_dense(), &out.subsets);
    let b = restricted(&truth, &out.subsets);
    let (d, _) = submatrix_closeness(&a, &b, params.gamma + params.gamma_add, ClosenessMode::Greedy).unwrap();
    assert!(d <= delta / ell, "{d}");
}

#[test]
fn descent_makes_progress_on_regular_instances() {
    let consts = ConstantsConfig::desk();
    let (n, r_star, ell) = (128, 3, 2.0);
    let mut ok = 0;
    for seed in 0..100u64 {
        let inst = random_standard_instance::<f64>(n, n, r_star, 0.0, &InstanceOptions::default(), seed).unwrap();
        let truth = inst.m_star.to_dense();
        let st = Stream::new(seed);
        let pool = sample_oracle(&truth, 0.5, &st.named("pool"));
        let mut oracle = ReuseOracle::new(pool, st.named("oracle"));
        let delta = (r_star as f64).sqrt();
        let params = descent_params(delta, ell, r_star);
        let out = descent(&mut oracle, &Factorization::zeros(n, n), &IndexSubsets::full(n, n), &params, &consts, &st).unwrap();
        let a = restricted(&out.factorization.to_dense(), &out.subsets);
        let b = restricted(&truth, &out.subsets);
        let (d, _) = submatrix_closeness(&a, &b, params.gamma + params.gamma_add, ClosenessMode::Greedy).unwrap();
        ok += (d <= delta / ell) as usize;
    }
    assert!(ok >= 90, "{ok}/100");
}

#[test]
fn partial_completion_loop_guard() {
    let consts = ConstantsConfig::desk();
    let inst = random_standard_instance::<f64>(40, 40, 2, 0.0, &InstanceOptions::default(), 10).unwrap();
    let mut oracle = FullOracle::new(inst.observed_matrix(), Stream::new(1));
    let params = PmcParams { r_star: 2, sigma: 1.0, delta: 1.0, alpha: 0.1, fail_prob: 0.1, ell: 2.0 };
    let (f, scope, report) = partial_completion(&mut oracle, &params, &consts, &Stream::new(2)).unwrap();
    assert_eq!(f.to_dense(), DMatrix::zeros(40, 40));
    assert_eq!(scope, IndexSubsets::full(40, 40));
    assert_eq!(report.iterations, 0);
}

#[test]
fn partial_completion_noiseless_with_ample_sampling() {
    let consts = ConstantsConfig::desk();
    let (n, alpha) = (256, 0.01);
    let inst = random_standard_instance::<f64>(n, n, 4, 0.0, &InstanceOptions::default(), 11).unwrap();
    let truth = inst.m_star.to_dense();
    let mut oracle = FullOracle::new(truth.clone(), Stream::new(12));
    let params = PmcParams { r_star: 4, sigma: 1.0, delta: 1e-9, alpha, fail_prob: 0.1, ell: std::f64::consts::E };
    let (f, scope, _) = partial_completion(&mut oracle, &params, &consts, &Stream::new(13)).unwrap();
    let a = restricted(&f.to_dense(), &scope);
    let b = restricted(&truth, &scope);
    let (d, _) = submatrix_closeness(&a, &b, alpha, ClosenessMode::Greedy).unwrap();
    assert!(d <= 1e-3 * b.norm(), "{d}");
}

/// Greedy maximal set of large entries with distinct rows and columns.
fn maximal_large_matching(d: &DMatrix<f64>, rows: &[usize], cols: &[usize], tau: f64) -> Vec<(usize, usize)> {
    let mut used_r = vec![false; d.nrows()];
    let mut used_c = vec![false; d.ncols()];
    let mut out = Vec::new();
    for &i in rows {
        for &j in cols {
            if !used_r[i] && !used_c[j] && d[(i, j)].abs() > tau {
                used_r[i] = true;
                used_c[j] = true;
                out.push((i, j));
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn large_entries_are_covered_by_few_lines(seed in 0u64..10_000, r_star in 1usize..3, extra in 1usize..3, tau in 0.05f64..1.0) {
        let (m, n, gamma) = (30, 24, 0.1);
        let mut rng = Stream::new(seed).rng();
        let truth = random_rank(m, n, r_star, 0.5, 3.0, &mut rng);
        let excluded = ((gamma * n as f64).floor()) as usize;
        let bad_rows: Vec<usize> = sample(&mut rng, m, excluded).into_vec();
        let bad_cols: Vec<usize> = sample(&mut rng, n, excluded).into_vec();
        let mut spike_u = DMatrix::zeros(m, 1);
        for &i in &bad_rows {
            spike_u[(i, 0)] = rng.gen_range(-20.0..20.0);
        }
        let mut perturbation = spike_u * gaussian(1, n, seed + 1);
        if extra > 1 {
            perturbation += random_rank(m, n, extra - 1, 0.1, 2.0, &mut rng);
        }
        let m_iter = &truth + &perturbation;
        let r = r_star + extra;
        let kept_rows: Vec<usize> = (0..m).filter(|i| !bad_rows.contains(i)).collect();
        let kept_cols: Vec<usize> = (0..n).filter(|j| !bad_cols.contains(j)).collect();
        let diff = &m_iter - &truth;
        let core = diff.select_rows(kept_rows.iter()).select_columns(kept_cols.iter());
        let delta = core.norm();
        let matching = maximal_large_matching(&diff, &kept_rows, &kept_cols, tau);
        prop_assert!(matching.len() as f64 <= delta * ((r + r_star) as f64).sqrt() / tau + 1e-9);
        prop_assert!((matching.len() as f64) * tau <= nuclear_norm(&core) + 1e-9);
        let rows: Vec<usize> = kept_rows.iter().copied().filter(|i| !matching.iter().any(|p| p.0 == *i)).collect();
        let cols: Vec<usize> = kept_cols.iter().copied().filter(|j| !matching.iter().any(|p| p.1 == *j)).collect();
        prop_assert!(rows.iter().all(|&i| cols.iter().all(|&j| diff[(i, j)].abs() <= tau)));
        prop_assert!((m - rows.len()) as f64 <= gamma * n as f64 + delta * ((r + r_star) as f64).sqrt() / tau);
        prop_assert!((n - cols.len()) as f64 <= gamma * n as f64 + delta * ((r + r_star) as f64).sqrt() / tau);
    }

    #[test]
    fn filter_stays_inside_its_scope(seed in 0u64..1000, drop_r in 0usize..10, drop_c in 0usize..10) {
        let consts = ConstantsConfig::desk();
        let f = common::random_factorization(60, 60, 2, seed);
        let scope = IndexSubsets::new((drop_r..60).collect(), (0..60 - drop_c).collect(), (60, 60)).unwrap();
        let mut oracle = FullOracle::new(gaussian(60, 60, seed + 1), Stream::new(seed));
        let kept = filter(&mut oracle, &f, &scope, &filter_params(0.01, 1.0, 0.5, 0.5), &consts).unwrap();
        prop_assert!(scope.contains(&kept));
    }
}

mod common;

use common::op_norm;
use matcomp::driver::{complete_unknown_noise, estimate_op_norm, matrix_completion, McParams};
use matcomp::observe::{sample_oracle, FullOracle, ReuseOracle};
use matcomp::synth::{random_standard_instance, InstanceOptions};
use matcomp::{ConstantsConfig, McError, Stream};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn params(r_star: usize, delta: f64) -> McParams {
    McParams { r_star, alpha: 0.1, beta: 1.0 / 3.0, mu: 10.0, delta, fail_prob: 0.1 }
}

#[test]
fn op_norm_of_zero_is_zero() {
    let mut oracle = FullOracle::new(DMatrix::<f64>::zeros(40, 30), Stream::new(1));
    let v = estimate_op_norm(&mut oracle, 0.3, 0.1, 0.5, &ConstantsConfig::desk()).unwrap();
    assert_eq!(v, 0.0);
}

#[test]
fn op_norm_at_full_rate_is_the_scaled_frobenius_norm() {
    let inst = random_standard_instance::<f64>(60, 50, 3, 0.0, &InstanceOptions::default(), 2).unwrap();
    let m = inst.m_star.to_dense();
    let beta = 0.5;
    let mut oracle = FullOracle::new(m.clone(), Stream::new(2));
    let v = estimate_op_norm(&mut oracle, 1.0, 0.1, beta, &ConstantsConfig::desk()).unwrap();
    let expected = (32.0 / (beta * beta)).sqrt() * m.norm();
    assert!((v - expected).abs() <= 1e-12 * expected);
    assert!(v >= op_norm(&m));
}

#[test]
fn op_norm_sandwich_on_random_instances() {
    let consts = ConstantsConfig::desk();
    let n = 128;
    let mut hits = 0;
    for seed in 0..100u64 {
        let inst = random_standard_instance::<f64>(n, n, 4, 0.0, &InstanceOptions::default(), seed).unwrap();
        let m = inst.m_star.to_dense();
        let truth = op_norm(&m);
        let mut oracle = FullOracle::new(m, Stream::new(seed).named("oracle"));
        let v = estimate_op_norm(&mut oracle, 0.5, 0.1, 0.5, &consts).unwrap();
        hits += (truth <= v && v <= 2.0 * (n as f64).sqrt() * truth) as usize;
    }
    assert!(hits >= 95, "{hits}/100");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn op_norm_is_scale_equivariant(seed in 0u64..1000, c in 0.01f64..100.0) {
        let m = common::gaussian(30, 20, seed);
        let consts = ConstantsConfig::desk();
        let a = estimate_op_norm(&mut FullOracle::new(m.clone(), Stream::new(seed)), 0.4, 0.2, 0.5, &consts).unwrap();
        let b = estimate_op_norm(&mut FullOracle::new(m * c, Stream::new(seed)), 0.4, 0.2, 0.5, &consts).unwrap();
        prop_assert!((b - c * a).abs() <= 1e-12 * c * a);
    }
}

#[test]
fn loop_is_skipped_when_the_noise_bound_is_large() {
    let consts = ConstantsConfig::desk();
    let inst = random_standard_instance::<f64>(64, 64, 2, 0.0, &InstanceOptions::default(), 3).unwrap();
    let mut oracle = FullOracle::new(inst.observed_matrix(), Stream::new(3));
    let (f, report) = matrix_completion(&mut oracle, &params(2, 1e6), &consts, &Stream::new(4)).unwrap();
    assert_eq!(report.loop_iterations, 0);
    assert!(report.blocks.is_empty());
    assert_eq!(report.fix_invocations, 1);
    assert!(f.rank() <= 2);
}

#[test]
fn noiseless_completion_and_block_trace() {
    let consts = ConstantsConfig::desk();
    for seed in 0..3u64 {
        let inst = random_standard_instance::<f64>(128, 128, 2, 0.0, &InstanceOptions::default(), seed).unwrap();
        let stream = Stream::new(seed);
        let pool = sample_oracle(&inst.observed_matrix(), 0.5, &stream.named("pool"));
        let mut oracle = ReuseOracle::new(pool, stream.named("oracle"));
        let (f, report) = matrix_completion(&mut oracle, &params(2, 1e-9), &consts, &stream.named("run")).unwrap();
        assert_eq!(report.output_rank, 2);
        assert!(inst.relative_error(&f) <= 1e-6, "seed {seed}: {}", inst.relative_error(&f));
        assert!(!report.blocks.is_empty());
        let gain = report.ell.powi(report.k as i32) / report.fix_blowup;
        assert!(gain >= 2.0);
        for b in &report.blocks {
            assert!(b.delta_tilde_end <= b.delta_tilde_start / 2.0 * (1.0 + 1e-12));
            assert!((b.delta_tilde_end * gain - b.delta_tilde_start).abs() <= 1e-9 * b.delta_tilde_start);
        }
    }
}

#[test]
fn wide_inputs_run_on_the_transpose() {
    let consts = ConstantsConfig::desk();
    let inst = random_standard_instance::<f64>(64, 96, 2, 0.0, &InstanceOptions::default(), 5).unwrap();
    let mut oracle = FullOracle::new(inst.observed_matrix(), Stream::new(5));
    let (f, report) = matrix_completion(&mut oracle, &params(2, 1e6), &consts, &Stream::new(6)).unwrap();
    assert!(report.transposed);
    assert_eq!(f.shape(), (64, 96));
}

#[test]
fn invalid_parameters_are_rejected() {
    let consts = ConstantsConfig::desk();
    let mut oracle = FullOracle::new(DMatrix::<f64>::zeros(10, 10), Stream::new(1));
    let bad = McParams { alpha: 1.5, ..params(1, 1.0) };
    assert!(matches!(matrix_completion(&mut oracle, &bad, &consts, &Stream::new(1)), Err(McError::Precondition(_))));
}

#[test]
fn unknown_noise_stops_at_a_large_minimum() {
    let consts = ConstantsConfig::desk();
    let inst = random_standard_instance::<f64>(96, 96, 2, 0.01, &InstanceOptions::default(), 7).unwrap();
    let stream = Stream::new(7);
    let pool = sample_oracle(&inst.observed_matrix(), 0.5, &stream.named("pool"));
    let mut oracle = ReuseOracle::new(pool, stream.named("oracle"));
    let delta_min = 0.05;
    let (_, report) =
        complete_unknown_noise(&mut oracle, &params(2, 1.0), delta_min, &consts, &stream.named("auto")).unwrap();
    assert!(report.steps.iter().all(|s| s.delta >= delta_min));
    assert!(report.chosen_delta >= delta_min);
    assert!(report.chosen_d_est <= consts.cert_high * report.chosen_delta);
}

#[test]
fn unknown_noise_with_minimum_above_the_start_fails() {
    let consts = ConstantsConfig::desk();
    let inst = random_standard_instance::<f64>(64, 64, 2, 0.0, &InstanceOptions::default(), 8).unwrap();
    let mut oracle = FullOracle::new(inst.observed_matrix(), Stream::new(8));
    assert!(matches!(
        complete_unknown_noise(&mut oracle, &params(2, 1.0), 1e9, &consts, &Stream::new(9)),
        Err(McError::DeltaMinReached)
    ));
}

#[test]
fn single_precision_completion() {
    let consts = ConstantsConfig::desk();
    let inst = random_standard_instance::<f32>(96, 96, 2, 0.0, &InstanceOptions::default(), 4).unwrap();
    let stream = Stream::new(4);
    let pool = sample_oracle(&inst.observed_matrix(), 0.5, &stream.named("pool"));
    let mut oracle = ReuseOracle::new(pool, stream.named("oracle"));
    let (f, report) = matrix_completion(&mut oracle, &params(2, 1e-4), &consts, &stream).unwrap();
    assert_eq!(report.output_rank, 2);
    let err = inst.relative_error(&f);
    assert!(err <= 1e-3, "{err}");
}

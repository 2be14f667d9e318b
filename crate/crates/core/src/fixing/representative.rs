use crate::constants::{ceil_count, ln_floor2, ConstantsConfig};
use crate::error::{McError, Result};
use crate::linalg::Factorization;
use crate::rng::Stream;
use crate::scalar::Real;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

const JITTER: f64 = 1e-12;
const B0_ATTEMPTS: u64 = 8;

/// Value of `min_v ‖A·v − b‖² + λ‖v‖²`, solved through the `|T|×|T|`
/// normal equations.
pub fn ridge_objective<T: Real>(a: &DMatrix<T>, b: &DVector<T>, lambda: f64) -> Result<f64> {
    let k = a.ncols();
    if k == 0 {
        return Ok(b.norm_squared().f());
    }
    let gram = a.tr_mul(a);
    let rhs = a.tr_mul(b);
    let lam = T::c(lambda);
    let mut system = gram.clone();
    for i in 0..k {
        system[(i, i)] += lam;
    }
    let chol = match system.cholesky() {
        Some(c) => c,
        None if lambda > 0.0 => {
            let scale = gram.diagonal().iter().fold(1.0f64, |acc, x| acc.max(x.f()));
            let mut jittered = gram;
            for i in 0..k {
                jittered[(i, i)] += lam + T::c(JITTER * scale);
            }
            jittered.cholesky().ok_or(McError::DegenerateRidge)?
        }
        None => return Err(McError::DegenerateRidge),
    };
    let v = chol.solve(&rhs);
    let resid = a * &v - b;
    Ok(resid.norm_squared().f() + lambda * v.norm_squared().f())
}

/// Whether `min_v ‖M_{:T}·v − M_{:j}‖² + (φ²/τ²)‖v‖² ≤ 2φ²`.
pub fn test_column<T: Real>(m: &DMatrix<T>, t: &[usize], j: usize, phi: f64, tau: f64) -> Result<bool> {
    if !(tau > 0.0) {
        return Err(McError::Precondition(format!("Test needs τ > 0, got {tau}")));
    }
    let a = m.select_columns(t.iter());
    let b = m.column(j).into_owned();
    Ok(ridge_objective(&a, &b, phi * phi / (tau * tau))? <= 2.0 * phi * phi)
}

/// Same test on `Q·Wᵀ` with orthonormal `Q`, computed in the coefficient space.
fn test_coefficients<T: Real>(w: &DMatrix<T>, t: &[usize], j: usize, phi: f64, tau: f64) -> Result<bool> {
    let a = w.select_rows(t.iter()).transpose();
    let b = w.row(j).transpose();
    Ok(ridge_objective(&a, &b, phi * phi / (tau * tau))? <= 2.0 * phi * phi)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepresentativeResult {
    /// Selected columns, ascending.
    pub b: Vec<usize>,
    /// The initial candidate sample `B₀`, ascending.
    pub candidates: Vec<usize>,
    /// Passes per entry of `candidates`.
    pub pass_counts: Vec<usize>,
    pub rounds: usize,
    pub phi: f64,
    pub tau: f64,
    pub p: f64,
}

fn sample_columns(n: usize, p: f64, stream: &Stream) -> Vec<usize> {
    (0..n).filter(|&k| stream.coin_at(0, k, p)).collect()
}

/// Columns of `M` that the ridge test accepts in most of `t_max` rounds
/// against fresh random column subsets.
pub fn representative<T: Real>(
    m: &Factorization<T>,
    phi: f64,
    p: f64,
    consts: &ConstantsConfig,
    stream: &Stream,
) -> Result<RepresentativeResult> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(McError::InvalidProbabilities(format!("Representative rate {p}")));
    }
    let (rows, n) = m.shape();
    let w = m.with_orthonormal_left().v;
    let mut candidates = Vec::new();
    for attempt in 0..B0_ATTEMPTS {
        candidates = sample_columns(n, p, &stream.named("b0").split(attempt));
        if !candidates.is_empty() {
            break;
        }
    }
    if candidates.is_empty() {
        return Err(McError::EmptyCandidateSet);
    }
    let t_max = ceil_count(consts.rep_rounds * ((rows * n) as f64).ln()).max(1);
    let tau = 1.0 / (consts.rep_tau * ln_floor2(m.rank() as f64)).sqrt();
    let rounds = stream.named("rounds");
    let passes: Vec<Vec<bool>> = (0..t_max)
        .into_par_iter()
        .map(|t| {
            let subset = sample_columns(n, p, &rounds.split(t as u64));
            candidates.iter().map(|&j| test_coefficients(&w, &subset, j, phi, tau)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let pass_counts: Vec<usize> =
        (0..candidates.len()).map(|c| passes.iter().filter(|round| round[c]).count()).collect();
    let b = candidates.iter().zip(&pass_counts).filter(|&(_, &c)| 2 * c > t_max).map(|(&j, _)| j).collect();
    Ok(RepresentativeResult { b, candidates, pass_counts, rounds: t_max, phi, tau, p })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn zero_column_passes() {
        let m = dmatrix![1.0, 0.0; 2.0, 0.0];
        assert!(test_column(&m, &[0], 1, 0.1, 0.5).unwrap());
    }

    #[test]
    fn orthogonal_column_fails() {
        let m = dmatrix![1.0, 0.0; 0.0, 3.0];
        assert!(!test_column(&m, &[0], 1, 1.0, 0.5).unwrap());
    }

    #[test]
    fn ridge_matches_closed_form() {
        // One regressor: objective = λ‖b‖²/(‖a‖² + λ) when b ∥ a.
        let a = dmatrix![1.0; 1.0];
        let b = nalgebra::dvector![2.0, 2.0];
        let got = ridge_objective(&a, &b, 0.5).unwrap();
        assert!((got - 0.5 * 8.0 / 2.5).abs() < 1e-12);
    }

    #[test]
    fn coefficient_space_agrees_with_dense() {
        let mut rng = Stream::new(3).rng();
        let f = Factorization::<f64>::new(
            crate::linalg::gaussian_matrix(12, 2, &mut rng),
            crate::linalg::gaussian_matrix(9, 2, &mut rng),
        )
        .unwrap();
        let dense = f.to_dense();
        let w = f.with_orthonormal_left().v;
        for j in 0..9 {
            for phi in [0.05, 0.5, 2.0] {
                let t = [0, 3, 5];
                let lam = phi * phi / 0.09;
                let x = ridge_objective(&dense.select_columns(t.iter()), &dense.column(j).into_owned(), lam).unwrap();
                let y = ridge_objective(&w.select_rows(t.iter()).transpose(), &w.row(j).transpose(), lam).unwrap();
                assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
                assert_eq!(test_column(&dense, &t, j, phi, 0.3).unwrap(), test_coefficients(&w, &t, j, phi, 0.3).unwrap());
            }
        }
    }
}

use super::{dense_svd, gaussian_matrix, orthonormalize, LinearOperator};
use crate::constants::ConstantsConfig;
use crate::error::{McError, Result};
use crate::rng::Stream;
use crate::scalar::Real;
use nalgebra::DMatrix;

const CHECK_EVERY: usize = 3;
const RESIDUAL_STEPS: usize = 8;

/// Orthonormal `U` (at most `k` columns) with
/// `‖(I − UUᵀ)M‖_op ≤ (1+eps)·σ_{k+1}(M)`.
///
/// Block simultaneous iteration on an oversampled block. Every few steps the
/// Rayleigh–Ritz values of the block are computed; the `(k+1)`-th Ritz value
/// is a lower bound on `σ_{k+1}(M)`, so the iteration stops once a power
/// estimate of the residual norm falls below `(1+eps)` times that bound.
pub fn top_k_subspace<T: Real, O: LinearOperator<T> + ?Sized>(
    op: &O,
    k: usize,
    eps: f64,
    delta: f64,
    stream: &Stream,
    consts: &ConstantsConfig,
) -> Result<DMatrix<T>> {
    let (m, n) = (op.nrows(), op.ncols());
    let kmax = m.min(n);
    if k > kmax {
        return Err(McError::Precondition(format!("k = {k} exceeds min(m, n) = {kmax}")));
    }
    if k == 0 {
        return Ok(DMatrix::zeros(m, 0));
    }
    if k == m {
        return Ok(DMatrix::identity(m, m));
    }
    if k == n {
        return Ok(orthonormalize(op.apply(&DMatrix::identity(n, n))));
    }

    let block = (k + (k / 2).max(4)).min(kmax);
    let mut rng = stream.rng();
    let mut q = orthonormalize(op.apply(&gaussian_matrix::<T, _>(n, block, &mut rng)));
    let budget = ((consts.power_iterations * ((m + n) as f64 / delta).ln() / eps).ceil() as usize).max(1);

    for it in 1..=budget {
        let z = orthonormalize(op.apply_t(&q));
        q = orthonormalize(op.apply(&z));
        if it % CHECK_EVERY != 0 && it != budget {
            continue;
        }
        // Rayleigh–Ritz: QᵀM = R·S·Pᵀ where op.apply_t(Q) = P·S·Rᵀ.
        let ritz = dense_svd(&op.apply_t(&q));
        let s1 = ritz.singular.first().map_or(0.0, |s| s.f());
        if s1 == 0.0 {
            return Ok(q.columns(0, k).into_owned());
        }
        let basis = &q * &ritz.right;
        let u = orthonormalize(basis.columns(0, k).into_owned());
        let sk1 = ritz.singular.get(k).map_or(0.0, |s| s.f());
        let start = ritz.left.column(k.min(ritz.left.ncols() - 1)).into_owned();
        let residual = residual_norm(op, &u, start, &mut rng);
        if residual <= (1.0 + eps) * sk1 + consts.cert_tol * s1 {
            return Ok(u);
        }
    }
    Err(McError::NonConvergence { iterations: budget })
}

/// Power-method estimate of `‖(I − UUᵀ)M‖_op` started near `start ∈ ℝⁿ`.
fn residual_norm<T: Real, O: LinearOperator<T> + ?Sized, R: rand::Rng>(
    op: &O,
    u: &DMatrix<T>,
    start: nalgebra::DVector<T>,
    rng: &mut R,
) -> f64 {
    let n = op.ncols();
    let noise = gaussian_matrix::<T, _>(n, 1, rng);
    let mut x = DMatrix::from_column_slice(n, 1, start.as_slice()) + noise * T::c(1e-3 / (n as f64).sqrt());
    let mut est = 0.0;
    for _ in 0..RESIDUAL_STEPS {
        let nx = x.norm();
        if nx == T::zero() {
            return 0.0;
        }
        x /= nx;
        let mut y = op.apply(&x);
        y -= u * u.tr_mul(&y);
        est = y.norm().f();
        x = op.apply_t(&y);
    }
    est
}

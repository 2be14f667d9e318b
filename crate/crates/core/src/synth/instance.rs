use super::{incoherence_mu, regularity_check, RegularityMode};
use crate::error::{McError, Result};
use crate::linalg::{gaussian_matrix, orthonormalize, Factorization};
use crate::rng::Stream;
use crate::scalar::Real;
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Spectrum of a generated target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceOptions {
    /// Largest singular value.
    pub sigma: f64,
    /// Ratio of largest to smallest singular value.
    pub kappa: f64,
}

impl Default for InstanceOptions {
    fn default() -> Self {
        InstanceOptions { sigma: 1.0, kappa: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub m: usize,
    pub n: usize,
    pub r_star: usize,
    pub noise_fro: f64,
    pub kind: String,
    pub seed: u64,
    pub sigma: f64,
    pub kappa: f64,
    /// `m < n`: algorithms should run on the transpose.
    pub transposed: bool,
    pub mu_col: f64,
    pub mu_row: f64,
    /// Smallest sampled `sqrt(λ_min)` over `(1−α)`-row restrictions, `α = 0.1`.
    pub beta_col: f64,
    pub beta_row: f64,
}

/// Ground truth `M⋆` with additive noise `N`.
#[derive(Clone, Debug)]
pub struct SyntheticInstance<T: Real> {
    pub m_star: Factorization<T>,
    pub noise: DMatrix<T>,
    pub meta: InstanceMeta,
}

impl<T: Real> SyntheticInstance<T> {
    /// `M̂ = M⋆ + N`.
    pub fn observed_matrix(&self) -> DMatrix<T> {
        self.m_star.to_dense() + &self.noise
    }

    /// Relative Frobenius distance of `f` to `M⋆`.
    pub fn relative_error(&self, f: &Factorization<T>) -> f64 {
        (f.to_dense() - self.m_star.to_dense()).norm().f() / self.m_star.fro_norm()
    }
}

const META_REGULARITY_TRIALS: usize = 50;
const META_ALPHA: f64 = 0.1;

fn spectrum(r: usize, opts: &InstanceOptions) -> Vec<f64> {
    if r <= 1 {
        return vec![opts.sigma; r];
    }
    (0..r).map(|k| opts.sigma * opts.kappa.powf(-(k as f64) / (r - 1) as f64)).collect()
}

fn scaled_noise<T: Real, R: Rng>(m: usize, n: usize, fro: f64, rng: &mut R) -> DMatrix<T> {
    if fro == 0.0 {
        return DMatrix::zeros(m, n);
    }
    let g = gaussian_matrix::<T, _>(m, n, rng);
    let norm = g.norm();
    g * (T::c(fro) / norm)
}

pub(crate) fn build<T: Real>(
    u: DMatrix<T>,
    v: DMatrix<T>,
    noise: DMatrix<T>,
    kind: &str,
    seed: u64,
    opts: &InstanceOptions,
    stream: &Stream,
) -> SyntheticInstance<T> {
    let (m, n, r) = (u.nrows(), v.nrows(), u.ncols());
    let m_star = Factorization { u, v };
    let svd = m_star.svd();
    let keep = svd.singular.iter().filter(|s| s.f() > 0.0).count();
    let (bu, bv) = (svd.left.columns(0, keep).into_owned(), svd.right.columns(0, keep).into_owned());
    let beta = |b: &DMatrix<T>, label: &str| {
        regularity_check(b, META_ALPHA, 0.0, RegularityMode::Sampled { trials: META_REGULARITY_TRIALS }, &stream.named(label))
            .map(|rep| rep.witness_min_eig.max(0.0).sqrt())
            .unwrap_or(0.0)
    };
    let meta = InstanceMeta {
        m,
        n,
        r_star: r,
        noise_fro: noise.norm().f(),
        kind: kind.to_string(),
        seed,
        sigma: opts.sigma,
        kappa: opts.kappa,
        transposed: m < n,
        mu_col: incoherence_mu(&bu).unwrap_or(f64::NAN),
        mu_row: incoherence_mu(&bv).unwrap_or(f64::NAN),
        beta_col: beta(&bu, "beta-col"),
        beta_row: beta(&bv, "beta-row"),
    };
    SyntheticInstance { m_star, noise, meta }
}

/// Random rank-`r⋆` target with uniformly random row and column spans and a
/// geometric spectrum from `σ` down to `σ/κ`, plus Gaussian noise of
/// Frobenius norm `noise_fro`.
pub fn random_standard_instance<T: Real>(
    m: usize,
    n: usize,
    r_star: usize,
    noise_fro: f64,
    opts: &InstanceOptions,
    seed: u64,
) -> Result<SyntheticInstance<T>> {
    if r_star == 0 || r_star > m.min(n) {
        return Err(McError::Precondition(format!("r⋆ = {r_star} must lie in [1, min(m, n)]")));
    }
    if !(noise_fro >= 0.0) || !(opts.sigma > 0.0) || !(opts.kappa >= 1.0) {
        return Err(McError::Precondition("need noise ≥ 0, σ > 0 and κ ≥ 1".into()));
    }
    let stream = Stream::new(seed);
    let mut rng = stream.named("factors").rng();
    let mut u = orthonormalize(gaussian_matrix::<T, _>(m, r_star, &mut rng));
    let v = orthonormalize(gaussian_matrix::<T, _>(n, r_star, &mut rng));
    for (k, s) in spectrum(r_star, opts).into_iter().enumerate() {
        u.column_mut(k).scale_mut(T::c(s));
    }
    let noise = scaled_noise(m, n, noise_fro, &mut stream.named("noise").rng());
    Ok(build(u, v, noise, "standard", seed, opts, &stream))
}

/// Structures planted for tests, each with its exact witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PlantedKind {
    /// `M⋆ = σ·u·uᵀ + c·e_a·e_bᵀ` (square only).
    Spike { magnitude: f64 },
    /// A standard instance plus `columns` corrupted columns, each with `s`
    /// entries of size `magnitude`, no row holding more than `s` of them.
    RcsError { s: usize, columns: usize, magnitude: f64 },
    /// A standard instance whose `rows` rows are replaced by Gaussian garbage
    /// with entries of standard deviation `scale`.
    DroppedRows { rows: usize, scale: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Planting {
    Spike { a: usize, b: usize, c: f64 },
    RcsError { columns: Vec<usize>, support: Vec<(usize, usize)>, s: usize },
    DroppedRows { rows: Vec<usize> },
}

/// Synthetic instance with a known planted structure.
pub fn planted_instance<T: Real>(
    m: usize,
    n: usize,
    r_star: usize,
    kind: &PlantedKind,
    opts: &InstanceOptions,
    seed: u64,
) -> Result<(SyntheticInstance<T>, Planting)> {
    let stream = Stream::new(seed);
    let mut rng = stream.named("planting").rng();
    match *kind {
        PlantedKind::Spike { magnitude } => {
            if m != n || m == 0 {
                return Err(McError::Precondition("spike instances are square".into()));
            }
            let mut u = orthonormalize(gaussian_matrix::<T, _>(m, 1, &mut stream.named("factors").rng()));
            let a = rng.gen_range(0..m);
            let b = rng.gen_range(0..n);
            let mut left = DMatrix::zeros(m, 2);
            let mut right = DMatrix::zeros(n, 2);
            right.column_mut(0).copy_from(&u.column(0));
            u *= T::c(opts.sigma);
            left.column_mut(0).copy_from(&u.column(0));
            left[(a, 1)] = T::c(magnitude);
            right[(b, 1)] = T::one();
            let inst = build(left, right, DMatrix::zeros(m, n), "spike", seed, opts, &stream);
            Ok((inst, Planting::Spike { a, b, c: magnitude }))
        }
        PlantedKind::RcsError { s, columns, magnitude } => {
            if columns > n || s > m || s == 0 {
                return Err(McError::Precondition(format!("cannot plant {columns} columns of {s} entries in {m}×{n}")));
            }
            let mut inst = random_standard_instance::<T>(m, n, r_star, 0.0, opts, seed)?;
            let cols: Vec<usize> = {
                let mut c = sample(&mut rng, n, columns).into_vec();
                c.sort_unstable();
                c
            };
            let mut per_row = vec![0usize; m];
            let mut support = Vec::new();
            for &j in &cols {
                let free: Vec<usize> = (0..m).filter(|&i| per_row[i] < s).collect();
                if free.len() < s {
                    return Err(McError::Precondition("row budget exhausted while planting".into()));
                }
                for idx in sample(&mut rng, free.len(), s).into_vec() {
                    let i = free[idx];
                    per_row[i] += 1;
                    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    inst.noise[(i, j)] = T::c(sign * magnitude);
                    support.push((i, j));
                }
            }
            support.sort_unstable();
            inst.meta.kind = "rcs-error".into();
            inst.meta.noise_fro = inst.noise.norm().f();
            Ok((inst, Planting::RcsError { columns: cols, support, s }))
        }
        PlantedKind::DroppedRows { rows, scale } => {
            if rows > m {
                return Err(McError::Precondition(format!("cannot drop {rows} of {m} rows")));
            }
            let mut inst = random_standard_instance::<T>(m, n, r_star, 0.0, opts, seed)?;
            let mut picked = sample(&mut rng, m, rows).into_vec();
            picked.sort_unstable();
            let dense = inst.m_star.to_dense();
            let garbage = gaussian_matrix::<T, _>(rows, n, &mut rng);
            for (k, &i) in picked.iter().enumerate() {
                for j in 0..n {
                    inst.noise[(i, j)] = garbage[(k, j)] * T::c(scale) - dense[(i, j)];
                }
            }
            inst.meta.kind = "dropped-rows".into();
            inst.meta.noise_fro = inst.noise.norm().f();
            Ok((inst, Planting::DroppedRows { rows: picked }))
        }
    }
}

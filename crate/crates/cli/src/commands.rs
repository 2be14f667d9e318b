use crate::{
    CompleteArgs, CompleteAutoArgs, CompletionArgs, FixArgs, Format, Kind, ObserveArgs, PartialArgs, RegMode,
    RegularityArgs, SynthArgs,
};
use anyhow::{Context, Result};
use matcomp::driver::{complete_unknown_noise, matrix_completion, McParams};
use matcomp::fixing::{fix as run_fix, FixParams};
use matcomp::io::{self, ObsFormat};
use matcomp::linalg::orthonormalize;
use matcomp::observe::{sample_oracle, IndexSubsets, ReuseOracle};
use matcomp::partial::{partial_completion, PmcParams};
use matcomp::synth::{
    planted_instance, random_standard_instance, regularity_check, InstanceOptions, PlantedKind, RegularityMode,
};
use matcomp::{Factorization64, Matrix64, McError, Observations64, Stream};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::Path;

pub(crate) fn to_json<S: Serialize>(value: &S) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Writes JSON to `path`, or to stdout without one.
fn emit_json<S: Serialize>(path: Option<&Path>, value: &S) -> Result<()> {
    let text = to_json(value)?;
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn with_fields(mut base: Value, extra: Value) -> Value {
    if let (Some(b), Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

fn load_obs(path: &Path) -> Result<Observations64> {
    let (obs, _) = io::load_observations(path).with_context(|| format!("reading observations {}", path.display()))?;
    Ok(obs)
}

/// Ground truth from an instance directory or a DMAT file.
fn load_truth(path: &Path) -> Result<Matrix64> {
    let file = if path.is_dir() { path.join("truth.dmat") } else { path.to_path_buf() };
    Ok(io::load_matrix(&file).with_context(|| format!("reading {}", file.display()))?)
}

fn pool_oracle(obs: Observations64, seed: u64) -> ReuseOracle<f64> {
    ReuseOracle::new(obs, Stream::new(seed).named("oracle"))
}

fn mu_or_default(mu: Option<f64>, alpha: f64) -> f64 {
    mu.unwrap_or(3.0 / alpha)
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let opts = InstanceOptions { sigma: a.sigma, kappa: a.kappa };
    let (inst, planting) = match a.kind {
        Kind::Standard => (random_standard_instance::<f64>(a.m, a.n, a.rstar, a.noise, &opts, a.seed)?, None),
        kind => {
            let planted = match kind {
                Kind::Spike => PlantedKind::Spike { magnitude: a.magnitude },
                Kind::RcsError => PlantedKind::RcsError { s: a.s, columns: a.columns, magnitude: a.magnitude },
                _ => PlantedKind::DroppedRows { rows: a.rows, scale: a.scale },
            };
            let (inst, p) = planted_instance::<f64>(a.m, a.n, a.rstar, &planted, &opts, a.seed)?;
            (inst, Some(p))
        }
    };
    std::fs::create_dir_all(&a.out)?;
    io::save_matrix(&a.out.join("truth.dmat"), &inst.m_star.to_dense())?;
    io::save_factorization(&a.out.join("truth.fac"), &inst.m_star)?;
    io::save_matrix(&a.out.join("noise.dmat"), &inst.noise)?;
    emit_json(Some(&a.out.join("meta.json")), &json!({ "instance": inst.meta, "planting": planting }))
}

pub fn observe(a: &ObserveArgs) -> Result<()> {
    let matrix = match (&a.instance, &a.matrix) {
        (Some(dir), _) => load_truth(dir)? + io::load_matrix::<f64>(&dir.join("noise.dmat"))?,
        (None, Some(file)) => io::load_matrix(file)?,
        (None, None) => return Err(McError::Precondition("give --instance or --matrix".into()).into()),
    };
    if !(0.0..=1.0).contains(&a.p) {
        return Err(McError::InvalidProbabilities(format!("p = {}", a.p)).into());
    }
    let obs = sample_oracle(&matrix, a.p, &Stream::new(a.seed).named("observe"));
    let format = match a.format {
        Format::Csv => ObsFormat::Csv,
        Format::Binary => ObsFormat::Binary,
    };
    io::save_observations(&a.out, &obs, Some(a.seed), format)?;
    Ok(())
}

pub fn partial(a: &PartialArgs) -> Result<()> {
    let consts = a.common.constants()?;
    let mut oracle = pool_oracle(load_obs(&a.obs)?, a.common.seed);
    let params = PmcParams {
        r_star: a.rstar,
        sigma: a.sigma,
        delta: a.delta,
        alpha: a.alpha,
        fail_prob: a.fail_prob,
        ell: a.ell,
    };
    let (f, scope, report) = partial_completion(&mut oracle, &params, &consts, &Stream::new(a.common.seed))?;
    io::save_factorization(&a.out, &f)?;
    let out = json!({
        "kept_rows": scope.rows,
        "kept_cols": scope.cols,
        "iterations": report.iterations,
        "rank": report.rank,
        "clamped_probs": oracle_clamps(&oracle),
        "samples_used": matcomp::observe::Oracle::ledger(&oracle).samples_used(),
        "profile": consts.profile,
        "seed": a.common.seed,
        "trace": report,
    });
    emit_json(a.report.as_deref(), &out)
}

fn oracle_clamps(o: &ReuseOracle<f64>) -> Value {
    serde_json::to_value(matcomp::observe::Oracle::ledger(o).clamps()).unwrap_or(Value::Null)
}

fn load_scope(path: &Path, shape: (usize, usize)) -> Result<IndexSubsets> {
    #[derive(serde::Deserialize)]
    struct Scope {
        kept_rows: Vec<usize>,
        kept_cols: Vec<usize>,
    }
    let s: Scope = serde_json::from_slice(&std::fs::read(path)?).map_err(|e| McError::Format(e.to_string()))?;
    Ok(IndexSubsets::new(s.kept_rows, s.kept_cols, shape)?)
}

pub fn fix(a: &FixArgs) -> Result<()> {
    let consts = a.common.constants()?;
    let obs = load_obs(&a.obs)?;
    let shape = obs.shape();
    let init: Factorization64 = io::load_factorization(&a.init)?;
    if init.shape() != shape {
        return Err(McError::Shape(format!("iterate {:?} vs observations {:?}", init.shape(), shape)).into());
    }
    let scope = match &a.scope {
        Some(p) => load_scope(p, shape)?,
        None => IndexSubsets::full(shape.0, shape.1),
    };
    let params = FixParams {
        r_star: a.rstar,
        sigma: a.sigma,
        delta: a.delta,
        alpha: a.alpha,
        beta: a.beta,
        mu: mu_or_default(a.mu, a.alpha),
        fail_prob: a.fail_prob,
    };
    let mut oracle = pool_oracle(obs, a.common.seed);
    let (f, report) = run_fix(&mut oracle, &init, &scope, &params, &consts, &Stream::new(a.common.seed))?;
    io::save_factorization(&a.out, &f)?;
    let extra = json!({
        "clamped_probs": oracle_clamps(&oracle),
        "profile": consts.profile,
        "seed": a.common.seed,
    });
    emit_json(a.report.as_deref(), &with_fields(serde_json::to_value(&report)?, extra))
}

fn mc_params(r: &CompletionArgs, delta: f64) -> McParams {
    McParams {
        r_star: r.rstar,
        alpha: r.alpha,
        beta: r.beta,
        mu: mu_or_default(r.mu, r.alpha),
        delta,
        fail_prob: r.fail_prob,
    }
}

fn truth_fields(r: &CompletionArgs, f: &Factorization64) -> Result<Value> {
    Ok(match &r.truth {
        Some(path) => {
            let truth = load_truth(path)?;
            let err = (f.to_dense() - &truth).norm();
            json!({ "fro_error_vs_truth": err, "relative_error": err / truth.norm() })
        }
        None => json!({}),
    })
}

pub fn complete(a: &CompleteArgs) -> Result<()> {
    let r = &a.run;
    let consts = r.common.constants()?;
    let mut oracle = pool_oracle(load_obs(&r.obs)?, r.common.seed);
    let params = mc_params(r, a.delta_noise);
    let (f, mut report) = matrix_completion(&mut oracle, &params, &consts, &Stream::new(r.common.seed))?;
    report.seed = Some(r.common.seed);
    io::save_factorization(&r.out, &f)?;
    let value = with_fields(serde_json::to_value(&report)?, json!({ "params": params }));
    emit_json(r.report.as_deref(), &with_fields(value, truth_fields(r, &f)?))
}

pub fn complete_auto(a: &CompleteAutoArgs) -> Result<()> {
    let r = &a.run;
    let consts = r.common.constants()?;
    let mut oracle = pool_oracle(load_obs(&r.obs)?, r.common.seed);
    let params = mc_params(r, a.delta_min);
    let (f, mut report) = complete_unknown_noise(&mut oracle, &params, a.delta_min, &consts, &Stream::new(r.common.seed))?;
    report.completion.seed = Some(r.common.seed);
    io::save_factorization(&r.out, &f)?;
    emit_json(r.report.as_deref(), &with_fields(serde_json::to_value(&report)?, truth_fields(r, &f)?))
}

pub fn check_regularity(a: &RegularityArgs) -> Result<()> {
    let mut basis: Matrix64 = io::load_matrix(&a.basis)?;
    if a.orthonormalize {
        basis = orthonormalize(basis);
    }
    let mode = match a.mode {
        RegMode::Exact => RegularityMode::Exact,
        RegMode::Sampled => RegularityMode::Sampled { trials: a.trials },
    };
    let report = regularity_check(&basis, a.alpha, a.beta, mode, &Stream::new(a.seed).named("regularity"))?;
    emit_json(None, &report)
}

use crate::commands::to_json;
use crate::CommonArgs;
use anyhow::Result;
use clap::Args;
use matcomp::constants::ceil_count;
use matcomp::driver::{matrix_completion, McParams};
use matcomp::observe::{sample_oracle, ClampRecord, FullOracle, Oracle, ReuseOracle};
use matcomp::synth::{estimate_completion_error, random_standard_instance, InstanceOptions};
use matcomp::{ConstantsConfig, Profile, Stream};
use rayon::prelude::*;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const SCHEMA: &str = "mcbench-v1";
const DELTA_FLOOR: f64 = 1e-9;

#[derive(Args, Debug, Clone, Serialize)]
pub struct BenchArgs {
    /// Matrix sizes (square).
    #[arg(long, value_delimiter = ',', default_value = "64")]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub rstar: Vec<usize>,
    /// Pool reveal rates.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub p: Vec<f64>,
    /// Noise Frobenius norms, relative to the top singular value 1.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub delta: Vec<f64>,
    /// Seeded repetitions per grid point.
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 10.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.1)]
    pub fail_prob: f64,
    /// Record wall-clock runtimes; without it `runtime_ms` is empty and the
    /// metrics files are reproducible byte for byte.
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
    /// Output prefix: writes PREFIX.csv, PREFIX.jsonl and PREFIX.config.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellParams {
    pub cell: usize,
    pub m: usize,
    pub n: usize,
    pub r_star: usize,
    pub p: f64,
    pub delta: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsRow {
    pub schema: &'static str,
    pub params: CellParams,
    pub profile: Profile,
    pub samples_used: Option<usize>,
    pub runtime_ms: Option<f64>,
    pub output_rank: Option<usize>,
    pub fro_error_vs_truth: Option<f64>,
    pub relative_error: Option<f64>,
    pub d_est: Option<f64>,
    pub clamps: Vec<ClampRecord>,
    pub status: String,
}

const HEADER: [&str; 18] = [
    "schema",
    "cell",
    "m",
    "n",
    "r_star",
    "p",
    "delta",
    "seed",
    "profile",
    "samples_used",
    "runtime_ms",
    "output_rank",
    "fro_error_vs_truth",
    "relative_error",
    "d_est",
    "clamped",
    "clamps",
    "status",
];

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl MetricsRow {
    fn record(&self) -> Vec<String> {
        let p = &self.params;
        vec![
            self.schema.to_string(),
            p.cell.to_string(),
            p.m.to_string(),
            p.n.to_string(),
            p.r_star.to_string(),
            p.p.to_string(),
            p.delta.to_string(),
            p.seed.to_string(),
            self.profile.to_string(),
            opt(self.samples_used),
            opt(self.runtime_ms),
            opt(self.output_rank),
            opt(self.fro_error_vs_truth),
            opt(self.relative_error),
            opt(self.d_est),
            (!self.clamps.is_empty()).to_string(),
            serde_json::to_string(&self.clamps).unwrap_or_default(),
            self.status.clone(),
        ]
    }
}

/// Writes the rows as CSV (header always present) and as JSON lines.
pub fn metrics_emit(rows: &[MetricsRow], csv_path: &Path, jsonl_path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(csv_path)?;
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    let mut lines = String::new();
    for row in rows {
        lines += &serde_json::to_string(row)?;
        lines.push('\n');
    }
    std::fs::write(jsonl_path, lines)?;
    Ok(())
}

fn grid(a: &BenchArgs) -> Vec<CellParams> {
    let base = Stream::new(a.common.seed).named("cell");
    let mut cells = Vec::new();
    for &n in &a.n {
        for &r_star in &a.rstar {
            for &p in &a.p {
                for &delta in &a.delta {
                    for _ in 0..a.reps.max(1) {
                        let cell = cells.len();
                        let seed = base.split(cell as u64).key();
                        cells.push(CellParams { cell, m: n, n, r_star, p, delta, seed });
                    }
                }
            }
        }
    }
    cells
}

fn run_cell(a: &BenchArgs, c: &CellParams, consts: &ConstantsConfig) -> MetricsRow {
    let mut row = MetricsRow {
        schema: SCHEMA,
        params: c.clone(),
        profile: consts.profile,
        samples_used: None,
        runtime_ms: None,
        output_rank: None,
        fro_error_vs_truth: None,
        relative_error: None,
        d_est: None,
        clamps: Vec::new(),
        status: "ok".into(),
    };
    if let Err(e) = fill_cell(a, c, consts, &mut row) {
        row.status = format!("error: {e}");
    }
    row
}

fn fill_cell(a: &BenchArgs, c: &CellParams, consts: &ConstantsConfig, row: &mut MetricsRow) -> matcomp::Result<()> {
    let inst = random_standard_instance::<f64>(c.m, c.n, c.r_star, c.delta, &InstanceOptions::default(), c.seed)?;
    let stream = Stream::new(c.seed);
    let observed = inst.observed_matrix();
    let pool = sample_oracle(&observed, c.p, &stream.named("pool"));
    let mut oracle = ReuseOracle::new(pool, stream.named("oracle"));
    let params = McParams {
        r_star: c.r_star,
        alpha: a.alpha,
        beta: a.beta,
        mu: a.mu,
        delta: c.delta.max(DELTA_FLOOR),
        fail_prob: a.fail_prob,
    };
    let start = Instant::now();
    let result = matrix_completion(&mut oracle, &params, consts, &stream.named("run"));
    if a.timing {
        row.runtime_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    row.samples_used = Some(oracle.ledger().samples_used());
    row.clamps = oracle.ledger().clamps();
    let (f, report) = result?;
    row.output_rank = Some(report.output_rank);
    let err = (f.to_dense() - inst.m_star.to_dense()).norm();
    row.fro_error_vs_truth = Some(err);
    row.relative_error = Some(err / inst.m_star.fro_norm());
    let sets = ceil_count(consts.est_sets * ((c.m * c.n) as f64 / a.fail_prob).ln()).max(1);
    let mut fresh = FullOracle::new(observed, stream.named("d-est"));
    row.d_est = Some(estimate_completion_error(&mut fresh, &f, sets, c.p)?);
    Ok(())
}

pub fn run(a: &BenchArgs) -> Result<()> {
    let consts = a.common.constants()?;
    let cells = grid(a);
    let rows: Vec<MetricsRow> = cells.par_iter().map(|c| run_cell(a, c, &consts)).collect();
    let prefix = a.out.to_string_lossy().into_owned();
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    metrics_emit(&rows, Path::new(&format!("{prefix}.csv")), Path::new(&format!("{prefix}.jsonl")))?;
    let config = serde_json::json!({
        "schema": SCHEMA,
        "grid": a,
        "seed": a.common.seed,
        "overrides": a.common.overrides,
        "constants": consts,
    });
    std::fs::write(format!("{prefix}.config.json"), to_json(&config)?)?;
    Ok(())
}

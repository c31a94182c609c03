//! Experiment orchestration and persistence.
//!
//! Runs are independent and executed on a rayon pool; results are collected
//! in run order and written by one thread, so outputs do not depend on the
//! number of workers.

pub mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::analysis::Tuning;
use crate::engine::{uninformed_regret, EstimatorChoice, EtaChoice, RegretTrace};
use crate::error::{Error, Result};
use crate::potentials::Potential;

pub use config::{AlgorithmConfig, InstanceConfig, LossConfig, RunConfig, SweepConfig};

/// Mean and spread of cumulative regret across runs at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointStat {
    pub t: usize,
    pub mean: f64,
    /// Sample standard deviation (divisor `runs − 1`; zero for one run).
    pub std: f64,
    /// Standard error of the mean.
    pub se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgorithmSummary {
    pub name: String,
    pub potential: String,
    pub estimator: EstimatorChoice,
    pub eta: f64,
    pub tuning: Option<Tuning>,
    pub csv: PathBuf,
    pub checkpoints: Vec<CheckpointStat>,
    pub final_mean: f64,
    pub final_std: f64,
    pub final_se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub horizon: usize,
    pub repeats: u64,
    pub seed: u64,
    pub algorithms: Vec<AlgorithmSummary>,
    /// Mean final regret of the player that ignores feedback.
    pub uninformed_final_mean: f64,
    /// Experiment-specific figures (e.g. the fig1 comparison).
    #[serde(skip_serializing_if = "Value::is_null")]
    pub extra: Value,
}

impl Summary {
    pub fn algorithm(&self, name: &str) -> Option<&AlgorithmSummary> {
        self.algorithms.iter().find(|a| a.name == name)
    }
}

/// Per-checkpoint statistics. All traces must share the checkpoint grid.
pub fn checkpoint_stats(traces: &[RegretTrace]) -> Result<Vec<CheckpointStat>> {
    let Some(first) = traces.first() else {
        return Ok(Vec::new());
    };
    let grid: Vec<usize> = first.checkpoints.iter().map(|c| c.0).collect();
    if traces.iter().any(|tr| tr.checkpoints.len() != grid.len() || tr.checkpoints.iter().zip(&grid).any(|(c, t)| c.0 != *t)) {
        return Err(Error::InvalidInput("traces do not share a checkpoint grid".into()));
    }
    let n = traces.len() as f64;
    Ok(grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mean = traces.iter().map(|tr| tr.checkpoints[i].1).sum::<f64>() / n;
            let var = if traces.len() > 1 {
                traces.iter().map(|tr| (tr.checkpoints[i].1 - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            CheckpointStat {
                t,
                mean,
                std: var.sqrt(),
                se: (var / n).sqrt(),
            }
        })
        .collect())
}

/// Writes `run_id,t,cum_regret`, one row per checkpoint of every trace.
pub fn write_trace(traces: &[RegretTrace], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(["run_id", "t", "cum_regret"])?;
    for tr in traces {
        for &(t, r) in &tr.checkpoints {
            w.write_record([tr.run_id.to_string(), t.to_string(), r.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a trace CSV back into `(run_id, t, cum_regret)` rows.
pub fn read_trace(path: &Path) -> Result<Vec<(u64, usize, f64)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["run_id", "t", "cum_regret"] {
        return Err(Error::Parse {
            what: path.display().to_string(),
            detail: format!("unexpected header {headers:?}"),
        });
    }
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        rows.push(record?);
    }
    Ok(rows)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start {workers} workers: {e}")))
}

/// Runs every algorithm of `cfg` for `cfg.repeats` runs and writes
/// `<out>/<experiment>/<algo>.csv`, `summary.json` and
/// `resolved_config.json`.
pub fn run_experiment(cfg: &RunConfig, workers: usize) -> Result<Summary> {
    run_experiment_with(cfg, workers, Value::Null)
}

fn run_experiment_with(cfg: &RunConfig, workers: usize, extra: Value) -> Result<Summary> {
    let engines = cfg.build_engines()?;
    let dir = cfg.out.join(&cfg.experiment);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let pool = pool(workers)?;

    let mut algorithms = Vec::new();
    for (alg, engine) in &engines {
        let traces: Vec<RegretTrace> = pool.install(|| {
            (0..cfg.repeats)
                .into_par_iter()
                .map(|r| engine.run(r).map_err(|e| Error::InvalidInput(format!("{} run {r}: {e}", alg.name))))
                .collect::<Result<Vec<_>>>()
        })?;
        let csv_path = dir.join(format!("{}.csv", alg.name));
        write_trace(&traces, &csv_path)?;
        let stats = checkpoint_stats(&traces)?;
        let last = stats.last().cloned().expect("horizon is positive");
        algorithms.push(AlgorithmSummary {
            name: alg.name.clone(),
            potential: potential_label(&alg.potential),
            estimator: alg.estimator,
            eta: engine.eta(),
            tuning: engine.tuning(),
            csv: csv_path,
            checkpoints: stats,
            final_mean: last.mean,
            final_std: last.std,
            final_se: last.se,
        });
    }

    let instance = engines[0].1.config().instance.clone();
    let baseline: Vec<f64> = pool.install(|| {
        (0..cfg.repeats)
            .into_par_iter()
            .map(|r| uninformed_regret(&instance, cfg.seed, r))
            .collect::<Result<Vec<_>>>()
    })?;
    let summary = Summary {
        experiment: cfg.experiment.clone(),
        horizon: cfg.horizon,
        repeats: cfg.repeats,
        seed: cfg.seed,
        algorithms,
        uninformed_final_mean: baseline.iter().sum::<f64>() / baseline.len() as f64,
        extra,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    write_json(&dir.join("resolved_config.json"), &cfg.resolved(&engines))?;
    Ok(summary)
}

fn potential_label(p: &Potential) -> String {
    p.name()
}

/// Settings of the bandit comparison between plain and shifted estimators.
#[derive(Debug, Clone)]
pub struct Fig1Options {
    pub repeats: u64,
    pub horizon: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for Fig1Options {
    fn default() -> Self {
        Self {
            repeats: 100,
            horizon: 100_000,
            seed: 0,
            out: PathBuf::from("results"),
        }
    }
}

pub const FIG1_MEANS: [f64; 5] = [0.45, 0.55, 0.55, 0.55, 0.55];

pub fn fig1_config(opts: &Fig1Options) -> RunConfig {
    let alg = |name: &str, estimator| AlgorithmConfig {
        name: name.into(),
        potential: Potential::TsallisHalf,
        estimator,
        eta: EtaChoice::Auto,
    };
    RunConfig {
        experiment: "fig1".into(),
        algorithms: vec![
            alg("inf", EstimatorChoice::ImportanceWeighted),
            alg("inf_shift", EstimatorChoice::Shifted),
        ],
        instance: InstanceConfig::KArmedBandit {
            k: FIG1_MEANS.len(),
            losses: LossConfig::Bernoulli {
                means: FIG1_MEANS.to_vec(),
            },
        },
        horizon: opts.horizon,
        repeats: opts.repeats,
        seed: opts.seed,
        out: opts.out.clone(),
        checkpoints: Vec::new(),
    }
}

/// Plain versus shifted ½-Tsallis INF on the five-armed Bernoulli instance.
/// The summary's `extra` block holds the final-regret ratio and the
/// `√(2kn) + 48k` bound for the shifted variant.
pub fn run_fig1(opts: &Fig1Options, workers: usize) -> Result<Summary> {
    let cfg = fig1_config(opts);
    let mut summary = run_experiment(&cfg, workers)?;
    let plain = summary.algorithm("inf").expect("configured").clone();
    let shift = summary.algorithm("inf_shift").expect("configured").clone();
    let k = FIG1_MEANS.len() as f64;
    let n = opts.horizon as f64;
    let bound = (2.0 * k * n).sqrt() + 48.0 * k;
    summary.extra = serde_json::json!({
        "ratio_inf_over_shift": plain.final_mean / shift.final_mean,
        "shift_bound": bound,
        "shift_mean_plus_3se": shift.final_mean + 3.0 * shift.final_se,
    });
    // rewrite with the comparison block
    write_json(&cfg.out.join(&cfg.experiment).join("summary.json"), &summary)?;
    Ok(summary)
}

/// Runs every variant of a sweep and writes `<out>/<base>_sweep.json`
/// mapping experiments to their overrides.
pub fn run_sweep(sweep: &SweepConfig, base_dir: Option<&Path>, workers: usize) -> Result<Vec<Summary>> {
    let variants = sweep.expand(base_dir)?;
    let mut summaries = Vec::with_capacity(variants.len());
    for v in &variants {
        summaries.push(run_experiment(&v.config, workers)?);
    }
    if let Some(first) = variants.first() {
        let base = sweep.base.get("experiment").and_then(Value::as_str).unwrap_or("sweep");
        let index_path = first.config.out.join(format!("{base}_sweep.json"));
        write_json(&index_path, &variants)?;
    }
    Ok(summaries)
}

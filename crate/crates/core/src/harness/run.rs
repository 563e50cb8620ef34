use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{read_metrics, MetricsRow, MetricsWriter};
use crate::error::{Error, Result};
use crate::experiment::{EnvSpec, ExperimentSpec};
use crate::orchestrator::{train, ModeFlags, PolicyBank};

/// Trained parameters plus what is needed to evaluate them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub env: EnvSpec,
    pub flags: ModeFlags,
    pub n_agents: usize,
    pub seed: u64,
    pub iterations: usize,
    pub bank: PolicyBank,
}

impl Checkpoint {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint = serde_json::from_str(&text)?;
        ckpt.bank.validate()?;
        if ckpt.bank.n_agents != ckpt.n_agents {
            return Err(Error::Config("checkpoint agent count disagrees with its bank".into()));
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json_atomic(path.as_ref(), self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedStatus {
    Running,
    Completed,
    Failed,
}

/// Per-seed record of how a run ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedManifest {
    pub seed: u64,
    pub status: SeedStatus,
    pub iterations_completed: usize,
    pub total_iterations: usize,
    pub final_eval_mean: Option<f64>,
    pub error: Option<String>,
}

/// Outcome of one experiment: where it wrote and how each seed ended.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub cell_dir: PathBuf,
    pub seeds: Vec<SeedManifest>,
}

impl ExperimentReport {
    pub fn failed(&self) -> impl Iterator<Item = &SeedManifest> {
        self.seeds.iter().filter(|m| m.status != SeedStatus::Completed)
    }
}

pub(crate) fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn experiment_root(spec: &ExperimentSpec) -> PathBuf {
    spec.output_dir.join(&spec.name)
}

pub fn cell_dir(spec: &ExperimentSpec) -> PathBuf {
    experiment_root(spec).join(spec.cell_dir_name())
}

pub fn seed_dir(cell_dir: &Path, seed: u64) -> PathBuf {
    cell_dir.join(format!("seed{seed}"))
}

/// Spec identity for resuming: everything except the seed list.
fn resume_key(spec: &ExperimentSpec) -> ExperimentSpec {
    ExperimentSpec {
        seeds: Vec::new(),
        ..spec.effective()
    }
}

/// Create the cell directory and echo the effective spec into it. Refuses to
/// mix results of a different spec into an existing directory.
pub(crate) fn prepare_cell(spec: &ExperimentSpec) -> Result<PathBuf> {
    spec.validate()?;
    let dir = cell_dir(spec);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let config_path = dir.join("config.json");
    if config_path.exists() {
        let previous: ExperimentSpec = read_json(&config_path)?;
        if resume_key(&previous) != resume_key(spec) {
            return Err(Error::Config(format!(
                "{} holds results of a different experiment spec",
                dir.display()
            )));
        }
    }
    write_json_atomic(&config_path, &spec.effective())?;
    Ok(dir)
}

fn completed_manifest(spec: &ExperimentSpec, dir: &Path) -> Option<SeedManifest> {
    let manifest: SeedManifest = read_json(&dir.join("manifest.json")).ok()?;
    let rows = read_metrics(dir.join("metrics.csv")).ok()?;
    (manifest.status == SeedStatus::Completed
        && manifest.total_iterations == spec.total_iterations
        && rows.len() == spec.total_iterations
        && dir.join("checkpoint.json").exists())
    .then_some(manifest)
}

/// Train one seed into `<cell_dir>/seed<k>/`, skipping it if a completed
/// result is already there. Training failures are recorded in the manifest
/// and returned as a failed status; only I/O problems are errors.
pub(crate) fn run_seed(spec: &ExperimentSpec, cell_dir: &Path, seed: u64) -> Result<SeedManifest> {
    let dir = seed_dir(cell_dir, seed);
    if let Some(done) = completed_manifest(spec, &dir) {
        return Ok(done);
    }
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let manifest_path = dir.join("manifest.json");
    let mut manifest = SeedManifest {
        seed,
        status: SeedStatus::Running,
        iterations_completed: 0,
        total_iterations: spec.total_iterations,
        final_eval_mean: None,
        error: None,
    };
    write_json_atomic(&manifest_path, &manifest)?;
    let _ = std::fs::remove_file(dir.join("checkpoint.json"));

    let mode = spec.mode_label();
    let mut writer = MetricsWriter::create(dir.join("metrics.csv"))?;
    let mut io_error = None;
    let result = train(spec, seed, |record| {
        writer
            .append(&MetricsRow::from_record(record, &mode, spec.n_agents, seed))
            .inspect_err(|e| io_error = Some(e.to_string()))
    });
    if let Some(msg) = io_error {
        return Err(Error::Metrics {
            path: dir.join("metrics.csv").display().to_string(),
            reason: msg,
        });
    }
    match result {
        Ok(outcome) => {
            manifest.iterations_completed = outcome.history.len();
            manifest.final_eval_mean = outcome.history.last().map(|r| r.eval_mean);
            Checkpoint {
                env: spec.effective().env,
                flags: spec.flags,
                n_agents: spec.n_agents,
                seed,
                iterations: outcome.history.len(),
                bank: outcome.bank,
            }
            .save(dir.join("checkpoint.json"))?;
            manifest.status = SeedStatus::Completed;
        }
        Err(e) => {
            manifest.iterations_completed = read_metrics(dir.join("metrics.csv")).map_or(0, |r| r.len());
            manifest.status = SeedStatus::Failed;
            manifest.error = Some(e.to_string());
        }
    }
    write_json_atomic(&manifest_path, &manifest)?;
    Ok(manifest)
}

/// Worker pool size: `COMPETE_RL_THREADS` if set, else available parallelism.
pub fn worker_count() -> usize {
    std::env::var("COMPETE_RL_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub(crate) fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Train every seed of `spec`, seeds running concurrently on the worker
/// pool. Each seed is trained single-threaded, so results do not depend on
/// scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let dir = prepare_cell(spec)?;
    let seeds = with_pool(|| {
        spec.seeds
            .par_iter()
            .map(|&seed| run_seed(spec, &dir, seed))
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(ExperimentReport { cell_dir: dir, seeds })
}

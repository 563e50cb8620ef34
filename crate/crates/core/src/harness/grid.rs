use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::metrics::{read_metrics, MetricsRow};
use super::run::{experiment_root, prepare_cell, run_seed, seed_dir, with_pool};
use crate::error::{Error, Result};
use crate::experiment::ExperimentSpec;
use crate::orchestrator::ModeFlags;

pub const SUMMARY_HEADER: &str = "env,mode,n_agents,run,seeds,n_seeds,n_effective,mean,std";

/// Fraction of final iterations averaged as the post-convergence score.
pub const CONVERGENCE_FRACTION: f64 = 0.1;

/// Number of final rows in the convergence window.
pub fn window_len(total_iterations: usize, fraction: f64) -> usize {
    ((fraction * total_iterations as f64).ceil() as usize).max(1)
}

/// Post-convergence score of one (mode, agent count) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub env: String,
    /// Mode as requested, e.g. `Sh-Decent-Comp`, even when the cell
    /// collapsed onto the single-agent run.
    pub mode: String,
    pub n_agents: usize,
    /// Run directory, relative to the summary file.
    pub run: String,
    pub seeds: Vec<u64>,
    /// Seeds whose metrics cover every iteration.
    pub n_effective: usize,
    pub mean: f64,
    /// Sample standard deviation across seeds; zero for a single seed.
    pub std: f64,
}

/// Mean and spread across seeds of one run, per iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub run: String,
    pub label: String,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSummary {
    pub total_iterations: usize,
    pub rows: Vec<SummaryRow>,
    pub curves: Vec<Curve>,
}

/// Seed-ordered per-seed metrics of a run, keeping only complete runs.
fn load_complete(run_dir: &Path, seeds: &[u64], total_iterations: usize) -> Vec<(u64, Vec<MetricsRow>)> {
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    sorted
        .into_iter()
        .filter_map(|seed| {
            let rows = read_metrics(seed_dir(run_dir, seed).join("metrics.csv")).ok()?;
            (rows.len() == total_iterations && total_iterations > 0).then_some((seed, rows))
        })
        .collect()
}

/// Arithmetic mean and sample standard deviation.
pub fn mean_sample_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-seed mean evaluation reward over the final `window` rows.
pub fn window_mean(rows: &[MetricsRow], window: usize) -> f64 {
    let tail = &rows[rows.len().saturating_sub(window)..];
    tail.iter().map(|r| r.eval_mean_ep_reward).sum::<f64>() / tail.len() as f64
}

/// Score one run from its metrics files alone.
pub fn score_run(run_dir: &Path, seeds: &[u64], total_iterations: usize, fraction: f64) -> (usize, f64, f64) {
    let window = window_len(total_iterations, fraction);
    let per_seed: Vec<f64> = load_complete(run_dir, seeds, total_iterations)
        .iter()
        .map(|(_, rows)| window_mean(rows, window))
        .collect();
    let (mean, std) = mean_sample_std(&per_seed);
    (per_seed.len(), mean, std)
}

pub fn curve_for(run_dir: &Path, run: &str, seeds: &[u64], total_iterations: usize) -> Curve {
    let runs = load_complete(run_dir, seeds, total_iterations);
    let (mean, std) = (0..total_iterations)
        .map(|t| {
            let xs: Vec<f64> = runs.iter().map(|(_, rows)| rows[t].eval_mean_ep_reward).collect();
            mean_sample_std(&xs)
        })
        .unzip();
    Curve {
        run: run.to_string(),
        label: run.replace('_', " "),
        mean,
        std,
    }
}

/// Effective spec of a grid cell: every mode collapses to the single-agent
/// baseline at one agent.
pub fn cell_spec(base: &ExperimentSpec, flags: ModeFlags, n_agents: usize) -> ExperimentSpec {
    ExperimentSpec {
        flags: if n_agents == 1 { ModeFlags::SH_DECENT } else { flags },
        n_agents,
        ..base.clone()
    }
}

/// Build the summary of a grid whose cells already ran under `root`.
pub fn summarize(
    root: &Path,
    base: &ExperimentSpec,
    modes: &[ModeFlags],
    agent_counts: &[usize],
) -> Result<GridSummary> {
    if modes.is_empty() || agent_counts.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let env = base.env.kind.to_string();
    let mut rows = Vec::new();
    let mut curves: BTreeMap<String, Curve> = BTreeMap::new();
    let mut order = Vec::new();
    for &flags in modes {
        for &n in agent_counts {
            let cell = cell_spec(base, flags, n);
            let run = cell.cell_dir_name();
            let run_dir = root.join(&run);
            let (n_effective, mean, std) =
                score_run(&run_dir, &base.seeds, base.total_iterations, CONVERGENCE_FRACTION);
            rows.push(SummaryRow {
                env: env.clone(),
                mode: flags.to_string(),
                n_agents: n,
                run: run.clone(),
                seeds: base.seeds.clone(),
                n_effective,
                mean,
                std,
            });
            if !curves.contains_key(&run) {
                order.push(run.clone());
                curves.insert(run.clone(), curve_for(&run_dir, &run, &base.seeds, base.total_iterations));
            }
        }
    }
    Ok(GridSummary {
        total_iterations: base.total_iterations,
        rows,
        curves: order.into_iter().map(|r| curves.remove(&r).expect("inserted")).collect(),
    })
}

/// Problems met while running a grid, one entry per failed cell or seed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GridIssues(pub Vec<String>);

/// Run the Cartesian product of modes and agent counts, then summarize.
///
/// Cells that coincide (every mode at one agent) run once. Seed tasks of
/// all cells share one worker pool; a failing cell or seed is reported in
/// the returned issues and the rest of the grid proceeds. Writes
/// `summary.csv` under `<output_dir>/<name>/`.
pub fn run_grid(
    base: &ExperimentSpec,
    modes: &[ModeFlags],
    agent_counts: &[usize],
) -> Result<(GridSummary, GridIssues)> {
    if modes.is_empty() || agent_counts.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut cells: Vec<ExperimentSpec> = Vec::new();
    for &flags in modes {
        for &n in agent_counts {
            let cell = cell_spec(base, flags, n);
            cell.validate()
                .map_err(|e| Error::Config(format!("grid cell {}: {e}", cell.cell_dir_name())))?;
            if !cells.iter().any(|c| c.cell_dir_name() == cell.cell_dir_name()) {
                cells.push(cell);
            }
        }
    }

    let mut issues = Vec::new();
    let mut tasks: Vec<(usize, PathBuf, u64)> = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        match prepare_cell(cell) {
            Ok(dir) => tasks.extend(cell.seeds.iter().map(|&s| (i, dir.clone(), s))),
            Err(e) => issues.push(format!("{}: {e}", cell.cell_dir_name())),
        }
    }
    let results = with_pool(|| {
        tasks
            .par_iter()
            .map(|(i, dir, seed)| run_seed(&cells[*i], dir, *seed))
            .collect::<Vec<_>>()
    })?;
    for ((i, _, seed), result) in tasks.iter().zip(results) {
        let name = cells[*i].cell_dir_name();
        match result {
            Ok(m) if m.error.is_some() => {
                issues.push(format!("{name} seed {seed}: {}", m.error.unwrap_or_default()))
            }
            Ok(_) => {}
            Err(e) => issues.push(format!("{name} seed {seed}: {e}")),
        }
    }

    let root = experiment_root(base);
    let summary = summarize(&root, base, modes, agent_counts)?;
    summary.write_csv(root.join("summary.csv"))?;
    Ok((summary, GridIssues(issues)))
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

impl GridSummary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SUMMARY_HEADER);
        out.push('\n');
        for r in &self.rows {
            let seeds: Vec<String> = r.seeds.iter().map(u64::to_string).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.env,
                r.mode,
                r.n_agents,
                r.run,
                seeds.join(";"),
                r.seeds.len(),
                r.n_effective,
                fmt_f64(r.mean),
                fmt_f64(r.std)
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Read `summary.csv` and reload curves from the run directories next to it.
    pub fn load(path: impl AsRef<Path>, total_iterations: Option<usize>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let bad = |reason: String| Error::Metrics {
            path: path.display().to_string(),
            reason,
        };
        let mut lines = text.lines();
        if lines.next() != Some(SUMMARY_HEADER) {
            return Err(bad("missing or unexpected header".into()));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(bad(format!("line {}: expected 9 fields", i + 2)));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("line {}: bad number `{s}`", i + 2)));
            let int = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("line {}: bad count `{s}`", i + 2)));
            let seeds = if f[4].is_empty() {
                Vec::new()
            } else {
                f[4].split(';')
                    .map(|s| s.parse::<u64>().map_err(|_| bad(format!("line {}: bad seed `{s}`", i + 2))))
                    .collect::<Result<Vec<_>>>()?
            };
            rows.push(SummaryRow {
                env: f[0].to_string(),
                mode: f[1].to_string(),
                n_agents: int(f[2])?,
                run: f[3].to_string(),
                seeds,
                n_effective: int(f[6])?,
                mean: num(f[7])?,
                std: num(f[8])?,
            });
        }
        if rows.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let root = path.parent().unwrap_or(Path::new("."));
        let total_iterations = match total_iterations {
            Some(t) => t,
            None => infer_iterations(root, &rows)?,
        };
        let mut curves: Vec<Curve> = Vec::new();
        for r in &rows {
            if !curves.iter().any(|c| c.run == r.run) {
                curves.push(curve_for(&root.join(&r.run), &r.run, &r.seeds, total_iterations));
            }
        }
        Ok(Self {
            total_iterations,
            rows,
            curves,
        })
    }
}

/// Iteration budget recorded in the first run's echoed config.
fn infer_iterations(root: &Path, rows: &[SummaryRow]) -> Result<usize> {
    let config = root.join(&rows[0].run).join("config.json");
    Ok(ExperimentSpec::from_file(&config)?.total_iterations)
}

impl fmt::Display for GridSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<14} {:<16} {:>3} {:>9} {:>12} {:>10}",
            "env", "mode", "N", "seeds", "mean", "std"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<14} {:<16} {:>3} {:>9} {:>12.3} {:>10.3}",
                r.env,
                r.mode,
                r.n_agents,
                format!("{}/{}", r.n_effective, r.seeds.len()),
                r.mean,
                r.std
            )?;
        }
        Ok(())
    }
}

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::orchestrator::IterationRecord;

pub const METRICS_HEADER: &str = "iteration,env_steps_total,mode,n_agents,seed,train_mean_ep_reward,\
eval_mean_ep_reward,eval_std,policy_loss,value_loss,entropy,clip_fraction,lr";

/// One line of a run's metrics file.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub iteration: usize,
    pub env_steps_total: u64,
    pub mode: String,
    pub n_agents: usize,
    pub seed: u64,
    pub train_mean_ep_reward: f64,
    pub eval_mean_ep_reward: f64,
    pub eval_std: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub lr: f64,
}

impl MetricsRow {
    pub fn from_record(record: &IterationRecord, mode: &str, n_agents: usize, seed: u64) -> Self {
        Self {
            iteration: record.iteration,
            env_steps_total: record.env_steps_total,
            mode: mode.to_string(),
            n_agents,
            seed,
            train_mean_ep_reward: record.train_mean_ep_reward,
            eval_mean_ep_reward: record.eval_mean,
            eval_std: record.eval_std,
            policy_loss: record.stats.policy_loss,
            value_loss: record.stats.value_loss,
            entropy: record.stats.entropy,
            clip_fraction: record.stats.clip_fraction,
            lr: record.stats.lr_used,
        }
    }

    /// Floats are written in shortest round-trip form, so parsing a line
    /// recovers the exact values.
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.iteration,
            self.env_steps_total,
            self.mode,
            self.n_agents,
            self.seed,
            self.train_mean_ep_reward,
            self.eval_mean_ep_reward,
            self.eval_std,
            self.policy_loss,
            self.value_loss,
            self.entropy,
            self.clip_fraction,
            self.lr
        )
    }

    pub fn parse_line(line: &str) -> std::result::Result<Self, String> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return Err(format!("expected 13 fields, found {}", fields.len()));
        }
        fn num<T: std::str::FromStr>(s: &str, name: &str) -> std::result::Result<T, String> {
            s.parse().map_err(|_| format!("bad {name} `{s}`"))
        }
        Ok(Self {
            iteration: num(fields[0], "iteration")?,
            env_steps_total: num(fields[1], "env_steps_total")?,
            mode: fields[2].to_string(),
            n_agents: num(fields[3], "n_agents")?,
            seed: num(fields[4], "seed")?,
            train_mean_ep_reward: num(fields[5], "train_mean_ep_reward")?,
            eval_mean_ep_reward: num(fields[6], "eval_mean_ep_reward")?,
            eval_std: num(fields[7], "eval_std")?,
            policy_loss: num(fields[8], "policy_loss")?,
            value_loss: num(fields[9], "value_loss")?,
            entropy: num(fields[10], "entropy")?,
            clip_fraction: num(fields[11], "clip_fraction")?,
            lr: num(fields[12], "lr")?,
        })
    }
}

/// Append-only metrics file; every row is flushed as soon as it is written.
pub struct MetricsWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl MetricsWriter {
    /// Creates (or truncates) the file and writes the header.
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut writer = Self {
            path,
            out: BufWriter::new(file),
        };
        writer.write_line(METRICS_HEADER)?;
        Ok(writer)
    }

    fn write_line(&mut self, line: &str) -> Result<()> {
        let path = &self.path;
        self.out
            .write_all(line.as_bytes())
            .and_then(|_| self.out.write_all(b"\n"))
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn append(&mut self, row: &MetricsRow) -> Result<()> {
        self.write_line(&row.to_csv_line())
    }
}

pub fn read_metrics(path: impl AsRef<Path>) -> Result<Vec<MetricsRow>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: String| Error::Metrics {
        path: path.display().to_string(),
        reason,
    };
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == METRICS_HEADER => {}
        _ => return Err(bad("missing or unexpected header".into())),
    }
    lines
        .enumerate()
        .map(|(i, line)| MetricsRow::parse_line(line).map_err(|r| bad(format!("line {}: {r}", i + 2))))
        .collect()
}

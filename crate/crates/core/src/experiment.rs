//! Experiment specification: the JSON document every run is driven by.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::{EnvKind, RaceConfig};
use crate::error::{Error, Result};
use crate::nn::HeadKind;
use crate::orchestrator::ModeFlags;
use crate::ppo::PpoConfig;

/// Race parameters, minus the agent count which lives on the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSpec {
    pub kind: EnvKind,
    pub dt: f64,
    pub horizon: usize,
    pub f_max: f64,
    pub c_d: f64,
    /// Control-cost weight; defaults per kind when absent.
    pub w_ctrl: Option<f64>,
    pub rho: f64,
    pub kappa: f64,
    /// Put the agent's own block first in the competitive observation.
    pub self_first: bool,
}

impl Default for EnvSpec {
    fn default() -> Self {
        Self {
            w_ctrl: None,
            ..Self::from_config(&RaceConfig::new(EnvKind::PointRacer, 1))
        }
    }
}

impl EnvSpec {
    pub fn from_config(c: &RaceConfig) -> Self {
        Self {
            kind: c.kind,
            dt: c.dt,
            horizon: c.horizon,
            f_max: c.f_max,
            c_d: c.c_d,
            w_ctrl: Some(c.w_ctrl),
            rho: c.rho,
            kappa: c.kappa,
            self_first: c.self_first,
        }
    }

    pub fn race_config(&self, n_agents: usize) -> RaceConfig {
        RaceConfig {
            kind: self.kind,
            n_agents,
            dt: self.dt,
            horizon: self.horizon,
            f_max: self.f_max,
            c_d: self.c_d,
            w_ctrl: self.w_ctrl.unwrap_or(self.kind.default_w_ctrl()),
            rho: self.rho,
            kappa: self.kappa,
            self_first: self.self_first,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Directory-safe run name: letters, digits, `_`, `-`, `.`.
    pub name: String,
    pub env: EnvSpec,
    pub flags: ModeFlags,
    pub n_agents: usize,
    pub ppo: PpoConfig,
    pub total_iterations: usize,
    /// Whole episodes are collected until every agent has at least this many steps.
    pub steps_per_agent: usize,
    pub seeds: Vec<u64>,
    pub eval_episodes: usize,
    pub output_dir: PathBuf,
    pub head: HeadKind,
    pub hidden: Vec<usize>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            env: EnvSpec::default(),
            flags: ModeFlags::default(),
            n_agents: 1,
            ppo: PpoConfig::default(),
            total_iterations: 500,
            steps_per_agent: 5000,
            seeds: (0..10).collect(),
            eval_episodes: 20,
            output_dir: PathBuf::from("runs"),
            head: HeadKind::Gaussian,
            hidden: vec![64, 64],
        }
    }
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let safe = !self.name.is_empty()
            && self.name != "."
            && self.name != ".."
            && self.name.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c));
        if !safe {
            return Err(Error::Config(format!("name `{}` is not filesystem-safe", self.name)));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if self.seeds.iter().collect::<HashSet<_>>().len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        if self.steps_per_agent == 0 {
            return Err(Error::Config("steps_per_agent must be at least 1".into()));
        }
        if self.eval_episodes == 0 {
            return Err(Error::Config("eval_episodes must be at least 1".into()));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::Config("hidden layer widths must be positive".into()));
        }
        self.flags.validate(self.n_agents)?;
        self.race_config().validate()?;
        self.ppo_config().validate()
    }

    pub fn race_config(&self) -> RaceConfig {
        self.env.race_config(self.n_agents)
    }

    /// PPO settings with the iteration budget filled in.
    pub fn ppo_config(&self) -> PpoConfig {
        PpoConfig {
            total_iterations: self.total_iterations,
            ..self.ppo.clone()
        }
    }

    /// Mode label of this run, `SA` for the single-agent baseline.
    pub fn mode_label(&self) -> String {
        self.flags.label(self.n_agents)
    }

    /// Directory name of this run's cell, e.g. `Sh-Decent-Comp_N3`.
    pub fn cell_dir_name(&self) -> String {
        format!("{}_N{}", self.mode_label(), self.n_agents)
    }

    /// The spec with every default made explicit, as echoed next to results.
    pub fn effective(&self) -> Self {
        let mut spec = self.clone();
        spec.env.w_ctrl = Some(spec.race_config().w_ctrl);
        spec
    }
}

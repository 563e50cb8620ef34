//! One-dimensional N-agent race environments.
//!
//! Every agent runs its own copy of the same dynamics; racers never touch
//! each other. Competition exists only through the observation vectors built
//! here, which can append the relative position and velocity of every racer
//! to an agent's own proprioceptive reading.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnvKind {
    /// Drag-limited point mass. Full throttle (a = 1) is optimal.
    PointRacer,
    /// Point mass whose thrust is scaled by a stamina reserve that drains
    /// with effort and regenerates at rest, forcing a pacing trade-off.
    StaminaRacer,
}

impl EnvKind {
    pub fn proprio_dim(self) -> usize {
        match self {
            EnvKind::PointRacer => 1,
            EnvKind::StaminaRacer => 2,
        }
    }

    pub fn action_dim(self) -> usize {
        1
    }

    pub fn default_w_ctrl(self) -> f64 {
        match self {
            EnvKind::PointRacer => 0.1,
            EnvKind::StaminaRacer => 0.05,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::PointRacer => "PointRacer",
            EnvKind::StaminaRacer => "StaminaRacer",
        }
    }
}

impl std::str::FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pointracer" | "point" => Ok(EnvKind::PointRacer),
            "staminaracer" | "stamina" => Ok(EnvKind::StaminaRacer),
            _ => Err(Error::Config(format!("unknown env kind `{s}`"))),
        }
    }
}

impl std::fmt::Display for EnvKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaceConfig {
    pub kind: EnvKind,
    pub n_agents: usize,
    pub dt: f64,
    pub horizon: usize,
    pub f_max: f64,
    pub c_d: f64,
    pub w_ctrl: f64,
    pub rho: f64,
    pub kappa: f64,
    /// Put the agent's own (always zero) block first in the competitive
    /// observation instead of agent-index order.
    pub self_first: bool,
}

impl RaceConfig {
    pub fn new(kind: EnvKind, n_agents: usize) -> Self {
        Self {
            kind,
            n_agents,
            dt: 0.05,
            horizon: 500,
            f_max: 1.0,
            c_d: 0.1,
            w_ctrl: kind.default_w_ctrl(),
            rho: 0.05,
            kappa: 0.15,
            self_first: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::Config("n_agents must be at least 1".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if !(self.c_d > 0.0 && self.c_d.is_finite()) {
            return Err(Error::Config(format!("c_d must be positive, got {}", self.c_d)));
        }
        for (name, v) in [
            ("f_max", self.f_max),
            ("w_ctrl", self.w_ctrl),
            ("rho", self.rho),
            ("kappa", self.kappa),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// Drag-limited top speed at full throttle.
    pub fn terminal_velocity(&self) -> f64 {
        (self.f_max / self.c_d).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentPhys {
    pub x: f64,
    pub v: f64,
    pub stamina: f64,
}

impl AgentPhys {
    pub const START: AgentPhys = AgentPhys {
        x: 0.0,
        v: 0.0,
        stamina: 1.0,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaceState {
    pub agents: Vec<AgentPhys>,
    pub t: usize,
}

impl RaceState {
    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: RaceState,
    pub rewards: Vec<f64>,
    pub done: bool,
}

/// Start state: every racer at rest on the line with full stamina.
///
/// The seed is accepted for interface symmetry; the start is deterministic.
pub fn reset(config: &RaceConfig, _seed: u64) -> RaceState {
    RaceState {
        agents: vec![AgentPhys::START; config.n_agents],
        t: 0,
    }
}

/// Advance one agent by one step. Returns the new physical state and reward.
pub fn step_agent(agent: &AgentPhys, action: f64, config: &RaceConfig) -> (AgentPhys, f64) {
    let a = action.clamp(-1.0, 1.0);
    let drag = config.c_d * agent.v * agent.v.abs();
    let (v, stamina) = match config.kind {
        EnvKind::PointRacer => (agent.v + config.dt * (config.f_max * a - drag), 1.0),
        EnvKind::StaminaRacer => {
            let m = agent.stamina;
            let v = agent.v + config.dt * (config.f_max * a * m - drag);
            let m = (m + config.dt * (config.rho * (1.0 - m) - config.kappa * a.abs())).clamp(0.0, 1.0);
            (v, m)
        }
    };
    let x = agent.x + config.dt * v;
    let reward = v - config.w_ctrl * a * a;
    (AgentPhys { x, v, stamina }, reward)
}

pub fn step(state: &RaceState, actions: &[f64], config: &RaceConfig) -> Result<StepOutcome> {
    if state.t >= config.horizon {
        return Err(Error::EpisodeFinished);
    }
    if actions.len() != state.n_agents() {
        return Err(Error::DimensionMismatch {
            context: "step actions",
            expected: state.n_agents(),
            actual: actions.len(),
        });
    }
    let (agents, rewards) = state
        .agents
        .iter()
        .zip(actions)
        .map(|(agent, &a)| step_agent(agent, a, config))
        .unzip();
    let t = state.t + 1;
    Ok(StepOutcome {
        state: RaceState { agents, t },
        rewards,
        done: t == config.horizon,
    })
}

/// The agent's own sensor reading. Absolute position is never included.
pub fn proprio_obs(agent: &AgentPhys, kind: EnvKind) -> Vec<f64> {
    let mut out = Vec::with_capacity(kind.proprio_dim());
    push_proprio(&mut out, agent, kind);
    out
}

fn push_proprio(out: &mut Vec<f64>, agent: &AgentPhys, kind: EnvKind) {
    match kind {
        EnvKind::PointRacer => out.push(agent.v),
        EnvKind::StaminaRacer => {
            out.push(agent.v);
            out.push(agent.stamina);
        }
    }
}

/// Relative observation of agent `i`: blocks `[x_j - x_i, v_j - v_i]` for
/// every racer `j` in index order, including `i` itself.
pub fn competitive_obs(state: &RaceState, i: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * state.n_agents());
    push_competitive(&mut out, state, i, BlockOrder::AgentIndex);
    out
}

fn push_competitive(out: &mut Vec<f64>, state: &RaceState, i: usize, order: BlockOrder) {
    let me = state.agents[i];
    let mut block = |j: usize| {
        let other = state.agents[j];
        out.push(other.x - me.x);
        out.push(other.v - me.v);
    };
    match order {
        BlockOrder::AgentIndex => (0..state.n_agents()).for_each(&mut block),
        BlockOrder::SelfFirst => {
            block(i);
            (0..state.n_agents()).filter(|&j| j != i).for_each(block);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxKind {
    None,
    Competitive,
    Noise,
    ZeroPad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlockOrder {
    #[default]
    AgentIndex,
    SelfFirst,
}

/// Layout of an observation vector: proprioceptive block followed by an
/// optional auxiliary block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObsLayout {
    pub kind: EnvKind,
    pub proprio_dim: usize,
    pub aux_dim: usize,
    pub aux_kind: AuxKind,
    pub order: BlockOrder,
}

impl ObsLayout {
    /// `n_train` is the number of racers the policy was trained with; the
    /// auxiliary block always has two entries per racer.
    pub fn new(kind: EnvKind, aux_kind: AuxKind, n_train: usize) -> Self {
        let aux_dim = match aux_kind {
            AuxKind::None => 0,
            _ => 2 * n_train,
        };
        Self {
            kind,
            proprio_dim: kind.proprio_dim(),
            aux_dim,
            aux_kind,
            order: BlockOrder::AgentIndex,
        }
    }

    pub fn with_order(mut self, order: BlockOrder) -> Self {
        self.order = order;
        self
    }

    pub fn total_dim(&self) -> usize {
        self.proprio_dim + self.aux_dim
    }
}

pub fn build_observation<R: Rng + ?Sized>(
    state: &RaceState,
    i: usize,
    layout: &ObsLayout,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if i >= state.n_agents() {
        return Err(Error::DimensionMismatch {
            context: "observation agent index",
            expected: state.n_agents(),
            actual: i,
        });
    }
    if layout.proprio_dim != layout.kind.proprio_dim() {
        return Err(Error::DimensionMismatch {
            context: "observation proprio block",
            expected: layout.kind.proprio_dim(),
            actual: layout.proprio_dim,
        });
    }
    if layout.aux_kind == AuxKind::Competitive && layout.aux_dim != 2 * state.n_agents() {
        return Err(Error::DimensionMismatch {
            context: "competitive block",
            expected: 2 * state.n_agents(),
            actual: layout.aux_dim,
        });
    }
    if layout.aux_kind != AuxKind::None && layout.aux_dim % 2 != 0 {
        return Err(Error::Config(format!("aux_dim must be even, got {}", layout.aux_dim)));
    }

    let mut out = Vec::with_capacity(layout.total_dim());
    push_proprio(&mut out, &state.agents[i], layout.kind);
    match layout.aux_kind {
        AuxKind::None => {}
        AuxKind::Competitive => push_competitive(&mut out, state, i, layout.order),
        AuxKind::Noise => out.extend((0..layout.aux_dim).map(|_| rng.sample::<f64, _>(StandardNormal))),
        AuxKind::ZeroPad => out.resize(layout.total_dim(), 0.0),
    }
    Ok(out)
}

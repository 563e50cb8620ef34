use crate::error::{Error, Result};

/// One recorded environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub obs: Vec<f64>,
    /// Critic input when it differs from `obs` (centralized critic).
    pub critic_obs: Option<Vec<f64>>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub logp: f64,
    pub value: f64,
    pub done: bool,
}

/// One agent's episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub agent_id: usize,
    pub steps: Vec<Step>,
    /// Critic estimate at the state following the last step.
    pub bootstrap_value: f64,
    /// The episode ended on the time limit rather than in a terminal state.
    pub truncated: bool,
}

impl Trajectory {
    pub fn new(agent_id: usize) -> Self {
        Self {
            agent_id,
            steps: Vec::new(),
            bootstrap_value: 0.0,
            truncated: true,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn episode_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.value).collect()
    }

    /// Flags for advantage estimation: only genuine terminal states cut the
    /// bootstrap; a time-limit end keeps it.
    pub fn terminal_flags(&self) -> Vec<bool> {
        self.steps.iter().map(|s| s.done && !self.truncated).collect()
    }
}

/// Pooled on-policy experience from one sampling phase.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBuffer {
    pub trajectories: Vec<Trajectory>,
}

impl RolloutBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, trajectory: Trajectory) {
        self.trajectories.push(trajectory);
    }

    /// Total recorded steps across trajectories.
    pub fn len(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Concatenate another buffer's trajectories onto this one.
    pub fn extend(&mut self, other: RolloutBuffer) {
        self.trajectories.extend(other.trajectories);
    }

    pub fn steps(&self) -> impl Iterator<Item = &Step> {
        self.trajectories.iter().flat_map(|t| &t.steps)
    }

    /// Checks that every step shares one observation, critic-input and action
    /// dimension and that `done` appears only on final records. Returns
    /// `(obs_dim, critic_dim, action_dim)`.
    pub fn dims(&self) -> Result<(usize, usize, usize)> {
        let first = self.steps().next().ok_or(Error::EmptyInput("rollout buffer"))?;
        let dims_of = |s: &Step| {
            (
                s.obs.len(),
                s.critic_obs.as_ref().map_or(s.obs.len(), Vec::len),
                s.action.len(),
                s.critic_obs.is_some(),
            )
        };
        let expected = dims_of(first);
        for s in self.steps() {
            let got = dims_of(s);
            if got != expected {
                return Err(Error::DimensionMismatch {
                    context: "rollout buffer step",
                    expected: expected.0 + expected.1 + expected.2,
                    actual: got.0 + got.1 + got.2,
                });
            }
        }
        for t in &self.trajectories {
            if t.steps.iter().rev().skip(1).any(|s| s.done) {
                return Err(Error::Config("done flag before the final record".into()));
            }
        }
        Ok((expected.0, expected.1, expected.2))
    }
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::dist;
use super::mlp::{Mlp, MlpGrads};
use crate::error::{Error, Result};

/// Scale applied to the policy's output-layer weights at initialization.
pub const POLICY_OUTPUT_SCALE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    #[default]
    Gaussian,
    Beta,
}

impl HeadKind {
    /// Trunk outputs needed per action dimension.
    pub fn outputs_per_action(self) -> usize {
        match self {
            HeadKind::Gaussian => 1,
            HeadKind::Beta => 2,
        }
    }
}

/// Policy network: MLP trunk plus distribution head.
#[derive(Debug, Clone, PartialEq)]
pub struct Actor {
    pub trunk: Mlp,
    pub head: HeadKind,
    /// State-independent log standard deviations (Gaussian head only).
    pub log_std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorGrads {
    pub trunk: MlpGrads,
    pub log_std: Vec<f64>,
}

impl ActorGrads {
    pub fn segments(&self) -> Vec<&[f64]> {
        let mut segs = self.trunk.segments();
        if !self.log_std.is_empty() {
            segs.push(&self.log_std);
        }
        segs
    }
}

impl Actor {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        hidden: &[usize],
        action_dim: usize,
        head: HeadKind,
        rng: &mut R,
    ) -> Result<Self> {
        let mut dims = vec![obs_dim];
        dims.extend_from_slice(hidden);
        dims.push(action_dim * head.outputs_per_action());
        let trunk = Mlp::new(&dims, POLICY_OUTPUT_SCALE, rng)?;
        let log_std = match head {
            HeadKind::Gaussian => vec![0.0; action_dim],
            HeadKind::Beta => Vec::new(),
        };
        Ok(Self { trunk, head, log_std })
    }

    pub fn obs_dim(&self) -> usize {
        self.trunk.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.trunk.output_dim() / self.head.outputs_per_action()
    }

    pub fn log_prob_from_out(&self, out: &[f64], action: &[f64]) -> f64 {
        match self.head {
            HeadKind::Gaussian => dist::gaussian_logprob(out, &self.log_std, action),
            HeadKind::Beta => dist::beta_logprob(out, action),
        }
    }

    pub fn entropy_from_out(&self, out: &[f64]) -> f64 {
        match self.head {
            HeadKind::Gaussian => dist::gaussian_entropy(&self.log_std),
            HeadKind::Beta => dist::beta_entropy(out),
        }
    }

    pub fn mean_from_out(&self, out: &[f64]) -> Vec<f64> {
        match self.head {
            HeadKind::Gaussian => out.to_vec(),
            HeadKind::Beta => dist::beta_mean(out),
        }
    }

    /// Sample an action and return it with its log-probability.
    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<(Vec<f64>, f64)> {
        let out = self.trunk.predict(obs)?;
        let action = match self.head {
            HeadKind::Gaussian => dist::gaussian_sample(&out, &self.log_std, rng),
            HeadKind::Beta => dist::beta_sample(&out, rng),
        };
        let logp = self.log_prob_from_out(&out, &action);
        Ok((action, logp))
    }

    pub fn log_prob(&self, obs: &[f64], action: &[f64]) -> Result<f64> {
        let out = self.trunk.predict(obs)?;
        Ok(self.log_prob_from_out(&out, action))
    }

    /// Deterministic action: the distribution mean.
    pub fn mean_action(&self, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.mean_from_out(&self.trunk.predict(obs)?))
    }

    pub fn zero_grads(&self) -> ActorGrads {
        ActorGrads {
            trunk: self.trunk.zero_grads(),
            log_std: vec![0.0; self.log_std.len()],
        }
    }

    pub fn segments_mut(&mut self) -> Vec<&mut [f64]> {
        let mut segs = self.trunk.segments_mut();
        if !self.log_std.is_empty() {
            segs.push(&mut self.log_std);
        }
        segs
    }

    fn segment_lens(&self) -> Vec<usize> {
        self.zero_grads().segments().iter().map(|s| s.len()).collect()
    }
}

/// Policy and value networks with their optimizer states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamSetDoc", into = "ParamSetDoc")]
pub struct ParamSet {
    pub actor: Actor,
    pub critic: Mlp,
    pub adam_actor: AdamState,
    pub adam_critic: AdamState,
}

impl ParamSet {
    /// Initializes the actor first, then the critic, from the same stream.
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        critic_dim: usize,
        action_dim: usize,
        head: HeadKind,
        hidden: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        let actor = Actor::new(obs_dim, hidden, action_dim, head, rng)?;
        let mut critic_dims = vec![critic_dim];
        critic_dims.extend_from_slice(hidden);
        critic_dims.push(1);
        let critic = Mlp::new(&critic_dims, 1.0, rng)?;
        let adam_actor = AdamState::new(actor.segment_lens());
        let adam_critic = AdamState::new(critic.zero_grads().segments().iter().map(|s| s.len()));
        Ok(Self {
            actor,
            critic,
            adam_actor,
            adam_critic,
        })
    }

    pub fn value(&self, critic_obs: &[f64]) -> Result<f64> {
        Ok(self.critic.predict(critic_obs)?[0])
    }

    pub fn critic_dim(&self) -> usize {
        self.critic.input_dim()
    }

    pub fn is_finite(&self) -> bool {
        self.actor.trunk.is_finite() && self.actor.log_std.iter().all(|x| x.is_finite()) && self.critic.is_finite()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamSetDoc {
    head: HeadKind,
    actor: Mlp,
    log_std: Option<Vec<f64>>,
    critic: Mlp,
    adam_actor: AdamState,
    adam_critic: AdamState,
}

impl From<ParamSet> for ParamSetDoc {
    fn from(p: ParamSet) -> Self {
        let log_std = match p.actor.head {
            HeadKind::Gaussian => Some(p.actor.log_std),
            HeadKind::Beta => None,
        };
        ParamSetDoc {
            head: p.actor.head,
            actor: p.actor.trunk,
            log_std,
            critic: p.critic,
            adam_actor: p.adam_actor,
            adam_critic: p.adam_critic,
        }
    }
}

impl TryFrom<ParamSetDoc> for ParamSet {
    type Error = Error;

    fn try_from(doc: ParamSetDoc) -> Result<Self> {
        let bad = |why: &str| Error::Config(format!("malformed parameter set: {why}"));
        let per = doc.head.outputs_per_action();
        if doc.actor.output_dim() % per != 0 {
            return Err(bad("actor output does not fit head"));
        }
        let action_dim = doc.actor.output_dim() / per;
        let log_std = match (doc.head, doc.log_std) {
            (HeadKind::Gaussian, Some(ls)) if ls.len() == action_dim && ls.iter().all(|x| x.is_finite()) => ls,
            (HeadKind::Beta, None) => Vec::new(),
            _ => return Err(bad("log_std does not match head")),
        };
        if doc.critic.output_dim() != 1 {
            return Err(bad("critic must have scalar output"));
        }
        let actor = Actor {
            trunk: doc.actor,
            head: doc.head,
            log_std,
        };
        let fits = |adam: &AdamState, lens: &[usize]| {
            adam.m.len() == lens.len()
                && adam.v.len() == lens.len()
                && adam.m.iter().zip(&adam.v).zip(lens).all(|((m, v), &n)| m.len() == n && v.len() == n)
        };
        let critic_lens: Vec<usize> = doc.critic.zero_grads().segments().iter().map(|s| s.len()).collect();
        if !fits(&doc.adam_actor, &actor.segment_lens()) || !fits(&doc.adam_critic, &critic_lens) {
            return Err(bad("optimizer moments do not match parameters"));
        }
        Ok(ParamSet {
            actor,
            critic: doc.critic,
            adam_actor: doc.adam_actor,
            adam_critic: doc.adam_critic,
        })
    }
}

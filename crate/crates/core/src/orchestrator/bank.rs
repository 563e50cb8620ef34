use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mode::Sharing;
use crate::error::{Error, Result};
use crate::nn::{HeadKind, ParamSet};

/// The parameter sets acting in an experiment: one shared by every agent,
/// or one per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyBank {
    pub sharing: Sharing,
    pub n_agents: usize,
    pub params: Vec<ParamSet>,
}

/// Network shapes for a bank.
#[derive(Debug, Clone, PartialEq)]
pub struct NetShape {
    pub obs_dim: usize,
    pub critic_dim: usize,
    pub action_dim: usize,
    pub head: HeadKind,
    pub hidden: Vec<usize>,
}

impl PolicyBank {
    /// Separate banks initialize agent 0's networks first, then agent 1's,
    /// all from the same stream.
    pub fn new<R: Rng + ?Sized>(sharing: Sharing, n_agents: usize, shape: &NetShape, rng: &mut R) -> Result<Self> {
        let n_sets = match sharing {
            Sharing::Shared => 1,
            Sharing::Separate => n_agents,
        };
        let params = (0..n_sets)
            .map(|_| {
                ParamSet::new(
                    shape.obs_dim,
                    shape.critic_dim,
                    shape.action_dim,
                    shape.head,
                    &shape.hidden,
                    rng,
                )
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            sharing,
            n_agents,
            params,
        })
    }

    /// Index of the parameter set driving agent `i`.
    pub fn set_index(&self, agent: usize) -> usize {
        match self.sharing {
            Sharing::Shared => 0,
            Sharing::Separate => agent,
        }
    }

    pub fn for_agent(&self, agent: usize) -> &ParamSet {
        &self.params[self.set_index(agent)]
    }

    pub fn validate(&self) -> Result<()> {
        let expected = match self.sharing {
            Sharing::Shared => 1,
            Sharing::Separate => self.n_agents,
        };
        if self.params.len() != expected || expected == 0 {
            return Err(Error::DimensionMismatch {
                context: "policy bank size",
                expected,
                actual: self.params.len(),
            });
        }
        let first = &self.params[0];
        for p in &self.params[1..] {
            if p.actor.obs_dim() != first.actor.obs_dim() || p.critic_dim() != first.critic_dim() {
                return Err(Error::Config("parameter sets in one bank differ in shape".into()));
            }
        }
        Ok(())
    }
}

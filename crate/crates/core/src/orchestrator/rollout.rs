use rand::Rng;

use super::bank::PolicyBank;
use super::mode::{CriticInput, ModeFlags};
use crate::env::{self, BlockOrder, EnvKind, ObsLayout, RaceConfig, RaceState};
use crate::error::{Error, Result};
use crate::ppo::{RolloutBuffer, Step, Trajectory};
use crate::rng::SeedStreams;

/// Centralized critic input for agent `i`: every agent's proprioceptive
/// block in index order, then the auxiliary part of `own_obs` (whatever
/// follows its proprioceptive block).
pub fn global_critic_input(state: &RaceState, kind: EnvKind, own_obs: &[f64]) -> Vec<f64> {
    let p = kind.proprio_dim();
    let aux = own_obs.get(p..).unwrap_or(&[]);
    let mut out = Vec::with_capacity(state.n_agents() * p + aux.len());
    for agent in &state.agents {
        out.extend(env::proprio_obs(agent, kind));
    }
    out.extend_from_slice(aux);
    out
}

/// Actor observation layout for training, honoring the block-order switch.
pub fn training_layout(config: &RaceConfig, flags: &ModeFlags) -> ObsLayout {
    let order = if config.self_first {
        BlockOrder::SelfFirst
    } else {
        BlockOrder::AgentIndex
    };
    flags.obs_layout(config.kind, config.n_agents).with_order(order)
}

struct AgentView {
    obs: Vec<f64>,
    critic_obs: Option<Vec<f64>>,
}

fn observe_all<R: Rng + ?Sized>(
    state: &RaceState,
    config: &RaceConfig,
    layout: &ObsLayout,
    flags: &ModeFlags,
    noise: &mut R,
    episode: usize,
) -> Result<Vec<AgentView>> {
    (0..state.n_agents())
        .map(|i| {
            let obs = env::build_observation(state, i, layout, noise)?;
            if obs.iter().any(|x| !x.is_finite()) {
                return Err(Error::Divergence(format!(
                    "non-finite observation for agent {i} in episode {episode}"
                )));
            }
            let critic_obs = match flags.critic_input {
                CriticInput::Decentralized => None,
                CriticInput::Centralized => Some(global_critic_input(state, config.kind, &obs)),
            };
            Ok(AgentView { obs, critic_obs })
        })
        .collect()
}

fn check_bank(bank: &PolicyBank, config: &RaceConfig, layout: &ObsLayout, flags: &ModeFlags) -> Result<()> {
    bank.validate()?;
    if bank.n_agents != config.n_agents {
        return Err(Error::DimensionMismatch {
            context: "bank agent count",
            expected: config.n_agents,
            actual: bank.n_agents,
        });
    }
    let p = &bank.params[0];
    let critic_dim = flags.critic_dim(config.kind, config.n_agents);
    for (context, expected, actual) in [
        ("actor input", layout.total_dim(), p.actor.obs_dim()),
        ("critic input", critic_dim, p.critic_dim()),
        ("action", config.kind.action_dim(), p.actor.action_dim()),
    ] {
        if expected != actual {
            return Err(Error::DimensionMismatch {
                context,
                expected,
                actual,
            });
        }
    }
    Ok(())
}

/// Run whole episodes until every agent has recorded at least
/// `steps_per_agent` steps.
///
/// Returns one buffer per parameter set: a single pooled buffer when the
/// bank is shared, one per agent otherwise. Randomness is drawn in a fixed
/// order: one reset seed per episode from `env`; each step, observations for
/// agents `0..N` (noise blocks from `noise`), then per agent an action from
/// `policy`.
pub fn collect_rollouts(
    config: &RaceConfig,
    bank: &PolicyBank,
    flags: &ModeFlags,
    steps_per_agent: usize,
    rngs: &mut SeedStreams,
) -> Result<Vec<RolloutBuffer>> {
    let layout = training_layout(config, flags);
    check_bank(bank, config, &layout, flags)?;
    let n = config.n_agents;
    let n_episodes = steps_per_agent.div_ceil(config.horizon).max(1);
    let mut buffers = vec![RolloutBuffer::new(); bank.params.len()];

    for episode in 0..n_episodes {
        let mut state = env::reset(config, rngs.env.random());
        let mut trajectories: Vec<Trajectory> = (0..n).map(Trajectory::new).collect();
        let mut views = observe_all(&state, config, &layout, flags, &mut rngs.noise, episode)?;
        loop {
            let mut actions = Vec::with_capacity(n);
            let mut sampled = Vec::with_capacity(n);
            for (i, view) in views.iter().enumerate() {
                let params = bank.for_agent(i);
                let (action, logp) = params.actor.sample(&view.obs, &mut rngs.policy)?;
                let value = params.value(view.critic_obs.as_deref().unwrap_or(&view.obs))?;
                actions.push(action[0]);
                sampled.push((action, logp, value));
            }
            let outcome = env::step(&state, &actions, config)?;
            if let Some(i) = outcome.rewards.iter().position(|r| !r.is_finite()) {
                return Err(Error::Divergence(format!(
                    "non-finite reward for agent {i} in episode {episode}"
                )));
            }
            for (((traj, view), (action, logp, value)), &reward) in trajectories
                .iter_mut()
                .zip(views)
                .zip(sampled)
                .zip(&outcome.rewards)
            {
                traj.steps.push(Step {
                    obs: view.obs,
                    critic_obs: view.critic_obs,
                    action,
                    reward,
                    logp,
                    value,
                    done: outcome.done,
                });
            }
            state = outcome.state;
            views = observe_all(&state, config, &layout, flags, &mut rngs.noise, episode)?;
            if outcome.done {
                for (i, (traj, view)) in trajectories.iter_mut().zip(&views).enumerate() {
                    traj.bootstrap_value = bank
                        .for_agent(i)
                        .value(view.critic_obs.as_deref().unwrap_or(&view.obs))?;
                }
                break;
            }
        }
        for traj in trajectories {
            let set = bank.set_index(traj.agent_id);
            buffers[set].push(traj);
        }
    }
    Ok(buffers)
}

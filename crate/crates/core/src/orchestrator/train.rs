use super::bank::{NetShape, PolicyBank};
use super::eval::evaluate_bank;
use super::rollout::{collect_rollouts, training_layout};
use crate::error::Result;
use crate::experiment::ExperimentSpec;
use crate::ppo::{ppo_update, UpdateStats};
use crate::rng::SeedStreams;

/// What one training iteration produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Agent-steps collected so far, summed over agents.
    pub env_steps_total: u64,
    /// Mean undiscounted reward over this iteration's training episodes.
    pub train_mean_ep_reward: f64,
    pub eval_mean: f64,
    pub eval_std: f64,
    /// Averaged over parameter sets in separate mode.
    pub stats: UpdateStats,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub bank: PolicyBank,
    pub history: Vec<IterationRecord>,
}

/// Build the initial bank for `spec` from the seed's init stream.
pub fn init_bank(spec: &ExperimentSpec, rngs: &mut SeedStreams) -> Result<PolicyBank> {
    let config = spec.race_config();
    let shape = NetShape {
        obs_dim: training_layout(&config, &spec.flags).total_dim(),
        critic_dim: spec.flags.critic_dim(config.kind, config.n_agents),
        action_dim: config.kind.action_dim(),
        head: spec.head,
        hidden: spec.hidden.clone(),
    };
    PolicyBank::new(spec.flags.sharing, spec.n_agents, &shape, &mut rngs.init)
}

/// Train one seed of an experiment. `observer` sees every iteration as soon
/// as it completes; an error from it stops training.
pub fn train(
    spec: &ExperimentSpec,
    seed: u64,
    mut observer: impl FnMut(&IterationRecord) -> Result<()>,
) -> Result<TrainOutcome> {
    spec.validate()?;
    let config = spec.race_config();
    let ppo = spec.ppo_config();
    let mut rngs = SeedStreams::new(seed);
    let mut bank = init_bank(spec, &mut rngs)?;
    let mut history = Vec::with_capacity(spec.total_iterations);
    let mut env_steps_total = 0u64;

    for iteration in 0..spec.total_iterations {
        let ctx = |e: crate::Error| e.with_context(format!("iteration {iteration}"));
        let buffers =
            collect_rollouts(&config, &bank, &spec.flags, spec.steps_per_agent, &mut rngs).map_err(ctx)?;
        let (mut reward_sum, mut episodes) = (0.0, 0usize);
        for buffer in &buffers {
            env_steps_total += buffer.len() as u64;
            for traj in &buffer.trajectories {
                reward_sum += traj.episode_reward();
                episodes += 1;
            }
        }
        let stats = buffers
            .into_iter()
            .zip(bank.params.iter_mut())
            .map(|(buffer, params)| ppo_update(buffer, params, &ppo, iteration))
            .collect::<Result<Vec<_>>>()?;
        let (eval_mean, eval_std) =
            evaluate_bank(&bank, &config, &spec.flags, spec.eval_episodes, &mut rngs.eval).map_err(ctx)?;
        let record = IterationRecord {
            iteration,
            env_steps_total,
            train_mean_ep_reward: reward_sum / episodes as f64,
            eval_mean,
            eval_std,
            stats: UpdateStats::mean(&stats).expect("bank has at least one parameter set"),
        };
        observer(&record)?;
        history.push(record);
    }
    Ok(TrainOutcome { bank, history })
}

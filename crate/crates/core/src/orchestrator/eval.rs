use rand::Rng;

use super::bank::PolicyBank;
use super::mode::ModeFlags;
use crate::env::{self, RaceConfig};
use crate::error::{Error, Result};
use crate::nn::ParamSet;

/// Undiscounted episode rewards of a lone racer acting by the policy mean.
///
/// The auxiliary block of a policy trained with `n_train` racers is filled
/// with `2 * n_train` zeros. `rng` supplies one reset seed per episode.
pub fn eval_episode_rewards<R: Rng + ?Sized>(
    params: &ParamSet,
    config: &RaceConfig,
    n_train: usize,
    flags: &ModeFlags,
    episodes: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let single = RaceConfig {
        n_agents: 1,
        ..config.clone()
    };
    let layout = flags.eval_layout(config.kind, n_train);
    if params.actor.obs_dim() != layout.total_dim() {
        return Err(Error::DimensionMismatch {
            context: "evaluation observation",
            expected: params.actor.obs_dim(),
            actual: layout.total_dim(),
        });
    }
    let mut rewards = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut state = env::reset(&single, rng.random());
        let mut total = 0.0;
        loop {
            let obs = env::build_observation(&state, 0, &layout, rng)?;
            let action = params.actor.mean_action(&obs)?;
            let outcome = env::step(&state, &action[..1], &single)?;
            total += outcome.rewards[0];
            state = outcome.state;
            if outcome.done {
                break;
            }
        }
        rewards.push(total);
    }
    Ok(rewards)
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Zero-padded single-agent evaluation: `(mean, std)` of episode reward.
pub fn evaluate<R: Rng + ?Sized>(
    params: &ParamSet,
    config: &RaceConfig,
    n_train: usize,
    flags: &ModeFlags,
    episodes: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    Ok(mean_std(&eval_episode_rewards(params, config, n_train, flags, episodes, rng)?))
}

/// Evaluates every parameter set of a bank for `episodes` episodes each and
/// pools the episode rewards.
pub fn evaluate_bank<R: Rng + ?Sized>(
    bank: &PolicyBank,
    config: &RaceConfig,
    flags: &ModeFlags,
    episodes: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let mut all = Vec::with_capacity(episodes * bank.params.len());
    for params in &bank.params {
        all.extend(eval_episode_rewards(params, config, bank.n_agents, flags, episodes, rng)?);
    }
    Ok(mean_std(&all))
}

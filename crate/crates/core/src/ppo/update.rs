use serde::{Deserialize, Serialize};

use super::buffer::RolloutBuffer;
use super::config::PpoConfig;
use super::gae::compute_gae;
use super::loss::{normalize_advantages, surrogate_with_grad, value_loss, value_loss_grad};
use crate::error::{Error, Result};
use crate::nn::{dist, Actor, ActorGrads, HeadKind, Mlp, MlpGrads, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    /// Negated clipped surrogate.
    pub policy_loss: f64,
    pub value_loss: f64,
    /// Mean policy entropy over the batch.
    pub entropy: f64,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
    pub lr_used: f64,
}

impl UpdateStats {
    pub fn is_finite(&self) -> bool {
        [
            self.policy_loss,
            self.value_loss,
            self.entropy,
            self.mean_ratio,
            self.clip_fraction,
            self.lr_used,
        ]
        .iter()
        .all(|x| x.is_finite())
    }

    /// Field-wise mean, for reporting several parameter sets as one row.
    pub fn mean(stats: &[UpdateStats]) -> Option<UpdateStats> {
        if stats.is_empty() {
            return None;
        }
        let n = stats.len() as f64;
        let avg = |f: fn(&UpdateStats) -> f64| stats.iter().map(f).sum::<f64>() / n;
        Some(UpdateStats {
            policy_loss: avg(|s| s.policy_loss),
            value_loss: avg(|s| s.value_loss),
            entropy: avg(|s| s.entropy),
            mean_ratio: avg(|s| s.mean_ratio),
            clip_fraction: avg(|s| s.clip_fraction),
            lr_used: avg(|s| s.lr_used),
        })
    }
}

/// A buffer flattened into row-major matrices, with advantages already
/// estimated per trajectory and normalized over the whole pool.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub len: usize,
    pub obs_dim: usize,
    pub critic_dim: usize,
    pub action_dim: usize,
    pub obs: Vec<f64>,
    pub critic_obs: Vec<f64>,
    pub actions: Vec<f64>,
    pub logp_old: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Batch {
    pub fn from_buffer(buffer: &RolloutBuffer, gamma: f64, lam: f64) -> Result<Self> {
        let (obs_dim, critic_dim, action_dim) = buffer.dims()?;
        let len = buffer.len();
        let mut batch = Batch {
            len,
            obs_dim,
            critic_dim,
            action_dim,
            obs: Vec::with_capacity(len * obs_dim),
            critic_obs: Vec::with_capacity(len * critic_dim),
            actions: Vec::with_capacity(len * action_dim),
            logp_old: Vec::with_capacity(len),
            advantages: Vec::with_capacity(len),
            returns: Vec::with_capacity(len),
        };
        for traj in &buffer.trajectories {
            if traj.is_empty() {
                continue;
            }
            let (adv, ret) = compute_gae(
                &traj.rewards(),
                &traj.values(),
                &traj.terminal_flags(),
                traj.bootstrap_value,
                gamma,
                lam,
            )?;
            batch.advantages.extend(adv);
            batch.returns.extend(ret);
            for s in &traj.steps {
                batch.obs.extend_from_slice(&s.obs);
                batch.critic_obs.extend_from_slice(s.critic_obs.as_ref().unwrap_or(&s.obs));
                batch.actions.extend_from_slice(&s.action);
                batch.logp_old.push(s.logp);
            }
        }
        batch.advantages = normalize_advantages(&batch.advantages);
        Ok(batch)
    }
}

/// Actor loss `-(surrogate + entropy_coef * entropy)` and its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActorEval {
    pub loss: f64,
    pub surrogate: f64,
    pub entropy: f64,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
}

fn actor_pass(
    actor: &Actor,
    batch: &Batch,
    clip_eps: f64,
    entropy_coef: f64,
    want_grad: bool,
) -> Result<(ActorEval, Option<ActorGrads>)> {
    if actor.obs_dim() != batch.obs_dim || actor.action_dim() != batch.action_dim {
        return Err(Error::DimensionMismatch {
            context: "actor vs batch",
            expected: actor.obs_dim(),
            actual: batch.obs_dim,
        });
    }
    let n = batch.len;
    let tape = actor.trunk.forward_batch(&batch.obs, n)?;
    let out = tape.output();
    let out_dim = actor.trunk.output_dim();
    let ad = batch.action_dim;
    let logp_new: Vec<f64> = out
        .chunks_exact(out_dim)
        .zip(batch.actions.chunks_exact(ad))
        .map(|(o, a)| actor.log_prob_from_out(o, a))
        .collect();
    let surr = surrogate_with_grad(&logp_new, &batch.logp_old, &batch.advantages, clip_eps)?;
    let entropy = match actor.head {
        HeadKind::Gaussian => dist::gaussian_entropy(&actor.log_std),
        HeadKind::Beta => out.chunks_exact(out_dim).map(dist::beta_entropy).sum::<f64>() / n as f64,
    };
    let eval = ActorEval {
        loss: -(surr.objective + entropy_coef * entropy),
        surrogate: surr.objective,
        entropy,
        mean_ratio: surr.mean_ratio,
        clip_fraction: surr.clip_fraction,
    };
    if !want_grad {
        return Ok((eval, None));
    }

    let mut grads = actor.zero_grads();
    let mut dy = vec![0.0; out.len()];
    for (i, ((o, a), d_out)) in out
        .chunks_exact(out_dim)
        .zip(batch.actions.chunks_exact(ad))
        .zip(dy.chunks_exact_mut(out_dim))
        .enumerate()
    {
        let scale = -surr.grad[i];
        match actor.head {
            HeadKind::Gaussian => {
                if scale != 0.0 {
                    dist::gaussian_logprob_grad(o, &actor.log_std, a, scale, d_out, &mut grads.log_std);
                }
            }
            HeadKind::Beta => {
                if scale != 0.0 {
                    dist::beta_logprob_grad(o, a, scale, d_out);
                }
                if entropy_coef != 0.0 {
                    dist::beta_entropy_grad(o, -entropy_coef / n as f64, d_out);
                }
            }
        }
    }
    if actor.head == HeadKind::Gaussian {
        grads.log_std.iter_mut().for_each(|g| *g -= entropy_coef);
    }
    actor.trunk.backward_into(&tape, &dy, &mut grads.trunk)?;
    Ok((eval, Some(grads)))
}

pub fn actor_loss(actor: &Actor, batch: &Batch, clip_eps: f64, entropy_coef: f64) -> Result<ActorEval> {
    Ok(actor_pass(actor, batch, clip_eps, entropy_coef, false)?.0)
}

/// Actor loss with its gradient with respect to every actor parameter.
pub fn actor_loss_grad(
    actor: &Actor,
    batch: &Batch,
    clip_eps: f64,
    entropy_coef: f64,
) -> Result<(ActorEval, ActorGrads)> {
    let (eval, grads) = actor_pass(actor, batch, clip_eps, entropy_coef, true)?;
    Ok((eval, grads.expect("gradient requested")))
}

fn critic_pass(critic: &Mlp, batch: &Batch, value_coef: f64, want_grad: bool) -> Result<(f64, Option<MlpGrads>)> {
    let tape = critic.forward_batch(&batch.critic_obs, batch.len)?;
    let pred = tape.output();
    let loss = value_loss(pred, &batch.returns);
    if !want_grad {
        return Ok((loss, None));
    }
    let mut dy = value_loss_grad(pred, &batch.returns);
    dy.iter_mut().for_each(|d| *d *= value_coef);
    let (_, grads) = critic.backward(&tape, &dy)?;
    Ok((loss, Some(grads)))
}

/// Mean squared error of the critic against the batch returns.
pub fn critic_loss(critic: &Mlp, batch: &Batch) -> Result<f64> {
    Ok(critic_pass(critic, batch, 1.0, false)?.0)
}

/// Critic loss and the gradient of `value_coef * loss`.
pub fn critic_loss_grad(critic: &Mlp, batch: &Batch, value_coef: f64) -> Result<(f64, MlpGrads)> {
    let (loss, grads) = critic_pass(critic, batch, value_coef, true)?;
    Ok((loss, grads.expect("gradient requested")))
}

fn clip_global_norm(segments: &mut [&mut [f64]], max_norm: Option<f64>) {
    let Some(max_norm) = max_norm else { return };
    let norm = segments.iter().flat_map(|s| s.iter()).map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let factor = max_norm / norm;
        segments.iter_mut().for_each(|s| s.iter_mut().for_each(|g| *g *= factor));
    }
}

/// Full-batch PPO update of one parameter set on a consumed buffer.
///
/// Reported statistics come from the forward pass that precedes the final
/// gradient step. With zero epochs the parameters are left untouched and
/// the statistics describe the current policy.
pub fn ppo_update(
    buffer: RolloutBuffer,
    params: &mut ParamSet,
    config: &PpoConfig,
    iteration: usize,
) -> Result<UpdateStats> {
    let ctx = |e: Error| e.with_context(format!("iteration {iteration}"));
    let batch = Batch::from_buffer(&buffer, config.gamma, config.lam).map_err(ctx)?;
    drop(buffer);
    let lr = config.lr_at(iteration);
    let stats_of = |a: &ActorEval, v: f64| UpdateStats {
        policy_loss: -a.surrogate,
        value_loss: v,
        entropy: a.entropy,
        mean_ratio: a.mean_ratio,
        clip_fraction: a.clip_fraction,
        lr_used: lr,
    };
    let check = |a: &ActorEval, v: f64| -> Result<()> {
        if !a.loss.is_finite() {
            return Err(Error::Divergence("non-finite policy loss".into()));
        }
        if !v.is_finite() {
            return Err(Error::Divergence("non-finite value loss".into()));
        }
        Ok(())
    };

    if config.epochs_per_iter == 0 {
        let a = actor_loss(&params.actor, &batch, config.clip_eps, config.entropy_coef).map_err(ctx)?;
        let v = critic_loss(&params.critic, &batch).map_err(ctx)?;
        check(&a, v).map_err(ctx)?;
        return Ok(stats_of(&a, v));
    }

    let mut stats = None;
    for _ in 0..config.epochs_per_iter {
        let (a, mut a_grads) =
            actor_loss_grad(&params.actor, &batch, config.clip_eps, config.entropy_coef).map_err(ctx)?;
        let (v, mut c_grads) = critic_loss_grad(&params.critic, &batch, config.value_coef).map_err(ctx)?;
        check(&a, v).map_err(ctx)?;
        stats = Some(stats_of(&a, v));

        let mut a_segs = a_grads.trunk.segments_mut();
        if !a_grads.log_std.is_empty() {
            a_segs.push(&mut a_grads.log_std);
        }
        clip_global_norm(&mut a_segs, config.max_grad_norm);
        clip_global_norm(&mut c_grads.segments_mut(), config.max_grad_norm);

        let a_grads_ref = a_grads.segments();
        params
            .adam_actor
            .step(&mut params.actor.segments_mut(), &a_grads_ref, lr)
            .map_err(ctx)?;
        let c_grads_ref = c_grads.segments();
        params
            .adam_critic
            .step(&mut params.critic.segments_mut(), &c_grads_ref, lr)
            .map_err(ctx)?;
    }
    Ok(stats.expect("at least one epoch"))
}

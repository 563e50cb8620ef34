//! Quick invariant checks runnable from the command line.

use rand::Rng;

use crate::env::{self, AgentPhys, EnvKind, RaceConfig, RaceState};
use crate::error::Result;
use crate::experiment::ExperimentSpec;
use crate::nn::HeadKind;
use crate::orchestrator::{collect_rollouts, init_bank, mean_std, ModeFlags};
use crate::ppo::{self, Batch};
use crate::rng::{stream, SeedStreams, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<std::result::Result<String, String>>) -> CheckResult {
    match outcome {
        Ok(Ok(detail)) => CheckResult {
            name,
            passed: true,
            detail,
        },
        Ok(Err(detail)) => CheckResult {
            name,
            passed: false,
            detail,
        },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn gae_oracle() -> Result<std::result::Result<String, String>> {
    let mut rng = stream(0, Stream::Noise);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=20);
        let r: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let d: Vec<bool> = (0..n).map(|_| rng.random_bool(0.1)).collect();
        let (gamma, lam, boot) = (rng.random_range(0.5..=1.0), rng.random_range(0.0..=1.0), rng.random_range(-3.0..3.0));
        let (adv, _) = ppo::compute_gae(&r, &v, &d, boot, gamma, lam)?;
        for t in 0..n {
            let (mut sum, mut w) = (0.0, 1.0);
            for l in t..n {
                let next = if l + 1 < n { v[l + 1] } else { boot };
                let delta = r[l] + if d[l] { 0.0 } else { gamma * next } - v[l];
                sum += w * delta;
                if d[l] {
                    break;
                }
                w *= gamma * lam;
            }
            worst = worst.max((sum - adv[t]).abs());
        }
    }
    let detail = format!("max abs error {worst:.2e} over 1000 instances");
    Ok(if worst <= 1e-12 { Ok(detail) } else { Err(detail) })
}

fn gradient_check() -> Result<std::result::Result<String, String>> {
    let mut spec = ExperimentSpec {
        hidden: vec![8, 8],
        steps_per_agent: 8,
        n_agents: 2,
        flags: ModeFlags::SH_DECENT_COMP,
        ..ExperimentSpec::default()
    };
    spec.env.horizon = 8;
    let mut worst = 0.0f64;
    for seed in 0..4 {
        for head in [HeadKind::Gaussian, HeadKind::Beta] {
            spec.head = head;
            let mut rngs = SeedStreams::new(seed);
            let mut bank = init_bank(&spec, &mut rngs)?;
            let buffer = collect_rollouts(&spec.race_config(), &bank, &spec.flags, 8, &mut rngs)?.remove(0);
            let batch = Batch::from_buffer(&buffer, 0.99, 0.95)?;
            let p = &mut bank.params[0];
            let (_, grads) = ppo::actor_loss_grad(&p.actor, &batch, 0.2, 0.01)?;
            let analytic: Vec<Vec<f64>> = grads.segments().iter().map(|s| s.to_vec()).collect();
            let h = 1e-5;
            for (si, seg) in analytic.iter().enumerate() {
                for (k, &a) in seg.iter().enumerate() {
                    let base = p.actor.segments_mut()[si][k];
                    p.actor.segments_mut()[si][k] = base + h;
                    let plus = ppo::actor_loss(&p.actor, &batch, 0.2, 0.01)?.loss;
                    p.actor.segments_mut()[si][k] = base - h;
                    let minus = ppo::actor_loss(&p.actor, &batch, 0.2, 0.01)?.loss;
                    p.actor.segments_mut()[si][k] = base;
                    let numeric = (plus - minus) / (2.0 * h);
                    worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-4));
                }
            }
            let (_, grads) = ppo::critic_loss_grad(&p.critic, &batch, 1.0)?;
            let analytic: Vec<Vec<f64>> = grads.segments().iter().map(|s| s.to_vec()).collect();
            for (si, seg) in analytic.iter().enumerate() {
                for (k, &a) in seg.iter().enumerate() {
                    let base = p.critic.segments_mut()[si][k];
                    p.critic.segments_mut()[si][k] = base + h;
                    let plus = ppo::critic_loss(&p.critic, &batch)?;
                    p.critic.segments_mut()[si][k] = base - h;
                    let minus = ppo::critic_loss(&p.critic, &batch)?;
                    p.critic.segments_mut()[si][k] = base;
                    let numeric = (plus - minus) / (2.0 * h);
                    worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-4));
                }
            }
        }
    }
    let detail = format!("max relative error {worst:.2e}");
    Ok(if worst < 1e-5 { Ok(detail) } else { Err(detail) })
}

fn observation_properties() -> Result<std::result::Result<String, String>> {
    let mut rng = stream(1, Stream::Env);
    for trial in 0..2000 {
        let n = 1 + trial % 5;
        let state = RaceState {
            agents: (0..n)
                .map(|_| AgentPhys {
                    x: rng.random_range(-100.0..100.0),
                    v: rng.random_range(-5.0..5.0),
                    stamina: rng.random_range(0.0..=1.0),
                })
                .collect(),
            t: 0,
        };
        let obs: Vec<Vec<f64>> = (0..n).map(|i| env::competitive_obs(&state, i)).collect();
        for i in 0..n {
            if obs[i][2 * i] != 0.0 || obs[i][2 * i + 1] != 0.0 {
                return Ok(Err(format!("self block non-zero for agent {i} of {n}")));
            }
            for j in 0..n {
                if obs[i][2 * j] != -obs[j][2 * i] || obs[i][2 * j + 1] != -obs[j][2 * i + 1] {
                    return Ok(Err(format!("antisymmetry broken for ({i}, {j}) of {n}")));
                }
            }
        }
    }
    for kind in [EnvKind::PointRacer, EnvKind::StaminaRacer] {
        for flags in ModeFlags::BASELINES {
            let layout = flags.eval_layout(kind, 3);
            let state = env::reset(&RaceConfig::new(kind, 1), 0);
            let obs = env::build_observation(&state, 0, &layout, &mut rng)?;
            if obs.len() != flags.obs_layout(kind, 3).total_dim() || obs[kind.proprio_dim()..].iter().any(|&x| x != 0.0) {
                return Ok(Err(format!("bad evaluation padding for {flags} on {kind}")));
            }
        }
    }
    Ok(Ok("2000 random states, every mode padded correctly".into()))
}

fn ratio_identity() -> Result<std::result::Result<String, String>> {
    let mut spec = ExperimentSpec {
        hidden: vec![16, 16],
        n_agents: 3,
        flags: ModeFlags::SH_CENT_COMP,
        ..ExperimentSpec::default()
    };
    spec.env.kind = EnvKind::StaminaRacer;
    let mut rngs = SeedStreams::new(5);
    let bank = init_bank(&spec, &mut rngs)?;
    let buffer = collect_rollouts(&spec.race_config(), &bank, &spec.flags, 500, &mut rngs)?.remove(0);
    let batch = Batch::from_buffer(&buffer, 0.995, 0.95)?;
    let eval = ppo::actor_loss(&bank.params[0].actor, &batch, 0.2, 0.0)?;
    let detail = format!("mean ratio {} over {} samples", eval.mean_ratio, batch.len);
    Ok(if eval.mean_ratio == 1.0 && eval.clip_fraction == 0.0 { Ok(detail) } else { Err(detail) })
}

fn noise_statistics() -> Result<std::result::Result<String, String>> {
    let spec = ExperimentSpec {
        hidden: vec![8],
        n_agents: 2,
        flags: ModeFlags::SH_DECENT_NOI,
        ..ExperimentSpec::default()
    };
    let mut rngs = SeedStreams::new(9);
    let bank = init_bank(&spec, &mut rngs)?;
    let buffer = collect_rollouts(&spec.race_config(), &bank, &spec.flags, 5000, &mut rngs)?.remove(0);
    let n = buffer.len() as f64;
    for d in 1..5 {
        let xs: Vec<f64> = buffer.steps().map(|s| s.obs[d]).collect();
        let (mean, std) = mean_std(&xs);
        if mean.abs() >= 3.0 / n.sqrt() || (std * std - 1.0).abs() > 0.05 {
            return Ok(Err(format!("dimension {d}: mean {mean:.4}, variance {:.4}", std * std)));
        }
    }
    Ok(Ok(format!("{} recorded steps", buffer.len())))
}

/// Run every check; the command fails if any of them does.
pub fn run_selftest() -> Vec<CheckResult> {
    vec![
        check("gae matches brute-force double sum", gae_oracle()),
        check("loss gradients match finite differences", gradient_check()),
        check("competitive observations and padding", observation_properties()),
        check("on-policy ratio is exactly one", ratio_identity()),
        check("noise blocks are standard normal", noise_statistics()),
    ]
}

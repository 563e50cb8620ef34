//! Proximal policy optimization: advantage estimation, the clipped
//! surrogate and critic losses, and the full-batch update.

mod buffer;
mod config;
mod gae;
mod loss;
mod update;

pub use buffer::{RolloutBuffer, Step, Trajectory};
pub use config::PpoConfig;
pub use gae::compute_gae;
pub use loss::{clipped_surrogate, normalize_advantages, surrogate_with_grad, value_loss, value_loss_grad, Surrogate};
pub use update::{
    actor_loss, actor_loss_grad, critic_loss, critic_loss_grad, ppo_update, ActorEval, Batch, UpdateStats,
};

//! Training orchestration: the mode switches, policy banks, rollout
//! collection, zero-padded evaluation and the training loop.

mod bank;
mod eval;
mod mode;
mod rollout;
mod train;

pub use bank::{NetShape, PolicyBank};
pub use eval::{eval_episode_rewards, evaluate, evaluate_bank, mean_std};
pub use mode::{AuxObs, CriticInput, ModeFlags, Sharing};
pub use rollout::{collect_rollouts, global_critic_input, training_layout};
pub use train::{init_bank, train, IterationRecord, TrainOutcome};

//! Competitive multi-agent PPO on one-dimensional race tasks.
//!
//! Homogeneous, non-interacting racers are trained with a single shared
//! policy and critic fed from a shared on-policy buffer. Each racer's
//! observation can be augmented with the relative position and velocity of
//! every competitor; at evaluation time a lone racer sees zeros in those
//! slots.

pub mod cli;
pub mod env;
pub mod error;
pub mod experiment;
pub mod harness;
pub mod nn;
pub mod orchestrator;
pub mod ppo;
pub mod rng;
pub mod selftest;

pub use error::{Error, Result};

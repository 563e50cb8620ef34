//! Small dense networks in f64: tanh MLPs with an explicit backward pass,
//! Gaussian and Beta policy heads, and Adam.

pub mod adam;
pub mod dist;
pub mod mlp;
pub mod params;

pub use adam::AdamState;
pub use mlp::{Mlp, MlpGrads, Tape};
pub use params::{Actor, ActorGrads, HeadKind, ParamSet};

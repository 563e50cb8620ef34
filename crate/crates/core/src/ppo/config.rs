use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lam: f64,
    pub clip_eps: f64,
    /// Initial learning rate; decays linearly to zero over `total_iterations`.
    pub lr0: f64,
    /// Set from the experiment's iteration budget, not read from config files.
    #[serde(skip)]
    pub total_iterations: usize,
    pub epochs_per_iter: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    /// Global L2 gradient-norm cap per network; `None` leaves gradients unclipped.
    pub max_grad_norm: Option<f64>,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.995,
            lam: 0.95,
            clip_eps: 0.2,
            lr0: 0.0005,
            total_iterations: 500,
            epochs_per_iter: 10,
            entropy_coef: 0.0,
            value_coef: 1.0,
            max_grad_norm: None,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return fail(format!("gamma must lie in (0, 1], got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.lam) {
            return fail(format!("lam must lie in [0, 1], got {}", self.lam));
        }
        if !(self.clip_eps > 0.0 && self.clip_eps.is_finite()) {
            return fail(format!("clip_eps must be positive, got {}", self.clip_eps));
        }
        if !(self.lr0 >= 0.0 && self.lr0.is_finite()) {
            return fail(format!("lr0 must be non-negative, got {}", self.lr0));
        }
        if !self.entropy_coef.is_finite() || !(self.value_coef >= 0.0 && self.value_coef.is_finite()) {
            return fail("entropy_coef and value_coef must be finite, value_coef non-negative".into());
        }
        if let Some(norm) = self.max_grad_norm {
            if !(norm > 0.0 && norm.is_finite()) {
                return fail(format!("max_grad_norm must be positive, got {norm}"));
            }
        }
        Ok(())
    }

    /// `lr0 * (1 - iteration / total_iterations)`.
    pub fn lr_at(&self, iteration: usize) -> f64 {
        if self.total_iterations == 0 {
            return self.lr0;
        }
        self.lr0 * (1.0 - iteration as f64 / self.total_iterations as f64)
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adam moments for a list of parameter segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(segment_lens: impl IntoIterator<Item = usize>) -> Self {
        let m: Vec<Vec<f64>> = segment_lens.into_iter().map(|n| vec![0.0; n]).collect();
        Self {
            v: m.clone(),
            m,
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    fn check_shapes(&self, lens: impl ExactSizeIterator<Item = usize>, context: &'static str) -> Result<()> {
        if lens.len() != self.m.len() {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.m.len(),
                actual: lens.len(),
            });
        }
        for (m, len) in self.m.iter().zip(lens) {
            if m.len() != len {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: m.len(),
                    actual: len,
                });
            }
        }
        Ok(())
    }

    /// One bias-corrected descent step. Parameters are left untouched if any
    /// gradient entry is non-finite.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]], lr: f64) -> Result<()> {
        self.check_shapes(params.iter().map(|p| p.len()), "adam params")?;
        self.check_shapes(grads.iter().map(|g| g.len()), "adam grads")?;
        if grads.iter().any(|g| g.iter().any(|x| !x.is_finite())) {
            return Err(Error::Divergence("non-finite gradient".into()));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for k in 0..p.len() {
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * g[k];
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * g[k] * g[k];
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                p[k] -= lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

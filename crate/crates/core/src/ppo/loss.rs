use crate::error::{Error, Result};

/// Mean squared error between predictions and regression targets.
pub fn value_loss(values_pred: &[f64], returns: &[f64]) -> f64 {
    debug_assert_eq!(values_pred.len(), returns.len());
    if values_pred.is_empty() {
        return 0.0;
    }
    let sum: f64 = values_pred.iter().zip(returns).map(|(p, r)| (p - r) * (p - r)).sum();
    sum / values_pred.len() as f64
}

/// Derivative of [`value_loss`] with respect to each prediction.
pub fn value_loss_grad(values_pred: &[f64], returns: &[f64]) -> Vec<f64> {
    let n = values_pred.len() as f64;
    values_pred.iter().zip(returns).map(|(p, r)| 2.0 * (p - r) / n).collect()
}

/// Clipped surrogate value together with per-sample derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    pub objective: f64,
    /// d objective / d logp_new for each sample.
    pub grad: Vec<f64>,
    pub mean_ratio: f64,
    /// Fraction of samples with `|ratio - 1| > clip_eps`.
    pub clip_fraction: f64,
}

/// Mean of `min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A)` over samples.
pub fn clipped_surrogate(logp_new: &[f64], logp_old: &[f64], advantages: &[f64], clip_eps: f64) -> Result<f64> {
    Ok(surrogate_with_grad(logp_new, logp_old, advantages, clip_eps)?.objective)
}

pub fn surrogate_with_grad(
    logp_new: &[f64],
    logp_old: &[f64],
    advantages: &[f64],
    clip_eps: f64,
) -> Result<Surrogate> {
    let n = logp_new.len();
    for len in [logp_old.len(), advantages.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                context: "surrogate inputs",
                expected: n,
                actual: len,
            });
        }
    }
    if n == 0 {
        return Err(Error::EmptyInput("surrogate batch"));
    }
    let inv_n = 1.0 / n as f64;
    let mut objective = 0.0;
    let mut ratio_sum = 0.0;
    let mut clipped = 0usize;
    let mut grad = Vec::with_capacity(n);
    for ((&new, &old), &adv) in logp_new.iter().zip(logp_old).zip(advantages) {
        let ratio = (new - old).exp();
        if !ratio.is_finite() {
            return Err(Error::Divergence("non-finite probability ratio".into()));
        }
        let unclipped = ratio * adv;
        let clipped_term = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps) * adv;
        // Ties go to the unclipped branch, whose gradient is the ordinary one.
        if unclipped <= clipped_term {
            objective += unclipped;
            grad.push(unclipped * inv_n);
        } else {
            objective += clipped_term;
            grad.push(0.0);
        }
        ratio_sum += ratio;
        if (ratio - 1.0).abs() > clip_eps {
            clipped += 1;
        }
    }
    Ok(Surrogate {
        objective: objective * inv_n,
        grad,
        mean_ratio: ratio_sum * inv_n,
        clip_fraction: clipped as f64 * inv_n,
    })
}

/// Zero mean, unit population standard deviation (with 1e-8 added to the
/// denominator). Inputs shorter than two pass through unchanged.
pub fn normalize_advantages(advantages: &[f64]) -> Vec<f64> {
    if advantages.len() < 2 {
        return advantages.to_vec();
    }
    let n = advantages.len() as f64;
    let mean = advantages.iter().sum::<f64>() / n;
    let var = advantages.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let denom = var.sqrt() + 1e-8;
    advantages.iter().map(|a| (a - mean) / denom).collect()
}

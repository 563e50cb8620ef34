//! Action distributions: diagonal Gaussian with state-independent log std,
//! and a Beta distribution rescaled from (0, 1) onto (-1, 1).
//!
//! Gradient helpers accumulate `scale * d(.)/d(param)` into caller buffers.

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use statrs::function::gamma::{digamma, ln_gamma};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const LN_2: f64 = std::f64::consts::LN_2;

/// Beta log-densities are evaluated at most this close to the support edge.
pub const BETA_EDGE: f64 = 1e-6;

pub fn gaussian_logprob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(action)
        .map(|((&mu, &ls), &a)| {
            let z = (a - mu) / ls.exp();
            -0.5 * z * z - ls - 0.5 * LN_2PI
        })
        .sum()
}

pub fn gaussian_logprob_grad(
    mean: &[f64],
    log_std: &[f64],
    action: &[f64],
    scale: f64,
    d_mean: &mut [f64],
    d_log_std: &mut [f64],
) {
    for d in 0..mean.len() {
        let inv_var = (-2.0 * log_std[d]).exp();
        let diff = action[d] - mean[d];
        d_mean[d] += scale * diff * inv_var;
        d_log_std[d] += scale * (diff * diff * inv_var - 1.0);
    }
}

pub fn gaussian_sample<R: Rng + ?Sized>(mean: &[f64], log_std: &[f64], rng: &mut R) -> Vec<f64> {
    mean.iter()
        .zip(log_std)
        .map(|(&mu, &ls)| {
            let z: f64 = rng.sample(StandardNormal);
            mu + ls.exp() * z
        })
        .collect()
}

pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|ls| ls + 0.5 * (LN_2PI + 1.0)).sum()
}

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Split trunk pre-activations `[pre_alpha.., pre_beta..]` into
/// concentrations `1 + softplus(pre)`.
pub fn beta_concentrations(pre: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = pre.len() / 2;
    let conc = |p: &[f64]| p.iter().map(|&x| 1.0 + softplus(x)).collect();
    (conc(&pre[..d]), conc(&pre[d..]))
}

fn to_unit(a: f64) -> f64 {
    (a.clamp(-1.0 + BETA_EDGE, 1.0 - BETA_EDGE) + 1.0) / 2.0
}

fn ln_beta_fn(alpha: f64, beta: f64) -> f64 {
    ln_gamma(alpha) + ln_gamma(beta) - ln_gamma(alpha + beta)
}

/// Log-density of `a = 2u - 1`, `u ~ Beta(alpha, beta)`, including the
/// `log(1/2)` Jacobian of the rescaling.
pub fn beta_logprob(pre: &[f64], action: &[f64]) -> f64 {
    let (alpha, beta) = beta_concentrations(pre);
    alpha
        .iter()
        .zip(&beta)
        .zip(action)
        .map(|((&al, &be), &a)| {
            let u = to_unit(a);
            (al - 1.0) * u.ln() + (be - 1.0) * (1.0 - u).ln() - ln_beta_fn(al, be) - LN_2
        })
        .sum()
}

pub fn beta_logprob_grad(pre: &[f64], action: &[f64], scale: f64, d_pre: &mut [f64]) {
    let d = pre.len() / 2;
    for k in 0..d {
        let (al, be) = (1.0 + softplus(pre[k]), 1.0 + softplus(pre[d + k]));
        let u = to_unit(action[k]);
        let psi_sum = digamma(al + be);
        let d_al = u.ln() - digamma(al) + psi_sum;
        let d_be = (1.0 - u).ln() - digamma(be) + psi_sum;
        d_pre[k] += scale * d_al * sigmoid(pre[k]);
        d_pre[d + k] += scale * d_be * sigmoid(pre[d + k]);
    }
}

pub fn beta_sample<R: Rng + ?Sized>(pre: &[f64], rng: &mut R) -> Vec<f64> {
    let (alpha, beta) = beta_concentrations(pre);
    alpha
        .iter()
        .zip(&beta)
        .map(|(&al, &be)| {
            let u: f64 = Beta::new(al, be).expect("concentrations exceed 1").sample(rng);
            2.0 * u - 1.0
        })
        .collect()
}

pub fn beta_mean(pre: &[f64]) -> Vec<f64> {
    let (alpha, beta) = beta_concentrations(pre);
    alpha.iter().zip(&beta).map(|(al, be)| (al - be) / (al + be)).collect()
}

/// Differential entropy of the rescaled Beta (entropy on (0,1) plus ln 2).
pub fn beta_entropy(pre: &[f64]) -> f64 {
    let (alpha, beta) = beta_concentrations(pre);
    alpha
        .iter()
        .zip(&beta)
        .map(|(&al, &be)| {
            ln_beta_fn(al, be) - (al - 1.0) * digamma(al) - (be - 1.0) * digamma(be)
                + (al + be - 2.0) * digamma(al + be)
                + LN_2
        })
        .sum()
}

pub fn beta_entropy_grad(pre: &[f64], scale: f64, d_pre: &mut [f64]) {
    let d = pre.len() / 2;
    for k in 0..d {
        let (al, be) = (1.0 + softplus(pre[k]), 1.0 + softplus(pre[d + k]));
        let tri_sum = (al + be - 2.0) * trigamma(al + be);
        let d_al = -(al - 1.0) * trigamma(al) + tri_sum;
        let d_be = -(be - 1.0) * trigamma(be) + tri_sum;
        d_pre[k] += scale * d_al * sigmoid(pre[k]);
        d_pre[d + k] += scale * d_be * sigmoid(pre[d + k]);
    }
}

/// Second derivative of ln Γ, for positive arguments.
pub fn trigamma(x: f64) -> f64 {
    let mut x = x;
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let r = 1.0 / x;
    let r2 = r * r;
    // asymptotic series with Bernoulli-number coefficients
    acc + r + 0.5 * r2 + r * r2 * (1.0 / 6.0 - r2 * (1.0 / 30.0 - r2 * (1.0 / 42.0 - r2 * (1.0 / 30.0 - r2 * 5.0 / 66.0))))
}

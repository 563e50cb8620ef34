use crate::error::{Error, Result};

/// Generalized advantage estimation over one trajectory.
///
/// `dones[t]` cuts both the bootstrap and the advantage recursion after step
/// `t`; `bootstrap_value` stands in for `V(s_T)` past the final record.
/// Returns `(advantages, returns)` with `returns = advantages + values`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap_value: f64,
    gamma: f64,
    lam: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if n == 0 {
        return Err(Error::EmptyInput("trajectory"));
    }
    for len in [values.len(), dones.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                context: "advantage estimation inputs",
                expected: n,
                actual: len,
            });
        }
    }
    let mut advantages = vec![0.0; n];
    let mut next_value = bootstrap_value;
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let keep = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * keep - values[t];
        next_adv = delta + gamma * lam * keep * next_adv;
        advantages[t] = next_adv;
        next_value = values[t];
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((advantages, returns))
}

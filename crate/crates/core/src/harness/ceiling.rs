use crate::env::{step_agent, AgentPhys, EnvKind, RaceConfig};

/// Episode reward of a lone racer holding a constant action.
pub fn constant_action_return(config: &RaceConfig, action: f64) -> f64 {
    let mut agent = AgentPhys::START;
    let mut total = 0.0;
    for _ in 0..config.horizon {
        let (next, reward) = step_agent(&agent, action, config);
        agent = next;
        total += reward;
    }
    total
}

/// Reference score for a single racer.
///
/// PointRacer: the return of full throttle (`a = 1`), which is optimal.
/// StaminaRacer: the best constant action over `0.1, 0.2, ..., 1.0`, a lower
/// bound on the true optimum rather than the optimum itself.
pub fn analytic_ceiling(config: &RaceConfig) -> f64 {
    match config.kind {
        EnvKind::PointRacer => constant_action_return(config, 1.0),
        EnvKind::StaminaRacer => (1..=10)
            .map(|k| constant_action_return(config, k as f64 / 10.0))
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

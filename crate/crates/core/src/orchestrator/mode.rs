use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::{AuxKind, EnvKind, ObsLayout};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sharing {
    /// One policy, critic and buffer serve every agent.
    Shared,
    /// Each agent owns its policy, critic, optimizer state and buffer.
    Separate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticInput {
    /// The critic sees the agent's own observation.
    Decentralized,
    /// The critic sees every agent's proprioceptive block, then the agent's
    /// own auxiliary block.
    Centralized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxObs {
    None,
    /// Standard normal draws of the same width as the competitive block.
    Noise,
    Competitive,
}

/// A training configuration, factored into three independent switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeFlags {
    pub sharing: Sharing,
    pub critic_input: CriticInput,
    pub aux_obs: AuxObs,
}

impl Default for ModeFlags {
    fn default() -> Self {
        Self::SH_DECENT
    }
}

impl ModeFlags {
    pub const SH_DECENT: ModeFlags = ModeFlags::new(Sharing::Shared, CriticInput::Decentralized, AuxObs::None);
    pub const SH_CENT: ModeFlags = ModeFlags::new(Sharing::Shared, CriticInput::Centralized, AuxObs::None);
    pub const SP_DECENT_COMP: ModeFlags =
        ModeFlags::new(Sharing::Separate, CriticInput::Decentralized, AuxObs::Competitive);
    pub const SH_DECENT_NOI: ModeFlags = ModeFlags::new(Sharing::Shared, CriticInput::Decentralized, AuxObs::Noise);
    pub const SH_DECENT_COMP: ModeFlags =
        ModeFlags::new(Sharing::Shared, CriticInput::Decentralized, AuxObs::Competitive);
    pub const SH_CENT_COMP: ModeFlags = ModeFlags::new(Sharing::Shared, CriticInput::Centralized, AuxObs::Competitive);

    /// The baseline matrix plus the centralized competitive variant. The
    /// single-agent baseline is `SH_DECENT` at one agent.
    pub const BASELINES: [ModeFlags; 6] = [
        Self::SH_DECENT,
        Self::SH_CENT,
        Self::SP_DECENT_COMP,
        Self::SH_DECENT_NOI,
        Self::SH_DECENT_COMP,
        Self::SH_CENT_COMP,
    ];

    pub const fn new(sharing: Sharing, critic_input: CriticInput, aux_obs: AuxObs) -> Self {
        Self {
            sharing,
            critic_input,
            aux_obs,
        }
    }

    pub fn validate(&self, n_agents: usize) -> Result<()> {
        if n_agents == 0 {
            return Err(Error::Config("n_agents must be at least 1".into()));
        }
        if self.critic_input == CriticInput::Centralized && n_agents < 2 {
            return Err(Error::Config("a centralized critic needs at least 2 agents".into()));
        }
        Ok(())
    }

    /// With one agent every valid mode trains the same way as the
    /// single-agent baseline; grids collapse such cells onto it.
    pub fn is_single_agent(&self, n_agents: usize) -> bool {
        n_agents == 1 && *self == Self::SH_DECENT
    }

    /// Label used in file names and reports: `SA` for the single-agent
    /// baseline, otherwise e.g. `Sh-Decent-Comp`.
    pub fn label(&self, n_agents: usize) -> String {
        if self.is_single_agent(n_agents) {
            return "SA".into();
        }
        self.to_string()
    }

    /// Label with the agent count, e.g. `3A-Sh-Decent-Comp`.
    pub fn full_label(&self, n_agents: usize) -> String {
        if self.is_single_agent(n_agents) {
            return "SA".into();
        }
        format!("{n_agents}A-{self}")
    }

    fn aux_kind(&self) -> AuxKind {
        match self.aux_obs {
            AuxObs::None => AuxKind::None,
            AuxObs::Noise => AuxKind::Noise,
            AuxObs::Competitive => AuxKind::Competitive,
        }
    }

    /// Actor observation layout during training with `n_agents` racers.
    pub fn obs_layout(&self, kind: EnvKind, n_agents: usize) -> ObsLayout {
        ObsLayout::new(kind, self.aux_kind(), n_agents)
    }

    /// Observation layout for a lone racer running a policy trained with
    /// `n_train` racers: the auxiliary block, if any, is all zeros.
    pub fn eval_layout(&self, kind: EnvKind, n_train: usize) -> ObsLayout {
        match self.aux_obs {
            AuxObs::None => ObsLayout::new(kind, AuxKind::None, n_train),
            _ => ObsLayout::new(kind, AuxKind::ZeroPad, n_train),
        }
    }

    pub fn critic_dim(&self, kind: EnvKind, n_agents: usize) -> usize {
        let layout = self.obs_layout(kind, n_agents);
        match self.critic_input {
            CriticInput::Decentralized => layout.total_dim(),
            CriticInput::Centralized => n_agents * kind.proprio_dim() + layout.aux_dim,
        }
    }
}

impl fmt::Display for ModeFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sharing = match self.sharing {
            Sharing::Shared => "Sh",
            Sharing::Separate => "Sp",
        };
        let critic = match self.critic_input {
            CriticInput::Decentralized => "Decent",
            CriticInput::Centralized => "Cent",
        };
        write!(f, "{sharing}-{critic}")?;
        match self.aux_obs {
            AuxObs::None => Ok(()),
            AuxObs::Noise => f.write_str("-Noi"),
            AuxObs::Competitive => f.write_str("-Comp"),
        }
    }
}

impl FromStr for ModeFlags {
    type Err = Error;

    /// Accepts `SA`, `Sh-Decent`, `Sp-Decent-Comp` and the like, optionally
    /// prefixed with an agent count such as `3A-`, which is ignored.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown mode `{s}`"));
        let body = match s.split_once('-') {
            Some((prefix, rest))
                if prefix.len() > 1
                    && prefix.ends_with(['A', 'a'])
                    && prefix[..prefix.len() - 1].chars().all(|c| c.is_ascii_digit()) =>
            {
                rest
            }
            _ => s,
        };
        if body.eq_ignore_ascii_case("SA") {
            return Ok(Self::SH_DECENT);
        }
        let parts: Vec<String> = body.split('-').map(str::to_ascii_lowercase).collect();
        let sharing = match parts.first().map(String::as_str) {
            Some("sh") => Sharing::Shared,
            Some("sp") => Sharing::Separate,
            _ => return Err(bad()),
        };
        let critic_input = match parts.get(1).map(String::as_str) {
            Some("decent") => CriticInput::Decentralized,
            Some("cent") => CriticInput::Centralized,
            _ => return Err(bad()),
        };
        let aux_obs = match parts.get(2).map(String::as_str) {
            None => AuxObs::None,
            Some("noi") => AuxObs::Noise,
            Some("comp") => AuxObs::Competitive,
            Some(_) => return Err(bad()),
        };
        if parts.len() > 3 {
            return Err(bad());
        }
        Ok(Self::new(sharing, critic_input, aux_obs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_roundtrip() {
        for flags in ModeFlags::BASELINES {
            let label = flags.to_string();
            assert_eq!(label.parse::<ModeFlags>().unwrap(), flags);
            assert_eq!(flags.full_label(3).parse::<ModeFlags>().unwrap(), flags);
        }
        assert_eq!(ModeFlags::SH_DECENT_COMP.full_label(3), "3A-Sh-Decent-Comp");
        assert_eq!(ModeFlags::SH_CENT_COMP.full_label(3), "3A-Sh-Cent-Comp");
        assert_eq!(ModeFlags::SH_DECENT.label(1), "SA");
        assert_eq!(ModeFlags::SH_DECENT.label(2), "Sh-Decent");
        assert_eq!("SA".parse::<ModeFlags>().unwrap(), ModeFlags::SH_DECENT);
        assert_eq!("sp-decent-comp".parse::<ModeFlags>().unwrap(), ModeFlags::SP_DECENT_COMP);
        for bad in ["", "Sh", "Sx-Decent", "Sh-Decent-Foo", "Sh-Decent-Comp-X"] {
            assert!(bad.parse::<ModeFlags>().is_err(), "{bad}");
        }
    }

    #[test]
    fn centralized_needs_two_agents() {
        assert!(ModeFlags::SH_CENT.validate(1).is_err());
        assert!(ModeFlags::SH_CENT.validate(2).is_ok());
        assert!(ModeFlags::SH_DECENT.validate(0).is_err());
    }

    #[test]
    fn dimensions() {
        let k = EnvKind::PointRacer;
        assert_eq!(ModeFlags::SH_DECENT_COMP.obs_layout(k, 3).total_dim(), 7);
        assert_eq!(ModeFlags::SH_DECENT_COMP.eval_layout(k, 3).total_dim(), 7);
        assert_eq!(ModeFlags::SH_DECENT.eval_layout(k, 3).total_dim(), 1);
        assert_eq!(ModeFlags::SH_CENT.critic_dim(k, 2), 2);
        assert_eq!(ModeFlags::SH_CENT_COMP.critic_dim(EnvKind::StaminaRacer, 3), 3 * 2 + 6);
        assert_eq!(ModeFlags::SH_DECENT_NOI.critic_dim(k, 4), 9);
    }
}

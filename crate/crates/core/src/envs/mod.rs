//! The two benchmark environments and their hidden reward monitors.

pub mod mab;
mod monitor;
pub mod robot;
pub mod schemes;

pub use mab::{MabConfig, MabEnv};
pub use monitor::RewardMonitor;
pub use robot::{RobotConfig, RobotEnv};
pub use schemes::{robot_actions, Scheme};

use serde::{Deserialize, Serialize};

use crate::automata::Dfa;
use crate::env::{EnvError, Environment, SimRng, StepOutcome};
use crate::types::{ActionId, Alphabet, RewardType, StateId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EnvConfig {
    Mab(MabConfig),
    Robot(RobotConfig),
}

impl EnvConfig {
    pub fn scheme(&self) -> Scheme {
        match self {
            EnvConfig::Mab(c) => c.scheme,
            EnvConfig::Robot(c) => c.scheme,
        }
    }

    pub fn set_scheme(&mut self, scheme: Scheme) {
        match self {
            EnvConfig::Mab(c) => c.scheme = scheme,
            EnvConfig::Robot(c) => c.scheme = scheme,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            EnvConfig::Mab(_) => "mab",
            EnvConfig::Robot(_) => "robot",
        }
    }

    pub fn default_gamma(&self) -> f64 {
        match self {
            EnvConfig::Mab(_) => 0.99,
            EnvConfig::Robot(_) => 0.999_999,
        }
    }

    pub fn build(&self, rng: SimRng) -> Result<AnyEnv, EnvError> {
        Ok(match self {
            EnvConfig::Mab(c) => AnyEnv::Mab(MabEnv::new(c.clone())?),
            EnvConfig::Robot(c) => AnyEnv::Robot(RobotEnv::new(c.clone(), rng)?),
        })
    }
}

#[derive(Debug, Clone)]
pub enum AnyEnv {
    Mab(MabEnv),
    Robot(RobotEnv),
}

macro_rules! delegate {
    ($self:ident, $e:ident => $body:expr) => {
        match $self {
            AnyEnv::Mab($e) => $body,
            AnyEnv::Robot($e) => $body,
        }
    };
}

impl Environment for AnyEnv {
    fn n_states(&self) -> u64 {
        delegate!(self, e => e.n_states())
    }
    fn n_actions(&self) -> usize {
        delegate!(self, e => e.n_actions())
    }
    fn reward_types(&self) -> &[RewardType] {
        delegate!(self, e => e.reward_types())
    }
    fn episode_limit(&self) -> usize {
        delegate!(self, e => e.episode_limit())
    }
    fn alphabet(&self) -> Alphabet {
        delegate!(self, e => e.alphabet())
    }
    fn ground_truth(&self) -> Vec<Dfa> {
        delegate!(self, e => e.ground_truth())
    }
    fn reset(&mut self) -> StateId {
        delegate!(self, e => e.reset())
    }
    fn step(&mut self, action: ActionId) -> Result<StepOutcome, EnvError> {
        delegate!(self, e => e.step(action))
    }
    fn action_names(&self) -> Vec<String> {
        delegate!(self, e => e.action_names())
    }
}

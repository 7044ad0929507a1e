//! Non-Markovian multi-armed bandit: one state, deterministic rewards that
//! depend on the sequence of arms played.

use serde::{Deserialize, Serialize};

use super::monitor::RewardMonitor;
use super::schemes::{bandit_monitors, Scheme, REWARD_DELAY};
use crate::automata::Dfa;
use crate::env::{EnvError, Environment, StepOutcome};
use crate::types::{
    ActionId, Alphabet, AlphabetMode, Fired, MarkovianHint, RewardType, RewardTypeId, StateId, Symbol,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MabConfig {
    pub n_arms: usize,
    pub steps_per_episode: usize,
    pub scheme: Scheme,
    /// Value paid per firing, for every reward type.
    pub reward: f64,
    pub alphabet: AlphabetMode,
}

impl Default for MabConfig {
    fn default() -> Self {
        Self {
            n_arms: 3,
            steps_per_episode: 20,
            scheme: Scheme::S1,
            reward: 10.0,
            alphabet: AlphabetMode::ActionOnly,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MabEnv {
    cfg: MabConfig,
    monitors: Vec<RewardMonitor>,
    reward_types: Vec<RewardType>,
    steps: usize,
}

impl MabEnv {
    pub fn new(cfg: MabConfig) -> Result<Self, EnvError> {
        let dfas = bandit_monitors(cfg.scheme, cfg.n_arms).ok_or_else(|| {
            EnvError::Config(format!("scheme {} needs a bandit with at least 3 arms", cfg.scheme))
        })?;
        if cfg.steps_per_episode == 0 {
            return Err(EnvError::Config("episodes need at least one step".into()));
        }
        let delay = if cfg.scheme == Scheme::S2 { REWARD_DELAY } else { 0 };
        let names: &[&str] = match cfg.scheme {
            Scheme::S4 => &["arm1x4-then-arm3", "arm3x2-then-arm2"],
            Scheme::S3 => &["arm3x2-then-arm2"],
            Scheme::S2 => &["arm1x4-then-arm3-delayed"],
            _ => &["arm1x4-then-arm3"],
        };
        let reward_types = names
            .iter()
            .enumerate()
            .map(|(i, n)| RewardType {
                id: RewardTypeId(i as u16),
                name: n.to_string(),
                value: cfg.reward,
                hint: MarkovianHint::NonMarkovian,
            })
            .collect();
        let monitors = dfas
            .into_iter()
            .enumerate()
            .map(|(i, d)| RewardMonitor::new(d, RewardTypeId(i as u16), delay))
            .collect();
        Ok(Self {
            cfg,
            monitors,
            reward_types,
            steps: 0,
        })
    }

    pub fn config(&self) -> &MabConfig {
        &self.cfg
    }
}

impl Environment for MabEnv {
    fn n_states(&self) -> u64 {
        1
    }

    fn n_actions(&self) -> usize {
        self.cfg.n_arms
    }

    fn reward_types(&self) -> &[RewardType] {
        &self.reward_types
    }

    fn episode_limit(&self) -> usize {
        self.cfg.steps_per_episode
    }

    fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.cfg.alphabet, self.cfg.n_arms, 1)
    }

    fn ground_truth(&self) -> Vec<Dfa> {
        let alpha = self.alphabet();
        self.monitors
            .iter()
            .map(|m| m.dfa().lift(&alpha.projection()).expect("projection within alphabet"))
            .collect()
    }

    fn reset(&mut self) -> StateId {
        self.steps = 0;
        for m in &mut self.monitors {
            m.reset();
        }
        StateId(0)
    }

    fn step(&mut self, action: ActionId) -> Result<StepOutcome, EnvError> {
        if action.index() >= self.cfg.n_arms {
            return Err(EnvError::InvalidAction(action.0));
        }
        if self.steps >= self.cfg.steps_per_episode {
            return Err(EnvError::EpisodeExhausted(self.steps));
        }
        self.steps += 1;
        let mut fired = Fired::NONE;
        for m in &mut self.monitors {
            if m.advance(Symbol(action.0 as u32)) {
                fired.insert(m.reward_type);
            }
        }
        Ok(StepOutcome {
            next: StateId(0),
            effective: true,
            fired,
            markov_reward: 0.0,
            terminal: false,
            truncated: self.steps == self.cfg.steps_per_episode,
        })
    }

    fn action_names(&self) -> Vec<String> {
        (1..=self.cfg.n_arms).map(|i| format!("arm{i}")).collect()
    }
}

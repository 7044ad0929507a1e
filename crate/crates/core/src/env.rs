//! The interface every environment implements.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::automata::Dfa;
use crate::types::{ActionId, Alphabet, Fired, RewardType, StateId};

/// The random stream type used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Seeds a stream; distinct `stream` values give independent sequences for
/// the same run seed.
pub fn seeded_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next: StateId,
    /// Whether the action changed anything; ineffective actions emit no symbol.
    pub effective: bool,
    pub fired: Fired,
    pub markov_reward: f64,
    /// True terminal state (no bootstrapping past it).
    pub terminal: bool,
    /// Episode cut by the step limit.
    pub truncated: bool,
}

impl StepOutcome {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnvError {
    #[error("episode exhausted after {0} steps; call reset")]
    EpisodeExhausted(usize),
    #[error("action {0} outside the action set")]
    InvalidAction(u16),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// A seeded episodic environment with hidden reward monitors.
///
/// `step` (and `reset`) draw from the random stream injected at
/// construction and from nothing else.
pub trait Environment {
    fn n_states(&self) -> u64;
    fn n_actions(&self) -> usize;
    fn reward_types(&self) -> &[RewardType];
    fn episode_limit(&self) -> usize;
    fn alphabet(&self) -> Alphabet;
    /// Ground-truth monitors over [`Environment::alphabet`], one per reward type.
    fn ground_truth(&self) -> Vec<Dfa>;
    fn reset(&mut self) -> StateId;
    fn step(&mut self, action: ActionId) -> Result<StepOutcome, EnvError>;
    /// Human-readable action names.
    fn action_names(&self) -> Vec<String>;
}

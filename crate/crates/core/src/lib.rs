//! Reinforcement learning with non-Markovian rewards. Reward machines are
//! learned from traces (passively by state merging or actively by L*) and
//! combined with tabular Q-learning or R-max over the product state space.

pub mod agent;
pub mod automata;
pub mod edsm;
pub mod env;
pub mod envs;
pub mod lstar;
pub mod orchestrate;
pub mod qlearn;
pub mod rmax;
pub mod trace;
pub mod types;

pub use automata::{Dfa, Equivalence, ProductState, RewardMachines};
pub use env::{seeded_rng, EnvError, Environment, SimRng, StepOutcome};
pub use envs::{AnyEnv, EnvConfig, Scheme};
pub use trace::{Sample, Trace, TraceStore};
pub use types::*;

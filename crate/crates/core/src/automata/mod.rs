//! Deterministic automata used both as learned reward machines and as
//! ground-truth reward monitors.

mod dfa;
pub mod io;
mod product;

pub use dfa::{Dfa, Equivalence};
pub use product::{MachineStates, ProductState, RewardMachines};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("malformed automaton: {0}")]
    Malformed(String),
    #[error("symbol {symbol} outside alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: u32, alphabet: usize },
    #[error("state {state} outside automaton with {n_states} states")]
    StateOutOfRange { state: usize, n_states: usize },
    #[error("alphabet sizes differ ({0} vs {1})")]
    AlphabetMismatch(usize, usize),
    #[error("parse error: {0}")]
    Parse(String),
}

use crate::automata::Dfa;
use crate::types::{RewardTypeId, Symbol};

/// Hidden reward monitor: fires whenever its automaton enters an accepting
/// state. Delayed schemes carry their countdown inside the automaton.
#[derive(Debug, Clone)]
pub struct RewardMonitor {
    dfa: Dfa,
    state: usize,
    pub reward_type: RewardTypeId,
    /// Symbols between pattern completion and emission (informational).
    pub delay: usize,
}

impl RewardMonitor {
    pub fn new(dfa: Dfa, reward_type: RewardTypeId, delay: usize) -> Self {
        let state = dfa.initial();
        Self {
            dfa,
            state,
            reward_type,
            delay,
        }
    }

    pub fn reset(&mut self) {
        self.state = self.dfa.initial();
    }

    /// Advances on an action-level symbol; true when the reward fires.
    pub fn advance(&mut self, sym: Symbol) -> bool {
        self.state = self.dfa.next(self.state, sym);
        self.dfa.is_accepting(self.state)
    }

    pub fn dfa(&self) -> &Dfa {
        &self.dfa
    }

    pub fn state(&self) -> usize {
        self.state
    }
}

//! Identifiers shared by environments, automata and learners.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Index into an environment's enumerated state set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateId(pub u32);

/// Index into an environment's action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionId(pub u16);

/// A letter of the automaton alphabet.
///
/// Symbols are produced by an [`Alphabet`] from the action that was applied and,
/// in [`AlphabetMode::ActionState`], the state it led to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symbol(pub u32);

/// Index into an environment's declared reward-type list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RewardTypeId(pub u16);

pub type Word = Vec<Symbol>;

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ActionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl Symbol {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RewardTypeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Builds a word from raw symbol indices.
pub fn word(symbols: &[u32]) -> Word {
    symbols.iter().map(|&s| Symbol(s)).collect()
}

/// Comma separated rendering of a word, `ε` for the empty word.
pub fn format_word(w: &[Symbol]) -> String {
    if w.is_empty() {
        return "ε".to_string();
    }
    w.iter().map(|s| s.0.to_string()).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkovianHint {
    #[default]
    Unknown,
    Markovian,
    NonMarkovian,
}

/// A reward the agent can tell apart from every other reward it receives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardType {
    pub id: RewardTypeId,
    pub name: String,
    /// Deterministic magnitude paid each time the reward fires.
    pub value: f64,
    pub hint: MarkovianHint,
}

/// Set of reward types that fired on a single step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Fired(u32);

impl Fired {
    pub const NONE: Fired = Fired(0);

    pub fn insert(&mut self, t: RewardTypeId) {
        debug_assert!(t.0 < 32);
        self.0 |= 1 << t.0;
    }

    pub fn contains(self, t: RewardTypeId) -> bool {
        self.0 & (1 << t.0) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = RewardTypeId> {
        (0..32u16).filter(move |&i| self.0 & (1 << i) != 0).map(RewardTypeId)
    }

    pub fn of(types: &[RewardTypeId]) -> Fired {
        let mut f = Fired::NONE;
        for &t in types {
            f.insert(t);
        }
        f
    }

    /// Sum of the values of every fired type.
    pub fn value(self, types: &[RewardType]) -> f64 {
        self.iter().map(|t| types[t.index()].value).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphabetMode {
    /// One symbol per action; only effective actions emit a symbol.
    #[default]
    ActionOnly,
    /// One symbol per (action, resulting state) pair of an effective action.
    ActionState,
}

/// Maps applied actions to automaton symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alphabet {
    pub mode: AlphabetMode,
    pub n_actions: usize,
    pub n_states: u64,
}

impl Alphabet {
    pub fn new(mode: AlphabetMode, n_actions: usize, n_states: u64) -> Self {
        Self {
            mode,
            n_actions,
            n_states,
        }
    }

    pub fn size(&self) -> usize {
        match self.mode {
            AlphabetMode::ActionOnly => self.n_actions,
            AlphabetMode::ActionState => self.n_actions * self.n_states as usize,
        }
    }

    /// Symbol emitted by applying `action` and landing in `next`; `None` when
    /// the action had no effect.
    pub fn symbol(&self, action: ActionId, next: StateId, effective: bool) -> Option<Symbol> {
        if !effective {
            return None;
        }
        Some(match self.mode {
            AlphabetMode::ActionOnly => Symbol(action.0 as u32),
            AlphabetMode::ActionState => {
                Symbol((action.0 as u64 * self.n_states + next.0 as u64) as u32)
            }
        })
    }

    /// The action component of a symbol.
    pub fn action_of(&self, sym: Symbol) -> ActionId {
        match self.mode {
            AlphabetMode::ActionOnly => ActionId(sym.0 as u16),
            AlphabetMode::ActionState => ActionId((sym.0 as u64 / self.n_states) as u16),
        }
    }

    /// For every symbol, the action-only symbol it projects onto.
    pub fn projection(&self) -> Vec<Symbol> {
        (0..self.size() as u32)
            .map(|s| Symbol(self.action_of(Symbol(s)).0 as u32))
            .collect()
    }
}

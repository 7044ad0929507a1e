//! Product states: an MDP state paired with one automaton state per tracked
//! reward type. Rewards are Markovian over this augmented space.

use smallvec::SmallVec;

use super::Dfa;
use crate::types::{ActionId, Alphabet, StateId, Symbol};

pub type MachineStates = SmallVec<[u32; 4]>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProductState {
    pub mdp: StateId,
    pub machine: MachineStates,
}

/// The reward machines currently tracked, one per reward type.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardMachines {
    dfas: Vec<Dfa>,
    /// Mixed-radix multipliers used by [`RewardMachines::key`].
    radix: u64,
}

impl RewardMachines {
    pub fn new(dfas: Vec<Dfa>) -> Self {
        let radix = dfas.iter().map(|d| d.n_states() as u64).product();
        Self { dfas, radix }
    }

    /// One trivial non-accepting machine per reward type: the state space is
    /// the plain MDP state space.
    pub fn trivial(n_types: usize, alphabet: usize) -> Self {
        Self::new(vec![Dfa::trivial(alphabet, false); n_types])
    }

    pub fn dfas(&self) -> &[Dfa] {
        &self.dfas
    }

    pub fn len(&self) -> usize {
        self.dfas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dfas.is_empty()
    }

    pub fn get(&self, t: usize) -> &Dfa {
        &self.dfas[t]
    }

    pub fn replace(&mut self, t: usize, dfa: Dfa) {
        self.dfas[t] = dfa;
        self.radix = self.dfas.iter().map(|d| d.n_states() as u64).product();
    }

    /// Number of distinct machine-state combinations.
    pub fn combinations(&self) -> u64 {
        self.radix
    }

    pub fn initial(&self) -> MachineStates {
        self.dfas.iter().map(|d| d.initial() as u32).collect()
    }

    pub fn start(&self, mdp: StateId) -> ProductState {
        ProductState {
            mdp,
            machine: self.initial(),
        }
    }

    /// Advances every component on `sym`.
    pub fn advance(&self, machine: &mut MachineStates, sym: Symbol) {
        for (q, d) in machine.iter_mut().zip(&self.dfas) {
            *q = d.next(*q as usize, sym) as u32;
        }
    }

    /// Whether component `t` is accepting.
    pub fn accepting(&self, machine: &MachineStates, t: usize) -> bool {
        self.dfas[t].is_accepting(machine[t] as usize)
    }

    /// Dense encoding of a product state, unique for this set of machines.
    pub fn key(&self, p: &ProductState) -> u64 {
        p.mdp.0 as u64 * self.radix + self.machine_index(&p.machine)
    }

    pub fn machine_index(&self, machine: &MachineStates) -> u64 {
        let mut idx = 0u64;
        for (q, d) in machine.iter().zip(&self.dfas) {
            idx = idx * d.n_states() as u64 + *q as u64;
        }
        idx
    }

    /// Inverse of [`RewardMachines::key`].
    pub fn decode(&self, key: u64) -> ProductState {
        let mdp = StateId((key / self.radix) as u32);
        let mut rest = key % self.radix;
        let mut machine = MachineStates::from_elem(0, self.dfas.len());
        for (slot, d) in machine.iter_mut().zip(&self.dfas).rev() {
            let n = d.n_states() as u64;
            *slot = (rest % n) as u32;
            rest /= n;
        }
        ProductState { mdp, machine }
    }

    /// Product transition: the MDP component becomes `next`, each machine
    /// component reads the symbol of `(action, next)`; a filtered
    /// (no-effect) step leaves the machine components unchanged.
    pub fn product_step(
        &self,
        p: &ProductState,
        action: ActionId,
        next: StateId,
        effective: bool,
        alphabet: &Alphabet,
    ) -> ProductState {
        let mut machine = p.machine.clone();
        if let Some(sym) = alphabet.symbol(action, next, effective) {
            self.advance(&mut machine, sym);
        }
        ProductState { mdp: next, machine }
    }

    /// Machine-state sequence obtained by replaying `word` from the initial
    /// machine states (length `word.len() + 1`).
    pub fn track(&self, word: &[Symbol]) -> Vec<MachineStates> {
        let mut cur = self.initial();
        let mut out = Vec::with_capacity(word.len() + 1);
        out.push(cur.clone());
        for &s in word {
            self.advance(&mut cur, s);
            out.push(cur.clone());
        }
        out
    }
}

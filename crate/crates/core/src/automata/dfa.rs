use std::collections::VecDeque;

use rustc_hash::FxHashMap;

use super::AutomatonError;
use crate::types::{Symbol, Word};

/// Total deterministic finite automaton over the symbols `0..alphabet`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dfa {
    n_states: usize,
    alphabet: usize,
    delta: Vec<u32>,
    initial: u32,
    accepting: Vec<bool>,
}

/// Outcome of an equivalence check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Equivalence {
    Equal,
    /// Shortest word on which the two automata disagree.
    Counterexample(Word),
}

impl Dfa {
    /// `delta` is row-major: `delta[q * alphabet + a]`.
    pub fn new(
        n_states: usize,
        alphabet: usize,
        delta: Vec<u32>,
        initial: u32,
        accepting: Vec<bool>,
    ) -> Result<Self, AutomatonError> {
        if n_states == 0 {
            return Err(AutomatonError::Malformed("no states".into()));
        }
        if delta.len() != n_states * alphabet {
            return Err(AutomatonError::Malformed(format!(
                "transition table has {} entries, expected {}",
                delta.len(),
                n_states * alphabet
            )));
        }
        if let Some(&bad) = delta.iter().find(|&&q| q as usize >= n_states) {
            return Err(AutomatonError::Malformed(format!("transition to missing state {bad}")));
        }
        if initial as usize >= n_states {
            return Err(AutomatonError::Malformed(format!("initial state {initial} out of range")));
        }
        if accepting.len() != n_states {
            return Err(AutomatonError::Malformed("accepting flags do not cover every state".into()));
        }
        Ok(Self {
            n_states,
            alphabet,
            delta,
            initial,
            accepting,
        })
    }

    /// Builds from a `next(state, symbol)` function.
    pub fn from_fn(
        n_states: usize,
        alphabet: usize,
        initial: usize,
        accepting: impl Fn(usize) -> bool,
        next: impl Fn(usize, usize) -> usize,
    ) -> Result<Self, AutomatonError> {
        let mut delta = Vec::with_capacity(n_states * alphabet);
        for q in 0..n_states {
            for a in 0..alphabet {
                delta.push(next(q, a) as u32);
            }
        }
        Self::new(
            n_states,
            alphabet,
            delta,
            initial as u32,
            (0..n_states).map(accepting).collect(),
        )
    }

    /// Single-state automaton accepting either nothing or everything.
    pub fn trivial(alphabet: usize, accepting: bool) -> Self {
        Self {
            n_states: 1,
            alphabet,
            delta: vec![0; alphabet],
            initial: 0,
            accepting: vec![accepting],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn initial(&self) -> usize {
        self.initial as usize
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting[q]
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_states).filter(|&q| self.accepting[q])
    }

    /// Checked transition.
    pub fn step(&self, q: usize, sym: Symbol) -> Result<usize, AutomatonError> {
        if sym.index() >= self.alphabet {
            return Err(AutomatonError::SymbolOutOfRange {
                symbol: sym.0,
                alphabet: self.alphabet,
            });
        }
        if q >= self.n_states {
            return Err(AutomatonError::StateOutOfRange {
                state: q,
                n_states: self.n_states,
            });
        }
        Ok(self.next(q, sym))
    }

    /// Unchecked transition for hot loops; panics on out-of-range input.
    #[inline]
    pub fn next(&self, q: usize, sym: Symbol) -> usize {
        self.delta[q * self.alphabet + sym.index()] as usize
    }

    pub fn run_from(&self, q: usize, w: &[Symbol]) -> usize {
        w.iter().fold(q, |q, &s| self.next(q, s))
    }

    pub fn run(&self, w: &[Symbol]) -> usize {
        self.run_from(self.initial(), w)
    }

    pub fn accepts(&self, w: &[Symbol]) -> bool {
        self.accepting[self.run(w)]
    }

    pub fn is_trivial(&self) -> bool {
        self.n_states == 1
    }

    /// Re-labels symbols: the result reads symbol `s` as `map[s]` of `self`.
    /// Used to lift an action-level monitor onto a finer alphabet.
    pub fn lift(&self, map: &[Symbol]) -> Result<Dfa, AutomatonError> {
        let alphabet = map.len();
        let mut delta = Vec::with_capacity(self.n_states * alphabet);
        for q in 0..self.n_states {
            for &s in map {
                delta.push(self.step(q, s)? as u32);
            }
        }
        Dfa::new(self.n_states, alphabet, delta, self.initial, self.accepting.clone())
    }

    fn reachable(&self) -> Vec<usize> {
        let mut order = vec![self.initial()];
        let mut seen = vec![false; self.n_states];
        seen[self.initial()] = true;
        let mut i = 0;
        while i < order.len() {
            let q = order[i];
            for a in 0..self.alphabet {
                let r = self.delta[q * self.alphabet + a] as usize;
                if !seen[r] {
                    seen[r] = true;
                    order.push(r);
                }
            }
            i += 1;
        }
        order
    }

    /// Language-equivalent minimal automaton with states numbered in
    /// breadth-first order from the initial state.
    pub fn minimize(&self) -> Dfa {
        let reach = self.reachable();
        let mut local = vec![u32::MAX; self.n_states];
        for (i, &q) in reach.iter().enumerate() {
            local[q] = i as u32;
        }
        let n = reach.len();
        let k = self.alphabet;
        // Moore refinement: split blocks by (block, successor blocks) until stable.
        let mut block: Vec<u32> = reach.iter().map(|&q| self.accepting[q] as u32).collect();
        let mut n_blocks = {
            let mut b = block.clone();
            b.sort_unstable();
            b.dedup();
            b.len()
        };
        loop {
            let mut ids: FxHashMap<Vec<u32>, u32> = FxHashMap::default();
            let mut next_block = Vec::with_capacity(n);
            for (i, &q) in reach.iter().enumerate() {
                let mut sig = Vec::with_capacity(k + 1);
                sig.push(block[i]);
                for a in 0..k {
                    sig.push(block[local[self.delta[q * k + a] as usize] as usize]);
                }
                let fresh = ids.len() as u32;
                next_block.push(*ids.entry(sig).or_insert(fresh));
            }
            let count = ids.len();
            block = next_block;
            if count == n_blocks {
                break;
            }
            n_blocks = count;
        }
        let mut delta = vec![0u32; n_blocks * k];
        let mut accepting = vec![false; n_blocks];
        for (i, &q) in reach.iter().enumerate() {
            let b = block[i] as usize;
            accepting[b] = self.accepting[q];
            for a in 0..k {
                delta[b * k + a] = block[local[self.delta[q * k + a] as usize] as usize];
            }
        }
        let quotient = Dfa {
            n_states: n_blocks,
            alphabet: k,
            delta,
            initial: block[0],
            accepting,
        };
        quotient.canonical()
    }

    /// Renumbers reachable states in breadth-first order (symbols in index
    /// order), dropping unreachable ones.
    pub fn canonical(&self) -> Dfa {
        let reach = self.reachable();
        let mut local = vec![0u32; self.n_states];
        for (i, &q) in reach.iter().enumerate() {
            local[q] = i as u32;
        }
        let k = self.alphabet;
        let mut delta = Vec::with_capacity(reach.len() * k);
        for &q in &reach {
            for a in 0..k {
                delta.push(local[self.delta[q * k + a] as usize]);
            }
        }
        Dfa {
            n_states: reach.len(),
            alphabet: k,
            delta,
            initial: 0,
            accepting: reach.iter().map(|&q| self.accepting[q]).collect(),
        }
    }

    /// Breadth-first search of the product automaton for the shortest word
    /// classified differently by `self` and `other`.
    pub fn equivalent(&self, other: &Dfa) -> Result<Equivalence, AutomatonError> {
        if self.alphabet != other.alphabet {
            return Err(AutomatonError::AlphabetMismatch(self.alphabet, other.alphabet));
        }
        let k = self.alphabet;
        let idx = |p: usize, q: usize| p * other.n_states + q;
        let mut parent: Vec<Option<(usize, u32)>> = vec![None; self.n_states * other.n_states];
        let mut seen = vec![false; self.n_states * other.n_states];
        let start = (self.initial(), other.initial());
        seen[idx(start.0, start.1)] = true;
        let mut queue = VecDeque::from([start]);
        while let Some((p, q)) = queue.pop_front() {
            if self.accepting[p] != other.accepting[q] {
                let mut w = Vec::new();
                let mut cur = idx(p, q);
                while let Some((prev, a)) = parent[cur] {
                    w.push(Symbol(a));
                    cur = prev;
                }
                w.reverse();
                return Ok(Equivalence::Counterexample(w));
            }
            for a in 0..k {
                let np = self.delta[p * k + a] as usize;
                let nq = other.delta[q * k + a] as usize;
                let j = idx(np, nq);
                if !seen[j] {
                    seen[j] = true;
                    parent[j] = Some((idx(p, q), a as u32));
                    queue.push_back((np, nq));
                }
            }
        }
        Ok(Equivalence::Equal)
    }

    /// Same language as `other` (alphabets must agree).
    pub fn same_language(&self, other: &Dfa) -> bool {
        matches!(self.equivalent(other), Ok(Equivalence::Equal))
    }

    /// Uniformly random automaton with `n` states, resampled until it is
    /// minimal with exactly `n` states. Needs `alphabet >= 1` when `n > 1`.
    pub fn random_minimal<R: rand::Rng + ?Sized>(n: usize, alphabet: usize, rng: &mut R) -> Dfa {
        assert!(n == 1 || alphabet > 0, "a multi-state minimal automaton needs symbols");
        loop {
            let delta = (0..n * alphabet).map(|_| rng.random_range(0..n) as u32).collect();
            let accepting = (0..n).map(|_| rng.random_bool(0.5)).collect();
            let d = Dfa {
                n_states: n,
                alphabet,
                delta,
                initial: 0,
                accepting,
            }
            .minimize();
            if d.n_states == n {
                return d;
            }
        }
    }

    pub(crate) fn delta(&self) -> &[u32] {
        &self.delta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::word;

    fn sink_plus(alphabet: usize) -> Dfa {
        // state 0 --0--> 1 (accepting sink), everything else stays put
        Dfa::from_fn(2, alphabet, 0, |q| q == 1, |q, a| if q == 0 && a == 0 { 1 } else { q }).unwrap()
    }

    #[test]
    fn rejects_malformed_tables() {
        assert!(Dfa::new(1, 2, vec![0], 0, vec![false]).is_err());
        assert!(Dfa::new(1, 1, vec![3], 0, vec![false]).is_err());
        assert!(Dfa::new(1, 1, vec![0], 1, vec![false]).is_err());
    }

    #[test]
    fn step_checks_symbol_range() {
        let d = sink_plus(2);
        assert_eq!(d.step(0, Symbol(0)).unwrap(), 1);
        assert!(matches!(
            d.step(0, Symbol(2)),
            Err(AutomatonError::SymbolOutOfRange { symbol: 2, alphabet: 2 })
        ));
    }

    #[test]
    fn sink_self_loop_stays() {
        let d = sink_plus(3);
        for a in 0..3 {
            assert_eq!(d.step(1, Symbol(a)).unwrap(), 1);
        }
    }

    #[test]
    fn minimize_drops_unreachable_accepting_state() {
        // state 2 is accepting but unreachable
        let d = Dfa::from_fn(3, 2, 0, |q| q == 2, |q, _| if q == 2 { 2 } else { 1 - q }).unwrap();
        let m = d.minimize();
        assert_eq!(m.n_states(), 1);
        assert!(!m.is_accepting(0));
    }

    #[test]
    fn empty_vs_universal_counterexample_is_epsilon() {
        let empty = Dfa::trivial(2, false);
        let all = Dfa::trivial(2, true);
        assert_eq!(empty.equivalent(&all).unwrap(), Equivalence::Counterexample(vec![]));
    }

    #[test]
    fn counterexample_is_shortest() {
        let d = sink_plus(2);
        let empty = Dfa::trivial(2, false);
        assert_eq!(d.equivalent(&empty).unwrap(), Equivalence::Counterexample(word(&[0])));
        assert!(d.same_language(&d.minimize()));
    }

    #[test]
    fn alphabet_mismatch_is_an_error() {
        assert!(Dfa::trivial(2, false).equivalent(&Dfa::trivial(3, false)).is_err());
    }
}

//! Episode traces, their per-reward-type labels, and the sample store fed to
//! the automata learners.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{ActionId, Fired, RewardTypeId, StateId, Symbol, Word};

/// One environment step as experienced by the agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub state: StateId,
    pub action: ActionId,
    pub next: StateId,
    /// `None` when the action had no effect.
    pub symbol: Option<Symbol>,
    pub markov_reward: f64,
    pub fired: Fired,
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Positive,
    Negative,
    Unknown,
}

/// A full episode: the raw steps (for experience replay) plus the symbol
/// word and the rewards fired after each symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub start: StateId,
    steps: Vec<Step>,
    symbols: Word,
    firings: Vec<Fired>,
    closed: bool,
}

impl Trace {
    pub fn new(start: StateId) -> Self {
        Self {
            start,
            steps: Vec::new(),
            symbols: Vec::new(),
            firings: Vec::new(),
            closed: false,
        }
    }

    /// Appends a step. The symbol is appended unless the step was filtered;
    /// fired rewards are recorded at the new final index.
    pub fn record_step(&mut self, step: Step) {
        debug_assert!(!self.closed, "recording into a closed trace");
        if let Some(sym) = step.symbol {
            self.symbols.push(sym);
            self.firings.push(step.fired);
        } else {
            debug_assert!(step.fired.is_empty(), "reward fired on a filtered step");
        }
        self.steps.push(step);
    }

    pub fn close(&mut self) {
        self.closed = true;
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn firings(&self) -> &[Fired] {
        &self.firings
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Positive iff `t` fired on the final symbol; negative once closed
    /// otherwise; unknown while the episode is still running.
    pub fn label(&self, t: RewardTypeId) -> Label {
        match self.firings.last() {
            Some(f) if f.contains(t) => Label::Positive,
            _ if self.closed => Label::Negative,
            _ => Label::Unknown,
        }
    }

    /// The word as seen by reward type `t`.
    pub fn labeled(&self, t: RewardTypeId) -> LabeledWord {
        LabeledWord {
            word: self.symbols.clone(),
            firing: self
                .firings
                .iter()
                .enumerate()
                .filter(|(_, f)| f.contains(t))
                .map(|(i, _)| i as u32 + 1)
                .collect(),
        }
    }
}

/// A word together with the prefix lengths after which a reward type fired.
/// Every other prefix (including ε) is a negative example for that type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledWord {
    pub word: Word,
    /// Strictly increasing prefix lengths in `1..=word.len()`.
    pub firing: Vec<u32>,
}

impl LabeledWord {
    pub fn new(word: Word, firing: Vec<u32>) -> Self {
        Self { word, firing }
    }

    pub fn is_positive(&self) -> bool {
        self.firing.last().is_some_and(|&p| p as usize == self.word.len())
    }

    /// Label of the prefix of length `len`.
    pub fn label_at(&self, len: usize) -> bool {
        self.firing.binary_search(&(len as u32)).is_ok()
    }

    pub fn truncated(&self, len: usize) -> LabeledWord {
        let len = len.min(self.word.len());
        LabeledWord {
            word: self.word[..len].to_vec(),
            firing: self.firing.iter().copied().filter(|&p| p as usize <= len).collect(),
        }
    }
}

/// A weighted learning sample; `labels[i]` is the label of the prefix of
/// length `i` when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub word: Word,
    pub labels: Vec<Option<bool>>,
    pub weight: u32,
}

impl Sample {
    /// Only the full word carries a label (the Abbadingo convention).
    pub fn end_labeled(word: Word, label: bool, weight: u32) -> Self {
        let mut labels = vec![None; word.len() + 1];
        labels[word.len()] = Some(label);
        Self { word, labels, weight }
    }

    /// Every prefix labeled, as for traces produced by the environment.
    pub fn from_labeled(lw: &LabeledWord, weight: u32) -> Self {
        let labels = (0..=lw.word.len()).map(|i| Some(lw.label_at(i))).collect();
        Self {
            word: lw.word.clone(),
            labels,
            weight,
        }
    }

    pub fn truncate(&mut self, len: usize) {
        if len < self.word.len() {
            self.word.truncate(len);
            self.labels.truncate(len + 1);
        }
    }

    pub fn end_label(&self) -> Option<bool> {
        self.labels[self.word.len()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub sample: LabeledWord,
    pub weight: u32,
}

/// Insertion-ordered, deduplicating queue with optional capacity; the oldest
/// distinct entry is evicted first.
#[derive(Debug, Clone, Default)]
struct WeightedFifo {
    entries: VecDeque<Entry>,
    index: FxHashMap<Word, u64>,
    base: u64,
    capacity: Option<usize>,
    total_weight: u64,
}

enum Insert {
    Fresh,
    Duplicate,
    Conflict,
}

impl WeightedFifo {
    fn with_capacity(capacity: Option<usize>) -> Self {
        Self {
            capacity,
            ..Default::default()
        }
    }

    fn insert(&mut self, sample: LabeledWord) -> Insert {
        if let Some(&seq) = self.index.get(&sample.word) {
            let e = &mut self.entries[(seq - self.base) as usize];
            if e.sample.firing != sample.firing {
                return Insert::Conflict;
            }
            e.weight += 1;
            self.total_weight += 1;
            return Insert::Duplicate;
        }
        let seq = self.base + self.entries.len() as u64;
        self.index.insert(sample.word.clone(), seq);
        self.entries.push_back(Entry { sample, weight: 1 });
        self.total_weight += 1;
        if let Some(cap) = self.capacity {
            while self.entries.len() > cap {
                let old = self.entries.pop_front().expect("non-empty");
                self.index.remove(&old.sample.word);
                self.total_weight -= old.weight as u64;
                self.base += 1;
            }
        }
        Insert::Fresh
    }

    fn contains(&self, w: &[Symbol]) -> bool {
        self.index.contains_key(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StoreConfig {
    /// Distinct negative traces kept per reward type.
    pub negative_capacity: usize,
    /// Distinct positive traces kept per reward type (`None`: unbounded).
    pub positive_capacity: Option<usize>,
}

impl Default for StoreConfig {
    fn default() -> Self {
        Self {
            negative_capacity: 1000,
            positive_capacity: Some(1000),
        }
    }
}

#[derive(Debug, Clone)]
struct TypeSamples {
    positives: WeightedFifo,
    negatives: WeightedFifo,
    /// Positive traces ever stored (before eviction).
    positives_seen: u64,
}

/// Labeled samples per reward type.
#[derive(Debug, Clone)]
pub struct TraceStore {
    types: Vec<TypeSamples>,
    episodes: u64,
    conflicts: u64,
}

impl TraceStore {
    pub fn new(n_types: usize, cfg: StoreConfig) -> Self {
        let types = (0..n_types)
            .map(|_| TypeSamples {
                positives: WeightedFifo::with_capacity(cfg.positive_capacity),
                negatives: WeightedFifo::with_capacity(Some(cfg.negative_capacity)),
                positives_seen: 0,
            })
            .collect();
        Self {
            types,
            episodes: 0,
            conflicts: 0,
        }
    }

    pub fn n_types(&self) -> usize {
        self.types.len()
    }

    /// Files a finished episode: every prefix ending on a firing of type `t`
    /// becomes a positive for `t`; the full trace becomes a negative for `t`
    /// unless it ends on such a firing. Repeats only bump weights.
    pub fn close_episode(&mut self, trace: &Trace) {
        self.episodes += 1;
        for (t, samples) in self.types.iter_mut().enumerate() {
            let lw = trace.labeled(RewardTypeId(t as u16));
            for &p in &lw.firing {
                samples.positives_seen += 1;
                if let Insert::Conflict = samples.positives.insert(lw.truncated(p as usize)) {
                    self.conflicts += 1;
                }
            }
            if !lw.is_positive() {
                let conflict = samples.positives.contains(&lw.word);
                if conflict || matches!(samples.negatives.insert(lw), Insert::Conflict) {
                    self.conflicts += 1;
                }
            }
        }
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    /// Observations that contradicted an earlier label for the same word.
    pub fn conflicts(&self) -> u64 {
        self.conflicts
    }

    pub fn positives(&self, t: RewardTypeId) -> impl Iterator<Item = &Entry> {
        self.types[t.index()].positives.entries.iter()
    }

    pub fn negatives(&self, t: RewardTypeId) -> impl Iterator<Item = &Entry> {
        self.types[t.index()].negatives.entries.iter()
    }

    /// Total weight of retained positives.
    pub fn positive_weight(&self, t: RewardTypeId) -> u64 {
        self.types[t.index()].positives.total_weight
    }

    pub fn negative_weight(&self, t: RewardTypeId) -> u64 {
        self.types[t.index()].negatives.total_weight
    }

    /// Positive traces ever filed for `t`, evicted ones included.
    pub fn positives_seen(&self, t: RewardTypeId) -> u64 {
        self.types[t.index()].positives_seen
    }

    pub fn n_negatives(&self, t: RewardTypeId) -> usize {
        self.types[t.index()].negatives.entries.len()
    }

    pub fn n_positives(&self, t: RewardTypeId) -> usize {
        self.types[t.index()].positives.entries.len()
    }

    /// All retained samples of type `t`, positives first, each in insertion order.
    pub fn samples(&self, t: RewardTypeId) -> Vec<Sample> {
        self.positives(t)
            .chain(self.negatives(t))
            .map(|e| Sample::from_labeled(&e.sample, e.weight))
            .collect()
    }

    /// Writes type `t`'s samples in Abbadingo layout; weights become repeated lines.
    pub fn to_abbadingo(&self, t: RewardTypeId, alphabet: usize) -> String {
        let entries: Vec<(bool, &Entry)> = self
            .positives(t)
            .map(|e| (true, e))
            .chain(self.negatives(t).map(|e| (false, e)))
            .collect();
        let total: u64 = entries.iter().map(|(_, e)| e.weight as u64).sum();
        let mut out = format!("{total} {alphabet}\n");
        for (label, e) in entries {
            let line = abbadingo_line(label, &e.sample.word);
            for _ in 0..e.weight {
                out.push_str(&line);
            }
        }
        out
    }
}

fn abbadingo_line(label: bool, w: &[Symbol]) -> String {
    let mut line = format!("{} {}", label as u8, w.len());
    for s in w {
        let _ = write!(line, " {}", s.0);
    }
    line.push('\n');
    line
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AbbadingoError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Parsed Abbadingo file: alphabet size plus end-labeled samples with
/// repeated lines folded into weights (first-occurrence order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbbadingoSet {
    pub alphabet: usize,
    pub samples: Vec<Sample>,
}

pub fn read_abbadingo(text: &str) -> Result<AbbadingoSet, AbbadingoError> {
    let err = |line: usize, msg: &str| AbbadingoError::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hl, header) = lines.next().ok_or_else(|| err(1, "missing header"))?;
    let nums: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| err(hl, "header must be `<num_traces> <alphabet_size>`")))
        .collect::<Result<_, _>>()?;
    let [count, alphabet] = nums[..] else {
        return Err(err(hl, "header must be `<num_traces> <alphabet_size>`"));
    };
    let mut samples: Vec<Sample> = Vec::new();
    let mut seen: FxHashMap<(bool, Word), usize> = FxHashMap::default();
    let mut n = 0;
    for (ln, line) in lines {
        let toks: Vec<i64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(ln, &format!("bad token `{t}`"))))
            .collect::<Result<_, _>>()?;
        if toks.len() < 2 {
            return Err(err(ln, "expected `<label> <length> <symbols...>`"));
        }
        let label = match toks[0] {
            0 => false,
            1 => true,
            // -1 marks an unlabeled trace in some tools; skip it
            -1 => continue,
            other => return Err(err(ln, &format!("label must be 0 or 1, got {other}"))),
        };
        let len = toks[1] as usize;
        if toks.len() != len + 2 {
            return Err(err(ln, &format!("declared length {len} but found {} symbols", toks.len() - 2)));
        }
        let mut w = Word::with_capacity(len);
        for &s in &toks[2..] {
            if s < 0 || s as usize >= alphabet {
                return Err(err(ln, &format!("symbol {s} outside alphabet of size {alphabet}")));
            }
            w.push(Symbol(s as u32));
        }
        n += 1;
        match seen.get(&(label, w.clone())) {
            Some(&i) => samples[i].weight += 1,
            None => {
                seen.insert((label, w.clone()), samples.len());
                samples.push(Sample::end_labeled(w, label, 1));
            }
        }
    }
    if n != count {
        return Err(err(hl, &format!("header announces {count} traces, found {n}")));
    }
    Ok(AbbadingoSet { alphabet, samples })
}

/// The most recent full episodes, oldest first, for experience replay.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    traces: VecDeque<Trace>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            traces: VecDeque::new(),
            capacity,
        }
    }

    pub fn push(&mut self, trace: Trace) {
        if self.capacity == 0 {
            return;
        }
        if self.traces.len() == self.capacity {
            self.traces.pop_front();
        }
        self.traces.push_back(trace);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Trace> {
        self.traces.iter()
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::word;

    const T0: RewardTypeId = RewardTypeId(0);
    const T1: RewardTypeId = RewardTypeId(1);

    fn step(sym: Option<u32>, fired: &[RewardTypeId]) -> Step {
        Step {
            state: StateId(0),
            action: ActionId(sym.unwrap_or(0) as u16),
            next: StateId(0),
            symbol: sym.map(Symbol),
            markov_reward: 0.0,
            fired: Fired::of(fired),
            terminal: false,
        }
    }

    fn trace(symbols: &[u32], fire_at: &[(usize, RewardTypeId)]) -> Trace {
        let mut tr = Trace::new(StateId(0));
        for (i, &s) in symbols.iter().enumerate() {
            let fired: Vec<_> = fire_at.iter().filter(|(p, _)| *p == i + 1).map(|(_, t)| *t).collect();
            tr.record_step(step(Some(s), &fired));
        }
        tr.close();
        tr
    }

    #[test]
    fn first_symbol_without_reward_is_unlabeled() {
        let mut tr = Trace::new(StateId(0));
        tr.record_step(step(Some(0), &[]));
        assert_eq!(tr.symbols(), &word(&[0])[..]);
        assert_eq!(tr.label(T0), Label::Unknown);
    }

    #[test]
    fn firing_on_fifth_step_makes_a_positive_of_length_five() {
        let mut tr = Trace::new(StateId(0));
        for _ in 0..4 {
            tr.record_step(step(Some(0), &[]));
        }
        tr.record_step(step(Some(2), &[T0]));
        assert_eq!(tr.len(), 5);
        assert_eq!(tr.label(T0), Label::Positive);
        assert_eq!(tr.label(T1), Label::Unknown);
    }

    #[test]
    fn filtered_step_leaves_word_unchanged() {
        let mut tr = Trace::new(StateId(0));
        tr.record_step(step(Some(3), &[]));
        tr.record_step(step(None, &[]));
        assert_eq!(tr.symbols(), &word(&[3])[..]);
        assert_eq!(tr.steps().len(), 2);
    }

    #[test]
    fn close_episode_files_positive_and_prefix_labels() {
        let mut store = TraceStore::new(1, StoreConfig::default());
        store.close_episode(&trace(&[0, 0, 0, 0, 2], &[(5, T0)]));
        assert_eq!(store.n_positives(T0), 1);
        assert_eq!(store.n_negatives(T0), 0);
        let s = &store.samples(T0)[0];
        assert_eq!(s.word.len(), 5);
        assert_eq!(s.labels, vec![Some(false), Some(false), Some(false), Some(false), Some(false), Some(true)]);
    }

    #[test]
    fn labels_are_per_type() {
        let mut store = TraceStore::new(2, StoreConfig::default());
        store.close_episode(&trace(&[1, 1, 0], &[(3, T0)]));
        assert_eq!(store.n_positives(T0), 1);
        assert_eq!(store.n_positives(T1), 0);
        assert_eq!(store.n_negatives(T1), 1);
    }

    #[test]
    fn duplicates_bump_weight() {
        let mut store = TraceStore::new(1, StoreConfig::default());
        store.close_episode(&trace(&[1, 1], &[]));
        store.close_episode(&trace(&[1, 1], &[]));
        let negs: Vec<_> = store.negatives(T0).collect();
        assert_eq!(negs.len(), 1);
        assert_eq!(negs[0].weight, 2);
        assert_eq!(store.negative_weight(T0), 2);
    }

    #[test]
    fn negative_fifo_evicts_oldest() {
        let mut store = TraceStore::new(1, StoreConfig::default());
        for i in 0..1001u32 {
            let syms: Vec<u32> = (0..11).map(|b| (i >> b) & 1).collect();
            store.close_episode(&trace(&syms, &[]));
        }
        assert_eq!(store.n_negatives(T0), 1000);
        // the all-zero word (i = 0) was first in and is gone
        assert!(store.negatives(T0).all(|e| e.sample.word != word(&[0; 11])));
    }

    #[test]
    fn mid_trace_firing_keeps_full_trace_negative() {
        let mut store = TraceStore::new(1, StoreConfig::default());
        store.close_episode(&trace(&[0, 2, 1], &[(2, T0)]));
        assert_eq!(store.n_positives(T0), 1);
        let neg = store.negatives(T0).next().unwrap();
        assert!(!neg.sample.is_positive());
        assert!(neg.sample.label_at(2));
    }

    #[test]
    fn abbadingo_round_trip_with_weights() {
        let mut store = TraceStore::new(1, StoreConfig::default());
        store.close_episode(&trace(&[0, 2], &[(2, T0)]));
        store.close_episode(&trace(&[1], &[]));
        store.close_episode(&trace(&[1], &[]));
        let text = store.to_abbadingo(T0, 3);
        assert_eq!(text, "3 3\n1 2 0 2\n0 1 1\n0 1 1\n");
        let set = read_abbadingo(&text).unwrap();
        assert_eq!(set.alphabet, 3);
        assert_eq!(set.samples.len(), 2);
        assert_eq!(set.samples[1].weight, 2);
        assert_eq!(set.samples[0].end_label(), Some(true));
    }

    #[test]
    fn abbadingo_rejects_bad_lengths() {
        assert!(read_abbadingo("1 2\n1 3 0 1\n").is_err());
        assert!(read_abbadingo("1 2\n1 1 5\n").is_err());
        assert!(read_abbadingo("2 2\n1 1 0\n").is_err());
    }
}

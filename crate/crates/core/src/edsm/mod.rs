//! Passive automaton inference: evidence-driven state merging over a prefix
//! tree acceptor with the red-blue search order, plus the length-limiting
//! retry loop used when the learned machine comes out too large.

mod merge;
mod pta;

pub use merge::MergeState;
pub use pta::Pta;

use std::collections::{BTreeSet, VecDeque};

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::Dfa;
use crate::trace::Sample;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EdsmError {
    #[error("sample labels the prefix `{0}` both positive and negative")]
    Inconsistent(String),
    #[error("symbol {0} outside the alphabet")]
    SymbolOutOfRange(u32),
    #[error("red set grew past {0} states")]
    Oversized(usize),
}

/// Merge score. `PairCount` adds, per unified pair of same-labeled classes,
/// the smaller of their weighted evidence counts; `EvidenceSum` adds both.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Score {
    #[default]
    PairCount,
    EvidenceSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdsmConfig {
    pub score: Score,
    /// Larger learned machines count as failures.
    pub max_states: usize,
    pub max_fail: usize,
    /// Abort a run early once this many states are red.
    pub red_cap: usize,
}

impl Default for EdsmConfig {
    fn default() -> Self {
        Self {
            score: Score::PairCount,
            max_states: 20,
            max_fail: 20,
            red_cap: 80,
        }
    }
}

/// Runs red-blue EDSM from the PTA of `samples`.
pub fn edsm_run(alphabet: usize, samples: &[Sample], cfg: &EdsmConfig) -> Result<Dfa, EdsmError> {
    let pta = Pta::build(alphabet, samples)?;
    let ms = red_blue(&pta, cfg)?;
    Ok(quotient(&ms, alphabet))
}

/// The merge loop; returns the final partition.
pub fn red_blue(pta: &Pta, cfg: &EdsmConfig) -> Result<MergeState, EdsmError> {
    let k = pta.alphabet();
    let mut ms = MergeState::new(pta);
    let mut red: Vec<usize> = vec![0];
    loop {
        let red_ids: BTreeSet<usize> = red.iter().map(|&r| ms.class_id(r)).collect();
        let mut blues = BTreeSet::new();
        for &r in &red {
            for a in 0..k {
                if let Some(c) = ms.succ(r, a) {
                    let id = ms.class_id(c);
                    if !red_ids.contains(&id) {
                        blues.insert(id);
                    }
                }
            }
        }
        if blues.is_empty() {
            return Ok(ms);
        }
        let mut reds: Vec<usize> = red_ids.into_iter().collect();
        reds.sort_unstable();
        let mut best: Option<(u64, usize, usize)> = None;
        let mut promoted = None;
        for &b in &blues {
            let mut compatible = false;
            for &r in &reds {
                let mark = ms.mark();
                if let Some(s) = ms.try_merge(r, b, cfg.score) {
                    ms.rollback(mark);
                    compatible = true;
                    if best.is_none_or(|(bs, _, _)| s > bs) {
                        best = Some((s, r, b));
                    }
                }
            }
            if !compatible {
                promoted = Some(b);
                break;
            }
        }
        if let Some(b) = promoted {
            red.push(b);
            if red.len() > cfg.red_cap {
                return Err(EdsmError::Oversized(red.len()));
            }
            continue;
        }
        let (_, r, b) = best.expect("every blue has a compatible red here");
        ms.try_merge(r, b, cfg.score).expect("merge was compatible a moment ago");
        ms.commit();
    }
}

/// Quotient automaton of the partition: classes reachable from the root,
/// missing transitions to a rejecting sink, unlabeled classes rejecting.
/// Returned minimized.
pub fn quotient(ms: &MergeState, alphabet: usize) -> Dfa {
    let root = ms.find(0);
    let mut index: FxHashMap<usize, usize> = FxHashMap::default();
    let mut order = vec![root];
    index.insert(root, 0);
    let mut queue = VecDeque::from([root]);
    let mut edges: Vec<Option<usize>> = Vec::new();
    while let Some(c) = queue.pop_front() {
        for a in 0..alphabet {
            let t = ms.succ(c, a);
            if let Some(t) = t {
                if let std::collections::hash_map::Entry::Vacant(e) = index.entry(t) {
                    e.insert(order.len());
                    order.push(t);
                    queue.push_back(t);
                }
            }
            edges.push(t.map(|t| index[&t]));
        }
    }
    let n = order.len();
    let sink = n;
    let delta: Vec<u32> = edges
        .iter()
        .map(|e| e.unwrap_or(sink) as u32)
        .chain(std::iter::repeat_n(sink as u32, alphabet))
        .collect();
    let mut accepting: Vec<bool> = order.iter().map(|&c| ms.pos(c) > 0).collect();
    accepting.push(false);
    Dfa::new(n + 1, alphabet, delta, 0, accepting)
        .expect("quotient is well formed")
        .minimize()
}

/// Every labeled prefix of every sample is classified as labeled.
pub fn consistent(dfa: &Dfa, samples: &[Sample]) -> bool {
    samples.iter().all(|s| {
        let mut q = dfa.initial();
        s.labels.iter().enumerate().all(|(i, l)| {
            if i > 0 {
                q = dfa.next(q, s.word[i - 1]);
            }
            l.is_none_or(|l| dfa.is_accepting(q) == l)
        })
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttemptResult {
    Learned(usize),
    Oversized(usize),
    Failed(EdsmError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attempt {
    /// Negatives were cut to this many symbols.
    pub negative_limit: usize,
    pub result: AttemptResult,
}

#[derive(Debug, Clone)]
pub struct LearnReport {
    /// `None` when every attempt failed; the caller keeps its old machine.
    pub dfa: Option<Dfa>,
    pub attempts: Vec<Attempt>,
}

impl LearnReport {
    pub fn failures(&self) -> usize {
        self.attempts
            .iter()
            .filter(|a| !matches!(a.result, AttemptResult::Learned(_)))
            .count()
    }
}

/// Learns from positives and negatives, halving the negative length limit
/// after each oversized result until it reaches the shortest positive.
pub fn preprocess_and_learn(
    alphabet: usize,
    positives: &[Sample],
    negatives: &[Sample],
    cfg: &EdsmConfig,
) -> LearnReport {
    let floor = positives.iter().map(|s| s.word.len()).min().unwrap_or(0);
    let mut limit = negatives.iter().map(|s| s.word.len()).max().unwrap_or(0).max(floor);
    let mut attempts = Vec::new();
    while attempts.len() < cfg.max_fail {
        let mut samples: Vec<Sample> = positives.to_vec();
        samples.extend(negatives.iter().map(|s| {
            let mut s = s.clone();
            s.truncate(limit);
            s
        }));
        let result = match edsm_run(alphabet, &samples, cfg) {
            Ok(dfa) if dfa.n_states() <= cfg.max_states => {
                debug_assert!(consistent(&dfa, &samples));
                attempts.push(Attempt {
                    negative_limit: limit,
                    result: AttemptResult::Learned(dfa.n_states()),
                });
                return LearnReport {
                    dfa: Some(dfa),
                    attempts,
                };
            }
            Ok(dfa) => AttemptResult::Oversized(dfa.n_states()),
            Err(EdsmError::Oversized(n)) => AttemptResult::Oversized(n),
            Err(e) => AttemptResult::Failed(e),
        };
        let fatal = matches!(result, AttemptResult::Failed(_));
        attempts.push(Attempt {
            negative_limit: limit,
            result,
        });
        let next = (limit / 2).max(floor);
        if fatal || next == limit {
            break;
        }
        limit = next;
    }
    LearnReport { dfa: None, attempts }
}

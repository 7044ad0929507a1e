use serde::{Deserialize, Serialize};

use super::Runner;
use crate::automata::Dfa;
use crate::lstar::{LStar, Query};
use crate::trace::{LabeledWord, TraceStore};
use crate::types::{RewardTypeId, Symbol, Word};

/// Order in which the per-type L* sessions get forcing episodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryMode {
    /// Lowest-index type with an open membership query first.
    #[default]
    Prioritized,
    /// Round-robin over the types with an open membership query.
    Interleaved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Alg2Config {
    /// Forcing attempts per membership query before answering negative.
    pub k: usize,
    pub mode: QueryMode,
}

impl Default for Alg2Config {
    fn default() -> Self {
        Self {
            k: 100,
            mode: QueryMode::Prioritized,
        }
    }
}

enum Pending {
    /// Ask the L* session for its next query.
    Advance,
    Force { word: Word, attempts: usize },
    /// Hypothesis installed; waiting for a trace it misclassifies.
    Await(Dfa),
}

struct Session {
    lstar: LStar,
    pending: Pending,
}

impl Session {
    fn new(alphabet: usize) -> Self {
        Self {
            lstar: LStar::new(alphabet),
            pending: Pending::Advance,
        }
    }
}

/// Label of `w` for type `t` according to any retained trace extending it.
fn stored_label(store: &TraceStore, t: RewardTypeId, w: &[Symbol]) -> Option<bool> {
    store
        .positives(t)
        .chain(store.negatives(t))
        .find(|e| e.sample.word.starts_with(w))
        .map(|e| e.sample.label_at(w.len()))
}

/// Shortest prefix of `lw` that `h` labels differently, if any.
fn disagreement(h: &Dfa, lw: &LabeledWord, limit: usize) -> Option<usize> {
    let mut q = h.initial();
    for i in 0..=lw.word.len().min(limit) {
        if i > 0 {
            q = h.next(q, lw.word[i - 1]);
        }
        if h.is_accepting(q) != lw.label_at(i) {
            return Some(i);
        }
    }
    None
}

fn stored_counterexample(store: &TraceStore, t: RewardTypeId, h: &Dfa) -> Option<Word> {
    let mut best: Option<Word> = None;
    for e in store.positives(t).chain(store.negatives(t)) {
        let limit = best.as_ref().map_or(usize::MAX, |b| b.len().saturating_sub(1));
        if best.as_ref().is_some_and(|b| b.is_empty()) {
            break;
        }
        if let Some(i) = disagreement(h, &e.sample, limit) {
            best = Some(e.sample.word[..i].to_vec());
        }
    }
    best
}

/// Runs one L* session per reward type against the environment.
pub(super) fn run_alg2(runner: &mut Runner, cfg: &Alg2Config) {
    assert!(cfg.k >= 1, "k must be positive");
    let n_types = runner.reward_types().len();
    let alphabet = runner.alphabet().size();
    let mut sessions: Vec<Session> = (0..n_types).map(|_| Session::new(alphabet)).collect();
    let mut turn = 0;
    while !runner.exhausted() {
        for t in 0..n_types {
            advance(runner, &mut sessions[t], t);
        }
        let forcing: Vec<usize> = (0..n_types)
            .filter(|&t| matches!(sessions[t].pending, Pending::Force { .. }))
            .collect();
        let chosen = match cfg.mode {
            QueryMode::Prioritized => forcing.first().copied(),
            QueryMode::Interleaved => forcing
                .iter()
                .copied()
                .find(|&t| t >= turn)
                .or_else(|| forcing.first().copied()),
        };
        let episodes = runner.stats.episodes;
        match chosen {
            Some(t) => {
                turn = t + 1;
                force_attempt(runner, &mut sessions[t], t, cfg.k);
            }
            None => runner.explore_episode(),
        }
        if runner.stats.episodes == episodes {
            continue;
        }
        // Every finished episode is checked against the waiting hypotheses.
        let Some(trace) = runner.last_trace() else { continue };
        let mut found = 0;
        for (t, s) in sessions.iter_mut().enumerate() {
            if let Pending::Await(h) = &s.pending {
                let lw = trace.labeled(RewardTypeId(t as u16));
                if let Some(i) = disagreement(h, &lw, usize::MAX) {
                    let cx = lw.word[..i].to_vec();
                    found += 1;
                    if s.lstar.answer_equivalence(Some(cx)).is_err() {
                        restart(s, alphabet, t);
                    } else {
                        s.pending = Pending::Advance;
                    }
                }
            }
        }
        runner.stats.counterexamples += found;
    }
    runner.stats.provisional = sessions.iter().any(|s| !matches!(s.pending, Pending::Await(_)));
}

fn restart(s: &mut Session, alphabet: usize, t: usize) {
    log::debug!("restarting L* for type {t} after inconsistent answers");
    *s = Session::new(alphabet);
}

/// Answers every query that needs no environment steps, installing each new
/// hypothesis, until a forcing episode or a new trace is needed.
fn advance(runner: &mut Runner, s: &mut Session, t: usize) {
    let id = RewardTypeId(t as u16);
    let alphabet = runner.alphabet().size();
    let limit = runner.episode_limit();
    while matches!(s.pending, Pending::Advance) {
        let q = match s.lstar.next_query() {
            Ok(q) => q,
            Err(_) => {
                restart(s, alphabet, t);
                continue;
            }
        };
        match q {
            Query::Membership(w) => {
                runner.stats.membership_queries += 1;
                let answer = if w.is_empty() {
                    Some(false)
                } else if let Some(b) = stored_label(&runner.store, id, &w) {
                    runner.stats.membership_from_store += 1;
                    Some(b)
                } else if w.len() > limit {
                    runner.stats.membership_heuristic += 1;
                    Some(false)
                } else {
                    None
                };
                match answer {
                    Some(b) => {
                        if s.lstar.answer_membership(&w, b).is_err() {
                            restart(s, alphabet, t);
                        }
                    }
                    None => s.pending = Pending::Force { word: w, attempts: 0 },
                }
            }
            Query::Equivalence(h) | Query::Finished(h) => {
                runner.stats.equivalence_queries += 1;
                if !runner.machines().get(t).same_language(&h) {
                    let mut m = runner.machines().clone();
                    m.replace(t, h.clone());
                    runner.set_machines(m);
                }
                match stored_counterexample(&runner.store, id, &h) {
                    Some(cx) => {
                        runner.stats.counterexamples += 1;
                        if s.lstar.answer_equivalence(Some(cx)).is_err() {
                            restart(s, alphabet, t);
                        }
                    }
                    None => s.pending = Pending::Await(h),
                }
            }
        }
    }
}

/// One episode trying to realize the pending membership word; the rest of
/// the episode is ordinary exploration.
fn force_attempt(runner: &mut Runner, s: &mut Session, t: usize, k: usize) {
    let Pending::Force { word, attempts } = &mut s.pending else {
        return;
    };
    runner.stats.forcing_attempts += 1;
    *attempts += 1;
    let alphabet = runner.alphabet();
    let episodes = runner.stats.episodes;
    runner.begin_episode();
    let mut i = 0;
    while i < word.len() && runner.in_episode() && !runner.exhausted() {
        let info = runner.step(alphabet.action_of(word[i]));
        match info.symbol {
            None => {}
            Some(sym) if sym == word[i] => i += 1,
            Some(_) => break,
        }
    }
    runner.finish_episode();
    let closed = runner.stats.episodes > episodes;
    let answer = if i == word.len() && closed {
        let trace = runner.last_trace().expect("an episode just closed");
        Some(trace.labeled(RewardTypeId(t as u16)).label_at(word.len()))
    } else if *attempts >= k {
        runner.stats.membership_heuristic += 1;
        Some(false)
    } else {
        None
    };
    if let Some(b) = answer {
        let w = std::mem::take(word);
        s.pending = Pending::Advance;
        if s.lstar.answer_membership(&w, b).is_err() {
            restart(s, alphabet.size(), t);
        }
    }
}

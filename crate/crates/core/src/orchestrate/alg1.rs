use serde::{Deserialize, Serialize};

use super::Runner;
use crate::edsm::{consistent, preprocess_and_learn, EdsmConfig};
use crate::automata::Dfa;
use crate::trace::{Sample, TraceStore};
use crate::types::RewardTypeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Alg1Config {
    /// Episodes between learning rounds.
    pub c_trials: usize,
    /// A type is relearned once more than this many positives were seen.
    pub c_pos: u64,
}

impl Default for Alg1Config {
    fn default() -> Self {
        Self {
            c_trials: 100,
            c_pos: 10,
        }
    }
}

/// Alternates bursts of RL episodes with EDSM relearning, per reward type.
pub(super) fn run_alg1(runner: &mut Runner, cfg: &Alg1Config, edsm: &EdsmConfig) {
    assert!(cfg.c_trials >= 1 && cfg.c_pos >= 1, "c_trials and c_pos must be positive");
    let n_types = runner.reward_types().len();
    let alphabet = runner.alphabet().size();
    let mut learned_at = vec![0u64; n_types];
    while !runner.exhausted() {
        for _ in 0..cfg.c_trials {
            runner.explore_episode();
        }
        if runner.exhausted() {
            break;
        }
        let mut machines = runner.machines().clone();
        let mut changed = false;
        for t in 0..n_types {
            let id = RewardTypeId(t as u16);
            let seen = runner.store.positives_seen(id);
            if seen <= cfg.c_pos || seen == learned_at[t] {
                continue;
            }
            learned_at[t] = seen;
            runner.stats.edsm_calls += 1;
            match relearn(machines.get(t), &runner.store, id, alphabet, edsm) {
                Relearn::Kept => {}
                Relearn::Replaced(dfa) => {
                    machines.replace(t, dfa);
                    changed = true;
                }
                Relearn::Failed(attempts) => {
                    runner.stats.edsm_failures += 1;
                    log::debug!("edsm gave up on type {t} after {attempts} attempts");
                }
            }
        }
        if changed {
            runner.set_machines(machines);
        }
    }
}


#[derive(Debug, Clone, PartialEq)]
pub enum Relearn {
    /// The current machine already fits, or EDSM found the same language.
    Kept,
    Replaced(Dfa),
    /// Every attempt failed; the current machine stays.
    Failed(usize),
}

/// One learning round for type `t` against the retained samples.
pub fn relearn(current: &Dfa, store: &TraceStore, t: RewardTypeId, alphabet: usize, cfg: &EdsmConfig) -> Relearn {
    if consistent(current, &store.samples(t)) {
        return Relearn::Kept;
    }
    let pos: Vec<Sample> = store.positives(t).map(|e| Sample::from_labeled(&e.sample, e.weight)).collect();
    let neg: Vec<Sample> = store.negatives(t).map(|e| Sample::from_labeled(&e.sample, e.weight)).collect();
    let report = preprocess_and_learn(alphabet, &pos, &neg, cfg);
    match report.dfa {
        Some(dfa) if dfa.same_language(current) => Relearn::Kept,
        Some(dfa) => Relearn::Replaced(dfa),
        None => Relearn::Failed(report.attempts.len()),
    }
}

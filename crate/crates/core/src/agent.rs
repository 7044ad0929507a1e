//! What the orchestrator needs from a reinforcement learner.

use serde::{Deserialize, Serialize};

use crate::automata::{ProductState, RewardMachines};
use crate::env::SimRng;
use crate::trace::Trace;
use crate::types::{ActionId, Fired, RewardType, Symbol};

/// One product-space transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub from: ProductState,
    pub action: ActionId,
    pub to: ProductState,
    pub symbol: Option<Symbol>,
    pub fired: Fired,
    pub markov_reward: f64,
    pub terminal: bool,
    pub truncated: bool,
}

impl Transition {
    /// Markovian reward plus the values of every fired type.
    pub fn reward(&self, types: &[RewardType]) -> f64 {
        self.markov_reward + self.fired.value(types)
    }
}

/// ε(step) = max(end, start − decay·step).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Exploration {
    pub start: f64,
    pub end: f64,
    pub decay: f64,
}

impl Default for Exploration {
    fn default() -> Self {
        Self {
            start: 0.9,
            end: 0.1,
            decay: 1e-6,
        }
    }
}

impl Exploration {
    pub fn epsilon(&self, step: u64) -> f64 {
        let e = self.start - self.decay * step as f64;
        // 0.9 - 1e-6 * 800_000 rounds to just above 0.1.
        if e <= self.end + 1e-12 {
            self.end
        } else {
            e
        }
    }

    pub fn constant(eps: f64) -> Self {
        Self {
            start: eps,
            end: eps,
            decay: 0.0,
        }
    }
}

pub trait Agent {
    /// ε-greedy choice. `steps_left` counts the steps remaining in the episode.
    fn act(&mut self, p: &ProductState, steps_left: usize, eps: f64, rng: &mut SimRng) -> ActionId;
    /// Greedy choice; must not change what the agent has learned.
    fn greedy(&mut self, p: &ProductState, steps_left: usize, rng: &mut SimRng) -> ActionId;
    fn observe(&mut self, t: &Transition);
    /// Switches to new reward machines, rebuilding learned state from
    /// `replay` (oldest first) where the learner needs it.
    fn set_machines(&mut self, machines: RewardMachines, replay: &mut dyn Iterator<Item = &Trace>);
    fn machines(&self) -> &RewardMachines;
    fn name(&self) -> &'static str;
}

/// Uniform choice among the indices of the maximal entries.
pub fn argmax_random(values: &[f64], rng: &mut SimRng) -> usize {
    use rand::Rng;
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties = values.iter().filter(|&&v| v == best).count();
    let mut pick = if ties > 1 { rng.random_range(0..ties) } else { 0 };
    for (i, &v) in values.iter().enumerate() {
        if v == best {
            if pick == 0 {
                return i;
            }
            pick -= 1;
        }
    }
    unreachable!("a maximum exists")
}

/// ε-greedy wrapper around a greedy choice.
pub fn epsilon_greedy(
    n_actions: usize,
    eps: f64,
    rng: &mut SimRng,
    greedy: impl FnOnce(&mut SimRng) -> ActionId,
) -> ActionId {
    use rand::Rng;
    if eps > 0.0 && rng.random::<f64>() < eps {
        ActionId(rng.random_range(0..n_actions) as u16)
    } else {
        greedy(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::seeded_rng;

    #[test]
    fn schedule_hits_floor_at_800k() {
        let e = Exploration::default();
        assert_eq!(e.epsilon(0), 0.9);
        assert!((e.epsilon(400_000) - 0.5).abs() < 1e-12);
        assert!((e.epsilon(799_999) - 0.1).abs() < 1e-5);
        assert_eq!(e.epsilon(800_000), 0.1);
        assert_eq!(e.epsilon(5_000_000), 0.1);
    }

    #[test]
    fn full_exploration_is_uniform() {
        let mut rng = seeded_rng(1, 0);
        let mut counts = [0u32; 3];
        let n = 1_000_000;
        for _ in 0..n {
            let a = epsilon_greedy(3, 1.0, &mut rng, |_| ActionId(0));
            counts[a.index()] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 0.01);
        }
    }

    #[test]
    fn ties_are_broken_uniformly() {
        let mut rng = seeded_rng(2, 0);
        let mut counts = [0u32; 4];
        for _ in 0..40_000 {
            counts[argmax_random(&[1.0, 3.0, 3.0, 3.0], &mut rng)] += 1;
        }
        assert_eq!(counts[0], 0);
        for &c in &counts[1..] {
            assert!((c as f64 / 40_000.0 - 1.0 / 3.0).abs() < 0.02);
        }
        assert_eq!(argmax_random(&[0.0, 5.0, 1.0], &mut rng), 1);
    }
}

//! Exact finite-horizon value iteration over the product of a known model
//! and the ground-truth monitors. Shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use nmrl::automata::Dfa;
use nmrl::envs::mab::{MabConfig, MabEnv};
use nmrl::envs::robot::{Branch, RobotConfig, RobotEnv};
use nmrl::{seeded_rng, ActionId, Alphabet, Environment, StateId};

pub struct Model<'a> {
    pub n_actions: usize,
    pub alphabet: Alphabet,
    pub start: Vec<(f64, StateId)>,
    pub branches: Box<dyn Fn(StateId, ActionId) -> Vec<Branch> + 'a>,
    pub monitors: Vec<Dfa>,
    pub values: Vec<f64>,
    pub gamma: f64,
    pub horizon: usize,
}

impl Model<'_> {
    /// Optimal expected discounted return from the start distribution.
    pub fn optimal_value(&self) -> f64 {
        let mut memo = HashMap::new();
        let q0: Vec<usize> = self.monitors.iter().map(|d| d.initial()).collect();
        self.start
            .iter()
            .map(|&(p, s)| p * self.value(s, &q0, self.horizon, &mut memo))
            .sum()
    }

    fn value(&self, s: StateId, q: &[usize], h: usize, memo: &mut HashMap<(u32, Vec<usize>, usize), f64>) -> f64 {
        if h == 0 {
            return 0.0;
        }
        let key = (s.0, q.to_vec(), h);
        if let Some(&v) = memo.get(&key) {
            return v;
        }
        let mut best = f64::NEG_INFINITY;
        for a in 0..self.n_actions {
            let a = ActionId(a as u16);
            let mut total = 0.0;
            for b in (self.branches)(s, a) {
                let mut r = b.markov_reward;
                let mut next_q = q.to_vec();
                if let Some(sym) = self.alphabet.symbol(a, b.next, b.effective) {
                    for (i, d) in self.monitors.iter().enumerate() {
                        next_q[i] = d.next(q[i], sym);
                        if d.is_accepting(next_q[i]) {
                            r += self.values[i];
                        }
                    }
                }
                let cont = if b.terminal {
                    0.0
                } else {
                    self.gamma * self.value(b.next, &next_q, h - 1, memo)
                };
                total += b.prob * (r + cont);
            }
            best = best.max(total);
        }
        memo.insert(key, best);
        best
    }
}

pub fn mab_optimum(cfg: MabConfig, gamma: f64) -> f64 {
    let mut env = MabEnv::new(cfg).unwrap();
    let s = env.reset();
    let model = Model {
        n_actions: env.n_actions(),
        alphabet: env.alphabet(),
        start: vec![(1.0, s)],
        branches: Box::new(move |s, _| {
            vec![Branch {
                prob: 1.0,
                next: s,
                effective: true,
                markov_reward: 0.0,
                terminal: false,
            }]
        }),
        monitors: env.ground_truth(),
        values: env.reward_types().iter().map(|t| t.value).collect(),
        gamma,
        horizon: env.episode_limit(),
    };
    model.optimal_value()
}

pub fn robot_optimum(cfg: RobotConfig, gamma: f64) -> f64 {
    let env = RobotEnv::new(cfg, seeded_rng(0, 0)).unwrap();
    let model = Model {
        n_actions: env.n_actions(),
        alphabet: env.alphabet(),
        start: env.initial_distribution(),
        branches: Box::new(|s, a| env.transitions(s, a)),
        monitors: env.ground_truth(),
        values: env.reward_types().iter().map(|t| t.value).collect(),
        gamma,
        horizon: env.episode_limit(),
    };
    model.optimal_value()
}

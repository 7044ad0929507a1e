//! Tabular Q-learning over product states.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::agent::{argmax_random, epsilon_greedy, Agent, Transition};
use crate::automata::{ProductState, RewardMachines};
use crate::env::SimRng;
use crate::trace::Trace;
use crate::types::{ActionId, RewardType};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QConfig {
    pub alpha: f64,
    /// Environment default when absent.
    pub gamma: Option<f64>,
    /// Most recent traces replayed after a machine change.
    pub replay_traces: usize,
}

impl Default for QConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: None,
            replay_traces: 50_000,
        }
    }
}

/// Q-values keyed by the product-state key of the current machines.
#[derive(Debug, Clone)]
pub struct QTable {
    values: FxHashMap<u64, Box<[f64]>>,
    n_actions: usize,
}

impl QTable {
    pub fn new(n_actions: usize) -> Self {
        Self {
            values: FxHashMap::default(),
            n_actions,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct QLearner {
    alpha: f64,
    gamma: f64,
    reward_types: Vec<RewardType>,
    machines: RewardMachines,
    table: QTable,
    replay_traces: usize,
}

impl QLearner {
    pub fn new(
        cfg: QConfig,
        gamma: f64,
        n_actions: usize,
        reward_types: Vec<RewardType>,
        machines: RewardMachines,
    ) -> Self {
        assert!(cfg.alpha > 0.0 && cfg.alpha < 1.0, "alpha must lie in (0, 1)");
        assert!(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
        Self {
            alpha: cfg.alpha,
            gamma,
            reward_types,
            machines,
            table: QTable::new(n_actions),
            replay_traces: cfg.replay_traces,
        }
    }

    pub fn table(&self) -> &QTable {
        &self.table
    }

    /// Value a missing entry reads as: the sum of the values of the types
    /// whose machine component is accepting.
    pub fn init_value(&self, p: &ProductState) -> f64 {
        (0..self.machines.len())
            .filter(|&t| self.machines.accepting(&p.machine, t))
            .map(|t| self.reward_types[t].value)
            .sum()
    }

    pub fn q(&self, p: &ProductState, a: ActionId) -> f64 {
        match self.table.values.get(&self.machines.key(p)) {
            Some(row) => row[a.index()],
            None => self.init_value(p),
        }
    }

    pub fn row(&self, p: &ProductState) -> Vec<f64> {
        match self.table.values.get(&self.machines.key(p)) {
            Some(row) => row.to_vec(),
            None => vec![self.init_value(p); self.table.n_actions],
        }
    }

    fn max_q(&self, p: &ProductState) -> f64 {
        self.row(p).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Q(s,a) ← (1−α)Q(s,a) + α(r + γ·max Q(s',·)); no bootstrap past a
    /// terminal state.
    pub fn update(&mut self, p: &ProductState, a: ActionId, r: f64, next: &ProductState, terminal: bool) {
        let target = r + if terminal { 0.0 } else { self.gamma * self.max_q(next) };
        let init = self.init_value(p);
        let key = self.machines.key(p);
        let n = self.table.n_actions;
        let row = self.table.values.entry(key).or_insert_with(|| vec![init; n].into_boxed_slice());
        let old = row[a.index()];
        row[a.index()] = (1.0 - self.alpha) * old + self.alpha * target;
    }

    /// Fresh table under `machines`, then every trace replayed oldest first.
    pub fn reinit_with_automata<'a>(&mut self, machines: RewardMachines, traces: impl Iterator<Item = &'a Trace>) {
        self.machines = machines;
        self.table = QTable::new(self.table.n_actions);
        for tr in traces {
            let mut p = self.machines.start(tr.start);
            for st in tr.steps() {
                let mut machine = p.machine.clone();
                if let Some(sym) = st.symbol {
                    self.machines.advance(&mut machine, sym);
                }
                let next = ProductState {
                    mdp: st.next,
                    machine,
                };
                let r = st.markov_reward + st.fired.value(&self.reward_types);
                self.update(&p, st.action, r, &next, st.terminal);
                p = next;
            }
        }
    }
}

impl Agent for QLearner {
    fn act(&mut self, p: &ProductState, _steps_left: usize, eps: f64, rng: &mut SimRng) -> ActionId {
        let n = self.table.n_actions;
        epsilon_greedy(n, eps, rng, |rng| ActionId(argmax_random(&self.row(p), rng) as u16))
    }

    fn greedy(&mut self, p: &ProductState, _steps_left: usize, rng: &mut SimRng) -> ActionId {
        ActionId(argmax_random(&self.row(p), rng) as u16)
    }

    fn observe(&mut self, t: &Transition) {
        let r = t.reward(&self.reward_types);
        self.update(&t.from, t.action, r, &t.to, t.terminal);
    }

    fn set_machines(&mut self, machines: RewardMachines, replay: &mut dyn Iterator<Item = &Trace>) {
        let traces: Vec<&Trace> = replay.collect();
        let skip = traces.len().saturating_sub(self.replay_traces);
        self.reinit_with_automata(machines, traces.into_iter().skip(skip));
    }

    fn machines(&self) -> &RewardMachines {
        &self.machines
    }

    fn name(&self) -> &'static str {
        "qlearn"
    }
}

//! Model-based R-max over product states.
//!
//! The empirical model lives at the MDP level: counts of `(s, a)` and of
//! each observed outcome `(s', symbol, terminal)`. Product transitions are
//! derived on the fly by stepping the reward machines on the outcome symbol,
//! so changing machines never discards experience.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::agent::{epsilon_greedy, Agent, Transition};
use crate::automata::{ProductState, RewardMachines};
use crate::env::SimRng;
use crate::trace::Trace;
use crate::types::{ActionId, RewardType, StateId, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RmaxConfig {
    /// Visits before a pair is known; environment default when absent.
    pub known_threshold: Option<u32>,
    /// Observations before a pair's reward is trusted.
    pub reward_obs_min: u32,
    pub gamma: Option<f64>,
    /// Plan over this many remaining steps instead of an infinite horizon;
    /// environment default when absent, 0 forces infinite.
    pub horizon: Option<usize>,
    pub tolerance: Option<f64>,
    pub max_iterations: usize,
}

impl Default for RmaxConfig {
    fn default() -> Self {
        Self {
            known_threshold: None,
            reward_obs_min: 3,
            gamma: None,
            horizon: None,
            tolerance: None,
            max_iterations: 200_000,
        }
    }
}

/// Fully resolved parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmaxParams {
    pub known_threshold: u32,
    pub reward_obs_min: u32,
    pub gamma: f64,
    pub horizon: Horizon,
    pub tolerance: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Infinite,
    Finite(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Outcome {
    next: StateId,
    symbol: Option<Symbol>,
    terminal: bool,
    count: u32,
}

#[derive(Debug, Clone, Default)]
struct PairStats {
    n: u32,
    outcomes: SmallVec<[Outcome; 3]>,
    markov_sum: f64,
    fired: SmallVec<[u32; 2]>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("value iteration stopped after {iterations} sweeps with residual {residual}")]
    NotConverged { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanSummary {
    pub states: usize,
    pub iterations: usize,
    pub residual: f64,
}

const TERMINAL: u32 = u32::MAX;

#[derive(Debug, Clone)]
enum Edge {
    Unknown,
    Known { reward: f64, branches: Vec<(f64, u32)> },
}

#[derive(Debug, Clone)]
struct Plan {
    index: FxHashMap<u64, u32>,
    edges: Vec<Edge>,
    /// Infinite horizon: one row. Finite: row `h` holds values with `h` steps left.
    values: Vec<Vec<f64>>,
    summary: PlanSummary,
}

#[derive(Debug, Clone)]
pub struct Rmax {
    params: RmaxParams,
    n_actions: usize,
    reward_types: Vec<RewardType>,
    r_max: f64,
    machines: RewardMachines,
    model: FxHashMap<u64, PairStats>,
    stale: Vec<bool>,
    plan: Option<Plan>,
    dirty: bool,
    plans_built: u64,
    not_converged: u64,
}

impl Rmax {
    pub fn new(params: RmaxParams, n_actions: usize, reward_types: Vec<RewardType>, machines: RewardMachines) -> Self {
        let r_max = reward_types.iter().map(|t| t.value).fold(0.0, f64::max);
        let n_types = reward_types.len();
        Self {
            params,
            n_actions,
            reward_types,
            r_max,
            machines,
            model: FxHashMap::default(),
            stale: vec![false; n_types],
            plan: None,
            dirty: true,
            plans_built: 0,
            not_converged: 0,
        }
    }

    pub fn params(&self) -> &RmaxParams {
        &self.params
    }

    fn pair(&self, s: StateId, a: ActionId) -> u64 {
        s.0 as u64 * self.n_actions as u64 + a.0 as u64
    }

    pub fn visits(&self, s: StateId, a: ActionId) -> u32 {
        self.model.get(&self.pair(s, a)).map_or(0, |p| p.n)
    }

    fn threshold(&self) -> u32 {
        self.params.known_threshold.max(self.params.reward_obs_min)
    }

    pub fn is_known(&self, s: StateId, a: ActionId) -> bool {
        self.visits(s, a) >= self.threshold()
    }

    /// Empirical successor distribution over MDP states for a known pair.
    pub fn successors(&self, s: StateId, a: ActionId) -> Vec<(StateId, f64)> {
        let Some(p) = self.model.get(&self.pair(s, a)) else {
            return Vec::new();
        };
        let mut by_state: Vec<(StateId, u32)> = Vec::new();
        for o in &p.outcomes {
            match by_state.iter_mut().find(|(s, _)| *s == o.next) {
                Some(e) => e.1 += o.count,
                None => by_state.push((o.next, o.count)),
            }
        }
        by_state.into_iter().map(|(s, c)| (s, c as f64 / p.n as f64)).collect()
    }

    /// Types whose machine disagreed with an observed reward since the
    /// machines were last replaced.
    pub fn stale(&self) -> &[bool] {
        &self.stale
    }

    /// Per type: some pair has been seen both with and without that reward.
    pub fn non_markovian_candidates(&self) -> Vec<bool> {
        let mut out = vec![false; self.reward_types.len()];
        for p in self.model.values() {
            for (t, &f) in p.fired.iter().enumerate() {
                out[t] |= f > 0 && f < p.n;
            }
        }
        out
    }

    pub fn plans_built(&self) -> u64 {
        self.plans_built
    }

    pub fn not_converged(&self) -> u64 {
        self.not_converged
    }

    /// Records one MDP-level observation.
    pub fn observe_mdp(&mut self, t: &Transition) {
        let (next, symbol) = (t.to.mdp, t.symbol);
        let threshold = self.threshold();
        let key = self.pair(t.from.mdp, t.action);
        let n_types = self.reward_types.len();
        let stats = self.model.entry(key).or_insert_with(|| PairStats {
            fired: SmallVec::from_elem(0, n_types),
            ..PairStats::default()
        });
        stats.n += 1;
        stats.markov_sum += t.markov_reward;
        for ty in t.fired.iter() {
            stats.fired[ty.index()] += 1;
        }
        match stats
            .outcomes
            .iter_mut()
            .find(|o| o.next == next && o.symbol == symbol && o.terminal == t.terminal)
        {
            Some(o) => o.count += 1,
            None => stats.outcomes.push(Outcome {
                next,
                symbol,
                terminal: t.terminal,
                count: 1,
            }),
        }
        if stats.n == threshold {
            self.dirty = true;
        }
    }

    fn check_machines(&mut self, t: &Transition) {
        for ty in 0..self.machines.len() {
            if self.stale[ty] || self.machines.get(ty).n_states() == 1 {
                continue;
            }
            let predicted = t.symbol.is_some() && self.machines.accepting(&t.to.machine, ty);
            if predicted != t.fired.contains(crate::types::RewardTypeId(ty as u16)) {
                self.stale[ty] = true;
                self.dirty = true;
            }
        }
    }

    /// Expected one-step reward and product successors of a known pair.
    fn edge(&self, p: &ProductState, a: ActionId) -> Edge {
        let Some(stats) = self.model.get(&self.pair(p.mdp, a)) else {
            return Edge::Unknown;
        };
        if stats.n < self.threshold() {
            return Edge::Unknown;
        }
        let n = stats.n as f64;
        let mut reward = stats.markov_sum / n;
        for ty in 0..self.reward_types.len() {
            if self.stale[ty] {
                continue;
            }
            let v = self.reward_types[ty].value;
            if self.machines.get(ty).n_states() == 1 {
                reward += v * stats.fired[ty] as f64 / n;
            } else {
                let dfa = self.machines.get(ty);
                for o in &stats.outcomes {
                    if let Some(sym) = o.symbol {
                        if dfa.is_accepting(dfa.next(p.machine[ty] as usize, sym)) {
                            reward += v * o.count as f64 / n;
                        }
                    }
                }
            }
        }
        Edge::Known {
            reward,
            branches: Vec::new(),
        }
    }

    /// Builds the reachable product graph from `root` and runs value iteration.
    pub fn plan_from(&mut self, root: &ProductState) -> Result<PlanSummary, PlanError> {
        let mut index: FxHashMap<u64, u32> = FxHashMap::default();
        let mut states: Vec<ProductState> = vec![root.clone()];
        index.insert(self.machines.key(root), 0);
        let mut edges: Vec<Edge> = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let p = states[i].clone();
            for a in 0..self.n_actions {
                let a = ActionId(a as u16);
                let mut edge = self.edge(&p, a);
                if let Edge::Known { branches, .. } = &mut edge {
                    let stats = &self.model[&self.pair(p.mdp, a)];
                    let n = stats.n as f64;
                    for o in &stats.outcomes {
                        let prob = o.count as f64 / n;
                        if o.terminal {
                            branches.push((prob, TERMINAL));
                            continue;
                        }
                        let mut machine = p.machine.clone();
                        if let Some(sym) = o.symbol {
                            self.machines.advance(&mut machine, sym);
                        }
                        let q = ProductState { mdp: o.next, machine };
                        let key = self.machines.key(&q);
                        let j = *index.entry(key).or_insert_with(|| {
                            states.push(q);
                            queue.push_back(states.len() - 1);
                            (states.len() - 1) as u32
                        });
                        branches.push((prob, j));
                    }
                }
                edges.push(edge);
            }
        }
        let n = states.len();
        let k = self.n_actions;
        let gamma = self.params.gamma;
        let mut result = Ok(());
        let (values, summary) = match self.params.horizon {
            Horizon::Infinite => {
                let optimistic = self.r_max / (1.0 - gamma);
                let mut v = vec![0.0; n];
                let mut iterations = 0;
                let mut residual = f64::INFINITY;
                while iterations < self.params.max_iterations {
                    iterations += 1;
                    residual = 0.0f64;
                    let mut next = vec![0.0; n];
                    for (s, slot) in next.iter_mut().enumerate() {
                        let best = (0..k)
                            .map(|a| q_value(&edges[s * k + a], &v, gamma, optimistic))
                            .fold(f64::NEG_INFINITY, f64::max);
                        residual = residual.max((best - v[s]).abs());
                        *slot = best;
                    }
                    v = next;
                    if residual < self.params.tolerance {
                        break;
                    }
                }
                if residual >= self.params.tolerance {
                    result = Err(PlanError::NotConverged { iterations, residual });
                }
                (
                    vec![v],
                    PlanSummary {
                        states: n,
                        iterations,
                        residual,
                    },
                )
            }
            Horizon::Finite(h) => {
                let mut rows = vec![vec![0.0; n]];
                for step in 1..=h {
                    let prev = &rows[step - 1];
                    let optimistic = self.r_max * discounted_steps(gamma, step);
                    let row: Vec<f64> = (0..n)
                        .map(|s| {
                            (0..k)
                                .map(|a| q_value(&edges[s * k + a], prev, gamma, optimistic))
                                .fold(f64::NEG_INFINITY, f64::max)
                        })
                        .collect();
                    rows.push(row);
                }
                (
                    rows,
                    PlanSummary {
                        states: n,
                        iterations: h,
                        residual: 0.0,
                    },
                )
            }
        };
        self.plans_built += 1;
        if result.is_err() {
            self.not_converged += 1;
        }
        self.plan = Some(Plan {
            index,
            edges,
            values,
            summary,
        });
        self.dirty = false;
        result.map(|_| summary)
    }

    fn ensure_plan(&mut self, p: &ProductState) -> u32 {
        let key = self.machines.key(p);
        if !self.dirty {
            if let Some(&i) = self.plan.as_ref().and_then(|pl| pl.index.get(&key)) {
                return i;
            }
        }
        let _ = self.plan_from(p);
        0
    }

    /// Action values at `p` with `steps_left` steps remaining.
    pub fn q_values(&mut self, p: &ProductState, steps_left: usize) -> Vec<f64> {
        let i = self.ensure_plan(p) as usize;
        let plan = self.plan.as_ref().expect("plan just built");
        let k = self.n_actions;
        let gamma = self.params.gamma;
        let (prev, optimistic) = match self.params.horizon {
            Horizon::Infinite => (&plan.values[0], self.r_max / (1.0 - gamma)),
            Horizon::Finite(h) => {
                let left = steps_left.clamp(1, h);
                (&plan.values[left - 1], self.r_max * discounted_steps(gamma, left))
            }
        };
        (0..k).map(|a| q_value(&plan.edges[i * k + a], prev, gamma, optimistic)).collect()
    }

    /// Planned value of `p` with `steps_left` steps remaining.
    pub fn value(&mut self, p: &ProductState, steps_left: usize) -> f64 {
        self.q_values(p, steps_left).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn last_plan(&self) -> Option<PlanSummary> {
        self.plan.as_ref().map(|p| p.summary)
    }

    /// Counts, known flags, and outcome distributions, one line per pair.
    pub fn dump(&self) -> String {
        let mut keys: Vec<&u64> = self.model.keys().collect();
        keys.sort_unstable();
        let mut out = String::from("# state action visits known markov_mean fired outcomes(next:symbol:terminal:count)\n");
        for &key in keys {
            let p = &self.model[&key];
            let (s, a) = (key / self.n_actions as u64, key % self.n_actions as u64);
            let _ = write!(
                out,
                "{s} {a} {} {} {:.6} {:?}",
                p.n,
                (p.n >= self.threshold()) as u8,
                p.markov_sum / p.n as f64,
                p.fired.as_slice()
            );
            for o in &p.outcomes {
                let sym = o.symbol.map_or("-".to_string(), |s| s.0.to_string());
                let _ = write!(out, " {}:{}:{}:{}", o.next.0, sym, o.terminal as u8, o.count);
            }
            out.push('\n');
        }
        out
    }
}

fn discounted_steps(gamma: f64, h: usize) -> f64 {
    (1.0 - gamma.powi(h as i32)) / (1.0 - gamma)
}

fn q_value(edge: &Edge, v: &[f64], gamma: f64, optimistic: f64) -> f64 {
    match edge {
        Edge::Unknown => optimistic,
        Edge::Known { reward, branches } => {
            reward
                + gamma
                    * branches
                        .iter()
                        .map(|&(p, j)| if j == TERMINAL { 0.0 } else { p * v[j as usize] })
                        .sum::<f64>()
        }
    }
}

fn first_max(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl Agent for Rmax {
    fn act(&mut self, p: &ProductState, steps_left: usize, eps: f64, rng: &mut SimRng) -> ActionId {
        let n = self.n_actions;
        epsilon_greedy(n, eps, rng, |_| ActionId(first_max(&self.q_values(p, steps_left)) as u16))
    }

    fn greedy(&mut self, p: &ProductState, steps_left: usize, _rng: &mut SimRng) -> ActionId {
        ActionId(first_max(&self.q_values(p, steps_left)) as u16)
    }

    fn observe(&mut self, t: &Transition) {
        self.observe_mdp(t);
        self.check_machines(t);
    }

    fn set_machines(&mut self, machines: RewardMachines, _replay: &mut dyn Iterator<Item = &Trace>) {
        self.machines = machines;
        self.stale = vec![false; self.reward_types.len()];
        self.plan = None;
        self.dirty = true;
    }

    fn machines(&self) -> &RewardMachines {
        &self.machines
    }

    fn name(&self) -> &'static str {
        "rmax"
    }
}

#[cfg(test)]
mod tests;

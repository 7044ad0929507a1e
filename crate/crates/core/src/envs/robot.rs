//! Robot World: a grid with stains to clean and fruits to carry to a basket.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::monitor::RewardMonitor;
use super::schemes::{robot_actions as act, robot_monitors, Scheme, REWARD_DELAY};
use crate::automata::Dfa;
use crate::env::{EnvError, Environment, SimRng, StepOutcome};
use crate::types::{
    ActionId, Alphabet, AlphabetMode, Fired, MarkovianHint, RewardType, RewardTypeId, StateId,
};

pub const MOVE_SUCCESS: f64 = 0.6;
pub const SLIP: f64 = 0.2;
pub const ACT_SUCCESS: f64 = 0.6;
pub const STEP_COST: f64 = -1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotConfig {
    pub width: usize,
    pub height: usize,
    pub start: (usize, usize),
    pub basket: (usize, usize),
    pub n_stains: usize,
    pub n_fruits: usize,
    pub steps_per_episode: usize,
    pub scheme: Scheme,
    pub reward: f64,
    pub alphabet: AlphabetMode,
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self {
            width: 5,
            height: 5,
            start: (0, 0),
            basket: (4, 4),
            n_stains: 2,
            n_fruits: 2,
            steps_per_episode: 60,
            scheme: Scheme::R1,
            reward: 100.0,
            alphabet: AlphabetMode::ActionOnly,
        }
    }
}

impl RobotConfig {
    /// The 3×3, one stain, one fruit, 30-step world.
    pub fn reduced(scheme: Scheme) -> Self {
        Self {
            width: 3,
            height: 3,
            basket: (2, 2),
            n_stains: 1,
            n_fruits: 1,
            steps_per_episode: 30,
            scheme,
            ..Self::default()
        }
    }

    fn cells(&self) -> usize {
        self.width * self.height
    }

    fn cell(&self, (x, y): (usize, usize)) -> usize {
        y * self.width + x
    }

    fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: &str| Err(EnvError::Config(m.to_string()));
        if self.width == 0 || self.height == 0 {
            return bad("empty grid");
        }
        if self.start.0 >= self.width || self.start.1 >= self.height {
            return bad("start outside the grid");
        }
        if self.basket.0 >= self.width || self.basket.1 >= self.height {
            return bad("basket outside the grid");
        }
        let reserved = if self.start == self.basket { 1 } else { 2 };
        if self.n_stains + self.n_fruits + reserved > self.cells() {
            return bad("not enough free cells for stains and fruits");
        }
        if self.steps_per_episode == 0 {
            return bad("episodes need at least one step");
        }
        if self.n_stains + self.n_fruits > 12 {
            return bad("at most 12 objects");
        }
        if self.n_states_u128() > u32::MAX as u128 {
            return bad("state space does not fit a 32-bit id");
        }
        Ok(())
    }

    fn n_states_u128(&self) -> u128 {
        let c = self.cells() as u128;
        c * (2 * c).pow(self.n_stains as u32) * (3 * c).pow(self.n_fruits as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FruitStatus {
    Ground,
    Held,
    Basket,
}

/// Decoded world state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RobotState {
    pub pos: usize,
    /// (cell, cleaned)
    pub stains: Vec<(usize, bool)>,
    /// (cell, status); a held or delivered fruit keeps its original cell.
    pub fruits: Vec<(usize, FruitStatus)>,
}

impl RobotState {
    pub fn is_goal(&self) -> bool {
        self.stains.iter().all(|s| s.1) && self.fruits.iter().all(|f| f.1 == FruitStatus::Basket)
    }
}

/// One branch of the exact transition model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub prob: f64,
    pub next: StateId,
    pub effective: bool,
    pub markov_reward: f64,
    pub terminal: bool,
}

#[derive(Debug, Clone)]
pub struct RobotEnv {
    cfg: RobotConfig,
    rng: SimRng,
    monitors: Vec<RewardMonitor>,
    reward_types: Vec<RewardType>,
    state: RobotState,
    steps: usize,
    done: bool,
}

impl RobotEnv {
    pub fn new(cfg: RobotConfig, rng: SimRng) -> Result<Self, EnvError> {
        cfg.validate()?;
        let dfas = robot_monitors(cfg.scheme, cfg.n_stains)
            .ok_or_else(|| EnvError::Config(format!("scheme {} is not a robot scheme", cfg.scheme)))?;
        let delay = if cfg.scheme == Scheme::R2 { REWARD_DELAY } else { 0 };
        let names: &[&str] = match cfg.scheme {
            Scheme::R1 => &["pick-after-cleaning"],
            Scheme::R2 => &["first-pick-after-cleaning-delayed"],
            Scheme::R3 => &["right-right-pick"],
            _ => &["pick-after-cleaning", "right-right-pick"],
        };
        let reward_types = names
            .iter()
            .enumerate()
            .map(|(i, n)| RewardType {
                id: RewardTypeId(i as u16),
                name: n.to_string(),
                value: cfg.reward,
                hint: MarkovianHint::NonMarkovian,
            })
            .collect();
        let monitors = dfas
            .into_iter()
            .enumerate()
            .map(|(i, d)| RewardMonitor::new(d, RewardTypeId(i as u16), delay))
            .collect();
        let state = RobotState {
            pos: cfg.cell(cfg.start),
            stains: vec![],
            fruits: vec![],
        };
        let mut env = Self {
            cfg,
            rng,
            monitors,
            reward_types,
            state,
            steps: 0,
            done: false,
        };
        env.reset();
        Ok(env)
    }

    pub fn config(&self) -> &RobotConfig {
        &self.cfg
    }

    pub fn state(&self) -> &RobotState {
        &self.state
    }

    fn free_cells(&self) -> Vec<usize> {
        let (s, b) = (self.cfg.cell(self.cfg.start), self.cfg.cell(self.cfg.basket));
        (0..self.cfg.cells()).filter(|&c| c != s && c != b).collect()
    }

    pub fn encode(&self, st: &RobotState) -> StateId {
        let c = self.cfg.cells() as u64;
        let mut id = st.pos as u64;
        let mut radix = c;
        for &(cell, cleaned) in &st.stains {
            id += radix * (cell as u64 * 2 + cleaned as u64);
            radix *= 2 * c;
        }
        for &(cell, status) in &st.fruits {
            let k = match status {
                FruitStatus::Ground => 0,
                FruitStatus::Held => 1,
                FruitStatus::Basket => 2,
            };
            id += radix * (cell as u64 * 3 + k);
            radix *= 3 * c;
        }
        StateId(id as u32)
    }

    pub fn decode(&self, id: StateId) -> RobotState {
        let c = self.cfg.cells() as u64;
        let mut rest = id.0 as u64;
        let pos = (rest % c) as usize;
        rest /= c;
        let mut stains = Vec::with_capacity(self.cfg.n_stains);
        for _ in 0..self.cfg.n_stains {
            let v = rest % (2 * c);
            rest /= 2 * c;
            stains.push(((v / 2) as usize, v % 2 == 1));
        }
        let mut fruits = Vec::with_capacity(self.cfg.n_fruits);
        for _ in 0..self.cfg.n_fruits {
            let v = rest % (3 * c);
            rest /= 3 * c;
            let status = match v % 3 {
                0 => FruitStatus::Ground,
                1 => FruitStatus::Held,
                _ => FruitStatus::Basket,
            };
            fruits.push(((v / 3) as usize, status));
        }
        RobotState { pos, stains, fruits }
    }

    /// Every object layout with its probability, as sampled by `reset`.
    pub fn initial_distribution(&self) -> Vec<(f64, StateId)> {
        let free = self.free_cells();
        let k = self.cfg.n_stains + self.cfg.n_fruits;
        let mut out = Vec::new();
        let mut chosen = Vec::with_capacity(k);
        fn rec(free: &[usize], k: usize, chosen: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if chosen.len() == k {
                out.push(chosen.clone());
                return;
            }
            for &c in free {
                if !chosen.contains(&c) {
                    chosen.push(c);
                    rec(free, k, chosen, out);
                    chosen.pop();
                }
            }
        }
        let mut layouts = Vec::new();
        rec(&free, k, &mut chosen, &mut layouts);
        let p = 1.0 / layouts.len() as f64;
        for l in layouts {
            let st = self.layout_state(&l);
            out.push((p, self.encode(&st)));
        }
        out
    }

    fn layout_state(&self, cells: &[usize]) -> RobotState {
        let (s, f) = cells.split_at(self.cfg.n_stains);
        RobotState {
            pos: self.cfg.cell(self.cfg.start),
            stains: s.iter().map(|&c| (c, false)).collect(),
            fruits: f.iter().map(|&c| (c, FruitStatus::Ground)).collect(),
        }
    }

    fn moved(&self, pos: usize, dir: usize) -> usize {
        let (w, h) = (self.cfg.width, self.cfg.height);
        let (x, y) = (pos % w, pos / w);
        let (nx, ny) = match dir {
            act::UP if y + 1 < h => (x, y + 1),
            act::DOWN if y > 0 => (x, y - 1),
            act::LEFT if x > 0 => (x - 1, y),
            act::RIGHT if x + 1 < w => (x + 1, y),
            _ => (x, y),
        };
        ny * w + nx
    }

    fn perpendicular(dir: usize) -> [usize; 2] {
        if dir == act::UP || dir == act::DOWN {
            [act::LEFT, act::RIGHT]
        } else {
            [act::UP, act::DOWN]
        }
    }

    /// The successful outcome of a manipulation action, or `None` if illegal here.
    fn manipulate(&self, st: &RobotState, a: usize) -> Option<RobotState> {
        let mut next = st.clone();
        match a {
            act::CLEAN => {
                let i = st.stains.iter().position(|&(c, done)| c == st.pos && !done)?;
                next.stains[i].1 = true;
            }
            act::PICK => {
                let i = st
                    .fruits
                    .iter()
                    .position(|&(c, s)| c == st.pos && s == FruitStatus::Ground)?;
                next.fruits[i].1 = FruitStatus::Held;
            }
            act::PUT => {
                if st.pos != self.cfg.cell(self.cfg.basket) {
                    return None;
                }
                let i = st.fruits.iter().position(|&(_, s)| s == FruitStatus::Held)?;
                next.fruits[i].1 = FruitStatus::Basket;
            }
            _ => unreachable!("not a manipulation action"),
        }
        Some(next)
    }

    /// Exact one-step model from state `s`, ignoring the step limit and monitors.
    pub fn transitions(&self, s: StateId, a: ActionId) -> Vec<Branch> {
        let st = self.decode(s);
        let a = a.index();
        let branch = |prob: f64, next: &RobotState, reward: f64| Branch {
            prob,
            next: self.encode(next),
            effective: *next != st,
            markov_reward: reward,
            terminal: next.is_goal(),
        };
        if a <= act::RIGHT {
            let [p1, p2] = Self::perpendicular(a);
            [(MOVE_SUCCESS, a), (SLIP, p1), (SLIP, p2)]
                .into_iter()
                .map(|(p, d)| {
                    let next = RobotState {
                        pos: self.moved(st.pos, d),
                        ..st.clone()
                    };
                    branch(p, &next, STEP_COST)
                })
                .collect()
        } else {
            match self.manipulate(&st, a) {
                None => vec![branch(1.0, &st, STEP_COST)],
                Some(next) => vec![branch(ACT_SUCCESS, &next, 0.0), branch(1.0 - ACT_SUCCESS, &st, 0.0)],
            }
        }
    }

    pub fn is_terminal(&self, s: StateId) -> bool {
        self.decode(s).is_goal()
    }
}

impl Environment for RobotEnv {
    fn n_states(&self) -> u64 {
        self.cfg.n_states_u128() as u64
    }

    fn n_actions(&self) -> usize {
        act::COUNT
    }

    fn reward_types(&self) -> &[RewardType] {
        &self.reward_types
    }

    fn episode_limit(&self) -> usize {
        self.cfg.steps_per_episode
    }

    fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.cfg.alphabet, act::COUNT, self.n_states())
    }

    fn ground_truth(&self) -> Vec<Dfa> {
        let alpha = self.alphabet();
        self.monitors
            .iter()
            .map(|m| m.dfa().lift(&alpha.projection()).expect("projection within alphabet"))
            .collect()
    }

    fn reset(&mut self) -> StateId {
        let mut free = self.free_cells();
        let k = self.cfg.n_stains + self.cfg.n_fruits;
        let mut cells = Vec::with_capacity(k);
        for _ in 0..k {
            let i = self.rng.random_range(0..free.len());
            cells.push(free.swap_remove(i));
        }
        self.state = self.layout_state(&cells);
        self.steps = 0;
        self.done = false;
        for m in &mut self.monitors {
            m.reset();
        }
        self.encode(&self.state)
    }

    fn step(&mut self, action: ActionId) -> Result<StepOutcome, EnvError> {
        let a = action.index();
        if a >= act::COUNT {
            return Err(EnvError::InvalidAction(action.0));
        }
        if self.done || self.steps >= self.cfg.steps_per_episode {
            return Err(EnvError::EpisodeExhausted(self.steps));
        }
        self.steps += 1;
        let prev = self.state.clone();
        let markov_reward;
        if a <= act::RIGHT {
            let roll: f64 = self.rng.random();
            let [p1, p2] = Self::perpendicular(a);
            let dir = if roll < MOVE_SUCCESS {
                a
            } else if roll < MOVE_SUCCESS + SLIP {
                p1
            } else {
                p2
            };
            self.state.pos = self.moved(self.state.pos, dir);
            markov_reward = STEP_COST;
        } else {
            match self.manipulate(&self.state, a) {
                None => markov_reward = STEP_COST,
                Some(next) => {
                    markov_reward = 0.0;
                    if self.rng.random::<f64>() < ACT_SUCCESS {
                        self.state = next;
                    }
                }
            }
        }
        let effective = self.state != prev;
        let mut fired = Fired::NONE;
        if effective {
            let sym = crate::types::Symbol(a as u32);
            for m in &mut self.monitors {
                if m.advance(sym) {
                    fired.insert(m.reward_type);
                }
            }
        }
        let terminal = self.state.is_goal();
        self.done = terminal;
        Ok(StepOutcome {
            next: self.encode(&self.state),
            effective,
            fired,
            markov_reward,
            terminal,
            truncated: !terminal && self.steps == self.cfg.steps_per_episode,
        })
    }

    fn action_names(&self) -> Vec<String> {
        act::NAMES.iter().map(|s| s.to_string()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::seeded_rng;

    fn env(cfg: RobotConfig) -> RobotEnv {
        RobotEnv::new(cfg, seeded_rng(7, 0)).unwrap()
    }

    #[test]
    fn encoding_round_trips() {
        let e = env(RobotConfig::default());
        for seed in 0..50 {
            let mut e = RobotEnv::new(RobotConfig::default(), seeded_rng(seed, 0)).unwrap();
            let s = e.reset();
            assert_eq!(e.encode(&e.decode(s)), s);
            assert_eq!(e.decode(s), *e.state());
        }
        let st = RobotState {
            pos: 24,
            stains: vec![(3, true), (24, false)],
            fruits: vec![(7, FruitStatus::Held), (24, FruitStatus::Basket)],
        };
        assert_eq!(e.decode(e.encode(&st)), st);
        assert!((e.encode(&st).0 as u64) < e.n_states());
    }

    #[test]
    fn objects_avoid_start_basket_and_each_other() {
        let mut e = env(RobotConfig::default());
        for _ in 0..200 {
            e.reset();
            let st = e.state().clone();
            let mut cells: Vec<usize> = st.stains.iter().map(|s| s.0).chain(st.fruits.iter().map(|f| f.0)).collect();
            assert!(!cells.contains(&0) && !cells.contains(&24));
            cells.sort();
            cells.dedup();
            assert_eq!(cells.len(), 4);
        }
    }

    #[test]
    fn moving_into_a_wall_stays_put_with_cost() {
        let mut e = env(RobotConfig::default());
        e.reset();
        e.state.pos = e.cfg.cell((2, 4));
        let mut stayed = 0;
        for _ in 0..200 {
            e.reset();
            e.state.pos = e.cfg.cell((2, 4));
            let o = e.step(ActionId(act::UP as u16)).unwrap();
            assert_eq!(o.markov_reward, -1.0);
            if !o.effective {
                stayed += 1;
                assert_eq!(e.state.pos, e.cfg.cell((2, 4)));
            }
        }
        assert!(stayed > 80 && stayed < 160);
    }

    #[test]
    fn illegal_manipulation_is_a_costly_no_op() {
        let mut e = env(RobotConfig::default());
        e.reset();
        for a in [act::CLEAN, act::PICK, act::PUT] {
            let before = e.state().clone();
            let o = e.step(ActionId(a as u16)).unwrap();
            assert_eq!(o.markov_reward, -1.0);
            assert!(!o.effective);
            assert_eq!(*e.state(), before);
        }
    }

    #[test]
    fn pick_after_cleaning_fires_r1() {
        let mut e = env(RobotConfig {
            scheme: Scheme::R1,
            ..RobotConfig::default()
        });
        e.reset();
        for i in 0..2 {
            e.state.pos = e.state.stains[i].0;
            loop {
                let o = e.step(ActionId(act::CLEAN as u16)).unwrap();
                assert!(o.fired.is_empty());
                if o.effective {
                    break;
                }
                e.steps = 0;
            }
        }
        e.state.pos = e.state.fruits[0].0;
        loop {
            let o = e.step(ActionId(act::PICK as u16)).unwrap();
            if o.effective {
                assert!(!o.fired.is_empty());
                break;
            }
            assert!(o.fired.is_empty());
            e.steps = 0;
        }
    }

    #[test]
    fn right_right_pick_fires_r3() {
        let mut e = env(RobotConfig {
            scheme: Scheme::R3,
            ..RobotConfig::default()
        });
        let mut fired = 0;
        for _ in 0..300 {
            e.reset();
            let fruit = e.state.fruits[0].0;
            e.state.pos = fruit;
            for m in &mut e.monitors {
                m.advance(crate::types::Symbol(act::RIGHT as u32));
                m.advance(crate::types::Symbol(act::RIGHT as u32));
            }
            let o = e.step(ActionId(act::PICK as u16)).unwrap();
            assert_eq!(o.effective, !o.fired.is_empty());
            fired += o.effective as usize;
        }
        assert!(fired > 140 && fired < 220);
    }

    #[test]
    fn model_matches_probabilities() {
        let e = env(RobotConfig::reduced(Scheme::R3));
        for (_, s) in e.initial_distribution() {
            for a in 0..act::COUNT {
                let b = e.transitions(s, ActionId(a as u16));
                let total: f64 = b.iter().map(|x| x.prob).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(e.initial_distribution().len(), 7 * 6);
    }

    #[test]
    fn episode_ends_at_limit_or_goal() {
        let mut e = env(RobotConfig::reduced(Scheme::R3));
        e.reset();
        let mut n = 0;
        loop {
            n += 1;
            let o = e.step(ActionId(act::LEFT as u16)).unwrap();
            if o.done() {
                assert!(o.truncated);
                break;
            }
        }
        assert_eq!(n, 30);
        assert!(matches!(e.step(ActionId(0)), Err(EnvError::EpisodeExhausted(30))));
    }
}

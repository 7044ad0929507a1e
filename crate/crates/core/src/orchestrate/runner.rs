use std::time::Instant;

use super::{streams, CheckpointRow, RunConfig, RunResult, RunStats};
use crate::agent::{Agent, Exploration, Transition};
use crate::automata::{Dfa, ProductState, RewardMachines};
use crate::env::{seeded_rng, EnvError, Environment, SimRng};
use crate::envs::AnyEnv;
use crate::trace::{ReplayBuffer, Step, Trace, TraceStore};
use crate::types::{ActionId, Alphabet, RewardType, Symbol};

/// Result of one environment step inside an episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub symbol: Option<Symbol>,
    pub effective: bool,
    pub fired: crate::types::Fired,
    pub done: bool,
}

/// Owns the environment, the agent and the collected experience, and keeps
/// the step count and checkpoint schedule.
pub struct Runner {
    env: AnyEnv,
    eval_env: AnyEnv,
    agent: Box<dyn Agent>,
    alphabet: Alphabet,
    reward_types: Vec<RewardType>,
    truth: Vec<Dfa>,
    pub store: TraceStore,
    pub replay: ReplayBuffer,
    exploration: Exploration,
    rng: SimRng,
    eval_rng: SimRng,
    gamma: f64,
    eval_episodes: usize,
    budget: u64,
    checkpoint_every: u64,
    steps: u64,
    episode: Option<Episode>,
    last_trace: Option<Trace>,
    rows: Vec<CheckpointRow>,
    pub stats: RunStats,
    started: Instant,
    record_wall_time: bool,
    run_id: String,
    seed: u64,
    algorithm: String,
    env_name: &'static str,
    scheme: String,
}

struct Episode {
    state: ProductState,
    trace: Trace,
    steps: usize,
}

impl Runner {
    pub fn new(cfg: &RunConfig, env: AnyEnv, agent: Box<dyn Agent>) -> Result<Self, EnvError> {
        let eval_env = cfg.env.build(seeded_rng(cfg.seed, streams::EVAL_ENV))?;
        let reward_types = env.reward_types().to_vec();
        let mut r = Self {
            alphabet: env.alphabet(),
            truth: env.ground_truth(),
            store: TraceStore::new(reward_types.len(), cfg.store),
            replay: ReplayBuffer::new(cfg.replay_capacity),
            reward_types,
            env,
            eval_env,
            agent,
            exploration: cfg.exploration,
            rng: seeded_rng(cfg.seed, streams::AGENT),
            eval_rng: seeded_rng(cfg.seed, streams::EVAL_AGENT),
            gamma: cfg.gamma(),
            eval_episodes: cfg.eval_episodes,
            budget: cfg.budget,
            checkpoint_every: cfg.checkpoint_every().max(1),
            steps: 0,
            episode: None,
            last_trace: None,
            rows: Vec::new(),
            stats: RunStats::default(),
            started: Instant::now(),
            record_wall_time: cfg.record_wall_time,
            run_id: cfg.run_id(),
            seed: cfg.seed,
            algorithm: cfg.algorithm_name(),
            env_name: cfg.env.kind(),
            scheme: cfg.env.scheme().to_string(),
        };
        r.checkpoint();
        Ok(r)
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn exhausted(&self) -> bool {
        self.steps >= self.budget
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn reward_types(&self) -> &[RewardType] {
        &self.reward_types
    }

    pub fn ground_truth(&self) -> &[Dfa] {
        &self.truth
    }

    pub fn machines(&self) -> &RewardMachines {
        self.agent.machines()
    }

    pub fn agent_mut(&mut self) -> &mut dyn Agent {
        self.agent.as_mut()
    }

    pub fn episode_limit(&self) -> usize {
        self.env.episode_limit()
    }

    pub fn in_episode(&self) -> bool {
        self.episode.is_some()
    }

    /// Symbols recorded so far in the current episode.
    pub fn episode_word(&self) -> &[Symbol] {
        self.episode.as_ref().map_or(&[], |e| e.trace.symbols())
    }

    /// The most recently closed trace.
    pub fn last_trace(&self) -> Option<&Trace> {
        self.last_trace.as_ref()
    }

    pub fn epsilon(&self) -> f64 {
        self.exploration.epsilon(self.steps)
    }

    /// Replaces the machines, replaying stored traces, and re-tracks the
    /// episode in progress.
    pub fn set_machines(&mut self, machines: RewardMachines) {
        self.stats.machine_changes += 1;
        let mut it = self.replay.iter();
        self.agent.set_machines(machines, &mut it);
        if let Some(ep) = &mut self.episode {
            let m = self.agent.machines();
            let mut machine = m.initial();
            for &s in ep.trace.symbols() {
                m.advance(&mut machine, s);
            }
            ep.state.machine = machine;
        }
    }

    pub fn begin_episode(&mut self) {
        debug_assert!(self.episode.is_none(), "episode already running");
        let s = self.env.reset();
        self.episode = Some(Episode {
            state: self.agent.machines().start(s),
            trace: Trace::new(s),
            steps: 0,
        });
    }

    /// The agent's ε-greedy action for the current state.
    pub fn explore_action(&mut self) -> ActionId {
        let eps = self.epsilon();
        let ep = self.episode.as_ref().expect("no episode running");
        let left = self.env.episode_limit() - ep.steps;
        let state = ep.state.clone();
        self.agent.act(&state, left, eps, &mut self.rng)
    }

    pub fn step(&mut self, action: ActionId) -> StepInfo {
        let ep = self.episode.as_mut().expect("no episode running");
        let outcome = self.env.step(action).expect("runner keeps episodes within their limit");
        let symbol = self.alphabet.symbol(action, outcome.next, outcome.effective);
        let machines = self.agent.machines();
        let to = machines.product_step(&ep.state, action, outcome.next, outcome.effective, &self.alphabet);
        let t = Transition {
            from: ep.state.clone(),
            action,
            to: to.clone(),
            symbol,
            fired: outcome.fired,
            markov_reward: outcome.markov_reward,
            terminal: outcome.terminal,
            truncated: outcome.truncated,
        };
        ep.trace.record_step(Step {
            state: ep.state.mdp,
            action,
            next: outcome.next,
            symbol,
            markov_reward: outcome.markov_reward,
            fired: outcome.fired,
            terminal: outcome.terminal,
        });
        ep.state = to;
        ep.steps += 1;
        self.agent.observe(&t);
        self.steps += 1;
        let done = outcome.done();
        if done {
            self.end_episode();
        }
        if self.steps.is_multiple_of(self.checkpoint_every) {
            self.checkpoint();
        }
        StepInfo {
            symbol,
            effective: outcome.effective,
            fired: outcome.fired,
            done,
        }
    }

    fn end_episode(&mut self) {
        let mut ep = self.episode.take().expect("no episode running");
        ep.trace.close();
        self.store.close_episode(&ep.trace);
        self.replay.push(ep.trace.clone());
        self.stats.episodes += 1;
        self.last_trace = Some(ep.trace);
    }

    /// Finishes the current episode with exploration; stops early if the
    /// budget runs out, discarding the partial episode.
    pub fn finish_episode(&mut self) {
        while self.episode.is_some() {
            if self.exhausted() {
                self.episode = None;
                return;
            }
            let a = self.explore_action();
            self.step(a);
        }
    }

    pub fn explore_episode(&mut self) {
        if self.exhausted() {
            return;
        }
        self.begin_episode();
        self.finish_episode();
    }

    /// Mean discounted return of the greedy policy over the evaluation episodes.
    pub fn evaluate(&mut self) -> f64 {
        let mut total = 0.0;
        for _ in 0..self.eval_episodes {
            let s = self.eval_env.reset();
            let machines = self.agent.machines().clone();
            let mut p = machines.start(s);
            let limit = self.eval_env.episode_limit();
            let mut discount = 1.0;
            for i in 0..limit {
                let a = self.agent.greedy(&p, limit - i, &mut self.eval_rng);
                let o = self.eval_env.step(a).expect("evaluation stays within the episode limit");
                total += discount * (o.markov_reward + o.fired.value(&self.reward_types));
                discount *= self.gamma;
                p = machines.product_step(&p, a, o.next, o.effective, &self.alphabet);
                if o.done() {
                    break;
                }
            }
        }
        total / self.eval_episodes.max(1) as f64
    }

    /// Per type: the current machine has the ground-truth language.
    pub fn machine_correct(&self) -> Vec<bool> {
        self.agent
            .machines()
            .dfas()
            .iter()
            .zip(&self.truth)
            .map(|(m, t)| m.same_language(t))
            .collect()
    }

    fn checkpoint(&mut self) {
        let mean_return = self.evaluate();
        let machines = self.agent.machines();
        self.rows.push(CheckpointRow {
            run_id: self.run_id.clone(),
            seed: self.seed,
            algorithm: self.algorithm.clone(),
            env: self.env_name.to_string(),
            scheme: self.scheme.clone(),
            step: self.steps,
            mean_return,
            machine_states: machines.dfas().iter().map(|d| d.n_states()).collect(),
            machine_correct: self.machine_correct(),
            wall_ms: self.record_wall_time.then(|| self.started.elapsed().as_millis() as u64),
        });
    }

    pub fn rows(&self) -> &[CheckpointRow] {
        &self.rows
    }

    pub fn finish(mut self) -> RunResult {
        if self.rows.last().is_none_or(|r| r.step != self.steps) {
            self.checkpoint();
        }
        self.stats.steps = self.steps;
        RunResult {
            rows: self.rows,
            machines: self.agent.machines().clone(),
            stats: self.stats,
            store: self.store,
        }
    }
}

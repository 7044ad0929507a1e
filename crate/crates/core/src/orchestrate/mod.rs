//! Runs one experiment cell: an environment, a reinforcement learner and a
//! machine learner, with periodic greedy evaluation.

mod alg1;
mod alg2;
mod runlog;
mod runner;

pub use alg1::{relearn, Alg1Config, Relearn};
pub use alg2::{Alg2Config, QueryMode};
pub use runlog::{read_csv, write_csv, CheckpointRow, CSV_HEADER};
pub use runner::{Runner, StepInfo};

use serde::{Deserialize, Serialize};

use crate::agent::{Agent, Exploration};
use crate::automata::RewardMachines;
use crate::edsm::EdsmConfig;
use crate::env::{seeded_rng, EnvError, Environment};
use crate::envs::EnvConfig;
use crate::qlearn::{QConfig, QLearner};
use crate::rmax::{Horizon, Rmax, RmaxConfig, RmaxParams};
use crate::trace::{StoreConfig, TraceStore};

/// Random stream ids derived from a run seed.
pub mod streams {
    pub const ENV: u64 = 1;
    pub const AGENT: u64 = 2;
    pub const EVAL_ENV: u64 = 3;
    pub const EVAL_AGENT: u64 = 4;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RlKind {
    Qlearn,
    Rmax,
}

impl RlKind {
    pub fn name(self) -> &'static str {
        match self {
            RlKind::Qlearn => "qlearn",
            RlKind::Rmax => "rmax",
        }
    }
}

/// Where the reward machines come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Lstar,
    Edsm,
    /// Ground-truth machines from the start.
    Optimal,
    /// One trivial machine per type, never learned.
    Vanilla,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Lstar => "lstar",
            LearnerKind::Edsm => "edsm",
            LearnerKind::Optimal => "optimal",
            LearnerKind::Vanilla => "vanilla",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub rl: RlKind,
    pub learner: LearnerKind,
    pub seed: u64,
    /// Learning steps; evaluation steps are not counted.
    pub budget: u64,
    /// Environment default when absent.
    pub checkpoint_every: Option<u64>,
    pub eval_episodes: usize,
    pub exploration: Exploration,
    pub qlearn: QConfig,
    pub rmax: RmaxConfig,
    pub store: StoreConfig,
    pub edsm: EdsmConfig,
    pub alg1: Alg1Config,
    pub alg2: Alg2Config,
    /// Most recent traces kept for replay.
    pub replay_capacity: usize,
    /// Fill the wall_ms column; off keeps the CSV byte-reproducible.
    pub record_wall_time: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::Mab(Default::default()),
            rl: RlKind::Qlearn,
            learner: LearnerKind::Lstar,
            seed: 0,
            budget: 1_000_000,
            checkpoint_every: None,
            eval_episodes: 20,
            exploration: Exploration::default(),
            qlearn: QConfig::default(),
            rmax: RmaxConfig::default(),
            store: StoreConfig::default(),
            edsm: EdsmConfig::default(),
            alg1: Alg1Config::default(),
            alg2: Alg2Config::default(),
            replay_capacity: 50_000,
            record_wall_time: false,
        }
    }
}

impl RunConfig {
    pub fn gamma(&self) -> f64 {
        let own = match self.rl {
            RlKind::Qlearn => self.qlearn.gamma,
            RlKind::Rmax => self.rmax.gamma,
        };
        own.unwrap_or_else(|| self.env.default_gamma())
    }

    pub fn checkpoint_every(&self) -> u64 {
        self.checkpoint_every.unwrap_or(match self.env {
            EnvConfig::Mab(_) => 100_000,
            EnvConfig::Robot(_) => 1_000_000,
        })
    }

    pub fn rmax_params(&self, episode_limit: usize) -> RmaxParams {
        let robot = matches!(self.env, EnvConfig::Robot(_));
        let horizon = match self.rmax.horizon {
            Some(0) => Horizon::Infinite,
            Some(h) => Horizon::Finite(h),
            None if robot => Horizon::Finite(episode_limit),
            None => Horizon::Infinite,
        };
        RmaxParams {
            known_threshold: self.rmax.known_threshold.unwrap_or(if robot { 10 } else { 5 }),
            reward_obs_min: self.rmax.reward_obs_min,
            gamma: self.gamma(),
            horizon,
            tolerance: self.rmax.tolerance.unwrap_or(if robot { 1e-6 } else { 1e-9 }),
            max_iterations: self.rmax.max_iterations,
        }
    }

    /// `rl+learner`, as written to the algorithm column.
    pub fn algorithm_name(&self) -> String {
        format!("{}+{}", self.rl.name(), self.learner.name())
    }

    pub fn run_id(&self) -> String {
        format!(
            "{}-{}-{}-s{}",
            self.env.kind(),
            self.env.scheme(),
            self.algorithm_name(),
            self.seed
        )
    }
}

/// Counters reported alongside the checkpoint rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub steps: u64,
    pub episodes: u64,
    pub machine_changes: u64,
    pub edsm_calls: u64,
    pub edsm_failures: u64,
    pub membership_queries: u64,
    pub membership_from_store: u64,
    pub membership_heuristic: u64,
    pub forcing_attempts: u64,
    pub equivalence_queries: u64,
    pub counterexamples: u64,
    /// Budget ran out while a machine learner still had open questions.
    pub provisional: bool,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub rows: Vec<CheckpointRow>,
    pub machines: RewardMachines,
    pub stats: RunStats,
    /// Samples retained at the end of the run.
    pub store: TraceStore,
}

pub fn build_agent(cfg: &RunConfig, env: &dyn Environment, machines: RewardMachines) -> Box<dyn Agent> {
    match cfg.rl {
        RlKind::Qlearn => Box::new(QLearner::new(
            cfg.qlearn,
            cfg.gamma(),
            env.n_actions(),
            env.reward_types().to_vec(),
            machines,
        )),
        RlKind::Rmax => Box::new(Rmax::new(
            cfg.rmax_params(env.episode_limit()),
            env.n_actions(),
            env.reward_types().to_vec(),
            machines,
        )),
    }
}

/// Runs one cell to its step budget.
pub fn run(cfg: &RunConfig) -> Result<RunResult, EnvError> {
    let env = cfg.env.build(seeded_rng(cfg.seed, streams::ENV))?;
    let truth = env.ground_truth();
    let n_symbols = env.alphabet().size();
    let machines = match cfg.learner {
        LearnerKind::Optimal => RewardMachines::new(truth.clone()),
        _ => RewardMachines::trivial(env.reward_types().len(), n_symbols),
    };
    let agent = build_agent(cfg, &env, machines);
    let mut runner = Runner::new(cfg, env, agent)?;
    match cfg.learner {
        LearnerKind::Optimal | LearnerKind::Vanilla => {
            while !runner.exhausted() {
                runner.explore_episode();
            }
        }
        LearnerKind::Edsm => alg1::run_alg1(&mut runner, &cfg.alg1, &cfg.edsm),
        LearnerKind::Lstar => alg2::run_alg2(&mut runner, &cfg.alg2),
    }
    Ok(runner.finish())
}

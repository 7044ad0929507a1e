use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use nmrl::automata::io::{to_dot, to_table};
use nmrl::edsm::{edsm_run, EdsmConfig};
use nmrl::envs::{MabConfig, RobotConfig};
use nmrl::trace::read_abbadingo;
use nmrl::{seeded_rng, EnvConfig, Environment, Scheme};
use nmrl_cli::matrix::{read_summary, SUMMARY_FILE};
use nmrl_cli::{emit_plots, run_matrix, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(version, about = "Reinforcement learning with learned reward machines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every cell of an experiment file.
    Run {
        config: PathBuf,
        /// Results directory.
        #[arg(long, env = "NMRL_OUT", default_value = "results")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Write gnuplot data files and a script from a results directory.
    Plot { results: PathBuf },
    /// Learn a DFA from an Abbadingo-format sample file with EDSM.
    LearnDfa {
        file: PathBuf,
        #[arg(long, default_value_t = 20)]
        max_states: usize,
        #[arg(long)]
        dot: bool,
    },
    /// Print the ground-truth reward machines of a scheme.
    Oracle {
        env: EnvKind,
        scheme: Scheme,
        /// 3x3 robot world with one stain and one fruit.
        #[arg(long)]
        reduced: bool,
        #[arg(long)]
        dot: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EnvKind {
    Mab,
    Robot,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run { config, out, workers } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run_matrix(&cfg, &out, workers)?;
            println!(
                "{} cells done, {} failed; results in {}",
                report.completed,
                report.failed.len(),
                out.display()
            );
            for (id, e) in &report.failed {
                eprintln!("failed: {id}: {e}");
            }
        }
        Command::Plot { results } => {
            let rows = read_summary(&results.join(SUMMARY_FILE))?;
            let script = emit_plots(&rows, &results.join("plots"))?;
            println!("{}", script.display());
        }
        Command::LearnDfa { file, max_states, dot } => {
            let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let set = read_abbadingo(&text)?;
            let cfg = EdsmConfig {
                max_states,
                ..Default::default()
            };
            let dfa = edsm_run(set.alphabet, &set.samples, &cfg)?;
            if dfa.n_states() > max_states {
                bail!("learned {} states, more than {max_states}", dfa.n_states());
            }
            print!("{}", if dot { to_dot(&dfa, None) } else { to_table(&dfa) });
        }
        Command::Oracle {
            env,
            scheme,
            reduced,
            dot,
        } => {
            let cfg = match env {
                EnvKind::Mab => EnvConfig::Mab(MabConfig {
                    scheme,
                    ..Default::default()
                }),
                EnvKind::Robot if reduced => EnvConfig::Robot(RobotConfig::reduced(scheme)),
                EnvKind::Robot => EnvConfig::Robot(RobotConfig {
                    scheme,
                    ..Default::default()
                }),
            };
            let env = cfg.build(seeded_rng(0, 0))?;
            let names = env.action_names();
            for (t, dfa) in env.reward_types().iter().zip(env.ground_truth()) {
                println!("# {} (value {})", t.name, t.value);
                let labels = (dfa.alphabet() == names.len()).then_some(names.as_slice());
                print!("{}", if dot { to_dot(&dfa, labels) } else { to_table(&dfa) });
            }
        }
    }
    Ok(())
}

//! Experiment files: a run template plus the matrix of cells to expand it into.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use nmrl::orchestrate::{LearnerKind, RlKind, RunConfig};
use nmrl::Scheme;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Matrix {
    pub seeds: Vec<u64>,
    /// Empty: the scheme of `run.env`.
    pub schemes: Vec<Scheme>,
    pub rl: Vec<RlKind>,
    pub learners: Vec<LearnerKind>,
}

impl Default for Matrix {
    fn default() -> Self {
        Self {
            seeds: vec![0],
            schemes: Vec::new(),
            rl: vec![RlKind::Qlearn, RlKind::Rmax],
            learners: vec![
                LearnerKind::Lstar,
                LearnerKind::Edsm,
                LearnerKind::Optimal,
                LearnerKind::Vanilla,
            ],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub matrix: Matrix,
    /// Template for every cell; the matrix overrides scheme, rl, learner and seed.
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        for s in &cfg.matrix.schemes {
            anyhow::ensure!(
                s.is_bandit() == matches!(cfg.run.env, nmrl::EnvConfig::Mab(_)),
                "scheme {s} does not belong to the {} environment",
                cfg.run.env.kind()
            );
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Cells in scheme, rl, learner, seed order.
    pub fn cells(&self) -> Vec<RunConfig> {
        let schemes = if self.matrix.schemes.is_empty() {
            vec![self.run.env.scheme()]
        } else {
            self.matrix.schemes.clone()
        };
        let mut out = Vec::new();
        for &scheme in &schemes {
            for &rl in &self.matrix.rl {
                for &learner in &self.matrix.learners {
                    for &seed in &self.matrix.seeds {
                        let mut c = self.run.clone();
                        c.env.set_scheme(scheme);
                        c.rl = rl;
                        c.learner = learner;
                        c.seed = seed;
                        out.push(c);
                    }
                }
            }
        }
        out
    }
}

/// Comment block embedded at the top of every run CSV.
pub fn provenance(cell: &RunConfig) -> String {
    let body = toml::to_string(cell).unwrap_or_else(|e| format!("unserializable config: {e}"));
    format!("nmrl {}\n{body}", env!("CARGO_PKG_VERSION"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_expansion() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            name = "mab"
            [matrix]
            seeds = [1, 2]
            schemes = ["S1", "S4"]
            [run]
            budget = 1000
            [run.env]
            kind = "mab"
            "#,
        )
        .unwrap();
        let cells = cfg.cells();
        assert_eq!(cells.len(), 2 * 2 * 4 * 2);
        assert_eq!(cells[0].env.scheme(), Scheme::S1);
        assert_eq!(cells.last().unwrap().env.scheme(), Scheme::S4);
        assert!(cells.iter().all(|c| c.budget == 1000));
    }

    #[test]
    fn robot_scheme_on_bandit_is_rejected() {
        let err = ExperimentConfig::from_toml("[matrix]\nschemes = [\"R1\"]\n").unwrap_err();
        assert!(err.to_string().contains("R1"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml("[run]\nbudgett = 5\n").is_err());
    }

    #[test]
    fn provenance_round_trips() {
        let cell = ExperimentConfig::default().cells().remove(0);
        let text = provenance(&cell);
        let body = text.split_once('\n').unwrap().1;
        let back: RunConfig = toml::from_str(body).unwrap();
        assert_eq!(back, cell);
    }
}

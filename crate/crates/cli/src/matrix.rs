//! Runs every cell of an experiment and writes the results.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use anyhow::{Context, Result};
use rayon::prelude::*;

use nmrl::automata::io::to_table;
use nmrl::orchestrate::{run, write_csv, CheckpointRow, RunConfig, RunResult};

use crate::config::{provenance, ExperimentConfig};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const FAILURES_FILE: &str = "failures.txt";

/// Mean and sample standard deviation of the checkpoint returns across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub env: String,
    pub scheme: String,
    pub algorithm: String,
    pub step: u64,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Default)]
pub struct MatrixReport {
    pub completed: usize,
    pub failed: Vec<(String, String)>,
    pub summary: Vec<SummaryRow>,
}

pub fn summarize(rows: &[CheckpointRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(&str, &str, &str, u64), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((&r.env, &r.scheme, &r.algorithm, r.step))
            .or_default()
            .push(r.mean_return);
    }
    groups
        .into_iter()
        .map(|((env, scheme, algorithm, step), xs)| {
            let n = xs.len();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                env: env.to_string(),
                scheme: scheme.to_string(),
                algorithm: algorithm.to_string(),
                step,
                n,
                mean,
                std,
            }
        })
        .collect()
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "env,scheme,algorithm,step,n,mean,std")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.6}",
            r.env, r.scheme, r.algorithm, r.step, r.n, r.mean, r.std
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || anyhow::anyhow!("{}:{}: malformed summary row", path.display(), i + 1);
        if f.len() != 7 {
            return Err(bad());
        }
        rows.push(SummaryRow {
            env: f[0].into(),
            scheme: f[1].into(),
            algorithm: f[2].into(),
            step: f[3].parse().map_err(|_| bad())?,
            n: f[4].parse().map_err(|_| bad())?,
            mean: f[5].parse().map_err(|_| bad())?,
            std: f[6].parse().map_err(|_| bad())?,
        });
    }
    Ok(rows)
}

fn write_cell(dir: &Path, cell: &RunConfig, result: &RunResult) -> Result<()> {
    let id = cell.run_id();
    let mut csv = BufWriter::new(File::create(dir.join(format!("{id}.csv")))?);
    write_csv(&mut csv, &provenance(cell), &result.rows)?;
    csv.flush()?;
    let mut dfa = String::new();
    for (t, d) in result.machines.dfas().iter().enumerate() {
        dfa.push_str(&format!("# type {t}\n{}", to_table(d)));
    }
    fs::write(dir.join(format!("{id}.dfa")), dfa)?;
    Ok(())
}

/// Runs all cells on `workers` threads; a single collector writes the files.
pub fn run_matrix(cfg: &ExperimentConfig, out: &Path, workers: usize) -> Result<MatrixReport> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let cells = cfg.cells();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    let (tx, rx) = mpsc::channel::<(usize, std::result::Result<RunResult, String>)>();
    let dir: PathBuf = out.to_path_buf();
    let total = cells.len();
    let collector = std::thread::scope(|scope| {
        let handle = scope.spawn(|| -> Result<MatrixReport> {
            let mut report = MatrixReport::default();
            let mut rows: Vec<(usize, Vec<CheckpointRow>)> = Vec::new();
            for (i, res) in rx {
                let cell = &cells[i];
                match res {
                    Ok(r) => {
                        write_cell(&dir, cell, &r)?;
                        report.completed += 1;
                        log::info!("[{}/{total}] {} done", report.completed, cell.run_id());
                        rows.push((i, r.rows));
                    }
                    Err(e) => {
                        log::error!("{} failed: {e}", cell.run_id());
                        report.failed.push((cell.run_id(), e));
                    }
                }
            }
            rows.sort_by_key(|(i, _)| *i);
            let all: Vec<CheckpointRow> = rows.into_iter().flat_map(|(_, r)| r).collect();
            report.summary = summarize(&all);
            Ok(report)
        });
        pool.install(|| {
            (0..cells.len()).into_par_iter().for_each_with(tx, |tx, i| {
                let res = catch_unwind(AssertUnwindSafe(|| run(&cells[i])))
                    .map_err(|p| {
                        p.downcast_ref::<String>()
                            .cloned()
                            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                            .unwrap_or_else(|| "panic".into())
                    })
                    .and_then(|r| r.map_err(|e| e.to_string()));
                let _ = tx.send((i, res));
            });
        });
        handle.join().expect("collector thread panicked")
    });
    let mut report = collector?;
    report.failed.sort();
    write_summary(&out.join(SUMMARY_FILE), &report.summary)?;
    let failures = out.join(FAILURES_FILE);
    if report.failed.is_empty() {
        if failures.exists() {
            fs::remove_file(failures)?;
        }
    } else {
        let text: String = report.failed.iter().map(|(id, e)| format!("{id}: {e}\n")).collect();
        fs::write(failures, text)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(alg: &str, step: u64, ret: f64) -> CheckpointRow {
        CheckpointRow {
            run_id: String::new(),
            seed: 0,
            algorithm: alg.into(),
            env: "mab".into(),
            scheme: "S1".into(),
            step,
            mean_return: ret,
            machine_states: vec![1],
            machine_correct: vec![false],
            wall_ms: None,
        }
    }

    #[test]
    fn summary_statistics() {
        let s = summarize(&[row("a", 0, 1.0), row("a", 0, 3.0), row("b", 0, 5.0)]);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].n, s[0].mean), (2, 2.0));
        assert!((s[0].std - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!((s[1].n, s[1].std), (1, 0.0));
    }
}

//! Gnuplot data files and script: one panel per bandit scheme, and one per
//! (RL algorithm, scheme) pair for the robot world.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Result;

use crate::matrix::SummaryRow;

pub const SCRIPT_FILE: &str = "figures.gp";

struct Panel {
    title: String,
    file: String,
    data: String,
    /// Curve titles in data-block order.
    curves: Vec<String>,
}

fn panel(title: String, file: String, rows: &[&SummaryRow], label: impl Fn(&str) -> String) -> Panel {
    let mut by_alg: BTreeMap<&str, Vec<&SummaryRow>> = BTreeMap::new();
    for r in rows {
        by_alg.entry(&r.algorithm).or_default().push(r);
    }
    let mut text = String::new();
    let mut curves = Vec::new();
    for (alg, mut rs) in by_alg {
        rs.sort_by_key(|r| r.step);
        if !curves.is_empty() {
            text.push_str("\n\n");
        }
        let _ = writeln!(text, "# {alg}\n# step mean std");
        for r in rs {
            let _ = writeln!(text, "{} {} {}", r.step, r.mean, r.std);
        }
        curves.push(label(alg));
    }
    Panel {
        title,
        file,
        data: text,
        curves,
    }
}

fn panels(rows: &[SummaryRow]) -> (Vec<Panel>, Vec<Panel>) {
    let mut mab: BTreeMap<&str, Vec<&SummaryRow>> = BTreeMap::new();
    let mut robot: BTreeMap<(&str, &str), Vec<&SummaryRow>> = BTreeMap::new();
    for r in rows {
        if r.env == "mab" {
            mab.entry(&r.scheme).or_default().push(r);
        } else {
            let rl = r.algorithm.split('+').next().unwrap_or("");
            robot.entry((rl, &r.scheme)).or_default().push(r);
        }
    }
    let mab = mab
        .into_iter()
        .map(|(scheme, rs)| panel(format!("MAB {scheme}"), format!("mab_{scheme}.dat"), &rs, str::to_string))
        .collect();
    let robot = robot
        .into_iter()
        .map(|((rl, scheme), rs)| {
            panel(format!("Robot {scheme} ({rl})"), format!("robot_{rl}_{scheme}.dat"), &rs, |alg| {
                alg.split_once('+').map_or(alg, |(_, l)| l).to_string()
            })
        })
        .collect();
    (mab, robot)
}

fn figure(out: &mut String, name: &str, title: &str, cols: usize, panels: &[Panel]) {
    if panels.is_empty() {
        return;
    }
    let rows = panels.len().div_ceil(cols);
    let _ = writeln!(out, "set output '{name}.png'");
    let _ = writeln!(out, "set multiplot layout {rows},{cols} title '{title}'");
    for p in panels {
        let _ = writeln!(out, "set title '{}'", p.title);
        let plots: Vec<String> = p
            .curves
            .iter()
            .enumerate()
            .map(|(i, c)| format!("'{}' index {i} using 1:2:3 with yerrorlines title '{c}'", p.file))
            .collect();
        let _ = writeln!(out, "plot {}", plots.join(", \\\n     "));
    }
    let _ = writeln!(out, "unset multiplot");
}

/// Writes the data files and the script into `dir`, returning the script path.
pub fn emit_plots(rows: &[SummaryRow], dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let (mab, robot) = panels(rows);
    for p in mab.iter().chain(&robot) {
        fs::write(dir.join(&p.file), &p.data)?;
    }
    let mut script = String::from("# gnuplot script; run from this directory\n");
    if !mab.is_empty() || !robot.is_empty() {
        script.push_str("set terminal pngcairo size 1600,1000\nset key bottom right\nset xlabel 'steps'\nset ylabel 'average reward'\n");
    }
    figure(&mut script, "mab", "Non-Markovian MAB", 2, &mab);
    figure(&mut script, "robot", "Non-Markovian Robot World", 4, &robot);
    let path = dir.join(SCRIPT_FILE);
    fs::write(&path, script)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(env: &str, scheme: &str, alg: &str, step: u64) -> SummaryRow {
        SummaryRow {
            env: env.into(),
            scheme: scheme.into(),
            algorithm: alg.into(),
            step,
            n: 2,
            mean: 1.0,
            std: 0.5,
        }
    }

    #[test]
    fn panel_counts() {
        let mut rows = Vec::new();
        for s in ["S1", "S2", "S3", "S4"] {
            for a in ["qlearn+lstar", "rmax+edsm"] {
                rows.push(row("mab", s, a, 0));
            }
        }
        for s in ["R1", "R2", "R3", "R4"] {
            for a in ["qlearn+lstar", "rmax+edsm", "rmax+optimal"] {
                rows.push(row("robot", s, a, 0));
            }
        }
        let (mab, robot) = panels(&rows);
        assert_eq!(mab.len(), 4);
        assert_eq!(robot.len(), 8);
        assert_eq!(mab[0].curves, ["qlearn+lstar", "rmax+edsm"]);
        let rmax_r1 = robot.iter().find(|p| p.title == "Robot R1 (rmax)").unwrap();
        assert_eq!(rmax_r1.curves, ["edsm", "optimal"]);
    }

    #[test]
    fn empty_results_give_a_bare_script() {
        let dir = tempfile::tempdir().unwrap();
        let path = emit_plots(&[], dir.path()).unwrap();
        let text = fs::read_to_string(path).unwrap();
        assert!(!text.lines().any(|l| l.starts_with("plot")));
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}

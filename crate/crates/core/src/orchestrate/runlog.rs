use std::io::{self, Write};

pub const CSV_HEADER: &str =
    "run_id,seed,algorithm,env,scheme,step,mean_return,machine_states,machine_correct,wall_ms";

/// One checkpoint of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointRow {
    pub run_id: String,
    pub seed: u64,
    pub algorithm: String,
    pub env: String,
    pub scheme: String,
    pub step: u64,
    pub mean_return: f64,
    /// Per reward type, in type order.
    pub machine_states: Vec<usize>,
    pub machine_correct: Vec<bool>,
    pub wall_ms: Option<u64>,
}

impl CheckpointRow {
    /// Per-type lists are `;`-separated within their column.
    pub fn to_csv(&self) -> String {
        let states: Vec<String> = self.machine_states.iter().map(|n| n.to_string()).collect();
        let correct: Vec<&str> = self.machine_correct.iter().map(|&c| if c { "1" } else { "0" }).collect();
        format!(
            "{},{},{},{},{},{},{:.6},{},{},{}",
            self.run_id,
            self.seed,
            self.algorithm,
            self.env,
            self.scheme,
            self.step,
            self.mean_return,
            states.join(";"),
            correct.join(";"),
            self.wall_ms.map(|w| w.to_string()).unwrap_or_default()
        )
    }

    pub fn from_csv(line: &str) -> Option<CheckpointRow> {
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 10 {
            return None;
        }
        fn list(s: &str) -> Vec<&str> {
            if s.is_empty() {
                Vec::new()
            } else {
                s.split(';').collect()
            }
        }
        Some(CheckpointRow {
            run_id: f[0].to_string(),
            seed: f[1].parse().ok()?,
            algorithm: f[2].to_string(),
            env: f[3].to_string(),
            scheme: f[4].to_string(),
            step: f[5].parse().ok()?,
            mean_return: f[6].parse().ok()?,
            machine_states: list(f[7]).into_iter().map(|s| s.parse().ok()).collect::<Option<_>>()?,
            machine_correct: list(f[8]).into_iter().map(|s| Some(s == "1")).collect::<Option<_>>()?,
            wall_ms: if f[9].is_empty() { None } else { Some(f[9].parse().ok()?) },
        })
    }
}

/// Writes `comment` (each line prefixed with `# `), the header, then the rows.
pub fn write_csv(out: &mut impl Write, comment: &str, rows: &[CheckpointRow]) -> io::Result<()> {
    for line in comment.lines() {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.to_csv())?;
    }
    Ok(())
}

/// Rows of a file written by [`write_csv`]; comments and the header are skipped.
pub fn read_csv(text: &str) -> Vec<CheckpointRow> {
    text.lines()
        .filter(|l| !l.starts_with('#') && *l != CSV_HEADER && !l.trim().is_empty())
        .filter_map(CheckpointRow::from_csv)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let row = CheckpointRow {
            run_id: "mab-S4-qlearn+edsm-s3".into(),
            seed: 3,
            algorithm: "qlearn+edsm".into(),
            env: "mab".into(),
            scheme: "S4".into(),
            step: 100_000,
            mean_return: 12.5,
            machine_states: vec![6, 4],
            machine_correct: vec![true, false],
            wall_ms: None,
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, "cfg line one\nline two", std::slice::from_ref(&row)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# cfg line one\n# line two\n"));
        assert!(text.contains("6;4,1;0,\n"));
        assert_eq!(read_csv(&text), vec![row]);
    }
}

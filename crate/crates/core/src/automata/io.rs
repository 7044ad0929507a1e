//! Text serializations of automata.
//!
//! Tabular layout (initial state is always 0; automata are written in
//! canonical breadth-first numbering):
//!
//! ```text
//! <n_states> <alphabet>
//! <delta(0,0)> <delta(0,1)> ...
//! ...
//! accepting <q> <q> ...
//! ```

use std::fmt::Write as _;

use super::{AutomatonError, Dfa};

pub fn to_table(dfa: &Dfa) -> String {
    let d = dfa.canonical();
    let mut out = format!("{} {}\n", d.n_states(), d.alphabet());
    let k = d.alphabet();
    for q in 0..d.n_states() {
        let row: Vec<String> = d.delta()[q * k..(q + 1) * k].iter().map(|t| t.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out.push_str("accepting");
    for q in d.accepting_states() {
        let _ = write!(out, " {q}");
    }
    out.push('\n');
    out
}

pub fn from_table(text: &str) -> Result<Dfa, AutomatonError> {
    let bad = |m: &str| AutomatonError::Parse(m.to_string());
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| bad("empty input"))?;
    let mut h = header.split_whitespace().map(str::parse::<usize>);
    let (n, k) = match (h.next(), h.next(), h.next()) {
        (Some(Ok(n)), Some(Ok(k)), None) => (n, k),
        _ => return Err(bad("header must be `<n_states> <alphabet>`")),
    };
    let mut delta = Vec::with_capacity(n * k);
    for q in 0..n {
        let row = lines.next().ok_or_else(|| bad(&format!("missing row for state {q}")))?;
        let before = delta.len();
        for tok in row.split_whitespace() {
            delta.push(tok.parse::<u32>().map_err(|_| bad(&format!("bad target `{tok}`")))?);
        }
        if delta.len() - before != k {
            return Err(bad(&format!("row {q} has {} entries, expected {k}", delta.len() - before)));
        }
    }
    let acc_line = lines.next().ok_or_else(|| bad("missing accepting line"))?;
    let mut toks = acc_line.split_whitespace();
    if toks.next() != Some("accepting") {
        return Err(bad("expected `accepting` line"));
    }
    let mut accepting = vec![false; n];
    for tok in toks {
        let q: usize = tok.parse().map_err(|_| bad(&format!("bad accepting state `{tok}`")))?;
        if q >= n {
            return Err(bad(&format!("accepting state {q} out of range")));
        }
        accepting[q] = true;
    }
    Dfa::new(n, k, delta, 0, accepting)
}

/// Graphviz rendering; `labels` names the symbols (indices are used when absent).
pub fn to_dot(dfa: &Dfa, labels: Option<&[String]>) -> String {
    let d = dfa.canonical();
    let k = d.alphabet();
    let mut out = String::from("digraph dfa {\n  rankdir=LR;\n  start [shape=point];\n");
    for q in 0..d.n_states() {
        let shape = if d.is_accepting(q) { "doublecircle" } else { "circle" };
        let _ = writeln!(out, "  q{q} [shape={shape}];");
    }
    out.push_str("  start -> q0;\n");
    for q in 0..d.n_states() {
        // group parallel edges into one labelled edge
        let mut targets: Vec<(u32, Vec<String>)> = Vec::new();
        for a in 0..k {
            let t = d.delta()[q * k + a];
            let name = labels.and_then(|l| l.get(a).cloned()).unwrap_or_else(|| a.to_string());
            match targets.iter_mut().find(|(r, _)| *r == t) {
                Some((_, names)) => names.push(name),
                None => targets.push((t, vec![name])),
            }
        }
        for (t, names) in targets {
            let _ = writeln!(out, "  q{q} -> q{t} [label=\"{}\"];", names.join(","));
        }
    }
    out.push_str("}\n");
    out
}

//! Ground-truth reward monitors for the benchmark reward schemes, written as
//! automata over the action-only alphabet.

use serde::{Deserialize, Serialize};

use crate::automata::Dfa;

/// Reward schemes: `S*` for the bandit, `R*` for Robot World.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    S1,
    S2,
    S3,
    S4,
    R1,
    R2,
    R3,
    R4,
}

impl Scheme {
    pub fn is_bandit(self) -> bool {
        matches!(self, Scheme::S1 | Scheme::S2 | Scheme::S3 | Scheme::S4)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::S1 => "S1",
            Scheme::S2 => "S2",
            Scheme::S3 => "S3",
            Scheme::S4 => "S4",
            Scheme::R1 => "R1",
            Scheme::R2 => "R2",
            Scheme::R3 => "R3",
            Scheme::R4 => "R4",
        }
    }

    /// Number of independent reward types the scheme pays.
    pub fn n_reward_types(self) -> usize {
        match self {
            Scheme::S4 | Scheme::R4 => 2,
            _ => 1,
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "S1" => Scheme::S1,
            "S2" => Scheme::S2,
            "S3" => Scheme::S3,
            "S4" => Scheme::S4,
            "R1" => Scheme::R1,
            "R2" => Scheme::R2,
            "R3" => Scheme::R3,
            "R4" => Scheme::R4,
            other => return Err(format!("unknown reward scheme `{other}`")),
        })
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Steps between completing a delayed pattern and the reward firing.
pub const REWARD_DELAY: usize = 3;

/// Fires when `run` has been read at least `run_len` times in a row and is
/// followed by `last`. After firing the monitor behaves as if freshly reset.
pub fn run_then(alphabet: usize, run: usize, run_len: usize, last: usize) -> Dfa {
    // states 0..=run_len count the current run (capped), run_len+1 accepts
    let accept = run_len + 1;
    Dfa::from_fn(run_len + 2, alphabet, 0, |q| q == accept, |q, a| {
        let count = if q == accept { 0 } else { q };
        if a == run {
            (count + 1).min(run_len)
        } else if a == last && count == run_len {
            accept
        } else {
            0
        }
    })
    .map(|d| d.minimize())
    .expect("well-formed construction")
}

/// Delays every firing of `base` by `delay` symbols. The pattern is not
/// tracked while a firing is pending; once it fires, the monitor continues
/// from the accepting state of `base`.
pub fn delayed(base: &Dfa, delay: usize) -> Dfa {
    let n = base.n_states();
    let k = base.alphabet();
    // states: base states (accepting ones now silent entry points) then one
    // chain of `delay` countdown states per accepting base state
    let accepting: Vec<usize> = base.accepting_states().collect();
    let chain = |acc_idx: usize, step: usize| n + acc_idx * delay + step;
    let total = n + accepting.len() * delay;
    let mut delta = vec![0u32; total * k];
    let mut acc = vec![false; total];
    let redirect = |t: usize| -> usize {
        match accepting.iter().position(|&a| a == t) {
            Some(i) if delay > 0 => chain(i, 0),
            _ => t,
        }
    };
    for q in 0..n {
        acc[q] = base.is_accepting(q) && delay == 0;
        for a in 0..k {
            let t = base.next(q, crate::types::Symbol(a as u32));
            delta[q * k + a] = redirect(t) as u32;
        }
    }
    for (i, &a_state) in accepting.iter().enumerate() {
        for step in 0..delay {
            let from = chain(i, step);
            let to = if step + 1 == delay { a_state } else { chain(i, step + 1) };
            for a in 0..k {
                delta[from * k + a] = to as u32;
            }
        }
        if delay > 0 {
            acc[a_state] = true;
        }
    }
    Dfa::new(total, k, delta, base.initial() as u32, acc)
        .expect("well-formed construction")
        .minimize()
}

/// Fires on every `pick` once `cleans` effective `clean` symbols were read.
fn pick_after_cleaning(alphabet: usize, clean: usize, pick: usize, cleans: usize) -> Dfa {
    // 0..=cleans count cleaning, cleans+1 accepts (and keeps counting as done)
    let accept = cleans + 1;
    Dfa::from_fn(cleans + 2, alphabet, 0, |q| q == accept, |q, a| {
        let done = if q == accept { cleans } else { q };
        if a == clean && done < cleans {
            done + 1
        } else if a == pick && done == cleans {
            accept
        } else {
            done
        }
    })
    .expect("well-formed construction")
    .minimize()
}

/// Like [`pick_after_cleaning`] but fires once, `delay` symbols after the
/// first qualifying pick; afterwards the monitor latches silent.
fn first_pick_after_cleaning_delayed(
    alphabet: usize,
    clean: usize,
    pick: usize,
    cleans: usize,
    delay: usize,
) -> Dfa {
    // 0..=cleans counting, then `delay` countdown states, then accept, then latch
    let countdown = cleans + 1;
    let accept = countdown + delay;
    let latch = accept + 1;
    Dfa::from_fn(latch + 1, alphabet, 0, |q| q == accept, |q, a| {
        if q <= cleans {
            if a == clean && q < cleans {
                q + 1
            } else if a == pick && q == cleans {
                if delay == 0 {
                    accept
                } else {
                    countdown
                }
            } else {
                q
            }
        } else if q < accept {
            q + 1
        } else {
            latch
        }
    })
    .expect("well-formed construction")
    .minimize()
}

/// Arm indices are zero-based: "arm 1" is symbol 0.
pub fn bandit_monitors(scheme: Scheme, n_arms: usize) -> Option<Vec<Dfa>> {
    if n_arms < 3 {
        return None;
    }
    let s1 = || run_then(n_arms, 0, 4, 2);
    let s3 = || run_then(n_arms, 2, 2, 1);
    Some(match scheme {
        Scheme::S1 => vec![s1()],
        Scheme::S2 => vec![delayed(&s1(), REWARD_DELAY)],
        Scheme::S3 => vec![s3()],
        Scheme::S4 => vec![s1(), s3()],
        _ => return None,
    })
}

pub mod robot_actions {
    pub const UP: usize = 0;
    pub const DOWN: usize = 1;
    pub const LEFT: usize = 2;
    pub const RIGHT: usize = 3;
    pub const CLEAN: usize = 4;
    pub const PICK: usize = 5;
    pub const PUT: usize = 6;
    pub const COUNT: usize = 7;
    pub const NAMES: [&str; COUNT] = ["up", "down", "left", "right", "clean", "pick", "put"];
}

pub fn robot_monitors(scheme: Scheme, n_stains: usize) -> Option<Vec<Dfa>> {
    use robot_actions::*;
    let r1 = || pick_after_cleaning(COUNT, CLEAN, PICK, n_stains);
    let r3 = || run_then(COUNT, RIGHT, 2, PICK);
    Some(match scheme {
        Scheme::R1 => vec![r1()],
        Scheme::R2 => vec![first_pick_after_cleaning_delayed(COUNT, CLEAN, PICK, n_stains, REWARD_DELAY)],
        Scheme::R3 => vec![r3()],
        Scheme::R4 => vec![r1(), r3()],
        _ => return None,
    })
}

//! Angluin-style exact learning with an observation table of access words
//! and test words, and binary-search counterexample processing.
//!
//! [`LStar`] is a resumable state machine: [`LStar::next_query`] returns the
//! next question for the teacher, and the caller feeds answers back. This
//! lets a slow teacher (an environment that has to act out a word) interleave
//! queries with other work. [`lstar_run`] drives it against a synchronous
//! [`Teacher`].

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::automata::Dfa;
use crate::types::{format_word, Symbol, Word};

pub trait Teacher {
    fn member(&mut self, w: &[Symbol]) -> bool;
    /// `None` when `hypothesis` is correct, otherwise a word it misclassifies.
    fn equivalence(&mut self, hypothesis: &Dfa) -> Option<Word>;
}

/// Teacher backed by a known automaton; equivalence answers are the
/// shortest counterexamples.
#[derive(Debug, Clone)]
pub struct DfaTeacher<'a> {
    pub target: &'a Dfa,
}

impl Teacher for DfaTeacher<'_> {
    fn member(&mut self, w: &[Symbol]) -> bool {
        self.target.accepts(w)
    }

    fn equivalence(&mut self, hypothesis: &Dfa) -> Option<Word> {
        match hypothesis.equivalent(self.target) {
            Ok(crate::automata::Equivalence::Equal) => None,
            Ok(crate::automata::Equivalence::Counterexample(w)) => Some(w),
            Err(e) => panic!("teacher and learner disagree on the alphabet: {e}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LStarError {
    #[error("teacher answers are inconsistent: {0}")]
    Inconsistent(String),
    #[error("answer for {0} does not match the pending query")]
    UnexpectedAnswer(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    Membership(Word),
    Equivalence(Dfa),
    Finished(Dfa),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryStats {
    /// Membership questions that reached the teacher.
    pub membership: usize,
    pub cache_hits: usize,
    pub equivalence: usize,
    pub counterexamples: usize,
}

#[derive(Debug, Clone)]
enum Phase {
    Closing,
    Awaiting(Dfa),
    Counterexample { word: Word, hypothesis: Dfa },
    Finished(Dfa),
}

/// Marker for "this computation needs the membership of a word not yet cached".
struct Need(Word);

#[derive(Debug, Clone)]
pub struct LStar {
    alphabet: usize,
    access: Vec<Word>,
    tests: Vec<Word>,
    cache: FxHashMap<Word, bool>,
    phase: Phase,
    pending: Option<Word>,
    stats: QueryStats,
    log: Option<Vec<String>>,
}

impl LStar {
    pub fn new(alphabet: usize) -> Self {
        Self {
            alphabet,
            access: vec![Vec::new()],
            tests: vec![Vec::new()],
            cache: FxHashMap::default(),
            phase: Phase::Closing,
            pending: None,
            stats: QueryStats::default(),
            log: None,
        }
    }

    /// Records one line per teacher interaction.
    pub fn with_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn access_words(&self) -> &[Word] {
        &self.access
    }

    pub fn test_words(&self) -> &[Word] {
        &self.tests
    }

    pub fn stats(&self) -> QueryStats {
        self.stats
    }

    pub fn log(&self) -> Option<&[String]> {
        self.log.as_deref()
    }

    pub fn cached(&self, w: &[Symbol]) -> Option<bool> {
        self.cache.get(w).copied()
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.phase, Phase::Finished(_))
    }

    /// The latest hypothesis, if one has been built.
    pub fn hypothesis(&self) -> Option<&Dfa> {
        match &self.phase {
            Phase::Awaiting(h) | Phase::Finished(h) => Some(h),
            Phase::Counterexample { hypothesis, .. } => Some(hypothesis),
            Phase::Closing => None,
        }
    }

    fn lookup(&mut self, w: Word) -> Result<bool, Need> {
        match self.cache.get(&w) {
            Some(&b) => Ok(b),
            None => Err(Need(w)),
        }
    }

    fn concat(a: &[Symbol], b: &[Symbol]) -> Word {
        let mut w = Vec::with_capacity(a.len() + b.len());
        w.extend_from_slice(a);
        w.extend_from_slice(b);
        w
    }

    fn row(&mut self, w: &[Symbol]) -> Result<Vec<bool>, Need> {
        let tests = self.tests.clone();
        tests.iter().map(|t| self.lookup(Self::concat(w, t))).collect()
    }

    /// T-equivalence using only cached answers.
    fn t_equiv_cached(&mut self, v: &[Symbol], w: &[Symbol]) -> Result<bool, Need> {
        Ok(self.row(v)? == self.row(w)?)
    }

    /// Whether `v` and `w` agree on every test word, asking the teacher for
    /// missing answers.
    pub fn t_equivalent(&mut self, v: &[Symbol], w: &[Symbol], teacher: &mut impl Teacher) -> bool {
        loop {
            match self.t_equiv_cached(v, w) {
                Ok(b) => return b,
                Err(Need(x)) => {
                    let b = teacher.member(&x);
                    self.record(x, b);
                }
            }
        }
    }

    fn record(&mut self, w: Word, b: bool) {
        self.stats.membership += 1;
        if let Some(log) = &mut self.log {
            log.push(format!("member {} {}", format_word(&w), b as u8));
        }
        self.cache.insert(w, b);
    }

    /// Closes the table; returns the hypothesis once every extension row
    /// matches an access row.
    fn close(&mut self) -> Result<Dfa, Need> {
        let k = self.alphabet;
        let mut rows: Vec<Vec<bool>> = Vec::with_capacity(self.access.len());
        for i in 0..self.access.len() {
            let q = self.access[i].clone();
            rows.push(self.row(&q)?);
        }
        let mut delta = Vec::new();
        let mut i = 0;
        while i < self.access.len() {
            for a in 0..k {
                let ext = Self::concat(&self.access[i], &[Symbol(a as u32)]);
                let r = self.row(&ext)?;
                match rows.iter().position(|x| *x == r) {
                    Some(j) => delta.push(j as u32),
                    None => {
                        delta.push(self.access.len() as u32);
                        self.access.push(ext);
                        rows.push(r);
                    }
                }
            }
            i += 1;
        }
        let accepting = rows.iter().map(|r| r[0]).collect();
        Ok(Dfa::new(self.access.len(), k, delta, 0, accepting).expect("table yields a well-formed automaton"))
    }

    /// Binary search for a split point; `Ok(None)` when the word is not a
    /// counterexample according to the cache.
    fn split(&mut self, w: &[Symbol], h: &Dfa) -> Result<Result<(Word, Word), LStarError>, Need> {
        let n = w.len();
        let mut states = Vec::with_capacity(n + 1);
        let mut q = h.initial();
        states.push(q);
        for &s in w {
            q = h.next(q, s);
            states.push(q);
        }
        let alpha = |me: &mut Self, i: usize| -> Result<bool, Need> {
            let u = me.access[states[i]].clone();
            me.lookup(Self::concat(&u, &w[i..]))
        };
        let (a0, an) = (alpha(self, 0)?, alpha(self, n)?);
        if a0 == an {
            return Ok(Err(LStarError::Inconsistent(format!(
                "{} is not a counterexample to the current hypothesis",
                format_word(w)
            ))));
        }
        let (mut lo, mut hi) = (0, n);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if alpha(self, mid)? == a0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = Self::concat(&self.access[states[lo]], &w[lo..lo + 1]);
        let t = w[lo + 1..].to_vec();
        if self.tests.contains(&t) || self.access.contains(&q) {
            return Ok(Err(LStarError::Inconsistent(format!(
                "split of {} yields no new distinction",
                format_word(w)
            ))));
        }
        Ok(Ok((q, t)))
    }

    /// Advances as far as cached answers allow and returns the next question.
    pub fn next_query(&mut self) -> Result<Query, LStarError> {
        if let Some(w) = &self.pending {
            return Ok(Query::Membership(w.clone()));
        }
        loop {
            match std::mem::replace(&mut self.phase, Phase::Closing) {
                Phase::Finished(h) => {
                    self.phase = Phase::Finished(h.clone());
                    return Ok(Query::Finished(h));
                }
                Phase::Awaiting(h) => {
                    self.phase = Phase::Awaiting(h.clone());
                    return Ok(Query::Equivalence(h));
                }
                Phase::Closing => match self.close() {
                    Ok(h) => {
                        self.stats.equivalence += 1;
                        if let Some(log) = &mut self.log {
                            log.push(format!("equivalence {}", h.n_states()));
                        }
                        self.phase = Phase::Awaiting(h.clone());
                        return Ok(Query::Equivalence(h));
                    }
                    Err(Need(w)) => return Ok(self.ask(w)),
                },
                Phase::Counterexample { word, hypothesis } => match self.split(&word, &hypothesis) {
                    Ok(Ok((q, t))) => {
                        self.access.push(q);
                        self.tests.push(t);
                    }
                    Ok(Err(e)) => {
                        self.phase = Phase::Counterexample { word, hypothesis };
                        return Err(e);
                    }
                    Err(Need(w)) => {
                        self.phase = Phase::Counterexample { word, hypothesis };
                        return Ok(self.ask(w));
                    }
                },
            }
        }
    }

    fn ask(&mut self, w: Word) -> Query {
        self.pending = Some(w.clone());
        Query::Membership(w)
    }

    pub fn answer_membership(&mut self, w: &[Symbol], member: bool) -> Result<(), LStarError> {
        match &self.pending {
            Some(p) if p.as_slice() == w => {
                self.pending = None;
                self.record(w.to_vec(), member);
                Ok(())
            }
            _ => Err(LStarError::UnexpectedAnswer(format_word(w))),
        }
    }

    /// `None` accepts the pending hypothesis.
    pub fn answer_equivalence(&mut self, counterexample: Option<Word>) -> Result<(), LStarError> {
        let h = match &self.phase {
            Phase::Awaiting(h) => h.clone(),
            _ => return Err(LStarError::UnexpectedAnswer("equivalence".into())),
        };
        match counterexample {
            None => {
                if let Some(log) = &mut self.log {
                    log.push("equivalence yes".into());
                }
                self.phase = Phase::Finished(h);
            }
            Some(w) => {
                if let Some(log) = &mut self.log {
                    log.push(format!("equivalence no {}", format_word(&w)));
                }
                if let Some(&b) = self.cache.get(&w) {
                    if b == h.accepts(&w) {
                        return Err(LStarError::Inconsistent(format!(
                            "{} is classified correctly by the hypothesis",
                            format_word(&w)
                        )));
                    }
                }
                self.stats.counterexamples += 1;
                self.phase = Phase::Counterexample { word: w, hypothesis: h };
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LStarBudget {
    pub max_membership: usize,
    pub max_equivalence: usize,
}

impl Default for LStarBudget {
    fn default() -> Self {
        Self {
            max_membership: 1_000_000,
            max_equivalence: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LStarOutcome {
    pub dfa: Dfa,
    /// Budget ran out before the teacher approved `dfa`.
    pub provisional: bool,
    pub stats: QueryStats,
    pub log: Option<Vec<String>>,
}

/// Runs the learner to completion against `teacher`.
pub fn lstar_run(
    teacher: &mut impl Teacher,
    alphabet: usize,
    budget: LStarBudget,
    log: bool,
) -> Result<LStarOutcome, LStarError> {
    let mut l = LStar::new(alphabet);
    if log {
        l = l.with_log();
    }
    let finish = |l: &LStar, dfa: Dfa, provisional: bool| LStarOutcome {
        dfa,
        provisional,
        stats: l.stats,
        log: l.log.clone(),
    };
    loop {
        match l.next_query()? {
            Query::Membership(w) => {
                if l.stats.membership >= budget.max_membership {
                    let h = l.hypothesis().cloned().unwrap_or_else(|| Dfa::trivial(alphabet, false));
                    return Ok(finish(&l, h, true));
                }
                let b = teacher.member(&w);
                l.answer_membership(&w, b)?;
            }
            Query::Equivalence(h) => {
                let cex = teacher.equivalence(&h);
                if cex.is_some() && l.stats.equivalence >= budget.max_equivalence {
                    return Ok(finish(&l, h, true));
                }
                l.answer_equivalence(cex)?;
            }
            Query::Finished(h) => return Ok(finish(&l, h, false)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::schemes::bandit_monitors;
    use crate::envs::Scheme;
    use crate::env::seeded_rng;
    use crate::types::word;

    fn s1() -> Dfa {
        bandit_monitors(Scheme::S1, 3).unwrap().remove(0)
    }

    struct Counting<'a> {
        inner: DfaTeacher<'a>,
        members: usize,
    }

    impl Teacher for Counting<'_> {
        fn member(&mut self, w: &[Symbol]) -> bool {
            self.members += 1;
            self.inner.member(w)
        }
        fn equivalence(&mut self, h: &Dfa) -> Option<Word> {
            self.inner.equivalence(h)
        }
    }

    #[test]
    fn t_equivalence_examples() {
        let target = s1();
        let mut t = DfaTeacher { target: &target };
        let mut l = LStar::new(3);
        // Symbols are zero-based: arm 1 is 0, arm 3 is 2.
        assert!(l.t_equivalent(&word(&[0]), &word(&[1]), &mut t));
        assert!(l.t_equivalent(&word(&[0, 2]), &word(&[0, 2]), &mut t));
        l.tests = vec![word(&[2])];
        assert!(!l.t_equivalent(&word(&[0, 0, 0, 0]), &[], &mut t));
    }

    #[test]
    fn learns_s1_exactly() {
        let target = s1();
        let out = lstar_run(&mut DfaTeacher { target: &target }, 3, LStarBudget::default(), true).unwrap();
        assert!(!out.provisional);
        assert!(out.dfa.same_language(&target));
        assert_eq!(out.dfa.n_states(), 6);
        assert!(out.log.unwrap().last().unwrap().starts_with("equivalence yes"));
    }

    #[test]
    fn trivial_languages_take_one_equivalence() {
        for acc in [false, true] {
            let target = Dfa::trivial(3, acc);
            let out = lstar_run(&mut DfaTeacher { target: &target }, 3, LStarBudget::default(), false).unwrap();
            assert_eq!(out.dfa.n_states(), 1);
            assert_eq!(out.stats.equivalence, 1);
            assert_eq!(out.stats.membership, 4);
        }
    }

    #[test]
    fn first_counterexample_for_s1_splits_cheaply() {
        let target = s1();
        let mut t = Counting {
            inner: DfaTeacher { target: &target },
            members: 0,
        };
        let mut l = LStar::new(3);
        let h = loop {
            match l.next_query().unwrap() {
                Query::Membership(w) => {
                    let b = t.member(&w);
                    l.answer_membership(&w, b).unwrap();
                }
                Query::Equivalence(h) => break h,
                Query::Finished(_) => unreachable!(),
            }
        };
        assert_eq!(h.n_states(), 1);
        assert!(!h.is_accepting(0));
        l.answer_equivalence(Some(word(&[0, 0, 0, 0, 2]))).unwrap();
        let before = t.members;
        let (q, tw) = loop {
            match l.next_query().unwrap() {
                Query::Membership(w) => {
                    let b = t.member(&w);
                    l.answer_membership(&w, b).unwrap();
                }
                Query::Equivalence(_) => break (l.access[1].clone(), l.tests[1].clone()),
                Query::Finished(_) => unreachable!(),
            }
        };
        assert!(tw.len() < 5);
        assert_eq!(q.len(), 1);
        assert!(t.members > before);
    }

    #[test]
    fn bogus_counterexample_is_reported() {
        let target = s1();
        let mut t = DfaTeacher { target: &target };
        let mut l = LStar::new(3);
        loop {
            match l.next_query().unwrap() {
                Query::Membership(w) => {
                    let b = t.member(&w);
                    l.answer_membership(&w, b).unwrap();
                }
                Query::Equivalence(_) => break,
                Query::Finished(_) => unreachable!(),
            }
        }
        l.answer_equivalence(Some(word(&[1, 1]))).unwrap();
        let err = loop {
            match l.next_query() {
                Ok(Query::Membership(w)) => {
                    let b = t.member(&w);
                    l.answer_membership(&w, b).unwrap();
                }
                Ok(_) => panic!("accepted a non-counterexample"),
                Err(e) => break e,
            }
        };
        assert!(matches!(err, LStarError::Inconsistent(_)));
    }

    #[test]
    fn wrong_answer_is_rejected() {
        let mut l = LStar::new(2);
        let Query::Membership(w) = l.next_query().unwrap() else { panic!() };
        assert!(w.is_empty());
        assert!(l.answer_membership(&word(&[1]), true).is_err());
        assert!(l.answer_membership(&w, true).is_ok());
    }

    #[test]
    fn random_targets_are_learned_minimally() {
        let mut rng = seeded_rng(3, 0);
        for n in 1..=8 {
            for k in 2..=3 {
                let target = Dfa::random_minimal(n, k, &mut rng);
                let out = lstar_run(&mut DfaTeacher { target: &target }, k, LStarBudget::default(), false).unwrap();
                assert!(out.dfa.same_language(&target));
                assert_eq!(out.dfa.n_states(), n);
            }
        }
    }

    #[test]
    fn budget_marks_result_provisional() {
        let target = s1();
        let budget = LStarBudget {
            max_membership: 5,
            ..LStarBudget::default()
        };
        let out = lstar_run(&mut DfaTeacher { target: &target }, 3, budget, false).unwrap();
        assert!(out.provisional);
    }
}

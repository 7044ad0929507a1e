use super::pta::{Pta, NONE};
use super::Score;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Undo {
    Parent(u32),
    Size(u32, u32),
    Pos(u32, u64),
    Neg(u32, u64),
    Trans(u32, u32),
    MinNode(u32, u32),
}

/// Partition of PTA nodes into classes, kept deterministic by folding.
///
/// Union-find without path compression so every write can be logged and
/// rolled back; union by size keeps `find` logarithmic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeState {
    k: usize,
    parent: Vec<u32>,
    size: Vec<u32>,
    pos: Vec<u64>,
    neg: Vec<u64>,
    /// Per representative: any node of the target class, or `NONE`.
    trans: Vec<u32>,
    min_node: Vec<u32>,
    log: Vec<Undo>,
    work: Vec<(u32, u32)>,
}

impl MergeState {
    pub fn new(pta: &Pta) -> Self {
        let n = pta.len();
        let k = pta.alphabet();
        let mut trans = vec![NONE; n * k];
        for v in 0..n {
            for a in 0..k {
                if let Some(c) = pta.child(v, a) {
                    trans[v * k + a] = c as u32;
                }
            }
        }
        Self {
            k,
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            pos: (0..n).map(|v| pta.pos(v)).collect(),
            neg: (0..n).map(|v| pta.neg(v)).collect(),
            trans,
            min_node: (0..n as u32).collect(),
            log: Vec::new(),
            work: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&self, mut v: usize) -> usize {
        while self.parent[v] as usize != v {
            v = self.parent[v] as usize;
        }
        v
    }

    /// Smallest PTA node in the class of `v`; the canonical class name.
    pub fn class_id(&self, v: usize) -> usize {
        self.min_node[self.find(v)] as usize
    }

    /// Class reached from the class of `v` on symbol `a`.
    pub fn succ(&self, v: usize, a: usize) -> Option<usize> {
        let t = self.trans[self.find(v) * self.k + a];
        (t != NONE).then(|| self.find(t as usize))
    }

    pub fn pos(&self, v: usize) -> u64 {
        self.pos[self.find(v)]
    }

    pub fn neg(&self, v: usize) -> u64 {
        self.neg[self.find(v)]
    }

    fn set_trans(&mut self, i: usize, val: u32) {
        self.log.push(Undo::Trans(i as u32, self.trans[i]));
        self.trans[i] = val;
    }

    /// Unions two classes; returns the evidence gained, or `None` on a
    /// label clash. Successor pairs are queued for folding.
    fn union(&mut self, a: usize, b: usize, score: Score) -> Option<u64> {
        let (mut r, mut c) = (self.find(a), self.find(b));
        if r == c {
            return Some(0);
        }
        let (pr, nr, pc, nc) = (self.pos[r], self.neg[r], self.pos[c], self.neg[c]);
        if (pr > 0 && nc > 0) || (nr > 0 && pc > 0) {
            return None;
        }
        let gained = match score {
            Score::PairCount => {
                (if pr > 0 && pc > 0 { pr.min(pc) } else { 0 }) + (if nr > 0 && nc > 0 { nr.min(nc) } else { 0 })
            }
            Score::EvidenceSum => {
                (if pr > 0 && pc > 0 { pr + pc } else { 0 }) + (if nr > 0 && nc > 0 { nr + nc } else { 0 })
            }
        };
        if self.size[r] < self.size[c] {
            std::mem::swap(&mut r, &mut c);
        }
        self.log.push(Undo::Parent(c as u32));
        self.parent[c] = r as u32;
        self.log.push(Undo::Size(r as u32, self.size[r]));
        self.size[r] += self.size[c];
        self.log.push(Undo::Pos(r as u32, self.pos[r]));
        self.pos[r] += self.pos[c];
        self.log.push(Undo::Neg(r as u32, self.neg[r]));
        self.neg[r] += self.neg[c];
        if self.min_node[c] < self.min_node[r] {
            self.log.push(Undo::MinNode(r as u32, self.min_node[r]));
            self.min_node[r] = self.min_node[c];
        }
        for s in 0..self.k {
            let tc = self.trans[c * self.k + s];
            if tc == NONE {
                continue;
            }
            let tr = self.trans[r * self.k + s];
            if tr == NONE {
                self.set_trans(r * self.k + s, tc);
            } else {
                self.work.push((tr, tc));
            }
        }
        Some(gained)
    }

    /// Merges the classes of `red` and `blue` and folds until deterministic.
    /// On a label clash everything is rolled back and `None` is returned.
    pub fn try_merge(&mut self, red: usize, blue: usize, score: Score) -> Option<u64> {
        let mark = self.log.len();
        self.work.clear();
        let mut total = 0u64;
        let mut pair = Some((red as u32, blue as u32));
        while let Some((x, y)) = pair {
            match self.union(x as usize, y as usize, score) {
                Some(g) => total += g,
                None => {
                    self.rollback(mark);
                    self.work.clear();
                    return None;
                }
            }
            pair = self.work.pop();
        }
        Some(total)
    }

    /// Log position to pass to [`MergeState::rollback`].
    pub fn mark(&self) -> usize {
        self.log.len()
    }

    pub fn rollback(&mut self, mark: usize) {
        while self.log.len() > mark {
            match self.log.pop().expect("log longer than mark") {
                Undo::Parent(c) => self.parent[c as usize] = c,
                Undo::Size(r, v) => self.size[r as usize] = v,
                Undo::Pos(r, v) => self.pos[r as usize] = v,
                Undo::Neg(r, v) => self.neg[r as usize] = v,
                Undo::Trans(i, v) => self.trans[i as usize] = v,
                Undo::MinNode(r, v) => self.min_node[r as usize] = v,
            }
        }
    }

    /// Drops the undo history, making all merges so far permanent.
    pub fn commit(&mut self) {
        self.log.clear();
    }

    /// Canonical partition: for each node, the smallest node in its class.
    pub fn partition(&self) -> Vec<usize> {
        (0..self.len()).map(|v| self.class_id(v)).collect()
    }
}

use std::collections::VecDeque;

use super::EdsmError;
use crate::trace::Sample;
use crate::types::format_word;

pub(crate) const NONE: u32 = u32::MAX;

/// Prefix tree acceptor with weighted label evidence per node. Nodes are
/// numbered breadth-first with symbols in index order, so node order is
/// the canonical (length, lexicographic) order of the prefixes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pta {
    alphabet: usize,
    children: Vec<u32>,
    pos: Vec<u64>,
    neg: Vec<u64>,
}

impl Pta {
    pub fn build(alphabet: usize, samples: &[Sample]) -> Result<Self, EdsmError> {
        let mut children = vec![NONE; alphabet];
        let mut pos = vec![0u64];
        let mut neg = vec![0u64];
        for s in samples {
            let mut node = 0usize;
            for (i, label) in s.labels.iter().enumerate() {
                if i > 0 {
                    let a = s.word[i - 1].index();
                    if a >= alphabet {
                        return Err(EdsmError::SymbolOutOfRange(a as u32));
                    }
                    let slot = node * alphabet + a;
                    if children[slot] == NONE {
                        children[slot] = pos.len() as u32;
                        children.extend(std::iter::repeat_n(NONE, alphabet));
                        pos.push(0);
                        neg.push(0);
                    }
                    node = children[slot] as usize;
                }
                match label {
                    Some(true) => pos[node] += s.weight as u64,
                    Some(false) => neg[node] += s.weight as u64,
                    None => {}
                }
                if pos[node] > 0 && neg[node] > 0 {
                    return Err(EdsmError::Inconsistent(format_word(&s.word[..i])));
                }
            }
        }
        Ok(Self {
            alphabet,
            children,
            pos,
            neg,
        }
        .renumbered())
    }

    fn renumbered(self) -> Self {
        let k = self.alphabet;
        let n = self.pos.len();
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for a in 0..k {
                let c = self.children[v * k + a];
                if c != NONE {
                    queue.push_back(c as usize);
                }
            }
        }
        let mut new_id = vec![0u32; n];
        for (i, &v) in order.iter().enumerate() {
            new_id[v] = i as u32;
        }
        let mut children = vec![NONE; n * k];
        for (i, &v) in order.iter().enumerate() {
            for a in 0..k {
                let c = self.children[v * k + a];
                if c != NONE {
                    children[i * k + a] = new_id[c as usize];
                }
            }
        }
        Self {
            alphabet: k,
            children,
            pos: order.iter().map(|&v| self.pos[v]).collect(),
            neg: order.iter().map(|&v| self.neg[v]).collect(),
        }
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn child(&self, node: usize, a: usize) -> Option<usize> {
        let c = self.children[node * self.alphabet + a];
        (c != NONE).then_some(c as usize)
    }

    /// Weighted positive evidence at `node`.
    pub fn pos(&self, node: usize) -> u64 {
        self.pos[node]
    }

    pub fn neg(&self, node: usize) -> u64 {
        self.neg[node]
    }

    pub fn is_accepting(&self, node: usize) -> bool {
        self.pos[node] > 0
    }

    pub fn is_rejecting(&self, node: usize) -> bool {
        self.neg[node] > 0
    }
}

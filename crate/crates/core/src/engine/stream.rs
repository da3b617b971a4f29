//! Word streams over links, for protocols whose messages are longer than one
//! round's capacity. The writer releases at most `X` words per neighbor per
//! round, so strict mode is never violated; the reader reassembles fixed-size
//! frames.

use std::collections::{BTreeMap, VecDeque};

use super::{Envelope, Outbox};
use crate::graph::NodeId;

#[derive(Debug, Clone, Default)]
pub struct LinkWriter {
    pending: BTreeMap<NodeId, VecDeque<u64>>,
}

impl LinkWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, dst: NodeId, words: &[u64]) {
        self.pending.entry(dst).or_default().extend(words.iter().copied());
    }

    pub fn push_all<'a>(&mut self, dsts: impl IntoIterator<Item = &'a NodeId>, words: &[u64]) {
        for &d in dsts {
            self.push(d, words);
        }
    }

    /// Words still waiting for `dst`.
    pub fn pending_to(&self, dst: NodeId) -> usize {
        self.pending.get(&dst).map_or(0, VecDeque::len)
    }

    pub fn is_idle(&self) -> bool {
        self.pending.values().all(VecDeque::is_empty)
    }

    /// Emits one envelope of at most `words_per_round` words per neighbor.
    pub fn flush(&mut self, out: &mut Outbox, words_per_round: u64) {
        let cap = words_per_round as usize;
        for (&dst, queue) in self.pending.iter_mut() {
            if queue.is_empty() {
                continue;
            }
            let take = cap.min(queue.len());
            out.send(dst, queue.drain(..take).collect());
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LinkReader {
    buffers: BTreeMap<NodeId, VecDeque<u64>>,
}

impl LinkReader {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn absorb(&mut self, inbox: &[Envelope]) {
        for env in inbox {
            self.buffers
                .entry(env.src)
                .or_default()
                .extend(env.payload.iter().copied());
        }
    }

    /// Senders with buffered words, ascending.
    pub fn senders(&self) -> Vec<NodeId> {
        self.buffers
            .iter()
            .filter(|(_, b)| !b.is_empty())
            .map(|(&s, _)| s)
            .collect()
    }

    pub fn available(&self, src: NodeId) -> usize {
        self.buffers.get(&src).map_or(0, VecDeque::len)
    }

    pub fn peek(&self, src: NodeId) -> Option<u64> {
        self.buffers.get(&src).and_then(|b| b.front().copied())
    }

    /// Removes and returns the next `len` words from `src`, if all are there.
    pub fn take(&mut self, src: NodeId, len: usize) -> Option<Vec<u64>> {
        let buf = self.buffers.get_mut(&src)?;
        if buf.len() < len {
            return None;
        }
        Some(buf.drain(..len).collect())
    }
}

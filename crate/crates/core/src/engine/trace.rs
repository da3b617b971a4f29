use std::collections::{BTreeMap, VecDeque};
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{BandwidthConfig, EngineError, Envelope};
use crate::graph::{Graph, NodeId};

/// Bits moved over one directed channel in one round, and what was left queued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub round: u64,
    pub from: NodeId,
    pub to: NodeId,
    pub bits: u64,
    pub backlog_bits: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelTotals {
    pub emitted_words: u64,
    pub delivered_words: u64,
    pub backlog_words: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedEnvelope {
    pub round: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub payload: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub rounds_used: u64,
    pub total_messages: u64,
    pub max_edge_bits: u64,
    /// Peak of the network-wide queued bits at the end of a round.
    pub max_backlog_bits: u64,
}

/// Everything observable about a run. Only channel-rounds that moved bits or
/// held a backlog are recorded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunTrace {
    pub rounds_used: u64,
    pub word_bits: u32,
    pub capacity_bits: u64,
    pub records: Vec<ChannelRecord>,
    pub total_messages: u64,
    pub halt_rounds: BTreeMap<NodeId, u64>,
    pub channels: BTreeMap<(NodeId, NodeId), ChannelTotals>,
    pub peak_backlog_bits: u64,
    /// Largest number of words emitted onto one channel in one round.
    pub max_emitted_words: u64,
    /// Words that could not leave in the round they were emitted.
    pub overflow_words: u64,
    pub record_envelopes: bool,
    pub envelopes: Vec<LoggedEnvelope>,
    /// `(phase name, rounds)` for composite runs.
    pub phases: Vec<(String, u64)>,
}

impl RunTrace {
    pub(crate) fn new(g: &Graph, cfg: &BandwidthConfig, record_envelopes: bool) -> Self {
        let channels = g
            .edges()
            .iter()
            .flat_map(|e| [((e.u, e.v), ChannelTotals::default()), ((e.v, e.u), ChannelTotals::default())])
            .collect();
        Self {
            rounds_used: 0,
            word_bits: cfg.word_bits(),
            capacity_bits: cfg.capacity_bits(),
            records: Vec::new(),
            total_messages: 0,
            halt_rounds: BTreeMap::new(),
            channels,
            peak_backlog_bits: 0,
            max_emitted_words: 0,
            overflow_words: 0,
            record_envelopes,
            envelopes: Vec::new(),
            phases: Vec::new(),
        }
    }

    /// An empty trace for a phase that needed no rounds.
    pub fn empty(g: &Graph, cfg: &BandwidthConfig) -> Self {
        Self::new(g, cfg, false)
    }

    pub(crate) fn push_record(&mut self, round: u64, from: NodeId, to: NodeId, bits: u64, backlog_bits: u64) {
        if bits > 0 || backlog_bits > 0 {
            self.records.push(ChannelRecord {
                round,
                from,
                to,
                bits,
                backlog_bits,
            });
        }
    }

    pub(crate) fn finish_channels(
        &mut self,
        g: &Graph,
        src: &[usize],
        dst: &[usize],
        emitted: &[u64],
        delivered: &[u64],
        queues: &[VecDeque<(u64, Envelope)>],
    ) {
        for c in 0..src.len() {
            let key = (g.id_at(src[c]), g.id_at(dst[c]));
            let t = self.channels.entry(key).or_default();
            t.emitted_words += emitted[c];
            t.delivered_words += delivered[c];
            t.backlog_words += queues[c].iter().map(|(_, e)| e.words() as u64).sum::<u64>();
        }
    }

    pub fn max_edge_bits(&self) -> u64 {
        self.records.iter().map(|r| r.bits).max().unwrap_or(0)
    }

    /// True when no recorded channel-round moved more than `B` bits.
    pub fn capacity_respected(&self) -> bool {
        self.records.iter().all(|r| r.bits <= self.capacity_bits)
    }

    pub fn summary(&self) -> TraceSummary {
        TraceSummary {
            rounds_used: self.rounds_used,
            total_messages: self.total_messages,
            max_edge_bits: self.max_edge_bits(),
            max_backlog_bits: self.peak_backlog_bits,
        }
    }

    /// Appends a later phase. Its round 0 coincides with this trace's last
    /// round, so round counts add.
    pub fn then(&mut self, name: &str, next: RunTrace) {
        if self.phases.is_empty() && self.rounds_used > 0 {
            self.phases.push(("setup".into(), self.rounds_used));
        }
        let offset = self.rounds_used;
        self.records.extend(next.records.into_iter().map(|mut r| {
            r.round += offset;
            r
        }));
        self.envelopes.extend(next.envelopes.into_iter().map(|mut e| {
            e.round += offset;
            e
        }));
        self.record_envelopes |= next.record_envelopes;
        for (id, r) in next.halt_rounds {
            self.halt_rounds.insert(id, r + offset);
        }
        for (k, t) in next.channels {
            let mine = self.channels.entry(k).or_default();
            mine.emitted_words += t.emitted_words;
            mine.delivered_words += t.delivered_words;
            mine.backlog_words += t.backlog_words;
        }
        self.total_messages += next.total_messages;
        self.peak_backlog_bits = self.peak_backlog_bits.max(next.peak_backlog_bits);
        self.max_emitted_words = self.max_emitted_words.max(next.max_emitted_words);
        self.overflow_words += next.overflow_words;
        self.capacity_bits = self.capacity_bits.max(next.capacity_bits);
        self.rounds_used += next.rounds_used;
        self.phases.push((name.to_string(), next.rounds_used));
    }

    /// Starts a composite trace whose first phase is `first`.
    pub fn phase(name: &str, mut first: RunTrace) -> RunTrace {
        first.phases = vec![(name.to_string(), first.rounds_used)];
        first
    }

    /// `round,u,v,direction,bits,backlog_bits` with `u < v`; direction 0 is
    /// `u -> v`, 1 is `v -> u`.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "round,u,v,direction,bits,backlog_bits")?;
        let mut rows: Vec<_> = self
            .records
            .iter()
            .map(|r| {
                let (u, v, dir) = if r.from < r.to {
                    (r.from, r.to, 0)
                } else {
                    (r.to, r.from, 1)
                };
                (r.round, u, v, dir, r.bits, r.backlog_bits)
            })
            .collect();
        rows.sort_unstable();
        for (round, u, v, dir, bits, backlog) in rows {
            writeln!(out, "{round},{u},{v},{dir},{bits},{backlog}")?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string(&self.summary()).expect("summary serializes")
    }
}

/// Total bits across the edge `{a, b}` in both directions.
pub fn measure_bits(trace: &RunTrace, edge: (NodeId, NodeId)) -> Result<u64, EngineError> {
    let (a, b) = edge;
    if !trace.channels.contains_key(&(a, b)) {
        return Err(EngineError::UnknownEdge(a, b));
    }
    Ok(trace
        .records
        .iter()
        .filter(|r| (r.from == a && r.to == b) || (r.from == b && r.to == a))
        .map(|r| r.bits)
        .sum())
}

//! Round-synchronous execution of node programs under a per-edge,
//! per-direction bandwidth cap.
//!
//! Round `r` works as follows. Every awake node (and every halted node with a
//! non-empty inbox) runs [`NodeProgram::on_round`] on the envelopes delivered
//! to it at the end of round `r - 1`. Its emissions are appended to the FIFO of
//! the directed channel they travel on, and each channel then transmits as many
//! whole envelopes as fit into `B` bits. Everything transmitted in round `r` is
//! in the receiver's inbox for round `r + 1`.
//!
//! In [`CongestionMode::Strict`] a node emitting more than `B` bits towards one
//! neighbor in one round aborts the run. In [`CongestionMode::Queue`] the excess
//! waits in the channel FIFO and the backlog is recorded.
//!
//! A run ends once every node has halted and no envelope is queued or in
//! flight. A halted node is woken again by any envelope addressed to it, so a
//! node that halts early still sees late traffic. `rounds_used` is the last
//! round in which some node was active.

mod primitives;
mod stream;
mod trace;

pub use primitives::{
    bfs_tree, broadcast_flood, convergecast_sum, BfsTree, ConvergecastResult, FloodResult,
};
pub use stream::{LinkReader, LinkWriter};
pub use trace::{measure_bits, ChannelRecord, ChannelTotals, LoggedEnvelope, RunTrace, TraceSummary};

use std::collections::{BTreeMap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CongestionMode {
    /// Over-capacity emissions are an error.
    Strict,
    /// Over-capacity emissions wait in a per-direction FIFO.
    Queue,
}

/// Word size `w` and per-edge, per-direction capacity `B`, both in bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandwidthConfig {
    word_bits: u32,
    capacity_bits: u64,
    pub mode: CongestionMode,
}

impl BandwidthConfig {
    pub fn new(word_bits: u32, capacity_bits: u64, mode: CongestionMode) -> Result<Self, EngineError> {
        if word_bits == 0 {
            return Err(EngineError::InvalidConfig("word size must be positive".into()));
        }
        if capacity_bits < u64::from(word_bits) {
            return Err(EngineError::InvalidConfig(format!(
                "capacity {capacity_bits} bits is below one {word_bits}-bit word"
            )));
        }
        Ok(Self {
            word_bits,
            capacity_bits,
            mode,
        })
    }

    /// Capacity given directly as `X` words per round.
    pub fn from_words(word_bits: u32, words_per_round: u64, mode: CongestionMode) -> Result<Self, EngineError> {
        Self::new(word_bits, u64::from(word_bits) * words_per_round, mode)
    }

    /// Word size taken from the graph's largest id.
    pub fn for_graph(g: &Graph, capacity_bits: u64, mode: CongestionMode) -> Result<Self, EngineError> {
        Self::new(g.id_bits(), capacity_bits, mode)
    }

    pub fn word_bits(&self) -> u32 {
        self.word_bits
    }

    pub fn capacity_bits(&self) -> u64 {
        self.capacity_bits
    }

    /// `X = floor(B / w)`.
    pub fn words_per_round(&self) -> u64 {
        self.capacity_bits / u64::from(self.word_bits)
    }

    pub fn with_mode(mut self, mode: CongestionMode) -> Self {
        self.mode = mode;
        self
    }
}

/// A point-to-point message. Payloads are whole words; one word carries any
/// `O(log n)`-bit quantity (an id, a weight, a distance).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope {
    pub src: NodeId,
    pub dst: NodeId,
    pub payload: Vec<u64>,
    pub size_bits: u64,
}

impl Envelope {
    pub fn words(&self) -> usize {
        self.payload.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Continue,
    Halt,
}

/// What a node sees of the world besides its inbox.
pub struct NodeContext<'a> {
    id: NodeId,
    neighbors: &'a [NodeId],
    cfg: &'a BandwidthConfig,
    rng: &'a mut ChaCha8Rng,
}

impl NodeContext<'_> {
    pub fn id(&self) -> NodeId {
        self.id
    }

    /// Neighbor ids in ascending order.
    pub fn neighbors(&self) -> &[NodeId] {
        self.neighbors
    }

    pub fn words_per_round(&self) -> u64 {
        self.cfg.words_per_round()
    }

    pub fn word_bits(&self) -> u32 {
        self.cfg.word_bits()
    }

    /// This node's private random stream, derived from `(seed, id)`.
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        self.rng
    }
}

/// Emissions of one node in one round, in emission order.
#[derive(Debug, Default)]
pub struct Outbox {
    items: Vec<(NodeId, Vec<u64>)>,
}

impl Outbox {
    pub fn send(&mut self, dst: NodeId, payload: Vec<u64>) {
        self.items.push((dst, payload));
    }

    pub fn send_all<'a>(&mut self, dsts: impl IntoIterator<Item = &'a NodeId>, payload: &[u64]) {
        for &d in dsts {
            self.items.push((d, payload.to_vec()));
        }
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Per-node state machine run by the engine.
pub trait NodeProgram: Sized {
    type Input;
    type Output;

    fn init(ctx: &mut NodeContext<'_>, input: Self::Input) -> Self;

    fn on_round(
        &mut self,
        ctx: &mut NodeContext<'_>,
        round: u64,
        inbox: &[Envelope],
        out: &mut Outbox,
    ) -> Step;

    fn output(&self) -> Self::Output;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("round {round}: {from}->{to} carries {bits} bits, capacity {capacity}")]
    CongestionViolation {
        round: u64,
        from: NodeId,
        to: NodeId,
        bits: u64,
        capacity: u64,
    },
    #[error("round {round}: {from} sent to non-neighbor {to}")]
    Topology { round: u64, from: NodeId, to: NodeId },
    #[error("round {round}: {from} sent an empty envelope")]
    EmptyEnvelope { round: u64, from: NodeId },
    #[error("round {round}: {from}->{to} envelope of {bits} bits can never fit capacity {capacity}")]
    OversizedEnvelope {
        round: u64,
        from: NodeId,
        to: NodeId,
        bits: u64,
        capacity: u64,
    },
    #[error("no termination within {max_rounds} rounds")]
    Timeout {
        max_rounds: u64,
        trace: Box<RunTrace>,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("not a rooted spanning tree: {0}")]
    NotATree(String),
    #[error("edge {0}-{1} is not part of the traced graph")]
    UnknownEdge(NodeId, NodeId),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Outputs of every node plus the trace of the run.
#[derive(Debug, Clone)]
pub struct RunOutcome<O> {
    pub outputs: BTreeMap<NodeId, O>,
    pub trace: RunTrace,
}

/// Builder for a single engine run.
#[derive(Debug, Clone)]
pub struct Simulator<'g> {
    graph: &'g Graph,
    cfg: BandwidthConfig,
    seed: u64,
    max_rounds: u64,
    record_envelopes: bool,
}

pub const DEFAULT_MAX_ROUNDS: u64 = 1_000_000;

impl<'g> Simulator<'g> {
    pub fn new(graph: &'g Graph, cfg: BandwidthConfig) -> Self {
        Self {
            graph,
            cfg,
            seed: 0,
            max_rounds: DEFAULT_MAX_ROUNDS,
            record_envelopes: false,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn max_rounds(mut self, max_rounds: u64) -> Self {
        self.max_rounds = max_rounds;
        self
    }

    /// Keep every delivered envelope in the trace.
    pub fn record_envelopes(mut self, yes: bool) -> Self {
        self.record_envelopes = yes;
        self
    }

    pub fn run<P: NodeProgram>(
        &self,
        mut inputs: impl FnMut(NodeId) -> P::Input,
    ) -> Result<RunOutcome<P::Output>, EngineError> {
        if self.max_rounds == 0 {
            return Err(EngineError::InvalidConfig("max_rounds must be positive".into()));
        }
        let g = self.graph;
        let cfg = &self.cfg;
        let n = g.n();
        let capacity = cfg.capacity_bits();
        let w = u64::from(cfg.word_bits());

        // Directed channel `offset[s] + j` runs from slot s to its j-th neighbor.
        let mut offset = Vec::with_capacity(n + 1);
        let mut acc = 0;
        for s in 0..n {
            offset.push(acc);
            acc += g.neighbor_slots(s).len();
        }
        offset.push(acc);
        let channel_count = acc;
        let mut channel_dst = vec![0usize; channel_count];
        for s in 0..n {
            for (j, &t) in g.neighbor_slots(s).iter().enumerate() {
                channel_dst[offset[s] + j] = t;
            }
        }
        let mut channel_src = vec![0usize; channel_count];
        for s in 0..n {
            for c in offset[s]..offset[s + 1] {
                channel_src[c] = s;
            }
        }

        let mut rngs: Vec<ChaCha8Rng> = g
            .ids()
            .iter()
            .map(|id| {
                let mut r = ChaCha8Rng::seed_from_u64(self.seed);
                r.set_stream(u64::from(id.0));
                r
            })
            .collect();

        let mut states: Vec<P> = Vec::with_capacity(n);
        for s in 0..n {
            let id = g.id_at(s);
            let mut ctx = NodeContext {
                id,
                neighbors: g.neighbors(id),
                cfg,
                rng: &mut rngs[s],
            };
            states.push(P::init(&mut ctx, inputs(id)));
        }

        let mut trace = RunTrace::new(g, cfg, self.record_envelopes);
        let mut halted = vec![false; n];
        let mut halt_round: Vec<u64> = vec![0; n];
        let mut inbox: Vec<Vec<Envelope>> = vec![Vec::new(); n];
        let mut queues: Vec<VecDeque<(u64, Envelope)>> = vec![VecDeque::new(); channel_count];
        let mut emitted = vec![0u64; channel_count];
        let mut delivered = vec![0u64; channel_count];
        let mut round_bits = vec![0u64; channel_count];
        let mut queued_bits_total: u64 = 0;

        let mut round: u64 = 0;
        loop {
            if round >= self.max_rounds {
                trace.rounds_used = halt_round.iter().copied().max().unwrap_or(0);
                for s in 0..n {
                    trace.halt_rounds.insert(g.id_at(s), halt_round[s]);
                }
                trace.finish_channels(g, &channel_src, &channel_dst, &emitted, &delivered, &queues);
                return Err(EngineError::Timeout {
                    max_rounds: self.max_rounds,
                    trace: Box::new(trace),
                });
            }

            round_bits.iter_mut().for_each(|b| *b = 0);
            for s in 0..n {
                if halted[s] && inbox[s].is_empty() {
                    continue;
                }
                let id = g.id_at(s);
                let mut out = Outbox::default();
                let msgs = std::mem::take(&mut inbox[s]);
                let step = {
                    let mut ctx = NodeContext {
                        id,
                        neighbors: g.neighbors(id),
                        cfg,
                        rng: &mut rngs[s],
                    };
                    states[s].on_round(&mut ctx, round, &msgs, &mut out)
                };
                match step {
                    Step::Halt => {
                        halted[s] = true;
                        halt_round[s] = round;
                    }
                    Step::Continue => {
                        halted[s] = false;
                        halt_round[s] = round;
                    }
                }
                for (dst, payload) in out.items {
                    let Some(dslot) = g.slot(dst) else {
                        return Err(EngineError::Topology { round, from: id, to: dst });
                    };
                    let Ok(j) = g.neighbor_slots(s).binary_search(&dslot) else {
                        return Err(EngineError::Topology { round, from: id, to: dst });
                    };
                    if payload.is_empty() {
                        return Err(EngineError::EmptyEnvelope { round, from: id });
                    }
                    let c = offset[s] + j;
                    let bits = payload.len() as u64 * w;
                    if bits > capacity && cfg.mode == CongestionMode::Queue {
                        return Err(EngineError::OversizedEnvelope {
                            round,
                            from: id,
                            to: dst,
                            bits,
                            capacity,
                        });
                    }
                    round_bits[c] += bits;
                    if cfg.mode == CongestionMode::Strict && round_bits[c] > capacity {
                        return Err(EngineError::CongestionViolation {
                            round,
                            from: id,
                            to: dst,
                            bits: round_bits[c],
                            capacity,
                        });
                    }
                    emitted[c] += payload.len() as u64;
                    queued_bits_total += bits;
                    queues[c].push_back((
                        round,
                        Envelope {
                            src: id,
                            dst,
                            payload,
                            size_bits: bits,
                        },
                    ));
                }
            }
            trace.max_emitted_words = trace
                .max_emitted_words
                .max(round_bits.iter().copied().max().unwrap_or(0) / w);

            // Transmission: channels in ascending (sender, receiver) order so
            // inboxes come out sorted by sender id.
            let mut next_inbox: Vec<Vec<Envelope>> = vec![Vec::new(); n];
            for c in 0..channel_count {
                if queues[c].is_empty() {
                    continue;
                }
                let mut sent = 0u64;
                while let Some((_, env)) = queues[c].front() {
                    if sent + env.size_bits > capacity {
                        break;
                    }
                    let (_, env) = queues[c].pop_front().unwrap();
                    sent += env.size_bits;
                    delivered[c] += env.payload.len() as u64;
                    trace.total_messages += 1;
                    if trace.record_envelopes {
                        trace.envelopes.push(LoggedEnvelope {
                            round,
                            src: env.src,
                            dst: env.dst,
                            payload: env.payload.clone(),
                        });
                    }
                    next_inbox[channel_dst[c]].push(env);
                }
                queued_bits_total -= sent;
                let backlog: u64 = queues[c].iter().map(|(_, e)| e.size_bits).sum();
                let late: u64 = queues[c]
                    .iter()
                    .filter(|(r, _)| *r == round)
                    .map(|(_, e)| e.payload.len() as u64)
                    .sum();
                trace.overflow_words += late;
                trace.push_record(
                    round,
                    g.id_at(channel_src[c]),
                    g.id_at(channel_dst[c]),
                    sent,
                    backlog,
                );
            }
            trace.peak_backlog_bits = trace.peak_backlog_bits.max(queued_bits_total);
            inbox = next_inbox;

            let quiet = halted.iter().all(|&h| h)
                && queued_bits_total == 0
                && inbox.iter().all(Vec::is_empty);
            if quiet {
                break;
            }
            round += 1;
        }

        trace.rounds_used = halt_round.iter().copied().max().unwrap_or(0);
        for s in 0..n {
            trace.halt_rounds.insert(g.id_at(s), halt_round[s]);
        }
        trace.finish_channels(g, &channel_src, &channel_dst, &emitted, &delivered, &queues);
        let outputs = (0..n).map(|s| (g.id_at(s), states[s].output())).collect();
        Ok(RunOutcome { outputs, trace })
    }
}

/// Runs `P` on every node of `g`. See [`Simulator`] for the round semantics.
pub fn run<P: NodeProgram>(
    g: &Graph,
    inputs: impl FnMut(NodeId) -> P::Input,
    cfg: &BandwidthConfig,
    seed: u64,
    max_rounds: u64,
) -> Result<RunOutcome<P::Output>, EngineError> {
    Simulator::new(g, *cfg).seed(seed).max_rounds(max_rounds).run::<P>(inputs)
}

#[cfg(test)]
mod tests;

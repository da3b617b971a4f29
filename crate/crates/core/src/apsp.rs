//! Unweighted all-pairs shortest paths by concurrent BFS floods.
//!
//! The floods are scheduled along a DFS walk of a BFS tree: node `s` starts
//! its flood at step `2 t_s`, where `t_s` is its first-visit time in the walk.
//! With bandwidth for `X` floods per edge, the visit times are cut into `X`
//! consecutive blocks of length `L = ceil(2n/X)` that run side by side.
//!
//! A flood token is two words, `(origin, hops)`, and one logical step takes
//! two rounds, so `X` tokens per edge per step fit into `X` words per round.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use thiserror::Error;

use crate::engine::{
    bfs_tree, BandwidthConfig, CongestionMode, EngineError, Envelope, LinkReader, LinkWriter,
    NodeContext, NodeProgram, Outbox, RunTrace, Simulator, Step,
};
use crate::graph::{DistanceTable, Graph, GraphError, NodeId};

/// Constant in front of the setup cost (BFS tree and DFS times).
pub const SETUP_FACTOR: u64 = 4;
/// Additive slack in [`predicted_rounds_apsp`].
pub const SLACK_ROUNDS: u64 = 8;

#[derive(Debug, Error)]
pub enum ApspError {
    #[error("all-pairs shortest paths needs an unweighted graph")]
    Weighted,
    #[error("the flood schedule requires strict congestion mode")]
    NotStrict,
    #[error("node {node} could not keep its flood schedule")]
    ScheduleOverrun { node: NodeId },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// DFS visit times and the derived start steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DfsSchedule {
    pub root: NodeId,
    pub n: u64,
    pub words_per_round: u64,
    /// `L = ceil(2n / X)`.
    pub block_len: u64,
    pub visit_time: BTreeMap<NodeId, u64>,
}

impl DfsSchedule {
    /// Zero-based index of the block containing `t_v`.
    pub fn block(&self, v: NodeId) -> u64 {
        self.visit_time[&v] / self.block_len
    }

    /// Step at which `v` launches its flood: `2 (t_v - L b)`.
    pub fn start_step(&self, v: NodeId) -> u64 {
        start_step(self.visit_time[&v], self.block_len)
    }
}

fn start_step(t: u64, block_len: u64) -> u64 {
    2 * (t - block_len * (t / block_len))
}

/// `L = ceil(2n / X)`.
pub fn block_len(n: u64, words_per_round: u64) -> u64 {
    (2 * n).div_ceil(words_per_round).max(1)
}

/// Upper bound on the rounds used by [`run_apsp`]:
/// `4 D + 2 (2L + D) + 8`.
pub fn predicted_rounds_apsp(n: u64, diameter: u64, words_per_round: u64) -> u64 {
    let l = block_len(n, words_per_round);
    SETUP_FACTOR * diameter + 2 * (2 * l + diameter) + SLACK_ROUNDS
}

struct DfsTimes {
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    sizes: BTreeMap<NodeId, u64>,
    reader: LinkReader,
    writer: LinkWriter,
    sent_up: bool,
    sent_down: bool,
    visit: Option<(u64, u64)>,
}

impl NodeProgram for DfsTimes {
    type Input = (Option<NodeId>, Vec<NodeId>);
    type Output = (u64, u64);

    fn init(_ctx: &mut NodeContext<'_>, (parent, mut children): Self::Input) -> Self {
        children.sort_unstable();
        DfsTimes {
            parent,
            children,
            sizes: BTreeMap::new(),
            reader: LinkReader::new(),
            writer: LinkWriter::new(),
            sent_up: false,
            sent_down: false,
            visit: None,
        }
    }

    fn on_round(&mut self, ctx: &mut NodeContext<'_>, _round: u64, inbox: &[Envelope], out: &mut Outbox) -> Step {
        self.reader.absorb(inbox);
        for &c in &self.children {
            if !self.sizes.contains_key(&c) {
                if let Some(w) = self.reader.take(c, 1) {
                    self.sizes.insert(c, w[0]);
                }
            }
        }
        if let Some(p) = self.parent {
            if let Some(w) = self.reader.take(p, 2) {
                self.visit = Some((w[0], w[1]));
            }
        }
        if !self.sent_up && self.sizes.len() == self.children.len() {
            let size = 1 + self.sizes.values().sum::<u64>();
            match self.parent {
                Some(p) => self.writer.push(p, &[size]),
                None => self.visit = Some((0, size)),
            }
            self.sent_up = true;
        }
        if let (Some((t, n)), false) = (self.visit, self.sent_down) {
            // Child c is first visited after the subtrees of its earlier siblings.
            let mut before = 0;
            for &c in &self.children {
                self.writer.push(c, &[t + 2 * before + 1, n]);
                before += self.sizes[&c];
            }
            self.sent_down = true;
        }
        self.writer.flush(out, ctx.words_per_round());
        if self.sent_down && self.writer.is_idle() {
            Step::Halt
        } else {
            Step::Continue
        }
    }

    fn output(&self) -> (u64, u64) {
        self.visit.expect("every node receives its visit time")
    }
}

/// Builds a BFS tree from `root`, then computes DFS first-visit times with
/// children visited in ascending id order.
pub fn compute_dfs_times(
    g: &Graph,
    root: NodeId,
    cfg: &BandwidthConfig,
) -> Result<(DfsSchedule, RunTrace), ApspError> {
    let (tree, mut trace) = bfs_tree(g, root, cfg)?;
    let run = Simulator::new(g, *cfg)
        .run::<DfsTimes>(|v| (tree.parent_of(v), tree.children_of(v).to_vec()))?;
    trace.then("dfs-times", run.trace);
    let n = g.n() as u64;
    let x = cfg.words_per_round();
    let schedule = DfsSchedule {
        root,
        n,
        words_per_round: x,
        block_len: block_len(n, x),
        visit_time: run.outputs.into_iter().map(|(v, (t, _))| (v, t)).collect(),
    };
    Ok((schedule, trace))
}

struct Waves {
    n: u64,
    start_step: u64,
    launched: bool,
    dist: BTreeMap<NodeId, u32>,
    reader: LinkReader,
    writer: LinkWriter,
    overrun: bool,
}

impl NodeProgram for Waves {
    type Input = (u64, u64);
    type Output = (BTreeMap<NodeId, u32>, bool);

    fn init(ctx: &mut NodeContext<'_>, (n, start_step): Self::Input) -> Self {
        Waves {
            n,
            start_step,
            launched: false,
            dist: BTreeMap::from([(ctx.id(), 0)]),
            reader: LinkReader::new(),
            writer: LinkWriter::new(),
            overrun: false,
        }
    }

    fn on_round(&mut self, ctx: &mut NodeContext<'_>, round: u64, inbox: &[Envelope], out: &mut Outbox) -> Step {
        self.reader.absorb(inbox);
        if round.is_multiple_of(2) {
            // Last step's tokens must be gone before this step's are queued.
            if !self.writer.is_idle() {
                self.overrun = true;
            }
            let mut fresh: Vec<(u64, u64, Option<NodeId>)> = Vec::new();
            if round / 2 == self.start_step {
                fresh.push((u64::from(ctx.id().0), 0, None));
                self.launched = true;
            }
            for s in self.reader.senders() {
                while let Some(tok) = self.reader.take(s, 2) {
                    let origin = NodeId(tok[0] as u32);
                    if let Entry::Vacant(slot) = self.dist.entry(origin) {
                        let hops = tok[1] + 1;
                        slot.insert(hops as u32);
                        fresh.push((tok[0], hops, Some(s)));
                    }
                }
            }
            if fresh.len() as u64 > ctx.words_per_round() {
                self.overrun = true;
            }
            for (origin, hops, from) in fresh {
                for &v in ctx.neighbors() {
                    if Some(v) != from {
                        self.writer.push(v, &[origin, hops]);
                    }
                }
            }
        }
        self.writer.flush(out, ctx.words_per_round());
        let complete = self.dist.len() as u64 == self.n;
        if self.launched && complete && self.writer.is_idle() && self.reader.senders().is_empty() {
            Step::Halt
        } else {
            Step::Continue
        }
    }

    fn output(&self) -> Self::Output {
        (self.dist.clone(), self.overrun)
    }
}

/// Result of a distributed APSP run.
#[derive(Debug, Clone)]
pub struct ApspRun {
    pub table: DistanceTable,
    pub schedule: DfsSchedule,
    pub trace: RunTrace,
}

/// Every node learns its hop distance to every other node. The tree is rooted
/// at the smallest id.
pub fn run_apsp(g: &Graph, cfg: &BandwidthConfig, seed: u64) -> Result<ApspRun, ApspError> {
    if g.is_weighted() {
        return Err(ApspError::Weighted);
    }
    if cfg.mode != CongestionMode::Strict {
        return Err(ApspError::NotStrict);
    }
    let root = g.ids()[0];
    let (schedule, mut trace) = compute_dfs_times(g, root, cfg)?;
    let waves = Simulator::new(g, *cfg)
        .seed(seed)
        .run::<Waves>(|v| (schedule.n, schedule.start_step(v)))?;
    trace.then("bfs-waves", waves.trace);

    let mut table = DistanceTable::new(g.ids());
    for (v, (dist, overrun)) in waves.outputs {
        if overrun {
            return Err(ApspError::ScheduleOverrun { node: v });
        }
        for (origin, d) in dist {
            table.set(origin, v, Some(d));
        }
    }
    Ok(ApspRun { table, schedule, trace })
}

//! Library node programs shared by the algorithms: pipelined BFS flood, BFS
//! tree construction and convergecast.

use std::collections::{BTreeMap, BTreeSet};

use super::{
    BandwidthConfig, EngineError, Envelope, LinkWriter, NodeContext, NodeProgram, Outbox,
    RunTrace, Simulator, Step,
};
use crate::graph::{Graph, GraphError, NodeId};

/// What every node learned from a flood.
#[derive(Debug, Clone)]
pub struct FloodResult {
    pub trace: RunTrace,
    pub parent: BTreeMap<NodeId, Option<NodeId>>,
    pub depth: BTreeMap<NodeId, u32>,
    pub payload: BTreeMap<NodeId, Vec<u64>>,
}

pub(crate) struct Flood {
    payload_words: usize,
    received: Vec<u64>,
    parent: Option<NodeId>,
    depth: Option<u32>,
    writer: LinkWriter,
    is_root: bool,
}

pub(crate) struct FloodInput {
    pub is_root: bool,
    pub payload: Vec<u64>,
    pub payload_words: usize,
}

impl NodeProgram for Flood {
    type Input = FloodInput;
    type Output = (Option<NodeId>, Option<u32>, Vec<u64>);

    fn init(_ctx: &mut NodeContext<'_>, input: FloodInput) -> Self {
        Flood {
            payload_words: input.payload_words,
            received: if input.is_root { input.payload } else { Vec::new() },
            parent: None,
            depth: input.is_root.then_some(0),
            writer: LinkWriter::new(),
            is_root: input.is_root,
        }
    }

    fn on_round(&mut self, ctx: &mut NodeContext<'_>, round: u64, inbox: &[Envelope], out: &mut Outbox) -> Step {
        if self.is_root && round == 0 {
            let words = self.received.clone();
            self.writer.push_all(ctx.neighbors(), &words);
        }
        if self.depth.is_none() {
            if let Some(first) = inbox.first() {
                self.parent = Some(first.src);
                self.depth = Some(round as u32);
            }
        }
        if let Some(parent) = self.parent {
            for env in inbox.iter().filter(|e| e.src == parent) {
                self.received.extend_from_slice(&env.payload);
                let others: Vec<NodeId> = ctx.neighbors().iter().copied().filter(|&v| v != parent).collect();
                self.writer.push_all(&others, &env.payload);
            }
        }
        self.writer.flush(out, ctx.words_per_round());
        if self.received.len() >= self.payload_words && self.writer.is_idle() {
            Step::Halt
        } else {
            Step::Continue
        }
    }

    fn output(&self) -> Self::Output {
        (self.parent, self.depth, self.received.clone())
    }
}

/// Floods `payload` from `root`; every node records the lowest-id neighbor it
/// first heard from as its parent.
pub(crate) fn flood_payload(
    g: &Graph,
    root: NodeId,
    payload: Vec<u64>,
    cfg: &BandwidthConfig,
) -> Result<FloodResult, EngineError> {
    if !g.contains(root) {
        return Err(GraphError::UnknownNode(root).into());
    }
    if payload.is_empty() {
        return Err(EngineError::InvalidConfig("flood payload must be non-empty".into()));
    }
    let words = payload.len();
    let outcome = Simulator::new(g, *cfg).run::<Flood>(|id| FloodInput {
        is_root: id == root,
        payload: if id == root { payload.clone() } else { Vec::new() },
        payload_words: words,
    })?;
    let mut parent = BTreeMap::new();
    let mut depth = BTreeMap::new();
    let mut got = BTreeMap::new();
    for (id, (p, d, data)) in outcome.outputs {
        parent.insert(id, p);
        depth.insert(id, d.expect("connected graph: every node is reached"));
        got.insert(id, data);
    }
    Ok(FloodResult {
        trace: outcome.trace,
        parent,
        depth,
        payload: got,
    })
}

/// Pipelined BFS flood of `payload_words` words from `root`. The first word
/// is the root id, the rest are filler.
pub fn broadcast_flood(
    g: &Graph,
    root: NodeId,
    payload_words: usize,
    cfg: &BandwidthConfig,
) -> Result<FloodResult, EngineError> {
    let payload = std::iter::once(u64::from(root.0))
        .chain(1..payload_words as u64)
        .take(payload_words)
        .collect();
    flood_payload(g, root, payload, cfg)
}

/// A rooted BFS spanning tree as known locally by each node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BfsTree {
    pub root: NodeId,
    pub parent: BTreeMap<NodeId, Option<NodeId>>,
    pub children: BTreeMap<NodeId, Vec<NodeId>>,
    pub depth: BTreeMap<NodeId, u32>,
}

impl BfsTree {
    /// Depth of the deepest node (the root's eccentricity).
    pub fn height(&self) -> u32 {
        self.depth.values().copied().max().unwrap_or(0)
    }

    pub fn children_of(&self, v: NodeId) -> &[NodeId] {
        self.children.get(&v).map_or(&[], Vec::as_slice)
    }

    pub fn parent_of(&self, v: NodeId) -> Option<NodeId> {
        self.parent.get(&v).copied().flatten()
    }
}

struct ChildAck {
    parent: Option<NodeId>,
    children: Vec<NodeId>,
}

impl NodeProgram for ChildAck {
    type Input = Option<NodeId>;
    type Output = Vec<NodeId>;

    fn init(_ctx: &mut NodeContext<'_>, parent: Option<NodeId>) -> Self {
        ChildAck {
            parent,
            children: Vec::new(),
        }
    }

    fn on_round(&mut self, _ctx: &mut NodeContext<'_>, round: u64, inbox: &[Envelope], out: &mut Outbox) -> Step {
        if round == 0 {
            if let Some(p) = self.parent {
                out.send(p, vec![1]);
            }
        }
        self.children.extend(inbox.iter().map(|e| e.src));
        Step::Halt
    }

    fn output(&self) -> Vec<NodeId> {
        self.children.clone()
    }
}

/// BFS flood of the root id followed by one round in which every node tells
/// its parent that it is a child.
pub fn bfs_tree(g: &Graph, root: NodeId, cfg: &BandwidthConfig) -> Result<(BfsTree, RunTrace), EngineError> {
    let flood = broadcast_flood(g, root, 1, cfg)?;
    let acks = Simulator::new(g, *cfg).run::<ChildAck>(|id| flood.parent[&id])?;
    let mut trace = RunTrace::phase("bfs-flood", flood.trace);
    trace.then("child-ack", acks.trace);
    let tree = BfsTree {
        root,
        parent: flood.parent,
        children: acks.outputs,
        depth: flood.depth,
    };
    Ok((tree, trace))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergecastResult {
    pub root: NodeId,
    pub root_total: u64,
    pub subtree: BTreeMap<NodeId, u64>,
}

struct SubtreeSum {
    parent: Option<NodeId>,
    waiting: BTreeSet<NodeId>,
    acc: u64,
    sent: bool,
}

impl NodeProgram for SubtreeSum {
    type Input = (Option<NodeId>, Vec<NodeId>, u64);
    type Output = u64;

    fn init(_ctx: &mut NodeContext<'_>, (parent, children, value): Self::Input) -> Self {
        SubtreeSum {
            parent,
            waiting: children.into_iter().collect(),
            acc: value,
            sent: false,
        }
    }

    fn on_round(&mut self, _ctx: &mut NodeContext<'_>, _round: u64, inbox: &[Envelope], out: &mut Outbox) -> Step {
        for env in inbox {
            if self.waiting.remove(&env.src) {
                self.acc += env.payload[0];
            }
        }
        if self.waiting.is_empty() && !self.sent {
            if let Some(p) = self.parent {
                out.send(p, vec![self.acc]);
            }
            self.sent = true;
        }
        if self.sent {
            Step::Halt
        } else {
            Step::Continue
        }
    }

    fn output(&self) -> u64 {
        self.acc
    }
}

/// Checks that `parent` encodes a spanning tree of `g` along graph edges and
/// returns its root and children lists.
pub(crate) fn tree_children(
    g: &Graph,
    parent: &BTreeMap<NodeId, Option<NodeId>>,
) -> Result<(NodeId, BTreeMap<NodeId, Vec<NodeId>>), EngineError> {
    let mut root = None;
    let mut children: BTreeMap<NodeId, Vec<NodeId>> = g.ids().iter().map(|&v| (v, Vec::new())).collect();
    for &v in g.ids() {
        match parent.get(&v) {
            None => return Err(EngineError::NotATree(format!("node {v} has no parent entry"))),
            Some(None) => {
                if root.replace(v).is_some() {
                    return Err(EngineError::NotATree("more than one root".into()));
                }
            }
            Some(Some(p)) => {
                if !g.has_edge(v, *p) {
                    return Err(EngineError::NotATree(format!("{v}->{p} is not a graph edge")));
                }
                children.get_mut(p).expect("parent is a node").push(v);
            }
        }
    }
    if parent.len() != g.n() {
        return Err(EngineError::NotATree("parent map names unknown nodes".into()));
    }
    let root = root.ok_or_else(|| EngineError::NotATree("no root".into()))?;
    // Every node must reach the root.
    let mut seen = BTreeSet::from([root]);
    let mut stack = vec![root];
    while let Some(x) = stack.pop() {
        for &c in &children[&x] {
            if seen.insert(c) {
                stack.push(c);
            }
        }
    }
    if seen.len() != g.n() {
        return Err(EngineError::NotATree("parent pointers contain a cycle".into()));
    }
    Ok((root, children))
}

/// Every node learns the sum of `values` over its subtree; the root learns the total.
pub fn convergecast_sum(
    g: &Graph,
    parent: &BTreeMap<NodeId, Option<NodeId>>,
    values: &BTreeMap<NodeId, u64>,
    cfg: &BandwidthConfig,
) -> Result<(ConvergecastResult, RunTrace), EngineError> {
    let (root, children) = tree_children(g, parent)?;
    let outcome = Simulator::new(g, *cfg).run::<SubtreeSum>(|id| {
        (
            parent[&id],
            children[&id].clone(),
            values.get(&id).copied().unwrap_or(0),
        )
    })?;
    let result = ConvergecastResult {
        root,
        root_total: outcome.outputs[&root],
        subtree: outcome.outputs,
    };
    Ok((result, outcome.trace))
}

//! The Distance_k problem: find the node at overlay distance exactly `k`
//! from `u`, where the overlay is a directed graph over the communication
//! graph's nodes.
//!
//! The algorithm runs `k` flood iterations. In iteration `i` the node at
//! distance `i - 1` floods the id of its overlay successor, and the node that
//! reads its own id takes distance `i`. A last flood announces the answer.
//! Each flood gets a window of `D + 1` rounds, whatever the bandwidth, so the
//! round count does not depend on `B` at all.
//!
//! Also here: the reduction from two-party pointer chasing, whose two-star
//! topology routes all communication between the parties over one bridge.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{
    measure_bits, BandwidthConfig, CongestionMode, EngineError, Envelope, NodeContext, NodeProgram,
    Outbox, RunTrace, Simulator, Step,
};
use crate::graph::{DirectedOverlay, Edge, Graph, GraphError, NodeId};

#[derive(Debug, Error)]
pub enum DistkError {
    #[error("pointer instance: {0}")]
    BadInstance(String),
    #[error("overlay node {0} has more than one outgoing arc")]
    OutDegree(NodeId),
    #[error("the flood schedule requires strict congestion mode")]
    NotStrict,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Two-party pointer chasing. Indices are 1-based; `alice[i-1] = j` means
/// Alice's `i`-th pointer targets Bob's `j`-th, and vice versa for `bob`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointerInstance {
    pub p: u32,
    pub alice: Vec<u32>,
    pub bob: Vec<u32>,
    pub k: u32,
}

impl PointerInstance {
    pub fn new(alice: Vec<u32>, bob: Vec<u32>, k: u32) -> Result<Self, DistkError> {
        let p = alice.len() as u32;
        if p == 0 || bob.len() != alice.len() {
            return Err(DistkError::BadInstance(format!(
                "lists of length {} and {}",
                alice.len(),
                bob.len()
            )));
        }
        if let Some(bad) = alice.iter().chain(&bob).find(|&&x| x == 0 || x > p) {
            return Err(DistkError::BadInstance(format!("index {bad} outside 1..={p}")));
        }
        Ok(Self { p, alice, bob, k })
    }

    /// Node reached after `k` steps from Alice's first pointer, in the
    /// reduction's numbering. `None` when the chain comes back to a node it
    /// already visited, since then no node is at distance exactly `k`.
    pub fn follow(&self) -> Option<NodeId> {
        let mut cur = 1;
        let mut seen = BTreeSet::from([cur]);
        for _ in 0..self.k {
            cur = if cur <= self.p {
                self.p + self.alice[(cur - 1) as usize]
            } else {
                self.bob[(cur - self.p - 1) as usize]
            };
            if !seen.insert(cur) {
                return None;
            }
        }
        Some(NodeId(cur))
    }
}

/// Uniformly random pointers.
pub fn random_instance(p: u32, k: u32, seed: u64) -> PointerInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut side = || (0..p).map(|_| rng.gen_range(1..=p)).collect::<Vec<_>>();
    let alice = side();
    let bob = side();
    PointerInstance { p, alice, bob, k }
}

/// Two stars joined by the bridge `{l, r}`, with the pointer overlay.
#[derive(Debug, Clone)]
pub struct ReductionInstance {
    pub pointers: PointerInstance,
    pub graph: Graph,
    pub overlay: DirectedOverlay,
    pub l: NodeId,
    pub r: NodeId,
}

impl ReductionInstance {
    /// Alice's first pointer node, where the chain starts.
    pub fn start(&self) -> NodeId {
        NodeId(1)
    }
}

/// `L = {1..p}` hangs off `l = 2p+1`, `R = {p+1..2p}` off `r = 2p+2`.
pub fn build_reduction(pi: &PointerInstance) -> Result<ReductionInstance, DistkError> {
    let pi = PointerInstance::new(pi.alice.clone(), pi.bob.clone(), pi.k)?;
    let p = pi.p;
    let (l, r) = (NodeId(2 * p + 1), NodeId(2 * p + 2));
    let mut edges: Vec<Edge> = (1..=p)
        .flat_map(|i| [Edge::new(NodeId(i), l, None), Edge::new(NodeId(p + i), r, None)])
        .collect();
    edges.push(Edge::new(l, r, None));
    let graph = Graph::new((1..=2 * p + 2).map(NodeId), edges)?;
    let mut arcs: Vec<(NodeId, NodeId)> = Vec::new();
    for i in 1..=p {
        arcs.push((NodeId(i), NodeId(p + pi.alice[(i - 1) as usize])));
        arcs.push((NodeId(p + i), NodeId(pi.bob[(i - 1) as usize])));
    }
    arcs.push((l, r));
    arcs.push((r, l));
    let overlay = DirectedOverlay::new(&graph, arcs)?;
    Ok(ReductionInstance {
        pointers: pi,
        graph,
        overlay,
        l,
        r,
    })
}

/// An eight-node example with `Distance_2(1) = 7`: the overlay chain is
/// `1 -> 3 -> 7 -> 5 -> 4 -> 6 -> 8 -> 2 -> 1` over a ring-with-chords graph.
pub fn figure_instance() -> (Graph, DirectedOverlay) {
    let pairs = [(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8), (8, 1), (1, 5), (2, 6)];
    let g = Graph::new(
        (1..=8).map(NodeId),
        pairs.iter().map(|&(a, b)| Edge::new(NodeId(a), NodeId(b), None)),
    )
    .expect("valid graph");
    let chain = [1, 3, 7, 5, 4, 6, 8, 2, 1];
    let overlay = DirectedOverlay::new(&g, chain.windows(2).map(|w| (NodeId(w[0]), NodeId(w[1]))))
        .expect("valid overlay");
    (g, overlay)
}

struct FloodWalk {
    succ: Option<NodeId>,
    k: u64,
    window: u64,
    dist: Option<u64>,
    answer: Option<NodeId>,
    forwarded: Option<u64>,
    broadcast_at: Option<u64>,
}

impl NodeProgram for FloodWalk {
    type Input = (Option<NodeId>, bool, u64, u64);
    type Output = (Option<u64>, Option<NodeId>);

    fn init(ctx: &mut NodeContext<'_>, (succ, is_source, k, diameter): Self::Input) -> Self {
        let mut me = FloodWalk {
            succ,
            k,
            window: diameter + 1,
            dist: None,
            answer: None,
            forwarded: None,
            broadcast_at: None,
        };
        if is_source {
            me.dist = Some(0);
            if k == 0 {
                me.answer = Some(ctx.id());
            } else {
                me.broadcast_at = Some(0);
            }
        }
        me
    }

    fn on_round(&mut self, ctx: &mut NodeContext<'_>, round: u64, inbox: &[Envelope], out: &mut Outbox) -> Step {
        if let Some(env) = inbox.first() {
            let iter = (round - 1) / self.window;
            if self.forwarded != Some(iter) {
                self.forwarded = Some(iter);
                for &v in ctx.neighbors().iter().filter(|&&v| v != env.src) {
                    out.send(v, env.payload.clone());
                }
                let value = NodeId(env.payload[0] as u32);
                if iter == self.k {
                    self.answer = Some(value);
                } else if value == ctx.id() && self.dist.is_none() {
                    self.dist = Some(iter + 1);
                    self.broadcast_at = Some(iter + 1);
                }
            }
        }
        if let Some(iter) = self.broadcast_at {
            if round == iter * self.window {
                self.broadcast_at = None;
                self.forwarded = Some(iter);
                let word = if iter == self.k {
                    self.answer = Some(ctx.id());
                    Some(ctx.id())
                } else {
                    self.succ
                };
                if let Some(w) = word {
                    out.send_all(ctx.neighbors(), &[u64::from(w.0)]);
                }
            }
        }
        if self.broadcast_at.is_some() {
            Step::Continue
        } else {
            Step::Halt
        }
    }

    fn output(&self) -> Self::Output {
        (self.dist, self.answer)
    }
}

#[derive(Debug, Clone)]
pub struct DistkRun {
    /// What `u` (and every other node) learned; `None` if the chain is shorter than `k`.
    pub answer: Option<NodeId>,
    pub trace: RunTrace,
}

/// Runs the flood walk from `u` with a barrier of `D + 1` rounds per flood.
pub fn run_distance_k(
    g: &Graph,
    overlay: &DirectedOverlay,
    u: NodeId,
    k: u32,
    cfg: &BandwidthConfig,
) -> Result<DistkRun, DistkError> {
    if !g.contains(u) {
        return Err(GraphError::UnknownNode(u).into());
    }
    if cfg.mode != CongestionMode::Strict {
        return Err(DistkError::NotStrict);
    }
    if let Some(v) = g.ids().iter().find(|&&v| overlay.out_neighbors(v).nth(1).is_some()) {
        return Err(DistkError::OutDegree(*v));
    }
    let diameter = u64::from(g.diameter());
    let run = Simulator::new(g, *cfg)
        .run::<FloodWalk>(|v| (overlay.successor(v), v == u, u64::from(k), diameter))?;
    Ok(DistkRun {
        answer: run.outputs[&u].1,
        trace: run.trace,
    })
}

/// Bits that crossed the bridge `{l, r}` during `trace`.
pub fn bridge_bits(red: &ReductionInstance, trace: &RunTrace) -> u64 {
    measure_bits(trace, (red.l, red.r)).expect("bridge is an edge of the reduction graph")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepPoint {
    pub words_per_round: u64,
    pub rounds_used: u64,
    pub bridge_bits: u64,
    pub correct: bool,
}

/// Runs one random reduction instance at every bandwidth in `xs`.
pub fn insensitivity_sweep(p: u32, k: u32, xs: &[u64], seed: u64) -> Result<Vec<SweepPoint>, DistkError> {
    let red = build_reduction(&random_instance(p, k, seed))?;
    let expected = red.pointers.follow();
    xs.iter()
        .map(|&x| {
            let cfg = BandwidthConfig::from_words(red.graph.id_bits(), x, CongestionMode::Strict)?;
            let run = run_distance_k(&red.graph, &red.overlay, red.start(), k, &cfg)?;
            Ok(SweepPoint {
                words_per_round: x,
                rounds_used: run.trace.rounds_used,
                bridge_bits: bridge_bits(&red, &run.trace),
                correct: run.answer == expected,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strict(g: &Graph, x: u64) -> BandwidthConfig {
        BandwidthConfig::from_words(g.id_bits(), x, CongestionMode::Strict).unwrap()
    }

    #[test]
    fn figure_example() {
        let (g, ov) = figure_instance();
        let run = run_distance_k(&g, &ov, NodeId(1), 2, &strict(&g, 1)).unwrap();
        assert_eq!(run.answer, Some(NodeId(7)));
        assert_eq!(ov.node_at_distance(NodeId(1), 2), Some(NodeId(7)));
    }

    #[test]
    fn zero_steps_is_free() {
        let (g, ov) = figure_instance();
        let run = run_distance_k(&g, &ov, NodeId(4), 0, &strict(&g, 1)).unwrap();
        assert_eq!(run.answer, Some(NodeId(4)));
        assert_eq!(run.trace.rounds_used, 0);
    }

    #[test]
    fn small_reduction() {
        let pi = PointerInstance::new(vec![2, 1], vec![1, 2], 2).unwrap();
        let red = build_reduction(&pi).unwrap();
        let arcs: BTreeSet<(u32, u32)> = red.overlay.arcs().map(|(a, b)| (a.0, b.0)).collect();
        let expected = BTreeSet::from([(1, 4), (2, 3), (3, 1), (4, 2), (5, 6), (6, 5)]);
        assert_eq!(arcs, expected);
        assert_eq!(red.graph.diameter(), 3);
        assert_eq!(pi.follow(), Some(NodeId(2)));
        let run = run_distance_k(&red.graph, &red.overlay, NodeId(1), 2, &strict(&red.graph, 1)).unwrap();
        assert_eq!(run.answer, Some(NodeId(2)));
        assert!(run.trace.rounds_used <= 3 * 4);
    }

    #[test]
    fn smallest_reduction() {
        let pi = PointerInstance::new(vec![1], vec![1], 1).unwrap();
        let red = build_reduction(&pi).unwrap();
        assert_eq!(red.graph.n(), 4);
        assert_eq!(red.overlay.arc_count(), 4);
        assert!(PointerInstance::new(vec![3], vec![1], 1).is_err());
    }

    #[test]
    fn revisits_have_no_answer() {
        // 1 -> 3 -> 1: nothing is at distance exactly 2.
        let pi = PointerInstance::new(vec![1, 1], vec![1, 1], 2).unwrap();
        assert_eq!(pi.follow(), None);
        let red = build_reduction(&pi).unwrap();
        let run = run_distance_k(&red.graph, &red.overlay, NodeId(1), 2, &strict(&red.graph, 1)).unwrap();
        assert_eq!(run.answer, None);
    }

    #[test]
    fn bridge_meter() {
        let red = build_reduction(&random_instance(64, 8, 1)).unwrap();
        let w = u64::from(red.graph.id_bits());
        let run = run_distance_k(&red.graph, &red.overlay, NodeId(1), 0, &strict(&red.graph, 1)).unwrap();
        assert_eq!(bridge_bits(&red, &run.trace), 0);
        let a = run_distance_k(&red.graph, &red.overlay, NodeId(1), 8, &strict(&red.graph, 1)).unwrap();
        let b = run_distance_k(&red.graph, &red.overlay, NodeId(1), 8, &strict(&red.graph, 2)).unwrap();
        assert!(bridge_bits(&red, &a.trace) <= 4 * 8 * w);
        assert_eq!(bridge_bits(&red, &a.trace), bridge_bits(&red, &b.trace));
    }

    #[test]
    fn sweep_is_flat() {
        let pts = insensitivity_sweep(256, 8, &[1, 2, 4, 8], 3).unwrap();
        assert!(pts.iter().all(|p| p.correct));
        assert!(pts.windows(2).all(|w| w[0].rounds_used == w[1].rounds_used));
        let zero = insensitivity_sweep(16, 0, &[1, 2, 4], 3).unwrap();
        assert!(zero.iter().all(|p| p.rounds_used == 0));
    }
}

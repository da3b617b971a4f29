//! Building blocks for sublinear shortest paths: skeleton sampling,
//! emulation of one broadcast-congested-clique round over a BFS tree, and
//! bounded-hop multi-source shortest paths with random start delays.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{
    BandwidthConfig, BfsTree, EngineError, Envelope, LinkReader, LinkWriter, NodeContext,
    NodeProgram, Outbox, RunTrace, Simulator, Step,
};
use crate::graph::{Graph, GraphError, HopDistances, NodeId};

/// Words in one `(source, distance, hops)` message.
pub const DISTANCE_WORDS: u64 = 3;
const END: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum SsspError {
    #[error("invalid parameters: {0}")]
    BadParameters(String),
    #[error("bounded-hop shortest paths are implemented for unweighted graphs only")]
    Weighted,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// The sampled node subset standing in for an overlay network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonSet {
    pub source: NodeId,
    pub alpha: usize,
    pub nodes: BTreeSet<NodeId>,
}

impl SkeletonSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `s` plus `alpha - 1` other nodes drawn uniformly without replacement.
pub fn sample_skeleton(g: &Graph, s: NodeId, alpha: usize, seed: u64) -> Result<SkeletonSet, SsspError> {
    if !g.contains(s) {
        return Err(GraphError::UnknownNode(s).into());
    }
    if alpha == 0 || alpha > g.n() {
        return Err(SsspError::BadParameters(format!("alpha {alpha} outside 1..={}", g.n())));
    }
    let others: Vec<NodeId> = g.ids().iter().copied().filter(|&v| v != s).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes: BTreeSet<NodeId> = others.choose_multiple(&mut rng, alpha - 1).copied().collect();
    nodes.insert(s);
    Ok(SkeletonSet {
        source: s,
        alpha,
        nodes,
    })
}

/// `ceil(k (log2 n)^2 / B)`; requires `B >= log2 n`.
pub fn predicted_delay_interval(k: u64, n: u64, capacity_bits: u64) -> Result<u64, SsspError> {
    if k == 0 || n == 0 || capacity_bits == 0 {
        return Err(SsspError::BadParameters("arguments must be positive".into()));
    }
    let log_n = (n as f64).log2();
    if (capacity_bits as f64) < log_n {
        return Err(SsspError::BadParameters(format!(
            "B = {capacity_bits} is below log2 n = {log_n:.2}"
        )));
    }
    Ok((k as f64 * log_n * log_n / capacity_bits as f64).ceil() as u64)
}

struct Bcc {
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    reader: LinkReader,
    writer: LinkWriter,
    ended_children: BTreeSet<NodeId>,
    up_done: bool,
    down_done: bool,
    known: BTreeMap<NodeId, u64>,
}

impl Bcc {
    /// A pair is known here: send it up (unless root) and, at the root, down.
    fn learn(&mut self, id: u64, value: u64) {
        self.known.insert(NodeId(id as u32), value);
        match self.parent {
            Some(p) => self.writer.push(p, &[id, value]),
            None => self.writer.push_all(&self.children, &[id, value]),
        }
    }
}

impl NodeProgram for Bcc {
    type Input = (Option<NodeId>, Vec<NodeId>, Option<u64>);
    type Output = BTreeMap<NodeId, u64>;

    fn init(ctx: &mut NodeContext<'_>, (parent, children, own): Self::Input) -> Self {
        let mut me = Bcc {
            parent,
            children,
            reader: LinkReader::new(),
            writer: LinkWriter::new(),
            ended_children: BTreeSet::new(),
            up_done: false,
            down_done: false,
            known: BTreeMap::new(),
        };
        if let Some(v) = own {
            me.learn(u64::from(ctx.id().0), v);
        }
        me
    }

    fn on_round(&mut self, ctx: &mut NodeContext<'_>, _round: u64, inbox: &[Envelope], out: &mut Outbox) -> Step {
        self.reader.absorb(inbox);
        for c in self.children.clone() {
            while !self.ended_children.contains(&c) {
                if self.reader.peek(c) == Some(END) {
                    self.reader.take(c, 1);
                    self.ended_children.insert(c);
                } else if let Some(pair) = self.reader.take(c, 2) {
                    self.learn(pair[0], pair[1]);
                } else {
                    break;
                }
            }
        }
        if !self.up_done && self.ended_children.len() == self.children.len() {
            self.up_done = true;
            match self.parent {
                Some(p) => self.writer.push(p, &[END]),
                None => {
                    self.writer.push_all(&self.children, &[END]);
                    self.down_done = true;
                }
            }
        }
        if let Some(p) = self.parent {
            while !self.down_done {
                if self.reader.peek(p) == Some(END) {
                    self.reader.take(p, 1);
                    self.writer.push_all(&self.children, &[END]);
                    self.down_done = true;
                } else if let Some(pair) = self.reader.take(p, 2) {
                    self.known.insert(NodeId(pair[0] as u32), pair[1]);
                    self.writer.push_all(&self.children, &pair);
                } else {
                    break;
                }
            }
        }
        self.writer.flush(out, ctx.words_per_round());
        if self.up_done && self.down_done && self.writer.is_idle() {
            Step::Halt
        } else {
            Step::Continue
        }
    }

    fn output(&self) -> Self::Output {
        self.known.clone()
    }
}

/// What each node learned: skeleton node to value.
pub type KnownValues = BTreeMap<NodeId, BTreeMap<NodeId, u64>>;

/// Every node learns the one-word value of every skeleton node: pipelined
/// upcast of `(id, value)` pairs to the root, which streams them back down as
/// they arrive.
pub fn emulate_bcc_round(
    g: &Graph,
    tree: &BfsTree,
    skeleton: &SkeletonSet,
    values: &BTreeMap<NodeId, u64>,
    cfg: &BandwidthConfig,
) -> Result<(KnownValues, RunTrace), SsspError> {
    for v in &skeleton.nodes {
        if !values.contains_key(v) {
            return Err(SsspError::BadParameters(format!("no value for skeleton node {v}")));
        }
    }
    let run = Simulator::new(g, *cfg).run::<Bcc>(|v| {
        (
            tree.parent_of(v),
            tree.children_of(v).to_vec(),
            skeleton.nodes.contains(&v).then(|| values[&v]),
        )
    })?;
    Ok((run.outputs, run.trace))
}

struct Mssp {
    h: u64,
    delay: Option<u64>,
    dist: BTreeMap<NodeId, u64>,
    broadcasts: BTreeMap<NodeId, u32>,
}

impl Mssp {
    fn broadcast(&mut self, ctx: &NodeContext<'_>, s: NodeId, d: u64, out: &mut Outbox) {
        *self.broadcasts.entry(s).or_insert(0) += 1;
        for &v in ctx.neighbors() {
            out.send(v, vec![u64::from(s.0), d, d]);
        }
    }
}

impl NodeProgram for Mssp {
    type Input = (bool, u64, u32);
    type Output = (BTreeMap<NodeId, u64>, BTreeMap<NodeId, u32>);

    fn init(ctx: &mut NodeContext<'_>, (is_source, delta, h): Self::Input) -> Self {
        let mut dist = BTreeMap::new();
        let delay = is_source.then(|| {
            dist.insert(ctx.id(), 0);
            ctx.rng().gen_range(0..=delta)
        });
        Mssp {
            h: u64::from(h),
            delay,
            dist,
            broadcasts: BTreeMap::new(),
        }
    }

    fn on_round(&mut self, ctx: &mut NodeContext<'_>, round: u64, inbox: &[Envelope], out: &mut Outbox) -> Step {
        if self.delay == Some(round) && self.h > 0 {
            self.broadcast(ctx, ctx.id(), 0, out);
        }
        let mut better: BTreeMap<NodeId, u64> = BTreeMap::new();
        for env in inbox {
            let s = NodeId(env.payload[0] as u32);
            let nd = env.payload[1] + 1;
            if nd > self.h || self.dist.get(&s).is_some_and(|&d| d <= nd) {
                continue;
            }
            better.entry(s).and_modify(|d| *d = (*d).min(nd)).or_insert(nd);
        }
        for (s, d) in better {
            self.dist.insert(s, d);
            if d < self.h {
                self.broadcast(ctx, s, d, out);
            }
        }
        match self.delay {
            Some(r) if round < r => Step::Continue,
            _ => Step::Halt,
        }
    }

    fn output(&self) -> Self::Output {
        (self.dist.clone(), self.broadcasts.clone())
    }
}

/// Congestion observed during a bounded-hop run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CongestionReport {
    /// Most words emitted onto one channel in one round.
    pub max_edge_words: u64,
    /// Words that had to wait past the round they were emitted in.
    pub overflow_words: u64,
    /// Most broadcasts one node made for one source.
    pub max_improvements: u32,
}

#[derive(Debug, Clone)]
pub struct MsspRun {
    pub distances: HopDistances,
    pub delta: u64,
    pub trace: RunTrace,
    pub congestion: CongestionReport,
}

/// Bounded-hop multi-source shortest paths. Each skeleton node starts its
/// distance broadcast after a delay drawn uniformly from `0..=delta`; a node
/// rebroadcasts whenever its distance to a source improves and is below `h`.
/// Run in queue mode: excess messages wait instead of aborting.
pub fn bounded_hop_mssp(
    g: &Graph,
    skeleton: &SkeletonSet,
    h: u32,
    delta: u64,
    cfg: &BandwidthConfig,
    seed: u64,
) -> Result<MsspRun, SsspError> {
    if g.is_weighted() {
        return Err(SsspError::Weighted);
    }
    if h == 0 {
        return Err(SsspError::BadParameters("h must be at least 1".into()));
    }
    if cfg.words_per_round() < DISTANCE_WORDS {
        return Err(SsspError::BadParameters(format!(
            "a {DISTANCE_WORDS}-word message does not fit into X = {}",
            cfg.words_per_round()
        )));
    }
    let run = Simulator::new(g, *cfg)
        .seed(seed)
        .run::<Mssp>(|v| (skeleton.nodes.contains(&v), delta, h))?;
    let mut distances = HopDistances::new();
    let mut max_improvements = 0;
    for (v, (dist, counts)) in &run.outputs {
        for &s in &skeleton.nodes {
            distances.insert((s, *v), dist.get(&s).copied());
        }
        max_improvements = max_improvements.max(counts.values().copied().max().unwrap_or(0));
    }
    let congestion = CongestionReport {
        max_edge_words: run.trace.max_emitted_words,
        overflow_words: run.trace.overflow_words,
        max_improvements,
    };
    Ok(MsspRun {
        distances,
        delta,
        trace: run.trace,
        congestion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{bfs_tree, CongestionMode};
    use crate::graph::{bfs_distances, generate, hop_limited_distances, GraphKind};

    fn cfg(g: &Graph, x: u64, mode: CongestionMode) -> BandwidthConfig {
        BandwidthConfig::from_words(g.id_bits(), x, mode).unwrap()
    }

    #[test]
    fn skeleton_extremes_and_spread() {
        let g = generate(GraphKind::ErdosRenyi { n: 128, p: 0.1 }, 0, false).unwrap();
        let s = NodeId(5);
        assert_eq!(sample_skeleton(&g, s, 128, 1).unwrap().nodes.len(), 128);
        assert_eq!(sample_skeleton(&g, s, 1, 1).unwrap().nodes, BTreeSet::from([s]));
        let a = sample_skeleton(&g, s, 16, 1).unwrap();
        let b = sample_skeleton(&g, s, 16, 2).unwrap();
        assert_ne!(a, b);
        for seed in 0..100 {
            let k = sample_skeleton(&g, s, 16, seed).unwrap();
            assert!(k.nodes.contains(&s));
            assert!((8..=32).contains(&k.len()));
        }
        assert!(sample_skeleton(&g, s, 0, 0).is_err());
        assert!(sample_skeleton(&g, s, 129, 0).is_err());
    }

    #[test]
    fn delay_interval_formula() {
        assert_eq!(predicted_delay_interval(16, 256, 32).unwrap(), 32);
        assert_eq!(predicted_delay_interval(16, 256, 16 * 64).unwrap(), 1);
        assert_eq!(predicted_delay_interval(16, 256, 64).unwrap(), 16);
        assert!(predicted_delay_interval(16, 256, 7).is_err());
    }

    fn bcc(g: &Graph, alpha: usize, x: u64) -> (BTreeMap<NodeId, BTreeMap<NodeId, u64>>, RunTrace, SkeletonSet) {
        let c = cfg(g, x, CongestionMode::Strict);
        let (tree, _) = bfs_tree(g, g.ids()[0], &c).unwrap();
        let sk = sample_skeleton(g, g.ids()[0], alpha, 3).unwrap();
        let values = sk.nodes.iter().map(|&v| (v, u64::from(v.0) * 7 + 1)).collect();
        let (got, trace) = emulate_bcc_round(g, &tree, &sk, &values, &c).unwrap();
        (got, trace, sk)
    }

    #[test]
    fn bcc_on_star() {
        let g = generate(GraphKind::Star { n: 17 }, 0, false).unwrap();
        let (got, trace, sk) = bcc(&g, 16, 4);
        for m in got.values() {
            assert_eq!(m.keys().copied().collect::<BTreeSet<_>>(), sk.nodes);
        }
        assert!(trace.rounds_used <= 2 * 2 + 2 * 8);
        let (_, trace, _) = bcc(&g, 1, 4);
        assert!(trace.rounds_used <= 2 * 2 + 4);
    }

    #[test]
    fn bcc_on_path_speeds_up() {
        let g = generate(GraphKind::Path { n: 16 }, 0, false).unwrap();
        let runs: Vec<_> = [2, 4, 8].iter().map(|&x| bcc(&g, 8, x)).collect();
        assert_eq!(runs[0].0, runs[1].0);
        assert_eq!(runs[1].0, runs[2].0);
        // Latency along the path dominates; extra bandwidth never hurts.
        assert!(runs[0].1.rounds_used >= runs[1].1.rounds_used);
        assert!(runs[1].1.rounds_used >= runs[2].1.rounds_used);
    }

    #[test]
    fn single_source_is_truncated_bfs() {
        let g = generate(GraphKind::Grid { rows: 5, cols: 5 }, 0, false).unwrap();
        let sk = sample_skeleton(&g, NodeId(0), 1, 0).unwrap();
        let run = bounded_hop_mssp(&g, &sk, 4, 0, &cfg(&g, 3, CongestionMode::Queue), 0).unwrap();
        let bfs = bfs_distances(&g, NodeId(0)).unwrap();
        for (&v, &d) in &bfs {
            let expect = (d <= 4).then_some(u64::from(d));
            assert_eq!(run.distances[&(NodeId(0), v)], expect);
        }
    }

    #[test]
    fn grid_matches_oracle_for_all_seeds() {
        let g = generate(GraphKind::Grid { rows: 8, cols: 8 }, 0, false).unwrap();
        let c = cfg(&g, 3, CongestionMode::Queue);
        for seed in 0..20 {
            let sk = sample_skeleton(&g, NodeId(0), 8, seed).unwrap();
            let delta = predicted_delay_interval(8, 64, c.capacity_bits()).unwrap();
            let run = bounded_hop_mssp(&g, &sk, 6, delta, &c, seed).unwrap();
            assert_eq!(run.distances, hop_limited_distances(&g, &sk.nodes, 6).unwrap());
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = Graph::from_weighted(2, &[(0, 1, 2)]).unwrap();
        let sk = sample_skeleton(&g, NodeId(0), 1, 0).unwrap();
        let c = cfg(&g, 3, CongestionMode::Queue);
        assert!(matches!(bounded_hop_mssp(&g, &sk, 2, 0, &c, 0), Err(SsspError::Weighted)));
        let g = Graph::from_pairs(2, &[(0, 1)]).unwrap();
        assert!(bounded_hop_mssp(&g, &sk, 0, 0, &c, 0).is_err());
        assert!(bounded_hop_mssp(&g, &sk, 2, 0, &cfg(&g, 2, CongestionMode::Queue), 0).is_err());
    }
}

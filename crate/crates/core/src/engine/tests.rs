use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::graph::{generate, GraphKind};

fn cfg(g: &Graph, x: u64, mode: CongestionMode) -> BandwidthConfig {
    BandwidthConfig::from_words(g.id_bits(), x, mode).unwrap()
}

struct Idle;

impl NodeProgram for Idle {
    type Input = ();
    type Output = ();
    fn init(_: &mut NodeContext<'_>, _: ()) -> Self {
        Idle
    }
    fn on_round(&mut self, _: &mut NodeContext<'_>, _: u64, _: &[Envelope], _: &mut Outbox) -> Step {
        Step::Halt
    }
    fn output(&self) {}
}

/// Sends `words` one-word envelopes to every neighbor in each of the first
/// `rounds` rounds, and counts what it receives.
struct Chatter {
    rounds: u64,
    words: usize,
    heard: usize,
}

impl NodeProgram for Chatter {
    type Input = (u64, usize);
    type Output = usize;
    fn init(_: &mut NodeContext<'_>, (rounds, words): (u64, usize)) -> Self {
        Chatter { rounds, words, heard: 0 }
    }
    fn on_round(&mut self, ctx: &mut NodeContext<'_>, round: u64, inbox: &[Envelope], out: &mut Outbox) -> Step {
        self.heard += inbox.len();
        if round < self.rounds {
            for _ in 0..self.words {
                out.send_all(ctx.neighbors(), &[u64::from(ctx.id().0)]);
            }
        }
        if round + 1 >= self.rounds {
            Step::Halt
        } else {
            Step::Continue
        }
    }
    fn output(&self) -> usize {
        self.heard
    }
}

/// Star leaves send two one-word envelopes to the center at round 0; the
/// center records inbox sizes per round.
struct LeafBurst {
    log: Vec<(u64, usize)>,
}

impl NodeProgram for LeafBurst {
    type Input = ();
    type Output = Vec<(u64, usize)>;
    fn init(_: &mut NodeContext<'_>, _: ()) -> Self {
        LeafBurst { log: Vec::new() }
    }
    fn on_round(&mut self, ctx: &mut NodeContext<'_>, round: u64, inbox: &[Envelope], out: &mut Outbox) -> Step {
        if !inbox.is_empty() {
            self.log.push((round, inbox.len()));
        }
        if round == 0 && ctx.id() != NodeId(0) {
            out.send(NodeId(0), vec![1]);
            out.send(NodeId(0), vec![2]);
        }
        Step::Halt
    }
    fn output(&self) -> Vec<(u64, usize)> {
        self.log.clone()
    }
}

struct Stray;

impl NodeProgram for Stray {
    type Input = ();
    type Output = ();
    fn init(_: &mut NodeContext<'_>, _: ()) -> Self {
        Stray
    }
    fn on_round(&mut self, ctx: &mut NodeContext<'_>, _: u64, _: &[Envelope], out: &mut Outbox) -> Step {
        if ctx.id() == NodeId(0) {
            out.send(NodeId(2), vec![0]);
        }
        Step::Halt
    }
    fn output(&self) {}
}

struct Forever;

impl NodeProgram for Forever {
    type Input = ();
    type Output = ();
    fn init(_: &mut NodeContext<'_>, _: ()) -> Self {
        Forever
    }
    fn on_round(&mut self, _: &mut NodeContext<'_>, _: u64, _: &[Envelope], _: &mut Outbox) -> Step {
        Step::Continue
    }
    fn output(&self) {}
}

/// Random gossip driven by the node rng, for determinism checks.
struct Gossip {
    left: u32,
    sum: u64,
}

impl NodeProgram for Gossip {
    type Input = ();
    type Output = u64;
    fn init(ctx: &mut NodeContext<'_>, _: ()) -> Self {
        use rand::Rng;
        Gossip {
            left: ctx.rng().gen_range(1..6),
            sum: 0,
        }
    }
    fn on_round(&mut self, ctx: &mut NodeContext<'_>, _: u64, inbox: &[Envelope], out: &mut Outbox) -> Step {
        use rand::Rng;
        self.sum += inbox.iter().flat_map(|e| &e.payload).sum::<u64>();
        if self.left == 0 {
            return Step::Halt;
        }
        self.left -= 1;
        let nbrs = ctx.neighbors().to_vec();
        let to = nbrs[ctx.rng().gen_range(0..nbrs.len())];
        let x = ctx.words_per_round();
        let len = ctx.rng().gen_range(1..=x);
        let words = (0..len).map(|_| ctx.rng().gen_range(0..100)).collect();
        out.send(to, words);
        Step::Continue
    }
    fn output(&self) -> u64 {
        self.sum
    }
}

#[test]
fn immediate_halt_uses_no_rounds() {
    let g = Graph::from_pairs(2, &[(0, 1)]).unwrap();
    let out = Simulator::new(&g, cfg(&g, 1, CongestionMode::Strict)).run::<Idle>(|_| ()).unwrap();
    assert_eq!(out.trace.rounds_used, 0);
    assert!(out.trace.records.is_empty());
    assert_eq!(out.trace.total_messages, 0);
    assert_eq!(measure_bits(&out.trace, (NodeId(0), NodeId(1))).unwrap(), 0);
}

#[test]
fn path_chatter_is_exactly_at_capacity() {
    let g = Graph::from_pairs(3, &[(0, 1), (1, 2)]).unwrap();
    let c = cfg(&g, 1, CongestionMode::Strict);
    let w = u64::from(c.word_bits());
    let out = Simulator::new(&g, c).run::<Chatter>(|_| (3, 1)).unwrap();
    for r in &out.trace.records {
        assert!(r.round < 3);
        assert_eq!(r.bits, w);
        assert_eq!(r.backlog_bits, 0);
    }
    assert_eq!(out.trace.records.len(), 3 * 4);
    assert_eq!(out.trace.overflow_words, 0);
    assert_eq!(measure_bits(&out.trace, (NodeId(0), NodeId(1))).unwrap(), 6 * w);
    assert_eq!(measure_bits(&out.trace, (NodeId(2), NodeId(1))).unwrap(), 6 * w);
    assert_eq!(out.outputs[&NodeId(1)], 6);
}

#[test]
fn star_queue_drains_over_two_rounds() {
    let g = generate(GraphKind::Star { n: 5 }, 0, false).unwrap();
    let c = cfg(&g, 1, CongestionMode::Queue);
    let w = u64::from(c.word_bits());
    let out = Simulator::new(&g, c).run::<LeafBurst>(|_| ()).unwrap();
    assert_eq!(out.outputs[&NodeId(0)], vec![(1, 4), (2, 4)]);
    assert_eq!(out.trace.peak_backlog_bits, 4 * w);
    assert_eq!(out.trace.overflow_words, 4);
    assert!(out.trace.capacity_respected());
    assert_eq!(out.trace.rounds_used, 2);
}

#[test]
fn strict_mode_rejects_overflow() {
    let g = generate(GraphKind::Star { n: 5 }, 0, false).unwrap();
    let err = Simulator::new(&g, cfg(&g, 1, CongestionMode::Strict))
        .run::<LeafBurst>(|_| ())
        .unwrap_err();
    match err {
        EngineError::CongestionViolation {
            round, to, bits, capacity, ..
        } => {
            assert_eq!(round, 0);
            assert_eq!(to, NodeId(0));
            assert_eq!(bits, 2 * capacity);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn non_neighbor_send_is_a_topology_error() {
    let g = Graph::from_pairs(3, &[(0, 1), (1, 2)]).unwrap();
    let err = Simulator::new(&g, cfg(&g, 1, CongestionMode::Strict))
        .run::<Stray>(|_| ())
        .unwrap_err();
    assert!(matches!(err, EngineError::Topology { from: NodeId(0), to: NodeId(2), .. }));
}

#[test]
fn timeout_carries_partial_trace() {
    let g = Graph::from_pairs(2, &[(0, 1)]).unwrap();
    let err = run::<Forever>(&g, |_| (), &cfg(&g, 1, CongestionMode::Strict), 0, 7).unwrap_err();
    match err {
        EngineError::Timeout { max_rounds, trace } => {
            assert_eq!(max_rounds, 7);
            assert_eq!(trace.rounds_used, 6);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(
        run::<Idle>(&g, |_| (), &cfg(&g, 1, CongestionMode::Strict), 0, 0),
        Err(EngineError::InvalidConfig(_))
    ));
}

#[test]
fn config_validation() {
    assert!(BandwidthConfig::new(0, 8, CongestionMode::Strict).is_err());
    assert!(BandwidthConfig::new(8, 7, CongestionMode::Strict).is_err());
    let c = BandwidthConfig::new(7, 30, CongestionMode::Queue).unwrap();
    assert_eq!(c.words_per_round(), 4);
}

fn gossip_trace(g: &Graph, seed: u64, x: u64) -> (BTreeMap<NodeId, u64>, String) {
    let out = Simulator::new(g, cfg(g, x, CongestionMode::Queue))
        .seed(seed)
        .record_envelopes(true)
        .run::<Gossip>(|_| ())
        .unwrap();
    let mut csv = Vec::new();
    out.trace.write_csv(&mut csv).unwrap();
    (out.outputs, String::from_utf8(csv).unwrap() + &out.trace.summary_json())
}

#[test]
fn same_seed_same_trace() {
    let g = generate(GraphKind::ErdosRenyi { n: 30, p: 0.2 }, 3, false).unwrap();
    assert_eq!(gossip_trace(&g, 11, 2), gossip_trace(&g, 11, 2));
    assert_ne!(gossip_trace(&g, 11, 2).1, gossip_trace(&g, 12, 2).1);
}

#[test]
fn queue_conservation_per_direction() {
    let g = generate(GraphKind::Grid { rows: 4, cols: 5 }, 0, false).unwrap();
    for seed in 0..5 {
        let out = Simulator::new(&g, cfg(&g, 1, CongestionMode::Queue))
            .seed(seed)
            .run::<Gossip>(|_| ())
            .unwrap();
        for t in out.trace.channels.values() {
            assert_eq!(t.emitted_words, t.delivered_words + t.backlog_words);
            assert_eq!(t.backlog_words, 0);
        }
    }
}

#[test]
fn csv_schema() {
    let g = Graph::from_pairs(2, &[(0, 1)]).unwrap();
    let out = Simulator::new(&g, cfg(&g, 1, CongestionMode::Strict)).run::<Chatter>(|_| (1, 1)).unwrap();
    let mut csv = Vec::new();
    out.trace.write_csv(&mut csv).unwrap();
    assert_eq!(
        String::from_utf8(csv).unwrap(),
        "round,u,v,direction,bits,backlog_bits\n0,0,1,0,1,0\n0,0,1,1,1,0\n"
    );
    assert_eq!(
        out.trace.summary_json(),
        r#"{"rounds_used":1,"total_messages":2,"max_edge_bits":1,"max_backlog_bits":0}"#
    );
}

#[test]
fn flood_examples() {
    let path4 = generate(GraphKind::Path { n: 4 }, 0, false).unwrap();
    let f = broadcast_flood(&path4, NodeId(0), 1, &cfg(&path4, 1, CongestionMode::Strict)).unwrap();
    assert_eq!(f.trace.rounds_used, 3);
    assert_eq!(f.depth[&NodeId(3)], 3);
    assert_eq!(f.parent[&NodeId(2)], Some(NodeId(1)));

    let star = generate(GraphKind::Star { n: 5 }, 0, false).unwrap();
    let f = broadcast_flood(&star, NodeId(0), 1, &cfg(&star, 1, CongestionMode::Strict)).unwrap();
    assert_eq!(f.trace.rounds_used, 1);

    let f = broadcast_flood(&path4, NodeId(0), 4, &cfg(&path4, 2, CongestionMode::Strict)).unwrap();
    assert!(f.trace.rounds_used <= 3 + 2 + 1);
    for data in f.payload.values() {
        assert_eq!(data, &vec![0, 1, 2, 3]);
    }
}

#[test]
fn bfs_tree_matches_distances() {
    let g = generate(GraphKind::Grid { rows: 3, cols: 4 }, 0, false).unwrap();
    let (tree, trace) = bfs_tree(&g, NodeId(5), &cfg(&g, 1, CongestionMode::Strict)).unwrap();
    let dist = crate::graph::bfs_distances(&g, NodeId(5)).unwrap();
    assert_eq!(tree.depth, dist);
    assert!(trace.rounds_used <= u64::from(tree.height()) + 2);
    for (&v, &p) in &tree.parent {
        if let Some(p) = p {
            assert!(tree.children_of(p).contains(&v));
        }
    }
}

#[test]
fn convergecast_examples() {
    let g = generate(GraphKind::Path { n: 4 }, 0, false).unwrap();
    let parent: BTreeMap<_, _> = (0..4)
        .map(|i| (NodeId(i), i.checked_sub(1).map(NodeId)))
        .collect();
    let ones = (0..4).map(|i| (NodeId(i), 1)).collect();
    let c = cfg(&g, 1, CongestionMode::Strict);
    let (res, trace) = convergecast_sum(&g, &parent, &ones, &c).unwrap();
    assert_eq!(res.root_total, 4);
    assert_eq!(res.subtree[&NodeId(2)], 2);
    assert!(trace.rounds_used <= 3 + 1);

    let single = Graph::new(vec![NodeId(9)], vec![]).unwrap();
    let (res, _) = convergecast_sum(
        &single,
        &BTreeMap::from([(NodeId(9), None)]),
        &BTreeMap::from([(NodeId(9), 42)]),
        &cfg(&single, 1, CongestionMode::Strict),
    )
    .unwrap();
    assert_eq!(res.root_total, 42);

    let mut cyclic = parent.clone();
    cyclic.insert(NodeId(0), Some(NodeId(1)));
    cyclic.insert(NodeId(3), None);
    assert!(matches!(
        convergecast_sum(&g, &cyclic, &ones, &c),
        Err(EngineError::NotATree(_))
    ));
}

#[test]
fn convergecast_matches_central_recursion() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let n = 16u32;
    let mut pairs = Vec::new();
    let mut parent = BTreeMap::from([(NodeId(0), None)]);
    for v in 1..n {
        let p = rng.gen_range(0..v);
        pairs.push((p, v));
        parent.insert(NodeId(v), Some(NodeId(p)));
    }
    let g = Graph::from_pairs(n, &pairs).unwrap();
    let values: BTreeMap<_, _> = (0..n).map(|v| (NodeId(v), rng.gen_range(0..1000))).collect();

    fn central(v: u32, pairs: &[(u32, u32)], values: &BTreeMap<NodeId, u64>) -> u64 {
        values[&NodeId(v)]
            + pairs
                .iter()
                .filter(|&&(p, _)| p == v)
                .map(|&(_, c)| central(c, pairs, values))
                .sum::<u64>()
    }

    let (res, _) = convergecast_sum(&g, &parent, &values, &cfg(&g, 1, CongestionMode::Strict)).unwrap();
    for v in 0..n {
        assert_eq!(res.subtree[&NodeId(v)], central(v, &pairs, &values));
    }
}

fn kinds() -> impl Strategy<Value = GraphKind> {
    prop_oneof![
        (2u32..40).prop_map(|n| GraphKind::Path { n }),
        (2u32..40).prop_map(|n| GraphKind::Star { n }),
        (1u32..6, 1u32..6).prop_map(|(rows, cols)| GraphKind::Grid { rows, cols }),
        (5u32..40).prop_map(|n| GraphKind::ErdosRenyi { n, p: 0.3 }),
        (6u32..40, 0u32..10).prop_map(|(n, chords)| GraphKind::TreePlusChords { n, chords }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn flood_round_bound(kind in kinds(), seed in 0u64..1000, xi in 0usize..4, words in 1usize..12) {
        let x = [1u64, 2, 4, 8][xi];
        let g = generate(kind, seed, false).unwrap();
        prop_assume!(g.n() >= 2);
        let root = g.ids()[seed as usize % g.n()];
        let f = broadcast_flood(&g, root, words, &cfg(&g, x, CongestionMode::Strict)).unwrap();
        let bound = u64::from(g.diameter()) + (words as u64).div_ceil(x) + 1;
        prop_assert!(f.trace.rounds_used <= bound);
        prop_assert!(f.trace.capacity_respected());
        prop_assert!(f.payload.values().all(|p| p.len() == words));
    }
}

use std::collections::{BTreeSet, BinaryHeap};
use std::cmp::Reverse;

use proptest::prelude::*;

use congest_core::apsp::run_apsp;
use congest_core::distk::{build_reduction, run_distance_k, PointerInstance};
use congest_core::engine::{BandwidthConfig, CongestionMode};
use congest_core::graph::{apsp_oracle, generate, hop_limited_distances, Edge, Graph, GraphKind};
use congest_core::mst::run_mst;
use congest_core::sssp::{bounded_hop_mssp, predicted_delay_interval, sample_skeleton};

fn strict(g: &Graph, x: u64) -> BandwidthConfig {
    BandwidthConfig::from_words(g.id_bits(), x, CongestionMode::Strict).unwrap()
}

/// Lazy Prim from the smallest id.
fn prim(g: &Graph) -> BTreeSet<Edge> {
    let mut seen = BTreeSet::from([g.ids()[0]]);
    let mut heap = BinaryHeap::new();
    let push = |heap: &mut BinaryHeap<_>, u| {
        for &v in g.neighbors(u) {
            heap.push(Reverse((g.weight(u, v).unwrap(), u, v)));
        }
    };
    push(&mut heap, g.ids()[0]);
    let mut out = BTreeSet::new();
    while let Some(Reverse((w, u, v))) = heap.pop() {
        if seen.insert(v) {
            out.insert(Edge::new(u, v, Some(w)));
            push(&mut heap, v);
        }
    }
    out
}

fn kind(choice: u8, n: u32) -> GraphKind {
    match choice % 3 {
        0 => GraphKind::ErdosRenyi { n, p: 0.3 },
        1 => GraphKind::TreePlusChords { n, chords: n / 3 },
        _ => GraphKind::Grid { rows: 3, cols: n / 3 },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn apsp_matches_bfs(choice in 0u8..3, n in 9u32..40, seed in any::<u64>(), x in 1u64..6) {
        let g = generate(kind(choice, n), seed, false).unwrap();
        let run = run_apsp(&g, &strict(&g, x), seed).unwrap();
        prop_assert!(run.table.mismatches(&apsp_oracle(&g)).is_empty());
    }

    #[test]
    fn mst_matches_prim(choice in 0u8..3, n in 9u32..60, seed in any::<u64>(), x in 5u64..30) {
        let g = generate(kind(choice, n), seed, true).unwrap();
        let run = run_mst(&g, &strict(&g, x), seed).unwrap();
        prop_assert_eq!(run.edges(), prim(&g));
        for (v, edges) in &run.node_edges {
            prop_assert!(edges.iter().all(|e| e.touches(*v)));
        }
    }

    #[test]
    fn mssp_matches_bellman_ford(n in 16u32..64, seed in any::<u64>(), alpha in 1usize..6, h in 1u32..8, x in 3u64..10) {
        let g = generate(GraphKind::ErdosRenyi { n, p: 0.25 }, seed, false).unwrap();
        let cfg = strict(&g, x).with_mode(CongestionMode::Queue);
        let skeleton = sample_skeleton(&g, g.ids()[0], alpha, seed).unwrap();
        let delta = predicted_delay_interval(alpha as u64, u64::from(n), cfg.capacity_bits()).unwrap();
        let run = bounded_hop_mssp(&g, &skeleton, h, delta, &cfg, seed).unwrap();
        prop_assert_eq!(run.distances, hop_limited_distances(&g, &skeleton.nodes, h).unwrap());
    }

    #[test]
    fn distk_matches_pointer_chase(
        p in 1usize..12,
        raw in proptest::collection::vec(1u32..1000, 24),
        k in 0u32..24,
        x in 1u64..4,
    ) {
        let pick = |i: usize| raw[i] % p as u32 + 1;
        let alice = (0..p).map(pick).collect();
        let bob = (p..2 * p).map(pick).collect();
        let pi = PointerInstance::new(alice, bob, k).unwrap();
        let red = build_reduction(&pi).unwrap();
        let run = run_distance_k(&red.graph, &red.overlay, red.start(), k, &strict(&red.graph, x)).unwrap();
        prop_assert_eq!(run.answer, red.overlay.node_at_distance(red.start(), k));
        prop_assert_eq!(run.answer, pi.follow());
        prop_assert!(run.trace.rounds_used <= (u64::from(k) + 1) * 4);
    }
}

//! Centralized reference answers used to check the distributed algorithms.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{Edge, Graph, GraphError, NodeId};
use crate::unionfind::UnionFind;

/// All-pairs hop distances. `None` marks an unreachable pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DistanceTable {
    ids: Vec<NodeId>,
    rows: Vec<Vec<Option<u32>>>,
}

impl DistanceTable {
    /// An all-unreachable table over `ids` (diagonal zero).
    pub fn new(ids: &[NodeId]) -> Self {
        let mut ids = ids.to_vec();
        ids.sort_unstable();
        let n = ids.len();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| (i == j).then_some(0)).collect())
            .collect();
        Self { ids, rows }
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    fn index(&self, id: NodeId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    pub fn get(&self, source: NodeId, target: NodeId) -> Option<u32> {
        let (s, t) = (self.index(source)?, self.index(target)?);
        self.rows[s][t]
    }

    pub fn set(&mut self, source: NodeId, target: NodeId, d: Option<u32>) {
        let s = self.index(source).expect("source in table");
        let t = self.index(target).expect("target in table");
        self.rows[s][t] = d;
    }

    /// Pairs where the two tables disagree.
    pub fn mismatches(&self, other: &DistanceTable) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for &s in &self.ids {
            for &t in &self.ids {
                if self.get(s, t) != other.get(s, t) {
                    out.push((s, t));
                }
            }
        }
        out
    }
}

/// Exact hop distances from `source`.
pub fn bfs_distances(g: &Graph, source: NodeId) -> Result<BTreeMap<NodeId, u32>, GraphError> {
    let s = g.slot(source).ok_or(GraphError::UnknownNode(source))?;
    Ok(g
        .bfs_slots(s)
        .into_iter()
        .enumerate()
        .map(|(i, d)| (g.id_at(i), d))
        .collect())
}

pub fn eccentricity(g: &Graph, source: NodeId) -> Result<u32, GraphError> {
    Ok(bfs_distances(g, source)?.into_values().max().unwrap_or(0))
}

pub fn apsp_oracle(g: &Graph) -> DistanceTable {
    let mut table = DistanceTable::new(g.ids());
    for &s in g.ids() {
        let row = bfs_distances(g, s).expect("id from graph");
        for (t, d) in row {
            table.set(s, t, Some(d));
        }
    }
    table
}

/// Kruskal. Requires pairwise-distinct weights so the answer is unique.
pub fn mst_oracle(g: &Graph) -> Result<BTreeSet<Edge>, GraphError> {
    if !g.is_weighted() {
        return Err(GraphError::Unweighted);
    }
    if !g.has_distinct_weights() && g.m() > 1 {
        return Err(GraphError::DuplicateWeights);
    }
    let mut edges: Vec<Edge> = g.edges().to_vec();
    edges.sort_by_key(|e| e.weight);
    let mut uf = UnionFind::new(g.n());
    let mut out = BTreeSet::new();
    for e in edges {
        let (a, b) = (g.slot(e.u).unwrap(), g.slot(e.v).unwrap());
        if uf.union(a, b) {
            out.insert(e);
        }
    }
    Ok(out)
}

/// `(source, node) -> d_h(source, node)`; `None` when no path of at most `h`
/// edges exists.
pub type HopDistances = BTreeMap<(NodeId, NodeId), Option<u64>>;

/// h-iteration Bellman-Ford from every source. Unweighted graphs use unit
/// lengths.
pub fn hop_limited_distances(
    g: &Graph,
    sources: &BTreeSet<NodeId>,
    h: u32,
) -> Result<HopDistances, GraphError> {
    let mut out = BTreeMap::new();
    for &s in sources {
        let ss = g.slot(s).ok_or(GraphError::UnknownNode(s))?;
        let mut dist: Vec<Option<u64>> = vec![None; g.n()];
        dist[ss] = Some(0);
        for _ in 0..h {
            let mut next = dist.clone();
            for e in g.edges() {
                let w = e.weight.unwrap_or(1);
                let (a, b) = (g.slot(e.u).unwrap(), g.slot(e.v).unwrap());
                for (x, y) in [(a, b), (b, a)] {
                    if let Some(dx) = dist[x] {
                        if next[y].is_none_or(|dy| dx + w < dy) {
                            next[y] = Some(dx + w);
                        }
                    }
                }
            }
            if next == dist {
                break;
            }
            dist = next;
        }
        for (i, d) in dist.into_iter().enumerate() {
            out.insert((s, g.id_at(i)), d);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphKind};

    fn floyd_warshall(g: &Graph) -> Vec<Vec<u32>> {
        let n = g.n();
        let inf = u32::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0;
        }
        for e in g.edges() {
            let (a, b) = (g.slot(e.u).unwrap(), g.slot(e.v).unwrap());
            d[a][b] = 1;
            d[b][a] = 1;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d
    }

    #[test]
    fn bfs_on_path_and_star() {
        let p = generate(GraphKind::Path { n: 4 }, 0, false).unwrap();
        let d = bfs_distances(&p, NodeId(0)).unwrap();
        assert_eq!(d.values().copied().collect::<Vec<_>>(), vec![0, 1, 2, 3]);

        let s = generate(GraphKind::Star { n: 5 }, 0, false).unwrap();
        let d = bfs_distances(&s, NodeId(1)).unwrap();
        assert_eq!(d[&NodeId(0)], 1);
        assert_eq!(d[&NodeId(1)], 0);
        assert!([2, 3, 4].iter().all(|&i| d[&NodeId(i)] == 2));
        assert_eq!(
            bfs_distances(&s, NodeId(9)),
            Err(GraphError::UnknownNode(NodeId(9)))
        );
    }

    #[test]
    fn bfs_matches_floyd_warshall() {
        let g = generate(GraphKind::ErdosRenyi { n: 32, p: 0.3 }, 3, false).unwrap();
        let fw = floyd_warshall(&g);
        let d = bfs_distances(&g, NodeId(0)).unwrap();
        for (i, &want) in fw[0].iter().enumerate() {
            assert_eq!(d[&NodeId(i as u32)], want);
        }
    }

    #[test]
    fn apsp_oracle_basics() {
        let p = generate(GraphKind::Path { n: 3 }, 0, false).unwrap();
        assert_eq!(apsp_oracle(&p).get(NodeId(0), NodeId(2)), Some(2));
        let grid = generate(GraphKind::Grid { rows: 4, cols: 4 }, 0, false).unwrap();
        let t = apsp_oracle(&grid);
        assert_eq!(t.get(NodeId(0), NodeId(15)), Some(6));
        assert!(grid.ids().iter().all(|&v| t.get(v, v) == Some(0)));
    }

    #[test]
    fn mst_oracle_small_cases() {
        let tri = Graph::from_weighted(3, &[(0, 1, 1), (1, 2, 2), (0, 2, 3)]).unwrap();
        let ws: BTreeSet<u64> = mst_oracle(&tri).unwrap().iter().map(|e| e.weight.unwrap()).collect();
        assert_eq!(ws, BTreeSet::from([1, 2]));

        let path = generate(GraphKind::Path { n: 5 }, 3, true).unwrap();
        assert_eq!(mst_oracle(&path).unwrap().len(), 4);

        let dup = Graph::from_weighted(3, &[(0, 1, 5), (1, 2, 5), (0, 2, 3)]).unwrap();
        assert_eq!(mst_oracle(&dup), Err(GraphError::DuplicateWeights));
        assert_eq!(
            mst_oracle(&generate(GraphKind::Path { n: 3 }, 0, false).unwrap()),
            Err(GraphError::Unweighted)
        );
    }

    #[test]
    fn hop_limited_basics() {
        let p = generate(GraphKind::Path { n: 4 }, 0, false).unwrap();
        let src = BTreeSet::from([NodeId(0)]);
        let d1 = hop_limited_distances(&p, &src, 1).unwrap();
        assert_eq!(d1[&(NodeId(0), NodeId(2))], None);
        let d3 = hop_limited_distances(&p, &src, 3).unwrap();
        assert_eq!(d3[&(NodeId(0), NodeId(3))], Some(3));
    }
}

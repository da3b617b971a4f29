use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::{BufRead, Write};

use super::{Graph, GraphError, NodeId};

/// Directed graph over the node set of a communication graph. Each node only
/// knows its own outgoing arcs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DirectedOverlay {
    arcs: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl DirectedOverlay {
    pub fn new(base: &Graph, arcs: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self, GraphError> {
        let mut out: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        for (a, b) in arcs {
            if !base.contains(a) || !base.contains(b) {
                return Err(GraphError::UnknownArcEndpoint(a, b));
            }
            out.entry(a).or_default().insert(b);
        }
        Ok(Self { arcs: out })
    }

    pub fn out_neighbors(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.arcs.get(&v).into_iter().flatten().copied()
    }

    /// The single out-neighbor, for overlays of out-degree at most one.
    pub fn successor(&self, v: NodeId) -> Option<NodeId> {
        self.arcs.get(&v).and_then(|s| s.iter().next().copied())
    }

    pub fn max_out_degree(&self) -> usize {
        self.arcs.values().map(BTreeSet::len).max().unwrap_or(0)
    }

    pub fn arcs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.arcs
            .iter()
            .flat_map(|(&a, set)| set.iter().map(move |&b| (a, b)))
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.values().map(BTreeSet::len).sum()
    }

    /// Directed BFS distances from `u`; nodes absent from the map are unreachable.
    pub fn distances_from(&self, u: NodeId) -> BTreeMap<NodeId, u32> {
        let mut dist = BTreeMap::from([(u, 0)]);
        let mut queue = VecDeque::from([u]);
        while let Some(x) = queue.pop_front() {
            let dx = dist[&x];
            for y in self.out_neighbors(x) {
                dist.entry(y).or_insert_with(|| {
                    queue.push_back(y);
                    dx + 1
                });
            }
        }
        dist
    }

    /// The node at directed distance exactly `k` from `u`, if it is unique.
    pub fn node_at_distance(&self, u: NodeId, k: u32) -> Option<NodeId> {
        let mut hits = self
            .distances_from(u)
            .into_iter()
            .filter(|&(_, d)| d == k)
            .map(|(v, _)| v);
        let first = hits.next();
        if hits.next().is_some() {
            return None;
        }
        first
    }

    /// Reads `n a` followed by `a` lines `u v` (arc u -> v).
    pub fn read_text(base: &Graph, reader: impl BufRead) -> Result<Self, GraphError> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or(GraphError::Parse {
            line: 1,
            msg: "missing header".into(),
        })??;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| GraphError::Parse {
                line: 1,
                msg: format!("bad header {header:?}"),
            })?;
        let [n, a] = nums[..] else {
            return Err(GraphError::Parse {
                line: 1,
                msg: "expected `n a`".into(),
            });
        };
        if n != base.n() {
            return Err(GraphError::Parse {
                line: 1,
                msg: format!("overlay has {n} nodes, base graph {}", base.n()),
            });
        }
        let mut arcs = Vec::with_capacity(a);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<u32> = line
                .split_whitespace()
                .map(|t| t.parse())
                .collect::<Result<_, _>>()
                .map_err(|_| GraphError::Parse {
                    line: i + 2,
                    msg: "not an integer".into(),
                })?;
            let [u, v] = parts[..] else {
                return Err(GraphError::Parse {
                    line: i + 2,
                    msg: "expected `u v`".into(),
                });
            };
            arcs.push((NodeId(u), NodeId(v)));
        }
        if arcs.len() != a {
            return Err(GraphError::Parse {
                line: 1,
                msg: format!("header announces {a} arcs, found {}", arcs.len()),
            });
        }
        DirectedOverlay::new(base, arcs)
    }

    pub fn write_text(&self, n: usize, mut out: impl Write) -> Result<(), GraphError> {
        writeln!(out, "{} {}", n, self.arc_count())?;
        for (a, b) in self.arcs() {
            writeln!(out, "{a} {b}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances_and_text_round_trip() {
        let g = Graph::from_pairs(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let ov = DirectedOverlay::new(
            &g,
            [(NodeId(0), NodeId(3)), (NodeId(3), NodeId(1)), (NodeId(1), NodeId(0))],
        )
        .unwrap();
        assert_eq!(ov.node_at_distance(NodeId(0), 2), Some(NodeId(1)));
        assert_eq!(ov.node_at_distance(NodeId(0), 3), None);
        assert_eq!(ov.max_out_degree(), 1);

        let mut buf = Vec::new();
        ov.write_text(g.n(), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "4 3\n0 3\n1 0\n3 1\n");
        assert_eq!(DirectedOverlay::read_text(&g, buf.as_slice()).unwrap(), ov);
    }

    #[test]
    fn rejects_foreign_endpoints() {
        let g = Graph::from_pairs(2, &[(0, 1)]).unwrap();
        assert!(DirectedOverlay::new(&g, [(NodeId(0), NodeId(7))]).is_err());
    }
}

//! Communication graphs, directed overlays and the text formats they are
//! exchanged in.
//!
//! A [`Graph`] is always connected and simple. Nodes are addressed by their
//! [`NodeId`]; internally every node also has a dense *slot* (its rank in the
//! sorted id list) which the engine and the oracles use for indexing.

mod generate;
mod oracle;
mod overlay;

pub use generate::{generate, GraphKind};
pub use oracle::{
    apsp_oracle, bfs_distances, eccentricity, hop_limited_distances, mst_oracle, DistanceTable,
    HopDistances,
};
pub use overlay::DirectedOverlay;

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identity of a node, unique within one graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

/// An undirected edge, stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub weight: Option<u64>,
}

impl Edge {
    pub fn new(a: NodeId, b: NodeId, weight: Option<u64>) -> Self {
        let (u, v) = if a <= b { (a, b) } else { (b, a) };
        Edge { u, v, weight }
    }

    pub fn endpoints(&self) -> (NodeId, NodeId) {
        (self.u, self.v)
    }

    pub fn touches(&self, x: NodeId) -> bool {
        self.u == x || self.v == x
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("self-loop at node {0}")]
    SelfLoop(NodeId),
    #[error("parallel edge {0}-{1}")]
    ParallelEdge(NodeId, NodeId),
    #[error("edge {0}-{1} references an unknown node")]
    UnknownEndpoint(NodeId, NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("edge {0}-{1} has a non-positive weight")]
    BadWeight(NodeId, NodeId),
    #[error("either every edge carries a weight or none does")]
    MixedWeights,
    #[error("graph is not connected")]
    Disconnected,
    #[error("graph has no nodes")]
    Empty,
    #[error("edge weights are not pairwise distinct")]
    DuplicateWeights,
    #[error("graph is unweighted")]
    Unweighted,
    #[error("invalid generator parameters: {0}")]
    BadParameters(String),
    #[error("no connected instance after {retries} retries")]
    RetriesExhausted { retries: u32 },
    #[error("overlay arc {0}->{1} references an unknown node")]
    UnknownArcEndpoint(NodeId, NodeId),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for GraphError {
    fn from(e: std::io::Error) -> Self {
        GraphError::Io(e.to_string())
    }
}

/// Connected simple undirected graph, optionally weighted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    ids: Vec<NodeId>,
    slot_of: HashMap<NodeId, usize>,
    adj: Vec<Vec<usize>>,
    nbr_ids: Vec<Vec<NodeId>>,
    edges: Vec<Edge>,
    weight_of: HashMap<(NodeId, NodeId), u64>,
    weighted: bool,
}

impl Graph {
    /// Builds a graph, rejecting anything that is not connected and simple.
    pub fn new(
        ids: impl IntoIterator<Item = NodeId>,
        edges: impl IntoIterator<Item = Edge>,
    ) -> Result<Self, GraphError> {
        let mut ids: Vec<NodeId> = ids.into_iter().collect();
        ids.sort_unstable();
        if ids.is_empty() {
            return Err(GraphError::Empty);
        }
        for w in ids.windows(2) {
            if w[0] == w[1] {
                return Err(GraphError::DuplicateNode(w[0]));
            }
        }
        let slot_of: HashMap<NodeId, usize> =
            ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();

        let mut edges: Vec<Edge> = edges.into_iter().collect();
        edges.sort_unstable();
        let weighted = edges.first().is_some_and(|e| e.weight.is_some());
        let mut seen = BTreeSet::new();
        let mut adj = vec![Vec::new(); ids.len()];
        let mut weight_of = HashMap::new();
        for e in &edges {
            if e.u == e.v {
                return Err(GraphError::SelfLoop(e.u));
            }
            if e.weight.is_some() != weighted {
                return Err(GraphError::MixedWeights);
            }
            if e.weight == Some(0) {
                return Err(GraphError::BadWeight(e.u, e.v));
            }
            let (Some(&su), Some(&sv)) = (slot_of.get(&e.u), slot_of.get(&e.v)) else {
                return Err(GraphError::UnknownEndpoint(e.u, e.v));
            };
            if !seen.insert((e.u, e.v)) {
                return Err(GraphError::ParallelEdge(e.u, e.v));
            }
            adj[su].push(sv);
            adj[sv].push(su);
            if let Some(w) = e.weight {
                weight_of.insert((e.u, e.v), w);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let nbr_ids = adj
            .iter()
            .map(|l| l.iter().map(|&s| ids[s]).collect())
            .collect();
        let g = Graph {
            ids,
            slot_of,
            adj,
            nbr_ids,
            edges,
            weight_of,
            weighted,
        };
        if !g.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    /// Convenience constructor for nodes `0..n` and plain `(u, v)` pairs.
    pub fn from_pairs(n: u32, pairs: &[(u32, u32)]) -> Result<Self, GraphError> {
        Graph::new(
            (0..n).map(NodeId),
            pairs
                .iter()
                .map(|&(a, b)| Edge::new(NodeId(a), NodeId(b), None)),
        )
    }

    /// Convenience constructor for nodes `0..n` and weighted `(u, v, w)` triples.
    pub fn from_weighted(n: u32, triples: &[(u32, u32, u64)]) -> Result<Self, GraphError> {
        Graph::new(
            (0..n).map(NodeId),
            triples
                .iter()
                .map(|&(a, b, w)| Edge::new(NodeId(a), NodeId(b), Some(w))),
        )
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Node ids in ascending order.
    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    /// Edges sorted lexicographically by `(u, v)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.slot_of.contains_key(&id)
    }

    pub fn slot(&self, id: NodeId) -> Option<usize> {
        self.slot_of.get(&id).copied()
    }

    pub fn id_at(&self, slot: usize) -> NodeId {
        self.ids[slot]
    }

    /// Neighbor ids in ascending order.
    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        match self.slot(id) {
            Some(s) => &self.nbr_ids[s],
            None => &[],
        }
    }

    pub fn neighbor_slots(&self, slot: usize) -> &[usize] {
        &self.adj[slot]
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.neighbors(id).len()
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        match (self.slot(a), self.slot(b)) {
            (Some(sa), Some(sb)) => self.adj[sa].binary_search(&sb).is_ok(),
            _ => false,
        }
    }

    pub fn weight(&self, a: NodeId, b: NodeId) -> Option<u64> {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.weight_of.get(&key).copied()
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn has_distinct_weights(&self) -> bool {
        if !self.weighted {
            return false;
        }
        let mut ws: Vec<u64> = self.edges.iter().filter_map(|e| e.weight).collect();
        ws.sort_unstable();
        ws.windows(2).all(|w| w[0] != w[1])
    }

    pub fn max_id(&self) -> NodeId {
        *self.ids.last().expect("graph is non-empty")
    }

    /// Bits needed to write any node id: `ceil(log2(maxId + 1))`, at least 1.
    pub fn id_bits(&self) -> u32 {
        bits_for(u64::from(self.max_id().0))
    }

    /// Hop diameter.
    pub fn diameter(&self) -> u32 {
        (0..self.n())
            .map(|s| self.bfs_slots(s).into_iter().max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// Hop distances from `source` by slot.
    pub(crate) fn bfs_slots(&self, source: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.n()];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(x) = queue.pop_front() {
            for &y in &self.adj[x] {
                if dist[y] == u32::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    fn is_connected(&self) -> bool {
        self.bfs_slots(0).iter().all(|&d| d != u32::MAX)
    }

    /// Reads the `n m [weighted]` text format. Node ids are `0..n`.
    pub fn read_text(reader: impl BufRead) -> Result<Self, GraphError> {
        let mut lines = reader.lines().enumerate();
        let (_, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let header = header?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let bad_header = || GraphError::Parse {
            line: 1,
            msg: format!("bad header {header:?}"),
        };
        if fields.len() < 2 || fields.len() > 3 {
            return Err(bad_header());
        }
        let n: u32 = fields[0].parse().map_err(|_| bad_header())?;
        let m: usize = fields[1].parse().map_err(|_| bad_header())?;
        let weighted = match fields.get(2) {
            None => false,
            Some(&"weighted") => true,
            Some(_) => return Err(bad_header()),
        };
        let mut edges = Vec::with_capacity(m);
        for (idx, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: &str| GraphError::Parse {
                line: idx + 1,
                msg: msg.to_string(),
            };
            let parts: Vec<u64> = line
                .split_whitespace()
                .map(|t| t.parse::<u64>().map_err(|_| err("not an integer")))
                .collect::<Result<_, _>>()?;
            let expected = if weighted { 3 } else { 2 };
            if parts.len() != expected {
                return Err(err("wrong field count"));
            }
            let u = u32::try_from(parts[0]).map_err(|_| err("id too large"))?;
            let v = u32::try_from(parts[1]).map_err(|_| err("id too large"))?;
            if u >= v {
                return Err(err("edges must be written with u < v"));
            }
            edges.push(Edge::new(NodeId(u), NodeId(v), weighted.then(|| parts[2])));
        }
        if edges.len() != m {
            return Err(GraphError::Parse {
                line: 1,
                msg: format!("header announces {m} edges, found {}", edges.len()),
            });
        }
        Graph::new((0..n).map(NodeId), edges)
    }

    /// Writes the text format; edges come out sorted so the bytes are stable.
    pub fn write_text(&self, mut out: impl Write) -> Result<(), GraphError> {
        if self.ids.iter().enumerate().any(|(i, id)| id.0 as usize != i) {
            return Err(GraphError::BadParameters(
                "text format requires node ids 0..n".into(),
            ));
        }
        if self.weighted {
            writeln!(out, "{} {} weighted", self.n(), self.m())?;
        } else {
            writeln!(out, "{} {}", self.n(), self.m())?;
        }
        for e in &self.edges {
            match e.weight {
                Some(w) => writeln!(out, "{} {} {}", e.u, e.v, w)?,
                None => writeln!(out, "{} {}", e.u, e.v)?,
            }
        }
        Ok(())
    }
}

/// `ceil(log2(max_value + 1))`, at least 1.
pub fn bits_for(max_value: u64) -> u32 {
    (64 - max_value.leading_zeros()).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_self_loops_parallel_edges_and_disconnection() {
        assert_eq!(
            Graph::from_pairs(2, &[(0, 0), (0, 1)]),
            Err(GraphError::SelfLoop(NodeId(0)))
        );
        assert_eq!(
            Graph::from_pairs(2, &[(0, 1), (1, 0)]),
            Err(GraphError::ParallelEdge(NodeId(0), NodeId(1)))
        );
        assert_eq!(
            Graph::from_pairs(3, &[(0, 1)]),
            Err(GraphError::Disconnected)
        );
        assert!(Graph::from_pairs(1, &[]).is_ok());
    }

    #[test]
    fn id_bits_matches_log2() {
        assert_eq!(bits_for(0), 1);
        assert_eq!(bits_for(1), 1);
        assert_eq!(bits_for(255), 8);
        assert_eq!(bits_for(256), 9);
        let g = Graph::from_pairs(64, &(1..64).map(|i| (0, i)).collect::<Vec<_>>()).unwrap();
        assert_eq!(g.id_bits(), 6);
    }

    #[test]
    fn text_format_is_sorted_and_reparses() {
        let g = Graph::from_weighted(4, &[(2, 3, 9), (0, 1, 4), (1, 2, 7)]).unwrap();
        let mut buf = Vec::new();
        g.write_text(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "4 3 weighted\n0 1 4\n1 2 7\n2 3 9\n"
        );
        let back = Graph::read_text(buf.as_slice()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn text_format_rejects_bad_input() {
        assert!(Graph::read_text("3 2\n1 0\n1 2\n".as_bytes()).is_err());
        assert!(Graph::read_text("3 3\n0 1\n1 2\n".as_bytes()).is_err());
        assert!(Graph::read_text("2 1 weighted\n0 1\n".as_bytes()).is_err());
    }
}

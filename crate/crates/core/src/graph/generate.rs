//! Seeded instance generators. Every generator emits node ids `0..n`.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Edge, Graph, GraphError, NodeId};

const MAX_RETRIES: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphKind {
    ErdosRenyi { n: u32, p: f64 },
    Path { n: u32 },
    Star { n: u32 },
    Grid { rows: u32, cols: u32 },
    TreePlusChords { n: u32, chords: u32 },
}

impl GraphKind {
    pub fn n(&self) -> u32 {
        match *self {
            GraphKind::ErdosRenyi { n, .. }
            | GraphKind::Path { n }
            | GraphKind::Star { n }
            | GraphKind::TreePlusChords { n, .. } => n,
            GraphKind::Grid { rows, cols } => rows * cols,
        }
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GraphKind::ErdosRenyi { n, p } => write!(f, "erdos-renyi({n},{p})"),
            GraphKind::Path { n } => write!(f, "path({n})"),
            GraphKind::Star { n } => write!(f, "star({n})"),
            GraphKind::Grid { rows, cols } => write!(f, "grid({rows},{cols})"),
            GraphKind::TreePlusChords { n, chords } => write!(f, "tree-plus-chords({n},{chords})"),
        }
    }
}

impl FromStr for GraphKind {
    type Err = GraphError;

    /// Parses the same `name(args)` form that `Display` writes.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GraphError::BadParameters(format!("cannot parse graph kind {s:?}"));
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let name = &s[..open];
        let args: Vec<&str> = s[open + 1..s.len() - 1].split(',').map(str::trim).collect();
        let int = |i: usize| -> Result<u32, GraphError> {
            args.get(i).and_then(|a| a.parse().ok()).ok_or_else(bad)
        };
        match (name, args.len()) {
            ("erdos-renyi", 2) => Ok(GraphKind::ErdosRenyi {
                n: int(0)?,
                p: args[1].parse().map_err(|_| bad())?,
            }),
            ("path", 1) => Ok(GraphKind::Path { n: int(0)? }),
            ("star", 1) => Ok(GraphKind::Star { n: int(0)? }),
            ("grid", 2) => Ok(GraphKind::Grid {
                rows: int(0)?,
                cols: int(1)?,
            }),
            ("tree-plus-chords", 2) => Ok(GraphKind::TreePlusChords {
                n: int(0)?,
                chords: int(1)?,
            }),
            _ => Err(bad()),
        }
    }
}

/// Generates a connected simple graph. The same `(kind, seed, weighted)`
/// always yields the same graph. Weighted graphs get pairwise-distinct
/// integer weights in `[1, n^3]`.
pub fn generate(kind: GraphKind, seed: u64, weighted: bool) -> Result<Graph, GraphError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = kind.n();
    if n == 0 {
        return Err(GraphError::BadParameters("n must be positive".into()));
    }
    let pairs: Vec<(u32, u32)> = match kind {
        GraphKind::Path { n } => (1..n).map(|i| (i - 1, i)).collect(),
        GraphKind::Star { n } => (1..n).map(|i| (0, i)).collect(),
        GraphKind::Grid { rows, cols } => {
            if rows == 0 || cols == 0 {
                return Err(GraphError::BadParameters("grid sides must be positive".into()));
            }
            let mut out = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    let id = r * cols + c;
                    if c + 1 < cols {
                        out.push((id, id + 1));
                    }
                    if r + 1 < rows {
                        out.push((id, id + cols));
                    }
                }
            }
            out
        }
        GraphKind::TreePlusChords { n, chords } => {
            let mut set = BTreeSet::new();
            for i in 1..n {
                let parent = rng.gen_range(0..i);
                set.insert((parent, i));
            }
            let max_extra = (n as u64 * (n as u64 - 1) / 2).saturating_sub(n as u64 - 1);
            if u64::from(chords) > max_extra {
                return Err(GraphError::BadParameters(format!(
                    "{chords} chords do not fit in a {n}-node simple graph"
                )));
            }
            let mut added = 0;
            while added < chords {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                if a != b && set.insert((a.min(b), a.max(b))) {
                    added += 1;
                }
            }
            set.into_iter().collect()
        }
        GraphKind::ErdosRenyi { n, p } => {
            if !(p > 0.0 && p <= 1.0) {
                return Err(GraphError::BadParameters(format!("p = {p} not in (0, 1]")));
            }
            let mut found = None;
            for _ in 0..MAX_RETRIES {
                let mut out = Vec::new();
                for u in 0..n {
                    for v in u + 1..n {
                        if rng.gen_bool(p) {
                            out.push((u, v));
                        }
                    }
                }
                if Graph::from_pairs(n, &out).is_ok() {
                    found = Some(out);
                    break;
                }
            }
            found.ok_or(GraphError::RetriesExhausted {
                retries: MAX_RETRIES,
            })?
        }
    };

    let weights: Vec<Option<u64>> = if weighted {
        distinct_weights(&mut rng, pairs.len(), u64::from(n).pow(3))
            .into_iter()
            .map(Some)
            .collect()
    } else {
        vec![None; pairs.len()]
    };
    Graph::new(
        (0..n).map(NodeId),
        pairs
            .iter()
            .zip(weights)
            .map(|(&(a, b), w)| Edge::new(NodeId(a), NodeId(b), w)),
    )
}

fn distinct_weights(rng: &mut ChaCha8Rng, count: usize, max: u64) -> Vec<u64> {
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let w = rng.gen_range(1..=max);
        if seen.insert(w) {
            out.push(w);
        }
    }
    out
}

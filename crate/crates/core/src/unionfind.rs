//! Disjoint-set forest with path compression and union by size.

use std::collections::HashMap;
use std::hash::Hash;

/// Union-find over dense indices `0..len`.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        Self {
            parent: (0..len).collect(),
            size: vec![1; len],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; returns `false` if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }
}

/// Union-find keyed by arbitrary labels, allocating slots on first sight.
///
/// Nodes in the MST pipeline only ever see the fragment ids that appear on
/// candidate edges, so the label space is sparse.
#[derive(Debug, Clone, Default)]
pub struct KeyedUnionFind<K> {
    slots: HashMap<K, usize>,
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl<K: Hash + Eq + Copy> KeyedUnionFind<K> {
    pub fn new() -> Self {
        Self {
            slots: HashMap::new(),
            parent: Vec::new(),
            size: Vec::new(),
        }
    }

    fn slot(&mut self, key: K) -> usize {
        if let Some(&s) = self.slots.get(&key) {
            return s;
        }
        let s = self.parent.len();
        self.parent.push(s);
        self.size.push(1);
        self.slots.insert(key, s);
        s
    }

    fn find_slot(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    pub fn same(&mut self, a: K, b: K) -> bool {
        if a == b {
            return true;
        }
        match (self.slots.get(&a).copied(), self.slots.get(&b).copied()) {
            (Some(sa), Some(sb)) => self.find_slot(sa) == self.find_slot(sb),
            _ => false,
        }
    }

    pub fn union(&mut self, a: K, b: K) -> bool {
        let sa = self.slot(a);
        let sb = self.slot(b);
        let (mut ra, mut rb) = (self.find_slot(sa), self.find_slot(sb));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn union_and_find() {
        let mut uf = UnionFind::new(5);
        assert!(uf.union(0, 1));
        assert!(uf.union(3, 4));
        assert!(!uf.union(1, 0));
        assert!(uf.same(0, 1));
        assert!(!uf.same(1, 3));
        assert!(uf.union(1, 4));
        assert!(uf.same(0, 3));
    }

    #[test]
    fn keyed_union_find_sparse_labels() {
        let mut uf = KeyedUnionFind::new();
        assert!(!uf.same(10u32, 900));
        assert!(uf.union(10u32, 900));
        assert!(uf.same(900, 10));
        assert!(uf.union(900, 5));
        assert!(!uf.union(5, 10));
        assert!(uf.same(7, 7));
    }
}

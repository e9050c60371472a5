//! Compressed adjacency storage and the edge-list / id-map text formats.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Immutable graph in CSR form. Neighbor lists are sorted and duplicate-free.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    m: usize,
    undirected: bool,
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

/// Dense internal ids `0..n` back to the ids used in the input file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdMap {
    original: Vec<u64>,
    index: HashMap<u64, u32>,
}

impl IdMap {
    pub fn len(&self) -> usize {
        self.original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original.is_empty()
    }

    pub fn identity(n: usize) -> Self {
        let mut map = IdMap::default();
        for i in 0..n as u64 {
            map.intern(i);
        }
        map
    }

    fn intern(&mut self, id: u64) -> u32 {
        if let Some(&i) = self.index.get(&id) {
            return i;
        }
        let i = self.original.len() as u32;
        self.original.push(id);
        self.index.insert(id, i);
        i
    }

    pub fn original(&self, internal: usize) -> u64 {
        self.original[internal]
    }

    pub fn internal(&self, original: u64) -> Option<usize> {
        self.index.get(&original).map(|&i| i as usize)
    }

    /// Sidecar format: one `original_id internal_id` line per node.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, id) in self.original.iter().enumerate() {
            writeln!(out, "{id} {i}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let orig = parse_id(it.next(), lineno + 1)?;
            let internal = parse_id(it.next(), lineno + 1)? as usize;
            pairs.push((internal, orig));
        }
        pairs.sort_unstable();
        let mut map = IdMap::default();
        for (expect, (internal, orig)) in pairs.into_iter().enumerate() {
            if internal != expect {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("id map is not dense: missing internal id {expect}"),
                });
            }
            map.intern(orig);
        }
        Ok(map)
    }
}

fn parse_id(tok: Option<&str>, line: usize) -> Result<u64> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        message: "expected two node ids".into(),
    })?;
    tok.parse::<u64>().map_err(|_| Error::Parse {
        line,
        message: format!("invalid node id {tok:?}"),
    })
}

/// Reads a whitespace-separated edge list. Lines starting with `#` are
/// skipped, ids are remapped to `0..n` in order of first appearance, duplicate
/// edges are collapsed and self-loops are kept as a single arc.
pub fn load_edgelist<R: BufRead>(input: R, undirected: bool) -> Result<(Graph, IdMap)> {
    let mut ids = IdMap::default();
    let mut arcs = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut it = trimmed.split_whitespace();
        let u = parse_id(it.next(), lineno + 1)?;
        let v = parse_id(it.next(), lineno + 1)?;
        if let Some(extra) = it.next() {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("unexpected trailing token {extra:?}"),
            });
        }
        let u = ids.intern(u);
        let v = ids.intern(v);
        arcs.push((u, v));
    }
    if arcs.is_empty() {
        return Err(Error::EmptyInput("edge list contains no edges"));
    }
    let graph = Graph::from_edges(ids.len(), &arcs, undirected)?;
    Ok((graph, ids))
}

impl Graph {
    /// Builds a graph over nodes `0..n`. Nodes without arcs are allowed.
    pub fn from_edges(n: usize, edges: &[(u32, u32)], undirected: bool) -> Result<Self> {
        let mut adj: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
        for &(u, v) in edges {
            for w in [u, v] {
                if w as usize >= n {
                    return Err(Error::NodeOutOfRange { node: w as usize, n });
                }
            }
            adj[u as usize].insert(v);
            if undirected {
                adj[v as usize].insert(u);
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for set in &adj {
            targets.extend(set.iter().copied());
            offsets.push(targets.len());
        }
        let m = if undirected {
            let loops = (0..n).filter(|&u| adj[u].contains(&(u as u32))).count();
            (targets.len() - loops) / 2 + loops
        } else {
            targets.len()
        };
        Ok(Graph {
            n,
            m,
            undirected,
            offsets,
            targets,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edge count; an undirected edge counts once.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_undirected(&self) -> bool {
        self.undirected
    }

    pub fn arc_count(&self) -> usize {
        self.targets.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn targets(&self) -> &[u32] {
        &self.targets
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|v| self.degree(v)).collect()
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    pub fn average_degree(&self) -> f64 {
        self.targets.len() as f64 / self.n as f64
    }

    /// Row `v` of `P = D⁻¹A` as `(neighbor, probability)` pairs; empty for a
    /// node without out-arcs.
    pub fn transition_row(&self, v: usize) -> Result<Vec<(u32, f64)>> {
        if v >= self.n {
            return Err(Error::NodeOutOfRange { node: v, n: self.n });
        }
        let nbrs = self.neighbors(v);
        let p = 1.0 / nbrs.len() as f64;
        Ok(nbrs.iter().map(|&t| (t, p)).collect())
    }

    /// Writes the graph as an edge list that [`load_edgelist`] maps back to the
    /// same internal ids: for every node, in id order, an arc that introduces
    /// it is emitted first, then all remaining arcs. Ids are written through
    /// `ids` when given.
    ///
    /// Fails if some node has no incident arc, since an edge list cannot
    /// express it.
    pub fn write_edgelist<W: Write>(&self, ids: Option<&IdMap>, mut out: W) -> Result<()> {
        let name = |v: usize| ids.map_or(v as u64, |m| m.original(v));
        let mut incoming: Vec<Vec<u32>> = vec![Vec::new(); self.n];
        for u in 0..self.n {
            for &v in self.neighbors(u) {
                incoming[v as usize].push(u as u32);
            }
        }
        let mut seen = 0usize;
        for k in 0..self.n {
            if k < seen {
                continue;
            }
            // An arc between k and an already introduced node (or a self-loop).
            let back = self
                .neighbors(k)
                .iter()
                .map(|&t| (k, t as usize))
                .chain(incoming[k].iter().map(|&s| (s as usize, k)))
                .find(|&(a, b)| a.min(b) <= k && a.max(b) == k);
            if let Some((a, b)) = back {
                writeln!(out, "{} {}", name(a), name(b))?;
                seen = k + 1;
                continue;
            }
            // Otherwise k can share a line with the next new node.
            if self.has_arc(k, k + 1) {
                writeln!(out, "{} {}", name(k), name(k + 1))?;
                seen = k + 2;
                continue;
            }
            return Err(Error::invalid(format!(
                "node {k} cannot be introduced in first-seen order by an edge list"
            )));
        }
        for u in 0..self.n {
            for &v in self.neighbors(u) {
                let v = v as usize;
                if self.undirected && v < u {
                    continue;
                }
                writeln!(out, "{} {}", name(u), name(v))?;
            }
        }
        Ok(())
    }
}

//! Canonical undirected graph storage and SNAP edge-list ingestion.
//!
//! Vertices are dense `u32` indices. External labels (unsigned integers, as
//! found in SNAP files) live in a [`LabelMap`] next to the topology so that
//! the algorithms only ever see array indices.

use std::collections::HashMap;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Dense vertex index, `0..n`.
pub type VertexId = u32;

/// External vertex label as it appears in an edge-list file.
pub type Label = u64;

/// Largest label accepted from an edge list (labels are `< 2^63`).
pub const MAX_LABEL: Label = i64::MAX as u64;

/// Undirected simple graph over dense vertex ids.
///
/// Invariants: no self-loops, no parallel edges, symmetric adjacency and
/// strictly increasing neighbor lists.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<VertexId>>,
    m: usize,
}

impl Graph {
    pub fn with_vertices(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            m: 0,
        }
    }

    /// Builds a canonical graph on `n` vertices from arbitrary id pairs.
    /// Self-loops are dropped and duplicates (in either orientation) merged.
    ///
    /// Panics if an endpoint is `>= n`.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (VertexId, VertexId)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            if u == v {
                continue;
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        let mut m = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            m += list.len();
        }
        Graph { adj, m: m / 2 }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adj[v as usize]
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v as usize].len()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        (v as usize) < self.adj.len()
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.contains(u) && self.adj[u as usize].binary_search(&v).is_ok()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        0..self.adj.len() as VertexId
    }

    /// Every edge once, as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, list)| {
            let u = u as VertexId;
            let start = list.partition_point(|&v| v <= u);
            list[start..].iter().map(move |&v| (u, v))
        })
    }

    pub(crate) fn push_vertex(&mut self) -> VertexId {
        self.adj.push(Vec::new());
        (self.adj.len() - 1) as VertexId
    }

    /// Inserts `{u, v}` if absent. Returns whether the edge was new.
    pub(crate) fn insert_edge(&mut self, u: VertexId, v: VertexId) -> bool {
        if u == v {
            return false;
        }
        match self.adj[u as usize].binary_search(&v) {
            Ok(_) => false,
            Err(pos) => {
                self.adj[u as usize].insert(pos, v);
                let list = &mut self.adj[v as usize];
                let pos = list.partition_point(|&w| w < u);
                list.insert(pos, u);
                self.m += 1;
                true
            }
        }
    }

    /// Checks the structural invariants. Used by tests and debug assertions.
    pub fn check_invariants(&self) -> Result<()> {
        let mut half_edges = 0;
        for (u, list) in self.adj.iter().enumerate() {
            let u = u as VertexId;
            for w in list.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::contract(format!(
                        "neighbor list of {u} is not strictly sorted"
                    )));
                }
            }
            for &v in list {
                if v == u {
                    return Err(Error::contract(format!("self-loop at {u}")));
                }
                if !self.contains(v) || self.adj[v as usize].binary_search(&u).is_err() {
                    return Err(Error::contract(format!("edge {u}-{v} is not symmetric")));
                }
            }
            half_edges += list.len();
        }
        if half_edges != 2 * self.m {
            return Err(Error::contract("edge count out of sync with adjacency"));
        }
        Ok(())
    }
}

/// Bijection between external labels and dense vertex ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelMap {
    labels: Vec<Label>,
    index: HashMap<Label, VertexId>,
}

impl LabelMap {
    /// Assigns ids in the order the labels are given. Duplicates are ignored.
    pub fn from_labels(labels: impl IntoIterator<Item = Label>) -> Self {
        let mut map = LabelMap::default();
        for label in labels {
            if !map.index.contains_key(&label) {
                map.push(label);
            }
        }
        map
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, v: VertexId) -> Label {
        self.labels[v as usize]
    }

    pub fn id(&self, label: Label) -> Option<VertexId> {
        self.index.get(&label).copied()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub(crate) fn push(&mut self, label: Label) -> VertexId {
        let id = self.labels.len() as VertexId;
        self.labels.push(label);
        self.index.insert(label, id);
        id
    }
}

/// A graph together with its external labels.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabeledGraph {
    pub graph: Graph,
    pub labels: LabelMap,
}

impl LabeledGraph {
    /// Edges as label pairs, smaller id first.
    pub fn edge_labels(&self) -> Vec<(Label, Label)> {
        self.graph
            .edges()
            .map(|(u, v)| (self.labels.label(u), self.labels.label(v)))
            .collect()
    }
}

/// Collects labelled vertices and edges, then emits a canonical graph.
///
/// Vertex ids follow ascending label order, so any permutation or
/// re-orientation of the same input produces an identical graph.
#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    vertices: Vec<Label>,
    edges: Vec<(Label, Label)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a vertex even if it ends up with no edges.
    pub fn add_vertex(&mut self, label: Label) -> &mut Self {
        self.vertices.push(label);
        self
    }

    /// Adds an edge. Self-loops are discarded and do not create vertices.
    pub fn add_edge(&mut self, a: Label, b: Label) -> &mut Self {
        if a != b {
            self.edges.push((a, b));
        }
        self
    }

    pub fn build(self) -> LabeledGraph {
        let mut labels: Vec<Label> = self
            .vertices
            .iter()
            .copied()
            .chain(self.edges.iter().flat_map(|&(a, b)| [a, b]))
            .collect();
        labels.sort_unstable();
        labels.dedup();
        let labels = LabelMap::from_labels(labels);
        let graph = Graph::from_edges(
            labels.len(),
            self.edges
                .iter()
                .map(|&(a, b)| (labels.index[&a], labels.index[&b])),
        );
        LabeledGraph { graph, labels }
    }
}

/// Canonical graph from raw label pairs.
pub fn canonicalize(edges: &[(Label, Label)]) -> LabeledGraph {
    let mut builder = GraphBuilder::new();
    for &(a, b) in edges {
        builder.add_edge(a, b);
    }
    builder.build()
}

/// Parses a SNAP edge list into raw label pairs, keeping self-loops and
/// duplicates. Blank lines and lines starting with `#` are skipped.
pub fn read_edge_list(reader: impl BufRead) -> Result<Vec<(Label, Label)>> {
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let (Some(a), Some(b), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected two vertex labels, got {trimmed:?}"),
            });
        };
        edges.push((parse_label(a, lineno)?, parse_label(b, lineno)?));
    }
    Ok(edges)
}

/// Parses a SNAP edge list into a canonical graph.
pub fn load_edge_list(reader: impl BufRead) -> Result<LabeledGraph> {
    Ok(canonicalize(&read_edge_list(reader)?))
}

pub(crate) fn parse_label(token: &str, line: usize) -> Result<Label> {
    let value: Label = token.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid vertex label {token:?}"),
    })?;
    if value > MAX_LABEL {
        return Err(Error::Parse {
            line,
            message: format!("vertex label {value} exceeds 2^63-1"),
        });
    }
    Ok(value)
}

//! Triangle statistics per vertex and for the whole graph.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};

/// Triangle statistics of one vertex against the whole graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VertexStats {
    /// Triangles through the vertex.
    pub t: u64,
    /// Neighbors that close at least one triangle with the vertex.
    pub vt: u32,
    pub degree: u32,
    /// Local clustering coefficient, 0 for degree < 2.
    pub cc: f64,
}

impl VertexStats {
    pub fn new(t: u64, vt: u32, degree: u32) -> Self {
        VertexStats {
            t,
            vt,
            degree,
            cc: local_clustering(t, degree),
        }
    }
}

pub fn local_clustering(t: u64, degree: u32) -> f64 {
    if degree < 2 {
        return 0.0;
    }
    let d = degree as f64;
    2.0 * t as f64 / (d * (d - 1.0))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GlobalStats {
    /// Mean local clustering coefficient.
    pub omega: f64,
    pub total_triangles: u64,
}

/// Size of the intersection of two strictly sorted slices.
pub fn intersection_count(a: &[VertexId], b: &[VertexId]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Calls `f` for every element common to two strictly sorted slices.
pub fn for_each_common(a: &[VertexId], b: &[VertexId], mut f: impl FnMut(VertexId)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                f(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
}

/// Returns true if the two sorted slices share an element.
pub fn intersects(a: &[VertexId], b: &[VertexId]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Statistics of a single vertex by per-edge neighbor intersection.
pub fn vertex_stats(g: &Graph, x: VertexId) -> VertexStats {
    let nx = g.neighbors(x);
    let mut twice_t = 0u64;
    let mut vt = 0u32;
    for &y in nx {
        let common = intersection_count(nx, g.neighbors(y));
        if common > 0 {
            vt += 1;
            twice_t += common as u64;
        }
    }
    VertexStats::new(twice_t / 2, vt, nx.len() as u32)
}

/// Statistics for every vertex, indexed by vertex id.
pub fn compute_vertex_stats(g: &Graph) -> Vec<VertexStats> {
    (0..g.n() as VertexId)
        .into_par_iter()
        .map(|x| vertex_stats(g, x))
        .collect()
}

/// Statistics for a subset of vertices, in the order given.
pub fn compute_vertex_stats_for(
    g: &Graph,
    vertices: &[VertexId],
) -> Result<Vec<(VertexId, VertexStats)>> {
    if let Some(&bad) = vertices.iter().find(|&&v| !g.contains(v)) {
        return Err(Error::UnknownVertex(bad));
    }
    Ok(vertices
        .par_iter()
        .map(|&x| (x, vertex_stats(g, x)))
        .collect())
}

pub fn compute_global_stats(stats: &[VertexStats]) -> GlobalStats {
    if stats.is_empty() {
        return GlobalStats::default();
    }
    let cc: Vec<f64> = stats.iter().map(|s| s.cc).collect();
    let t: u64 = stats.iter().map(|s| s.t).sum();
    GlobalStats {
        omega: stable_sum(&cc) / stats.len() as f64,
        total_triangles: t / 3,
    }
}

/// The subgraph of edges that lie in at least one triangle. Vertex ids are
/// unchanged; vertices with no triangle edge keep an empty neighbor list.
pub fn triangle_filtered_view(g: &Graph, stats: &[VertexStats]) -> Graph {
    let edges: Vec<Vec<(VertexId, VertexId)>> = (0..g.n() as VertexId)
        .into_par_iter()
        .map(|u| {
            if stats[u as usize].t == 0 {
                return Vec::new();
            }
            let nu = g.neighbors(u);
            nu.iter()
                .filter(|&&v| v > u && stats[v as usize].t > 0)
                .filter(|&&v| intersects(nu, g.neighbors(v)))
                .map(|&v| (u, v))
                .collect()
        })
        .collect();
    Graph::from_edges(g.n(), edges.into_iter().flatten())
}

/// Pairwise summation with a fixed split, so the result does not depend
/// on how the inputs were produced.
pub fn stable_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 256;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    stable_sum(&values[..mid]) + stable_sum(&values[mid..])
}

//! Weighted community clustering (WCC) and the community statistics that
//! feed the movement heuristic.
//!
//! For a vertex `x` in community `C`:
//!
//! ```text
//! WCC(x, C) = t(x,C)/t(x,V) * vt(x,V) / (|C| - 1 + vt(x, V\C))   if t(x,V) > 0
//!           = 0                                                  otherwise
//! ```
//!
//! `t(x,C)` counts triangles through `x` whose two other corners are in `C`.
//! `vt(x,S)` counts neighbors in `S` that close a triangle with `x`, where the
//! third corner may be anywhere in the graph. With that reading
//! `vt(x,V) = vt(x,C) + vt(x,V\C)` holds for every split.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::partition::{CommunityId, Partition};
use crate::stats::{for_each_common, intersects, stable_sum, VertexStats};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CommunityStats {
    /// Member count.
    pub r: usize,
    /// Edges with exactly one endpoint in the community.
    pub b: usize,
    pub internal_edges: usize,
    /// `internal_edges / (r (r-1) / 2)`, 0 for `r < 2`.
    pub delta: f64,
}

impl CommunityStats {
    pub fn new(r: usize, internal_edges: usize, b: usize) -> Self {
        let delta = if r < 2 {
            0.0
        } else {
            internal_edges as f64 / (r as f64 * (r as f64 - 1.0) / 2.0)
        };
        CommunityStats {
            r,
            b,
            internal_edges,
            delta,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexCommunityLink {
    pub d_in: usize,
    pub d_out: usize,
}

/// Partition-dependent inputs of the WCC formula for one vertex in its
/// own community.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub(crate) struct Membership {
    pub t_in: u64,
    pub vt_out: u32,
}

/// WCC value from its raw ingredients.
#[inline]
pub(crate) fn wcc_term(t_in: u64, t: u64, vt: u32, community_size: usize, vt_out: u32) -> f64 {
    if t == 0 || t_in == 0 {
        return 0.0;
    }
    let denom = (community_size as f64 - 1.0) + vt_out as f64;
    if denom <= 0.0 {
        return 0.0;
    }
    (t_in as f64 / t as f64) * (vt as f64 / denom)
}

/// `t(x,C)` and `vt(x, V\C)` for the community described by `in_c`.
pub(crate) fn membership_by(
    x: VertexId,
    g: &Graph,
    in_c: impl Fn(VertexId) -> bool,
) -> Membership {
    let nx = g.neighbors(x);
    let mut twice_t = 0u64;
    let mut vt_out = 0u32;
    for &y in nx {
        let ny = g.neighbors(y);
        if in_c(y) {
            for_each_common(nx, ny, |z| {
                if in_c(z) {
                    twice_t += 1;
                }
            });
        } else if intersects(nx, ny) {
            vt_out += 1;
        }
    }
    Membership {
        t_in: twice_t / 2,
        vt_out,
    }
}

pub(crate) fn memberships(p: &Partition, g: &Graph) -> Vec<Membership> {
    let assignment = p.assignment();
    (0..g.n() as VertexId)
        .into_par_iter()
        .map(|x| {
            let cx = assignment[x as usize];
            membership_by(x, g, |v| assignment[v as usize] == cx)
        })
        .collect()
}

/// WCC of `x` as a member of the vertex set `community`.
pub fn wcc_vertex(
    x: VertexId,
    community: &BTreeSet<VertexId>,
    g: &Graph,
    stats: &[VertexStats],
) -> Result<f64> {
    if !g.contains(x) {
        return Err(Error::UnknownVertex(x));
    }
    if !community.contains(&x) {
        return Err(Error::NotAMember(x));
    }
    let s = &stats[x as usize];
    let m = membership_by(x, g, |v| community.contains(&v));
    Ok(wcc_term(m.t_in, s.t, s.vt, community.len(), m.vt_out))
}

/// Per-vertex WCC for every vertex in its assigned community.
pub fn vertex_wcc_values(p: &Partition, g: &Graph, stats: &[VertexStats]) -> Vec<f64> {
    let profile = memberships(p, g);
    profile
        .par_iter()
        .enumerate()
        .map(|(x, m)| {
            let s = &stats[x];
            let size = p.size(p.community_of(x as VertexId));
            wcc_term(m.t_in, s.t, s.vt, size, m.vt_out)
        })
        .collect()
}

/// Mean vertex WCC over the whole graph.
pub fn wcc_global(p: &Partition, g: &Graph, stats: &[VertexStats]) -> f64 {
    if g.n() == 0 {
        return 0.0;
    }
    stable_sum(&vertex_wcc_values(p, g, stats)) / g.n() as f64
}

/// Raw `(internal_edges, boundary_edges)` per community id, indexed by id.
pub(crate) fn community_edge_counts(p: &Partition, g: &Graph) -> Vec<(usize, usize)> {
    let assignment = p.assignment();
    let mut counts = vec![(0usize, 0usize); p.id_bound() as usize];
    for (u, v) in g.edges() {
        let (cu, cv) = (assignment[u as usize], assignment[v as usize]);
        if cu == cv {
            counts[cu.0 as usize].0 += 1;
        } else {
            counts[cu.0 as usize].1 += 1;
            counts[cv.0 as usize].1 += 1;
        }
    }
    counts
}

pub fn community_stats(p: &Partition, g: &Graph) -> BTreeMap<CommunityId, CommunityStats> {
    let counts = community_edge_counts(p, g);
    p.communities()
        .map(|(c, members)| {
            let (internal, b) = counts[c.0 as usize];
            (c, CommunityStats::new(members.len(), internal, b))
        })
        .collect()
}

/// Edge counts from `x` into community `c` and to everything else. `x`
/// need not belong to `c`.
pub fn vertex_links(x: VertexId, c: CommunityId, p: &Partition, g: &Graph) -> VertexCommunityLink {
    let neighbors = g.neighbors(x);
    let d_in = neighbors
        .iter()
        .filter(|&&y| p.community_of(y) == c)
        .count();
    VertexCommunityLink {
        d_in,
        d_out: neighbors.len() - d_in,
    }
}

//! Initial partitioning around high-clustering centers.
//!
//! Vertices are visited in descending clustering-coefficient order. An
//! unvisited vertex that is up for assignment seeds a community and pulls in
//! its unvisited neighbors that are also up for assignment. A vertex that
//! keeps its previous community acts as an anchor: it marks its neighbors as
//! visited and absorbs the ones up for assignment, but never recruits other
//! established vertices.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::partition::{CommunityId, Partition};
use crate::stats::VertexStats;

/// Total order on vertices: clustering coefficient descending, then degree
/// descending, then id ascending. `Less` means "ranks first".
#[inline]
pub fn rank_cmp(stats: &[VertexStats], a: VertexId, b: VertexId) -> Ordering {
    let (sa, sb) = (&stats[a as usize], &stats[b as usize]);
    sb.cc
        .total_cmp(&sa.cc)
        .then(sb.degree.cmp(&sa.degree))
        .then(a.cmp(&b))
}

/// All vertices, highest rank first.
pub fn vertex_order(stats: &[VertexStats]) -> Vec<VertexId> {
    let mut order: Vec<VertexId> = (0..stats.len() as VertexId).collect();
    order.par_sort_unstable_by(|&a, &b| rank_cmp(stats, a, b));
    order
}

fn sweep(p: &mut Partition, open: &[bool], g: &Graph, stats: &[VertexStats]) {
    let mut visited = vec![false; g.n()];
    for v in vertex_order(stats) {
        if visited[v as usize] {
            continue;
        }
        visited[v as usize] = true;
        // Open vertices are singletons here, so this is either `{v}` or the
        // anchor's previous community.
        let c = p.community_of(v);
        for &u in g.neighbors(v) {
            if !visited[u as usize] {
                visited[u as usize] = true;
                if open[u as usize] {
                    p.move_vertex(u, c).expect("community of a visited vertex exists");
                }
            }
        }
    }
}

/// Partition of the whole graph. `view` is normally the triangle-filtered
/// view; vertices it leaves isolated become singletons.
pub fn initial_partition_static(view: &Graph, stats: &[VertexStats]) -> Partition {
    let mut p = Partition::singletons(view.n());
    sweep(&mut p, &vec![true; view.n()], view, stats);
    p
}

/// Assigns the vertices in `open` (new and border vertices, all currently
/// singletons), leaving every other vertex in its previous community.
pub fn initial_partition_incremental(
    previous: &Partition,
    open: &[VertexId],
    view: &Graph,
    stats: &[VertexStats],
) -> Result<Partition> {
    if previous.n() != view.n() || stats.len() != view.n() {
        return Err(Error::contract("partition, graph and stats sizes differ"));
    }
    let mut p = previous.clone();
    if open.is_empty() {
        return Ok(p);
    }
    let mut is_open = vec![false; view.n()];
    for &v in open {
        if !view.contains(v) {
            return Err(Error::UnknownVertex(v));
        }
        if !p.is_singleton(v) {
            return Err(Error::contract(format!(
                "vertex {v} is up for assignment but not a singleton"
            )));
        }
        is_open[v as usize] = true;
    }
    sweep(&mut p, &is_open, view, stats);
    Ok(p)
}

/// Highest-ranked member of every community.
pub fn community_centers(p: &Partition, stats: &[VertexStats]) -> BTreeMap<CommunityId, VertexId> {
    p.communities()
        .map(|(c, members)| {
            let center = members
                .iter()
                .copied()
                .min_by(|&a, &b| rank_cmp(stats, a, b))
                .expect("communities are non-empty");
            (c, center)
        })
        .collect()
}

/// Moves border vertices to the adjacent center that outranks their own,
/// in synchronous rounds, until nothing moves or `max_rounds` is reached.
///
/// A center never moves, and a vertex only joins a center that outranks
/// every member of its new community that it could displace, so centers
/// stay centers and the rank of each vertex's center only increases.
pub fn refine_centers(
    p: &Partition,
    view: &Graph,
    stats: &[VertexStats],
    max_rounds: usize,
) -> Partition {
    let mut p = p.clone();
    for _ in 0..max_rounds {
        let centers = community_centers(&p, stats);
        let mut is_center = vec![false; view.n()];
        for &v in centers.values() {
            is_center[v as usize] = true;
        }
        let moves: Vec<(VertexId, CommunityId)> = (0..view.n() as VertexId)
            .into_par_iter()
            .filter(|&y| !is_center[y as usize])
            .filter_map(|y| {
                let own = centers[&p.community_of(y)];
                let best = view
                    .neighbors(y)
                    .iter()
                    .copied()
                    .filter(|&z| is_center[z as usize])
                    .min_by(|&a, &b| rank_cmp(stats, a, b))?;
                (rank_cmp(stats, best, own) == Ordering::Less).then(|| (y, p.community_of(best)))
            })
            .collect();
        if moves.is_empty() {
            break;
        }
        p.reassign(&moves);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::compute_vertex_stats;

    fn k3() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)])
    }

    fn bowtie() -> Graph {
        // x=0, a=1, b=2, c=3, d=4
        Graph::from_edges(5, [(0, 1), (0, 2), (1, 2), (0, 3), (0, 4), (3, 4)])
    }

    #[test]
    fn order_breaks_ties_by_degree_then_id() {
        let g = bowtie();
        let stats = compute_vertex_stats(&g);
        assert_eq!(vertex_order(&stats), vec![1, 2, 3, 4, 0]);

        // Two vertices with cc = 1: the higher-degree one ranks first.
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (0, 2), (3, 4), (3, 0), (4, 0), (3, 1), (4, 1), (3, 2), (4, 2)]);
        let stats = compute_vertex_stats(&g);
        let order = vertex_order(&stats);
        for w in order.windows(2) {
            assert_eq!(rank_cmp(&stats, w[0], w[1]), Ordering::Less);
        }
    }

    #[test]
    fn k3_single_community() {
        let g = k3();
        let p = initial_partition_static(&g, &compute_vertex_stats(&g));
        assert_eq!(p.groups(), vec![vec![0, 1, 2]]);
        assert_eq!(p.community_of(1), CommunityId(0));
    }

    #[test]
    fn disjoint_triangles() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
        let p = initial_partition_static(&g, &compute_vertex_stats(&g));
        assert_eq!(p.groups(), vec![vec![0, 1, 2], vec![3, 4, 5]]);
    }

    #[test]
    fn bowtie_hand_executed() {
        // Order a, b, c, d, x: a seeds {a, b, x}; c seeds {c, d}.
        let g = bowtie();
        let stats = compute_vertex_stats(&g);
        let p = initial_partition_static(&g, &stats);
        assert_eq!(p.groups(), vec![vec![0, 1, 2], vec![3, 4]]);
        let centers = community_centers(&p, &stats);
        assert_eq!(centers[&p.community_of(0)], 1);
        assert_eq!(centers[&p.community_of(3)], 3);
        assert_eq!(refine_centers(&p, &g, &stats, 10), p);
    }

    #[test]
    fn incremental_empty_is_identity() {
        let g = k3();
        let stats = compute_vertex_stats(&g);
        let p = Partition::from_assignment(vec![CommunityId(0); 3]);
        assert_eq!(initial_partition_incremental(&p, &[], &g, &stats).unwrap(), p);
    }

    #[test]
    fn incremental_k3_plus_d() {
        // G_{t+1}: K3 {a=0,b=1,c=2} plus d=3 adjacent to a and b. a and b
        // are border vertices (isolated), d is new, c keeps community 0.
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (0, 2), (3, 0), (3, 1)]);
        let stats = compute_vertex_stats(&g);
        // cc: a = b = 2/3 (deg 3), c = d = 1 (deg 2). Order: c, d, a, b.
        assert_eq!(vertex_order(&stats), vec![2, 3, 0, 1]);
        let mut prev = Partition::from_assignment(vec![CommunityId(0); 3]);
        prev.isolate(0);
        prev.isolate(1);
        prev.push_singleton();
        // c is an anchor: it marks a and b visited and absorbs them into
        // community 0. d then seeds its own singleton (both neighbors visited).
        let p = initial_partition_incremental(&prev, &[0, 1, 3], &g, &stats).unwrap();
        assert_eq!(p.groups(), vec![vec![0, 1, 2], vec![3]]);
        assert_eq!(p.community_of(2), CommunityId(0));
        p.validate().unwrap();
    }

    #[test]
    fn incremental_disconnected_new_vertices_stay_single() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (0, 2)]);
        let stats = compute_vertex_stats(&g);
        let mut prev = Partition::from_assignment(vec![CommunityId(0); 3]);
        prev.push_singleton();
        prev.push_singleton();
        let p = initial_partition_incremental(&prev, &[3, 4], &g, &stats).unwrap();
        assert_eq!(p, prev);
    }

    #[test]
    fn incremental_rejects_non_singleton() {
        let g = k3();
        let stats = compute_vertex_stats(&g);
        let p = Partition::from_assignment(vec![CommunityId(0); 3]);
        assert!(matches!(
            initial_partition_incremental(&p, &[1], &g, &stats),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn refine_centers_zero_rounds_is_identity() {
        let g = bowtie();
        let stats = compute_vertex_stats(&g);
        let p = Partition::from_assignment(vec![CommunityId(0), CommunityId(0), CommunityId(0), CommunityId(1), CommunityId(1)]);
        assert_eq!(refine_centers(&p, &g, &stats, 0), p);
    }

    #[test]
    fn border_moves_to_stronger_adjacent_center() {
        // Triangles {0,1,2} and {3,4,5} bridged by 2-3. Ranks: 0, 1, 4, 5
        // (cc 1, degree 2), then 2, 3 (cc 1/3, degree 3).
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]);
        let stats = compute_vertex_stats(&g);
        assert_eq!(vertex_order(&stats), vec![0, 1, 4, 5, 2, 3]);
        // Vertex 2 starts under center 4 but is adjacent to center 0, which
        // outranks 4; it moves in round one and round two is a fixpoint.
        let (a, b) = (CommunityId(0), CommunityId(1));
        let p = Partition::from_assignment(vec![a, a, b, b, b, b]);
        let once = refine_centers(&p, &g, &stats, 1);
        assert_eq!(once.groups(), vec![vec![0, 1, 2], vec![3, 4, 5]]);
        assert_eq!(refine_centers(&p, &g, &stats, 10), once);
        assert_eq!(refine_centers(&once, &g, &stats, 1), once);
    }
}

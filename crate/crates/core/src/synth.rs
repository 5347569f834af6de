//! Seeded synthetic graphs for tests, benchmarks and desk-scale runs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, Label, VertexId};

/// Erdős–Rényi `G(n, p)` over dense ids.
pub fn gnp(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n as VertexId {
        for v in u + 1..n as VertexId {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Planted partition: `groups` blocks of `size` vertices, intra-block edge
/// probability `p_in` and inter-block probability `p_out`.
pub fn planted_partition(groups: usize, size: usize, p_in: f64, p_out: f64, seed: u64) -> Graph {
    let n = groups * size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if u / size == v / size { p_in } else { p_out };
            if rng.gen_bool(p) {
                edges.push((u as VertexId, v as VertexId));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// A sparse, highly clustered graph shaped like a product co-purchase
/// network: many small dense groups (4 to 24 members), a few random
/// cross-group links per vertex and triadic closure over them. Average
/// degree lands around 5 to 6 and mean local clustering around 0.4.
///
/// Labels are a seeded permutation of `1..=n` scaled by 7, so that label
/// order carries no information about the planted groups.
pub fn copurchase_like(n: usize, seed: u64) -> Vec<(Label, Label)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut group_of = Vec::with_capacity(n);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    while group_of.len() < n {
        let size = rng.gen_range(4..=24).min(n - group_of.len());
        let id = groups.len();
        groups.push((group_of.len()..group_of.len() + size).collect());
        group_of.extend(std::iter::repeat_n(id, size));
    }

    let mut edges: Vec<(usize, usize)> = Vec::new();
    for members in &groups {
        // Sparse backbone ring keeps every group connected; chords add density.
        let k = members.len();
        for i in 0..k {
            if k > 1 {
                edges.push((members[i], members[(i + 1) % k]));
            }
            for j in i + 2..k {
                let p = 3.2 / k as f64;
                if rng.gen_bool(p.min(1.0)) {
                    edges.push((members[i], members[j]));
                }
            }
        }
    }
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in &edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    for u in 0..n {
        if rng.gen_bool(0.55) {
            let v = rng.gen_range(0..n);
            if v != u && group_of[v] != group_of[u] {
                edges.push((u, v));
                // Close a triangle across the link now and then.
                if rng.gen_bool(0.3) {
                    if let Some(&w) = adj[v].choose(&mut rng) {
                        if w != u {
                            edges.push((u, w));
                        }
                    }
                }
            }
        }
    }

    let mut labels: Vec<Label> = (1..=n as Label).map(|l| l * 7).collect();
    labels.shuffle(&mut rng);
    edges
        .into_iter()
        .map(|(u, v)| (labels[u], labels[v]))
        .collect()
}

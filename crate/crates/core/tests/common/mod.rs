#![allow(dead_code)]

use std::collections::VecDeque;
use std::fs::File;
use std::io::BufReader;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wcc_core::graph::{canonicalize, read_edge_list, Graph, Label, VertexId};
use wcc_core::partition::{CommunityId, Partition};
use wcc_core::synth;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random assignment of `n` vertices into at most `k` communities.
pub fn random_partition(n: usize, k: u32, rng: &mut impl Rng) -> Partition {
    Partition::from_assignment((0..n).map(|_| CommunityId(rng.gen_range(0..k.max(1)))).collect())
}

/// Mix of sparse, dense and clustered graphs.
pub fn random_graph(n: usize, rng: &mut impl Rng) -> Graph {
    let seed = rng.gen();
    match rng.gen_range(0..3) {
        0 => synth::gnp(n, rng.gen_range(0.05..0.5), seed),
        1 => {
            let size = rng.gen_range(3..=8).min(n.max(1));
            synth::planted_partition(n / size, size, rng.gen_range(0.5..1.0), rng.gen_range(0.0..0.08), seed)
        }
        _ => synth::gnp(n, 4.0 / n.max(4) as f64, seed),
    }
}

pub fn id_edges(g: &Graph) -> Vec<(Label, Label)> {
    g.edges().map(|(u, v)| (u as Label, v as Label)).collect()
}

/// The first `limit` vertices reached by breadth-first search from the
/// smallest label, and the edges among them.
pub fn bfs_subgraph(raw: &[(Label, Label)], limit: usize) -> Vec<(Label, Label)> {
    let lg = canonicalize(raw);
    let g = &lg.graph;
    let mut keep = vec![false; g.n()];
    let mut kept = 0;
    let mut queue = VecDeque::new();
    for root in g.vertices() {
        if kept == limit {
            break;
        }
        if keep[root as usize] {
            continue;
        }
        keep[root as usize] = true;
        kept += 1;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            for &u in g.neighbors(v) {
                if kept < limit && !keep[u as usize] {
                    keep[u as usize] = true;
                    kept += 1;
                    queue.push_back(u);
                }
            }
        }
    }
    let inside = |v: VertexId| keep[v as usize];
    g.edges()
        .filter(|&(u, v)| inside(u) && inside(v))
        .map(|(u, v)| (lg.labels.label(u), lg.labels.label(v)))
        .collect()
}

/// A 10k-vertex co-purchase graph: a BFS sample of the SNAP com-amazon
/// file when `WCC_AMAZON_PATH` names one, a seeded synthetic stand-in
/// otherwise.
pub fn desk_scale_dataset() -> (String, Vec<(Label, Label)>) {
    const N: usize = 10_000;
    match std::env::var_os("WCC_AMAZON_PATH") {
        Some(path) => {
            let file = File::open(&path).expect("WCC_AMAZON_PATH is readable");
            let raw = read_edge_list(BufReader::new(file)).expect("WCC_AMAZON_PATH parses");
            (format!("{} (bfs {N})", path.to_string_lossy()), bfs_subgraph(&raw, N))
        }
        None => ("synthetic co-purchase (10k, seed 42)".into(), synth::copurchase_like(N, 42)),
    }
}

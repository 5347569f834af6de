//! Brute-force reference computations by full vertex-triple enumeration.
//!
//! Nothing here reuses the adjacency-intersection kernels of the fast path:
//! the graph is copied into a dense matrix and every triple is inspected.

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::partition::Partition;

pub const DEFAULT_ORACLE_CAP: usize = 2_000;

struct Dense {
    n: usize,
    bits: Vec<bool>,
}

impl Dense {
    fn new(g: &Graph) -> Self {
        let n = g.n();
        let mut bits = vec![false; n * n];
        for (u, v) in g.edges() {
            bits[u as usize * n + v as usize] = true;
            bits[v as usize * n + u as usize] = true;
        }
        Dense { n, bits }
    }

    #[inline]
    fn adj(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.n + b]
    }

    /// Calls `f(a, b, c)` for every triangle with `a < b < c`.
    fn triangles(&self, mut f: impl FnMut(usize, usize, usize)) {
        for a in 0..self.n {
            for b in a + 1..self.n {
                if !self.adj(a, b) {
                    continue;
                }
                for c in b + 1..self.n {
                    if self.adj(a, c) && self.adj(b, c) {
                        f(a, b, c);
                    }
                }
            }
        }
    }
}

/// `(t, vt)` for every vertex.
pub fn brute_force_vertex_triangles(g: &Graph) -> Vec<(u64, u32)> {
    let dense = Dense::new(g);
    let n = dense.n;
    let mut t = vec![0u64; n];
    let mut closes = vec![false; n * n];
    dense.triangles(|a, b, c| {
        for (x, y, z) in [(a, b, c), (b, a, c), (c, a, b)] {
            t[x] += 1;
            closes[x * n + y] = true;
            closes[x * n + z] = true;
        }
    });
    (0..n)
        .map(|x| {
            let vt = (0..n).filter(|&y| closes[x * n + y]).count() as u32;
            (t[x], vt)
        })
        .collect()
}

/// Global WCC with the default vertex cap.
pub fn wcc_global_oracle(p: &Partition, g: &Graph) -> Result<f64> {
    wcc_global_oracle_with_cap(p, g, DEFAULT_ORACLE_CAP)
}

pub fn wcc_global_oracle_with_cap(p: &Partition, g: &Graph, cap: usize) -> Result<f64> {
    let n = g.n();
    if n > cap {
        return Err(Error::OracleCapExceeded { n, cap });
    }
    if p.n() != n {
        return Err(Error::contract("partition and graph sizes differ"));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let dense = Dense::new(g);
    let comm: Vec<u32> = (0..n as VertexId).map(|v| p.community_of(v).0).collect();
    let mut size = std::collections::HashMap::new();
    for &c in &comm {
        *size.entry(c).or_insert(0usize) += 1;
    }

    let mut t = vec![0u64; n];
    let mut t_in = vec![0u64; n];
    let mut closes = vec![false; n * n];
    dense.triangles(|a, b, c| {
        for (x, y, z) in [(a, b, c), (b, a, c), (c, a, b)] {
            t[x] += 1;
            if comm[y] == comm[x] && comm[z] == comm[x] {
                t_in[x] += 1;
            }
            closes[x * n + y] = true;
            closes[x * n + z] = true;
        }
    });

    let mut total = 0.0;
    for x in 0..n {
        if t[x] == 0 {
            continue;
        }
        let mut vt = 0usize;
        let mut vt_outside = 0usize;
        for y in 0..n {
            if closes[x * n + y] {
                vt += 1;
                if comm[y] != comm[x] {
                    vt_outside += 1;
                }
            }
        }
        let others = size[&comm[x]] - 1;
        total += (t_in[x] as f64 / t[x] as f64) * (vt as f64 / (others + vt_outside) as f64);
    }
    Ok(total / n as f64)
}

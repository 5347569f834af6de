//! Static detection pipeline and incremental maintenance across
//! node-grained micro-batches.
//!
//! A micro-batch brings new vertices together with all of their edges; no
//! edge may join two vertices that already exist. Under that contract every
//! triangle created by a batch contains a new vertex, so the triangle sets
//! of old vertices before and after a batch never overlap and the
//! statistics of vertices untouched by the batch do not change.

use std::collections::HashSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Label, LabelMap, LabeledGraph, VertexId};
use crate::init::{initial_partition_incremental, initial_partition_static, refine_centers};
use crate::metric::wcc_global;
use crate::partition::Partition;
use crate::refine::{refine, GainMode, RefineConfig, RefineTrace};
use crate::stats::{
    compute_global_stats, compute_vertex_stats, for_each_common, intersection_count, intersects,
    triangle_filtered_view, vertex_stats, GlobalStats, VertexStats,
};

/// New vertices plus edges that each touch at least one of them.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MicroBatch {
    pub new_vertices: Vec<Label>,
    pub edges: Vec<(Label, Label)>,
}

impl MicroBatch {
    pub fn is_empty(&self) -> bool {
        self.new_vertices.is_empty() && self.edges.is_empty()
    }
}

/// Old vertices touched by a batch and the vertices it introduced.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BorderSet {
    /// Pre-existing endpoints of batch edges, ascending.
    pub border: Vec<VertexId>,
    /// New vertex ids, ascending; all `>= first_new`.
    pub inner: Vec<VertexId>,
    pub first_new: VertexId,
}

impl BorderSet {
    /// Border and inner vertices together, ascending.
    pub fn open(&self) -> Vec<VertexId> {
        self.border.iter().chain(&self.inner).copied().collect()
    }

    #[inline]
    fn is_new(&self, v: VertexId) -> bool {
        v >= self.first_new
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub max_iterations: usize,
    pub gain_mode: GainMode,
    pub improvement_threshold: f64,
    pub center_rounds: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            max_iterations: 5,
            gain_mode: GainMode::Exact,
            improvement_threshold: 1e-3,
            center_rounds: 10,
        }
    }
}

impl PipelineConfig {
    /// Refinement for the static pipeline: scored every iteration.
    pub fn static_refine(&self) -> RefineConfig {
        RefineConfig {
            max_iterations: self.max_iterations,
            wcc_check: true,
            improvement_threshold: self.improvement_threshold,
            gain_mode: self.gain_mode,
        }
    }

    /// Refinement for batches: fixed iteration count, no scoring.
    pub fn incremental_refine(&self) -> RefineConfig {
        RefineConfig {
            wcc_check: false,
            ..self.static_refine()
        }
    }
}

/// Wall time per phase, in milliseconds. The static pipeline leaves
/// `merge_ms` at zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub merge_ms: f64,
    pub stats_ms: f64,
    pub restructure_ms: f64,
    pub partition_ms: f64,
    pub refine_ms: f64,
}

impl PhaseTimes {
    pub fn total_ms(&self) -> f64 {
        self.merge_ms + self.stats_ms + self.restructure_ms + self.partition_ms + self.refine_ms
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Result of a from-scratch run.
#[derive(Clone, Debug)]
pub struct StaticOutcome {
    pub partition: Partition,
    pub stats: Vec<VertexStats>,
    pub global: GlobalStats,
    pub view: Graph,
    pub wcc: f64,
    pub trace: RefineTrace,
    pub times: PhaseTimes,
}

/// Full pipeline on a fixed graph: statistics, triangle filter, center
/// partition, center refinement, scored hill climbing.
pub fn detect_static(g: &Graph, cfg: &PipelineConfig) -> Result<StaticOutcome> {
    let mut times = PhaseTimes::default();

    let start = Instant::now();
    let stats = compute_vertex_stats(g);
    let global = compute_global_stats(&stats);
    times.stats_ms = elapsed_ms(start);

    let start = Instant::now();
    let view = triangle_filtered_view(g, &stats);
    times.restructure_ms = elapsed_ms(start);

    let start = Instant::now();
    let initial = initial_partition_static(&view, &stats);
    let initial = refine_centers(&initial, &view, &stats, cfg.center_rounds);
    times.partition_ms = elapsed_ms(start);

    let start = Instant::now();
    let (partition, trace) = refine(&initial, &view, &stats, &cfg.static_refine())?;
    times.refine_ms = elapsed_ms(start);

    let wcc = trace.final_wcc().unwrap_or(0.0);
    Ok(StaticOutcome {
        partition,
        stats,
        global,
        view,
        wcc,
        trace,
        times,
    })
}

/// What one `ingest` call did.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchOutcome {
    pub epoch: u64,
    pub new_vertices: usize,
    /// Edges actually added to the graph.
    pub new_edges: usize,
    pub border_vertices: usize,
    pub times: PhaseTimes,
    /// Global WCC after the batch, scored once outside the pipeline.
    pub wcc: f64,
    pub report_ms: f64,
    pub trace: RefineTrace,
}

/// Graph, statistics and partition carried from batch to batch.
#[derive(Clone, Debug)]
pub struct EngineState {
    pub graph: Graph,
    pub labels: LabelMap,
    /// Triangle-filtered view of `graph`, kept current with it.
    pub view: Graph,
    pub stats: Vec<VertexStats>,
    pub global: GlobalStats,
    pub partition: Partition,
    pub epoch: u64,
}

impl EngineState {
    /// Runs the static pipeline on `lg` and starts at epoch 0.
    pub fn bootstrap(lg: LabeledGraph, cfg: &PipelineConfig) -> Result<(Self, StaticOutcome)> {
        let outcome = detect_static(&lg.graph, cfg)?;
        let state = EngineState {
            graph: lg.graph,
            labels: lg.labels,
            view: outcome.view.clone(),
            stats: outcome.stats.clone(),
            global: outcome.global,
            partition: outcome.partition.clone(),
            epoch: 0,
        };
        Ok((state, outcome))
    }

    /// Adds the batch to the graph. Border vertices move to fresh singleton
    /// communities and new vertices start as singletons. Statistics are not
    /// touched; see [`EngineState::patch_stats`].
    ///
    /// The batch is validated in full before anything changes.
    pub fn merge_batch(&mut self, batch: &MicroBatch) -> Result<BorderSet> {
        let mut declared: HashSet<Label> = HashSet::with_capacity(batch.new_vertices.len());
        for &label in &batch.new_vertices {
            if self.labels.id(label).is_some() {
                return Err(Error::contract(format!("new vertex {label} already exists")));
            }
            if !declared.insert(label) {
                return Err(Error::contract(format!("new vertex {label} declared twice")));
            }
        }
        for &(a, b) in &batch.edges {
            for end in [a, b] {
                if !declared.contains(&end) && self.labels.id(end).is_none() {
                    return Err(Error::contract(format!(
                        "edge {a}-{b}: endpoint {end} is neither existing nor declared new"
                    )));
                }
            }
            if !declared.contains(&a) && !declared.contains(&b) {
                return Err(Error::contract(format!(
                    "edge {a}-{b} joins two existing vertices"
                )));
            }
        }

        let first_new = self.graph.n() as VertexId;
        let mut fresh: Vec<Label> = batch.new_vertices.clone();
        fresh.sort_unstable();
        for label in fresh {
            self.labels.push(label);
            self.graph.push_vertex();
            self.view.push_vertex();
            self.partition.push_singleton();
        }

        let mut border = Vec::new();
        for &(a, b) in &batch.edges {
            let (u, v) = (self.labels.id(a).unwrap(), self.labels.id(b).unwrap());
            if self.graph.insert_edge(u, v) {
                border.extend([u, v].into_iter().filter(|&w| w < first_new));
            }
        }
        border.sort_unstable();
        border.dedup();
        for &x in &border {
            self.partition.isolate(x);
        }
        Ok(BorderSet {
            border,
            inner: (first_new..self.graph.n() as VertexId).collect(),
            first_new,
        })
    }

    /// Brings statistics up to date after [`EngineState::merge_batch`].
    ///
    /// Untouched old vertices keep their values. New vertices are counted
    /// from scratch. A border vertex adds the triangles through it that
    /// contain a new vertex, and the neighbors that close such a triangle
    /// but closed none before.
    pub fn patch_stats(&mut self, bs: &BorderSet) {
        let g = &self.graph;
        let inner: Vec<VertexStats> = bs.inner.par_iter().map(|&v| vertex_stats(g, v)).collect();
        let border: Vec<VertexStats> = bs
            .border
            .par_iter()
            .map(|&x| {
                let old = self.stats[x as usize];
                let nx = g.neighbors(x);
                let mut twice_dt = 0u64;
                let mut dvt = 0u32;
                for &y in nx {
                    let ny = g.neighbors(y);
                    if bs.is_new(y) {
                        let common = intersection_count(nx, ny) as u64;
                        twice_dt += common;
                        dvt += u32::from(common > 0);
                    } else {
                        let mut via_new = 0u64;
                        let mut via_old = false;
                        for_each_common(nx, ny, |z| {
                            if bs.is_new(z) {
                                via_new += 1;
                            } else {
                                via_old = true;
                            }
                        });
                        twice_dt += via_new;
                        dvt += u32::from(via_new > 0 && !via_old);
                    }
                }
                VertexStats::new(old.t + twice_dt / 2, old.vt + dvt, nx.len() as u32)
            })
            .collect();

        self.stats.resize(g.n(), VertexStats::default());
        for (&v, s) in bs.inner.iter().zip(inner) {
            self.stats[v as usize] = s;
        }
        for (&v, s) in bs.border.iter().zip(border) {
            self.stats[v as usize] = s;
        }
        self.global = compute_global_stats(&self.stats);
    }

    /// Adds to the view every edge that now lies in a triangle. Only edges
    /// with a new endpoint, or between two border vertices, can qualify;
    /// edges already in the view stay there.
    pub fn refresh_view(&mut self, bs: &BorderSet) {
        let g = &self.graph;
        let view = &self.view;
        let mut is_border = vec![false; bs.first_new as usize];
        for &x in &bs.border {
            is_border[x as usize] = true;
        }
        let eligible = |u: VertexId, v: VertexId| {
            bs.is_new(u) || bs.is_new(v) || (is_border[u as usize] && is_border[v as usize])
        };
        let added: Vec<Vec<(VertexId, VertexId)>> = bs
            .open()
            .par_iter()
            .map(|&x| {
                let nx = g.neighbors(x);
                nx.iter()
                    .copied()
                    .filter(|&y| y > x || !(bs.is_new(y) || is_border[y as usize]))
                    .filter(|&y| eligible(x, y) && !view.has_edge(x, y))
                    .filter(|&y| intersects(nx, g.neighbors(y)))
                    .map(|y| (x, y))
                    .collect()
            })
            .collect();
        for (u, v) in added.into_iter().flatten() {
            self.view.insert_edge(u, v);
        }
    }

    /// One micro-batch through the incremental pipeline: merge, patch
    /// statistics and view, assign new and border vertices, refine for a
    /// fixed number of iterations without scoring. The returned WCC is
    /// computed once afterwards and is not part of the phase times.
    pub fn ingest(&mut self, batch: &MicroBatch, cfg: &PipelineConfig) -> Result<BatchOutcome> {
        self.epoch += 1;
        let mut times = PhaseTimes::default();
        let mut trace = RefineTrace::default();
        let mut new_edges = 0;
        let mut border_vertices = 0;

        if !batch.is_empty() {
            let m_before = self.graph.m();
            let start = Instant::now();
            let bs = self.merge_batch(batch)?;
            times.merge_ms = elapsed_ms(start);
            new_edges = self.graph.m() - m_before;
            border_vertices = bs.border.len();

            let start = Instant::now();
            self.patch_stats(&bs);
            times.stats_ms = elapsed_ms(start);

            let start = Instant::now();
            self.refresh_view(&bs);
            times.restructure_ms = elapsed_ms(start);

            let start = Instant::now();
            let initial =
                initial_partition_incremental(&self.partition, &bs.open(), &self.view, &self.stats)?;
            times.partition_ms = elapsed_ms(start);

            let start = Instant::now();
            let (partition, refined) =
                refine(&initial, &self.view, &self.stats, &cfg.incremental_refine())?;
            times.refine_ms = elapsed_ms(start);
            self.partition = partition;
            trace = refined;
        }

        let start = Instant::now();
        let wcc = wcc_global(&self.partition, &self.view, &self.stats);
        let report_ms = elapsed_ms(start);

        Ok(BatchOutcome {
            epoch: self.epoch,
            new_vertices: batch.new_vertices.len(),
            new_edges,
            border_vertices,
            times,
            wcc,
            report_ms,
            trace,
        })
    }

    /// Checks that statistics, view and partition agree with a from-scratch
    /// computation on the current graph.
    pub fn check_consistency(&self) -> Result<()> {
        self.graph.check_invariants()?;
        self.partition.validate()?;
        if self.partition.n() != self.graph.n() || self.labels.len() != self.graph.n() {
            return Err(Error::contract("state components disagree on vertex count"));
        }
        let fresh = compute_vertex_stats(&self.graph);
        if let Some(v) = (0..fresh.len()).find(|&v| fresh[v] != self.stats[v]) {
            return Err(Error::contract(format!(
                "stats of vertex {v} drifted: have {:?}, expected {:?}",
                self.stats[v], fresh[v]
            )));
        }
        if self.view != triangle_filtered_view(&self.graph, &fresh) {
            return Err(Error::contract("triangle-filtered view is stale"));
        }
        Ok(())
    }
}

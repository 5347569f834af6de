//! Shared workloads for the benchmarks.

use wcc_core::engine::{EngineState, MicroBatch, PipelineConfig};
use wcc_core::graph::{canonicalize, LabeledGraph};
use wcc_core::stream::{split_into_batches, StreamPlan, VertexOrder};
use wcc_core::synth;

pub const SIZES: [usize; 3] = [2_000, 10_000, 40_000];

/// Seeded co-purchase-like graph with `n` vertices.
pub fn copurchase(n: usize) -> LabeledGraph {
    canonicalize(&synth::copurchase_like(n, 42))
}

/// Engine state after the static run on 90% of the graph, plus the batch
/// that brings in the remaining vertices.
pub fn streaming_fixture(n: usize, cfg: &PipelineConfig) -> (EngineState, MicroBatch) {
    let plan = StreamPlan {
        bulk_fraction: 0.9,
        num_batches: 1,
        seed: 7,
        vertex_order: VertexOrder::Random,
    };
    let split = split_into_batches(&synth::copurchase_like(n, 42), &plan).expect("valid plan");
    let (state, _) = EngineState::bootstrap(split.bulk_graph(), cfg).expect("bootstrap");
    let batch = split.batches.into_iter().next().expect("one batch");
    (state, batch)
}

//! Triangle-based community detection by weighted community clustering
//! (WCC), on a fixed graph and incrementally over node-grained
//! micro-batches.

pub mod engine;
pub mod error;
pub mod graph;
pub mod init;
pub mod metric;
pub mod oracle;
pub mod partition;
pub mod refine;
pub mod stats;
pub mod stream;
pub mod synth;

pub use engine::{detect_static, BatchOutcome, BorderSet, EngineState, MicroBatch, PhaseTimes, PipelineConfig, StaticOutcome};
pub use error::{Error, Result};
pub use graph::{canonicalize, load_edge_list, read_edge_list, Graph, GraphBuilder, Label, LabelMap, LabeledGraph, VertexId};
pub use metric::{wcc_global, wcc_vertex, CommunityStats, VertexCommunityLink};
pub use partition::{CommunityId, Partition};
pub use refine::{refine, Action, GainMode, Movement, RefineConfig, RefineTrace};
pub use stats::{compute_global_stats, compute_vertex_stats, triangle_filtered_view, GlobalStats, VertexStats};

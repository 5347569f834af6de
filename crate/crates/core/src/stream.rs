//! Node-grained streams synthesized from static edge lists, run drivers,
//! metrics reports and community dumps.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{detect_static, EngineState, MicroBatch, PhaseTimes, PipelineConfig};
use crate::error::{Error, Result};
use crate::graph::{canonicalize, parse_label, GraphBuilder, Label, LabelMap, LabeledGraph, VertexId};
use crate::partition::{CommunityId, Partition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexOrder {
    /// Order of first appearance in the edge list.
    Input,
    /// Seeded shuffle of all vertices.
    Random,
}

impl FromStr for VertexOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "input" => Ok(VertexOrder::Input),
            "random" => Ok(VertexOrder::Random),
            other => Err(Error::Config(format!("unknown vertex order `{other}`"))),
        }
    }
}

/// How a static edge list is cut into a bulk graph and micro-batches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamPlan {
    /// Share of vertices, in arrival order, that form the bulk graph.
    pub bulk_fraction: f64,
    pub num_batches: usize,
    pub seed: u64,
    pub vertex_order: VertexOrder,
}

impl Default for StreamPlan {
    fn default() -> Self {
        StreamPlan {
            bulk_fraction: 0.75,
            num_batches: 10,
            seed: 0,
            vertex_order: VertexOrder::Random,
        }
    }
}

impl StreamPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.bulk_fraction > 0.0 && self.bulk_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "bulk fraction must lie in (0, 1], got {}",
                self.bulk_fraction
            )));
        }
        if self.num_batches == 0 {
            return Err(Error::Config("at least one batch is required".into()));
        }
        Ok(())
    }
}

/// A bulk graph followed by micro-batches. Edges are stored once, with the
/// smaller label first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StreamSplit {
    pub bulk_vertices: Vec<Label>,
    pub bulk_edges: Vec<(Label, Label)>,
    pub batches: Vec<MicroBatch>,
}

impl StreamSplit {
    pub fn bulk_graph(&self) -> LabeledGraph {
        let mut builder = GraphBuilder::new();
        for &v in &self.bulk_vertices {
            builder.add_vertex(v);
        }
        for &(a, b) in &self.bulk_edges {
            builder.add_edge(a, b);
        }
        builder.build()
    }

    pub fn streamed_edges(&self) -> usize {
        self.batches.iter().map(|b| b.edges.len()).sum()
    }

    /// Text form: a `# bulk` section, then one `# batch <k>` section per
    /// batch. Inside a section, `v <label>` declares a vertex and `<a> <b>`
    /// is an edge.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        fn section(w: &mut impl Write, vertices: &[Label], edges: &[(Label, Label)]) -> Result<()> {
            for v in vertices {
                writeln!(w, "v {v}")?;
            }
            for (a, b) in edges {
                writeln!(w, "{a} {b}")?;
            }
            Ok(())
        }
        writeln!(w, "# bulk")?;
        section(&mut w, &self.bulk_vertices, &self.bulk_edges)?;
        for (k, batch) in self.batches.iter().enumerate() {
            writeln!(w, "# batch {}", k + 1)?;
            section(&mut w, &batch.new_vertices, &batch.edges)?;
        }
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let mut split = StreamSplit::default();
        let mut current: Option<usize> = None;
        let mut seen_bulk = false;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                let rest = rest.trim();
                if rest == "bulk" {
                    seen_bulk = true;
                    current = None;
                } else if rest.starts_with("batch") {
                    split.batches.push(MicroBatch::default());
                    current = Some(split.batches.len() - 1);
                }
                continue;
            }
            if !seen_bulk {
                return Err(Error::Parse {
                    line: lineno,
                    message: "data before the `# bulk` section".into(),
                });
            }
            let tokens: Vec<&str> = trimmed.split_whitespace().collect();
            let (vertices, edges) = match current {
                None => (&mut split.bulk_vertices, &mut split.bulk_edges),
                Some(k) => {
                    let b = &mut split.batches[k];
                    (&mut b.new_vertices, &mut b.edges)
                }
            };
            match tokens.as_slice() {
                ["v", label] => vertices.push(parse_label(label, lineno)?),
                [a, b] => edges.push((parse_label(a, lineno)?, parse_label(b, lineno)?)),
                _ => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("expected `v <label>` or an edge, got `{trimmed}`"),
                    })
                }
            }
        }
        Ok(split)
    }
}

/// Cuts an edge list into a bulk graph and node-grained micro-batches.
///
/// Vertices arrive in the plan's order. The first `ceil(bulk_fraction * n)`
/// form the bulk; the rest are dealt into batches of near-equal size. Each
/// edge goes to the stage in which its later endpoint arrives, so every
/// batch edge touches a vertex new to that batch and the stages together
/// hold every canonical edge exactly once.
pub fn split_into_batches(raw: &[(Label, Label)], plan: &StreamPlan) -> Result<StreamSplit> {
    plan.validate()?;
    let lg = canonicalize(raw);
    let n = lg.graph.n();

    let order: Vec<VertexId> = match plan.vertex_order {
        VertexOrder::Input => {
            let mut seen = vec![false; n];
            let mut order = Vec::with_capacity(n);
            for &(a, b) in raw.iter().filter(|(a, b)| a != b) {
                for label in [a, b] {
                    let v = lg.labels.id(label).expect("canonicalized endpoint");
                    if !std::mem::replace(&mut seen[v as usize], true) {
                        order.push(v);
                    }
                }
            }
            order
        }
        VertexOrder::Random => {
            let mut order: Vec<VertexId> = (0..n as VertexId).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(plan.seed));
            order
        }
    };

    let bulk_n = ((plan.bulk_fraction * n as f64).ceil() as usize).min(n);
    let remaining = n - bulk_n;
    let batch_count = plan.num_batches.min(remaining);
    if plan.num_batches > remaining && remaining > 0 {
        log::warn!(
            "{} batches requested but only {remaining} vertices remain to stream; emitting {batch_count}",
            plan.num_batches
        );
    }

    // stage 0 is the bulk, stage k the k-th batch
    let mut stage = vec![0usize; n];
    let mut split = StreamSplit {
        bulk_vertices: order[..bulk_n].iter().map(|&v| lg.labels.label(v)).collect(),
        bulk_edges: Vec::new(),
        batches: vec![MicroBatch::default(); batch_count],
    };
    let mut pos = bulk_n;
    for k in 0..batch_count {
        let size = remaining / batch_count + usize::from(k < remaining % batch_count);
        for &v in &order[pos..pos + size] {
            stage[v as usize] = k + 1;
            split.batches[k].new_vertices.push(lg.labels.label(v));
        }
        pos += size;
    }

    for (u, v) in lg.graph.edges() {
        let edge = (lg.labels.label(u), lg.labels.label(v));
        match stage[u as usize].max(stage[v as usize]) {
            0 => split.bulk_edges.push(edge),
            k => split.batches[k - 1].edges.push(edge),
        }
    }
    Ok(split)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Static,
    Stream,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub dataset: String,
    pub mode: RunMode,
    pub seed: Option<u64>,
    pub config: PipelineConfig,
    pub plan: Option<StreamPlan>,
    pub compare: bool,
}

/// One epoch. Epoch 0 is the static run on the bulk graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u64,
    pub n: usize,
    pub m: usize,
    pub batch_vertices: usize,
    pub batch_edges: usize,
    pub border_vertices: usize,
    pub times: PhaseTimes,
    pub total_ms: f64,
    pub wcc_global: f64,
    pub communities: usize,
    pub iterations: usize,
    pub movements: usize,
    /// From-scratch static run on the same graph, when comparing.
    pub static_wcc: Option<f64>,
    pub static_ms: Option<f64>,
    pub static_communities: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum ReportLine {
    Header(RunHeader),
    Epoch(EpochRecord),
}

#[derive(Serialize)]
struct CsvRow {
    epoch: u64,
    n: usize,
    m: usize,
    batch_vertices: usize,
    batch_edges: usize,
    border_vertices: usize,
    merge_ms: f64,
    stats_ms: f64,
    restructure_ms: f64,
    partition_ms: f64,
    refine_ms: f64,
    total_ms: f64,
    wcc_global: f64,
    communities: usize,
    iterations: usize,
    movements: usize,
    static_wcc: Option<f64>,
    static_ms: Option<f64>,
    static_communities: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub header: RunHeader,
    pub records: Vec<EpochRecord>,
}

impl MetricsReport {
    /// Header line followed by one JSON object per epoch.
    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        serde_json::to_writer(&mut w, &ReportLine::Header(self.header.clone()))?;
        writeln!(w)?;
        for r in &self.records {
            serde_json::to_writer(&mut w, &ReportLine::Epoch(r.clone()))?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_jsonl(r: impl BufRead) -> Result<Self> {
        let mut header = None;
        let mut records = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str(&line)? {
                ReportLine::Header(h) if header.is_none() => header = Some(h),
                ReportLine::Header(_) => {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: "second report header".into(),
                    })
                }
                ReportLine::Epoch(e) => records.push(e),
            }
        }
        let header = header.ok_or_else(|| Error::Parse {
            line: 1,
            message: "report has no header".into(),
        })?;
        Ok(MetricsReport { header, records })
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.records {
            out.serialize(CsvRow {
                epoch: r.epoch,
                n: r.n,
                m: r.m,
                batch_vertices: r.batch_vertices,
                batch_edges: r.batch_edges,
                border_vertices: r.border_vertices,
                merge_ms: r.times.merge_ms,
                stats_ms: r.times.stats_ms,
                restructure_ms: r.times.restructure_ms,
                partition_ms: r.times.partition_ms,
                refine_ms: r.times.refine_ms,
                total_ms: r.total_ms,
                wcc_global: r.wcc_global,
                communities: r.communities,
                iterations: r.iterations,
                movements: r.movements,
                static_wcc: r.static_wcc,
                static_ms: r.static_ms,
                static_communities: r.static_communities,
            })?;
        }
        out.flush()?;
        Ok(())
    }

    /// Copy with every wall-time field zeroed, for determinism checks.
    pub fn without_timings(&self) -> Self {
        let mut report = self.clone();
        for r in &mut report.records {
            r.times = PhaseTimes::default();
            r.total_ms = 0.0;
            r.static_ms = r.static_ms.map(|_| 0.0);
        }
        report
    }
}

/// Report plus the final engine state, for dumping and re-scoring.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub state: EngineState,
}

/// Static detection on a whole graph; the report holds a single record.
pub fn run_static(dataset: &str, lg: LabeledGraph, cfg: &PipelineConfig) -> Result<RunOutput> {
    let (state, outcome) = EngineState::bootstrap(lg, cfg)?;
    let record = EpochRecord {
        epoch: 0,
        n: state.graph.n(),
        m: state.graph.m(),
        batch_vertices: state.graph.n(),
        batch_edges: state.graph.m(),
        border_vertices: 0,
        times: outcome.times,
        total_ms: outcome.times.total_ms(),
        wcc_global: outcome.wcc,
        communities: outcome.partition.community_count(),
        iterations: outcome.trace.iterations.len(),
        movements: outcome.trace.total_movements(),
        static_wcc: None,
        static_ms: None,
        static_communities: None,
    };
    Ok(RunOutput {
        report: MetricsReport {
            header: RunHeader {
                dataset: dataset.to_string(),
                mode: RunMode::Static,
                seed: None,
                config: *cfg,
                plan: None,
                compare: false,
            },
            records: vec![record],
        },
        state,
    })
}

/// Splits `raw` per `plan` and streams it; see [`run_split`].
pub fn run_stream(
    dataset: &str,
    raw: &[(Label, Label)],
    plan: &StreamPlan,
    cfg: &PipelineConfig,
    compare: bool,
) -> Result<RunOutput> {
    let split = split_into_batches(raw, plan)?;
    run_split(dataset, &split, Some(plan), cfg, compare)
}

/// Static run on the bulk graph, then one incremental ingest per batch.
/// With `compare`, every grown graph is also solved from scratch.
pub fn run_split(
    dataset: &str,
    split: &StreamSplit,
    plan: Option<&StreamPlan>,
    cfg: &PipelineConfig,
    compare: bool,
) -> Result<RunOutput> {
    let RunOutput { mut report, mut state } = run_static(dataset, split.bulk_graph(), cfg)?;
    report.header.mode = RunMode::Stream;
    report.header.seed = plan.map(|p| p.seed);
    report.header.plan = plan.copied();
    report.header.compare = compare;

    for (k, batch) in split.batches.iter().enumerate() {
        let epoch = k as u64 + 1;
        let with_epoch = |e: Error| Error::Epoch {
            epoch,
            source: Box::new(e),
        };
        let out = state.ingest(batch, cfg).map_err(with_epoch)?;
        let mut record = EpochRecord {
            epoch: out.epoch,
            n: state.graph.n(),
            m: state.graph.m(),
            batch_vertices: out.new_vertices,
            batch_edges: out.new_edges,
            border_vertices: out.border_vertices,
            times: out.times,
            total_ms: out.times.total_ms(),
            wcc_global: out.wcc,
            communities: state.partition.community_count(),
            iterations: out.trace.iterations.len(),
            movements: out.trace.total_movements(),
            static_wcc: None,
            static_ms: None,
            static_communities: None,
        };
        if compare {
            let fresh = detect_static(&state.graph, cfg).map_err(with_epoch)?;
            record.static_wcc = Some(fresh.wcc);
            record.static_ms = Some(fresh.times.total_ms());
            record.static_communities = Some(fresh.partition.community_count());
        }
        log::info!(
            "epoch {epoch}: n={} m={} wcc={:.6} in {:.1} ms",
            record.n,
            record.m,
            record.wcc_global,
            record.total_ms
        );
        report.records.push(record);
    }
    Ok(RunOutput { report, state })
}

/// Writes `label<TAB>community` for every vertex, sorted by label.
/// Communities are numbered 0, 1, ... in order of first appearance.
pub fn dump_communities(p: &Partition, labels: &LabelMap, mut sink: impl Write) -> Result<()> {
    if p.n() != labels.len() {
        return Err(Error::contract("partition and label map sizes differ"));
    }
    let mut by_label: Vec<(Label, VertexId)> = (0..p.n() as VertexId).map(|v| (labels.label(v), v)).collect();
    by_label.sort_unstable();
    let mut dense: HashMap<CommunityId, usize> = HashMap::new();
    for (label, v) in by_label {
        let next = dense.len();
        let id = *dense.entry(p.community_of(v)).or_insert(next);
        writeln!(sink, "{label}\t{id}")?;
    }
    Ok(())
}

/// Reads a dump back into a partition over `labels`. Every vertex must be
/// listed exactly once.
pub fn read_communities(r: impl BufRead, labels: &LabelMap) -> Result<Partition> {
    let mut assignment: Vec<Option<CommunityId>> = vec![None; labels.len()];
    let mut seen = HashSet::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let bad = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        let mut tokens = trimmed.split('\t');
        let (Some(label), Some(community), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(bad(format!("expected `label<TAB>community`, got `{trimmed}`")));
        };
        let label = parse_label(label.trim(), lineno)?;
        let community: u32 = community
            .trim()
            .parse()
            .map_err(|_| bad(format!("invalid community id `{community}`")))?;
        let v = labels
            .id(label)
            .ok_or_else(|| bad(format!("label {label} is not in the graph")))?;
        if !seen.insert(v) {
            return Err(bad(format!("label {label} listed twice")));
        }
        assignment[v as usize] = Some(CommunityId(community));
    }
    let assignment = assignment
        .into_iter()
        .enumerate()
        .map(|(v, c)| c.ok_or_else(|| Error::contract(format!("label {} has no community", labels.label(v as VertexId)))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Partition::from_assignment(assignment))
}

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use wcc_core::engine::PipelineConfig;
use wcc_core::graph::{canonicalize, read_edge_list, Label};
use wcc_core::metric::wcc_global;
use wcc_core::oracle::{wcc_global_oracle, DEFAULT_ORACLE_CAP};
use wcc_core::refine::GainMode;
use wcc_core::stats::{compute_global_stats, compute_vertex_stats};
use wcc_core::stream::{
    dump_communities, read_communities, run_split, run_static, split_into_batches, RunOutput, StreamPlan, StreamSplit,
    VertexOrder,
};

/// Triangle-based (WCC) community detection on static and growing graphs.
#[derive(Parser, Debug)]
#[command(name = "wcc", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<NonZeroUsize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print vertex, edge and triangle counts and the mean clustering coefficient.
    Stats {
        /// SNAP edge list, or `-` for stdin.
        input: PathBuf,
    },
    /// Detect communities on a whole graph.
    Detect {
        input: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        outputs: OutputArgs,
    },
    /// Cut an edge list into a bulk graph and node-grained micro-batches.
    Split {
        input: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
        /// Where to write the split (`-` for stdout).
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Detect on the bulk graph, then maintain communities batch by batch.
    Stream {
        /// SNAP edge list to split with the plan options.
        #[arg(required_unless_present = "split")]
        input: Option<PathBuf>,
        /// Use a split written by `wcc split` instead of an edge list.
        #[arg(long, conflicts_with = "input")]
        split: Option<PathBuf>,
        #[command(flatten)]
        plan: PlanArgs,
        /// Also solve every grown graph from scratch and record both series.
        #[arg(long)]
        compare: bool,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        outputs: OutputArgs,
    },
    /// Score a community dump against a graph.
    Score {
        input: PathBuf,
        /// `label<TAB>community` file, as written by `--communities`.
        communities: PathBuf,
        /// Cross-check with the brute-force scorer (small graphs only).
        #[arg(long)]
        oracle: bool,
    },
}

#[derive(Args, Debug)]
struct PipelineArgs {
    /// Refinement iterations per run or batch.
    #[arg(long, default_value_t = 5)]
    max_iterations: usize,
    /// `exact` or `heuristic` movement gains.
    #[arg(long, default_value = "exact")]
    gain_mode: GainMode,
    /// Relative WCC improvement below which static refinement stops.
    #[arg(long, default_value_t = 1e-3)]
    threshold: f64,
    /// Upper bound on center-refinement rounds.
    #[arg(long, default_value_t = 10)]
    center_rounds: usize,
}

impl PipelineArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            max_iterations: self.max_iterations,
            gain_mode: self.gain_mode,
            improvement_threshold: self.threshold,
            center_rounds: self.center_rounds,
        }
    }
}

#[derive(Args, Debug)]
struct PlanArgs {
    /// Share of vertices in the initial bulk graph, in (0, 1].
    #[arg(long, default_value_t = 0.75)]
    bulk_fraction: f64,
    #[arg(long, default_value_t = 10)]
    batches: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Vertex arrival order: `random` or `input`.
    #[arg(long, default_value = "random")]
    order: VertexOrder,
}

impl PlanArgs {
    fn plan(&self) -> StreamPlan {
        StreamPlan {
            bulk_fraction: self.bulk_fraction,
            num_batches: self.batches,
            seed: self.seed,
            vertex_order: self.order,
        }
    }
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Community dump, `label<TAB>community` per line.
    #[arg(long)]
    communities: Option<PathBuf>,
    /// Metrics as one JSON object per line.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Metrics as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if path == Path::new("-") {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(Box::new(BufReader::new(file)))
}

fn create_output(path: &Path) -> Result<Box<dyn Write>> {
    if path == Path::new("-") {
        return Ok(Box::new(BufWriter::new(io::stdout())));
    }
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(Box::new(BufWriter::new(file)))
}

fn read_edges(path: &Path) -> Result<Vec<(Label, Label)>> {
    read_edge_list(open_input(path)?).with_context(|| format!("reading {}", path.display()))
}

fn write_outputs(run: &RunOutput, outputs: &OutputArgs) -> Result<()> {
    if let Some(path) = &outputs.communities {
        let mut w = create_output(path)?;
        dump_communities(&run.state.partition, &run.state.labels, &mut w)?;
        w.flush()?;
    }
    if let Some(path) = &outputs.metrics {
        let mut w = create_output(path)?;
        run.report.write_jsonl(&mut w)?;
        w.flush()?;
    }
    if let Some(path) = &outputs.csv {
        let mut w = create_output(path)?;
        run.report.write_csv(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn summarize(run: &RunOutput) {
    for r in &run.report.records {
        let mut line = format!(
            "epoch {:>3}  n {:>9}  m {:>10}  communities {:>8}  wcc {:.6}  {:>10.1} ms",
            r.epoch, r.n, r.m, r.communities, r.wcc_global, r.total_ms
        );
        if let (Some(w), Some(ms)) = (r.static_wcc, r.static_ms) {
            line.push_str(&format!("  | from scratch wcc {w:.6}  {ms:>10.1} ms"));
        }
        println!("{line}");
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads.get())
            .build_global()
            .context("configuring the worker pool")?;
    }

    match cli.command {
        Command::Stats { input } => {
            let lg = canonicalize(&read_edges(&input)?);
            let stats = compute_vertex_stats(&lg.graph);
            let global = compute_global_stats(&stats);
            println!("vertices\t{}", lg.graph.n());
            println!("edges\t{}", lg.graph.m());
            println!("triangles\t{}", global.total_triangles);
            println!("mean_clustering\t{:.6}", global.omega);
        }
        Command::Detect { input, pipeline, outputs } => {
            let lg = canonicalize(&read_edges(&input)?);
            let run = run_static(&input.display().to_string(), lg, &pipeline.config())?;
            summarize(&run);
            write_outputs(&run, &outputs)?;
        }
        Command::Split { input, plan, output } => {
            let split = split_into_batches(&read_edges(&input)?, &plan.plan())?;
            let mut w = create_output(&output)?;
            split.write_to(&mut w)?;
            w.flush()?;
            eprintln!(
                "bulk: {} vertices, {} edges; {} batches carrying {} vertices and {} edges",
                split.bulk_vertices.len(),
                split.bulk_edges.len(),
                split.batches.len(),
                split.batches.iter().map(|b| b.new_vertices.len()).sum::<usize>(),
                split.streamed_edges()
            );
        }
        Command::Stream { input, split, plan, compare, pipeline, outputs } => {
            let cfg = pipeline.config();
            let run = match (input, split) {
                (_, Some(path)) => {
                    let split = StreamSplit::read_from(open_input(&path)?)
                        .with_context(|| format!("reading {}", path.display()))?;
                    run_split(&path.display().to_string(), &split, None, &cfg, compare)?
                }
                (Some(path), None) => {
                    let plan = plan.plan();
                    let split = split_into_batches(&read_edges(&path)?, &plan)?;
                    run_split(&path.display().to_string(), &split, Some(&plan), &cfg, compare)?
                }
                (None, None) => bail!("an input edge list or --split is required"),
            };
            summarize(&run);
            write_outputs(&run, &outputs)?;
        }
        Command::Score { input, communities, oracle } => {
            let lg = canonicalize(&read_edges(&input)?);
            let p = read_communities(open_input(&communities)?, &lg.labels)
                .with_context(|| format!("reading {}", communities.display()))?;
            let stats = compute_vertex_stats(&lg.graph);
            println!("communities\t{}", p.community_count());
            println!("wcc\t{:.12}", wcc_global(&p, &lg.graph, &stats));
            if oracle {
                if lg.graph.n() > DEFAULT_ORACLE_CAP {
                    bail!("--oracle is limited to {DEFAULT_ORACLE_CAP} vertices");
                }
                println!("wcc_oracle\t{:.12}", wcc_global_oracle(&p, &lg.graph)?);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage_error = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(u8::from(usage_error));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            // Bad option values surface as configuration errors.
            match e.downcast_ref::<wcc_core::Error>() {
                Some(wcc_core::Error::Config(_)) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

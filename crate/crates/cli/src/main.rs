use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use congest_core::distk::{build_reduction, random_instance};
use congest_core::engine::{BandwidthConfig, CongestionMode};
use congest_core::graph::{Graph, GraphKind};
use congest_core::sweep::{
    apsp_record, distk_record, mssp_record, mst_record, sweep, write_outputs, Instance, Problem, Record, SweepSpec,
};

#[derive(Parser)]
#[command(name = "congestbench", version, about = "Bandwidth experiments on a CONGEST_B simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Per-edge, per-direction capacity in bits per round.
    #[arg(long)]
    bandwidth_bits: u64,
    /// Word width; defaults to the id width of the instance.
    #[arg(long)]
    word_bits: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    csv: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// All pairs shortest paths on an unweighted graph.
    Apsp {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Minimum spanning tree on a graph with distinct weights.
    Mst {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Bounded-hop distances from a random skeleton.
    Mssp {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        sources: usize,
        #[arg(long)]
        hops: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Distance_k on a random pointer-chasing reduction.
    Distk {
        #[arg(long)]
        pointers: u32,
        #[arg(long)]
        k: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Run one problem over a list of bandwidths and classify it.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Apsp,
    Mst,
    Mssp,
    Distk,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Path,
    Star,
    Grid,
    ErdosRenyi,
    TreePlusChords,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    problem: ProblemArg,
    #[arg(long, value_enum)]
    graph_kind: Option<KindArg>,
    #[arg(long)]
    n: Option<u32>,
    /// Edge probability for erdos-renyi.
    #[arg(long, default_value_t = 0.01)]
    edge_prob: f64,
    /// Extra edges for tree-plus-chords; defaults to n/8.
    #[arg(long)]
    chords: Option<u32>,
    #[arg(long)]
    pointers: Option<u32>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long, default_value_t = 16)]
    sources: usize,
    #[arg(long, default_value_t = 12)]
    hops: u32,
    #[arg(long, value_delimiter = ',', required = true)]
    bandwidth_bits: Vec<u64>,
    #[arg(long)]
    word_bits: u32,
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<u64>,
    #[arg(long)]
    out: PathBuf,
}

fn read_graph(path: &Path) -> Result<Graph> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Graph::read_text(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn config(g: &Graph, common: &Common) -> Result<BandwidthConfig> {
    let w = common.word_bits.unwrap_or_else(|| g.id_bits());
    Ok(BandwidthConfig::new(w, common.bandwidth_bits, CongestionMode::Strict)?)
}

fn write_record(path: &Path, columns: &str, rec: &Record) -> Result<()> {
    std::fs::write(path, format!("{columns}\n{}\n", rec.row)).with_context(|| format!("writing {}", path.display()))?;
    println!("{columns}\n{}", rec.row);
    if !rec.correct {
        bail!("result disagrees with the oracle");
    }
    Ok(())
}

fn graph_kind(args: &SweepArgs) -> Result<GraphKind> {
    let (Some(kind), Some(n)) = (args.graph_kind, args.n) else {
        bail!("--graph-kind and --n are required for graph problems");
    };
    Ok(match kind {
        KindArg::Path => GraphKind::Path { n },
        KindArg::Star => GraphKind::Star { n },
        KindArg::ErdosRenyi => GraphKind::ErdosRenyi { n, p: args.edge_prob },
        KindArg::TreePlusChords => GraphKind::TreePlusChords {
            n,
            chords: args.chords.unwrap_or(n / 8),
        },
        KindArg::Grid => {
            let side = (f64::from(n).sqrt().round() as u32).max(1);
            GraphKind::Grid { rows: side, cols: n.div_ceil(side) }
        }
    })
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    let problem = match args.problem {
        ProblemArg::Apsp => Problem::Apsp,
        ProblemArg::Mst => Problem::Mst,
        ProblemArg::Mssp => Problem::Mssp,
        ProblemArg::Distk => Problem::Distk,
    };
    let instance = match problem {
        Problem::Distk => {
            let (Some(p), Some(k)) = (args.pointers, args.k) else {
                bail!("--pointers and --k are required for distk");
            };
            Instance::Pointers { p, k }
        }
        _ => Instance::Graph(graph_kind(args)?),
    };
    let xs = args
        .bandwidth_bits
        .iter()
        .map(|&b| match b / u64::from(args.word_bits.max(1)) {
            0 => bail!("bandwidth {b} is narrower than one {}-bit word", args.word_bits),
            x => Ok(x),
        })
        .collect::<Result<Vec<_>>>()?;
    let spec = SweepSpec {
        word_bits: Some(args.word_bits),
        sources: args.sources,
        hops: args.hops,
        ..SweepSpec::new(problem, instance, xs, args.seeds.clone())
    };
    let out = sweep(&spec)?;
    write_outputs(&out, &args.out)?;
    let r = &out.report;
    println!("problem={} graph={} D={}", r.problem, r.graph, r.diameter);
    for p in &r.points {
        let mark = if p.fitted { "" } else { " (excluded from fit)" };
        println!("X={} B={} rounds={} speedup={:.3}{mark}", p.words_per_round, p.bandwidth_bits, p.rounds_used, p.speedup);
    }
    println!("beta={:.4} class={}", r.beta, r.class);
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Apsp { graph, common } => {
            let g = read_graph(&graph)?;
            let rec = apsp_record(&g, &config(&g, &common)?, common.seed)?;
            write_record(&common.csv, Problem::Apsp.columns(), &rec)
        }
        Command::Mst { graph, common } => {
            let g = read_graph(&graph)?;
            let rec = mst_record(&g, &config(&g, &common)?, common.seed)?;
            write_record(&common.csv, Problem::Mst.columns(), &rec)
        }
        Command::Mssp { graph, sources, hops, common } => {
            let g = read_graph(&graph)?;
            let rec = mssp_record(&g, sources, hops, &config(&g, &common)?, common.seed)?;
            write_record(&common.csv, Problem::Mssp.columns(), &rec)
        }
        Command::Distk { pointers, k, common } => {
            let red = build_reduction(&random_instance(pointers, k, common.seed))?;
            let rec = distk_record(&red, &config(&red.graph, &common)?)?;
            write_record(&common.csv, Problem::Distk.columns(), &rec)
        }
        Command::Sweep(args) => run_sweep(&args),
    }
}

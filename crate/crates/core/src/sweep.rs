//! Bandwidth sweeps: run one problem at several widths, check every run
//! against its oracle, and fit `rounds ~ X^beta` to classify the problem.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::apsp::{run_apsp, ApspError};
use crate::distk::{bridge_bits, build_reduction, random_instance, run_distance_k, DistkError, ReductionInstance};
use crate::engine::{BandwidthConfig, CongestionMode, EngineError};
use crate::graph::{apsp_oracle, generate, hop_limited_distances, mst_oracle, Graph, GraphError, GraphKind};
use crate::mst::{run_mst, MstError};
use crate::sssp::{bounded_hop_mssp, predicted_delay_interval, sample_skeleton, SsspError};

/// Largest exponent still called bandwidth efficient.
pub const EFFICIENT_MAX_BETA: f64 = -0.75;
/// Largest exponent still called bandwidth sensitive.
pub const SENSITIVE_MAX_BETA: f64 = -0.2;
/// Rows count toward the fit only when `rounds_used >= DIAMETER_FACTOR * D`.
pub const DIAMETER_FACTOR: u64 = 4;

pub const APSP_COLUMNS: &str = "n,D,B,X,rounds_used,correct";
pub const MST_COLUMNS: &str = "n,D,B,X,k,fragments,rounds_fragment,rounds_pipeline,rounds_total,correct";
pub const MSSP_COLUMNS: &str = "n,alpha,h,B,X,delta,rounds_used,max_edge_words,overflow_words,correct";
pub const DISTK_COLUMNS: &str = "p,n,k,B,X,rounds_used,bridge_bits,correct";

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    BadParameters(String),
    #[error("{problem} run at X={x}, seed {seed} disagrees with the oracle")]
    Incorrect { problem: Problem, x: u64, seed: u64 },
    #[error("fewer than two rows are congestion dominated (rounds >= {DIAMETER_FACTOR}*D)")]
    NoRegime,
    #[error(transparent)]
    Apsp(#[from] ApspError),
    #[error(transparent)]
    Mst(#[from] MstError),
    #[error(transparent)]
    Sssp(#[from] SsspError),
    #[error(transparent)]
    Distk(#[from] DistkError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Apsp,
    Mst,
    Mssp,
    Distk,
}

impl Problem {
    pub fn columns(self) -> &'static str {
        match self {
            Problem::Apsp => APSP_COLUMNS,
            Problem::Mst => MST_COLUMNS,
            Problem::Mssp => MSSP_COLUMNS,
            Problem::Distk => DISTK_COLUMNS,
        }
    }

    /// Only the skeleton sampling and the delays are random.
    pub fn randomized(self) -> bool {
        self == Problem::Mssp
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Problem::Apsp => "apsp",
            Problem::Mst => "mst",
            Problem::Mssp => "mssp",
            Problem::Distk => "distk",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthClass {
    Efficient,
    Sensitive,
    Insensitive,
}

impl fmt::Display for BandwidthClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BandwidthClass::Efficient => "efficient",
            BandwidthClass::Sensitive => "sensitive",
            BandwidthClass::Insensitive => "insensitive",
        })
    }
}

pub fn classify(beta: f64) -> BandwidthClass {
    if beta <= EFFICIENT_MAX_BETA {
        BandwidthClass::Efficient
    } else if beta <= SENSITIVE_MAX_BETA {
        BandwidthClass::Sensitive
    } else {
        BandwidthClass::Insensitive
    }
}

/// Least-squares slope of `ln rounds` against `ln x`. `None` with fewer
/// than two distinct widths.
pub fn fit_beta(points: &[(u64, u64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, t)| ((x as f64).ln(), (t.max(1) as f64).ln()))
        .collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (logs.len() >= 2 && sxx > 0.0).then(|| sxy / sxx)
}

/// One oracle-checked run, formatted as a CSV row of its problem's schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub rounds_used: u64,
    pub correct: bool,
    /// No channel carried more than `B` bits in any round.
    pub within_capacity: bool,
    pub row: String,
}

fn row(fields: &[&dyn fmt::Display]) -> String {
    fields.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(",")
}

pub fn apsp_record(g: &Graph, cfg: &BandwidthConfig, seed: u64) -> Result<Record, SweepError> {
    let run = run_apsp(g, cfg, seed)?;
    let correct = run.table.mismatches(&apsp_oracle(g)).is_empty();
    let t = run.trace.rounds_used;
    Ok(Record {
        rounds_used: t,
        correct,
        within_capacity: run.trace.capacity_respected(),
        row: row(&[&g.n(), &g.diameter(), &cfg.capacity_bits(), &cfg.words_per_round(), &t, &correct]),
    })
}

pub fn mst_record(g: &Graph, cfg: &BandwidthConfig, seed: u64) -> Result<Record, SweepError> {
    let run = run_mst(g, cfg, seed)?;
    let correct = run.edges() == mst_oracle(g)?;
    Ok(Record {
        rounds_used: run.rounds_total,
        correct,
        within_capacity: run.trace.capacity_respected(),
        row: row(&[
            &g.n(),
            &g.diameter(),
            &cfg.capacity_bits(),
            &cfg.words_per_round(),
            &run.k,
            &run.fragments,
            &run.rounds_fragment,
            &run.rounds_pipeline,
            &run.rounds_total,
            &correct,
        ]),
    })
}

/// Skeleton of `alpha` nodes around the smallest id, delays from the
/// predicted interval. The seed drives both.
pub fn mssp_record(g: &Graph, alpha: usize, h: u32, cfg: &BandwidthConfig, seed: u64) -> Result<Record, SweepError> {
    let cfg = cfg.with_mode(CongestionMode::Queue);
    let skeleton = sample_skeleton(g, g.ids()[0], alpha, seed)?;
    let delta = predicted_delay_interval(alpha as u64, g.n() as u64, cfg.capacity_bits())?;
    let run = bounded_hop_mssp(g, &skeleton, h, delta, &cfg, seed)?;
    let correct = run.distances == hop_limited_distances(g, &skeleton.nodes, h)?;
    let t = run.trace.rounds_used;
    Ok(Record {
        rounds_used: t,
        correct,
        within_capacity: run.trace.capacity_respected(),
        row: row(&[
            &g.n(),
            &alpha,
            &h,
            &cfg.capacity_bits(),
            &cfg.words_per_round(),
            &delta,
            &t,
            &run.congestion.max_edge_words,
            &run.congestion.overflow_words,
            &correct,
        ]),
    })
}

pub fn distk_record(red: &ReductionInstance, cfg: &BandwidthConfig) -> Result<Record, SweepError> {
    let k = red.pointers.k;
    let run = run_distance_k(&red.graph, &red.overlay, red.start(), k, cfg)?;
    let correct = run.answer == red.pointers.follow();
    let t = run.trace.rounds_used;
    Ok(Record {
        rounds_used: t,
        correct,
        within_capacity: run.trace.capacity_respected(),
        row: row(&[
            &red.pointers.p,
            &red.graph.n(),
            &k,
            &cfg.capacity_bits(),
            &cfg.words_per_round(),
            &t,
            &bridge_bits(red, &run.trace),
            &correct,
        ]),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Instance {
    Graph(GraphKind),
    Pointers { p: u32, k: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub problem: Problem,
    pub instance: Instance,
    pub words_per_round: Vec<u64>,
    /// Defaults to the instance's id width.
    pub word_bits: Option<u32>,
    pub seeds: Vec<u64>,
    /// Skeleton size for mssp.
    pub sources: usize,
    /// Hop bound for mssp.
    pub hops: u32,
}

impl SweepSpec {
    pub fn new(problem: Problem, instance: Instance, words_per_round: Vec<u64>, seeds: Vec<u64>) -> Self {
        Self {
            problem,
            instance,
            words_per_round,
            word_bits: None,
            seeds,
            sources: 16,
            hops: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub words_per_round: u64,
    pub bandwidth_bits: u64,
    /// Median over seeds for randomized problems.
    pub rounds_used: u64,
    /// Rounds at the smallest width divided by rounds here.
    pub speedup: f64,
    pub fitted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub problem: Problem,
    pub graph: String,
    pub diameter: u64,
    pub points: Vec<SweepPoint>,
    pub beta: f64,
    pub class: BandwidthClass,
}

impl SweepReport {
    /// Widths left out of the fit because the diameter term dominates.
    pub fn excluded(&self) -> Vec<u64> {
        self.points.iter().filter(|p| !p.fitted).map(|p| p.words_per_round).collect()
    }

    pub fn summary_json(&self) -> String {
        let v = serde_json::json!({
            "problem": self.problem,
            "graph": self.graph,
            "diameter": self.diameter,
            "beta": self.beta,
            "class": self.class,
            "thresholds": { "efficient_max_beta": EFFICIENT_MAX_BETA, "sensitive_max_beta": SENSITIVE_MAX_BETA },
            "excluded_x": self.excluded(),
            "points": self.points,
        });
        serde_json::to_string_pretty(&v).expect("report serializes") + "\n"
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub report: SweepReport,
    /// `seed,` followed by the problem's columns, one line per run.
    pub rows_csv: String,
    pub within_capacity: bool,
}

fn check_spec(spec: &SweepSpec) -> Result<(), SweepError> {
    let xs = &spec.words_per_round;
    if xs.len() < 4 {
        return Err(SweepError::BadParameters("need at least four widths".into()));
    }
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SweepError::BadParameters("widths must be strictly increasing".into()));
    }
    if spec.seeds.len() < 3 {
        return Err(SweepError::BadParameters("need at least three seeds".into()));
    }
    match (spec.problem, spec.instance) {
        (Problem::Distk, Instance::Pointers { .. }) => Ok(()),
        (Problem::Distk, _) => Err(SweepError::BadParameters("distk sweeps take a pointer instance".into())),
        (_, Instance::Graph(_)) => Ok(()),
        (p, _) => Err(SweepError::BadParameters(format!("{p} sweeps take a graph"))),
    }
}

/// Runs every width (and every seed, for randomized problems), aborts on the
/// first oracle mismatch, and fits the exponent over congestion-dominated rows.
pub fn sweep(spec: &SweepSpec) -> Result<SweepOutput, SweepError> {
    check_spec(spec)?;
    let seeds: &[u64] = if spec.problem.randomized() { &spec.seeds } else { &spec.seeds[..1] };
    let base_seed = spec.seeds[0];

    let (graph, reduction, label) = match spec.instance {
        Instance::Graph(kind) => {
            let g = generate(kind, base_seed, spec.problem == Problem::Mst)?;
            (g, None, kind.to_string())
        }
        Instance::Pointers { p, k } => {
            let red = build_reduction(&random_instance(p, k, base_seed))?;
            (red.graph.clone(), Some(red), format!("pointer-reduction(p={p},k={k})"))
        }
    };
    let w = spec.word_bits.unwrap_or_else(|| graph.id_bits());
    let diameter = u64::from(graph.diameter());

    let mut csv = format!("seed,{}\n", spec.problem.columns());
    let mut points = Vec::new();
    let mut within_capacity = true;
    for &x in &spec.words_per_round {
        let cfg = BandwidthConfig::from_words(w, x, CongestionMode::Strict)?;
        let mut rounds = Vec::new();
        for &seed in seeds {
            let rec = match spec.problem {
                Problem::Apsp => apsp_record(&graph, &cfg, seed)?,
                Problem::Mst => mst_record(&graph, &cfg, seed)?,
                Problem::Mssp => mssp_record(&graph, spec.sources, spec.hops, &cfg, seed)?,
                Problem::Distk => distk_record(reduction.as_ref().expect("pointer instance"), &cfg)?,
            };
            if !rec.correct {
                return Err(SweepError::Incorrect { problem: spec.problem, x, seed });
            }
            within_capacity &= rec.within_capacity;
            csv.push_str(&format!("{seed},{}\n", rec.row));
            rounds.push(rec.rounds_used);
        }
        rounds.sort_unstable();
        let t = rounds[(rounds.len() - 1) / 2];
        points.push(SweepPoint {
            words_per_round: x,
            bandwidth_bits: cfg.capacity_bits(),
            rounds_used: t,
            speedup: 0.0,
            fitted: t >= DIAMETER_FACTOR * diameter,
        });
    }
    let t0 = points[0].rounds_used.max(1) as f64;
    for p in &mut points {
        p.speedup = t0 / p.rounds_used.max(1) as f64;
    }
    let fit: Vec<(u64, u64)> = points
        .iter()
        .filter(|p| p.fitted)
        .map(|p| (p.words_per_round, p.rounds_used))
        .collect();
    let beta = fit_beta(&fit).ok_or(SweepError::NoRegime)?;
    Ok(SweepOutput {
        report: SweepReport {
            problem: spec.problem,
            graph: label,
            diameter,
            points,
            beta,
            class: classify(beta),
        },
        rows_csv: csv,
        within_capacity,
    })
}

/// Two columns, bandwidth in bits and rounds used.
pub fn emit_figure_data(report: &SweepReport, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "# B rounds_used")?;
    for p in &report.points {
        writeln!(out, "{} {}", p.bandwidth_bits, p.rounds_used)?;
    }
    Ok(())
}

/// Writes `rows.csv`, `summary.json` and `figure.dat` into `dir`.
pub fn write_outputs(out: &SweepOutput, dir: &Path) -> Result<(), SweepError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("rows.csv"), &out.rows_csv)?;
    std::fs::write(dir.join("summary.json"), out.report.summary_json())?;
    let mut fig = Vec::new();
    emit_figure_data(&out.report, &mut fig)?;
    std::fs::write(dir.join("figure.dat"), fig)?;
    Ok(())
}

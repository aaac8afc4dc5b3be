//! Argument parsing and subcommand handlers.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use slod::baselines::{eigengap_k, greedy_modularity, louvain, modularity};
use slod::boundary::{
    boundary_scan, default_graph_embedding, Mix, ScaleGrid, ScanConfig, DEFAULT_CHURN_K,
    DEFAULT_GRID_POINTS, DEFAULT_PEAK_ALPHA,
};
use slod::geometry::PoincarePoint;
use slod::graph::io::{
    read_edge_list, read_embedding, read_partition, read_tree, write_edge_list, write_embedding,
    write_partition,
};
use slod::graph::{
    generate_hsbm, knn_graph, sarkar_embed_tree, tree_distortion, Bandwidth, HsbmSpec, Partition,
    SparseGraph,
};
use slod::metrics::{ari, vi};
use slod::spectral::{spectral_clustering, SpectralDecomposition, DEFAULT_EIGS};
use slod::Error;

use crate::experiments::{decompose, highest_degree_node, ingest, sweep};

/// Failure carrying the process exit code. `error` is `None` when the
/// message has already been printed.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: Option<anyhow::Error>,
}

/// Exit code for a library error: 2 for invalid input, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Io(_)) | Some(Error::NoConvergence(_)) => 1,
        Some(_) => 2,
        None if err.chain().any(|e| e.is::<Invalid>()) => 2,
        None => 1,
    }
}

/// Validation failure detected by the front end.
#[derive(Debug)]
struct Invalid(String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn invalid<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(Invalid(msg.into()).into())
}

#[derive(Debug, Parser)]
#[command(
    name = "slod",
    version,
    about = "Multi-scale summaries and scale boundaries on graphs and hyperbolic embeddings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a hierarchical stochastic block model.
    Hsbm(HsbmArgs),
    /// Scan one focus for scale boundaries.
    Scan(ScanArgs),
    /// Spectral clustering ARI across ratios and seeds.
    Sweep(SweepArgs),
    /// Partition a graph.
    Cluster(ClusterArgs),
    /// Scan many foci of an external embedding.
    Ingest(IngestArgs),
    /// Embed a weighted tree in the Poincaré disk.
    TreeEmbed(TreeEmbedArgs),
    /// Score a partition against a reference.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct HsbmArgs {
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    /// Within-to-between rate ratio.
    #[arg(long, default_value_t = 80.0)]
    pub r: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output prefix for `.edges`, `.macro`, `.meso` and `.micro`.
    #[arg(long, default_value = "hsbm")]
    pub out: PathBuf,
}

/// Scan settings shared by `scan` and `ingest`.
#[derive(Debug, Args)]
pub struct ScanFlags {
    #[arg(long, default_value_t = DEFAULT_EIGS)]
    pub k_eigs: usize,
    /// Neighbourhood size for churn and for kNN graphs.
    #[arg(long, default_value_t = DEFAULT_CHURN_K)]
    pub knn: usize,
    /// Fixed kNN kernel bandwidth; median heuristic when absent.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub grid_min: Option<f64>,
    #[arg(long)]
    pub grid_max: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub grid_points: usize,
    /// Mode survival threshold in K*.
    #[arg(long, default_value_t = (-1.0f64).exp())]
    pub eps: f64,
    #[arg(long, default_value_t = 2.0)]
    pub gap_ratio: f64,
    /// Peak threshold multiplier.
    #[arg(long, default_value_t = DEFAULT_PEAK_ALPHA)]
    pub alpha: f64,
    /// Indicator weights `velocity,divergence,churn`.
    #[arg(long, value_delimiter = ',', num_args = 1..=3)]
    pub mix: Option<Vec<f64>>,
}

impl ScanFlags {
    pub fn config(&self) -> anyhow::Result<ScanConfig<f64>> {
        let mut cfg = ScanConfig::default();
        cfg.thresholds.mode_threshold = self.eps;
        cfg.thresholds.gap_ratio = self.gap_ratio;
        cfg.alpha = self.alpha;
        cfg.knn = self.knn;
        if let Some(m) = &self.mix {
            let &[v, d, c] = m.as_slice() else {
                return invalid(format!("--mix takes 3 weights, got {}", m.len()));
            };
            cfg.mix = Mix::new(v, d, c)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid(&self, dec: &SpectralDecomposition<f64>) -> anyhow::Result<ScaleGrid<f64>> {
        Ok(match (self.grid_min, self.grid_max) {
            (Some(lo), Some(hi)) => ScaleGrid::log_spaced(lo, hi, self.grid_points)?,
            (None, None) => ScaleGrid::for_spectrum(dec, self.grid_points)?,
            _ => return invalid("--grid-min and --grid-max must be given together"),
        })
    }

    fn bandwidth(&self) -> anyhow::Result<Bandwidth<f64>> {
        match self.tau {
            None => Ok(Bandwidth::Auto),
            Some(t) if t > 0.0 && t.is_finite() => Ok(Bandwidth::Fixed(t)),
            Some(t) => invalid(format!("--tau must be positive, got {t}")),
        }
    }
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Edge list; built from the embedding by kNN when absent.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Points in the ball; commute-time eigenmap of the graph when absent.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    /// Focus node; highest-degree node when absent.
    #[arg(long)]
    pub focus: Option<usize>,
    #[command(flatten)]
    pub scan: ScanFlags,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', default_value = "20,40,60,80,100,150,200")]
    pub r: Vec<f64>,
    /// Graphs per ratio.
    #[arg(long, default_value_t = 10)]
    pub seeds: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_EIGS)]
    pub k_eigs: usize,
    /// Output prefix for `.csv` and `.json`; CSV on stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Spectral,
    Louvain,
    Greedy,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Spectral)]
    pub method: Method,
    /// Cluster count for spectral clustering; eigengap choice when absent.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_EIGS)]
    pub k_eigs: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Partition path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub embedding: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
    /// Comma-separated focus ids; nothing is scanned when empty.
    #[arg(long, value_delimiter = ',')]
    pub focus: Vec<usize>,
    /// Node depths, `id<TAB>depth` per line.
    #[arg(long)]
    pub depths: Option<PathBuf>,
    #[command(flatten)]
    pub scan: ScanFlags,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TreeEmbedArgs {
    /// Tree file, `child<TAB>parent<TAB>weight` per line.
    #[arg(long)]
    pub tree: PathBuf,
    /// Hyperbolic length of a unit-weight edge.
    #[arg(long, default_value_t = 3.0)]
    pub scale: f64,
    /// Embedding path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Graph for modularity of the prediction.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// JSON path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    let f = File::open(path)
        .map_err(Error::from)
        .with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path)
        .map_err(Error::from)
        .with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Writes through `f` to `path`, or to stdout when `path` is `None`.
fn emit(
    path: Option<&Path>,
    f: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w)?;
            w.flush().map_err(Error::from)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush().map_err(Error::from)?;
        }
    }
    Ok(())
}

fn emit_json<S: Serialize>(path: Option<&Path>, value: &S) -> anyhow::Result<()> {
    emit(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w).map_err(Error::from)?;
        Ok(())
    })
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_graph(path: &Path) -> anyhow::Result<SparseGraph<f64>> {
    read_edge_list(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn load_points(path: &Path) -> anyhow::Result<Vec<PoincarePoint<f64>>> {
    read_embedding(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn load_partition(path: &Path) -> anyhow::Result<Partition> {
    read_partition(open(path)?).with_context(|| format!("reading {}", path.display()))
}

/// Depth per node from `id<TAB>depth` lines.
pub fn read_depths(path: &Path, n: usize) -> anyhow::Result<Vec<usize>> {
    let text = std::fs::read_to_string(path)
        .map_err(Error::from)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut depths = vec![None; n];
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        let parsed = match f.as_slice() {
            [id, d] => id.parse::<usize>().ok().zip(d.parse::<usize>().ok()),
            _ => None,
        };
        let Some((id, d)) = parsed else {
            return invalid(format!("{}:{}: expected `id depth`", path.display(), i + 1));
        };
        if id >= n {
            return invalid(format!(
                "{}:{}: id {id} out of range for {n} nodes",
                path.display(),
                i + 1
            ));
        }
        depths[id] = Some(d);
    }
    match depths.iter().position(Option::is_none) {
        Some(v) => invalid(format!("{}: no depth for node {v}", path.display())),
        None => Ok(depths.into_iter().map(Option::unwrap).collect()),
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Hsbm(a) => cmd_hsbm(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Ingest(a) => cmd_ingest(a),
        Command::TreeEmbed(a) => cmd_tree_embed(a),
        Command::Eval(a) => cmd_eval(a),
    }
}

fn cmd_hsbm(a: HsbmArgs) -> anyhow::Result<()> {
    let spec = HsbmSpec::with_ratio(a.n, a.r);
    let (g, planted) = generate_hsbm::<f64>(&spec, a.seed)?;
    let mut w = create(&with_suffix(&a.out, ".edges"))?;
    write_edge_list(&g, &mut w)?;
    w.flush().map_err(Error::from)?;
    for (suffix, p) in [
        (".macro", &planted.macro_level),
        (".meso", &planted.meso),
        (".micro", &planted.micro),
    ] {
        let mut w = create(&with_suffix(&a.out, suffix))?;
        write_partition(p, &mut w)?;
        w.flush().map_err(Error::from)?;
    }
    eprintln!(
        "{} nodes, {} edges, snr macro {:.3}, meso {:.3}",
        g.n(),
        g.num_edges(),
        spec.macro_degrees().snr()?,
        spec.meso_degrees().snr()?
    );
    Ok(())
}

/// Graph and points for a scan from whichever inputs were given.
/// Graph to scan and, when given, the points it was built from.
type ScanInputs = (SparseGraph<f64>, Option<Vec<PoincarePoint<f64>>>);

fn scan_inputs(
    graph: Option<&Path>,
    embedding: Option<&Path>,
    flags: &ScanFlags,
) -> anyhow::Result<ScanInputs> {
    match (graph, embedding) {
        (Some(g), e) => {
            let g = load_graph(g)?;
            let pts = e.map(load_points).transpose()?;
            if let Some(p) = &pts {
                if p.len() != g.n() {
                    return invalid(format!(
                        "embedding has {} points but the graph has {} nodes",
                        p.len(),
                        g.n()
                    ));
                }
            }
            Ok((g, pts))
        }
        (None, Some(e)) => {
            let pts = load_points(e)?;
            let g = knn_graph(&pts, flags.knn, flags.bandwidth()?)?;
            Ok((g, Some(pts)))
        }
        (None, None) => invalid("give --graph, --embedding or both"),
    }
}

fn cmd_scan(a: ScanArgs) -> anyhow::Result<()> {
    let cfg = a.scan.config()?;
    let (g, pts) = scan_inputs(a.graph.as_deref(), a.embedding.as_deref(), &a.scan)?;
    if let Some(f) = a.focus {
        if f >= g.n() {
            return invalid(format!("focus {f} out of range for {} nodes", g.n()));
        }
    }
    let dec = decompose(&g, a.scan.k_eigs)?;
    let pts = match pts {
        Some(p) => p,
        None => default_graph_embedding(&dec)?,
    };
    let focus = a.focus.unwrap_or_else(|| highest_degree_node(&g));
    let grid = a.scan.grid(&dec)?;
    let rep = boundary_scan(&pts, &dec, focus, &grid, &cfg)?;
    for b in &rep.boundaries {
        eprintln!("boundary sigma {:.4} K* {}", b.sigma, b.k_star);
    }
    emit_json(a.out.as_deref(), &rep)
}

fn cmd_sweep(a: SweepArgs) -> anyhow::Result<()> {
    let report = sweep(a.n, &a.r, a.seeds, a.seed, a.k_eigs)?;
    match &a.out {
        Some(prefix) => {
            std::fs::write(with_suffix(prefix, ".csv"), report.to_csv()).map_err(Error::from)?;
            emit_json(Some(&with_suffix(prefix, ".json")), &report)?;
            eprint!("{}", report.to_csv());
        }
        None => print!("{}", report.to_csv()),
    }
    Ok(())
}

fn cmd_cluster(a: ClusterArgs) -> anyhow::Result<()> {
    let g = load_graph(&a.graph)?;
    let p = match a.method {
        Method::Louvain => louvain(&g, a.seed)?,
        Method::Greedy => greedy_modularity(&g)?,
        Method::Spectral => {
            if !g.is_connected() {
                return invalid("spectral clustering needs a connected graph");
            }
            let dec = decompose(&g, a.k_eigs.max(a.k.unwrap_or(0)))?;
            let k = match a.k {
                Some(k) => k,
                None => eigengap_k(&dec)?,
            };
            spectral_clustering(&dec, k, a.seed)?
        }
    };
    eprintln!(
        "{} clusters, modularity {:.4}",
        p.num_clusters(),
        modularity(&g, &p)?
    );
    emit(a.out.as_deref(), |w| Ok(write_partition(&p, w)?))
}

fn cmd_ingest(a: IngestArgs) -> anyhow::Result<()> {
    let cfg = a.scan.config()?;
    if a.focus.is_empty() {
        eprintln!("no focus nodes given; nothing to do");
        return Ok(());
    }
    let pts = load_points(&a.embedding)?;
    let g = load_graph(&a.graph)?;
    if pts.len() != g.n() {
        return invalid(format!(
            "embedding has {} points but the graph has {} nodes",
            pts.len(),
            g.n()
        ));
    }
    if let Some(&f) = a.focus.iter().find(|&&f| f >= g.n()) {
        return invalid(format!("focus {f} out of range for {} nodes", g.n()));
    }
    let depths = a
        .depths
        .as_deref()
        .map(|p| read_depths(p, g.n()))
        .transpose()?;
    let dec = decompose(&g, a.scan.k_eigs)?;
    let grid = a.scan.grid(&dec)?;
    let rep = ingest(&pts, &g, &dec, &a.focus, depths.as_deref(), &grid, &cfg)?;
    if let Some(t) = rep.kendall_tau {
        eprintln!(
            "{} boundaries over {} foci, Kendall tau {:.4}",
            rep.matches.len(),
            a.focus.len(),
            t
        );
    }
    emit_json(a.out.as_deref(), &rep)
}

fn cmd_tree_embed(a: TreeEmbedArgs) -> anyhow::Result<()> {
    let tree = read_tree::<f64, _>(open(&a.tree)?)
        .with_context(|| format!("reading {}", a.tree.display()))?;
    let pts = sarkar_embed_tree(&tree, a.scale)?;
    eprintln!(
        "max distortion {:.6}",
        tree_distortion(&tree, &pts, a.scale)?
    );
    emit(a.out.as_deref(), |w| Ok(write_embedding(&pts, w)?))
}

#[derive(Debug, Serialize)]
struct Scores {
    ari: f64,
    vi: f64,
    clusters: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    modularity: Option<f64>,
}

fn cmd_eval(a: EvalArgs) -> anyhow::Result<()> {
    let pred = load_partition(&a.pred)?;
    let truth = load_partition(&a.truth)?;
    let modularity = match &a.graph {
        Some(g) => Some(modularity(&load_graph(g)?, &pred)?),
        None => None,
    };
    let scores = Scores {
        ari: ari(&pred, &truth)?,
        vi: vi(&pred, &truth)?,
        clusters: pred.num_clusters(),
        modularity,
    };
    emit_json(a.out.as_deref(), &scores)
}

/// Parses `args` and runs the command.
pub fn main_with_args<I, S>(args: I) -> Result<(), Failure>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            if code == 0 {
                return Ok(());
            }
            return Err(Failure {
                code: 2,
                error: None,
            });
        }
    };
    run(cli).map_err(|error| Failure {
        code: exit_code(&error),
        error: Some(error),
    })
}

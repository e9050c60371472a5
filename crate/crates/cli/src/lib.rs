//! Command-line front end for `anyembed`.
//!
//! Every subcommand is also callable as a function so tests can drive the
//! pipeline in-process; [`main_with_args`] maps errors to exit codes.

mod commands;
mod config;
mod embed;
mod error;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyembed::eval::EdgeOpKind;
use anyembed::{PprConfig, PprMethod, SketcherKind};
use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_classify, cmd_errors, cmd_linkpred, cmd_merge, cmd_ppr};
pub use commands::{ClassifyConfig, ErrorsConfig, LinkPredConfig, PprQuery};
pub use config::{FileConfig, NodeOrder};
pub use embed::{cmd_embed, node_order, sibling, EmbedConfig, EmbedSummary};
pub use error::CliError;

use config::{default_workers, pick, pick_parsed};

#[derive(Debug, Parser)]
#[command(
    name = "anyembed",
    version,
    about = "Anytime node embeddings by sketching personalized PageRank rows"
)]
pub struct Cli {
    /// `key = value` file supplying defaults for any flag.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stream log-PPR rows through a sketch and write the embedding.
    Embed(EmbedArgs),
    /// Merge two sketch checkpoints of disjoint node sets.
    Merge(MergeArgs),
    /// Covariance and projection errors over a sweep of dimensions (TSV).
    Errors(ErrorsArgs),
    /// Multi-label node classification on an embedding (TSV).
    Classify(ClassifyArgs),
    /// Link prediction with edge operators on an embedding (TSV).
    Linkpred(LinkpredArgs),
    /// Print personalized PageRank rows for selected nodes.
    Ppr(PprArgs),
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Edge list: one `u v` pair per line.
    pub graph: PathBuf,
    /// Treat edges as directed arcs.
    #[arg(long)]
    pub directed: bool,
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    /// Restart probability.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Monte-Carlo walks per node.
    #[arg(long)]
    pub walks: Option<usize>,
    /// Use power iteration instead of Monte-Carlo walks.
    #[arg(long)]
    pub exact: bool,
    /// L1 tolerance of power iteration.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub ppr: WalkArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub dim: Option<usize>,
    /// fd, hash, rp, sample or svd.
    #[arg(long)]
    pub sketcher: Option<SketcherKind>,
    /// random or natural.
    #[arg(long)]
    pub order: Option<NodeOrder>,
    /// Write a snapshot after every such fraction of the nodes.
    #[arg(long)]
    pub checkpoint_every: Option<f64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Stop after this many nodes.
    #[arg(long)]
    pub max_nodes: Option<usize>,
    /// Singular-value exponent of the written embedding.
    #[arg(long)]
    pub exponent: Option<f64>,
    /// Continue from a checkpoint of an earlier run with the same seed.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ErrorsArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub ppr: WalkArgs,
    /// Comma-separated sketch dimensions.
    #[arg(long, value_delimiter = ',')]
    pub dims: Vec<usize>,
    #[arg(long)]
    pub sketcher: Option<SketcherKind>,
    #[arg(long)]
    pub order: Option<NodeOrder>,
    /// Rank of the projection error; 0 skips it.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Embedding text file.
    #[arg(long)]
    pub emb: PathBuf,
    /// `node label` lines.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub train_frac: Option<f64>,
    /// Inverse regularization strength.
    #[arg(long)]
    pub c: Option<f64>,
    /// Number of random splits, seeded `seed, seed+1, …`.
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LinkpredArgs {
    /// Embedding text file.
    #[arg(long)]
    pub emb: PathBuf,
    /// The snapshot the embedding was trained on; negatives avoid its edges.
    #[arg(long)]
    pub graph: PathBuf,
    /// Edges to predict (the positives).
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub directed: bool,
    /// average, concat, hadamard, l1 or l2; all five when absent.
    #[arg(long)]
    pub op: Option<EdgeOpKind>,
    #[arg(long)]
    pub train_frac: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the sampled negative pairs (original ids) here.
    #[arg(long)]
    pub dump_negatives: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PprArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub ppr: WalkArgs,
    /// Comma-separated original node ids; all nodes when absent.
    #[arg(long, value_delimiter = ',')]
    pub nodes: Vec<u64>,
    /// Print the truncated log transform instead of probabilities.
    #[arg(long)]
    pub log: bool,
}

impl WalkArgs {
    fn resolve(&self, file: &FileConfig) -> PprConfig {
        let d = PprConfig::default();
        let exact = self.exact || file.exact.unwrap_or(false);
        PprConfig {
            alpha: pick(self.alpha, file.alpha, d.alpha),
            method: if exact { PprMethod::Exact } else { PprMethod::MonteCarlo },
            tol: pick(self.tol, file.tol, d.tol),
            max_iters: pick(self.max_iters, file.max_iters, d.max_iters),
            walks_per_node: pick(self.walks, file.walks, d.walks_per_node),
            seed: pick(self.seed, file.seed, d.seed),
        }
    }
}

fn undirected(flag: bool, file: &FileConfig) -> bool {
    !(flag || file.directed.unwrap_or(false))
}

fn sketcher(flag: Option<SketcherKind>, file: &FileConfig) -> Result<SketcherKind, CliError> {
    pick_parsed(flag, file.sketcher.as_deref(), "sketcher", SketcherKind::Fd)
}

fn order(flag: Option<NodeOrder>, file: &FileConfig) -> Result<NodeOrder, CliError> {
    pick_parsed(flag, file.order.as_deref(), "order", NodeOrder::Random)
}

impl EmbedArgs {
    pub fn resolve(&self, file: &FileConfig) -> Result<EmbedConfig, CliError> {
        let d = EmbedConfig::default();
        Ok(EmbedConfig {
            dim: pick(self.dim, file.dim, d.dim),
            sketcher: sketcher(self.sketcher, file)?,
            ppr: self.ppr.resolve(file),
            order: order(self.order, file)?,
            checkpoint_every: self.checkpoint_every.or(file.checkpoint_every),
            workers: pick(self.workers, file.workers, default_workers()),
            max_nodes: self.max_nodes.or(file.max_nodes),
            exponent: pick(self.exponent, file.exponent, d.exponent),
            undirected: undirected(self.graph.directed, file),
            resume: self.resume.clone(),
        })
    }
}

impl ErrorsArgs {
    pub fn resolve(&self, file: &FileConfig) -> Result<ErrorsConfig, CliError> {
        let dims = if self.dims.is_empty() {
            file.dims.clone()
        } else {
            Some(self.dims.clone())
        };
        let d = ErrorsConfig::default();
        Ok(ErrorsConfig {
            dims: dims.unwrap_or(d.dims),
            sketcher: sketcher(self.sketcher, file)?,
            ppr: self.ppr.resolve(file),
            order: order(self.order, file)?,
            k: pick(self.k, file.k, d.k),
            undirected: undirected(self.graph.directed, file),
            workers: pick(self.workers, file.workers, default_workers()),
            guard: d.guard,
        })
    }
}

impl ClassifyArgs {
    pub fn resolve(&self, file: &FileConfig) -> ClassifyConfig {
        let d = ClassifyConfig::default();
        ClassifyConfig {
            train_frac: pick(self.train_frac, file.train_frac, d.train_frac),
            c: pick(self.c, file.c, d.c),
            repeats: pick(self.repeats, file.repeats, d.repeats),
            seed: pick(self.seed, file.seed, d.seed),
            workers: pick(self.workers, file.workers, default_workers()),
        }
    }
}

impl LinkpredArgs {
    pub fn resolve(&self, file: &FileConfig) -> Result<LinkPredConfig, CliError> {
        let d = LinkPredConfig::default();
        let op = match self.op {
            Some(op) => Some(op),
            None => file.op.as_deref().map(str::parse).transpose()?,
        };
        Ok(LinkPredConfig {
            ops: op.map_or(d.ops, |op| vec![op]),
            train_frac: pick(self.train_frac, file.train_frac, d.train_frac),
            c: pick(self.c, file.c, d.c),
            repeats: pick(self.repeats, file.repeats, d.repeats),
            seed: pick(self.seed, file.seed, d.seed),
            undirected: undirected(self.directed, file),
            dump_negatives: self.dump_negatives.clone(),
        })
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match &cli.command {
        Command::Embed(a) => {
            let cfg = a.resolve(&file)?;
            let s = cmd_embed(&cfg, &a.graph.graph, &a.out)?;
            writeln!(out, "{}\t{}", s.rows_seen, s.embedding.display())?;
        }
        Command::Merge(a) => {
            let rows = cmd_merge(&a.a, &a.b, &a.out)?;
            writeln!(out, "{rows}\t{}", a.out.display())?;
        }
        Command::Errors(a) => cmd_errors(&a.resolve(&file)?, &a.graph.graph, out)?,
        Command::Classify(a) => cmd_classify(&a.resolve(&file), &a.emb, &a.labels, out)?,
        Command::Linkpred(a) => cmd_linkpred(&a.resolve(&file)?, &a.emb, &a.graph, &a.edges, out)?,
        Command::Ppr(a) => {
            let q = PprQuery {
                ppr: a.ppr.resolve(&file),
                nodes: a.nodes.clone(),
                log: a.log,
                undirected: undirected(a.graph.directed, &file),
            };
            cmd_ppr(&q, &a.graph.graph, out)?
        }
    }
    out.flush()?;
    Ok(())
}

/// Parses `args` (including the program name), runs the command with stdout
/// as output and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("anyembed: {e}");
            e.exit_code()
        }
    }
}

//! The `embed` pipeline: rows are produced in batches on a worker pool and
//! handed over a bounded channel to a single consumer that owns the sketch.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyembed::graph::load_edgelist;
use anyembed::similarity::similarity_rows;
use anyembed::sketch::{read_checkpoint, write_checkpoint, AnySketch, Sketcher, DEFAULT_EXPONENT};
use anyembed::{Execution, Graph, IdMap, PprConfig, SimilarityRow, SketcherKind};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::NodeOrder;
use crate::error::{CliError, WithPath};

#[derive(Clone, Debug)]
pub struct EmbedConfig {
    pub dim: usize,
    pub sketcher: SketcherKind,
    /// Its `seed` also seeds the node order and the baseline sketches.
    pub ppr: PprConfig,
    pub order: NodeOrder,
    /// Snapshot after every such fraction of the processed nodes.
    pub checkpoint_every: Option<f64>,
    pub workers: usize,
    /// Stop after this many nodes (anytime early stop).
    pub max_nodes: Option<usize>,
    pub exponent: f64,
    pub undirected: bool,
    /// Continue from a checkpoint written by an earlier run with the same
    /// order and seed.
    pub resume: Option<PathBuf>,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            dim: 128,
            sketcher: SketcherKind::Fd,
            ppr: PprConfig::default(),
            order: NodeOrder::Random,
            checkpoint_every: None,
            workers: 1,
            max_nodes: None,
            exponent: DEFAULT_EXPONENT,
            undirected: true,
            resume: None,
        }
    }
}

impl EmbedConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.dim == 0 {
            return Err(CliError::usage("--dim must be at least 1"));
        }
        if let Some(f) = self.checkpoint_every {
            if !(f > 0.0 && f <= 1.0) {
                return Err(CliError::usage(format!(
                    "--checkpoint-every must be in (0, 1], got {f}"
                )));
            }
        }
        if self.workers == 0 {
            return Err(CliError::usage("--workers must be at least 1"));
        }
        if self.max_nodes == Some(0) {
            return Err(CliError::usage("--max-nodes must be at least 1"));
        }
        if !self.exponent.is_finite() {
            return Err(CliError::usage("--exponent must be finite"));
        }
        self.ppr.validate()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbedSummary {
    pub rows_seen: u64,
    pub embedding: PathBuf,
    pub checkpoint: Option<PathBuf>,
    /// `(rows_seen, embedding path)` for each intermediate snapshot.
    pub snapshots: Vec<(u64, PathBuf)>,
}

/// `out` with `suffix` appended to its file name.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn node_order(n: usize, order: NodeOrder, seed: u64) -> Vec<usize> {
    let mut nodes: Vec<usize> = (0..n).collect();
    if order == NodeOrder::Random {
        nodes.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    nodes
}

pub fn load_graph(path: &Path, undirected: bool) -> Result<(Graph, IdMap), CliError> {
    let file = File::open(path).at(path)?;
    load_edgelist(BufReader::new(file), undirected).at(path)
}

/// Runs the embedding pipeline and writes:
///
/// * `out`: the final embedding (text),
/// * `out.ids`: the id map sidecar,
/// * `out.ckpt`: the final sketch (not for the exact SVD),
/// * `out.<rows>.emb` / `out.<rows>.ckpt`: snapshots when `checkpoint_every` is set.
pub fn cmd_embed(cfg: &EmbedConfig, graph_path: &Path, out: &Path) -> Result<EmbedSummary, CliError> {
    cfg.validate()?;
    let (graph, ids) = load_graph(graph_path, cfg.undirected)?;
    let n = graph.n();
    write_file(&sibling(out, ".ids"), |w| ids.write(w))?;

    let order = node_order(n, cfg.order, cfg.ppr.seed);
    let total = cfg.max_nodes.map_or(n, |m| m.min(n));
    let workers = Workers::new(cfg.workers)?;

    let mut sketch = match &cfg.resume {
        Some(path) => resume(path, cfg, n, total)?,
        None => AnySketch::new(cfg.sketcher, cfg.dim, n, cfg.ppr.seed)?,
    }
    .with_execution(workers.exec());
    let start = sketch.rows_seen() as usize;

    let step = cfg
        .checkpoint_every
        .map(|f| ((f * total as f64).ceil() as usize).max(1));
    let mut snapshots = Vec::new();
    let write_state = |sketch: &mut AnySketch, emb: &Path, ckpt: Option<&Path>| -> Result<(), CliError> {
        let e = workers.run(|| sketch.embedding_with(cfg.dim, cfg.exponent))?;
        write_file(emb, |w| e.write_text(&ids, w))?;
        if let Some(ckpt) = ckpt {
            write_file(ckpt, |w| write_checkpoint(sketch, w))?;
        }
        Ok(())
    };
    let checkpointable = cfg.sketcher != SketcherKind::Svd;

    stream_rows(&graph, &order[start..total], &cfg.ppr, &workers, |row| {
        workers.run(|| sketch.insert(&row))?;
        let seen = sketch.rows_seen() as usize;
        if let Some(step) = step {
            if seen % step == 0 || seen == total {
                let emb = sibling(out, &format!(".{seen}.emb"));
                let ckpt = sibling(out, &format!(".{seen}.ckpt"));
                write_state(&mut sketch, &emb, checkpointable.then_some(ckpt.as_path()))?;
                snapshots.push((seen as u64, emb));
            }
        }
        Ok(())
    })?;

    if sketch.rows_seen() == 0 {
        return Err(CliError::data("no rows were processed"));
    }
    let ckpt = checkpointable.then(|| sibling(out, ".ckpt"));
    write_state(&mut sketch, out, ckpt.as_deref())?;
    Ok(EmbedSummary {
        rows_seen: sketch.rows_seen(),
        embedding: out.to_path_buf(),
        checkpoint: ckpt,
        snapshots,
    })
}

fn resume(path: &Path, cfg: &EmbedConfig, n: usize, total: usize) -> Result<AnySketch, CliError> {
    let sketch = read_checkpoint(BufReader::new(File::open(path).at(path)?)).at(path)?;
    if sketch.kind() != cfg.sketcher || sketch.dim() != cfg.dim || sketch.n() != n {
        return Err(CliError::data(format!(
            "{}: checkpoint is {} with d={}, n={}; run asks for {} with d={}, n={n}",
            path.display(),
            sketch.kind(),
            sketch.dim(),
            sketch.n(),
            cfg.sketcher,
            cfg.dim
        )));
    }
    if sketch.rows_seen() as usize > total {
        return Err(CliError::data(format!(
            "{}: checkpoint has seen {} rows, more than the {total} requested",
            path.display(),
            sketch.rows_seen()
        )));
    }
    Ok(sketch)
}

pub(crate) fn write_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> anyembed::Result<()>,
) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path).at(path)?);
    f(&mut w).at(path)?;
    w.flush().at(path)
}

/// Rows per batch: at most 64, and about 8 MB of row data.
fn batch_size(n: usize) -> usize {
    ((1 << 20) / n.max(1)).clamp(1, 64)
}

/// Computes rows for `nodes` in order and passes each to `consume`. With more
/// than one worker, the next batch is computed while the current one is being
/// consumed; the channel holds one batch, so production waits for the
/// consumer.
pub(crate) fn stream_rows(
    graph: &Graph,
    nodes: &[usize],
    ppr: &PprConfig,
    workers: &Workers,
    mut consume: impl FnMut(SimilarityRow) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let batch = batch_size(graph.n());
    if workers.count() <= 1 {
        for chunk in nodes.chunks(batch) {
            for row in similarity_rows(graph, chunk, ppr, Execution::Sequential)? {
                consume(row)?;
            }
        }
        return Ok(());
    }
    std::thread::scope(|s| {
        let (tx, rx) = std::sync::mpsc::sync_channel(1);
        s.spawn(move || {
            for chunk in nodes.chunks(batch) {
                let rows = workers.run(|| similarity_rows(graph, chunk, ppr, Execution::Parallel));
                let failed = rows.is_err();
                if tx.send(rows).is_err() || failed {
                    break;
                }
            }
        });
        for rows in rx {
            for row in rows? {
                consume(row)?;
            }
        }
        Ok(())
    })
}

/// A dedicated thread pool of the requested size, or nothing when running
/// sequentially.
pub(crate) struct Workers {
    count: usize,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Workers {
    pub(crate) fn new(count: usize) -> Result<Self, CliError> {
        #[cfg(feature = "parallel")]
        {
            let pool = if count > 1 {
                Some(
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(count)
                        .build()
                        .map_err(|e| CliError::usage(format!("cannot start {count} workers: {e}")))?,
                )
            } else {
                None
            };
            Ok(Workers { count, pool })
        }
        #[cfg(not(feature = "parallel"))]
        Ok(Workers { count: count.min(1) })
    }

    pub(crate) fn count(&self) -> usize {
        self.count
    }

    pub(crate) fn exec(&self) -> Execution {
        if self.count > 1 {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }

    pub(crate) fn run<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(f);
        }
        f()
    }
}

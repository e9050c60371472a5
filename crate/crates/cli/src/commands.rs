use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyembed::eval::{
    classify, link_predict, mean_std, sample_negatives, EdgeOpKind, EvalSplit, LabelSet, LogisticConfig,
};
use anyembed::linalg::{
    covariance_error_with, projection_error_given, rank_residuals, svd_oracle_embedding, DenseRows, PowerIteration,
    DEFAULT_DENSE_GUARD,
};
use anyembed::similarity::{log_transform, ppr, similarity_matrix, StreamedSimilarity};
use anyembed::sketch::{read_checkpoint, write_checkpoint, AnySketch, LabeledEmbedding, Sketcher};
use anyembed::{Embedding, Graph, IdMap, PprConfig, SketcherKind};

use crate::config::NodeOrder;
use crate::embed::{load_graph, node_order, stream_rows, write_file, Workers};
use crate::error::{CliError, WithPath};

/// Merges two checkpoints into `out` and returns the merged row count.
pub fn cmd_merge(a: &Path, b: &Path, out: &Path) -> Result<u64, CliError> {
    let read =
        |p: &Path| -> Result<AnySketch, CliError> { read_checkpoint(BufReader::new(File::open(p).at(p)?)).at(p) };
    let (a, b) = (read(a)?, read(b)?);
    if a.n() != b.n() || a.dim() != b.dim() {
        return Err(CliError::data(format!(
            "checkpoints disagree: d={}, n={} vs d={}, n={}",
            a.dim(),
            a.n(),
            b.dim(),
            b.n()
        )));
    }
    let merged = a.merge(b)?;
    write_file(out, |w| write_checkpoint(&merged, w))?;
    Ok(merged.rows_seen())
}

#[derive(Clone, Debug)]
pub struct ErrorsConfig {
    pub dims: Vec<usize>,
    pub sketcher: SketcherKind,
    pub ppr: PprConfig,
    pub order: NodeOrder,
    /// Rank of the projection error; 0 skips it.
    pub k: usize,
    pub undirected: bool,
    pub workers: usize,
    /// Largest `n` for which the similarity matrix is held in memory.
    pub guard: usize,
}

impl Default for ErrorsConfig {
    fn default() -> Self {
        ErrorsConfig {
            dims: vec![16, 32, 64, 128],
            sketcher: SketcherKind::Fd,
            ppr: PprConfig::default(),
            order: NodeOrder::Random,
            k: 10,
            undirected: true,
            workers: 1,
            guard: DEFAULT_DENSE_GUARD,
        }
    }
}

/// Prints `d ce pe_k` (TSV) for each dimension. `pe_k` is `NA` when `k`
/// exceeds `d`. Above the dense guard the rows are recomputed for every pass
/// and only the covariance error is available.
pub fn cmd_errors(cfg: &ErrorsConfig, graph_path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    if cfg.dims.is_empty() || cfg.dims.contains(&0) {
        return Err(CliError::usage("--dims must list positive dimensions"));
    }
    cfg.ppr.validate()?;
    let (graph, _) = load_graph(graph_path, cfg.undirected)?;
    let n = graph.n();
    let workers = Workers::new(cfg.workers)?;
    let order = node_order(n, cfg.order, cfg.ppr.seed);

    writeln!(out, "d\tce\tpe_{}", cfg.k)?;
    if n > cfg.guard {
        if cfg.k > 0 {
            return Err(CliError::Capability(format!(
                "projection error needs the dense matrix, limited to {} nodes (graph has {n}); pass --k 0",
                cfg.guard
            )));
        }
        if cfg.sketcher == SketcherKind::Svd {
            return Err(CliError::Capability(format!(
                "exact SVD is limited to {} nodes",
                cfg.guard
            )));
        }
        let rows = StreamedSimilarity {
            graph: &graph,
            config: cfg.ppr,
            nodes: order.clone(),
        };
        for &d in &cfg.dims {
            let mut sketch = AnySketch::new(cfg.sketcher, d, n, cfg.ppr.seed)?.with_execution(workers.exec());
            stream_rows(&graph, &order, &cfg.ppr, &workers, |row| {
                Ok(workers.run(|| sketch.insert(&row))?)
            })?;
            let e = workers.run(|| sketch.sketch_factor(d))?;
            let ce = workers.run(|| covariance_error_with(&rows, &e, PowerIteration::default(), workers.exec()))?;
            writeln!(out, "{d}\t{ce}\tNA")?;
        }
        return Ok(());
    }

    let m = workers.run(|| similarity_matrix(&graph, &cfg.ppr, workers.exec()))?;
    let rows = DenseRows(&m);
    let residuals = if cfg.k > 0 {
        Some(workers.run(|| rank_residuals(&rows, cfg.guard))?)
    } else {
        None
    };
    for &d in &cfg.dims {
        let e = workers.run(|| sketch_matrix(&m, &order, cfg.sketcher, d, cfg.ppr.seed, cfg.guard, &workers))?;
        let ce = workers.run(|| covariance_error_with(&rows, &e, PowerIteration::default(), workers.exec()))?;
        let pe = match &residuals {
            Some(res) if cfg.k <= d && cfg.k <= rank(&e) => workers
                .run(|| projection_error_given(&rows, &e, cfg.k, res))?
                .to_string(),
            _ => "NA".to_string(),
        };
        writeln!(out, "{d}\t{ce}\t{pe}")?;
    }
    Ok(())
}

/// The exponent-1 sketch factor of `m` with rows streamed in `order`.
fn sketch_matrix(
    m: &anyembed::linalg::Mat,
    order: &[usize],
    kind: SketcherKind,
    d: usize,
    seed: u64,
    guard: usize,
    workers: &Workers,
) -> anyembed::Result<Embedding> {
    if kind == SketcherKind::Svd {
        return svd_oracle_embedding(m, d, 1.0, guard);
    }
    let mut sketch = AnySketch::new(kind, d, m.cols(), seed)?.with_execution(workers.exec());
    for &v in order {
        sketch.insert_row(v, m.row(v))?;
    }
    sketch.sketch_factor(d)
}

fn rank(e: &Embedding) -> usize {
    (0..e.k())
        .filter(|&i| e.values().row(i).iter().any(|&x| x != 0.0))
        .count()
}

fn read_embedding(path: &Path) -> Result<LabeledEmbedding, CliError> {
    LabeledEmbedding::read_text(BufReader::new(File::open(path).at(path)?)).at(path)
}

#[derive(Clone, Debug)]
pub struct ClassifyConfig {
    pub train_frac: f64,
    pub c: f64,
    pub repeats: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            train_frac: 0.5,
            c: 1.0,
            repeats: 1,
            seed: 0,
            workers: 1,
        }
    }
}

/// Prints `seed micro_f1 macro_f1` per split, then `mean` and `std` rows.
pub fn cmd_classify(cfg: &ClassifyConfig, emb: &Path, labels: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    if cfg.repeats == 0 {
        return Err(CliError::usage("--repeats must be at least 1"));
    }
    let e = read_embedding(emb)?;
    let (labels_set, unknown) = LabelSet::read(BufReader::new(File::open(labels).at(labels)?), &e.ids).at(labels)?;
    if unknown > 0 {
        eprintln!("warning: {unknown} label lines name nodes missing from the embedding");
    }
    let workers = Workers::new(cfg.workers)?;
    let lcfg = LogisticConfig {
        c: cfg.c,
        ..Default::default()
    };
    writeln!(out, "seed\tmicro_f1\tmacro_f1")?;
    let (mut micro, mut macro_) = (Vec::new(), Vec::new());
    for r in 0..cfg.repeats {
        let seed = cfg.seed.wrapping_add(r as u64);
        let split = EvalSplit::random(&labels_set, cfg.train_frac, seed)?;
        let report = workers.run(|| classify(&e.embedding, &labels_set, &split, &lcfg, workers.exec()))?;
        if !report.untrained_labels.is_empty() {
            eprintln!(
                "warning: seed {seed}: {} labels have no training node and are never predicted",
                report.untrained_labels.len()
            );
        }
        writeln!(out, "{seed}\t{}\t{}", report.micro_f1, report.macro_f1)?;
        micro.push(report.micro_f1);
        macro_.push(report.macro_f1);
    }
    let (mi, mis) = mean_std(&micro);
    let (ma, mas) = mean_std(&macro_);
    writeln!(out, "mean\t{mi}\t{ma}")?;
    writeln!(out, "std\t{mis}\t{mas}")?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct LinkPredConfig {
    pub ops: Vec<EdgeOpKind>,
    pub train_frac: f64,
    pub c: f64,
    pub repeats: usize,
    pub seed: u64,
    pub undirected: bool,
    pub dump_negatives: Option<PathBuf>,
}

impl Default for LinkPredConfig {
    fn default() -> Self {
        LinkPredConfig {
            ops: EdgeOpKind::ALL.to_vec(),
            train_frac: 0.5,
            c: 1.0,
            repeats: 1,
            seed: 0,
            undirected: true,
            dump_negatives: None,
        }
    }
}

/// Reads an edge list and maps it into the embedding's node ids.
fn read_edges(path: &Path, ids: &IdMap, undirected: bool) -> Result<(Graph, Vec<(usize, usize)>), CliError> {
    let (g, local) = load_graph(path, undirected)?;
    let mut edges = Vec::new();
    let mut arcs = Vec::new();
    for u in 0..g.n() {
        for &v in g.neighbors(u) {
            let v = v as usize;
            if undirected && v < u {
                continue;
            }
            let (ou, ov) = (local.original(u), local.original(v));
            let (Some(a), Some(b)) = (ids.internal(ou), ids.internal(ov)) else {
                return Err(CliError::data(format!(
                    "{}: edge {ou} {ov} names a node missing from the embedding",
                    path.display()
                )));
            };
            edges.push((a, b));
            arcs.push((a as u32, b as u32));
        }
    }
    Ok((Graph::from_edges(ids.len(), &arcs, undirected)?, edges))
}

/// Prints `op accuracy accuracy_std auc auc_std` per operator. Negatives are
/// non-edges of both the snapshot and the positives, one per positive.
pub fn cmd_linkpred(
    cfg: &LinkPredConfig,
    emb: &Path,
    snapshot: &Path,
    edges: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if cfg.repeats == 0 {
        return Err(CliError::usage("--repeats must be at least 1"));
    }
    let e = read_embedding(emb)?;
    let (old, old_edges) = read_edges(snapshot, &e.ids, cfg.undirected)?;
    let (_, pos) = read_edges(edges, &e.ids, cfg.undirected)?;
    if pos.is_empty() {
        return Err(CliError::data(format!("{}: no edges to predict", edges.display())));
    }
    let mut arcs: Vec<(u32, u32)> = old_edges
        .iter()
        .chain(&pos)
        .map(|&(u, v)| (u as u32, v as u32))
        .collect();
    arcs.sort_unstable();
    arcs.dedup();
    let known = Graph::from_edges(old.n(), &arcs, cfg.undirected)?;
    let neg = sample_negatives(&known, pos.len(), cfg.seed)?;
    if let Some(path) = &cfg.dump_negatives {
        write_file(path, |w| {
            for &(u, v) in &neg {
                writeln!(w, "{} {}", e.ids.original(u), e.ids.original(v))?;
            }
            Ok(())
        })?;
    }
    let lcfg = LogisticConfig {
        c: cfg.c,
        ..Default::default()
    };
    writeln!(out, "op\taccuracy\taccuracy_std\tauc\tauc_std")?;
    for &op in &cfg.ops {
        let mut acc = Vec::new();
        let mut auc = Vec::new();
        for r in 0..cfg.repeats {
            let seed = cfg.seed.wrapping_add(r as u64);
            let report = link_predict(&e.embedding, &pos, &neg, op, cfg.train_frac, seed, &lcfg)?;
            acc.push(report.accuracy);
            auc.push(report.auc);
        }
        let (a, as_) = mean_std(&acc);
        let (u, us) = mean_std(&auc);
        writeln!(out, "{op}\t{a}\t{as_}\t{u}\t{us}")?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct PprQuery {
    pub ppr: PprConfig,
    /// Original ids; empty means every node.
    pub nodes: Vec<u64>,
    pub log: bool,
    pub undirected: bool,
}

/// Prints `node idx:value …` per requested node, with original ids and
/// entries above 1e-9.
pub fn cmd_ppr(q: &PprQuery, graph_path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    q.ppr.validate()?;
    let (graph, ids) = load_graph(graph_path, q.undirected)?;
    let nodes: Vec<usize> = if q.nodes.is_empty() {
        (0..graph.n()).collect()
    } else {
        q.nodes
            .iter()
            .map(|&id| {
                ids.internal(id)
                    .ok_or_else(|| CliError::data(format!("node {id} is not in the graph")))
            })
            .collect::<Result<_, _>>()?
    };
    for v in nodes {
        let mut p = ppr(&graph, v, &q.ppr)?;
        if q.log {
            p = log_transform(&p, graph.n());
        }
        let mut line = ids.original(v).to_string();
        for (j, &x) in p.iter().enumerate() {
            if x > 1e-9 {
                line.push_str(&format!(" {}:{x:.6}", ids.original(j)));
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

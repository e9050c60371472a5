//! Rows of the truncated log personalized-PageRank matrix.
//!
//! Row `v` is `max(log(n · ppr_v), 0)` where `ppr_v` is the PageRank vector
//! personalized to `v` with restart probability `alpha`. Nodes without
//! out-arcs send their mass back to the source, in both the exact and the
//! Monte-Carlo estimator, so the two agree in expectation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::Graph;
use crate::linalg::{Mat, RowSource};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PprMethod {
    Exact,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PprConfig {
    /// Restart probability, in `(0, 1]`.
    pub alpha: f64,
    pub method: PprMethod,
    /// L1 tolerance for power iteration.
    pub tol: f64,
    pub max_iters: usize,
    pub walks_per_node: usize,
    pub seed: u64,
}

impl Default for PprConfig {
    fn default() -> Self {
        PprConfig {
            alpha: 0.85,
            method: PprMethod::MonteCarlo,
            tol: 1e-8,
            max_iters: 1000,
            walks_per_node: 10_000,
            seed: 0,
        }
    }
}

impl PprConfig {
    pub fn exact(alpha: f64) -> Self {
        PprConfig {
            alpha,
            method: PprMethod::Exact,
            ..Default::default()
        }
    }

    pub fn monte_carlo(alpha: f64, walks_per_node: usize, seed: u64) -> Self {
        PprConfig {
            alpha,
            method: PprMethod::MonteCarlo,
            walks_per_node,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha must be in (0, 1], got {}", self.alpha)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol must be positive"));
        }
        if self.walks_per_node == 0 {
            return Err(Error::invalid("walks_per_node must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityRow {
    pub node: usize,
    pub values: Vec<f64>,
}

fn check_node(g: &Graph, v: usize) -> Result<()> {
    if v >= g.n() {
        Err(Error::NodeOutOfRange { node: v, n: g.n() })
    } else {
        Ok(())
    }
}

/// Power iteration on `x = α e_v + (1 − α) P̃ᵀ x`, where `P̃` sends dangling
/// mass back to `v`. Stops when successive iterates differ by at most `tol`
/// in L1.
pub fn ppr_exact(g: &Graph, v: usize, cfg: &PprConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_node(g, v)?;
    let n = g.n();
    let alpha = cfg.alpha;
    let mut x = vec![0.0; n];
    x[v] = 1.0;
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_iters {
        next.iter_mut().for_each(|y| *y = 0.0);
        let mut dangling = 0.0;
        for (u, &xu) in x.iter().enumerate() {
            if xu == 0.0 {
                continue;
            }
            let nbrs = g.neighbors(u);
            if nbrs.is_empty() {
                dangling += xu;
                continue;
            }
            let share = (1.0 - alpha) * xu / nbrs.len() as f64;
            for &t in nbrs {
                next[t as usize] += share;
            }
        }
        next[v] += alpha + (1.0 - alpha) * dangling;
        residual = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if residual <= cfg.tol {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iters,
        residual,
    })
}

/// Terminal-node frequencies of `walks_per_node` restart walks from `v`.
///
/// Each step the walk stops with probability `alpha`; otherwise it moves to
/// a uniform out-neighbor, or back to `v` from a node without out-arcs. The
/// RNG stream is keyed by `(seed, v)`.
pub fn ppr_monte_carlo(g: &Graph, v: usize, cfg: &PprConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_node(g, v)?;
    let mut rng = walk_rng(cfg.seed, v);
    let mut counts = vec![0u32; g.n()];
    for _ in 0..cfg.walks_per_node {
        let mut cur = v;
        loop {
            if rng.gen::<f64>() < cfg.alpha {
                break;
            }
            let nbrs = g.neighbors(cur);
            cur = if nbrs.is_empty() {
                v
            } else {
                nbrs[rng.gen_range(0..nbrs.len())] as usize
            };
        }
        counts[cur] += 1;
    }
    let total = cfg.walks_per_node as f64;
    Ok(counts.into_iter().map(|c| c as f64 / total).collect())
}

pub(crate) fn walk_rng(seed: u64, stream: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// `max(log(n · p_i), 0)` entrywise.
pub fn log_transform(p: &[f64], n: usize) -> Vec<f64> {
    let ln_n = (n as f64).ln();
    p.iter()
        .map(|&x| if x > 0.0 { (x.ln() + ln_n).max(0.0) } else { 0.0 })
        .collect()
}

pub fn ppr(g: &Graph, v: usize, cfg: &PprConfig) -> Result<Vec<f64>> {
    match cfg.method {
        PprMethod::Exact => ppr_exact(g, v, cfg),
        PprMethod::MonteCarlo => ppr_monte_carlo(g, v, cfg),
    }
}

pub fn similarity_row(g: &Graph, v: usize, cfg: &PprConfig) -> Result<SimilarityRow> {
    let p = ppr(g, v, cfg)?;
    Ok(SimilarityRow {
        node: v,
        values: log_transform(&p, g.n()),
    })
}

/// Rows for `nodes`, in order. Each row is independent, so with
/// [`Execution::Parallel`] they are computed on the rayon pool.
pub fn similarity_rows(g: &Graph, nodes: &[usize], cfg: &PprConfig, exec: Execution) -> Result<Vec<SimilarityRow>> {
    exec.map_slice(nodes, |&v| similarity_row(g, v, cfg))
        .into_iter()
        .collect()
}

/// The full log-PPR matrix, row `i` for node `i`. Desk-scale only.
pub fn similarity_matrix(g: &Graph, cfg: &PprConfig, exec: Execution) -> Result<Mat> {
    let nodes: Vec<usize> = (0..g.n()).collect();
    let rows = similarity_rows(g, &nodes, cfg, exec)?;
    let mut m = Mat::zeros(g.n(), g.n());
    for r in rows {
        m.row_mut(r.node).copy_from_slice(&r.values);
    }
    Ok(m)
}

/// Recomputes log-PPR rows on every pass instead of holding the matrix.
pub struct StreamedSimilarity<'a> {
    pub graph: &'a Graph,
    pub config: PprConfig,
    pub nodes: Vec<usize>,
}

impl RowSource for StreamedSimilarity<'_> {
    fn n_cols(&self) -> usize {
        self.graph.n()
    }

    fn for_each_row(&self, f: &mut dyn FnMut(&[f64])) -> Result<()> {
        for &v in &self.nodes {
            let row = similarity_row(self.graph, v, &self.config)?;
            f(&row.values);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l1(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    }

    fn two_nodes() -> Graph {
        Graph::from_edges(2, &[(0, 1)], true).unwrap()
    }

    #[test]
    fn self_loop_is_trivial() {
        let g = Graph::from_edges(1, &[(0, 0)], true).unwrap();
        for alpha in [0.1, 0.5, 0.85, 1.0] {
            assert_eq!(ppr_exact(&g, 0, &PprConfig::exact(alpha)).unwrap(), vec![1.0]);
        }
        let cfg = PprConfig::monte_carlo(0.85, 1, 3);
        assert_eq!(ppr_monte_carlo(&g, 0, &cfg).unwrap(), vec![1.0]);
    }

    #[test]
    fn two_node_closed_form() {
        let alpha = 0.85;
        let x = ppr_exact(&two_nodes(), 0, &PprConfig::exact(alpha)).unwrap();
        assert!((x[0] - 1.0 / (2.0 - alpha)).abs() < 1e-8);
        assert!((x[1] - (1.0 - alpha) / (2.0 - alpha)).abs() < 1e-8);
        assert!((x[0] - 0.869565).abs() < 1e-6);
    }

    #[test]
    fn isolated_source_keeps_all_mass() {
        let g = Graph::from_edges(3, &[(0, 1)], true).unwrap();
        let x = ppr_exact(&g, 2, &PprConfig::exact(0.3)).unwrap();
        assert_eq!(x, vec![0.0, 0.0, 1.0]);
        let y = ppr_monte_carlo(&g, 2, &PprConfig::monte_carlo(0.3, 50, 1)).unwrap();
        assert_eq!(y, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn non_convergence_reports_residual() {
        let g = two_nodes();
        let cfg = PprConfig {
            max_iters: 2,
            ..PprConfig::exact(0.01)
        };
        match ppr_exact(&g, 0, &cfg) {
            Err(Error::NoConvergence {
                iterations: 2,
                residual,
            }) => assert!(residual > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_config() {
        let g = two_nodes();
        assert!(ppr_exact(&g, 0, &PprConfig::exact(0.0)).is_err());
        assert!(ppr_exact(&g, 0, &PprConfig::exact(1.5)).is_err());
        assert!(ppr_monte_carlo(&g, 0, &PprConfig::monte_carlo(0.5, 0, 0)).is_err());
        assert!(matches!(
            ppr_exact(&g, 2, &PprConfig::exact(0.5)),
            Err(Error::NodeOutOfRange { .. })
        ));
    }

    #[test]
    fn monte_carlo_two_nodes() {
        let g = two_nodes();
        let exact = ppr_exact(&g, 0, &PprConfig::exact(0.85)).unwrap();
        let cfg = PprConfig::monte_carlo(0.85, 100_000, 42);
        let mc = ppr_monte_carlo(&g, 0, &cfg).unwrap();
        assert!(l1(&mc, &exact) <= 0.02);
        assert_eq!(mc, ppr_monte_carlo(&g, 0, &cfg).unwrap());
    }

    #[test]
    fn log_transform_cases() {
        assert_eq!(log_transform(&[0.25; 4], 4), vec![0.0; 4]);
        assert_eq!(log_transform(&[0.0, 1.0], 2)[0], 0.0);
        let e = std::f64::consts::E;
        let v = log_transform(&[e / 2.0, (2.0 - e) / 2.0], 2);
        assert!((v[0] - 1.0).abs() < 1e-15);
        assert_eq!(v[1], 0.0);
    }

    #[test]
    fn rows_independent_of_execution() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)], true).unwrap();
        let cfg = PprConfig::monte_carlo(0.5, 500, 9);
        let nodes = [4, 0, 2];
        let a = similarity_rows(&g, &nodes, &cfg, Execution::Sequential).unwrap();
        let b = similarity_rows(&g, &nodes, &cfg, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].node, 4);
    }
}

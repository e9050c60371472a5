#![allow(dead_code)]

use anyembed::linalg::Mat;
use anyembed::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Mat {
    let mut r = rng(seed);
    Mat::from_fn(rows, cols, |_, _| normal(&mut r))
}

/// Erdős–Rényi graph with every node given at least one edge.
pub fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.gen::<f64>() < p {
                edges.push((u as u32, v as u32));
            }
        }
        if !edges.iter().any(|&(a, b)| a as usize == u || b as usize == u) {
            let v = (u + 1 + r.gen_range(0..n - 1)) % n;
            edges.push((u as u32, v as u32));
        }
    }
    Graph::from_edges(n, &edges, true).unwrap()
}

/// Stochastic block model over `blocks` equal blocks; returns the graph and
/// each node's block.
pub fn sbm(n: usize, blocks: usize, p_in: f64, p_out: f64, seed: u64) -> (Graph, Vec<usize>) {
    let mut r = rng(seed);
    let block: Vec<usize> = (0..n).map(|v| v * blocks / n).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if block[u] == block[v] { p_in } else { p_out };
            if r.gen::<f64>() < p {
                edges.push((u as u32, v as u32));
            }
        }
    }
    (Graph::from_edges(n, &edges, true).unwrap(), block)
}

/// Spectral norm of a symmetric matrix through the Jacobi oracle.
pub fn spectral_norm(a: &Mat) -> f64 {
    let e = anyembed::linalg::jacobi_eigen(a);
    e.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `MᵀM − EᵀE` as a dense matrix.
pub fn covariance_gap(m: &Mat, e: &Mat) -> Mat {
    let mut g = m.transpose().matmul(m);
    let f = e.transpose().matmul(e);
    for (x, y) in g.as_mut_slice().iter_mut().zip(f.as_slice()) {
        *x -= y;
    }
    g
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

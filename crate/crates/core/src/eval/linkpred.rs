use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::logistic::{fit, LogisticConfig};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::Mat;
use crate::sketch::Embedding;

/// How two node vectors are combined into an edge feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeOpKind {
    Average,
    Concat,
    Hadamard,
    WeightedL1,
    WeightedL2,
}

impl EdgeOpKind {
    pub const ALL: [EdgeOpKind; 5] = [
        EdgeOpKind::Average,
        EdgeOpKind::Concat,
        EdgeOpKind::Hadamard,
        EdgeOpKind::WeightedL1,
        EdgeOpKind::WeightedL2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeOpKind::Average => "average",
            EdgeOpKind::Concat => "concat",
            EdgeOpKind::Hadamard => "hadamard",
            EdgeOpKind::WeightedL1 => "l1",
            EdgeOpKind::WeightedL2 => "l2",
        }
    }

    pub fn output_len(self, dim: usize) -> usize {
        if self == EdgeOpKind::Concat {
            2 * dim
        } else {
            dim
        }
    }
}

impl fmt::Display for EdgeOpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeOpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "average" | "avg" => EdgeOpKind::Average,
            "concat" => EdgeOpKind::Concat,
            "hadamard" => EdgeOpKind::Hadamard,
            "l1" | "weighted_l1" | "weighted-l1" => EdgeOpKind::WeightedL1,
            "l2" | "weighted_l2" | "weighted-l2" => EdgeOpKind::WeightedL2,
            other => return Err(Error::invalid(format!("unknown edge operator {other:?}"))),
        })
    }
}

pub fn edge_features(a: &[f64], b: &[f64], op: EdgeOpKind) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let pair = a.iter().zip(b);
    Ok(match op {
        EdgeOpKind::Average => pair.map(|(x, y)| (x + y) / 2.0).collect(),
        EdgeOpKind::Concat => a.iter().chain(b).copied().collect(),
        EdgeOpKind::Hadamard => pair.map(|(x, y)| x * y).collect(),
        EdgeOpKind::WeightedL1 => pair.map(|(x, y)| (x - y).abs()).collect(),
        EdgeOpKind::WeightedL2 => pair.map(|(x, y)| (x - y) * (x - y)).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkPredReport {
    pub accuracy: f64,
    pub auc: f64,
}

/// Draws `count` distinct node pairs that are not arcs of `g` in either
/// direction (and not self-pairs).
pub fn sample_negatives(g: &Graph, count: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    let n = g.n();
    let possible = (n * n.saturating_sub(1) / 2).saturating_sub(g.m());
    if count > possible {
        return Err(Error::invalid(format!(
            "cannot draw {count} non-edges; at most {possible} exist"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 1000 * (count + 10) {
            return Err(Error::invalid("graph too dense to sample non-edges"));
        }
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u == v || g.has_arc(u, v) || g.has_arc(v, u) {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if seen.insert(key) {
            out.push((u, v));
        }
    }
    Ok(out)
}

/// ROC-AUC of `scores` for boolean `truth`, counting ties as one half.
pub fn roc_auc(scores: &[f64], truth: &[bool]) -> f64 {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let pos = truth.iter().filter(|&&t| t).count() as f64;
    let neg = truth.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return f64::NAN;
    }
    // Sum of midranks of the positives.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            if truth[k] {
                rank_sum += mid;
            }
        }
        i = j + 1;
    }
    (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg)
}

fn features(e: &Embedding, edges: &[(usize, usize)], op: EdgeOpKind) -> Result<Mat> {
    let mut m = Mat::zeros(edges.len(), op.output_len(e.k()));
    for (r, &(u, v)) in edges.iter().enumerate() {
        for w in [u, v] {
            if w >= e.n() {
                return Err(Error::NodeOutOfRange { node: w, n: e.n() });
            }
        }
        let f = edge_features(&e.node_vector(u), &e.node_vector(v), op)?;
        m.row_mut(r).copy_from_slice(&f);
    }
    Ok(m)
}

/// Trains on given positive/negative edges and scores the held-out ones.
pub fn link_predict_split(
    e: &Embedding,
    train: (&[(usize, usize)], &[(usize, usize)]),
    test: (&[(usize, usize)], &[(usize, usize)]),
    op: EdgeOpKind,
    cfg: &LogisticConfig,
) -> Result<LinkPredReport> {
    for (p, n) in [train, test] {
        if p.is_empty() || n.is_empty() {
            return Err(Error::EmptyInput(
                "link prediction needs positive and negative edges on both sides",
            ));
        }
    }
    let stack = |p: &[(usize, usize)], n: &[(usize, usize)]| -> Result<(Mat, Vec<bool>)> {
        let edges: Vec<(usize, usize)> = p.iter().chain(n).copied().collect();
        let y = (0..edges.len()).map(|i| i < p.len()).collect();
        Ok((features(e, &edges, op)?, y))
    };
    let (xtr, ytr) = stack(train.0, train.1)?;
    let (xte, yte) = stack(test.0, test.1)?;
    let model = fit(&xtr, &ytr, cfg);
    let scores: Vec<f64> = (0..xte.rows()).map(|r| model.decision(xte.row(r))).collect();
    let correct = scores.iter().zip(&yte).filter(|(s, &t)| (**s > 0.0) == t).count();
    Ok(LinkPredReport {
        accuracy: correct as f64 / yte.len() as f64,
        auc: roc_auc(&scores, &yte),
    })
}

/// Shuffles positives and negatives separately, trains on the first
/// `split_fraction` of each and tests on the rest.
pub fn link_predict(
    e: &Embedding,
    pos_edges: &[(usize, usize)],
    neg_edges: &[(usize, usize)],
    op: EdgeOpKind,
    split_fraction: f64,
    seed: u64,
    cfg: &LogisticConfig,
) -> Result<LinkPredReport> {
    if pos_edges.is_empty() || neg_edges.is_empty() {
        return Err(Error::EmptyInput("edge sets must be non-empty"));
    }
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(Error::invalid("split fraction must be in (0, 1)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos = pos_edges.to_vec();
    let mut neg = neg_edges.to_vec();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let cut = |len: usize| ((split_fraction * len as f64).round() as usize).clamp(1, len.max(2) - 1);
    let (pc, nc) = (cut(pos.len()), cut(neg.len()));
    link_predict_split(e, (&pos[..pc], &neg[..nc]), (&pos[pc..], &neg[nc..]), op, cfg)
}

use std::collections::BTreeMap;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::logistic::{fit, LogisticConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::IdMap;
use crate::linalg::Mat;
use crate::sketch::Embedding;

/// Per-node label lists; ids are dense in `0..label_count`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSet {
    pub labels: Vec<Vec<u32>>,
    pub label_count: usize,
}

impl LabelSet {
    pub fn new(labels: Vec<Vec<u32>>, label_count: usize) -> Result<Self> {
        if labels.iter().flatten().any(|&l| l as usize >= label_count) {
            return Err(Error::invalid("label id out of range"));
        }
        Ok(LabelSet { labels, label_count })
    }

    /// Reads `node_id label_id` lines (repeat a node for several labels).
    /// Node ids go through `ids`; label ids are renumbered in ascending order.
    /// Returns the label set and the number of lines naming unknown nodes.
    pub fn read<R: BufRead>(input: R, ids: &IdMap) -> Result<(Self, usize)> {
        let mut pairs = Vec::new();
        let mut unknown = 0;
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let mut it = t.split_whitespace();
            let mut field = |what: &str| -> Result<u64> {
                let tok = it.next().ok_or_else(|| Error::Parse {
                    line: lineno + 1,
                    message: format!("missing {what}"),
                })?;
                tok.parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    message: format!("invalid {what} {tok:?}"),
                })
            };
            let node = field("node id")?;
            let label = field("label id")?;
            match ids.internal(node) {
                Some(v) => pairs.push((v, label)),
                None => unknown += 1,
            }
        }
        if pairs.is_empty() {
            return Err(Error::EmptyInput("label file names no known nodes"));
        }
        let mut dense = BTreeMap::new();
        for &(_, l) in &pairs {
            dense.entry(l).or_insert(0u32);
        }
        for (i, v) in dense.values_mut().enumerate() {
            *v = i as u32;
        }
        let mut labels = vec![Vec::new(); ids.len()];
        for (v, l) in pairs {
            let id = dense[&l];
            if !labels[v].contains(&id) {
                labels[v].push(id);
            }
        }
        labels.iter_mut().for_each(|l| l.sort_unstable());
        Ok((
            LabelSet {
                labels,
                label_count: dense.len(),
            },
            unknown,
        ))
    }

    pub fn labeled_nodes(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&v| !self.labels[v].is_empty()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalSplit {
    pub train_nodes: Vec<usize>,
    pub test_nodes: Vec<usize>,
    pub train_fraction: f64,
    pub seed: u64,
}

impl EvalSplit {
    /// Shuffles the labeled nodes and puts `round(fraction · N)` of them
    /// (at least one, leaving at least one) in the training set.
    pub fn random(labels: &LabelSet, train_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "train fraction must be in (0, 1), got {train_fraction}"
            )));
        }
        let mut nodes = labels.labeled_nodes();
        if nodes.len() < 2 {
            return Err(Error::invalid("need at least two labeled nodes to split"));
        }
        nodes.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let cut = ((train_fraction * nodes.len() as f64).round() as usize).clamp(1, nodes.len() - 1);
        let test_nodes = nodes.split_off(cut);
        Ok(EvalSplit {
            train_nodes: nodes,
            test_nodes,
            train_fraction,
            seed,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationReport {
    pub micro_f1: f64,
    pub macro_f1: f64,
    /// Labels with no positive training node; they are never predicted.
    pub untrained_labels: Vec<usize>,
}

/// One-vs-rest logistic regression per label on the training nodes; each test
/// node is assigned its `t` highest-scoring labels, where `t` is its true
/// label count.
pub fn classify(
    e: &Embedding,
    labels: &LabelSet,
    split: &EvalSplit,
    cfg: &LogisticConfig,
    exec: Execution,
) -> Result<ClassificationReport> {
    if split.train_nodes.is_empty() || split.test_nodes.is_empty() {
        return Err(Error::invalid("train and test sets must be non-empty"));
    }
    let n = e.n();
    for &v in split.train_nodes.iter().chain(&split.test_nodes) {
        if v >= n || v >= labels.labels.len() {
            return Err(Error::NodeOutOfRange {
                node: v,
                n: n.min(labels.labels.len()),
            });
        }
    }
    let gather = |nodes: &[usize]| {
        let mut m = Mat::zeros(nodes.len(), e.k());
        for (r, &v) in nodes.iter().enumerate() {
            for i in 0..e.k() {
                m[(r, i)] = e.values()[(i, v)];
            }
        }
        m
    };
    let train = gather(&split.train_nodes);
    let test = gather(&split.test_nodes);

    let scores: Vec<Option<Vec<f64>>> = exec.map_range(labels.label_count, |l| {
        let y: Vec<bool> = split
            .train_nodes
            .iter()
            .map(|&v| labels.labels[v].contains(&(l as u32)))
            .collect();
        if !y.iter().any(|&t| t) {
            return None;
        }
        let model = fit(&train, &y, cfg);
        Some((0..test.rows()).map(|r| model.decision(test.row(r))).collect())
    });
    let untrained_labels: Vec<usize> = (0..labels.label_count).filter(|&l| scores[l].is_none()).collect();

    let mut tp = vec![0u64; labels.label_count];
    let mut fp = vec![0u64; labels.label_count];
    let mut fn_ = vec![0u64; labels.label_count];
    for (r, &v) in split.test_nodes.iter().enumerate() {
        let truth = &labels.labels[v];
        let mut ranked: Vec<(f64, usize)> = (0..labels.label_count)
            .map(|l| (scores[l].as_ref().map_or(f64::NEG_INFINITY, |s| s[r]), l))
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let predicted: Vec<usize> = ranked.iter().take(truth.len()).map(|&(_, l)| l).collect();
        for &l in &predicted {
            if truth.contains(&(l as u32)) {
                tp[l] += 1;
            } else {
                fp[l] += 1;
            }
        }
        for &l in truth {
            if !predicted.contains(&(l as usize)) {
                fn_[l as usize] += 1;
            }
        }
    }
    let (stp, sfp, sfn) = (tp.iter().sum::<u64>(), fp.iter().sum::<u64>(), fn_.iter().sum::<u64>());
    let f1 = |tp: u64, fp: u64, fn_: u64| {
        let den = 2 * tp + fp + fn_;
        (den > 0).then(|| 2.0 * tp as f64 / den as f64)
    };
    let micro_f1 = f1(stp, sfp, sfn).unwrap_or(0.0);
    let per_label: Vec<f64> = (0..labels.label_count)
        .filter_map(|l| f1(tp[l], fp[l], fn_[l]))
        .collect();
    let macro_f1 = if per_label.is_empty() {
        0.0
    } else {
        per_label.iter().sum::<f64>() / per_label.len() as f64
    };
    Ok(ClassificationReport {
        micro_f1,
        macro_f1,
        untrained_labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::SketcherKind;

    fn clusters() -> (Embedding, LabelSet) {
        let n = 40;
        let values = Mat::from_fn(2, n, |i, j| {
            if i == 0 {
                if j < 20 {
                    1.0
                } else {
                    -1.0
                }
            } else {
                0.0
            }
        });
        let labels = (0..n).map(|j| vec![(j >= 20) as u32]).collect();
        (
            Embedding::new(values, SketcherKind::Fd, 0, 0.5),
            LabelSet::new(labels, 2).unwrap(),
        )
    }

    #[test]
    fn separable_clusters() {
        let (e, labels) = clusters();
        let split = EvalSplit::random(&labels, 0.5, 1).unwrap();
        assert_eq!(split.train_nodes.len(), 20);
        let r = classify(&e, &labels, &split, &LogisticConfig::default(), Execution::Sequential).unwrap();
        assert_eq!(r.micro_f1, 1.0);
        assert_eq!(r.macro_f1, 1.0);
        assert!(r.untrained_labels.is_empty());
    }

    #[test]
    fn missing_training_label_is_reported() {
        let (e, mut labels) = clusters();
        labels.labels[0] = vec![0];
        labels.label_count = 3;
        labels.labels[39] = vec![2];
        let split = EvalSplit {
            train_nodes: (1..39).collect(),
            test_nodes: vec![0, 39],
            train_fraction: 0.95,
            seed: 0,
        };
        let r = classify(&e, &labels, &split, &LogisticConfig::default(), Execution::Sequential).unwrap();
        assert_eq!(r.untrained_labels, vec![2]);
        assert!(r.micro_f1 < 1.0);
    }

    #[test]
    fn split_validation() {
        let (_, labels) = clusters();
        assert!(EvalSplit::random(&labels, 0.0, 0).is_err());
        assert!(EvalSplit::random(&labels, 1.0, 0).is_err());
        let s = EvalSplit::random(&labels, 0.01, 0).unwrap();
        assert_eq!(s.train_nodes.len(), 1);
        assert_eq!(
            EvalSplit::random(&labels, 0.3, 5).unwrap(),
            EvalSplit::random(&labels, 0.3, 5).unwrap()
        );
    }

    #[test]
    fn label_file_parsing() {
        let (_, ids) = crate::graph::load_edgelist("10 20\n20 30\n".as_bytes(), true).unwrap();
        let (labels, unknown) = LabelSet::read("10 5\n10 7\n30 5\n99 1\n".as_bytes(), &ids).unwrap();
        assert_eq!(unknown, 1);
        assert_eq!(labels.label_count, 2);
        assert_eq!(labels.labels, vec![vec![0, 1], vec![], vec![0]]);
        assert_eq!(labels.labeled_nodes(), vec![0, 2]);
        assert!(LabelSet::read("10 x\n".as_bytes(), &ids).is_err());
    }
}

mod common;

use anyembed::eval::{classify, edge_features, EdgeOpKind, EvalSplit, LabelSet, LogisticConfig};
use anyembed::graph::load_edgelist;
use anyembed::linalg::{covariance_error, jacobi_eigen, DenseRows, Mat};
use anyembed::similarity::{log_transform, ppr_monte_carlo};
use anyembed::sketch::{FrequentDirections, Sketcher};
use anyembed::{Embedding, Execution, PprConfig, SketcherKind};
use common::{covariance_gap, gaussian, spectral_norm};
use proptest::prelude::*;

fn edge_text() -> impl Strategy<Value = String> {
    prop::collection::vec((0u64..40, 0u64..40), 1..80).prop_map(|edges| {
        edges
            .iter()
            .map(|(u, v)| format!("{} {}\n", u * 7 + 3, v * 7 + 3))
            .collect()
    })
}

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = Mat> {
    (1..=max_rows, 1..=max_cols, any::<u64>()).prop_map(|(r, c, seed)| gaussian(r, c, seed))
}

fn fd_factor(m: &Mat, d: usize, order: &[usize]) -> Mat {
    let mut fd = FrequentDirections::new(d, m.cols()).unwrap();
    for &i in order {
        fd.insert_row(i, m.row(i)).unwrap();
    }
    fd.sketch_factor(d).unwrap().values().clone()
}

fn min_eigenvalue(a: &Mat) -> f64 {
    *jacobi_eigen(a).values.last().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reload_is_identity(text in edge_text(), undirected in any::<bool>()) {
        let (g, ids) = load_edgelist(text.as_bytes(), undirected).unwrap();
        let mut out = Vec::new();
        g.write_edgelist(Some(&ids), &mut out).unwrap();
        let (g2, ids2) = load_edgelist(out.as_slice(), undirected).unwrap();
        prop_assert_eq!(&g, &g2);
        prop_assert_eq!(ids, ids2);
        prop_assert_eq!(g.offsets().len(), g.n() + 1);
        prop_assert_eq!(*g.offsets().last().unwrap(), g.targets().len());
        prop_assert!(g.targets().iter().all(|&t| (t as usize) < g.n()));
    }

    #[test]
    fn transition_rows_are_stochastic(text in edge_text(), undirected in any::<bool>()) {
        let (g, _) = load_edgelist(text.as_bytes(), undirected).unwrap();
        for v in 0..g.n() {
            let row = g.transition_row(v).unwrap();
            prop_assert_eq!(row.len(), g.degree(v));
            if g.degree(v) > 0 {
                let s: f64 = row.iter().map(|&(_, p)| p).sum();
                prop_assert!((s - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn fd_bound_holds_at_every_prefix(m in matrix(40, 10), d in 1usize..6) {
        let mut fd = FrequentDirections::new(d, m.cols()).unwrap();
        for i in 0..m.rows() {
            fd.insert_row(i, m.row(i)).unwrap();
            let prefix = Mat::from_fn(i + 1, m.cols(), |r, c| m[(r, c)]);
            let e = fd.sketch_factor(d).unwrap();
            let gap = spectral_norm(&covariance_gap(&prefix, e.values()));
            prop_assert!(gap <= prefix.frobenius_sq() / d as f64 * (1.0 + 1e-10) + 1e-12,
                "prefix {}: {} > {}", i + 1, gap, prefix.frobenius_sq() / d as f64);
        }
    }

    #[test]
    fn sketch_never_gains_energy(m in matrix(30, 8), d in 1usize..5) {
        let mut fd = FrequentDirections::new(d, m.cols()).unwrap();
        let mut prev = Mat::zeros(0, m.cols());
        for i in 0..m.rows() {
            fd.insert_row(i, m.row(i)).unwrap();
            let now = fd.weighted_buffer();
            // before + r rᵀ − after ≽ 0
            let mut before = Mat::zeros(prev.rows() + 1, m.cols());
            for r in 0..prev.rows() {
                before.row_mut(r).copy_from_slice(prev.row(r));
            }
            before.row_mut(prev.rows()).copy_from_slice(m.row(i));
            let gap = covariance_gap(&before, &now);
            let scale = before.frobenius_sq().max(1.0);
            prop_assert!(min_eigenvalue(&gap) >= -1e-10 * scale);
            prev = now;
        }
        let total = covariance_gap(&m, &fd.weighted_buffer());
        prop_assert!(min_eigenvalue(&total) >= -1e-10 * m.frobenius_sq().max(1.0));
    }

    #[test]
    fn bound_holds_for_any_order(m in matrix(30, 8), d in 1usize..5, seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut order: Vec<usize> = (0..m.rows()).collect();
        order.shuffle(&mut common::rng(seed));
        let e = fd_factor(&m, d, &order);
        let gap = spectral_norm(&covariance_gap(&m, &e));
        prop_assert!(gap <= m.frobenius_sq() / d as f64 * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn embedding_prefixes_nest(m in matrix(30, 12), d in 2usize..6) {
        let mut fd = FrequentDirections::new(d, m.cols()).unwrap();
        for i in 0..m.rows() {
            fd.insert_row(i, m.row(i)).unwrap();
        }
        let full = fd.get_embedding(d).unwrap();
        for k in 1..d {
            let part = fd.get_embedding(k).unwrap();
            for r in 0..k {
                prop_assert_eq!(part.values().row(r), full.values().row(r));
            }
        }
    }

    #[test]
    fn covariance_error_ignores_row_order(m in matrix(20, 8), d in 1usize..4, seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let order: Vec<usize> = (0..m.rows()).collect();
        let e = Embedding::new(fd_factor(&m, d, &order), SketcherKind::Fd, m.rows() as u64, 1.0);
        let mut perm = order.clone();
        perm.shuffle(&mut common::rng(seed));
        let shuffled = Mat::from_fn(m.rows(), m.cols(), |r, c| m[(perm[r], c)]);
        let a = covariance_error(&DenseRows(&m), &e).unwrap();
        let b = covariance_error(&DenseRows(&shuffled), &e).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a + 1e-12, "{} vs {}", a, b);
    }

    #[test]
    fn log_transform_is_monotone(p in prop::collection::vec(0.0f64..=1.0, 1..30), i in any::<prop::sample::Index>(), bump in 0.0f64..1.0) {
        let n = p.len();
        let base = log_transform(&p, n);
        prop_assert!(base.iter().all(|v| v.is_finite() && *v >= 0.0));
        let mut q = p.clone();
        let j = i.index(n);
        q[j] = (q[j] + bump).min(1.0);
        let up = log_transform(&q, n);
        prop_assert!(up[j] >= base[j]);
    }

    #[test]
    fn monte_carlo_is_deterministic(n in 2usize..15, seed in any::<u64>(), v in 0usize..15) {
        let g = common::random_graph(n, 0.3, seed);
        let cfg = PprConfig::monte_carlo(0.85, 200, seed);
        let v = v % n;
        let a = ppr_monte_carlo(&g, v, &cfg).unwrap();
        prop_assert_eq!(&a, &ppr_monte_carlo(&g, v, &cfg).unwrap());
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn edge_operator_symmetries(a in prop::collection::vec(-5.0f64..5.0, 1..10), seed in any::<u64>()) {
        let b = gaussian(1, a.len(), seed).into_vec();
        for op in [EdgeOpKind::WeightedL1, EdgeOpKind::WeightedL2] {
            prop_assert!(edge_features(&a, &a, op).unwrap().iter().all(|&x| x == 0.0));
        }
        for op in [EdgeOpKind::Hadamard, EdgeOpKind::Average, EdgeOpKind::WeightedL1, EdgeOpKind::WeightedL2] {
            prop_assert_eq!(edge_features(&a, &b, op).unwrap(), edge_features(&b, &a, op).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn larger_sketches_are_no_worse(m in matrix(60, 12), d1 in 1usize..6, extra in 1usize..6) {
        let d2 = d1 + extra;
        let order: Vec<usize> = (0..m.rows()).collect();
        let small = spectral_norm(&covariance_gap(&m, &fd_factor(&m, d1, &order)));
        let large = spectral_norm(&covariance_gap(&m, &fd_factor(&m, d2, &order)));
        let fro = m.frobenius_sq();
        prop_assert!(large / fro <= small / fro + 1e-9, "d={}: {} vs d={}: {}", d1, small / fro, d2, large / fro);
    }

    #[test]
    fn classification_is_rotation_invariant(seed in any::<u64>()) {
        let n = 60;
        let k = 4;
        let mut r = common::rng(seed);
        let labels: Vec<Vec<u32>> = (0..n).map(|v| vec![(v % 3) as u32]).collect();
        let values = Mat::from_fn(k, n, |i, j| (j % 3) as f64 * 0.3 * (i as f64 - 1.5) + common::normal(&mut r));
        let labels = LabelSet::new(labels, 3).unwrap();
        let split = EvalSplit::random(&labels, 0.5, seed).unwrap();
        let q = anyembed::linalg::thin_svd(&gaussian(k, k, seed ^ 1)).unwrap().u;
        let rotated = q.matmul(&values);
        let cfg = LogisticConfig::default();
        let a = classify(&Embedding::new(values, SketcherKind::Fd, 0, 0.5), &labels, &split, &cfg, Execution::Sequential).unwrap();
        let b = classify(&Embedding::new(rotated, SketcherKind::Fd, 0, 0.5), &labels, &split, &cfg, Execution::Sequential).unwrap();
        prop_assert!((a.micro_f1 - b.micro_f1).abs() <= 1e-6);
        prop_assert!((a.macro_f1 - b.macro_f1).abs() <= 1e-6);
        prop_assert!((0.0..=1.0).contains(&a.micro_f1) && (0.0..=1.0).contains(&a.macro_f1));
    }
}

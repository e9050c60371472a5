//! Downstream evaluation: multi-label node classification and link prediction.

mod classify;
mod linkpred;
pub mod logistic;

pub use classify::{classify, ClassificationReport, EvalSplit, LabelSet};
pub use linkpred::{
    edge_features, link_predict, link_predict_split, roc_auc, sample_negatives, EdgeOpKind, LinkPredReport,
};
pub use logistic::{LogisticConfig, LogisticModel};

/// Mean and (population) standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

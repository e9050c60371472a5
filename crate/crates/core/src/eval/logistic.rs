//! L2-regularized binary logistic regression fitted by damped Newton steps.
//!
//! Objective: `½‖w‖² + C Σ log(1 + exp(−yᵢ (w·xᵢ + b)))` with the bias treated
//! as one more (regularized) weight on a constant feature. The problem is
//! strictly convex, so the optimum does not depend on the solver.

use crate::linalg::{dot, Mat};

#[derive(Clone, Copy, Debug)]
pub struct LogisticConfig {
    /// Inverse regularization strength `C`.
    pub c: f64,
    pub max_iters: usize,
    /// Stop when `‖∇‖ ≤ tol · max(1, ‖∇₀‖)`.
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            c: 1.0,
            max_iters: 100,
            tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Fits on the rows of `x` with boolean targets.
pub fn fit(x: &Mat, y: &[bool], cfg: &LogisticConfig) -> LogisticModel {
    assert_eq!(x.rows(), y.len());
    let p = x.cols() + 1;
    let sign: Vec<f64> = y.iter().map(|&t| if t { 1.0 } else { -1.0 }).collect();
    let mut w = vec![0.0; p];
    let features = |i: usize, j: usize| if j + 1 == p { 1.0 } else { x[(i, j)] };

    let objective = |w: &[f64]| {
        let mut f = 0.5 * dot(w, w);
        for i in 0..x.rows() {
            let z = dot(&w[..p - 1], x.row(i)) + w[p - 1];
            f += cfg.c * log1p_exp(-sign[i] * z);
        }
        f
    };

    let mut f = objective(&w);
    let mut g0 = None;
    for _ in 0..cfg.max_iters {
        let mut grad = w.clone();
        let mut hess = Mat::identity(p);
        for i in 0..x.rows() {
            let z = dot(&w[..p - 1], x.row(i)) + w[p - 1];
            let q = sigmoid(z);
            let coef = cfg.c * (q - if y[i] { 1.0 } else { 0.0 });
            let curv = cfg.c * q * (1.0 - q);
            for a in 0..p {
                let xa = features(i, a);
                grad[a] += coef * xa;
                if curv > 0.0 {
                    let s = curv * xa;
                    for b in 0..=a {
                        hess[(a, b)] += s * features(i, b);
                    }
                }
            }
        }
        let gnorm = dot(&grad, &grad).sqrt();
        let g0 = *g0.get_or_insert(gnorm.max(1.0));
        if gnorm <= cfg.tol * g0 {
            break;
        }
        let step = cholesky_solve(&mut hess, &grad);
        // Backtracking on the Newton direction.
        let slope = -dot(&grad, &step);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let trial: Vec<f64> = w.iter().zip(&step).map(|(a, s)| a - t * s).collect();
            let ft = objective(&trial);
            if ft <= f + 1e-4 * t * slope {
                w = trial;
                f = ft;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let bias = w.pop().unwrap_or(0.0);
    LogisticModel { weights: w, bias }
}

/// Solves `A x = b` for symmetric positive definite `A` (lower triangle read,
/// overwritten with the factor).
fn cholesky_solve(a: &mut Mat, b: &[f64]) -> Vec<f64> {
    let n = a.rows();
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= a[(j, k)] * a[(j, k)];
        }
        let d = d.max(f64::MIN_POSITIVE).sqrt();
        a[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= a[(i, k)] * a[(j, k)];
            }
            a[(i, j)] = s / d;
        }
    }
    let mut z = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            z[i] -= a[(i, k)] * z[k];
        }
        z[i] /= a[(i, i)];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            z[i] -= a[(k, i)] * z[k];
        }
        z[i] /= a[(i, i)];
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_matches_direct() {
        let mut a = Mat::from_rows(&[[4.0, 2.0, 0.0], [2.0, 5.0, 1.0], [0.0, 1.0, 3.0]]);
        let orig = a.clone();
        let x = cholesky_solve(&mut a, &[1.0, 2.0, 3.0]);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| orig[(i, j)] * x[j]).sum();
            assert!((r - [1.0, 2.0, 3.0][i]).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_vanishes_at_optimum() {
        let x = Mat::from_rows(&[[1.0, 0.2], [0.5, -1.0], [-1.0, 0.3], [-0.2, -0.7], [0.9, 0.9]]);
        let y = [true, false, false, true, true];
        let cfg = LogisticConfig::default();
        let m = fit(&x, &y, &cfg);
        let mut grad = m.weights.clone();
        let mut gb = m.bias;
        for i in 0..5 {
            let r = cfg.c * (sigmoid(m.decision(x.row(i))) - if y[i] { 1.0 } else { 0.0 });
            grad[0] += r * x[(i, 0)];
            grad[1] += r * x[(i, 1)];
            gb += r;
        }
        assert!(grad.iter().chain([&gb]).all(|g| g.abs() < 1e-9), "{grad:?} {gb}");
    }

    #[test]
    fn one_class_stays_finite() {
        let x = Mat::from_rows(&[[1.0], [2.0]]);
        let m = fit(&x, &[true, true], &LogisticConfig::default());
        assert!(m.bias.is_finite() && m.decision(&[1.5]) > 0.0);
    }
}

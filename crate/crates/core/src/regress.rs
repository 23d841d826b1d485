//! Least squares and L2-regularised logistic regression used by the imputer and the
//! attribute-inference attackers.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Ridge added to the normal equations when they are singular.
pub const SINGULAR_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
}

impl LinearModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        (0..x.nrows())
            .map(|i| self.intercept + (0..x.ncols()).map(|j| self.coef[j] * x[(i, j)]).sum::<f64>())
            .collect()
    }
}

/// Solves `(A + ridge I) b = rhs` for symmetric positive (semi)definite `A`, escalating the
/// ridge from [`SINGULAR_RIDGE`] when Cholesky fails.
fn solve_spd(a: &DMatrix<f64>, rhs: &DVector<f64>, ridge: f64) -> DVector<f64> {
    let p = a.nrows();
    let mut lambda = ridge;
    loop {
        let mut m = a.clone();
        if lambda > 0.0 {
            for i in 0..p {
                m[(i, i)] += lambda;
            }
        }
        if let Some(ch) = m.cholesky() {
            let sol = ch.solve(rhs);
            if sol.iter().all(|v| v.is_finite()) {
                return sol;
            }
        }
        lambda = if lambda == 0.0 { SINGULAR_RIDGE } else { lambda * 10.0 };
        if lambda > 1e6 {
            return DVector::zeros(p);
        }
    }
}

/// Least squares with an unpenalised intercept and L2 penalty `ridge` on the slopes.
pub fn fit_least_squares(x: &DMatrix<f64>, y: &[f64], ridge: f64) -> LinearModel {
    let (n, p) = x.shape();
    let ymean = y.iter().sum::<f64>() / n as f64;
    if p == 0 {
        return LinearModel {
            intercept: ymean,
            coef: Vec::new(),
        };
    }
    let xmeans: Vec<f64> = (0..p).map(|j| x.column(j).sum() / n as f64).collect();
    let mut xc = x.clone();
    for j in 0..p {
        for i in 0..n {
            xc[(i, j)] -= xmeans[j];
        }
    }
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - ymean));
    let xtx = xc.transpose() * &xc;
    let xty = xc.transpose() * yc;
    let beta = solve_spd(&xtx, &xty, ridge);
    let intercept = ymean - beta.iter().zip(&xmeans).map(|(b, m)| b * m).sum::<f64>();
    LinearModel {
        intercept,
        coef: beta.iter().copied().collect(),
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

/// Binary logistic regression, `P(y = 1 | x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
}

impl LogisticModel {
    pub fn probability_row(&self, x: &[f64]) -> f64 {
        sigmoid(self.intercept + self.coef.iter().zip(x).map(|(b, v)| b * v).sum::<f64>())
    }
}

/// Newton-Raphson on the L2-penalised log-likelihood (`lambda / 2 * |w|^2`, intercept free).
pub fn fit_logistic(x: &DMatrix<f64>, y: &[bool], lambda: f64) -> LogisticModel {
    let (n, p) = x.shape();
    let dim = p + 1;
    let mut w = DVector::<f64>::zeros(dim);
    let pos = y.iter().filter(|&&b| b).count() as f64;
    let prior = ((pos + 0.5) / (n as f64 - pos + 0.5)).ln();
    w[p] = prior;
    let row = |i: usize, j: usize| if j == p { 1.0 } else { x[(i, j)] };
    for _ in 0..50 {
        let mut grad = DVector::<f64>::zeros(dim);
        let mut hess = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..n {
            let z: f64 = (0..dim).map(|j| w[j] * row(i, j)).sum();
            let mu = sigmoid(z);
            let r = mu - f64::from(u8::from(y[i]));
            let s = (mu * (1.0 - mu)).max(1e-10);
            for a in 0..dim {
                let xa = row(i, a);
                grad[a] += r * xa;
                for b in a..dim {
                    hess[(a, b)] += s * xa * row(i, b);
                }
            }
        }
        for a in 0..dim {
            for b in 0..a {
                hess[(a, b)] = hess[(b, a)];
            }
        }
        for j in 0..p {
            grad[j] += lambda * w[j];
            hess[(j, j)] += lambda;
        }
        let step = solve_spd(&hess, &grad, 0.0);
        w -= &step;
        if step.amax() < 1e-8 {
            break;
        }
    }
    LogisticModel {
        intercept: w[p],
        coef: w.iter().take(p).copied().collect(),
    }
}

/// Multi-class classifier: constant, single logistic, or one-vs-rest logistic with argmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Classifier {
    Constant(u32),
    OneVsRest { classes: Vec<u32>, models: Vec<LogisticModel> },
}

impl Classifier {
    pub fn fit(x: &DMatrix<f64>, y: &[u32], lambda: f64) -> Classifier {
        let mut classes: Vec<u32> = y.to_vec();
        classes.sort_unstable();
        classes.dedup();
        match classes.len() {
            0 => Classifier::Constant(0),
            1 => Classifier::Constant(classes[0]),
            2 => {
                let target: Vec<bool> = y.iter().map(|&c| c == classes[1]).collect();
                let m = fit_logistic(x, &target, lambda);
                let neg = LogisticModel {
                    intercept: -m.intercept,
                    coef: m.coef.iter().map(|c| -c).collect(),
                };
                Classifier::OneVsRest {
                    classes,
                    models: vec![neg, m],
                }
            }
            _ => {
                let models = classes
                    .iter()
                    .map(|&c| {
                        let target: Vec<bool> = y.iter().map(|&v| v == c).collect();
                        fit_logistic(x, &target, lambda)
                    })
                    .collect();
                Classifier::OneVsRest { classes, models }
            }
        }
    }

    /// Class with the highest probability; ties go to the lowest class.
    pub fn predict_row(&self, x: &[f64]) -> u32 {
        match self {
            Classifier::Constant(c) => *c,
            Classifier::OneVsRest { classes, models } => {
                let mut best = (f64::NEG_INFINITY, classes[0]);
                for (c, m) in classes.iter().zip(models) {
                    let p = m.probability_row(x);
                    if p > best.0 {
                        best = (p, *c);
                    }
                }
                best.1
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Classifier::Constant(_))
    }
}

use nalgebra::{DMatrix, DVector};

use super::{ModelError, Task};

const GRADIENT_TOLERANCE: f64 = 1e-6;
const MAX_ITERATIONS: usize = 10_000;

/// A linear model on internally standardized features.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    task: Task,
    means: Vec<f64>,
    scales: Vec<f64>,
    weights: Vec<f64>,
    intercept: f64,
    iterations: usize,
}

fn standardize(x: &[Vec<f64>]) -> Result<(DMatrix<f64>, Vec<f64>, Vec<f64>), ModelError> {
    let n = x.len();
    if n < 2 {
        return Err(ModelError::TooFewRows(n));
    }
    let p = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != p {
            return Err(ModelError::WidthMismatch { expected: p, found: row.len() });
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite {
                row: i,
                id: i.to_string(),
                column: format!("f{j}"),
            });
        }
    }
    let means: Vec<f64> = (0..p).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let scales: Vec<f64> = (0..p)
        .map(|j| {
            let var = x.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / n as f64;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let z = DMatrix::from_fn(n, p, |i, j| (x[i][j] - means[j]) / scales[j]);
    Ok((z, means, scales))
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// L2-penalized logistic regression by full-batch gradient descent on the
/// mean log-loss from zero weights, with step `1/L` where `L` bounds the
/// Hessian. The intercept is not penalized.
pub fn fit_logistic(x: &[Vec<f64>], y: &[bool], l2: f64) -> Result<LinearModel, ModelError> {
    if x.len() != y.len() {
        return Err(ModelError::InvalidParams(format!("{} rows but {} labels", x.len(), y.len())));
    }
    if !(l2 >= 0.0) {
        return Err(ModelError::InvalidParams(format!("l2 must be non-negative, got {l2}")));
    }
    let (z, means, scales) = standardize(x)?;
    let pos = y.iter().filter(|&&b| b).count();
    if pos == 0 || pos == y.len() {
        return Err(ModelError::SingleClass(y.len()));
    }
    let (n, p) = z.shape();
    let nf = n as f64;
    let mut augmented = DMatrix::from_element(n, p + 1, 1.0);
    augmented.view_mut((0, 0), (n, p)).copy_from(&z);
    let gram = augmented.transpose() * &augmented / nf;
    let lambda_max = gram.symmetric_eigenvalues().max();
    let lipschitz = 0.25 * lambda_max + l2;
    let step = 1.0 / lipschitz;
    let target = DVector::from_iterator(n, y.iter().map(|&b| f64::from(b)));
    let mut w = DVector::zeros(p + 1);
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        let logits = &augmented * &w;
        let residual = DVector::from_iterator(n, logits.iter().map(|&t| sigmoid(t))) - &target;
        let mut grad = augmented.transpose() * residual / nf;
        for j in 0..p {
            grad[j] += l2 * w[j];
        }
        if grad.norm() <= GRADIENT_TOLERANCE {
            break;
        }
        w -= grad * step;
        iterations += 1;
    }
    Ok(LinearModel {
        task: Task::Classify,
        means,
        scales,
        weights: w.rows(0, p).iter().copied().collect(),
        intercept: w[p],
        iterations,
    })
}

/// Ridge regression in closed form. Standardized features are centered, so
/// the intercept is the target mean and only the weights are penalized.
pub fn fit_ridge(x: &[Vec<f64>], y: &[f64], l2: f64) -> Result<LinearModel, ModelError> {
    if x.len() != y.len() {
        return Err(ModelError::InvalidParams(format!("{} rows but {} targets", x.len(), y.len())));
    }
    if !(l2 >= 0.0) {
        return Err(ModelError::InvalidParams(format!("l2 must be non-negative, got {l2}")));
    }
    let (z, means, scales) = standardize(x)?;
    let (n, p) = z.shape();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let mut a = z.transpose() * &z;
    for j in 0..p {
        a[(j, j)] += l2;
    }
    let eig = a.clone().symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > hi * 1e-12) {
        return Err(ModelError::Singular(l2));
    }
    let chol = a.cholesky().ok_or(ModelError::Singular(l2))?;
    let w = chol.solve(&(z.transpose() * yc));
    Ok(LinearModel {
        task: Task::Regress,
        means,
        scales,
        weights: w.iter().copied().collect(),
        intercept: y_mean,
        iterations: 0,
    })
}

impl LinearModel {
    pub fn task(&self) -> Task {
        self.task
    }

    /// Linear predictor on the original feature scale.
    pub fn decision(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.weights.len(), "row width");
        self.intercept
            + x.iter()
                .zip(&self.means)
                .zip(&self.scales)
                .zip(&self.weights)
                .map(|(((v, m), s), w)| w * (v - m) / s)
                .sum::<f64>()
    }

    /// Probability for logistic models, the fitted value for ridge.
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.task {
            Task::Classify => sigmoid(self.decision(x)),
            Task::Regress => self.decision(x),
        }
    }

    /// Weights per standard deviation of each feature.
    pub fn standardized_coefficients(&self) -> &[f64] {
        &self.weights
    }

    /// `(intercept, weights)` on the original feature scale.
    pub fn coefficients(&self) -> (f64, Vec<f64>) {
        let w: Vec<f64> = self.weights.iter().zip(&self.scales).map(|(w, s)| w / s).collect();
        let b = self.intercept - w.iter().zip(&self.means).map(|(w, m)| w * m).sum::<f64>();
        (b, w)
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

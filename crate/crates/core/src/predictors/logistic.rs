//! Weighted L2-regularized logistic regression on standardized features.

use super::PredictError;
use crate::linalg::cholesky_solve;

/// Row-major design matrix with per-row labels and weights.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Design {
    pub dims: usize,
    pub rows: Vec<f64>,
    pub labels: Vec<bool>,
    pub weights: Vec<f64>,
}

impl Design {
    pub fn new(dims: usize) -> Self {
        Self {
            dims,
            ..Self::default()
        }
    }

    pub fn push(&mut self, features: &[f64], label: bool, weight: f64) {
        assert_eq!(features.len(), self.dims);
        self.rows.extend_from_slice(features);
        self.labels.push(label);
        self.weights.push(weight);
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dims..(i + 1) * self.dims]
    }

    pub fn has_both_classes(&self) -> bool {
        let pos = self.labels.iter().zip(&self.weights).any(|(&l, &w)| l && w > 0.0);
        let neg = self.labels.iter().zip(&self.weights).any(|(&l, &w)| !l && w > 0.0);
        pos && neg
    }
}

/// Mean weighted log-loss plus `l2 / 2 * |beta|^2`, and its gradient.
/// `params` is `[beta_1..beta_d, bias]`; the bias is not penalized.
pub fn loss_and_gradient(design: &Design, params: &[f64], l2: f64) -> (f64, Vec<f64>) {
    let d = design.dims;
    let total: f64 = design.weights.iter().sum();
    let mut loss = 0.0;
    let mut grad = vec![0.0; d + 1];
    for i in 0..design.len() {
        let x = design.row(i);
        let z: f64 = params[d] + x.iter().zip(params).map(|(a, b)| a * b).sum::<f64>();
        let y = if design.labels[i] { 1.0 } else { 0.0 };
        let w = design.weights[i] / total;
        // log(1 + e^z) - y z, evaluated stably
        let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
        loss += w * (softplus - y * z);
        let r = w * (sigmoid(z) - y);
        for (g, xi) in grad.iter_mut().zip(x) {
            *g += r * xi;
        }
        grad[d] += r;
    }
    for j in 0..d {
        loss += 0.5 * l2 * params[j] * params[j];
        grad[j] += l2 * params[j];
    }
    (loss, grad)
}

/// Hessian of [`loss_and_gradient`] with a tiny ridge on every diagonal
/// entry so that it stays positive definite.
fn hessian(design: &Design, params: &[f64], l2: f64) -> Vec<Vec<f64>> {
    let d = design.dims;
    let total: f64 = design.weights.iter().sum();
    let mut h = vec![vec![0.0; d + 1]; d + 1];
    let mut x1 = vec![1.0; d + 1];
    for i in 0..design.len() {
        let x = design.row(i);
        x1[..d].copy_from_slice(x);
        let z: f64 = params[d] + x.iter().zip(params).map(|(a, b)| a * b).sum::<f64>();
        let p = sigmoid(z);
        let w = design.weights[i] / total * p * (1.0 - p);
        for a in 0..=d {
            let wa = w * x1[a];
            for b in 0..=a {
                h[a][b] += wa * x1[b];
            }
        }
    }
    for a in 0..=d {
        h[a][a] += if a < d { l2 } else { 0.0 } + 1e-10;
        for b in 0..a {
            h[b][a] = h[a][b];
        }
    }
    h
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticModel {
    mean: Vec<f64>,
    scale: Vec<f64>,
    params: Vec<f64>,
    /// Objective after every gradient step.
    pub loss_trace: Vec<f64>,
}

const MAX_ITERATIONS: usize = 100;
const GRADIENT_TOL: f64 = 1e-6;

impl LogisticModel {
    /// Fits by Newton's method with Armijo backtracking, so the objective
    /// never increases between steps. `warm` seeds the standardized-space
    /// parameters, e.g. from a neighboring regularization strength.
    pub fn fit(design: &Design, l2: f64, warm: Option<&LogisticModel>) -> Result<Self, PredictError> {
        if !design.has_both_classes() {
            return Err(PredictError::SingleClass);
        }
        let d = design.dims;
        let total: f64 = design.weights.iter().sum();
        let mut mean = vec![0.0; d];
        for i in 0..design.len() {
            for (m, x) in mean.iter_mut().zip(design.row(i)) {
                *m += design.weights[i] * x / total;
            }
        }
        let mut var = vec![0.0; d];
        for i in 0..design.len() {
            for ((v, x), m) in var.iter_mut().zip(design.row(i)).zip(&mean) {
                *v += design.weights[i] * (x - m).powi(2) / total;
            }
        }
        let scale: Vec<f64> = var.iter().map(|v| if *v > 1e-24 { v.sqrt() } else { 1.0 }).collect();
        let mut std_design = Design::new(d);
        std_design.labels = design.labels.clone();
        std_design.weights = design.weights.clone();
        std_design.rows = design
            .rows
            .chunks(d.max(1))
            .flat_map(|row| row.iter().zip(&mean).zip(&scale).map(|((x, m), s)| (x - m) / s))
            .collect();
        if d == 0 {
            std_design.rows.clear();
        }

        let mut params = match warm {
            Some(w) if w.params.len() == d + 1 => w.params.clone(),
            _ => vec![0.0; d + 1],
        };
        let (mut loss, mut grad) = loss_and_gradient(&std_design, &params, l2);
        let mut trace = vec![loss];
        for _ in 0..MAX_ITERATIONS {
            let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
            if gnorm2.sqrt() < GRADIENT_TOL {
                break;
            }
            let hessian = hessian(&std_design, &params, l2);
            let direction = cholesky_solve(&hessian, &grad).unwrap_or_else(|| grad.clone());
            let slope: f64 = direction.iter().zip(&grad).map(|(a, b)| a * b).sum();
            let mut accepted = false;
            let mut t = 1.0;
            for _ in 0..60 {
                let trial: Vec<f64> = params.iter().zip(&direction).map(|(p, g)| p - t * g).collect();
                let (trial_loss, trial_grad) = loss_and_gradient(&std_design, &trial, l2);
                if trial_loss <= loss - 1e-4 * t * slope {
                    params = trial;
                    loss = trial_loss;
                    grad = trial_grad;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
            trace.push(loss);
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(PredictError::NonFinite("logistic regression weights"));
        }
        Ok(Self {
            mean,
            scale,
            params,
            loss_trace: trace,
        })
    }

    pub fn predict(&self, features: &[f64]) -> f64 {
        let d = self.mean.len();
        let mut z = self.params[d];
        for j in 0..d {
            z += self.params[j] * (features[j] - self.mean[j]) / self.scale[j];
        }
        sigmoid(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_design(rng: &mut ChaCha8Rng, rows: usize, dims: usize) -> Design {
        let mut d = Design::new(dims);
        for i in 0..rows {
            let x: Vec<f64> = (0..dims).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            d.push(&x, i % 2 == 0 || rng.random_bool(0.3), rng.random::<f64>() + 0.5);
        }
        d
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let design = random_design(&mut rng, 40, 5);
            let params: Vec<f64> = (0..6).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let (_, grad) = loss_and_gradient(&design, &params, 0.1);
            for j in 0..6 {
                let h = 1e-6;
                let mut up = params.clone();
                let mut down = params.clone();
                up[j] += h;
                down[j] -= h;
                let fd = (loss_and_gradient(&design, &up, 0.1).0 - loss_and_gradient(&design, &down, 0.1).0) / (2.0 * h);
                let rel = (fd - grad[j]).abs() / grad[j].abs().max(1e-8);
                assert!(rel < 1e-5, "component {j}: {fd} vs {}", grad[j]);
            }
        }
    }

    #[test]
    fn loss_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let design = random_design(&mut rng, 200, 4);
        let model = LogisticModel::fit(&design, 1e-3, None).unwrap();
        assert!(model.loss_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn separable_data_is_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut design = Design::new(3);
        for _ in 0..400 {
            let x: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let label = x[0] + 0.5 * x[1] > 0.0;
            design.push(&x, label, 1.0);
        }
        let model = LogisticModel::fit(&design, 1e-6, None).unwrap();
        let correct = (0..design.len())
            .filter(|&i| (model.predict(design.row(i)) > 0.5) == design.labels[i])
            .count();
        assert!(correct as f64 / design.len() as f64 >= 0.99);
    }

    #[test]
    fn constant_features_give_half() {
        let mut design = Design::new(2);
        for i in 0..10 {
            design.push(&[1.0, 1.0], i % 2 == 0, 1.0);
        }
        let model = LogisticModel::fit(&design, 0.1, None).unwrap();
        assert!((model.predict(&[1.0, 1.0]) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn single_class_is_rejected() {
        let mut design = Design::new(1);
        design.push(&[0.0], true, 1.0);
        assert!(matches!(LogisticModel::fit(&design, 0.1, None), Err(PredictError::SingleClass)));
    }
}

//! Gaussian-process regression with an isotropic squared-exponential kernel.
//!
//! Targets are standardized before fitting; the signal variance is fixed at
//! one in standardized units. The lengthscale and noise variance are chosen
//! by maximizing the log marginal likelihood over a fixed log-spaced grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lengthscale grid is `GRID_LENGTHSCALES` points in `[1e-2, 1e1] * sqrt(d)`.
pub const GRID_LENGTHSCALES: usize = 24;
/// Noise grid is `GRID_NOISES` points in `[1e-6, 1e-1]`.
pub const GRID_NOISES: usize = 8;
pub const JITTER_START: f64 = 1e-10;
pub const JITTER_MAX: f64 = 1e-6;
const STD_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub variance: f64,
    pub lengthscale: f64,
    pub noise: f64,
}

impl KernelParams {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        self.variance * (-d2 / (2.0 * self.lengthscale * self.lengthscale)).exp()
    }
}

/// Lower-triangular Cholesky factor stored row-major.
#[derive(Clone, Debug)]
struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    fn factor(a: &[f64], n: usize) -> Option<Self> {
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !s.is_finite() || s <= 0.0 {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(Self { n, l })
    }

    /// Solves `L z = b`.
    fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.l[i * n + k] * z[k];
            }
            z[i] = s / self.l[i * n + i];
        }
        z
    }

    /// Solves `L^T x = z`.
    fn backward(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = z.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }

    fn log_det_half(&self) -> f64 {
        (0..self.n).map(|i| self.l[i * self.n + i].ln()).sum()
    }
}

/// Fitted GP posterior for one objective.
#[derive(Clone, Debug)]
pub struct GpModel {
    x_train: Vec<Vec<f64>>,
    y_std_train: Vec<f64>,
    kernel: KernelParams,
    /// Jitter added on top of `kernel.noise` to make the factorization succeed.
    jitter: f64,
    y_mean: f64,
    y_scale: f64,
    chol: Cholesky,
    alpha: Vec<f64>,
    log_marginal_likelihood: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

impl Prediction {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

fn check_inputs(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 training points, got {}", x.len())));
    }
    let d = x[0].len();
    if let Some(bad) = x.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: bad.len() });
    }
    if y.iter().chain(x.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training data".into()));
    }
    Ok(d)
}

fn standardize(y: &[f64]) -> (Vec<f64>, f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let scale = if var.sqrt() > STD_FLOOR { var.sqrt() } else { 1.0 };
    (y.iter().map(|v| (v - mean) / scale).collect(), mean, scale)
}

/// Log-spaced grid of `count` values from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

impl GpModel {
    /// Fits the GP, choosing lengthscale and noise by grid-search maximum
    /// marginal likelihood. Grid points whose kernel matrix cannot be
    /// factorized even with maximal jitter are skipped.
    pub fn fit(x: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        let d = check_inputs(x, y)?;
        let (ys, mean, scale) = standardize(y);
        let root_d = (d.max(1) as f64).sqrt();
        let lengthscales = log_grid(1e-2 * root_d, 1e1 * root_d, GRID_LENGTHSCALES);
        let noises = log_grid(1e-6, 1e-1, GRID_NOISES);
        let mut best: Option<GpModel> = None;
        for &lengthscale in &lengthscales {
            for &noise in &noises {
                let kernel = KernelParams { variance: 1.0, lengthscale, noise };
                let Ok(model) = Self::build(x, &ys, mean, scale, kernel) else { continue };
                // Strict comparison keeps the first grid point on ties.
                if best.as_ref().is_none_or(|b| model.log_marginal_likelihood > b.log_marginal_likelihood) {
                    best = Some(model);
                }
            }
        }
        best.ok_or(Error::NotPositiveDefinite)
    }

    /// Fits with fixed kernel hyperparameters (signal variance in
    /// standardized units).
    pub fn fit_with(x: &[Vec<f64>], y: &[f64], kernel: KernelParams) -> Result<Self> {
        check_inputs(x, y)?;
        let (ys, mean, scale) = standardize(y);
        Self::build(x, &ys, mean, scale, kernel)
    }

    fn build(x: &[Vec<f64>], ys: &[f64], y_mean: f64, y_scale: f64, kernel: KernelParams) -> Result<Self> {
        let n = x.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = kernel.eval(&x[i], &x[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        let mut jitter = 0.0;
        let chol = loop {
            let mut a = k.clone();
            for i in 0..n {
                a[i * n + i] += kernel.noise + jitter;
            }
            if let Some(c) = Cholesky::factor(&a, n) {
                break c;
            }
            jitter = if jitter == 0.0 { JITTER_START } else { jitter * 10.0 };
            if jitter > JITTER_MAX * (1.0 + 1e-9) {
                return Err(Error::NotPositiveDefinite);
            }
        };
        let alpha = chol.backward(&chol.forward(ys));
        let fit: f64 = ys.iter().zip(&alpha).map(|(a, b)| a * b).sum();
        let lml = -0.5 * fit - chol.log_det_half() - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        Ok(Self {
            x_train: x.to_vec(),
            y_std_train: ys.to_vec(),
            kernel,
            jitter,
            y_mean,
            y_scale,
            chol,
            alpha,
            log_marginal_likelihood: lml,
        })
    }

    pub fn kernel(&self) -> KernelParams {
        self.kernel
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Noise variance actually on the diagonal (kernel noise plus jitter).
    pub fn effective_noise(&self) -> f64 {
        self.kernel.noise + self.jitter
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal_likelihood
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn y_scale(&self) -> f64 {
        self.y_scale
    }

    pub fn dim(&self) -> usize {
        self.x_train[0].len()
    }

    pub fn training_inputs(&self) -> &[Vec<f64>] {
        &self.x_train
    }

    pub fn standardized_targets(&self) -> &[f64] {
        &self.y_std_train
    }

    /// Posterior in standardized units.
    pub fn predict_latent(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let k_star: Vec<f64> = self.x_train.iter().map(|xi| self.kernel.eval(xi, x)).collect();
        let mean: f64 = k_star.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        let v = self.chol.forward(&k_star);
        let var = self.kernel.variance - v.iter().map(|t| t * t).sum::<f64>();
        Ok(Prediction { mean, variance: var.max(0.0) })
    }

    /// Posterior mean and variance in the original units of `y`.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let p = self.predict_latent(x)?;
        Ok(Prediction { mean: self.y_mean + self.y_scale * p.mean, variance: p.variance * self.y_scale * self.y_scale })
    }
}

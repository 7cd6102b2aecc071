//! Gaussian-process regression over the cost function: exact posterior
//! prediction, marginal likelihood, and maximum-likelihood hyperparameter
//! fitting.

mod fit;
mod kernel;

pub use fit::{fit_hyperparameters, FitOutcome, HyperBox};
pub use kernel::{kernel_eval, KernelFamily, KernelSpec};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative jitter added to the Gram diagonal before factorization,
/// in units of signal variance.
pub const BASE_JITTER: f64 = 1e-10;
/// Largest relative jitter tried before declaring the model ill-conditioned.
pub const MAX_JITTER: f64 = 1e-6;
/// Absolute floor on the observation noise standard deviation.
pub const NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GpError {
    #[error("gram matrix factorization failed: model is ill-conditioned (check hyperparameters)")]
    IllConditioned,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operation requires a nonempty dataset")]
    EmptyDataset,
    #[error("dataset contains non-finite values")]
    NonFinite,
    #[error("inputs and targets have different lengths: {inputs} vs {targets}")]
    LengthMismatch { inputs: usize, targets: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyper(String),
}

/// Kernel plus observation model: the GP hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpHyper {
    pub kernel: KernelSpec,
    /// Observation noise standard deviation (floored at [`NOISE_FLOOR`]).
    pub noise_std: f64,
    /// Constant prior mean.
    pub prior_mean: f64,
}

impl GpHyper {
    pub fn new(kernel: KernelSpec, noise_std: f64, prior_mean: f64) -> Self {
        Self {
            kernel,
            noise_std: noise_std.max(NOISE_FLOOR),
            prior_mean,
        }
    }

    pub fn validate(&self) -> Result<(), GpError> {
        self.kernel.validate()?;
        if !(self.noise_std > 0.0) || !self.noise_std.is_finite() {
            return Err(GpError::InvalidHyper("noise_std must be positive".into()));
        }
        if !self.prior_mean.is_finite() {
            return Err(GpError::InvalidHyper("prior_mean must be finite".into()));
        }
        Ok(())
    }
}

/// Observed (encoded input, cost) pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self, GpError> {
        let d = Self { inputs, targets };
        d.validate()?;
        Ok(d)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn push(&mut self, input: Vec<f64>, target: f64) {
        self.inputs.push(input);
        self.targets.push(target);
    }

    pub fn validate(&self) -> Result<(), GpError> {
        if self.inputs.len() != self.targets.len() {
            return Err(GpError::LengthMismatch {
                inputs: self.inputs.len(),
                targets: self.targets.len(),
            });
        }
        if self.targets.iter().any(|t| !t.is_finite())
            || self
                .inputs
                .iter()
                .any(|x| x.iter().any(|v| !v.is_finite()))
        {
            return Err(GpError::NonFinite);
        }
        if let Some(first) = self.inputs.first() {
            let d = first.len();
            if self.inputs.iter().any(|x| x.len() != d) {
                return Err(GpError::DimensionMismatch {
                    expected: d,
                    got: self
                        .inputs
                        .iter()
                        .map(Vec::len)
                        .find(|&l| l != d)
                        .unwrap_or(d),
                });
            }
        }
        Ok(())
    }
}

/// Exact GP posterior: dataset, hyperparameters, and the cached Cholesky
/// factorization of the noisy Gram matrix with the weight vector K^{-1} z.
/// Immutable after construction; predictions are read-only.
#[derive(Clone, Debug)]
pub struct GpPosterior {
    dataset: Dataset,
    hyper: GpHyper,
    chol: Option<Cholesky<f64, Dyn>>,
    /// K^{-1} (targets - prior_mean); empty when the dataset is empty.
    weights: DVector<f64>,
}

impl GpPosterior {
    /// Factor the Gram matrix and cache the weight vector.
    pub fn fit(dataset: Dataset, hyper: GpHyper) -> Result<Self, GpError> {
        hyper.validate()?;
        dataset.validate()?;
        let n = dataset.len();
        if n == 0 {
            return Ok(Self {
                dataset,
                hyper,
                chol: None,
                weights: DVector::zeros(0),
            });
        }
        if dataset.inputs[0].len() != hyper.kernel.dim() {
            return Err(GpError::DimensionMismatch {
                expected: hyper.kernel.dim(),
                got: dataset.inputs[0].len(),
            });
        }

        let chol = factor_gram(&dataset.inputs, &hyper)?;
        let z = DVector::from_iterator(n, dataset.targets.iter().map(|t| t - hyper.prior_mean));
        let weights = chol.solve(&z);
        Ok(Self {
            dataset,
            hyper,
            chol: Some(chol),
            weights,
        })
    }

    /// The prior (no observations) under the given hyperparameters.
    pub fn prior(hyper: GpHyper) -> Result<Self, GpError> {
        Self::fit(Dataset::empty(), hyper)
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn hyper(&self) -> &GpHyper {
        &self.hyper
    }

    pub fn dim(&self) -> usize {
        self.hyper.kernel.dim()
    }

    pub fn len(&self) -> usize {
        self.dataset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dataset.is_empty()
    }

    /// Lowest observed target, if any. The expected-improvement incumbent.
    pub fn best_observed(&self) -> Option<(usize, f64)> {
        self.dataset
            .targets
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Posterior mean and variance at an encoded point.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64), GpError> {
        if x.len() != self.dim() {
            return Err(GpError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let prior_var = self.hyper.kernel.signal_std.powi(2);
        let Some(chol) = &self.chol else {
            return Ok((self.hyper.prior_mean, prior_var));
        };
        let k = self.kernel_vec(x);
        let mean = self.hyper.prior_mean + k.dot(&self.weights);
        let v = chol
            .l_dirty()
            .solve_lower_triangular(&k)
            .ok_or(GpError::IllConditioned)?;
        let var = (prior_var - v.norm_squared()).max(0.0);
        Ok((mean, var))
    }

    /// Joint posterior mean vector and covariance matrix over a set of
    /// encoded points.
    pub fn joint(&self, points: &[Vec<f64>]) -> Result<(DVector<f64>, DMatrix<f64>), GpError> {
        let r = points.len();
        let kern = &self.hyper.kernel;
        for p in points {
            if p.len() != self.dim() {
                return Err(GpError::DimensionMismatch {
                    expected: self.dim(),
                    got: p.len(),
                });
            }
        }
        let mut cov = DMatrix::zeros(r, r);
        for i in 0..r {
            for j in 0..=i {
                let v = kern.eval_unchecked(&points[i], &points[j]);
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        let mut mean = DVector::from_element(r, self.hyper.prior_mean);
        if let Some(chol) = &self.chol {
            let n = self.len();
            let mut kxr = DMatrix::zeros(n, r);
            for (j, p) in points.iter().enumerate() {
                for (i, xi) in self.dataset.inputs.iter().enumerate() {
                    kxr[(i, j)] = kern.eval_unchecked(xi, p);
                }
            }
            for (j, _) in points.iter().enumerate() {
                mean[j] += kxr.column(j).dot(&self.weights);
            }
            let v = chol
                .l_dirty()
                .solve_lower_triangular(&kxr)
                .ok_or(GpError::IllConditioned)?;
            cov -= v.transpose() * v;
        }
        Ok((mean, cov))
    }

    /// The cached weight vector K^{-1} (targets - prior_mean).
    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// k(X, x): covariances between training inputs and a query point.
    pub fn kernel_vec(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.len(),
            self.dataset
                .inputs
                .iter()
                .map(|xi| self.hyper.kernel.eval_unchecked(xi, x)),
        )
    }

    /// Solve L y = rhs against the cached Cholesky factor.
    pub fn solve_lower(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>, GpError> {
        let chol = self.chol.as_ref().ok_or(GpError::EmptyDataset)?;
        chol.l_dirty()
            .solve_lower_triangular(rhs)
            .ok_or(GpError::IllConditioned)
    }

    /// A new posterior conditioned on one additional observation.
    pub fn with_observation(&self, x: Vec<f64>, y: f64) -> Result<Self, GpError> {
        let mut d = self.dataset.clone();
        d.push(x, y);
        Self::fit(d, self.hyper.clone())
    }
}

fn factor_gram(inputs: &[Vec<f64>], hyper: &GpHyper) -> Result<Cholesky<f64, Dyn>, GpError> {
    let n = inputs.len();
    let kern = &hyper.kernel;
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kern.eval_unchecked(&inputs[i], &inputs[j]);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let noise_var = hyper.noise_std.powi(2);
    for i in 0..n {
        gram[(i, i)] += noise_var;
    }
    cholesky_with_jitter(gram, kern.signal_std.powi(2))
}

/// Cholesky with the crate-wide jitter policy: start at BASE_JITTER times the
/// signal variance, escalate by 100x up to MAX_JITTER, then give up.
pub(crate) fn cholesky_with_jitter(
    matrix: DMatrix<f64>,
    signal_var: f64,
) -> Result<Cholesky<f64, Dyn>, GpError> {
    let n = matrix.nrows();
    let mut jitter = BASE_JITTER * signal_var;
    loop {
        let mut m = matrix.clone();
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(m) {
            return Ok(c);
        }
        jitter *= 100.0;
        if jitter > MAX_JITTER * signal_var {
            return Err(GpError::IllConditioned);
        }
    }
}

/// Log marginal likelihood of the dataset under the hyperparameters:
/// -1/2 z^T K^{-1} z - 1/2 log det K - (N/2) log 2 pi.
pub fn log_marginal_likelihood(dataset: &Dataset, hyper: &GpHyper) -> Result<f64, GpError> {
    hyper.validate()?;
    dataset.validate()?;
    let n = dataset.len();
    if n == 0 {
        return Err(GpError::EmptyDataset);
    }
    let chol = factor_gram(&dataset.inputs, hyper)?;
    let z = DVector::from_iterator(n, dataset.targets.iter().map(|t| t - hyper.prior_mean));
    let alpha = chol.solve(&z);
    let log_det: f64 = (0..n).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>() * 2.0;
    Ok(-0.5 * z.dot(&alpha) - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln())
}

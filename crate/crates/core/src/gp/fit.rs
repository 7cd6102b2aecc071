//! Maximum-likelihood hyperparameter fitting: multistart gradient-free ascent
//! of the log marginal likelihood over log-transformed parameters.

use rand::Rng;

use super::{log_marginal_likelihood, Dataset, GpError, GpHyper, KernelFamily, KernelSpec};
use crate::opt::{nelder_mead_box, NmOptions};
use crate::rng::stream_rng;

/// Box constraints for the fitted hyperparameters, in natural units.
#[derive(Clone, Debug)]
pub struct HyperBox {
    pub lengthscale: (f64, f64),
    pub signal_std: (f64, f64),
    pub noise_std: (f64, f64),
    pub alpha: (f64, f64),
    pub gamma: (f64, f64),
}

impl Default for HyperBox {
    fn default() -> Self {
        Self {
            lengthscale: (1e-2, 1e2),
            signal_std: (1e-4, 1e2),
            noise_std: (1e-6, 1.0),
            alpha: (1e-2, 1e3),
            gamma: (0.1, 2.0),
        }
    }
}

impl HyperBox {
    fn validate(&self) -> Result<(), GpError> {
        for (name, (lo, hi)) in [
            ("lengthscale", self.lengthscale),
            ("signal_std", self.signal_std),
            ("noise_std", self.noise_std),
            ("alpha", self.alpha),
            ("gamma", self.gamma),
        ] {
            if !(lo > 0.0 && hi > lo) {
                return Err(GpError::InvalidHyper(format!(
                    "hyperparameter box for {name} must satisfy 0 < lower < upper"
                )));
            }
        }
        Ok(())
    }

    /// Log-space lower/upper vectors for the given family and input dimension.
    fn log_bounds(&self, family: KernelFamily, dim: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![self.lengthscale.0.ln(); dim];
        let mut hi = vec![self.lengthscale.1.ln(); dim];
        lo.push(self.signal_std.0.ln());
        hi.push(self.signal_std.1.ln());
        lo.push(self.noise_std.0.ln());
        hi.push(self.noise_std.1.ln());
        if family.needs_alpha() {
            lo.push(self.alpha.0.ln());
            hi.push(self.alpha.1.ln());
        }
        if family.needs_gamma() {
            lo.push(self.gamma.0.ln());
            hi.push(self.gamma.1.ln());
        }
        (lo, hi)
    }
}

/// Result of [`fit_hyperparameters`]. `warned` is set when no start improved
/// on a finite likelihood and the box-center default was returned instead.
#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub hyper: GpHyper,
    pub log_marginal: f64,
    pub warned: bool,
}

fn hyper_from_log(theta: &[f64], family: KernelFamily, dim: usize, prior_mean: f64) -> GpHyper {
    let lengthscales: Vec<f64> = theta[..dim].iter().map(|v| v.exp()).collect();
    let signal = theta[dim].exp();
    let noise = theta[dim + 1].exp();
    let extra = dim + 2;
    let kernel = match family {
        KernelFamily::SquaredExponentialArd => KernelSpec::squared_exponential(lengthscales, signal),
        KernelFamily::Matern52Ard => KernelSpec::matern52(lengthscales, signal),
        KernelFamily::RationalQuadraticArd => {
            KernelSpec::rational_quadratic(lengthscales, signal, theta[extra].exp())
        }
        KernelFamily::GammaExponentialArd => {
            KernelSpec::gamma_exponential(lengthscales, signal, theta[extra].exp().min(2.0))
        }
    };
    GpHyper::new(kernel, noise, prior_mean)
}

/// Fit hyperparameters by maximizing the log marginal likelihood with
/// `restarts` seeded Nelder-Mead ascents in log space. Deterministic for a
/// fixed seed. Requires at least two observations.
pub fn fit_hyperparameters(
    dataset: &Dataset,
    family: KernelFamily,
    bounds: &HyperBox,
    restarts: usize,
    seed: u64,
    prior_mean: f64,
) -> Result<FitOutcome, GpError> {
    dataset.validate()?;
    if dataset.len() < 2 {
        return Err(GpError::EmptyDataset);
    }
    bounds.validate()?;
    let dim = dataset.inputs[0].len();
    let (lo, hi) = bounds.log_bounds(family, dim);
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let center_hyper = hyper_from_log(&center, family, dim, prior_mean);

    let objective = |theta: &[f64]| -> f64 {
        let hyper = hyper_from_log(theta, family, dim, prior_mean);
        match log_marginal_likelihood(dataset, &hyper) {
            Ok(v) => -v,
            Err(_) => f64::INFINITY,
        }
    };

    let mut rng = stream_rng(seed, "gp-fit", 0);
    let mut starts = vec![center.clone()];
    for _ in 1..restarts.max(1) {
        let s: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| a + rng.random::<f64>() * (b - a))
            .collect();
        starts.push(s);
    }

    let opts = NmOptions {
        max_iters: 400,
        ..Default::default()
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in &starts {
        let (x, v) = nelder_mead_box(objective, s, &lo, &hi, opts);
        if v.is_finite() && best.as_ref().map_or(true, |(_, bv)| v < *bv) {
            best = Some((x, v));
        }
    }

    match best {
        Some((x, v)) => Ok(FitOutcome {
            hyper: hyper_from_log(&x, family, dim, prior_mean),
            log_marginal: -v,
            warned: false,
        }),
        None => Ok(FitOutcome {
            hyper: center_hyper,
            log_marginal: f64::NEG_INFINITY,
            warned: true,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::GpPosterior;
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;

    /// Draw a sample path from a known SE GP on a 1-D grid.
    fn sample_from_se(lengthscale: f64, n: usize, seed: u64) -> Dataset {
        let mut rng = stream_rng(seed, "fit-gen", 0);
        let inputs: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / (n - 1) as f64]).collect();
        let spec = KernelSpec::squared_exponential(vec![lengthscale], 1.0);
        let mut cov = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                cov[(i, j)] = spec.eval_unchecked(&inputs[i], &inputs[j]);
            }
        }
        for i in 0..n {
            cov[(i, i)] += 1e-8;
        }
        let l = nalgebra::Cholesky::new(cov).unwrap();
        let z = DVector::from_iterator(
            n,
            (0..n).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)),
        );
        let f = l.l() * z;
        let targets: Vec<f64> = (0..n).map(|i| f[i] + 0.01 * rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        Dataset::new(inputs, targets).unwrap()
    }

    #[test]
    fn recovers_a_known_lengthscale_within_factor_two() {
        let data = sample_from_se(0.2, 20, 5);
        let out = fit_hyperparameters(
            &data,
            KernelFamily::SquaredExponentialArd,
            &HyperBox::default(),
            8,
            42,
            0.0,
        )
        .unwrap();
        assert!(!out.warned);
        let l = out.hyper.kernel.lengthscales[0];
        assert!(l > 0.1 && l < 0.4, "recovered lengthscale {l}");
    }

    #[test]
    fn constant_targets_collapse_signal_std() {
        let data = Dataset::new(
            (0..10).map(|i| vec![i as f64 / 9.0]).collect(),
            vec![0.0; 10],
        )
        .unwrap();
        let bounds = HyperBox::default();
        let out = fit_hyperparameters(
            &data,
            KernelFamily::SquaredExponentialArd,
            &bounds,
            6,
            1,
            0.0,
        )
        .unwrap();
        let s = out.hyper.kernel.signal_std;
        assert!(
            s < 10.0 * bounds.signal_std.0,
            "signal_std {s} did not collapse toward its lower bound"
        );
    }

    #[test]
    fn fitting_is_deterministic_for_a_fixed_seed() {
        let data = sample_from_se(0.3, 12, 9);
        let run = || {
            fit_hyperparameters(
                &data,
                KernelFamily::Matern52Ard,
                &HyperBox::default(),
                5,
                77,
                0.0,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.hyper, b.hyper);
        assert_eq!(a.log_marginal, b.log_marginal);
    }

    #[test]
    fn fitted_hyper_builds_a_usable_posterior() {
        let data = sample_from_se(0.25, 15, 2);
        let out = fit_hyperparameters(
            &data,
            KernelFamily::RationalQuadraticArd,
            &HyperBox::default(),
            5,
            3,
            0.0,
        )
        .unwrap();
        let post = GpPosterior::fit(data, out.hyper).unwrap();
        let (m, v) = post.predict(&[0.5]).unwrap();
        assert!(m.is_finite() && v.is_finite());
    }

    #[test]
    fn too_small_dataset_is_an_error() {
        let data = Dataset::new(vec![vec![0.0]], vec![1.0]).unwrap();
        assert!(fit_hyperparameters(
            &data,
            KernelFamily::SquaredExponentialArd,
            &HyperBox::default(),
            3,
            0,
            0.0
        )
        .is_err());
    }
}

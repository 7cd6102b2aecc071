//! Shared test oracles: dense linear-algebra routes for GP predictions and
//! marginal likelihood, independent of the library's Cholesky path.
#![allow(dead_code)] // each test target compiles its own copy

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use valvetune::gp::{Dataset, GpHyper, KernelSpec, BASE_JITTER};

/// Posterior mean/variance by explicit LU solves on the dense Gram matrix.
pub fn dense_predict(data: &Dataset, hyper: &GpHyper, query: &[f64]) -> (f64, f64) {
    let n = data.len();
    let kern = &hyper.kernel;
    let prior_var = kern.signal_std * kern.signal_std;
    if n == 0 {
        return (hyper.prior_mean, prior_var);
    }
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            gram[(i, j)] = kern.eval(&data.inputs[i], &data.inputs[j]).unwrap();
        }
        gram[(i, i)] += hyper.noise_std.powi(2) + BASE_JITTER * prior_var;
    }
    let z = DVector::from_iterator(n, data.targets.iter().map(|t| t - hyper.prior_mean));
    let k = DVector::from_iterator(
        n,
        data.inputs.iter().map(|x| kern.eval(x, query).unwrap()),
    );
    let lu = gram.lu();
    let alpha = lu.solve(&z).expect("oracle solve");
    let kinv_k = lu.solve(&k).expect("oracle solve");
    let mean = hyper.prior_mean + k.dot(&alpha);
    let var = kern.eval(query, query).unwrap() - k.dot(&kinv_k);
    (mean, var.max(0.0))
}

/// Log marginal likelihood via an explicit LU determinant.
pub fn dense_lml(data: &Dataset, hyper: &GpHyper) -> f64 {
    let n = data.len();
    let kern = &hyper.kernel;
    let prior_var = kern.signal_std * kern.signal_std;
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            gram[(i, j)] = kern.eval(&data.inputs[i], &data.inputs[j]).unwrap();
        }
        gram[(i, i)] += hyper.noise_std.powi(2) + BASE_JITTER * prior_var;
    }
    let z = DVector::from_iterator(n, data.targets.iter().map(|t| t - hyper.prior_mean));
    let lu = gram.lu();
    let alpha = lu.solve(&z).expect("oracle solve");
    let det = lu.determinant();
    -0.5 * z.dot(&alpha) - 0.5 * det.ln() - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
}

/// A random dataset in the unit cube.
pub fn random_dataset<R: Rng>(rng: &mut R, n: usize, dim: usize, spread: f64) -> Dataset {
    let inputs: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect();
    let targets: Vec<f64> = (0..n)
        .map(|_| spread * (rng.random::<f64>() - 0.5))
        .collect();
    Dataset::new(inputs, targets).unwrap()
}

/// The four kernel families at matched scales.
pub fn all_families(dim: usize, lengthscale: f64, signal: f64) -> Vec<KernelSpec> {
    vec![
        KernelSpec::squared_exponential(vec![lengthscale; dim], signal),
        KernelSpec::rational_quadratic(vec![lengthscale; dim], signal, 0.8),
        KernelSpec::matern52(vec![lengthscale; dim], signal),
        KernelSpec::gamma_exponential(vec![lengthscale; dim], signal, 1.4),
    ]
}

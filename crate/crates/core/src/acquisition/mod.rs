//! Acquisition functions for the tuning loop: expected improvement, the
//! entropy-search belief over the minimum location, representer grids, and
//! multistart acquisition maximization on the encoded cube.

mod es;

pub use es::{es_expected_dh, es_pmin, EsContext};

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use thiserror::Error;

use crate::gp::{GpError, GpPosterior};
use crate::opt::{nelder_mead_unit, NmOptions};
use crate::rng::stream_rng;

#[derive(Debug, Error)]
pub enum AcquisitionError {
    #[error("representer grid must contain at least {min} points, got {got}")]
    GridTooSmall { min: usize, got: usize },
    #[error("count `{0}` must be at least 1")]
    InvalidCount(&'static str),
    #[error(transparent)]
    Gp(#[from] GpError),
}

/// Discrete belief about the minimizer location: representer points on the
/// encoded cube, each carrying probability mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PminGrid {
    pub points: Vec<Vec<f64>>,
    pub mass: Vec<f64>,
}

impl PminGrid {
    /// A grid with uniform mass over the given points.
    pub fn uniform(points: Vec<Vec<f64>>) -> Self {
        let n = points.len().max(1);
        let mass = vec![1.0 / n as f64; points.len()];
        Self { points, mass }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self) -> Result<(), AcquisitionError> {
        if self.points.is_empty() {
            return Err(AcquisitionError::GridTooSmall {
                min: 1,
                got: 0,
            });
        }
        debug_assert!(self.mass.iter().all(|&m| m >= 0.0));
        debug_assert!((self.mass.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        debug_assert!(self
            .points
            .iter()
            .all(|p| p.iter().all(|&v| (0.0..=1.0).contains(&v))));
        Ok(())
    }
}

/// Which acquisition drives the proposal step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcquisitionKind {
    Ei,
    Es,
}

/// How entropy search integrates over hypothetical outcomes at a candidate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FantasyMode {
    /// Deterministic Gauss-Hermite quadrature over the predictive density.
    Quadrature,
    /// Plain Monte-Carlo fantasies; used for oracle cross-checks.
    MonteCarlo,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AcquisitionConfig {
    pub kind: AcquisitionKind,
    /// Number of representer points in the p_min grid.
    pub n_representers: usize,
    /// Joint posterior draws used to estimate p_min.
    pub n_function_samples: usize,
    /// Multistart count for acquisition maximization.
    pub n_starts: usize,
    pub seed: u64,
    /// Hypothetical-outcome nodes per candidate (quadrature order or MC count).
    pub n_fantasies: usize,
    pub fantasy_mode: FantasyMode,
}

impl AcquisitionConfig {
    pub fn ei(seed: u64) -> Self {
        Self {
            kind: AcquisitionKind::Ei,
            ..Self::es(seed)
        }
    }

    pub fn es(seed: u64) -> Self {
        Self {
            kind: AcquisitionKind::Es,
            n_representers: 200,
            n_function_samples: 400,
            n_starts: 20,
            seed,
            n_fantasies: 9,
            fantasy_mode: FantasyMode::Quadrature,
        }
    }

    pub fn validate(&self) -> Result<(), AcquisitionError> {
        if self.n_representers < 2 {
            return Err(AcquisitionError::InvalidCount("n_representers"));
        }
        for (name, v) in [
            ("n_function_samples", self.n_function_samples),
            ("n_starts", self.n_starts),
            ("n_fantasies", self.n_fantasies),
        ] {
            if v < 1 {
                return Err(AcquisitionError::InvalidCount(name));
            }
        }
        Ok(())
    }
}

/// Expected improvement over the incumbent `eta` for a Gaussian prediction.
///
/// Total on sigma >= 0: the sigma -> 0 limit is max(0, eta - mu).
pub fn ei(mu: f64, sigma: f64, eta: f64) -> f64 {
    debug_assert!(sigma >= 0.0);
    let gap = eta - mu;
    if sigma <= 0.0 {
        return gap.max(0.0);
    }
    let z = gap / sigma;
    let value = gap * std_normal_cdf(z) + sigma * std_normal_pdf(z);
    value.max(0.0)
}

pub(crate) fn std_normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

pub(crate) fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Relative entropy of the belief against the uniform distribution:
/// sum_i m_i log(m_i n), with 0 log 0 = 0. Zero iff uniform, log n on a delta.
pub fn relative_entropy(grid: &PminGrid) -> f64 {
    let n = grid.mass.len() as f64;
    let h: f64 = grid
        .mass
        .iter()
        .map(|&m| if m > 0.0 { m * (m * n).ln() } else { 0.0 })
        .sum();
    h.max(0.0)
}

/// Build the irregular representer grid by importance-sampling proposal
/// points in proportion to their expected improvement under the posterior.
/// Falls back to a uniform grid when the acquisition surface is flat (e.g.
/// no data yet). Deterministic for a fixed seed; points are distinct.
pub fn build_representer_grid(
    posterior: &GpPosterior,
    n: usize,
    seed: u64,
) -> Result<PminGrid, AcquisitionError> {
    if n < 2 {
        return Err(AcquisitionError::GridTooSmall { min: 2, got: n });
    }
    let dim = posterior.dim();
    let mut rng = stream_rng(seed, "representer-grid", 0);
    let n_proposal = (50 * n).max(2000);
    let mut proposal: Vec<Vec<f64>> = Vec::with_capacity(n_proposal);
    for _ in 0..n_proposal {
        proposal.push((0..dim).map(|_| rng.random::<f64>()).collect());
    }

    let eta = posterior.best_observed().map(|(_, v)| v);
    let weights: Option<Vec<f64>> = eta.map(|eta| {
        proposal
            .iter()
            .map(|p| {
                let (m, v) = posterior.predict(p).expect("proposal point in domain");
                ei(m, v.sqrt(), eta)
            })
            .collect()
    });

    let flat = match &weights {
        None => true,
        Some(w) => {
            let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = w.iter().copied().fold(f64::INFINITY, f64::min);
            !(max > 0.0) || (max - min) <= 1e-12 * max.max(1.0)
        }
    };

    let points = if flat {
        proposal.truncate(n);
        proposal
    } else {
        // Weighted sampling without replacement (Efraimidis-Spirakis keys).
        let w = weights.expect("non-flat weights");
        let max_w = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let floor = 1e-12 * max_w;
        let mut keyed: Vec<(f64, usize)> = w
            .iter()
            .enumerate()
            .map(|(i, &wi)| {
                let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                (u.powf(1.0 / wi.max(floor)), i)
            })
            .collect();
        keyed.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut selected: Vec<Vec<f64>> = keyed
            .iter()
            .take(n)
            .map(|&(_, i)| proposal[i].clone())
            .collect();
        selected.dedup();
        let mut extra = keyed.into_iter().skip(n);
        while selected.len() < n {
            match extra.next() {
                Some((_, i)) => {
                    if !selected.contains(&proposal[i]) {
                        selected.push(proposal[i].clone());
                    }
                }
                None => break,
            }
        }
        selected
    };

    Ok(PminGrid::uniform(points))
}

/// Maximize an acquisition over the unit cube by evaluating all starts
/// (seeded uniform plus the provided extra starts, e.g. representer points)
/// and running local searches from the most promising ones. Ties are broken
/// by lowest `tie_mean`, then lexicographically on the coordinates.
pub fn maximize_acquisition<A, M>(
    acq: A,
    dim: usize,
    n_starts: usize,
    seed: u64,
    extra_starts: &[Vec<f64>],
    tie_mean: M,
) -> Vec<f64>
where
    A: Fn(&[f64]) -> f64,
    M: Fn(&[f64]) -> f64,
{
    assert!(dim >= 1);
    let n_starts = n_starts.max(1);
    let mut rng = stream_rng(seed, "acq-maximize", 0);
    let mut starts: Vec<Vec<f64>> = (0..n_starts)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect();
    starts.extend(extra_starts.iter().cloned());

    let mut candidates: Vec<(Vec<f64>, f64)> = starts
        .iter()
        .map(|s| (s.clone(), acq(s)))
        .collect();

    // Local refinement from the best starts; every evaluated start stays a
    // candidate for the final argmax.
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| candidates[b].1.total_cmp(&candidates[a].1));
    let opts = NmOptions {
        max_iters: 120,
        x_tol: 1e-10,
        init_step: 0.05,
    };
    for &idx in order.iter().take(n_starts.min(12)) {
        let start = candidates[idx].0.clone();
        let (x, neg) = nelder_mead_unit(|p| -acq(p), &start, opts);
        candidates.push((x, -neg));
    }

    let best_val = candidates
        .iter()
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * best_val.abs().max(1.0);
    let mut tied: Vec<Vec<f64>> = candidates
        .into_iter()
        .filter(|(_, v)| *v >= best_val - tol)
        .map(|(x, _)| x)
        .collect();
    tied.sort_by(|a, b| lex_cmp(a, b));
    tied.into_iter()
        .min_by(|a, b| {
            tie_mean(a)
                .total_cmp(&tie_mean(b))
                .then_with(|| lex_cmp(a, b))
        })
        .expect("at least one candidate")
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let c = x.total_cmp(y);
        if c != std::cmp::Ordering::Equal {
            return c;
        }
    }
    std::cmp::Ordering::Equal
}

/// Estimate the incumbent: the minimizer of the posterior mean, found by
/// multistart local descent seeded from uniform points and the data inputs.
pub fn estimate_incumbent(posterior: &GpPosterior, n_starts: usize, seed: u64) -> Vec<f64> {
    let mean = |p: &[f64]| posterior.predict(p).map(|(m, _)| m).unwrap_or(f64::INFINITY);
    maximize_acquisition(
        |p| -mean(p),
        posterior.dim(),
        n_starts,
        seed,
        posterior.dataset().inputs.as_slice(),
        mean,
    )
}

//! Entropy-search internals: the sampled belief p_min over representer
//! points and the expected change in relative entropy for a candidate
//! evaluation.
//!
//! Hypothetical outcomes are handled by pathwise (Matheron) conditioning of
//! shared joint posterior draws, so the belief before and after a fantasy
//! observation uses common random numbers. A candidate that cannot add
//! information (e.g. one sitting on a noise-free observation) then yields an
//! expected entropy change of exactly zero instead of Monte-Carlo noise.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{AcquisitionConfig, AcquisitionError, FantasyMode, PminGrid};
use crate::gp::{cholesky_with_jitter, GpPosterior};
use crate::linalg::gauss_hermite;
use crate::rng::stream_rng;

/// Update the belief mass of a representer grid: each point's mass is the
/// fraction of joint posterior draws whose minimum lands on it.
/// Deterministic for a fixed seed.
pub fn es_pmin(
    posterior: &GpPosterior,
    grid: &PminGrid,
    n_samples: usize,
    seed: u64,
) -> Result<PminGrid, AcquisitionError> {
    grid.validate()?;
    if n_samples < 1 {
        return Err(AcquisitionError::InvalidCount("n_samples"));
    }
    let r = grid.len();
    let (mean, cov) = posterior.joint(&grid.points)?;
    let signal_var = posterior.hyper().kernel.signal_std.powi(2);
    let chol = cholesky_with_jitter(cov, signal_var)?;
    let mut rng = stream_rng(seed, "es-pmin", 0);
    let z = DMatrix::from_fn(r, n_samples, |_, _| rng.sample::<f64, _>(StandardNormal));
    let draws = chol.l() * z;

    let mut counts = vec![0usize; r];
    for j in 0..n_samples {
        let col = draws.column(j);
        let mut best = 0usize;
        let mut best_v = mean[0] + col[0];
        for i in 1..r {
            let v = mean[i] + col[i];
            if v < best_v {
                best_v = v;
                best = i;
            }
        }
        counts[best] += 1;
    }
    let mass: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / n_samples as f64)
        .collect();
    Ok(PminGrid {
        points: grid.points.clone(),
        mass,
    })
}

/// Precomputed state for evaluating the entropy-search acquisition at many
/// candidates against one frozen posterior and representer grid.
pub struct EsContext<'a> {
    posterior: &'a GpPosterior,
    points: Vec<Vec<f64>>,
    mu: DVector<f64>,
    /// L_K^{-1} K_{X,R}; zero-row matrix when the dataset is empty.
    w_xr: DMatrix<f64>,
    chol_sigma: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    /// Joint posterior draws over the representers (r x n_draws).
    draws: DMatrix<f64>,
    /// Shared standard normals for the conditional residual at the candidate.
    xi: DVector<f64>,
    /// Shared observation-noise draws.
    eps: DVector<f64>,
    base_mass: Vec<f64>,
    base_entropy: f64,
    /// Fantasy abscissae (standardized) and weights.
    nodes: Vec<f64>,
    node_weights: Vec<f64>,
    n_draws: usize,
}

impl<'a> EsContext<'a> {
    pub fn new(
        posterior: &'a GpPosterior,
        grid: &PminGrid,
        cfg: &AcquisitionConfig,
    ) -> Result<Self, AcquisitionError> {
        grid.validate()?;
        cfg.validate()?;
        let r = grid.len();
        let n_draws = cfg.n_function_samples;
        let (mu, cov) = posterior.joint(&grid.points)?;
        let signal_var = posterior.hyper().kernel.signal_std.powi(2);
        let chol_sigma = cholesky_with_jitter(cov, signal_var)?;

        let w_xr = if posterior.is_empty() {
            DMatrix::zeros(0, r)
        } else {
            let n = posterior.len();
            let mut kxr = DMatrix::zeros(n, r);
            for (j, p) in grid.points.iter().enumerate() {
                let col = posterior.kernel_vec(p);
                kxr.set_column(j, &col);
            }
            posterior.solve_lower(&kxr)?
        };

        let mut rng = stream_rng(cfg.seed, "es-draws", 0);
        let z = DMatrix::from_fn(r, n_draws, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut draws = chol_sigma.l() * z;
        for j in 0..n_draws {
            for i in 0..r {
                draws[(i, j)] += mu[i];
            }
        }
        let xi = DVector::from_fn(n_draws, |_, _| rng.sample::<f64, _>(StandardNormal));
        let eps = DVector::from_fn(n_draws, |_, _| rng.sample::<f64, _>(StandardNormal));

        let mut counts = vec![0usize; r];
        for j in 0..n_draws {
            counts[argmin_col(&draws, j)] += 1;
        }
        let base_mass: Vec<f64> = counts.iter().map(|&c| c as f64 / n_draws as f64).collect();
        let base_entropy = entropy_of(&base_mass);

        let (nodes, node_weights) = match cfg.fantasy_mode {
            FantasyMode::Quadrature => {
                let (t, w) = gauss_hermite(cfg.n_fantasies);
                // E[f(mu + sigma Z)] = sum w_k/sqrt(pi) f(mu + sqrt(2) sigma t_k)
                let sp = std::f64::consts::PI.sqrt();
                (
                    t.iter().map(|&tk| std::f64::consts::SQRT_2 * tk).collect(),
                    w.iter().map(|&wk| wk / sp).collect(),
                )
            }
            FantasyMode::MonteCarlo => {
                let mut frng = stream_rng(cfg.seed, "es-fantasy", 0);
                let nodes: Vec<f64> = (0..cfg.n_fantasies)
                    .map(|_| frng.sample::<f64, _>(StandardNormal))
                    .collect();
                let w = 1.0 / cfg.n_fantasies as f64;
                (nodes, vec![w; cfg.n_fantasies])
            }
        };

        Ok(Self {
            posterior,
            points: grid.points.clone(),
            mu,
            w_xr,
            chol_sigma,
            draws,
            xi,
            eps,
            base_mass,
            base_entropy,
            nodes,
            node_weights,
            n_draws,
        })
    }

    /// The belief over the minimum location under the shared draws.
    pub fn base_grid(&self) -> PminGrid {
        PminGrid {
            points: self.points.clone(),
            mass: self.base_mass.clone(),
        }
    }

    pub fn base_entropy(&self) -> f64 {
        self.base_entropy
    }

    /// Bound on the sampling error of the entropy estimates: Miller-Madow
    /// bias of the plug-in estimator plus a two-sigma fluctuation term.
    pub fn mc_error_bound(&self) -> f64 {
        let r = self.points.len() as f64;
        let n = self.n_draws as f64;
        (r - 1.0) / (2.0 * n) + 2.0 * r.max(2.0).ln() / n.sqrt()
    }

    /// Expected change in relative entropy from a hypothetical evaluation at
    /// the candidate point.
    pub fn expected_dh(&self, x: &[f64]) -> Result<f64, AcquisitionError> {
        let r = self.points.len();
        let post = self.posterior;
        let kern = &post.hyper().kernel;
        let noise_var = post.hyper().noise_std.powi(2);

        // Posterior moments at the candidate and cross-covariance to the grid.
        let kxx = kern.eval(x, x)?;
        let (mu_x, var_x, v) = if post.is_empty() {
            let v = DVector::from_iterator(
                r,
                self.points.iter().map(|p| kern.eval_unchecked(p, x)),
            );
            (post.hyper().prior_mean, kxx, v)
        } else {
            let kx = post.kernel_vec(x);
            let wx = post.solve_lower(&DMatrix::from_column_slice(kx.len(), 1, kx.as_slice()))?;
            let wx = wx.column(0).into_owned();
            let var = (kxx - wx.norm_squared()).max(0.0);
            let mut v = DVector::from_iterator(
                r,
                self.points.iter().map(|p| kern.eval_unchecked(p, x)),
            );
            v -= self.w_xr.transpose() * wx;
            (post.hyper().prior_mean + kx.dot(post_weights(post)), var, v)
        };
        let s2 = var_x + noise_var;

        // Conditional draw of the candidate value given each joint draw.
        let u = self.chol_sigma.solve(&v);
        let tau = (var_x - v.dot(&u)).max(0.0).sqrt();
        // f*_j = mu_x + u' (F_j - mu) + tau xi_j
        let ut_f = self.draws.transpose() * &u;
        let u_mu = u.dot(&self.mu);
        let noise_std = noise_var.sqrt();

        let mut alpha = 0.0;
        let mut counts = vec![0usize; r];
        for (&node, &wk) in self.nodes.iter().zip(&self.node_weights) {
            let fantasy = mu_x + s2.sqrt() * node;
            counts.iter_mut().for_each(|c| *c = 0);
            for j in 0..self.n_draws {
                let f_star = mu_x + (ut_f[j] - u_mu) + tau * self.xi[j];
                let y_star = f_star + noise_std * self.eps[j];
                let gamma = (fantasy - y_star) / s2;
                // argmin_i F_j[i] + gamma v[i]
                let col = self.draws.column(j);
                let mut best = 0usize;
                let mut best_v = col[0] + gamma * v[0];
                for i in 1..r {
                    let val = col[i] + gamma * v[i];
                    if val < best_v {
                        best_v = val;
                        best = i;
                    }
                }
                counts[best] += 1;
            }
            let mass: Vec<f64> = counts
                .iter()
                .map(|&c| c as f64 / self.n_draws as f64)
                .collect();
            alpha += wk * entropy_of(&mass);
        }
        Ok(alpha - self.base_entropy)
    }
}

fn post_weights(post: &GpPosterior) -> &DVector<f64> {
    // predict() recomputes the dot product; for the hot path we read the
    // cached weights through a small accessor on the posterior.
    post.weights()
}

fn entropy_of(mass: &[f64]) -> f64 {
    let n = mass.len() as f64;
    mass.iter()
        .map(|&m| if m > 0.0 { m * (m * n).ln() } else { 0.0 })
        .sum::<f64>()
        .max(0.0)
}

fn argmin_col(m: &DMatrix<f64>, j: usize) -> usize {
    let col = m.column(j);
    let mut best = 0usize;
    let mut best_v = col[0];
    for i in 1..col.len() {
        if col[i] < best_v {
            best_v = col[i];
            best = i;
        }
    }
    best
}

/// One-shot evaluation of the expected entropy change at a candidate,
/// returning the acquisition value together with the reported sampling error
/// bound. Builds a fresh [`EsContext`]; loops should reuse one context.
pub fn es_expected_dh(
    posterior: &GpPosterior,
    candidate: &[f64],
    grid: &PminGrid,
    cfg: &AcquisitionConfig,
) -> Result<(f64, f64), AcquisitionError> {
    let ctx = EsContext::new(posterior, grid, cfg)?;
    let alpha = ctx.expected_dh(candidate)?;
    Ok((alpha, ctx.mc_error_bound()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{Dataset, GpHyper, GpPosterior, KernelSpec};
    use approx::assert_relative_eq;

    fn prior_1d(lengthscale: f64) -> GpPosterior {
        let hyper = GpHyper::new(
            KernelSpec::squared_exponential(vec![lengthscale], 1.0),
            0.01,
            0.0,
        );
        GpPosterior::prior(hyper).unwrap()
    }

    fn cfg(seed: u64) -> AcquisitionConfig {
        AcquisitionConfig::es(seed)
    }

    #[test]
    fn symmetric_prior_splits_mass_evenly() {
        let prior = prior_1d(0.2);
        let grid = PminGrid::uniform(vec![vec![0.2], vec![0.8]]);
        let n = 4000;
        let updated = es_pmin(&prior, &grid, n, 5).unwrap();
        assert_relative_eq!(updated.mass.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        // 3 sigma binomial band around 0.5.
        let band = 3.0 * (0.25 / n as f64).sqrt();
        assert!(
            (updated.mass[0] - 0.5).abs() < band,
            "mass {:?}",
            updated.mass
        );
    }

    #[test]
    fn dominant_representer_takes_nearly_all_mass() {
        // One representer far below the others relative to posterior stds.
        let data = Dataset::new(
            vec![vec![0.1], vec![0.5], vec![0.9]],
            vec![-8.0, 0.0, 0.1],
        )
        .unwrap();
        let hyper = GpHyper::new(KernelSpec::squared_exponential(vec![0.15], 1.0), 0.05, 0.0);
        let post = GpPosterior::fit(data, hyper).unwrap();
        let grid = PminGrid::uniform(vec![vec![0.1], vec![0.5], vec![0.9]]);
        let updated = es_pmin(&post, &grid, 2000, 3).unwrap();
        assert!(updated.mass[0] >= 0.99, "mass {:?}", updated.mass);
    }

    #[test]
    fn single_draw_gives_a_unit_vector() {
        let prior = prior_1d(0.3);
        let grid = PminGrid::uniform(vec![vec![0.1], vec![0.5], vec![0.9]]);
        let updated = es_pmin(&prior, &grid, 1, 8).unwrap();
        let ones: Vec<f64> = updated.mass.iter().filter(|&&m| m == 1.0).copied().collect();
        assert_eq!(ones.len(), 1);
        assert_relative_eq!(updated.mass.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn pmin_is_deterministic_for_fixed_seed() {
        let prior = prior_1d(0.25);
        let grid = PminGrid::uniform(vec![vec![0.2], vec![0.4], vec![0.6], vec![0.8]]);
        let a = es_pmin(&prior, &grid, 500, 12).unwrap();
        let b = es_pmin(&prior, &grid, 500, 12).unwrap();
        assert_eq!(a.mass, b.mass);
    }

    #[test]
    fn candidate_at_noise_free_observation_adds_no_information() {
        let data = Dataset::new(vec![vec![0.3], vec![0.7]], vec![-0.5, 0.4]).unwrap();
        let hyper = GpHyper::new(KernelSpec::squared_exponential(vec![0.2], 1.0), 1e-6, 0.0);
        let post = GpPosterior::fit(data, hyper).unwrap();
        let grid = PminGrid::uniform(vec![vec![0.1], vec![0.3], vec![0.5], vec![0.7], vec![0.9]]);
        let (alpha, eps) = es_expected_dh(&post, &[0.3], &grid, &cfg(4)).unwrap();
        assert!(alpha.abs() <= eps, "alpha {alpha} vs bound {eps}");
        assert!(alpha.abs() < 1e-6, "CRN should cancel exactly, got {alpha}");
    }

    #[test]
    fn informative_candidate_on_symmetric_prior_gains_entropy() {
        let prior = prior_1d(0.2);
        let grid = PminGrid::uniform(vec![vec![0.25], vec![0.75]]);
        let (alpha, _) = es_expected_dh(&prior, &[0.25], &grid, &cfg(9)).unwrap();
        assert!(alpha > 0.05, "expected positive information gain, got {alpha}");
    }

    #[test]
    fn expected_dh_nonnegative_across_probe_points() {
        let data = Dataset::new(
            vec![vec![0.15], vec![0.45], vec![0.8]],
            vec![0.2, -0.4, 0.1],
        )
        .unwrap();
        let hyper = GpHyper::new(KernelSpec::squared_exponential(vec![0.25], 0.7), 0.05, 0.0);
        let post = GpPosterior::fit(data, hyper).unwrap();
        let mut c = cfg(21);
        c.n_representers = 30;
        c.n_function_samples = 300;
        let grid = super::super::build_representer_grid(&post, 30, 13).unwrap();
        let ctx = EsContext::new(&post, &grid, &c).unwrap();
        let eps = ctx.mc_error_bound();
        for i in 0..50 {
            let x = [i as f64 / 49.0];
            let alpha = ctx.expected_dh(&x).unwrap();
            assert!(alpha >= -eps, "alpha {alpha} < -{eps} at {x:?}");
        }
    }

    #[test]
    fn quadrature_agrees_with_monte_carlo_oracle_on_two_points() {
        // Brute-force cross-check on a tiny instance: MC fantasies with many
        // nodes should approach the deterministic quadrature value.
        let prior = prior_1d(0.15);
        let grid = PminGrid::uniform(vec![vec![0.3], vec![0.7]]);
        let quad = es_expected_dh(&prior, &[0.3], &grid, &cfg(31)).unwrap().0;
        let mut mc_cfg = cfg(31);
        mc_cfg.fantasy_mode = FantasyMode::MonteCarlo;
        mc_cfg.n_fantasies = 4000;
        let mc = es_expected_dh(&prior, &[0.3], &grid, &mc_cfg).unwrap().0;
        assert!(
            (quad - mc).abs() < 0.02,
            "quadrature {quad} vs Monte-Carlo {mc}"
        );
    }
}

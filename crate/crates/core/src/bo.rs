//! The outer tuning loop: initial design, hyperparameter handling,
//! propose-evaluate-update iterations, fixed-budget stopping, and reporting.
//!
//! The engine works on the encoded unit cube and is dimension-agnostic;
//! objectives receive engineering-unit coordinates. Every stochastic choice
//! is derived from the run seed, so a run is reproducible end to end and a
//! resumed run continues exactly where an uninterrupted one would be.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::{
    build_representer_grid, ei, estimate_incumbent, maximize_acquisition, AcquisitionConfig,
    AcquisitionError, AcquisitionKind, EsContext, PminGrid,
};
use crate::gp::{
    fit_hyperparameters, Dataset, GpError, GpHyper, GpPosterior, HyperBox, KernelFamily,
    KernelSpec,
};
use crate::paramspace::{Bounds, ParamSpaceError, ParamVector};
use crate::rng::derive_seed;

#[derive(Debug, Error)]
pub enum BoError {
    #[error("tuning run is already complete")]
    AlreadyComplete,
    #[error("invalid tuning problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Acquisition(#[from] AcquisitionError),
    #[error(transparent)]
    ParamSpace(#[from] ParamSpaceError),
}

/// Result of one objective evaluation: the scalar cost plus a structured
/// metric breakdown for the run log.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Evaluation {
    pub cost: f64,
    pub breakdown: serde_json::Value,
}

impl Evaluation {
    pub fn bare(cost: f64) -> Self {
        Self {
            cost,
            breakdown: serde_json::Value::Null,
        }
    }
}

/// Objective evaluator: engineering-unit coordinates and the global
/// evaluation index (stable across resume) to an evaluation or a failure
/// message. Failures are recorded and imputed; the loop continues.
pub type Objective<'a> = Box<dyn FnMut(&[f64], usize) -> Result<Evaluation, String> + 'a>;

/// Hyperparameter handling across the loop.
#[derive(Clone, Debug)]
pub enum HyperMode {
    /// Use the given hyperparameters throughout (e.g. a named profile).
    Fixed(GpHyper),
    /// One maximum-likelihood fit on the initial design, then frozen.
    FitOnce {
        family: KernelFamily,
        bounds: HyperBox,
        restarts: usize,
    },
    /// Refit after every new observation.
    Refit {
        family: KernelFamily,
        bounds: HyperBox,
        restarts: usize,
    },
}

/// Constant prior mean policy for the fitted modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanMode {
    Zero,
    /// Mean of the initial-design observations.
    EmpiricalInit,
}

pub struct TuningProblem<'a> {
    pub objective: Objective<'a>,
    pub bounds: Bounds,
    pub budget: usize,
    pub init_design: usize,
    pub hyper_mode: HyperMode,
    pub mean_mode: MeanMode,
}

impl<'a> TuningProblem<'a> {
    pub fn new(
        objective: Objective<'a>,
        bounds: Bounds,
        budget: usize,
        init_design: usize,
        hyper_mode: HyperMode,
    ) -> Self {
        Self {
            objective,
            bounds,
            budget,
            init_design,
            hyper_mode,
            mean_mode: MeanMode::Zero,
        }
    }

    /// Adapter for objectives written against the 4-D valve domain.
    pub fn valve_objective<F>(mut f: F) -> Objective<'a>
    where
        F: FnMut(&ParamVector, usize) -> Result<Evaluation, String> + 'a,
    {
        Box::new(move |theta, index| {
            let pv = ParamVector::from_slice(theta).map_err(|e| e.to_string())?;
            f(&pv, index)
        })
    }

    fn validate(&self) -> Result<(), BoError> {
        if self.budget < 1 {
            return Err(BoError::InvalidProblem("budget must be at least 1".into()));
        }
        if self.init_design < 1 {
            return Err(BoError::InvalidProblem(
                "init_design must be at least 1".into(),
            ));
        }
        self.bounds.validate()?;
        Ok(())
    }
}

/// Which phase produced a history record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Init,
    Bo,
}

/// One evaluation in the tuning history.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub phase: Phase,
    /// Evaluated point in engineering units.
    pub theta: Vec<f64>,
    /// Observed cost (the imputed value when `failed`).
    pub observed_cost: f64,
    pub failed: bool,
    /// Acquisition value of the proposal; absent for the initial design.
    pub acquisition_value: Option<f64>,
    /// Incumbent estimate after this evaluation, engineering units.
    pub incumbent: Vec<f64>,
    pub incumbent_cost: f64,
    pub breakdown: serde_json::Value,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TuningReport {
    pub history: Vec<IterationRecord>,
    pub incumbent: Vec<f64>,
    pub incumbent_cost: f64,
    pub seed: u64,
    pub acquisition: AcquisitionConfig,
    pub final_hyper: Option<GpHyper>,
    pub bounds: Bounds,
}

impl TuningReport {
    /// Best successfully observed cost so far at each history index.
    pub fn best_observed_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.history
            .iter()
            .map(|rec| {
                if !rec.failed {
                    best = best.min(rec.observed_cost);
                }
                best
            })
            .collect()
    }
}

/// The in-progress loop: owns the problem, the accumulated data, and the
/// hyperparameter state.
pub struct TuningState<'a> {
    problem: TuningProblem<'a>,
    acq: AcquisitionConfig,
    seed: u64,
    init_points: Vec<Vec<f64>>,
    dataset: Dataset,
    history: Vec<IterationRecord>,
    hyper: Option<GpHyper>,
    prior_mean: f64,
    /// Belief snapshot from the most recent entropy-search proposal.
    pub last_pmin: Option<PminGrid>,
}

impl<'a> TuningState<'a> {
    pub fn new(
        problem: TuningProblem<'a>,
        acq: AcquisitionConfig,
        seed: u64,
    ) -> Result<Self, BoError> {
        problem.validate()?;
        acq.validate()?;
        let init_points = crate::paramspace::sample_uniform_points(
            &problem.bounds,
            problem.init_design,
            derive_seed(seed, "init-design", 0),
        )?;
        let hyper = match &problem.hyper_mode {
            HyperMode::Fixed(h) => {
                h.validate()?;
                Some(h.clone())
            }
            _ => None,
        };
        Ok(Self {
            problem,
            acq,
            seed,
            init_points,
            dataset: Dataset::empty(),
            history: Vec::new(),
            hyper,
            prior_mean: 0.0,
            last_pmin: None,
        })
    }

    /// Rebuild a state from a previously recorded history, re-deriving all
    /// internal state so that continuing reproduces an uninterrupted run.
    pub fn resume(
        problem: TuningProblem<'a>,
        acq: AcquisitionConfig,
        seed: u64,
        history: Vec<IterationRecord>,
    ) -> Result<Self, BoError> {
        let mut state = Self::new(problem, acq, seed)?;
        if history.len() > state.total_evaluations() {
            return Err(BoError::InvalidProblem(
                "history longer than the configured budget".into(),
            ));
        }
        for rec in &history {
            let encoded = state.problem.bounds.encode_point(&rec.theta)?;
            state.dataset.push(encoded, rec.observed_cost);
        }
        state.history = history;
        if state.history.len() > state.problem.init_design {
            state.establish_prior_mean();
            state.ensure_hyper_for_bo()?;
        }
        Ok(state)
    }

    pub fn total_evaluations(&self) -> usize {
        self.problem.init_design + self.problem.budget
    }

    pub fn is_complete(&self) -> bool {
        self.history.len() >= self.total_evaluations()
    }

    pub fn history(&self) -> &[IterationRecord] {
        &self.history
    }

    fn best_success(&self) -> Option<(usize, f64)> {
        self.history
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.failed)
            .map(|(i, r)| (i, r.observed_cost))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    fn worst_success(&self) -> Option<f64> {
        self.history
            .iter()
            .filter(|r| !r.failed)
            .map(|r| r.observed_cost)
            .max_by(f64::total_cmp)
    }

    fn signal_std_estimate(&self) -> f64 {
        if let Some(h) = &self.hyper {
            return h.kernel.signal_std;
        }
        let vals: Vec<f64> = self
            .history
            .iter()
            .filter(|r| !r.failed)
            .map(|r| r.observed_cost)
            .collect();
        if vals.len() < 2 {
            return 1.0;
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64)
            .sqrt()
            .max(1e-6)
    }

    fn establish_prior_mean(&mut self) {
        self.prior_mean = match self.problem.mean_mode {
            MeanMode::Zero => 0.0,
            MeanMode::EmpiricalInit => {
                let init: Vec<f64> = self
                    .history
                    .iter()
                    .take(self.problem.init_design)
                    .filter(|r| !r.failed)
                    .map(|r| r.observed_cost)
                    .collect();
                if init.is_empty() {
                    0.0
                } else {
                    init.iter().sum::<f64>() / init.len() as f64
                }
            }
        };
    }

    fn fit_dataset(&self, limit: Option<usize>) -> Dataset {
        match limit {
            Some(n) => Dataset {
                inputs: self.dataset.inputs.iter().take(n).cloned().collect(),
                targets: self.dataset.targets.iter().take(n).copied().collect(),
            },
            None => self.dataset.clone(),
        }
    }

    fn fallback_hyper(&self, family: KernelFamily) -> GpHyper {
        let dim = self.problem.bounds.dim();
        let ls = vec![0.25; dim];
        let signal = self.signal_std_estimate();
        let kernel = match family {
            KernelFamily::SquaredExponentialArd => KernelSpec::squared_exponential(ls, signal),
            KernelFamily::Matern52Ard => KernelSpec::matern52(ls, signal),
            KernelFamily::RationalQuadraticArd => KernelSpec::rational_quadratic(ls, signal, 1.0),
            KernelFamily::GammaExponentialArd => KernelSpec::gamma_exponential(ls, signal, 1.5),
        };
        GpHyper::new(kernel, 1e-3 * signal.max(1e-3), self.prior_mean)
    }

    /// Make sure hyperparameters exist for the BO phase, fitting if the mode
    /// requires it.
    fn ensure_hyper_for_bo(&mut self) -> Result<(), BoError> {
        match &self.problem.hyper_mode {
            HyperMode::Fixed(_) => {}
            HyperMode::FitOnce {
                family,
                bounds,
                restarts,
            } => {
                if self.hyper.is_none() {
                    let data = self.fit_dataset(Some(self.problem.init_design));
                    self.hyper = Some(self.fit_or_fallback(&data, *family, bounds, *restarts, 0));
                }
            }
            HyperMode::Refit {
                family,
                bounds,
                restarts,
            } => {
                let data = self.fit_dataset(None);
                let iter = self.history.len() as u64;
                self.hyper = Some(self.fit_or_fallback(&data, *family, bounds, *restarts, iter));
            }
        }
        Ok(())
    }

    fn fit_or_fallback(
        &self,
        data: &Dataset,
        family: KernelFamily,
        bounds: &HyperBox,
        restarts: usize,
        index: u64,
    ) -> GpHyper {
        if data.len() < 2 {
            return self.fallback_hyper(family);
        }
        match fit_hyperparameters(
            data,
            family,
            bounds,
            restarts,
            derive_seed(self.seed, "hyper-fit", index),
            self.prior_mean,
        ) {
            Ok(out) if !out.warned => out.hyper,
            _ => self.fallback_hyper(family),
        }
    }

    /// Run one propose-evaluate-update cycle, appending exactly one record.
    pub fn step(&mut self) -> Result<&IterationRecord, BoError> {
        if self.is_complete() {
            return Err(BoError::AlreadyComplete);
        }
        let index = self.history.len();
        let init = self.problem.init_design;

        let (theta_eng, acquisition_value, phase) = if index < init {
            (self.init_points[index].clone(), None, Phase::Init)
        } else {
            if index == init {
                self.establish_prior_mean();
            }
            self.ensure_hyper_for_bo()?;
            let (point, value) = self.propose(index - init)?;
            (point, Some(value), Phase::Bo)
        };

        // Evaluate, imputing failures so the budget semantics stay exact.
        let (observed_cost, failed, breakdown) =
            match (self.problem.objective)(&theta_eng, index) {
                Ok(eval) if eval.cost.is_finite() => (eval.cost, false, eval.breakdown),
                Ok(eval) => (
                    self.imputed_cost(),
                    true,
                    serde_json::json!({ "error": format!("non-finite cost {}", eval.cost) }),
                ),
                Err(msg) => (self.imputed_cost(), true, serde_json::json!({ "error": msg })),
            };

        let encoded = self.problem.bounds.encode_point(&theta_eng)?;
        self.dataset.push(encoded, observed_cost);

        // Provisional record; incumbent filled in below from the full state.
        self.history.push(IterationRecord {
            iteration: index,
            phase,
            theta: theta_eng,
            observed_cost,
            failed,
            acquisition_value,
            incumbent: Vec::new(),
            incumbent_cost: f64::NAN,
            breakdown,
        });

        let (incumbent, incumbent_cost) = self.current_incumbent()?;
        let rec = self.history.last_mut().expect("just pushed");
        rec.incumbent = incumbent;
        rec.incumbent_cost = incumbent_cost;
        Ok(self.history.last().expect("just pushed"))
    }

    fn imputed_cost(&self) -> f64 {
        let base = self.worst_success().unwrap_or(self.prior_mean);
        base + 3.0 * self.signal_std_estimate()
    }

    /// Propose the next point by maximizing the configured acquisition over
    /// the current posterior. Returns engineering coordinates.
    fn propose(&mut self, bo_iter: usize) -> Result<(Vec<f64>, f64), BoError> {
        let hyper = self
            .hyper
            .clone()
            .expect("hyper established before proposing");
        let posterior = GpPosterior::fit(self.dataset.clone(), hyper)?;
        let dim = self.problem.bounds.dim();
        let max_seed = derive_seed(self.seed, "acq-max", bo_iter as u64);

        let (encoded, value) = match self.acq.kind {
            AcquisitionKind::Ei => {
                let eta = posterior
                    .best_observed()
                    .map(|(_, v)| v)
                    .expect("nonempty dataset");
                let acq = |x: &[f64]| {
                    posterior
                        .predict(x)
                        .map(|(m, var)| ei(m, var.sqrt(), eta))
                        .unwrap_or(f64::NEG_INFINITY)
                };
                let mean = |x: &[f64]| {
                    posterior
                        .predict(x)
                        .map(|(m, _)| m)
                        .unwrap_or(f64::INFINITY)
                };
                let best = maximize_acquisition(
                    &acq,
                    dim,
                    self.acq.n_starts,
                    max_seed,
                    posterior.dataset().inputs.as_slice(),
                    mean,
                );
                let v = acq(&best);
                (best, v)
            }
            AcquisitionKind::Es => {
                let grid = build_representer_grid(
                    &posterior,
                    self.acq.n_representers,
                    derive_seed(self.seed, "grid", bo_iter as u64),
                )?;
                let mut cfg = self.acq.clone();
                cfg.seed = derive_seed(self.seed, "es", bo_iter as u64);
                let ctx = EsContext::new(&posterior, &grid, &cfg)?;
                self.last_pmin = Some(ctx.base_grid());
                let acq = |x: &[f64]| ctx.expected_dh(x).unwrap_or(f64::NEG_INFINITY);
                let mean = |x: &[f64]| {
                    posterior
                        .predict(x)
                        .map(|(m, _)| m)
                        .unwrap_or(f64::INFINITY)
                };
                let best = maximize_acquisition(
                    &acq,
                    dim,
                    self.acq.n_starts,
                    max_seed,
                    grid.points.as_slice(),
                    mean,
                );
                let v = acq(&best);
                (best, v)
            }
        };
        Ok((self.problem.bounds.decode_point(&encoded)?, value))
    }

    /// Incumbent after the latest evaluation: best observed point for EI (and
    /// during the initial design), posterior-mean minimizer for ES.
    fn current_incumbent(&self) -> Result<(Vec<f64>, f64), BoError> {
        let best_obs = || -> (Vec<f64>, f64) {
            match self.best_success() {
                Some((i, cost)) => (self.history[i].theta.clone(), cost),
                None => {
                    let rec = self.history.last().expect("nonempty history");
                    (rec.theta.clone(), rec.observed_cost)
                }
            }
        };

        if self.acq.kind == AcquisitionKind::Ei
            || self.history.len() <= self.problem.init_design
            || self.hyper.is_none()
        {
            return Ok(best_obs());
        }

        let hyper = self.hyper.clone().expect("checked above");
        let posterior = GpPosterior::fit(self.dataset.clone(), hyper)?;
        let encoded = estimate_incumbent(
            &posterior,
            self.acq.n_starts,
            derive_seed(self.seed, "incumbent", self.history.len() as u64),
        );
        let (mean, _) = posterior.predict(&encoded)?;
        Ok((self.problem.bounds.decode_point(&encoded)?, mean))
    }

    /// Consume the state into the final report.
    pub fn into_report(self) -> TuningReport {
        let last = self.history.last();
        let (incumbent, incumbent_cost) = last
            .map(|r| (r.incumbent.clone(), r.incumbent_cost))
            .unwrap_or_default();
        TuningReport {
            history: self.history,
            incumbent,
            incumbent_cost,
            seed: self.seed,
            acquisition: self.acq,
            final_hyper: self.hyper,
            bounds: self.problem.bounds,
        }
    }
}

/// Run the full loop: `init_design` seeded-uniform evaluations followed by
/// `budget` acquisition-driven proposals. Deterministic end to end for fixed
/// seeds and a deterministic objective.
pub fn run(
    problem: TuningProblem<'_>,
    acq: AcquisitionConfig,
    seed: u64,
) -> Result<TuningReport, BoError> {
    let mut state = TuningState::new(problem, acq, seed)?;
    while !state.is_complete() {
        state.step()?;
    }
    Ok(state.into_report())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paramspace::DimSpec;

    fn unit_bounds(dim: usize) -> Bounds {
        Bounds::new(
            (0..dim)
                .map(|i| DimSpec::linear(&format!("x{i}"), 0.0, 1.0))
                .collect(),
        )
        .unwrap()
    }

    fn fixed_se_hyper(dim: usize, lengthscale: f64, signal: f64) -> HyperMode {
        HyperMode::Fixed(GpHyper::new(
            KernelSpec::squared_exponential(vec![lengthscale; dim], signal),
            1e-3,
            0.0,
        ))
    }

    fn quadratic_objective<'a>(center: Vec<f64>) -> Objective<'a> {
        Box::new(move |x: &[f64], _| {
            let cost = x
                .iter()
                .zip(&center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            Ok(Evaluation::bare(cost))
        })
    }

    #[test]
    fn loop_count_contract() {
        let problem = TuningProblem::new(
            quadratic_objective(vec![0.5]),
            unit_bounds(1),
            1,
            1,
            fixed_se_hyper(1, 0.2, 1.0),
        );
        let report = run(problem, AcquisitionConfig::ei(0), 3).unwrap();
        assert_eq!(report.history.len(), 2);
        assert_eq!(report.history[0].phase, Phase::Init);
        assert_eq!(report.history[1].phase, Phase::Bo);
    }

    #[test]
    fn quadratic_bowl_is_located_in_four_dimensions() {
        let center = vec![0.45, 0.3, 0.65, 0.55];
        let problem = TuningProblem::new(
            quadratic_objective(center.clone()),
            unit_bounds(4),
            10,
            10,
            fixed_se_hyper(4, 0.35, 0.3),
        );
        let report = run(problem, AcquisitionConfig::ei(0), 7).unwrap();
        let dist: f64 = report
            .incumbent
            .iter()
            .zip(&center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        // Within 10% of the box diagonal (2.0 in 4-D).
        assert!(dist < 0.2, "incumbent {:?} missed center by {dist}", report.incumbent);
    }

    #[test]
    fn stepping_matches_run_on_the_same_seeds() {
        let make_problem = || {
            TuningProblem::new(
                quadratic_objective(vec![0.3, 0.7]),
                unit_bounds(2),
                3,
                3,
                fixed_se_hyper(2, 0.3, 0.5),
            )
        };
        let report_run = run(make_problem(), AcquisitionConfig::ei(1), 11).unwrap();

        let mut state = TuningState::new(make_problem(), AcquisitionConfig::ei(1), 11).unwrap();
        for _ in 0..6 {
            state.step().unwrap();
        }
        assert!(state.is_complete());
        let report_step = state.into_report();
        assert_eq!(
            serde_json::to_string(&report_run).unwrap(),
            serde_json::to_string(&report_step).unwrap()
        );
    }

    #[test]
    fn step_on_complete_state_errors() {
        let problem = TuningProblem::new(
            quadratic_objective(vec![0.5]),
            unit_bounds(1),
            1,
            1,
            fixed_se_hyper(1, 0.2, 1.0),
        );
        let mut state = TuningState::new(problem, AcquisitionConfig::ei(0), 0).unwrap();
        state.step().unwrap();
        state.step().unwrap();
        assert!(matches!(state.step(), Err(BoError::AlreadyComplete)));
    }

    #[test]
    fn failures_are_imputed_and_the_loop_continues() {
        let mut calls = 0usize;
        let objective: Objective = Box::new(move |x: &[f64], _| {
            calls += 1;
            if calls == 2 {
                Err("spoiled experiment".into())
            } else {
                Ok(Evaluation::bare(x[0]))
            }
        });
        let problem = TuningProblem::new(
            objective,
            unit_bounds(1),
            2,
            3,
            fixed_se_hyper(1, 0.25, 0.4),
        );
        let report = run(problem, AcquisitionConfig::ei(2), 5).unwrap();
        assert_eq!(report.history.len(), 5);
        let failed: Vec<_> = report.history.iter().filter(|r| r.failed).collect();
        assert_eq!(failed.len(), 1);
        assert_eq!(failed[0].iteration, 1);
        assert_eq!(
            failed[0].breakdown["error"],
            serde_json::json!("spoiled experiment")
        );
        // Imputed as worst success so far + 3 signal stds.
        let worst_before = report.history[0].observed_cost;
        assert!((failed[0].observed_cost - (worst_before + 3.0 * 0.4)).abs() < 1e-12);
    }

    #[test]
    fn identical_seeds_give_byte_identical_reports() {
        let run_once = || {
            let problem = TuningProblem::new(
                quadratic_objective(vec![0.6, 0.4]),
                unit_bounds(2),
                4,
                4,
                fixed_se_hyper(2, 0.3, 0.5),
            );
            serde_json::to_string(&run(problem, AcquisitionConfig::es(9), 13).unwrap()).unwrap()
        };
        assert_eq!(run_once(), run_once());
    }

    #[test]
    fn all_proposals_respect_bounds() {
        let bounds = Bounds::new(vec![
            DimSpec::linear("a", -2.0, 3.0),
            DimSpec::log_magnitude("p", -100.0, -1.0),
        ])
        .unwrap();
        let objective: Objective =
            Box::new(|x: &[f64], _| Ok(Evaluation::bare((x[0] - 1.0).powi(2) + x[1].abs() / 50.0)));
        let problem = TuningProblem::new(
            objective,
            bounds.clone(),
            6,
            4,
            fixed_se_hyper(2, 0.3, 1.0),
        );
        let report = run(problem, AcquisitionConfig::es(3), 21).unwrap();
        for rec in &report.history {
            assert!(bounds.check(&rec.theta).is_ok(), "{:?} out of bounds", rec.theta);
        }
    }

    #[test]
    fn best_observed_sequence_is_monotone() {
        let problem = TuningProblem::new(
            quadratic_objective(vec![0.2, 0.8, 0.5]),
            unit_bounds(3),
            8,
            6,
            fixed_se_hyper(3, 0.3, 0.4),
        );
        let report = run(problem, AcquisitionConfig::ei(4), 17).unwrap();
        let best = report.best_observed_so_far();
        for w in best.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn resume_reproduces_an_uninterrupted_run() {
        let make_problem = || {
            TuningProblem::new(
                quadratic_objective(vec![0.35, 0.6]),
                unit_bounds(2),
                4,
                4,
                HyperMode::FitOnce {
                    family: KernelFamily::SquaredExponentialArd,
                    bounds: HyperBox::default(),
                    restarts: 4,
                },
            )
        };
        let full = run(make_problem(), AcquisitionConfig::ei(6), 31).unwrap();

        // Interrupt after 5 records, resume, and finish.
        let mut state = TuningState::new(make_problem(), AcquisitionConfig::ei(6), 31).unwrap();
        for _ in 0..5 {
            state.step().unwrap();
        }
        let partial = state.history().to_vec();
        let mut resumed =
            TuningState::resume(make_problem(), AcquisitionConfig::ei(6), 31, partial).unwrap();
        while !resumed.is_complete() {
            resumed.step().unwrap();
        }
        let resumed_report = resumed.into_report();
        assert_eq!(
            serde_json::to_string(&full).unwrap(),
            serde_json::to_string(&resumed_report).unwrap()
        );
    }

    #[test]
    fn one_dimensional_multimodal_objective_finds_the_global_basin() {
        // Three Gaussian wells; global minimum in the middle. Basin
        // boundaries verified by dense scan within the test.
        let f = |x: f64| {
            -0.8 * (-((x - 0.15) / 0.05).powi(2)).exp()
                - 1.0 * (-((x - 0.55) / 0.06).powi(2)).exp()
                - 0.6 * (-((x - 0.85) / 0.04).powi(2)).exp()
        };

        // Brute-force the global basin: walk outward from the global argmin
        // to the nearest local maxima.
        let n = 200_000;
        let values: Vec<f64> = (0..=n).map(|i| f(i as f64 / n as f64)).collect();
        let gmin = (0..=n)
            .min_by(|&a, &b| values[a].total_cmp(&values[b]))
            .unwrap();
        // Walk to the flanking maxima.
        let mut left = gmin;
        while left > 0 && values[left - 1] >= values[left] {
            left -= 1;
        }
        while left > 0 && values[left - 1] <= values[left] {
            left -= 1;
        }
        let mut right = gmin;
        while right < n && values[right + 1] >= values[right] {
            right += 1;
        }
        while right < n && values[right + 1] <= values[right] {
            right += 1;
        }
        let basin = (left as f64 / n as f64, right as f64 / n as f64);
        assert!(basin.0 < 0.55 && 0.55 < basin.1);

        let mut hits = 0;
        for seed in 0..10u64 {
            let objective: Objective = Box::new(move |x: &[f64], _| Ok(Evaluation::bare(f(x[0]))));
            let problem = TuningProblem::new(
                objective,
                unit_bounds(1),
                15,
                5,
                fixed_se_hyper(1, 0.08, 0.5),
            );
            let report = run(problem, AcquisitionConfig::ei(seed), seed).unwrap();
            let inc = report.incumbent[0];
            if inc >= basin.0 && inc <= basin.1 {
                hits += 1;
            }
        }
        assert!(hits >= 9, "global basin found in only {hits}/10 seeds");
    }
}

//! Campaign orchestration: turns a configuration into closed-loop
//! experiments, runs the tuning loop or a baseline, and persists reproducible
//! artifacts (JSONL run log, trajectories, plot data, final report).
//!
//! All artifact content is a pure function of (config, seeds). Wall-clock
//! timings go to a separate sidecar that is excluded from that guarantee.

use std::cell::RefCell;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::rc::Rc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::AcquisitionKind;
use crate::adrc::{synthesize, AdrcError};
use crate::bo::{
    BoError, Evaluation, IterationRecord, Phase, TuningProblem, TuningReport, TuningState,
};
use crate::config::{CampaignConfig, ConfigError, Functional, SCHEMA_VERSION};
use crate::cost::{
    estimate_st, j_heur, j_norm, secondary_metrics, zero_phase_filter, CostError, DisturbanceRun,
    FrequencyResponse, HoldRun, SecondaryMetrics, SecondaryRuns, Trajectory, SAMPLE_RATE_HZ,
};
use crate::paramspace::{sample_uniform_points, ParamSpaceError, ParamVector};
use crate::plant::{simulate, Disturbance, PlantError, SimSpec};
use crate::rng::derive_seed;

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Bo(#[from] BoError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Adrc(#[from] AdrcError),
    #[error(transparent)]
    ParamSpace(#[from] ParamSpaceError),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("run directory is corrupt: {0}")]
    Corrupt(String),
}

fn io_ctx(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CampaignError {
    let context = context.into();
    move |source| CampaignError::Io { context, source }
}

/// Side products of one objective evaluation, kept for persistence.
#[derive(Clone, Debug)]
pub struct EvalArtifacts {
    pub trajectory: Trajectory,
    pub frequency_response: Option<FrequencyResponse>,
}

/// Evaluate the configured cost functional at one parameter point.
///
/// Errors are returned as plain messages so the tuning loop can record the
/// failure and continue (the hardware analogue of a spoiled experiment).
pub fn evaluate_point(
    cfg: &CampaignConfig,
    theta: &ParamVector,
    eval_index: u64,
) -> Result<(Evaluation, EvalArtifacts), String> {
    let pole_spec = theta
        .to_pole_spec(&cfg.bounds)
        .map_err(|e| format!("safety bounds: {e}"))?;
    let design = synthesize(&pole_spec, cfg.nominal_b()).map_err(|e| e.to_string())?;
    let sim_seed = derive_seed(cfg.seed, "plant-eval", eval_index);

    match cfg.functional {
        Functional::Heur => {
            let spec = &cfg.heur.steps;
            let reference = spec.generate();
            let sim = SimSpec {
                duration_s: spec.duration(),
                disturbance: Disturbance::none(),
                noise_std: cfg.sensor_noise_std,
                seed: sim_seed,
                substeps: 1,
                initial: None,
            };
            let traj = simulate(&cfg.plant, &mut design.controller(), &reference, &sim)
                .map_err(|e| e.to_string())?;
            let y_f = zero_phase_filter(&traj.y, cfg.heur.filter_cutoff_hz, SAMPLE_RATE_HZ)
                .map_err(|e| e.to_string())?;
            let mut filtered = traj.clone();
            filtered.y = y_f;
            let report = j_heur(&filtered, spec).map_err(|e| e.to_string())?;
            let unsettled = report.steps.iter().filter(|s| !s.settled).count();
            let eval = Evaluation {
                cost: report.j,
                breakdown: serde_json::json!({
                    "functional": "heur",
                    "mean_t90_s": report.mean_t90,
                    "mean_overshoot_deg": report.mean_overshoot,
                    "unsettled_steps": unsettled,
                }),
            };
            Ok((
                eval,
                EvalArtifacts {
                    trajectory: traj,
                    frequency_response: None,
                },
            ))
        }
        Functional::Norm => {
            let spec = &cfg.norm.chirp;
            let reference = spec.generate();
            let sim = SimSpec {
                duration_s: spec.duration_s,
                disturbance: Disturbance::none(),
                noise_std: cfg.sensor_noise_std,
                seed: sim_seed,
                substeps: 1,
                initial: Some(crate::plant::PlantState {
                    x1: spec.center,
                    x2: 0.0,
                }),
            };
            let traj = simulate(&cfg.plant, &mut design.controller(), &reference, &sim)
                .map_err(|e| e.to_string())?;
            // Filter reference and output identically: the common factor
            // cancels in the spectral ratios while sensor noise is removed.
            let cutoff = cfg.norm.filter_cutoff_hz;
            let mut filtered = traj.clone();
            filtered.y =
                zero_phase_filter(&traj.y, cutoff, SAMPLE_RATE_HZ).map_err(|e| e.to_string())?;
            filtered.r =
                zero_phase_filter(&traj.r, cutoff, SAMPLE_RATE_HZ).map_err(|e| e.to_string())?;
            let fr = estimate_st(&filtered, spec).map_err(|e| e.to_string())?;
            let report = j_norm(&fr).map_err(|e| e.to_string())?;
            let eval = Evaluation {
                cost: report.j,
                breakdown: serde_json::json!({
                    "functional": "norm",
                    "s_inf": report.s_inf,
                    "t_two": report.t_two,
                    "f_s_hz": report.f_s,
                    "dropped_bins": fr.dropped.len(),
                }),
            };
            Ok((
                eval,
                EvalArtifacts {
                    trajectory: traj,
                    frequency_response: Some(fr),
                },
            ))
        }
    }
}

/// Run the secondary-objective experiments (chirp, set-point holds,
/// disturbance step) for one parameter point.
pub fn run_secondary(
    cfg: &CampaignConfig,
    theta: &ParamVector,
) -> Result<(SecondaryMetrics, FrequencyResponse), CampaignError> {
    let pole_spec = theta.to_pole_spec(&cfg.bounds)?;
    let design = synthesize(&pole_spec, cfg.nominal_b())?;
    let cutoff = cfg.norm.filter_cutoff_hz;

    // Chirp for the sensitivity estimate.
    let chirp = &cfg.norm.chirp;
    let reference = chirp.generate();
    let sim = SimSpec {
        duration_s: chirp.duration_s,
        disturbance: Disturbance::none(),
        noise_std: cfg.sensor_noise_std,
        seed: derive_seed(cfg.seed, "secondary-chirp", 0),
        substeps: 1,
        initial: Some(crate::plant::PlantState {
            x1: chirp.center,
            x2: 0.0,
        }),
    };
    let traj = simulate(&cfg.plant, &mut design.controller(), &reference, &sim)?;
    let mut filtered = traj.clone();
    filtered.y = zero_phase_filter(&traj.y, cutoff, SAMPLE_RATE_HZ)?;
    filtered.r = zero_phase_filter(&traj.r, cutoff, SAMPLE_RATE_HZ)?;
    let fr = estimate_st(&filtered, chirp)?;

    // Set-point holds for the noise measure (raw output).
    let mut holds = Vec::new();
    for (i, &sp) in cfg.secondary.setpoints.iter().enumerate() {
        let n = (cfg.secondary.hold_s / crate::cost::SAMPLE_DT).round() as usize;
        let sim = SimSpec {
            duration_s: cfg.secondary.hold_s,
            disturbance: Disturbance::none(),
            noise_std: cfg.sensor_noise_std,
            seed: derive_seed(cfg.seed, "secondary-hold", i as u64),
            substeps: 1,
            initial: None,
        };
        let hold = simulate(&cfg.plant, &mut design.controller(), &vec![sp; n], &sim)?;
        holds.push(HoldRun {
            setpoint: sp,
            y: hold.y,
        });
    }

    // Disturbance step at the configured set point.
    let sec = &cfg.secondary;
    let duration = sec.disturbance_onset_s + sec.disturbance_duration_s;
    let n = (duration / crate::cost::SAMPLE_DT).round() as usize;
    let sim = SimSpec {
        duration_s: duration,
        disturbance: Disturbance::step(sec.disturbance_onset_s, sec.disturbance_height * cfg.plant.b),
        noise_std: cfg.sensor_noise_std,
        seed: derive_seed(cfg.seed, "secondary-dist", 0),
        substeps: 1,
        initial: None,
    };
    let dist_traj = simulate(
        &cfg.plant,
        &mut design.controller(),
        &vec![sec.disturbance_setpoint; n],
        &sim,
    )?;
    let mut dist_filtered = dist_traj.clone();
    dist_filtered.y = zero_phase_filter(&dist_traj.y, cutoff, SAMPLE_RATE_HZ)?;

    let runs = SecondaryRuns {
        chirp: Some(fr.clone()),
        holds: Some(holds),
        disturbance: Some(DisturbanceRun {
            traj: dist_filtered,
            onset_s: sec.disturbance_onset_s,
            setpoint: sec.disturbance_setpoint,
        }),
    };
    Ok((secondary_metrics(&runs)?, fr))
}

/// One line of the JSONL run log.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunLogRecord {
    pub schema_version: u32,
    #[serde(flatten)]
    pub record: IterationRecord,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineMethod {
    Random,
    Grid { points_per_dim: usize },
}

/// A configured campaign bound to an output directory.
pub struct Campaign {
    cfg: CampaignConfig,
    out: PathBuf,
}

impl Campaign {
    pub fn new(cfg: CampaignConfig, out: PathBuf) -> Result<Self, CampaignError> {
        cfg.validate()?;
        Ok(Self { cfg, out })
    }

    pub fn config(&self) -> &CampaignConfig {
        &self.cfg
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    fn prepare_dirs(&self) -> Result<(), CampaignError> {
        for sub in ["trajectories", "plot"] {
            fs::create_dir_all(self.out.join(sub))
                .map_err(io_ctx(format!("creating {}/{sub}", self.out.display())))?;
        }
        Ok(())
    }

    fn write_snapshot(&self) -> Result<(), CampaignError> {
        let path = self.out.join("config_snapshot.json");
        let text = serde_json::to_string_pretty(&self.cfg)?;
        fs::write(&path, text).map_err(io_ctx(format!("writing {}", path.display())))?;
        Ok(())
    }

    fn objective(
        &self,
        artifacts: Rc<RefCell<Option<EvalArtifacts>>>,
    ) -> crate::bo::Objective<'_> {
        let cfg = self.cfg.clone();
        TuningProblem::valve_objective(move |theta: &ParamVector, index: usize| {
            let result = evaluate_point(&cfg, theta, index as u64);
            match result {
                Ok((eval, arts)) => {
                    *artifacts.borrow_mut() = Some(arts);
                    Ok(eval)
                }
                Err(msg) => {
                    *artifacts.borrow_mut() = None;
                    Err(msg)
                }
            }
        })
    }

    fn persist_iteration(
        &self,
        rec: &IterationRecord,
        artifacts: Option<&EvalArtifacts>,
        pmin: Option<&crate::acquisition::PminGrid>,
        log: &mut fs::File,
        timings: &mut fs::File,
        elapsed_ms: f64,
    ) -> Result<(), CampaignError> {
        if let Some(arts) = artifacts {
            let base = self.out.join("trajectories");
            let csv_path = base.join(format!("iter_{:03}.csv", rec.iteration));
            let mut f = fs::File::create(&csv_path)
                .map_err(io_ctx(format!("writing {}", csv_path.display())))?;
            arts.trajectory
                .write_csv(&mut f)
                .map_err(io_ctx("writing trajectory csv"))?;
            let meta = serde_json::json!({
                "schema_version": SCHEMA_VERSION,
                "iteration": rec.iteration,
                "theta": rec.theta,
                "cost": rec.observed_cost,
                "failed": rec.failed,
                "phase": rec.phase,
            });
            let meta_path = base.join(format!("iter_{:03}.json", rec.iteration));
            fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)
                .map_err(io_ctx(format!("writing {}", meta_path.display())))?;

            if let Some(fr) = &arts.frequency_response {
                let path = self
                    .out
                    .join("plot")
                    .join(format!("st_iter_{:03}.csv", rec.iteration));
                let mut f =
                    fs::File::create(&path).map_err(io_ctx(format!("writing {}", path.display())))?;
                fr.write_csv(&mut f).map_err(io_ctx("writing |S|/|T| csv"))?;
            }
        }

        if rec.phase == Phase::Bo && self.cfg.acquisition == AcquisitionKind::Es {
            if let Some(grid) = pmin {
                let path = self
                    .out
                    .join("plot")
                    .join(format!("pmin_iter_{:03}.csv", rec.iteration));
                let mut f =
                    fs::File::create(&path).map_err(io_ctx(format!("writing {}", path.display())))?;
                write_pmin_csv(&mut f, grid, &self.cfg).map_err(io_ctx("writing pmin csv"))?;
            }
        }

        let line = serde_json::to_string(&RunLogRecord {
            schema_version: SCHEMA_VERSION,
            record: rec.clone(),
        })?;
        writeln!(log, "{line}").map_err(io_ctx("appending to log.jsonl"))?;
        writeln!(timings, "{},{:.3}", rec.iteration, elapsed_ms)
            .map_err(io_ctx("appending to timings.csv"))?;
        Ok(())
    }

    fn finalize(&self, report: &TuningReport) -> Result<(), CampaignError> {
        let path = self.out.join("report.json");
        fs::write(&path, serde_json::to_string_pretty(report)?)
            .map_err(io_ctx(format!("writing {}", path.display())))?;

        // Audit record: the synthesized controller for the final incumbent.
        if let Ok(theta) = ParamVector::from_slice(&report.incumbent) {
            if let Ok(spec) = theta.to_pole_spec(&self.cfg.bounds) {
                if let Ok(design) = synthesize(&spec, self.cfg.nominal_b()) {
                    let path = self.out.join("incumbent_design.json");
                    fs::write(&path, serde_json::to_string_pretty(&design)?)
                        .map_err(io_ctx(format!("writing {}", path.display())))?;
                }
            }
        }

        let path = self.out.join("plot").join("cost_vs_iteration.csv");
        let mut f = fs::File::create(&path)
            .map_err(io_ctx(format!("writing {}", path.display())))?;
        writeln!(f, "iteration,observed_cost,best_observed,incumbent_cost")
            .map_err(io_ctx("writing cost csv"))?;
        let best = report.best_observed_so_far();
        for (rec, b) in report.history.iter().zip(best) {
            writeln!(
                f,
                "{},{},{},{}",
                rec.iteration, rec.observed_cost, b, rec.incumbent_cost
            )
            .map_err(io_ctx("writing cost csv"))?;
        }
        Ok(())
    }

    /// Run the full tuning campaign with persistence.
    pub fn run_tune(&self) -> Result<TuningReport, CampaignError> {
        self.prepare_dirs()?;
        self.write_snapshot()?;
        let artifacts = Rc::new(RefCell::new(None));
        let problem = TuningProblem {
            objective: self.objective(artifacts.clone()),
            bounds: self.cfg.bounds.clone(),
            budget: self.cfg.budget,
            init_design: self.cfg.init_design,
            hyper_mode: self.cfg.hyper_mode()?,
            mean_mode: self.cfg.mean_mode,
        };
        let mut state = TuningState::new(problem, self.cfg.acquisition_config(), self.cfg.seed)?;

        let log_path = self.out.join("log.jsonl");
        let mut log = fs::File::create(&log_path)
            .map_err(io_ctx(format!("creating {}", log_path.display())))?;
        let mut timings = self.create_timings(false)?;

        while !state.is_complete() {
            let t0 = Instant::now();
            state.step()?;
            let elapsed = t0.elapsed().as_secs_f64() * 1e3;
            let pmin = state.last_pmin.clone();
            let rec = state.history().last().expect("stepped").clone();
            let arts = artifacts.borrow_mut().take();
            self.persist_iteration(
                &rec,
                arts.as_ref(),
                pmin.as_ref(),
                &mut log,
                &mut timings,
                elapsed,
            )?;
        }
        let report = state.into_report();
        self.finalize(&report)?;
        Ok(report)
    }

    fn create_timings(&self, append: bool) -> Result<fs::File, CampaignError> {
        let path = self.out.join("timings.csv");
        if append && path.exists() {
            return fs::OpenOptions::new()
                .append(true)
                .open(&path)
                .map_err(io_ctx(format!("opening {}", path.display())));
        }
        let mut f =
            fs::File::create(&path).map_err(io_ctx(format!("creating {}", path.display())))?;
        writeln!(f, "iteration,wall_ms").map_err(io_ctx("writing timings header"))?;
        Ok(f)
    }

    /// Resume an interrupted campaign from its run directory. The completed
    /// log is identical to the one an uninterrupted run would have written.
    pub fn resume(out: PathBuf) -> Result<TuningReport, CampaignError> {
        let snapshot = out.join("config_snapshot.json");
        let text = fs::read_to_string(&snapshot)
            .map_err(io_ctx(format!("reading {}", snapshot.display())))?;
        let cfg: CampaignConfig = serde_json::from_str(&text)?;
        let campaign = Self::new(cfg, out)?;
        campaign.prepare_dirs()?;

        let log_path = campaign.out.join("log.jsonl");
        let file = fs::File::open(&log_path)
            .map_err(io_ctx(format!("reading {}", log_path.display())))?;
        let mut history = Vec::new();
        for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_ctx("reading log.jsonl"))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: RunLogRecord = serde_json::from_str(&line)
                .map_err(|e| CampaignError::Corrupt(format!("log line {}: {e}", i + 1)))?;
            history.push(rec.record);
        }

        let artifacts = Rc::new(RefCell::new(None));
        let problem = TuningProblem {
            objective: campaign.objective(artifacts.clone()),
            bounds: campaign.cfg.bounds.clone(),
            budget: campaign.cfg.budget,
            init_design: campaign.cfg.init_design,
            hyper_mode: campaign.cfg.hyper_mode()?,
            mean_mode: campaign.cfg.mean_mode,
        };
        let mut state = TuningState::resume(
            problem,
            campaign.cfg.acquisition_config(),
            campaign.cfg.seed,
            history,
        )?;

        let mut log = fs::OpenOptions::new()
            .append(true)
            .open(&log_path)
            .map_err(io_ctx(format!("appending to {}", log_path.display())))?;
        let mut timings = campaign.create_timings(true)?;
        while !state.is_complete() {
            let t0 = Instant::now();
            state.step()?;
            let elapsed = t0.elapsed().as_secs_f64() * 1e3;
            let pmin = state.last_pmin.clone();
            let rec = state.history().last().expect("stepped").clone();
            let arts = artifacts.borrow_mut().take();
            campaign.persist_iteration(
                &rec,
                arts.as_ref(),
                pmin.as_ref(),
                &mut log,
                &mut timings,
                elapsed,
            )?;
        }
        let report = state.into_report();
        campaign.finalize(&report)?;
        Ok(report)
    }

    /// Evaluate the same budget with seeded uniform or grid proposals,
    /// producing the same artifact set as a tuning run. Random baselines
    /// share the initial-design stream with tuning runs of the same seed.
    pub fn run_baseline(&self, method: BaselineMethod) -> Result<TuningReport, CampaignError> {
        self.prepare_dirs()?;
        self.write_snapshot()?;

        let total = self.cfg.init_design + self.cfg.budget;
        let points: Vec<Vec<f64>> = match method {
            BaselineMethod::Random => sample_uniform_points(
                &self.cfg.bounds,
                total,
                derive_seed(self.cfg.seed, "init-design", 0),
            )?,
            BaselineMethod::Grid { points_per_dim } => {
                if points_per_dim < 2 {
                    return Err(CampaignError::Config(ConfigError::Field {
                        field: "points_per_dim".into(),
                        message: "grid baseline needs at least 2 points per dimension".into(),
                    }));
                }
                grid_points(&self.cfg.bounds, points_per_dim)?
            }
        };

        let log_path = self.out.join("log.jsonl");
        let mut log = fs::File::create(&log_path)
            .map_err(io_ctx(format!("creating {}", log_path.display())))?;
        let mut timings = self.create_timings(false)?;

        let mut history: Vec<IterationRecord> = Vec::new();
        let mut best: Option<(Vec<f64>, f64)> = None;
        for (index, theta_eng) in points.iter().enumerate() {
            let t0 = Instant::now();
            let theta = ParamVector::from_slice(theta_eng)?;
            let (cost, failed, breakdown, arts) =
                match evaluate_point(&self.cfg, &theta, index as u64) {
                    Ok((eval, arts)) => (eval.cost, false, eval.breakdown, Some(arts)),
                    Err(msg) => {
                        let worst = history
                            .iter()
                            .filter(|r| !r.failed)
                            .map(|r| r.observed_cost)
                            .fold(f64::NEG_INFINITY, f64::max);
                        let base = if worst.is_finite() { worst } else { 0.0 };
                        (base + 1.0, true, serde_json::json!({ "error": msg }), None)
                    }
                };
            if !failed && best.as_ref().map_or(true, |(_, b)| cost < *b) {
                best = Some((theta_eng.clone(), cost));
            }
            let (inc, inc_cost) = best
                .clone()
                .unwrap_or_else(|| (theta_eng.clone(), cost));
            let phase = if method == BaselineMethod::Random && index < self.cfg.init_design {
                Phase::Init
            } else {
                Phase::Bo
            };
            let rec = IterationRecord {
                iteration: index,
                phase,
                theta: theta_eng.clone(),
                observed_cost: cost,
                failed,
                acquisition_value: None,
                incumbent: inc,
                incumbent_cost: inc_cost,
                breakdown,
            };
            let elapsed = t0.elapsed().as_secs_f64() * 1e3;
            self.persist_iteration(&rec, arts.as_ref(), None, &mut log, &mut timings, elapsed)?;
            history.push(rec);
        }

        let last = history.last().expect("at least one evaluation");
        let report = TuningReport {
            incumbent: last.incumbent.clone(),
            incumbent_cost: last.incumbent_cost,
            history,
            seed: self.cfg.seed,
            acquisition: self.cfg.acquisition_config(),
            final_hyper: None,
            bounds: self.cfg.bounds.clone(),
        };
        self.finalize(&report)?;
        Ok(report)
    }

    /// One-off evaluation of an explicit parameter point, refusing anything
    /// outside the safety bounds.
    pub fn evaluate_once(
        &self,
        theta: &ParamVector,
        with_secondary: bool,
    ) -> Result<EvalOnceReport, CampaignError> {
        self.cfg.bounds.check(&theta.as_array())?;
        let spec = theta.to_pole_spec(&self.cfg.bounds)?;
        let design = synthesize(&spec, self.cfg.nominal_b())?;
        let (eval, arts) =
            evaluate_point(&self.cfg, theta, 0).map_err(CampaignError::Evaluation)?;
        let secondary = if with_secondary {
            Some(run_secondary(&self.cfg, theta)?.0)
        } else {
            None
        };
        Ok(EvalOnceReport {
            theta: *theta,
            cost: eval.cost,
            breakdown: eval.breakdown,
            secondary,
            design,
            trajectory: arts.trajectory,
            frequency_response: arts.frequency_response,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EvalOnceReport {
    pub theta: ParamVector,
    pub cost: f64,
    pub breakdown: serde_json::Value,
    pub secondary: Option<SecondaryMetrics>,
    pub design: crate::adrc::AdrcDesign,
    #[serde(skip)]
    pub trajectory: Trajectory,
    #[serde(skip)]
    pub frequency_response: Option<FrequencyResponse>,
}

fn grid_points(
    bounds: &crate::paramspace::Bounds,
    per_dim: usize,
) -> Result<Vec<Vec<f64>>, CampaignError> {
    let dim = bounds.dim();
    let axis: Vec<f64> = (0..per_dim)
        .map(|i| i as f64 / (per_dim - 1) as f64)
        .collect();
    let mut out = Vec::with_capacity(per_dim.pow(dim as u32));
    let mut idx = vec![0usize; dim];
    loop {
        let encoded: Vec<f64> = idx.iter().map(|&i| axis[i]).collect();
        out.push(bounds.decode_point(&encoded)?);
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < per_dim {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == dim {
                return Ok(out);
            }
        }
    }
}

fn write_pmin_csv<W: Write>(
    w: &mut W,
    grid: &crate::acquisition::PminGrid,
    cfg: &CampaignConfig,
) -> std::io::Result<()> {
    let names: Vec<String> = cfg.bounds.dims.iter().map(|d| d.name.clone()).collect();
    writeln!(w, "{},mass", names.join(","))?;
    for (point, mass) in grid.points.iter().zip(&grid.mass) {
        let eng = cfg
            .bounds
            .decode_point(point)
            .unwrap_or_else(|_| point.clone());
        let cols: Vec<String> = eng.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{},{}", cols.join(","), mass)?;
    }
    Ok(())
}

/// Run a tuning campaign without touching the filesystem. Used by tests and
/// quick in-process experiments.
pub fn run_tune_in_memory(cfg: &CampaignConfig) -> Result<TuningReport, CampaignError> {
    cfg.validate()?;
    let cfg_inner = cfg.clone();
    let objective = TuningProblem::valve_objective(move |theta: &ParamVector, index: usize| {
        evaluate_point(&cfg_inner, theta, index as u64).map(|(eval, _)| eval)
    });
    let problem = TuningProblem {
        objective,
        bounds: cfg.bounds.clone(),
        budget: cfg.budget,
        init_design: cfg.init_design,
        hyper_mode: cfg.hyper_mode()?,
        mean_mode: cfg.mean_mode,
    };
    Ok(crate::bo::run(
        problem,
        cfg.acquisition_config(),
        cfg.seed,
    )?)
}

/// Evaluate a uniform-random baseline with the same total budget, sharing the
/// initial-design stream, without persistence.
pub fn run_random_baseline_in_memory(cfg: &CampaignConfig) -> Result<Vec<f64>, CampaignError> {
    cfg.validate()?;
    let total = cfg.init_design + cfg.budget;
    let points = sample_uniform_points(&cfg.bounds, total, derive_seed(cfg.seed, "init-design", 0))?;
    let mut costs = Vec::with_capacity(total);
    for (index, p) in points.iter().enumerate() {
        let theta = ParamVector::from_slice(p)?;
        match evaluate_point(cfg, &theta, index as u64) {
            Ok((eval, _)) => costs.push(eval.cost),
            Err(_) => costs.push(f64::INFINITY),
        }
    }
    Ok(costs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> CampaignConfig {
        let mut cfg = CampaignConfig::default();
        cfg.seed = 5;
        cfg.budget = 1;
        cfg.init_design = 2;
        cfg.acquisition = AcquisitionKind::Ei;
        // Short step series keeps the simulation cheap.
        cfg.heur.steps = crate::cost::StepSeriesSpec {
            levels: vec![10.0, 15.0, 10.0],
            hold_s: 2.0,
        };
        cfg
    }

    #[test]
    fn evaluate_point_produces_finite_heur_cost() {
        let cfg = tiny_config();
        let theta = ParamVector::new(0.1, 0.02, -2.0, -20.0);
        let (eval, arts) = evaluate_point(&cfg, &theta, 0).unwrap();
        assert!(eval.cost.is_finite() && eval.cost > 0.0);
        assert_eq!(arts.trajectory.len(), cfg.heur.steps.samples());
        assert_eq!(eval.breakdown["functional"], "heur");
    }

    #[test]
    fn evaluate_point_is_deterministic_per_index() {
        let cfg = tiny_config();
        let theta = ParamVector::new(0.08, 0.015, -1.0, -30.0);
        let a = evaluate_point(&cfg, &theta, 3).unwrap().0.cost;
        let b = evaluate_point(&cfg, &theta, 3).unwrap().0.cost;
        let c = evaluate_point(&cfg, &theta, 4).unwrap().0.cost;
        assert_eq!(a, b);
        assert_ne!(a, c); // different measurement noise per experiment
    }

    #[test]
    fn norm_functional_yields_report_fields() {
        let mut cfg = tiny_config();
        cfg.functional = Functional::Norm;
        cfg.norm.chirp.duration_s = 20.0;
        let theta = ParamVector::new(0.08, 0.015, -1.0, -30.0);
        let (eval, arts) = evaluate_point(&cfg, &theta, 0).unwrap();
        assert!(eval.cost.is_finite());
        assert!(arts.frequency_response.is_some());
        assert!(eval.breakdown["f_s_hz"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn grid_points_count_matches_dimensions() {
        let bounds = crate::paramspace::Bounds::valve_default();
        let pts = grid_points(&bounds, 2).unwrap();
        assert_eq!(pts.len(), 16);
        for p in &pts {
            assert!(bounds.check(p).is_ok());
        }
    }
}

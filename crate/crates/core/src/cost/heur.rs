//! The heuristic cost functional: per-step T90 times and overshoots from a
//! step-series run, averaged into a single scalar.
//!
//! Units follow the measured convention: T90 in seconds and overshoot in
//! degrees are summed unitlessly, so J = mean_T90[s] + mean_overshoot[deg]
//! holds exactly by construction.

use serde::{Deserialize, Serialize};

use super::{CostError, StepSeriesSpec, Trajectory};

/// Metrics for one reference transition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub index: usize,
    /// Time of the reference edge [s].
    pub t_edge: f64,
    pub from: f64,
    pub to: f64,
    /// Time after the edge at which |y - to| first falls to 10% of the step
    /// size [s]; the hold time when the step never settles.
    pub t90: f64,
    /// Peak excursion of y beyond the new level in the step direction,
    /// clamped at zero [deg].
    pub overshoot: f64,
    /// False when the 90% band was never reached within the hold.
    pub settled: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JHeurReport {
    pub j: f64,
    pub mean_t90: f64,
    pub mean_overshoot: f64,
    pub steps: Vec<StepMetrics>,
}

/// Mean of (overshoot_i + T90_i) over the steps, with the two means reported
/// separately. J = mean_t90 + mean_overshoot by construction.
pub fn aggregate_steps(steps: &[StepMetrics]) -> JHeurReport {
    let n = steps.len().max(1) as f64;
    let mean_t90 = steps.iter().map(|s| s.t90).sum::<f64>() / n;
    let mean_overshoot = steps.iter().map(|s| s.overshoot).sum::<f64>() / n;
    JHeurReport {
        j: steps.iter().map(|s| s.t90 + s.overshoot).sum::<f64>() / n,
        mean_t90,
        mean_overshoot,
        steps: steps.to_vec(),
    }
}

/// Evaluate the heuristic functional on a trajectory recorded under the given
/// step series. The output signal is expected to be pre-filtered.
pub fn j_heur(traj: &Trajectory, spec: &StepSeriesSpec) -> Result<JHeurReport, CostError> {
    spec.validate()?;
    traj.validate()?;
    if traj.len() < spec.samples() {
        return Err(CostError::InvalidSpec(format!(
            "trajectory has {} samples but the step series spans {}",
            traj.len(),
            spec.samples()
        )));
    }

    let hold = spec.hold_samples();
    let dt = super::SAMPLE_DT;
    let mut steps = Vec::new();
    for edge in spec.edges() {
        let window_end = (edge.sample + hold).min(traj.len());
        let step_size = (edge.to - edge.from).abs();
        let band = 0.1 * step_size;
        let direction = (edge.to - edge.from).signum();

        let mut t90 = None;
        let mut overshoot = 0.0_f64;
        for k in (edge.sample + 1)..window_end {
            let err = traj.y[k] - edge.to;
            if t90.is_none() && err.abs() <= band {
                t90 = Some(traj.t[k] - edge.time);
            }
            overshoot = overshoot.max(direction * err);
        }
        let hold_duration = hold as f64 * dt;
        steps.push(StepMetrics {
            index: edge.index,
            t_edge: edge.time,
            from: edge.from,
            to: edge.to,
            t90: t90.unwrap_or(hold_duration),
            overshoot: overshoot.max(0.0),
            settled: t90.is_some(),
        });
    }

    Ok(aggregate_steps(&steps))
}

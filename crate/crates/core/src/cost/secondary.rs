//! Secondary control objectives: robustness, noise amplification at set
//! points, and disturbance-rejection duration and overshoot.

use serde::{Deserialize, Serialize};

use super::{CostError, FrequencyResponse, Trajectory};

/// Output record of one steady set-point hold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldRun {
    pub setpoint: f64,
    /// Raw (unfiltered) measured output over the hold.
    pub y: Vec<f64>,
}

/// Record of the disturbance-step experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct DisturbanceRun {
    pub traj: Trajectory,
    /// Disturbance onset [s].
    pub onset_s: f64,
    /// Held set point [deg].
    pub setpoint: f64,
}

/// The set of experiments the secondary metrics are computed from.
#[derive(Clone, Debug, Default)]
pub struct SecondaryRuns {
    pub chirp: Option<FrequencyResponse>,
    pub holds: Option<Vec<HoldRun>>,
    pub disturbance: Option<DisturbanceRun>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondaryMetrics {
    /// 1 / |S|_inf.
    pub robustness: f64,
    /// Mean over set points of the per-hold output standard deviation.
    pub noise: f64,
    /// Disturbance rejection duration [s].
    pub t_dist: f64,
    /// Peak deviation produced by the disturbance [deg].
    pub h_dist: f64,
}

/// Fraction of the set-point magnitude defining the return band.
const RETURN_BAND_FRACTION: f64 = 0.02;
/// Dwell required inside the band before the disturbance counts as rejected.
const RETURN_DWELL_S: f64 = 0.2;

pub fn secondary_metrics(runs: &SecondaryRuns) -> Result<SecondaryMetrics, CostError> {
    let chirp = runs.chirp.as_ref().ok_or(CostError::MissingRun("chirp"))?;
    let holds = runs
        .holds
        .as_ref()
        .ok_or(CostError::MissingRun("set-point holds"))?;
    let dist = runs
        .disturbance
        .as_ref()
        .ok_or(CostError::MissingRun("disturbance step"))?;

    let s_inf = chirp.s_mag.iter().copied().fold(0.0_f64, f64::max);
    let robustness = if s_inf > 0.0 { 1.0 / s_inf } else { f64::INFINITY };

    if holds.is_empty() {
        return Err(CostError::MissingRun("set-point holds"));
    }
    let noise = holds
        .iter()
        .map(|h| {
            // Standard deviation over the settled second half of the hold.
            let tail = &h.y[h.y.len() / 2..];
            let mean = tail.iter().sum::<f64>() / tail.len() as f64;
            (tail.iter().map(|&v| (v - mean).powi(2)).sum::<f64>() / tail.len() as f64).sqrt()
        })
        .sum::<f64>()
        / holds.len() as f64;

    let (t_dist, h_dist) = disturbance_metrics(dist)?;

    Ok(SecondaryMetrics {
        robustness,
        noise,
        t_dist,
        h_dist,
    })
}

fn disturbance_metrics(run: &DisturbanceRun) -> Result<(f64, f64), CostError> {
    run.traj.validate()?;
    let dt = super::SAMPLE_DT;
    let onset = (run.onset_s / dt).round() as usize;
    if onset >= run.traj.len() {
        return Err(CostError::InvalidSpec(
            "disturbance onset beyond the end of the record".into(),
        ));
    }
    let band = RETURN_BAND_FRACTION * run.setpoint.abs();
    let dwell = (RETURN_DWELL_S / dt).round() as usize;
    let dev: Vec<f64> = run.traj.y[onset..]
        .iter()
        .map(|&y| (y - run.setpoint).abs())
        .collect();

    let h_dist = dev.iter().copied().fold(0.0_f64, f64::max);

    // First instant from which the output stays inside the band for the
    // dwell time (and through the end of the record if shorter).
    let mut t_dist = (dev.len().saturating_sub(1)) as f64 * dt;
    let mut run_start: Option<usize> = None;
    for (i, &d) in dev.iter().enumerate() {
        if d <= band {
            let start = *run_start.get_or_insert(i);
            if i - start + 1 >= dwell.min(dev.len() - start) {
                t_dist = start as f64 * dt;
                break;
            }
        } else {
            run_start = None;
        }
    }
    Ok((t_dist, h_dist))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::ANALYSIS_BAND;
    use approx::assert_relative_eq;

    fn chirp_response(s_peak: f64) -> FrequencyResponse {
        FrequencyResponse {
            freqs: vec![1.0, 5.0, 10.0],
            s_mag: vec![0.3, s_peak, 0.8],
            t_mag: vec![1.0, 1.0, 0.9],
            band: ANALYSIS_BAND,
            dropped: vec![],
        }
    }

    fn flat_disturbance() -> DisturbanceRun {
        let n = 4000;
        let y = vec![30.0; n];
        let r = vec![30.0; n];
        DisturbanceRun {
            traj: Trajectory::from_ry(r, y).unwrap(),
            onset_s: 1.0,
            setpoint: 30.0,
        }
    }

    #[test]
    fn robustness_is_inverse_peak_sensitivity() {
        let runs = SecondaryRuns {
            chirp: Some(chirp_response(1.20)),
            holds: Some(vec![HoldRun {
                setpoint: 10.0,
                y: vec![10.0; 1000],
            }]),
            disturbance: Some(flat_disturbance()),
        };
        let m = secondary_metrics(&runs).unwrap();
        assert_relative_eq!(m.robustness, 1.0 / 1.2, epsilon = 1e-12);
        assert!((m.robustness - 0.83).abs() < 0.01);
    }

    #[test]
    fn perfect_holds_give_zero_noise_and_null_disturbance_metrics() {
        let holds: Vec<HoldRun> = (0..7)
            .map(|i| HoldRun {
                setpoint: 10.0 * i as f64,
                y: vec![10.0 * i as f64; 2000],
            })
            .collect();
        let runs = SecondaryRuns {
            chirp: Some(chirp_response(0.9)),
            holds: Some(holds),
            disturbance: Some(flat_disturbance()),
        };
        let m = secondary_metrics(&runs).unwrap();
        assert_relative_eq!(m.noise, 0.0);
        assert_relative_eq!(m.t_dist, 0.0);
        assert_relative_eq!(m.h_dist, 0.0);
    }

    #[test]
    fn disturbance_rejection_times_the_return_to_band() {
        // Deviation of 3 degrees from t = 1 s, returning at t = 1.5 s.
        let n = 4000;
        let mut y = vec![30.0; n];
        for (k, v) in y.iter_mut().enumerate().take(1500).skip(1000) {
            *v = 33.0 - 3.0 * (k - 1000) as f64 / 500.0;
        }
        let r = vec![30.0; n];
        let run = DisturbanceRun {
            traj: Trajectory::from_ry(r, y).unwrap(),
            onset_s: 1.0,
            setpoint: 30.0,
        };
        let (t_dist, h_dist) = disturbance_metrics(&run).unwrap();
        assert_relative_eq!(h_dist, 3.0);
        // Band is 0.6 deg: crossed when the ramp has recovered 2.4 of 3 deg.
        assert_relative_eq!(t_dist, 0.4, epsilon = 2e-3);
    }

    #[test]
    fn missing_runs_are_named() {
        let runs = SecondaryRuns::default();
        match secondary_metrics(&runs) {
            Err(CostError::MissingRun(name)) => assert_eq!(name, "chirp"),
            other => panic!("expected missing-run error, got {other:?}"),
        }
        let runs = SecondaryRuns {
            chirp: Some(chirp_response(1.0)),
            ..Default::default()
        };
        match secondary_metrics(&runs) {
            Err(CostError::MissingRun(name)) => assert_eq!(name, "set-point holds"),
            other => panic!("expected missing-run error, got {other:?}"),
        }
    }
}

//! Reference generation, zero-phase filtering, and the two cost functionals
//! with their constituent metrics.

mod filter;
mod heur;
mod reference;
mod secondary;
mod spectrum;

pub use filter::zero_phase_filter;
pub use heur::{aggregate_steps, j_heur, JHeurReport, StepMetrics};
pub use reference::{ChirpSpec, StepSeriesSpec, SweepLaw};
pub use secondary::{secondary_metrics, DisturbanceRun, HoldRun, SecondaryMetrics, SecondaryRuns};
pub use spectrum::{estimate_st, j_norm, FrequencyResponse, JNormReport};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fixed sample rate of the rig.
pub const SAMPLE_RATE_HZ: f64 = 1000.0;
/// Fixed sample period.
pub const SAMPLE_DT: f64 = 1.0e-3;
/// Frequency band retained for spectral estimates [Hz].
pub const ANALYSIS_BAND: (f64, f64) = (0.5, 28.0);

#[derive(Debug, Error)]
pub enum CostError {
    #[error("signal of {len} samples is too short; need more than {min}")]
    SignalTooShort { len: usize, min: usize },
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("no frequency bins remain in the analysis band")]
    EmptyBand,
    #[error("required experiment `{0}` is missing")]
    MissingRun(&'static str),
    #[error("trajectory arrays have inconsistent lengths")]
    LengthMismatch,
}

/// Uniformly sampled closed-loop record at 1 kHz: time, reference, measured
/// output, saturated input, disturbance, and the true plate angle.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub r: Vec<f64>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub d: Vec<f64>,
    pub x1: Vec<f64>,
}

impl Trajectory {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            t: Vec::with_capacity(n),
            r: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            u: Vec::with_capacity(n),
            d: Vec::with_capacity(n),
            x1: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn validate(&self) -> Result<(), CostError> {
        let n = self.t.len();
        if [&self.r, &self.y, &self.u, &self.d, &self.x1]
            .iter()
            .any(|v| v.len() != n)
        {
            return Err(CostError::LengthMismatch);
        }
        for w in self.t.windows(2) {
            if !((w[1] - w[0]) - SAMPLE_DT).abs().le(&1e-9) {
                return Err(CostError::InvalidSpec(format!(
                    "time grid step {} != {}",
                    w[1] - w[0],
                    SAMPLE_DT
                )));
            }
        }
        Ok(())
    }

    /// A trajectory from reference/output arrays alone (u, d, x1 zeroed),
    /// on the canonical 1 kHz grid. Used to evaluate metrics on synthetic
    /// signals.
    pub fn from_ry(r: Vec<f64>, y: Vec<f64>) -> Result<Self, CostError> {
        if r.len() != y.len() {
            return Err(CostError::LengthMismatch);
        }
        let n = r.len();
        Ok(Self {
            t: (0..n).map(|k| k as f64 * SAMPLE_DT).collect(),
            x1: y.clone(),
            u: vec![0.0; n],
            d: vec![0.0; n],
            r,
            y,
        })
    }

    /// Write as CSV with header `t,r,y,u,d,x1`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,r,y,u,d,x1")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                self.t[i], self.r[i], self.y[i], self.u[i], self.d[i], self.x1[i]
            )?;
        }
        Ok(())
    }

    /// Parse the CSV format written by [`Trajectory::write_csv`].
    pub fn read_csv<R: std::io::BufRead>(r: R) -> Result<Self, CostError> {
        let mut out = Self::default();
        for (idx, line) in r.lines().enumerate() {
            let line = line.map_err(|e| CostError::InvalidSpec(e.to_string()))?;
            if idx == 0 {
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CostError::InvalidSpec(format!("line {}: {e}", idx + 1)))?;
            if fields.len() != 6 {
                return Err(CostError::InvalidSpec(format!(
                    "line {}: expected 6 columns",
                    idx + 1
                )));
            }
            out.t.push(fields[0]);
            out.r.push(fields[1]);
            out.y.push(fields[2]);
            out.u.push(fields[3]);
            out.d.push(fields[4]);
            out.x1.push(fields[5]);
        }
        out.validate()?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip() {
        let traj = Trajectory::from_ry(vec![1.0, 2.0, 3.0], vec![0.5, 1.5, 2.5]).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let back = Trajectory::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(traj, back);
    }

    #[test]
    fn validate_catches_ragged_arrays() {
        let mut traj = Trajectory::from_ry(vec![0.0; 4], vec![0.0; 4]).unwrap();
        traj.u.pop();
        assert!(matches!(traj.validate(), Err(CostError::LengthMismatch)));
    }
}

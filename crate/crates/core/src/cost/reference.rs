//! Reference signals for the two experiment types: step series and chirps.

use serde::{Deserialize, Serialize};

use super::{CostError, SAMPLE_DT};

/// A series of set-point levels, each held for a fixed time. Step metrics are
/// computed on the transitions between consecutive levels; the first level is
/// the initial settling hold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSeriesSpec {
    /// Set-point levels [deg].
    pub levels: Vec<f64>,
    /// Hold time per level [s].
    pub hold_s: f64,
}

impl Default for StepSeriesSpec {
    fn default() -> Self {
        // Eight small steps of +-5 deg around 10 deg, then one large +50 deg step.
        Self {
            levels: vec![10.0, 15.0, 10.0, 15.0, 10.0, 15.0, 10.0, 15.0, 10.0, 60.0],
            hold_s: 2.0,
        }
    }
}

/// One reference transition within a step series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepEdge {
    pub index: usize,
    pub sample: usize,
    pub time: f64,
    pub from: f64,
    pub to: f64,
}

impl StepSeriesSpec {
    pub fn validate(&self) -> Result<(), CostError> {
        if self.levels.len() < 2 {
            return Err(CostError::InvalidSpec(
                "step series needs at least two levels".into(),
            ));
        }
        if !(self.hold_s >= 2.0) {
            return Err(CostError::InvalidSpec(format!(
                "hold time {} s below the 2 s minimum",
                self.hold_s
            )));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.levels.len() as f64 * self.hold_s
    }

    pub fn samples(&self) -> usize {
        (self.duration() / SAMPLE_DT).round() as usize
    }

    pub fn hold_samples(&self) -> usize {
        (self.hold_s / SAMPLE_DT).round() as usize
    }

    /// Sample-wise reference realization at 1 kHz.
    pub fn generate(&self) -> Vec<f64> {
        let hold = self.hold_samples();
        let n = self.samples();
        (0..n)
            .map(|k| self.levels[(k / hold).min(self.levels.len() - 1)])
            .collect()
    }

    /// The transitions between consecutive levels.
    pub fn edges(&self) -> Vec<StepEdge> {
        let hold = self.hold_samples();
        self.levels
            .windows(2)
            .enumerate()
            .map(|(i, w)| StepEdge {
                index: i,
                sample: (i + 1) * hold,
                time: (i + 1) as f64 * self.hold_s,
                from: w[0],
                to: w[1],
            })
            .collect()
    }
}

/// Frequency sweep law for the chirp reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepLaw {
    Logarithmic,
    Linear,
}

/// Sine sweep: amplitude around a center angle, instantaneous frequency
/// running from `f_lo` to `f_hi` over the duration. Phase is zero at t = 0,
/// so the reference starts on the center value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChirpSpec {
    pub f_lo: f64,
    pub f_hi: f64,
    pub amplitude: f64,
    pub center: f64,
    pub duration_s: f64,
    pub sweep: SweepLaw,
}

impl Default for ChirpSpec {
    fn default() -> Self {
        Self {
            f_lo: 0.1,
            f_hi: 30.0,
            amplitude: 20.0,
            center: 25.0,
            duration_s: 60.0,
            sweep: SweepLaw::Logarithmic,
        }
    }
}

impl ChirpSpec {
    pub fn validate(&self) -> Result<(), CostError> {
        if !(self.f_lo > 0.0 && self.f_lo < self.f_hi) {
            return Err(CostError::InvalidSpec(format!(
                "chirp frequencies must satisfy 0 < f_lo < f_hi, got [{}, {}]",
                self.f_lo, self.f_hi
            )));
        }
        if !(self.duration_s > 0.0) || !(self.amplitude > 0.0) {
            return Err(CostError::InvalidSpec(
                "chirp duration and amplitude must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn samples(&self) -> usize {
        (self.duration_s / SAMPLE_DT).round() as usize
    }

    /// Accumulated phase at time t; continuous in t by construction.
    pub fn phase(&self, t: f64) -> f64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        match self.sweep {
            SweepLaw::Logarithmic => {
                let k = self.f_hi / self.f_lo;
                let tau = self.duration_s / k.ln();
                two_pi * self.f_lo * tau * ((t / tau).exp() - 1.0)
            }
            SweepLaw::Linear => {
                two_pi
                    * (self.f_lo * t
                        + 0.5 * (self.f_hi - self.f_lo) * t * t / self.duration_s)
            }
        }
    }

    /// Instantaneous frequency at time t [Hz].
    pub fn instantaneous_freq(&self, t: f64) -> f64 {
        match self.sweep {
            SweepLaw::Logarithmic => {
                self.f_lo * (self.f_hi / self.f_lo).powf(t / self.duration_s)
            }
            SweepLaw::Linear => self.f_lo + (self.f_hi - self.f_lo) * t / self.duration_s,
        }
    }

    pub fn generate(&self) -> Vec<f64> {
        (0..self.samples())
            .map(|k| {
                let t = k as f64 * SAMPLE_DT;
                self.center + self.amplitude * self.phase(t).sin()
            })
            .collect()
    }
}

//! FFT-based estimates of the closed-loop sensitivity and transfer magnitudes
//! from a chirp run, and the system-norm cost functional built on them.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{ChirpSpec, CostError, Trajectory, ANALYSIS_BAND, SAMPLE_RATE_HZ};

/// Relative reference-magnitude threshold below which a bin is dropped.
const BIN_DROP_REL: f64 = 1e-6;

/// Magnitude estimates of S and T on the retained frequency bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyResponse {
    pub freqs: Vec<f64>,
    pub s_mag: Vec<f64>,
    pub t_mag: Vec<f64>,
    /// Analysis band [Hz].
    pub band: (f64, f64),
    /// Bins dropped for lack of reference energy.
    pub dropped: Vec<f64>,
}

impl FrequencyResponse {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "f_hz,s_mag,t_mag")?;
        for i in 0..self.freqs.len() {
            writeln!(w, "{},{},{}", self.freqs[i], self.s_mag[i], self.t_mag[i])?;
        }
        Ok(())
    }
}

fn fft_magnitudes(x: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Estimate |S| and |T| by dividing output and error spectra by the reference
/// spectrum, restricted to the analysis band. The means of r and y are
/// removed first; S comes from the recorded error signal r - y.
pub fn estimate_st(traj: &Trajectory, spec: &ChirpSpec) -> Result<FrequencyResponse, CostError> {
    spec.validate()?;
    traj.validate()?;
    let n = traj.len();
    if n < 16 {
        return Err(CostError::SignalTooShort { len: n, min: 16 });
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let rm = mean(&traj.r);
    let ym = mean(&traj.y);
    let r: Vec<f64> = traj.r.iter().map(|&v| v - rm).collect();
    let y: Vec<f64> = traj.y.iter().map(|&v| v - ym).collect();
    let e: Vec<f64> = r.iter().zip(&y).map(|(a, b)| a - b).collect();

    let rf = fft_magnitudes(&r);
    let yf = fft_magnitudes(&y);
    let ef = fft_magnitudes(&e);

    let df = SAMPLE_RATE_HZ / n as f64;
    let lo = (ANALYSIS_BAND.0 / df).ceil() as usize;
    let hi = ((ANALYSIS_BAND.1 / df).floor() as usize).min(n / 2);
    if lo > hi {
        return Err(CostError::EmptyBand);
    }

    let max_r = (lo..=hi).map(|i| rf[i].norm()).fold(0.0_f64, f64::max);
    if !(max_r > 0.0) {
        return Err(CostError::EmptyBand);
    }

    let mut out = FrequencyResponse {
        freqs: Vec::new(),
        s_mag: Vec::new(),
        t_mag: Vec::new(),
        band: ANALYSIS_BAND,
        dropped: Vec::new(),
    };
    for i in lo..=hi {
        let f = i as f64 * df;
        let rmag = rf[i].norm();
        if rmag < BIN_DROP_REL * max_r {
            out.dropped.push(f);
            continue;
        }
        out.freqs.push(f);
        out.t_mag.push(yf[i].norm() / rmag);
        out.s_mag.push(ef[i].norm() / rmag);
    }
    if out.freqs.is_empty() {
        return Err(CostError::EmptyBand);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JNormReport {
    pub j: f64,
    /// Peak sensitivity magnitude over the band.
    pub s_inf: f64,
    /// Band-averaged RMS of |T| (identity loop gives 1).
    pub t_two: f64,
    /// Lowest frequency where |S| first reaches 1/2; band upper edge if never.
    pub f_s: f64,
}

/// The system-norm functional J = (|S|_inf + |T|_2)/2 + exp(-f_s/2).
pub fn j_norm(fr: &FrequencyResponse) -> Result<JNormReport, CostError> {
    if fr.freqs.is_empty() {
        return Err(CostError::EmptyBand);
    }
    let s_inf = fr.s_mag.iter().copied().fold(0.0_f64, f64::max);
    let t_two =
        (fr.t_mag.iter().map(|&t| t * t).sum::<f64>() / fr.t_mag.len() as f64).sqrt();

    let f_s = if fr.s_mag[0] >= 0.5 {
        fr.freqs[0]
    } else {
        let mut crossing = None;
        for i in 1..fr.freqs.len() {
            if fr.s_mag[i] >= 0.5 {
                let (f0, f1) = (fr.freqs[i - 1], fr.freqs[i]);
                let (s0, s1) = (fr.s_mag[i - 1], fr.s_mag[i]);
                crossing = Some(f0 + (0.5 - s0) / (s1 - s0) * (f1 - f0));
                break;
            }
        }
        crossing.unwrap_or(fr.band.1)
    };

    Ok(JNormReport {
        j: 0.5 * (s_inf + t_two) + (-f_s / 2.0).exp(),
        s_inf,
        t_two,
        f_s,
    })
}

//! Zero-phase Butterworth filtering: a 3rd-order lowpass applied forward and
//! backward (net order 6, zero net phase), with odd-reflection edge padding
//! and steady-state initialization so DC passes exactly.

use super::CostError;

/// Digital 3rd-order Butterworth lowpass as a first-order section plus a
/// biquad, designed by bilinear transform with frequency prewarping.
struct Sections {
    // First-order: y = b0 x + s;  s' = b1 x - a1 y
    fo_b: [f64; 2],
    fo_a: f64,
    // Biquad (direct form II transposed)
    bq_b: [f64; 3],
    bq_a: [f64; 2],
}

fn design(cutoff_hz: f64, fs: f64) -> Sections {
    let k = 2.0 * fs;
    let w = k * (std::f64::consts::PI * cutoff_hz / fs).tan();

    // Real pole at -w: H1(s) = w / (s + w).
    let a0 = k + w;
    let fo_b = [w / a0, w / a0];
    let fo_a = (w - k) / a0;

    // Conjugate pair at w * exp(+-j 2pi/3): H2(s) = w^2 / (s^2 + w s + w^2).
    let a0 = k * k + w * k + w * w;
    let bq_b = [w * w / a0, 2.0 * w * w / a0, w * w / a0];
    let bq_a = [(2.0 * w * w - 2.0 * k * k) / a0, (k * k - w * k + w * w) / a0];

    Sections { fo_b, fo_a, bq_b, bq_a }
}

fn run_cascade(sections: &Sections, x: &[f64]) -> Vec<f64> {
    let x0 = x.first().copied().unwrap_or(0.0);
    // Steady-state initialization for a constant input x0 (both sections have
    // unit DC gain), so constants propagate without transient.
    let mut fo_s = (sections.fo_b[1] - sections.fo_a) * x0;
    let mut bq_s1 =
        (sections.bq_b[1] + sections.bq_b[2] - sections.bq_a[0] - sections.bq_a[1]) * x0;
    let mut bq_s2 = (sections.bq_b[2] - sections.bq_a[1]) * x0;

    let mut out = Vec::with_capacity(x.len());
    for &xi in x {
        let y1 = sections.fo_b[0] * xi + fo_s;
        fo_s = sections.fo_b[1] * xi - sections.fo_a * y1;

        let y2 = sections.bq_b[0] * y1 + bq_s1;
        bq_s1 = sections.bq_b[1] * y1 - sections.bq_a[0] * y2 + bq_s2;
        bq_s2 = sections.bq_b[2] * y1 - sections.bq_a[1] * y2;
        out.push(y2);
    }
    out
}

/// Forward-backward Butterworth lowpass (net order 6, zero net phase).
///
/// The signal is extended at both ends by odd reflection before filtering and
/// the extensions are discarded afterwards; output length equals input
/// length. Requires the signal to be longer than six filter settle lengths
/// (fs / cutoff samples each).
pub fn zero_phase_filter(x: &[f64], cutoff_hz: f64, fs: f64) -> Result<Vec<f64>, CostError> {
    if !(cutoff_hz > 0.0) || !(fs > 0.0) || cutoff_hz >= fs / 2.0 {
        return Err(CostError::InvalidSpec(format!(
            "cutoff {cutoff_hz} Hz must lie in (0, fs/2) for fs = {fs} Hz"
        )));
    }
    let settle = (fs / cutoff_hz).ceil() as usize;
    if x.len() <= 6 * settle {
        return Err(CostError::SignalTooShort {
            len: x.len(),
            min: 6 * settle,
        });
    }
    let pad = (3 * settle).min(x.len() - 1);

    let n = x.len();
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in 1..=pad {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }

    let sections = design(cutoff_hz, fs);
    let mut forward = run_cascade(&sections, &ext);
    forward.reverse();
    let mut backward = run_cascade(&sections, &forward);
    backward.reverse();

    Ok(backward[pad..pad + n].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: f64 = 1000.0;

    #[test]
    fn constant_signal_passes_unchanged() {
        let x = vec![3.7; 800];
        let y = zero_phase_filter(&x, 50.0, FS).unwrap();
        assert_eq!(y.len(), x.len());
        for v in y {
            assert!((v - 3.7).abs() < 1e-9, "DC distorted: {v}");
        }
    }

    #[test]
    fn in_band_sinusoid_keeps_amplitude_and_phase() {
        let f = 5.0;
        let n = 4000;
        let x: Vec<f64> = (0..n)
            .map(|k| (2.0 * std::f64::consts::PI * f * k as f64 / FS).sin())
            .collect();
        let y = zero_phase_filter(&x, 50.0, FS).unwrap();

        let amp = y
            .iter()
            .skip(500)
            .take(3000)
            .fold(0.0_f64, |m, &v| m.max(v.abs()));
        assert!((amp - 1.0).abs() < 0.01, "amplitude {amp}");

        // Cross-correlation peak must sit at lag zero.
        let xcorr = |lag: i64| -> f64 {
            let mut acc = 0.0;
            for i in 500..(n - 500) {
                let j = i as i64 + lag;
                acc += x[i] * y[j as usize];
            }
            acc
        };
        let at_zero = xcorr(0);
        for lag in [-3i64, -2, -1, 1, 2, 3] {
            assert!(
                xcorr(lag) < at_zero,
                "cross-correlation peak not at lag 0 (lag {lag})"
            );
        }
    }

    #[test]
    fn high_frequency_attenuation_follows_sixth_order_slope() {
        let fc = 20.0;
        for f in [100.0, 200.0, 300.0] {
            let n = 5000;
            let x: Vec<f64> = (0..n)
                .map(|k| (2.0 * std::f64::consts::PI * f * k as f64 / FS).sin())
                .collect();
            let y = zero_phase_filter(&x, fc, FS).unwrap();
            let amp = y
                .iter()
                .skip(1000)
                .take(3000)
                .fold(0.0_f64, |m, &v| m.max(v.abs()));
            // At least the asymptotic (f/fc)^6 attenuation, within 3 dB.
            let bound = (fc / f).powi(6) * 10.0_f64.powf(3.0 / 20.0);
            assert!(amp <= bound, "f = {f}: amplitude {amp} > bound {bound}");
        }
    }

    #[test]
    fn short_signals_are_rejected() {
        let x = vec![0.0; 50];
        assert!(matches!(
            zero_phase_filter(&x, 50.0, FS),
            Err(CostError::SignalTooShort { .. })
        ));
    }

    #[test]
    fn net_magnitude_is_squared_third_order() {
        // |H_filtfilt(f)| = |H3(f)|^2 = 1 / (1 + (tan(pi f/fs)/tan(pi fc/fs))^6).
        let fc = 50.0;
        let f = 50.0;
        let n = 6000;
        let x: Vec<f64> = (0..n)
            .map(|k| (2.0 * std::f64::consts::PI * f * k as f64 / FS).sin())
            .collect();
        let y = zero_phase_filter(&x, fc, FS).unwrap();
        let amp = y
            .iter()
            .skip(1000)
            .take(4000)
            .fold(0.0_f64, |m, &v| m.max(v.abs()));
        assert!((amp - 0.5).abs() < 0.01, "cutoff gain {amp}, expected 0.5");
    }
}

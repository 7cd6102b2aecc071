//! Deterministic throttle-valve simulation: switching spring, smoothed
//! Coulomb plus viscous friction, saturated input, hard stops, disturbance
//! injection, and sensor noise, integrated with fixed-step RK4 at 1 kHz.
//!
//! The controller runs in discrete time at the sample rate; the plant
//! integrates continuously within each sample (optionally with RK4 substeps).

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{Trajectory, SAMPLE_DT};
use crate::rng::stream_rng;

#[derive(Debug, Error)]
pub enum PlantError {
    #[error("invalid plant parameters: {0}")]
    InvalidParams(String),
    #[error("simulation diverged at t = {t} s")]
    Diverged { t: f64 },
    #[error("reference signal is empty")]
    EmptyReference,
}

/// Two-stiffness return spring with a limp-home rest angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpringParams {
    /// Stiffness below the switch angle [1/s^2].
    pub k_lo: f64,
    /// Stiffness at or above the switch angle [1/s^2].
    pub k_hi: f64,
    /// Rest (limp-home) angle [deg].
    pub theta_lh: f64,
    /// Stiffness switch angle [deg].
    pub theta_sw: f64,
}

/// Smoothed Coulomb friction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrictionParams {
    /// Coulomb level [deg/s^2].
    pub coulomb: f64,
    /// Velocity scale of the tanh smoothing [deg/s].
    pub v_eps: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantParams {
    /// Input gain [deg/(s^2 unit-input)].
    pub b: f64,
    /// Viscous coefficient [1/s] (negative: damping).
    pub c: f64,
    pub spring: SpringParams,
    pub friction: FrictionParams,
    /// Hard stops [deg].
    pub stops: (f64, f64),
}

impl Default for PlantParams {
    fn default() -> Self {
        // The input gain must dominate the spring over the whole stop range
        // (k_hi * (90 - 8) deg/s^2) or set points beyond the switch angle are
        // unreachable with |u| <= 1.
        Self {
            b: 150_000.0,
            c: -25.0,
            spring: SpringParams {
                k_lo: 400.0,
                k_hi: 1600.0,
                theta_lh: 8.0,
                theta_sw: 12.0,
            },
            friction: FrictionParams {
                coulomb: 50.0,
                v_eps: 1.0,
            },
            stops: (0.0, 90.0),
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<(), PlantError> {
        if !(self.spring.k_lo > 0.0 && self.spring.k_hi > 0.0) {
            return Err(PlantError::InvalidParams("spring stiffness must be positive".into()));
        }
        if !(self.stops.0 < self.spring.theta_lh && self.spring.theta_lh < self.stops.1) {
            return Err(PlantError::InvalidParams(
                "limp-home angle must lie strictly between the stops".into(),
            ));
        }
        if !(self.friction.v_eps > 0.0) {
            return Err(PlantError::InvalidParams("v_eps must be positive".into()));
        }
        if self.b == 0.0 {
            return Err(PlantError::InvalidParams("input gain b must be nonzero".into()));
        }
        Ok(())
    }
}

/// Plate angle and angular velocity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub x1: f64,
    pub x2: f64,
}

/// Piecewise-constant disturbance d(t) [deg/s^2]: the value of the last step
/// at or before t, zero before the first step.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub steps: Vec<(f64, f64)>,
}

impl Disturbance {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn step(onset_s: f64, value: f64) -> Self {
        Self {
            steps: vec![(onset_s, value)],
        }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.steps
            .iter()
            .rev()
            .find(|(t0, _)| t >= *t0)
            .map_or(0.0, |(_, v)| *v)
    }
}

/// Simulation setup. The sampling period is fixed at 1 ms; `substeps`
/// subdivides the continuous integration within each sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub duration_s: f64,
    pub disturbance: Disturbance,
    /// Sensor noise standard deviation [deg].
    pub noise_std: f64,
    pub seed: u64,
    pub substeps: usize,
    /// Initial state; rest at the limp-home angle when absent.
    pub initial: Option<PlantState>,
}

impl SimSpec {
    pub fn new(duration_s: f64, seed: u64) -> Self {
        Self {
            duration_s,
            disturbance: Disturbance::none(),
            noise_std: 0.05,
            seed,
            substeps: 1,
            initial: None,
        }
    }

    pub fn noise_free(mut self) -> Self {
        self.noise_std = 0.0;
        self
    }
}

/// One discrete-time control step from measurement and reference to the
/// (unsaturated) actuator command.
pub trait ControlLaw {
    fn control(&mut self, y: f64, r: f64) -> f64;
}

impl<F: FnMut(f64, f64) -> f64> ControlLaw for F {
    fn control(&mut self, y: f64, r: f64) -> f64 {
        self(y, r)
    }
}

/// State derivative of the valve dynamics under a saturated input.
/// The spring force is -k(x1) (x1 - theta_lh) with the stiffness switching at
/// theta_sw; friction is -F_c tanh(x2 / v_eps).
pub fn dynamics(s: &PlantState, u: f64, d: f64, p: &PlantParams) -> (f64, f64) {
    debug_assert!((-1.0..=1.0).contains(&u) || u.is_nan());
    let k = if s.x1 < p.spring.theta_sw {
        p.spring.k_lo
    } else {
        p.spring.k_hi
    };
    let spring = -k * (s.x1 - p.spring.theta_lh);
    let friction = -p.friction.coulomb * (s.x2 / p.friction.v_eps).tanh();
    (s.x2, spring + p.c * s.x2 + friction + p.b * u + d)
}

fn rk4_step(s: &PlantState, u: f64, d: f64, p: &PlantParams, h: f64) -> PlantState {
    let f = |st: &PlantState| dynamics(st, u, d, p);
    let k1 = f(s);
    let k2 = f(&PlantState {
        x1: s.x1 + 0.5 * h * k1.0,
        x2: s.x2 + 0.5 * h * k1.1,
    });
    let k3 = f(&PlantState {
        x1: s.x1 + 0.5 * h * k2.0,
        x2: s.x2 + 0.5 * h * k2.1,
    });
    let k4 = f(&PlantState {
        x1: s.x1 + h * k3.0,
        x2: s.x2 + h * k3.1,
    });
    PlantState {
        x1: s.x1 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        x2: s.x2 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    }
}

fn project_stops(s: &mut PlantState, stops: (f64, f64)) {
    if s.x1 <= stops.0 {
        s.x1 = stops.0;
        if s.x2 < 0.0 {
            s.x2 = 0.0;
        }
    } else if s.x1 >= stops.1 {
        s.x1 = stops.1;
        if s.x2 > 0.0 {
            s.x2 = 0.0;
        }
    }
}

/// Closed-loop simulation: zero-order-hold control updated once per sample
/// from the noisy measurement, RK4 integration in between, state projected to
/// the hard stops. Records one row per sample. Deterministic for fixed seed.
pub fn simulate(
    params: &PlantParams,
    controller: &mut dyn ControlLaw,
    reference: &[f64],
    spec: &SimSpec,
) -> Result<Trajectory, PlantError> {
    params.validate()?;
    if reference.is_empty() {
        return Err(PlantError::EmptyReference);
    }
    let n = ((spec.duration_s / SAMPLE_DT).round() as usize).min(reference.len());
    let substeps = spec.substeps.max(1);
    let h = SAMPLE_DT / substeps as f64;

    let mut state = spec.initial.unwrap_or(PlantState {
        x1: params.spring.theta_lh,
        x2: 0.0,
    });
    let mut rng = stream_rng(spec.seed, "plant-noise", 0);
    let mut traj = Trajectory::with_capacity(n);

    for k in 0..n {
        let t = k as f64 * SAMPLE_DT;
        let noise: f64 = if spec.noise_std > 0.0 {
            spec.noise_std * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        let y = state.x1 + noise;
        let r = reference[k];
        let u = controller.control(y, r).clamp(-1.0, 1.0);
        let d = spec.disturbance.value_at(t);

        traj.t.push(t);
        traj.r.push(r);
        traj.y.push(y);
        traj.u.push(u);
        traj.d.push(d);
        traj.x1.push(state.x1);

        for _ in 0..substeps {
            state = rk4_step(&state, u, d, params, h);
            project_stops(&mut state, params.stops);
        }
        if !state.x1.is_finite() || !state.x2.is_finite() {
            return Err(PlantError::Diverged { t: t + SAMPLE_DT });
        }
    }
    Ok(traj)
}

//! Tuning domain: the four controller parameters, their safety bounds, the
//! engineering-to-pole reparameterization, and normalized-cube encoding.
//!
//! The search operates on the unit cube; engineering units are SI seconds for
//! the settling specifiers and 1/s for the nominal poles. Pole dimensions span
//! decades, so they are encoded through the log of their magnitude.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::stream_rng;

/// Time constant convention: a pole p corresponds to the time at which its
/// mode e^{p t} has decayed to e^{-6}, i.e. p = -6 / T.
pub const DECAY_EXPONENT: f64 = 6.0;

#[derive(Debug, Error, PartialEq)]
pub enum ParamSpaceError {
    #[error("parameter `{dim}` = {value} outside bounds [{lower}, {upper}]")]
    OutOfBounds {
        dim: String,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("bounds for `{dim}` invalid: lower {lower} must be < upper {upper}")]
    InvalidBounds { dim: String, lower: f64, upper: f64 },
    #[error("log-magnitude bounds for `{dim}` must be nonzero and of one sign")]
    InvalidLogRange { dim: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sample count must be at least 1")]
    EmptySample,
}

/// The tuning point in engineering units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    /// Nominal closed-loop settling specifier [s].
    pub t_set: f64,
    /// Observer settling specifier [s].
    pub t_obs: f64,
    /// Slow nominal pole [1/s], negative real.
    pub p1: f64,
    /// Fast nominal pole [1/s], negative real.
    pub p2: f64,
}

impl ParamVector {
    pub fn new(t_set: f64, t_obs: f64, p1: f64, p2: f64) -> Self {
        Self { t_set, t_obs, p1, p2 }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.t_set, self.t_obs, self.p1, self.p2]
    }

    pub fn from_slice(v: &[f64]) -> Result<Self, ParamSpaceError> {
        if v.len() != 4 {
            return Err(ParamSpaceError::DimensionMismatch {
                expected: 4,
                got: v.len(),
            });
        }
        Ok(Self::new(v[0], v[1], v[2], v[3]))
    }

    /// Map the point to controller/observer poles and nominal dynamics
    /// coefficients, rejecting out-of-bounds inputs.
    pub fn to_pole_spec(&self, bounds: &Bounds) -> Result<PoleSpec, ParamSpaceError> {
        bounds.check(&self.as_array())?;
        Ok(PoleSpec {
            p_ctr: -DECAY_EXPONENT / self.t_set,
            p_obs: -DECAY_EXPONENT / self.t_obs,
            a1: -self.p1 * self.p2,
            a2: self.p1 + self.p2,
        })
    }
}

/// Placed poles and nominal dynamics coefficients derived from a
/// [`ParamVector`]. The nominal second-order dynamics are
/// x2' = a1 x1 + a2 x2 + b u, whose characteristic polynomial
/// s^2 - a2 s - a1 has roots p1 and p2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleSpec {
    /// Double controller pole [1/s].
    pub p_ctr: f64,
    /// Triple observer pole [1/s].
    pub p_obs: f64,
    /// [1/s^2]
    pub a1: f64,
    /// [1/s]
    pub a2: f64,
}

/// Search-space encoding of one dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    Linear,
    /// Affine in the logarithm of the magnitude; for ranges spanning decades.
    LogMagnitude,
}

/// Per-dimension bounds and encoding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimSpec {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub scale: Scale,
}

impl DimSpec {
    pub fn linear(name: &str, lower: f64, upper: f64) -> Self {
        Self {
            name: name.to_string(),
            lower,
            upper,
            scale: Scale::Linear,
        }
    }

    pub fn log_magnitude(name: &str, lower: f64, upper: f64) -> Self {
        Self {
            name: name.to_string(),
            lower,
            upper,
            scale: Scale::LogMagnitude,
        }
    }

    pub fn validate(&self) -> Result<(), ParamSpaceError> {
        if !(self.lower < self.upper) {
            return Err(ParamSpaceError::InvalidBounds {
                dim: self.name.clone(),
                lower: self.lower,
                upper: self.upper,
            });
        }
        if self.scale == Scale::LogMagnitude
            && (self.lower == 0.0 || self.upper == 0.0 || self.lower.signum() != self.upper.signum())
        {
            return Err(ParamSpaceError::InvalidLogRange {
                dim: self.name.clone(),
            });
        }
        Ok(())
    }

    pub fn span(&self) -> f64 {
        self.upper - self.lower
    }

    fn contains(&self, value: f64) -> bool {
        value >= self.lower && value <= self.upper
    }

    fn encode_value(&self, value: f64) -> f64 {
        match self.scale {
            Scale::Linear => (value - self.lower) / (self.upper - self.lower),
            Scale::LogMagnitude => {
                let (llo, lup) = (self.lower.abs().ln(), self.upper.abs().ln());
                (llo - value.abs().ln()) / (llo - lup)
            }
        }
    }

    fn decode_value(&self, u: f64) -> f64 {
        let value = match self.scale {
            Scale::Linear => self.lower + u * (self.upper - self.lower),
            Scale::LogMagnitude => {
                let (llo, lup) = (self.lower.abs().ln(), self.upper.abs().ln());
                let mag = (llo - u * (llo - lup)).exp();
                mag.copysign(self.lower)
            }
        };
        // exp/ln rounding can land an epsilon outside the interval.
        value.clamp(self.lower, self.upper)
    }
}

/// The box-constrained search domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub dims: Vec<DimSpec>,
}

impl Bounds {
    pub fn new(dims: Vec<DimSpec>) -> Result<Self, ParamSpaceError> {
        for d in &dims {
            d.validate()?;
        }
        Ok(Self { dims })
    }

    /// The throttle-valve safety box: settling times in seconds, one slow and
    /// one fast stable pole searched in log-magnitude space.
    pub fn valve_default() -> Self {
        Self {
            dims: vec![
                DimSpec::linear("t_set", 0.060, 0.200),
                DimSpec::linear("t_obs", 0.010, 0.040),
                DimSpec::log_magnitude("p1", -std::f64::consts::E.powi(2), -(-1.0_f64).exp()),
                DimSpec::log_magnitude("p2", -std::f64::consts::E.powi(5), -std::f64::consts::E.powi(2)),
            ],
        }
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn validate(&self) -> Result<(), ParamSpaceError> {
        for d in &self.dims {
            d.validate()?;
        }
        Ok(())
    }

    /// Verify every coordinate lies within its dimension's interval.
    pub fn check(&self, point: &[f64]) -> Result<(), ParamSpaceError> {
        if point.len() != self.dims.len() {
            return Err(ParamSpaceError::DimensionMismatch {
                expected: self.dims.len(),
                got: point.len(),
            });
        }
        for (d, &v) in self.dims.iter().zip(point) {
            if !d.contains(v) {
                return Err(ParamSpaceError::OutOfBounds {
                    dim: d.name.clone(),
                    value: v,
                    lower: d.lower,
                    upper: d.upper,
                });
            }
        }
        Ok(())
    }

    /// Map an engineering-unit point to the unit cube.
    pub fn encode_point(&self, point: &[f64]) -> Result<Vec<f64>, ParamSpaceError> {
        self.check(point)?;
        Ok(self
            .dims
            .iter()
            .zip(point)
            .map(|(d, &v)| d.encode_value(v).clamp(0.0, 1.0))
            .collect())
    }

    /// Inverse of [`Bounds::encode_point`] on the unit cube.
    pub fn decode_point(&self, u: &[f64]) -> Result<Vec<f64>, ParamSpaceError> {
        if u.len() != self.dims.len() {
            return Err(ParamSpaceError::DimensionMismatch {
                expected: self.dims.len(),
                got: u.len(),
            });
        }
        Ok(self
            .dims
            .iter()
            .zip(u)
            .map(|(d, &v)| d.decode_value(v.clamp(0.0, 1.0)))
            .collect())
    }

    /// Per-dimension engineering span, used to convert configured
    /// lengthscales into encoded-cube units.
    pub fn spans(&self) -> Vec<f64> {
        self.dims.iter().map(DimSpec::span).collect()
    }
}

/// Encode a parameter vector into the unit cube.
pub fn encode(theta: &ParamVector, bounds: &Bounds) -> Result<Vec<f64>, ParamSpaceError> {
    bounds.encode_point(&theta.as_array())
}

/// Decode a unit-cube point back to engineering units.
pub fn decode(u: &[f64], bounds: &Bounds) -> Result<ParamVector, ParamSpaceError> {
    ParamVector::from_slice(&bounds.decode_point(u)?)
}

/// Draw `n` points uniformly over the encoded cube and decode them.
/// Deterministic for a fixed seed.
pub fn sample_uniform_points(
    bounds: &Bounds,
    n: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, ParamSpaceError> {
    if n == 0 {
        return Err(ParamSpaceError::EmptySample);
    }
    bounds.validate()?;
    let mut rng = stream_rng(seed, "paramspace-uniform", 0);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u: Vec<f64> = (0..bounds.dim()).map(|_| rng.random::<f64>()).collect();
        out.push(bounds.decode_point(&u)?);
    }
    Ok(out)
}

/// Typed variant of [`sample_uniform_points`] for the 4-D valve domain.
pub fn sample_uniform(
    bounds: &Bounds,
    n: usize,
    seed: u64,
) -> Result<Vec<ParamVector>, ParamSpaceError> {
    sample_uniform_points(bounds, n, seed)?
        .iter()
        .map(|p| ParamVector::from_slice(p))
        .collect()
}

//! ARD covariance functions over the encoded domain.

use serde::{Deserialize, Serialize};

use super::GpError;

/// Supported stationary kernel families. All use per-dimension (ARD)
/// lengthscales through the weighted distance
/// r^2 = sum_i ((x_i - x'_i) / l_i)^2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    SquaredExponentialArd,
    RationalQuadraticArd,
    Matern52Ard,
    GammaExponentialArd,
}

impl KernelFamily {
    pub fn needs_alpha(self) -> bool {
        self == KernelFamily::RationalQuadraticArd
    }

    pub fn needs_gamma(self) -> bool {
        self == KernelFamily::GammaExponentialArd
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// Per-dimension positive lengthscales in encoded-cube units.
    pub lengthscales: Vec<f64>,
    /// Prior process standard deviation.
    pub signal_std: f64,
    /// Rational-quadratic shape parameter; present only for that family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Gamma-exponential exponent in (0, 2]; present only for that family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl KernelSpec {
    pub fn squared_exponential(lengthscales: Vec<f64>, signal_std: f64) -> Self {
        Self {
            family: KernelFamily::SquaredExponentialArd,
            lengthscales,
            signal_std,
            alpha: None,
            gamma: None,
        }
    }

    pub fn rational_quadratic(lengthscales: Vec<f64>, signal_std: f64, alpha: f64) -> Self {
        Self {
            family: KernelFamily::RationalQuadraticArd,
            lengthscales,
            signal_std,
            alpha: Some(alpha),
            gamma: None,
        }
    }

    pub fn matern52(lengthscales: Vec<f64>, signal_std: f64) -> Self {
        Self {
            family: KernelFamily::Matern52Ard,
            lengthscales,
            signal_std,
            alpha: None,
            gamma: None,
        }
    }

    pub fn gamma_exponential(lengthscales: Vec<f64>, signal_std: f64, gamma: f64) -> Self {
        Self {
            family: KernelFamily::GammaExponentialArd,
            lengthscales,
            signal_std,
            alpha: None,
            gamma: Some(gamma),
        }
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn validate(&self) -> Result<(), GpError> {
        if self.lengthscales.is_empty() || self.lengthscales.iter().any(|&l| !(l > 0.0)) {
            return Err(GpError::InvalidHyper(
                "lengthscales must be positive".into(),
            ));
        }
        if !(self.signal_std > 0.0) {
            return Err(GpError::InvalidHyper("signal_std must be positive".into()));
        }
        match (self.family.needs_alpha(), self.alpha) {
            (true, Some(a)) if a > 0.0 => {}
            (true, _) => {
                return Err(GpError::InvalidHyper(
                    "rational-quadratic kernel requires positive alpha".into(),
                ))
            }
            (false, Some(_)) => {
                return Err(GpError::InvalidHyper(
                    "alpha is only valid for the rational-quadratic family".into(),
                ))
            }
            (false, None) => {}
        }
        match (self.family.needs_gamma(), self.gamma) {
            (true, Some(g)) if g > 0.0 && g <= 2.0 => {}
            (true, _) => {
                return Err(GpError::InvalidHyper(
                    "gamma-exponential kernel requires gamma in (0, 2]".into(),
                ))
            }
            (false, Some(_)) => {
                return Err(GpError::InvalidHyper(
                    "gamma is only valid for the gamma-exponential family".into(),
                ))
            }
            (false, None) => {}
        }
        Ok(())
    }

    /// Covariance between two encoded points.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, GpError> {
        if x.len() != self.dim() || y.len() != self.dim() {
            return Err(GpError::DimensionMismatch {
                expected: self.dim(),
                got: if x.len() != self.dim() { x.len() } else { y.len() },
            });
        }
        Ok(self.eval_unchecked(x, y))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let r2: f64 = x
            .iter()
            .zip(y)
            .zip(&self.lengthscales)
            .map(|((a, b), l)| {
                let d = (a - b) / l;
                d * d
            })
            .sum();
        let s2 = self.signal_std * self.signal_std;
        match self.family {
            KernelFamily::SquaredExponentialArd => s2 * (-0.5 * r2).exp(),
            KernelFamily::RationalQuadraticArd => {
                let a = self.alpha.expect("validated");
                s2 * (1.0 + r2 / (2.0 * a)).powf(-a)
            }
            KernelFamily::Matern52Ard => {
                let r = r2.sqrt();
                let sq5 = 5.0_f64.sqrt();
                s2 * (1.0 + sq5 * r + 5.0 * r2 / 3.0) * (-sq5 * r).exp()
            }
            KernelFamily::GammaExponentialArd => {
                let g = self.gamma.expect("validated");
                s2 * (-r2.sqrt().powf(g)).exp()
            }
        }
    }
}

/// Covariance between two encoded points, validating dimensions.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64, GpError> {
    spec.validate()?;
    spec.eval(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn families(dim: usize) -> Vec<KernelSpec> {
        vec![
            KernelSpec::squared_exponential(vec![1.0; dim], 1.3),
            KernelSpec::rational_quadratic(vec![1.0; dim], 1.3, 0.7),
            KernelSpec::matern52(vec![1.0; dim], 1.3),
            KernelSpec::gamma_exponential(vec![1.0; dim], 1.3, 1.5),
        ]
    }

    #[test]
    fn zero_distance_gives_signal_variance() {
        let x = [0.2, 0.8, 0.5];
        for k in families(3) {
            assert_relative_eq!(
                kernel_eval(&k, &x, &x).unwrap(),
                1.3 * 1.3,
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn kernels_are_symmetric() {
        let x = [0.1, 0.9];
        let y = [0.7, 0.3];
        for k in families(2) {
            assert_relative_eq!(
                kernel_eval(&k, &x, &y).unwrap(),
                kernel_eval(&k, &y, &x).unwrap(),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn se_at_unit_distance() {
        let k = KernelSpec::squared_exponential(vec![1.0, 1.0], 1.0);
        let v = kernel_eval(&k, &[0.0, 0.0], &[0.6, 0.8]).unwrap();
        assert_relative_eq!(v, (-0.5_f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn rq_converges_to_se_for_large_alpha() {
        let se = KernelSpec::squared_exponential(vec![1.0], 1.0);
        let rq = KernelSpec::rational_quadratic(vec![1.0], 1.0, 1.0e4);
        for d in [0.1, 0.5, 1.0, 2.0] {
            let a = kernel_eval(&se, &[0.0], &[d]).unwrap();
            let b = kernel_eval(&rq, &[0.0], &[d]).unwrap();
            assert!((a - b).abs() < 1e-3, "distance {d}: {a} vs {b}");
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let k = KernelSpec::matern52(vec![1.0, 1.0], 1.0);
        assert!(matches!(
            kernel_eval(&k, &[0.0], &[0.0, 0.0]),
            Err(GpError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let mut k = KernelSpec::squared_exponential(vec![1.0], 1.0);
        k.alpha = Some(0.3);
        assert!(k.validate().is_err());
        let k = KernelSpec::gamma_exponential(vec![1.0], 1.0, 2.5);
        assert!(k.validate().is_err());
        let k = KernelSpec::rational_quadratic(vec![-1.0], 1.0, 0.3);
        assert!(k.validate().is_err());
    }
}

//! Central finite differences.

use nalgebra::DVector;

/// Environment variable overriding the default step.
pub const STEP_ENV: &str = "GMTK_FD_STEP";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdConfig {
    pub step: f64,
    /// One level of Richardson extrapolation on every central difference.
    pub richardson: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            richardson: false,
        }
    }
}

impl FdConfig {
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            ..Self::default()
        }
    }

    /// Default config with the step taken from `GMTK_FD_STEP` when it parses
    /// to a positive finite number.
    pub fn from_env() -> Self {
        let step = std::env::var(STEP_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|h| h.is_finite() && *h > 0.0);
        match step {
            Some(step) => Self::with_step(step),
            None => Self::default(),
        }
    }

    /// Step for differences of quantities that are themselves differenced.
    pub fn outer_step(&self) -> f64 {
        (self.step * 10.0).min(1e-2)
    }

    /// d/dt f(t) at 0.
    pub fn derivative(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.derivative_with(self.step, f)
    }

    pub fn derivative_with(&self, h: f64, f: impl Fn(f64) -> f64) -> f64 {
        let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
        if self.richardson {
            (4.0 * d(h / 2.0) - d(h)) / 3.0
        } else {
            d(h)
        }
    }

    /// d/dt F(t) at 0 for a vector-valued F.
    pub fn derivative_vec(&self, h: f64, f: impl Fn(f64) -> DVector<f64>) -> DVector<f64> {
        let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
        if self.richardson {
            (d(h / 2.0) * 4.0 - d(h)) / 3.0
        } else {
            d(h)
        }
    }

    /// Gradient of a function on R^n.
    pub fn gradient(&self, x: &DVector<f64>, f: impl Fn(&DVector<f64>) -> f64) -> DVector<f64> {
        DVector::from_fn(x.len(), |i, _| {
            self.derivative(|t| {
                let mut y = x.clone();
                y[i] += t;
                f(&y)
            })
        })
    }

    /// Jacobian of a map R^n -> R^m, columns are partial derivatives.
    pub fn jacobian(
        &self,
        h: f64,
        x: &DVector<f64>,
        f: impl Fn(&DVector<f64>) -> DVector<f64>,
    ) -> nalgebra::DMatrix<f64> {
        let cols: Vec<DVector<f64>> = (0..x.len())
            .map(|j| {
                self.derivative_vec(h, |t| {
                    let mut y = x.clone();
                    y[j] += t;
                    f(&y)
                })
            })
            .collect();
        nalgebra::DMatrix::from_columns(&cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_cubic() {
        let fd = FdConfig::default();
        let d = fd.derivative(|t| (1.0 + t).powi(3));
        assert!((d - 3.0).abs() < 1e-9);
        let r = FdConfig {
            richardson: true,
            ..fd
        };
        assert!((r.derivative(|t| (1.0 + t).powi(3)) - 3.0).abs() < 1e-10);
    }

    #[test]
    fn gradient_of_quadratic() {
        let fd = FdConfig::default();
        let x = DVector::from_vec(vec![1.0, -2.0]);
        let g = fd.gradient(&x, |y| y[0] * y[0] + 3.0 * y[0] * y[1]);
        assert!((g[0] - (2.0 - 6.0)).abs() < 1e-9);
        assert!((g[1] - 3.0).abs() < 1e-9);
    }
}

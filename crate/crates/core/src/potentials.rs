//! Target distributions `π(x) ∝ exp(−f(x))` and the thin-tailed test potentials.
//!
//! A [`Potential`] carries the potential `f`, its gradient, the location of
//! its minimizer and the class constants `(α, γ, m, K1, K2)` that the step-size
//! schedules and the feasible start consume. Constants are declared, not
//! derived; [`Potential::check_growth_constants`] can verify the gradient bound
//! empirically.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::linalg::{dist, dot, norm, norm_sq};
use crate::rng::{stream_rng, uniform_in_ball};

/// Class constants of a target in `E(α, γ, m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassConstants {
    /// Tail exponent, `‖∇f(x)‖ ≲ ‖x − x*‖^{α−1}`.
    pub alpha: f64,
    /// Concentration exponent: mass `1 − s` sits in a ball of radius `τ(s)·d^{1/γ}`.
    pub gamma: f64,
    /// Strong-convexity constant.
    pub m: f64,
    /// Gradient growth constant.
    pub k1: f64,
    /// Hessian growth constant.
    pub k2: f64,
}

impl ClassConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 2.0) {
            return Err(invalid(
                "alpha",
                format!("must be >= 2, got {}", self.alpha),
            ));
        }
        if !(self.gamma >= 2.0) {
            return Err(invalid(
                "gamma",
                format!("must be >= 2, got {}", self.gamma),
            ));
        }
        for (name, v) in [("m", self.m), ("k1", self.k1), ("k2", self.k2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(
                    name,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        Ok(())
    }
}

/// The built-in targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetKind {
    /// `f(x) = ‖x‖⁴/4 + a‖x‖²/2`.
    Pi1 { a: f64 },
    /// `f(x) = ‖x‖⁴/4 + x₁²/2`.
    Pi2,
    /// `f(x) = ‖x‖^α`.
    RadialAlpha { alpha: f64 },
    /// `f(x) = m‖x‖²/2`.
    Gaussian { m: f64 },
}

impl TargetKind {
    pub fn name(&self) -> &'static str {
        match self {
            TargetKind::Pi1 { .. } => "pi1",
            TargetKind::Pi2 => "pi2",
            TargetKind::RadialAlpha { .. } => "radial",
            TargetKind::Gaussian { .. } => "gaussian",
        }
    }

    /// Declared class constants for this target.
    pub fn default_constants(&self) -> ClassConstants {
        match *self {
            TargetKind::Pi1 { a } => ClassConstants {
                alpha: 4.0,
                gamma: 4.0,
                m: a,
                k1: 3.0 + a,
                k2: 3.0 + a,
            },
            // Not strongly convex along x₂..x_d near the origin; m is nominal.
            TargetKind::Pi2 => ClassConstants {
                alpha: 4.0,
                gamma: 4.0,
                m: 1.0,
                k1: 4.0,
                k2: 4.0,
            },
            TargetKind::RadialAlpha { alpha } => ClassConstants {
                alpha,
                gamma: alpha,
                m: if alpha == 2.0 { 2.0 } else { 1.0 },
                k1: alpha,
                k2: alpha * (alpha - 1.0),
            },
            TargetKind::Gaussian { m } => ClassConstants {
                alpha: 2.0,
                gamma: 2.0,
                m,
                k1: m,
                k2: m,
            },
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            TargetKind::Pi1 { a } if !(a > 0.0 && a.is_finite()) => {
                Err(invalid("a", format!("must be positive, got {a}")))
            }
            TargetKind::RadialAlpha { alpha } if !(alpha >= 2.0 && alpha.is_finite()) => {
                Err(invalid("alpha", format!("must be >= 2, got {alpha}")))
            }
            TargetKind::Gaussian { m } if !(m > 0.0 && m.is_finite()) => {
                Err(invalid("m", format!("must be positive, got {m}")))
            }
            _ => Ok(()),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match *self {
            TargetKind::Pi1 { a } => {
                let r2 = norm_sq(x);
                0.25 * r2 * r2 + 0.5 * a * r2
            }
            TargetKind::Pi2 => {
                let r2 = norm_sq(x);
                0.25 * r2 * r2 + 0.5 * x[0] * x[0]
            }
            TargetKind::RadialAlpha { alpha } => norm(x).powf(alpha),
            TargetKind::Gaussian { m } => 0.5 * m * norm_sq(x),
        }
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match *self {
            TargetKind::Pi1 { a } => {
                let s = norm_sq(x) + a;
                out.iter_mut().zip(x).for_each(|(g, xi)| *g = s * xi);
            }
            TargetKind::Pi2 => {
                let s = norm_sq(x);
                out.iter_mut().zip(x).for_each(|(g, xi)| *g = s * xi);
                out[0] += x[0];
            }
            TargetKind::RadialAlpha { alpha } => {
                let s = alpha * norm(x).powf(alpha - 2.0);
                out.iter_mut().zip(x).for_each(|(g, xi)| *g = s * xi);
            }
            TargetKind::Gaussian { m } => {
                out.iter_mut().zip(x).for_each(|(g, xi)| *g = m * xi);
            }
        }
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

#[derive(Clone)]
enum Density {
    Builtin(TargetKind),
    Custom {
        name: String,
        value: Arc<ValueFn>,
        gradient: Arc<GradientFn>,
    },
}

/// An immutable target distribution; cheap to clone and share across chains.
#[derive(Clone)]
pub struct Potential {
    dim: usize,
    density: Density,
    mode: Vec<f64>,
    constants: ClassConstants,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("name", &self.name())
            .field("dim", &self.dim)
            .field("constants", &self.constants)
            .finish()
    }
}

impl Potential {
    /// A built-in target in `dim` dimensions with its declared constants.
    pub fn builtin(kind: TargetKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be positive"));
        }
        kind.validate()?;
        let potential = Potential {
            dim,
            density: Density::Builtin(kind),
            mode: vec![0.0; dim],
            constants: kind.default_constants(),
        };
        debug_assert!(
            potential.check_growth_constants(256, 3.0, 0).ok,
            "declared K1 violated for {kind:?}"
        );
        Ok(potential)
    }

    pub fn pi1(a: f64, dim: usize) -> Result<Self> {
        Self::builtin(TargetKind::Pi1 { a }, dim)
    }

    pub fn pi2(dim: usize) -> Result<Self> {
        Self::builtin(TargetKind::Pi2, dim)
    }

    pub fn radial(alpha: f64, dim: usize) -> Result<Self> {
        Self::builtin(TargetKind::RadialAlpha { alpha }, dim)
    }

    pub fn gaussian(m: f64, dim: usize) -> Result<Self> {
        Self::builtin(TargetKind::Gaussian { m }, dim)
    }

    /// A user-defined target from a potential/gradient pair.
    ///
    /// The gradient callback writes `∇f(x)` into its second argument. Declared
    /// constants are trusted; run [`Potential::check_growth_constants`] to
    /// spot-check them.
    pub fn custom<V, G>(
        name: impl Into<String>,
        dim: usize,
        value: V,
        gradient: G,
        mode: Vec<f64>,
        constants: ClassConstants,
    ) -> Result<Self>
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(invalid("dim", "must be positive"));
        }
        if mode.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: mode.len(),
            });
        }
        constants.validate()?;
        Ok(Potential {
            dim,
            density: Density::Custom {
                name: name.into(),
                value: Arc::new(value),
                gradient: Arc::new(gradient),
            },
            mode,
            constants,
        })
    }

    /// Replace the declared class constants.
    pub fn with_constants(mut self, constants: ClassConstants) -> Result<Self> {
        constants.validate()?;
        self.constants = constants;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> &[f64] {
        &self.mode
    }

    pub fn constants(&self) -> &ClassConstants {
        &self.constants
    }

    pub fn kind(&self) -> Option<TargetKind> {
        match &self.density {
            Density::Builtin(k) => Some(*k),
            Density::Custom { .. } => None,
        }
    }

    pub fn name(&self) -> &str {
        match &self.density {
            Density::Builtin(k) => k.name(),
            Density::Custom { name, .. } => name,
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `f(x)`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.value_unchecked(x))
    }

    /// `∇f(x)`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut g = vec![0.0; self.dim];
        self.gradient_into(x, &mut g);
        Ok(g)
    }

    /// `f(x)` without the dimension check. `x.len()` must equal `dim()`.
    #[inline]
    pub fn value_unchecked(&self, x: &[f64]) -> f64 {
        match &self.density {
            Density::Builtin(k) => k.value(x),
            Density::Custom { value, .. } => value(x),
        }
    }

    /// Writes `∇f(x)` into `out`. Both slices must have length `dim()`.
    #[inline]
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.density {
            Density::Builtin(k) => k.gradient(x, out),
            Density::Custom { gradient, .. } => gradient(x, out),
        }
    }

    /// Samples `n_samples` points uniformly in `B(mode, radius)` and reports the
    /// largest ratio `‖∇f(x)‖ / (K1(1 + ‖x − x*‖^{α−1}))`.
    pub fn check_growth_constants(&self, n_samples: usize, radius: f64, seed: u64) -> GrowthReport {
        let mut rng = stream_rng(seed, 0x67_726f_7774);
        let ClassConstants { alpha, k1, .. } = self.constants;
        let mut g = vec![0.0; self.dim];
        let mut max_ratio = 0.0_f64;
        for _ in 0..n_samples.max(1) {
            let x = uniform_in_ball(&mut rng, &self.mode, radius);
            self.gradient_into(&x, &mut g);
            let bound = k1 * (1.0 + dist(&x, &self.mode).powf(alpha - 1.0));
            max_ratio = max_ratio.max(norm(&g) / bound);
        }
        GrowthReport {
            max_ratio,
            ok: max_ratio <= 1.0,
        }
    }

    /// Largest coordinate-wise relative discrepancy between central differences
    /// of `f` and the analytic gradient, scaled by `1 + |∂ᵢf|`.
    pub fn finite_difference_check(&self, x: &[f64], step: f64) -> Result<f64> {
        self.check_dim(x)?;
        if !(step > 0.0) {
            return Err(invalid("step", format!("must be positive, got {step}")));
        }
        let g = self.gradient(x)?;
        let mut probe = x.to_vec();
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            probe[i] = x[i] + step;
            let fp = self.value_unchecked(&probe);
            probe[i] = x[i] - step;
            let fm = self.value_unchecked(&probe);
            probe[i] = x[i];
            let fd = (fp - fm) / (2.0 * step);
            worst = worst.max((fd - g[i]).abs() / (1.0 + g[i].abs()));
        }
        Ok(worst)
    }

    /// Left-hand side minus right-hand side of the m-strong-convexity
    /// inequality at `(x, y)`; nonnegative when the inequality holds.
    pub fn strong_convexity_gap(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        let g = self.gradient(x)?;
        let diff: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
        let lhs = self.value_unchecked(y) - self.value_unchecked(x) - dot(&g, &diff);
        Ok(lhs - 0.5 * self.constants.m * norm_sq(&diff))
    }
}

/// Outcome of [`Potential::check_growth_constants`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthReport {
    pub max_ratio: f64,
    pub ok: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi1_values() {
        let p = Potential::pi1(1.0, 2).unwrap();
        assert_eq!(p.value(&[0.0, 0.0]).unwrap(), 0.0);
        assert!((p.value(&[1.0, 0.0]).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn pi2_values() {
        let p = Potential::pi2(2).unwrap();
        assert!((p.value(&[0.0, 2.0]).unwrap() - 4.0).abs() < 1e-15);
        assert_eq!(p.gradient(&[0.0, 2.0]).unwrap(), vec![0.0, 8.0]);
    }

    #[test]
    fn pi1_gradients() {
        let p = Potential::pi1(1.0, 2).unwrap();
        assert_eq!(p.gradient(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(p.gradient(&[1.0, 0.0]).unwrap(), vec![2.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let p = Potential::pi1(1.0, 3).unwrap();
        assert_eq!(
            p.value(&[1.0, 2.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 2
            })
        );
        assert!(p.gradient(&[1.0]).is_err());
        assert!(p.finite_difference_check(&[1.0], 1e-5).is_err());
    }

    #[test]
    fn invalid_builtin_parameters() {
        assert!(Potential::pi1(0.0, 2).is_err());
        assert!(Potential::radial(1.5, 2).is_err());
        assert!(Potential::gaussian(-1.0, 2).is_err());
        assert!(Potential::pi2(0).is_err());
    }

    #[test]
    fn gradient_vanishes_at_mode() {
        for p in [
            Potential::pi1(1.0, 5).unwrap(),
            Potential::pi2(5).unwrap(),
            Potential::radial(4.0, 5).unwrap(),
            Potential::radial(2.0, 5).unwrap(),
            Potential::gaussian(3.0, 5).unwrap(),
        ] {
            let g = p.gradient(p.mode()).unwrap();
            assert!(g.iter().all(|v| v.abs() <= 1e-8), "{}", p.name());
        }
    }

    #[test]
    fn growth_check_examples() {
        let p = Potential::pi1(1.0, 2).unwrap();
        let declared = *p.constants();
        let k1_two = p
            .clone()
            .with_constants(ClassConstants {
                k1: 2.0,
                ..declared
            })
            .unwrap();
        assert!(k1_two.check_growth_constants(1000, 3.0, 7).ok);

        let g = Potential::gaussian(1.0, 3).unwrap();
        assert_eq!(g.constants().alpha, 2.0);
        assert!(g.check_growth_constants(1000, 3.0, 7).ok);

        let tiny = p
            .with_constants(ClassConstants {
                k1: 0.01,
                ..declared
            })
            .unwrap();
        let report = tiny.check_growth_constants(1000, 3.0, 7);
        assert!(!report.ok);
        assert!(report.max_ratio > 1.0);
    }

    #[test]
    fn finite_differences_examples() {
        let p = Potential::pi1(1.0, 2).unwrap();
        assert!(p.finite_difference_check(&[1.0, 1.0], 1e-5).unwrap() < 1e-6);
        let p = Potential::pi2(2).unwrap();
        assert!(p.finite_difference_check(&[0.0, 0.0], 1e-5).unwrap() < 1e-9);
        let p = Potential::radial(4.0, 3).unwrap();
        assert!(p.finite_difference_check(&[2.0, 0.0, 0.0], 1e-5).unwrap() < 1e-5);
    }

    #[test]
    fn custom_potential_round_trip() {
        let constants = ClassConstants {
            alpha: 2.0,
            gamma: 2.0,
            m: 1.0,
            k1: 1.0,
            k2: 1.0,
        };
        let p = Potential::custom(
            "shifted-gauss",
            2,
            |x| 0.5 * ((x[0] - 1.0).powi(2) + x[1].powi(2)),
            |x, g| {
                g[0] = x[0] - 1.0;
                g[1] = x[1];
            },
            vec![1.0, 0.0],
            constants,
        )
        .unwrap();
        assert_eq!(p.name(), "shifted-gauss");
        assert_eq!(p.value(&[1.0, 0.0]).unwrap(), 0.0);
        assert!(p.check_growth_constants(500, 4.0, 1).ok);
        assert!(p.finite_difference_check(&[0.3, -2.0], 1e-5).unwrap() < 1e-8);
        assert!(Potential::custom("bad", 2, |_| 0.0, |_, _| {}, vec![0.0], constants).is_err());
    }
}

//! Offline mode finding with a Bregman (primal gradient) scheme.
//!
//! Each iteration minimizes the linearization of `f` plus `L·D_h(·, xᵢ)` for
//! the reference function `h(x) = ‖x‖²/2 + ‖x‖^α/α`, which makes every
//! potential in the thin-tailed class relatively smooth even though `∇f` is
//! not globally Lipschitz. The subproblem has a closed form up to a scalar
//! root: `∇h(x⁺) = ∇h(xᵢ) − ∇f(xᵢ)/L`, and since `∇h(x) = (1 + ‖x‖^{α−2})x`
//! the solution is radial in `v = ∇h(xᵢ) − ∇f(xᵢ)/L`.

use crate::error::{invalid, Error, Result};
use crate::linalg::norm;
use crate::potentials::Potential;

/// Settings for [`find_mode`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Relative-smoothness constant `L`.
    pub l_rel: f64,
    pub max_iters: usize,
    /// Stop once `‖∇f‖ ≤ grad_tol`.
    pub grad_tol: f64,
    /// Exponent of the reference function.
    pub alpha: f64,
}

impl OptimizerConfig {
    pub fn new(l_rel: f64, alpha: f64) -> Self {
        OptimizerConfig {
            l_rel,
            max_iters: 10_000,
            grad_tol: 1e-8,
            alpha,
        }
    }

    /// Conservative defaults from the target's constants:
    /// `L = 4·K2·max(1, 2^{α−3})`.
    pub fn for_target(target: &Potential) -> Self {
        let c = target.constants();
        Self::new(4.0 * c.k2 * 2f64.powf(c.alpha - 3.0).max(1.0), c.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l_rel > 0.0 && self.l_rel.is_finite()) {
            return Err(invalid(
                "l_rel",
                format!("must be positive, got {}", self.l_rel),
            ));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters", "must be positive"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(invalid(
                "grad_tol",
                format!("must be positive, got {}", self.grad_tol),
            ));
        }
        if !(self.alpha >= 2.0) {
            return Err(invalid(
                "alpha",
                format!("must be >= 2, got {}", self.alpha),
            ));
        }
        Ok(())
    }
}

/// `ρ ↦ ρ(1 + ρ^{α−2})`, the radial profile of `∇h`.
fn radial_map(rho: f64, alpha: f64) -> f64 {
    rho * (1.0 + rho.powf(alpha - 2.0))
}

/// Solves `ρ(1 + ρ^{α−2}) = target` for `ρ ≥ 0` by bisection on `[0, target]`.
pub fn solve_radial(target: f64, alpha: f64) -> f64 {
    if target <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0_f64, target);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if radial_map(mid, alpha) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Gradient of the reference function, `(1 + ‖x‖^{α−2})x`.
pub fn reference_gradient(x: &[f64], alpha: f64) -> Vec<f64> {
    let s = 1.0 + norm(x).powf(alpha - 2.0);
    x.iter().map(|v| s * v).collect()
}

/// Reference function `h(x) = ‖x‖²/2 + ‖x‖^α/α`.
pub fn reference_value(x: &[f64], alpha: f64) -> f64 {
    let r = norm(x);
    0.5 * r * r + r.powf(alpha) / alpha
}

/// Bregman divergence `D_h(x, y) = h(x) − h(y) − ⟨∇h(y), x − y⟩`.
pub fn bregman_divergence(x: &[f64], y: &[f64], alpha: f64) -> f64 {
    let gy = reference_gradient(y, alpha);
    let inner: f64 = gy
        .iter()
        .zip(x.iter().zip(y))
        .map(|(g, (a, b))| g * (a - b))
        .sum();
    reference_value(x, alpha) - reference_value(y, alpha) - inner
}

/// Exact minimizer of `⟨grad, u − x⟩ + L·D_h(u, x)` over `u`.
pub fn prox_step(x: &[f64], grad: &[f64], l_rel: f64, alpha: f64) -> Vec<f64> {
    let gh = reference_gradient(x, alpha);
    let v: Vec<f64> = gh.iter().zip(grad).map(|(a, g)| a - g / l_rel).collect();
    let rho = solve_radial(norm(&v), alpha);
    let scale = 1.0 / (1.0 + rho.powf(alpha - 2.0));
    v.into_iter().map(|vi| vi * scale).collect()
}

/// Result of [`find_mode`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModeEstimate {
    pub x_tilde: Vec<f64>,
    pub iters: usize,
    pub grad_norm: f64,
    pub converged: bool,
    /// `f` at every iterate, starting with `f(x0)`.
    pub values: Vec<f64>,
}

/// Runs the primal gradient scheme from `x0` until `‖∇f‖ ≤ grad_tol` or
/// `max_iters` steps.
pub fn find_mode(target: &Potential, x0: &[f64], config: &OptimizerConfig) -> Result<ModeEstimate> {
    config.validate()?;
    if x0.len() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: x0.len(),
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(invalid("x0", "must be finite"));
    }
    let mut x = x0.to_vec();
    let mut grad = target.gradient(&x)?;
    let mut values = vec![target.value_unchecked(&x)];
    let mut iters = 0;
    loop {
        let grad_norm = norm(&grad);
        if grad_norm <= config.grad_tol || iters == config.max_iters {
            return Ok(ModeEstimate {
                x_tilde: x,
                iters,
                grad_norm,
                converged: grad_norm <= config.grad_tol,
                values,
            });
        }
        x = prox_step(&x, &grad, config.l_rel, config.alpha);
        iters += 1;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::OptimizerDiverged { iteration: iters });
        }
        target.gradient_into(&x, &mut grad);
        values.push(target.value_unchecked(&x));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_fixed_point() {
        let x = [0.3, -1.1, 2.0];
        let out = prox_step(&x, &[0.0; 3], 5.0, 4.0);
        for (a, b) in out.iter().zip(&x) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn alpha_two_is_gradient_descent() {
        let x = [0.3, -1.1, 2.0];
        let g = [1.0, 0.5, -3.0];
        let l = 2.5;
        let out = prox_step(&x, &g, l, 2.0);
        for i in 0..3 {
            let expected = x[i] - g[i] / (2.0 * l);
            assert!((out[i] - expected).abs() <= 1e-12);
        }
    }

    #[test]
    fn quartic_reference_example() {
        let out = prox_step(&[0.0, 0.0], &[3.0, 0.0], 1.0, 4.0);
        // independent root: Newton on ρ + ρ³ = 3
        let mut rho = 1.0_f64;
        for _ in 0..50 {
            rho -= (rho + rho.powi(3) - 3.0) / (1.0 + 3.0 * rho * rho);
        }
        assert!((out[0] + rho).abs() < 1e-12);
        assert!((out[0] + 1.2134).abs() < 1e-4);
        assert_eq!(out[1], 0.0);
    }

    #[test]
    fn radial_residual_is_tight() {
        for alpha in [2.0, 2.5, 4.0, 7.0] {
            for t in [1e-9, 0.01, 1.0, 3.0, 250.0, 1e6] {
                let rho = solve_radial(t, alpha);
                let resid = (radial_map(rho, alpha) - t).abs();
                assert!(
                    resid <= 1e-12 * (1.0 + t),
                    "alpha {alpha} t {t} resid {resid}"
                );
            }
        }
    }

    #[test]
    fn bregman_is_nonnegative() {
        let pts = [[0.0, 0.0], [1.0, 2.0], [-3.0, 0.5], [0.1, -0.1]];
        for a in &pts {
            for b in &pts {
                assert!(bregman_divergence(a, b, 4.0) >= -1e-12);
            }
        }
    }

    #[test]
    fn converges_immediately_at_mode() {
        let target = Potential::pi1(1.0, 3).unwrap();
        let est = find_mode(&target, &[0.0; 3], &OptimizerConfig::for_target(&target)).unwrap();
        assert_eq!(est.iters, 0);
        assert!(est.converged);
    }

    #[test]
    fn pi1_from_two_two() {
        let target = Potential::pi1(1.0, 2).unwrap();
        let cfg = OptimizerConfig::new(8.0, 4.0);
        let est = find_mode(&target, &[2.0, 2.0], &cfg).unwrap();
        assert!(est.converged);
        assert!(norm(&est.x_tilde) <= 1e-6);
        for w in est.values.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn quartic_radial_converges_sublinearly() {
        // f = ‖x‖⁴ is flat at the origin, so the scheme is sublinear there:
        // ‖x_k‖² ≈ 2L/(4k) near the mode.
        let target = Potential::radial(4.0, 8).unwrap();
        let x0 = [1.5, -2.0, 0.5, 1.0, -0.3, 0.2, 1.1, -0.9];
        let cfg = OptimizerConfig::new(16.0, 4.0);
        let est = find_mode(&target, &x0, &cfg).unwrap();
        assert_eq!(est.iters, 10_000);
        assert!(est.grad_norm <= 1e-4, "{}", est.grad_norm);
        for w in est.values.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let target = Potential::pi1(1.0, 2).unwrap();
        assert!(find_mode(&target, &[1.0, 1.0], &OptimizerConfig::new(0.0, 4.0)).is_err());
        assert!(find_mode(&target, &[1.0, 1.0], &OptimizerConfig::new(1.0, 1.0)).is_err());
        assert!(find_mode(&target, &[1.0], &OptimizerConfig::new(1.0, 4.0)).is_err());
    }
}

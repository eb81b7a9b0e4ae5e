//! Closed-form step sizes and mixing-time bounds for MAO.
//!
//! Two regimes are supported: [`Assumption::A`] (strongly log-concave with
//! tail exponent α) uses the radius `r(s)` and the dimension exponent `α − 1`;
//! [`Assumption::B`] additionally uses the concentration exponent γ through
//! `τ(s)` and `ω = max(2(α−1)/γ, (γ+α−2)/γ)`. In both cases the tail mass is
//! `s = ε²/(3β)` unless overridden.

use crate::error::{invalid, Result};

/// Which regularity regime the schedule is derived for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    A,
    B,
}

fn check_tail_mass(s: f64) -> Result<()> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(invalid("s", format!("must lie in (0, 1], got {s}")));
    }
    Ok(())
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(invalid("d", "must be positive"));
    }
    Ok(())
}

fn big_r(s: f64, d: usize) -> f64 {
    let q = (1.0 / s).ln() / d as f64;
    1.0 + q.powf(0.25).max(q.sqrt())
}

/// `r(s) = max(R(s), R(1/2))` with `R(s) = 1 + max{(log(1/s)/d)^{1/4}, (log(1/s)/d)^{1/2}}`.
pub fn radius_r(s: f64, d: usize) -> Result<f64> {
    check_tail_mass(s)?;
    check_dim(d)?;
    Ok(big_r(s, d).max(big_r(0.5, d)))
}

/// `τ(s) = (1/α + log(1/s)/d + √(2 log(1/s)/(dα)))^{1/α}`.
///
/// The ball `B(0, τ(s)·d^{1/α})` carries at least `1 − s` of the mass of the
/// density `∝ exp(−‖x‖^α)`.
pub fn tau_alpha(s: f64, d: usize, alpha: f64) -> Result<f64> {
    check_tail_mass(s)?;
    check_dim(d)?;
    if !(alpha >= 2.0) {
        return Err(invalid("alpha", format!("must be >= 2, got {alpha}")));
    }
    let l = (1.0 / s).ln();
    let d = d as f64;
    Ok((1.0 / alpha + l / d + (2.0 * l / (d * alpha)).sqrt()).powf(1.0 / alpha))
}

/// The dimension exponent `ω` of the step size under `assumption`.
pub fn omega(alpha: f64, gamma: f64, assumption: Assumption) -> f64 {
    match assumption {
        Assumption::A => alpha - 1.0,
        Assumption::B => (2.0 * (alpha - 1.0) / gamma).max((gamma + alpha - 2.0) / gamma),
    }
}

/// Inputs to [`step_size`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleInputs {
    pub eps: f64,
    pub beta: f64,
    pub d: usize,
    pub alpha: f64,
    pub gamma: f64,
    /// Universal constant `c_A` / `c_B`.
    pub c: f64,
    /// Tail-mass override; `None` means `ε²/(3β)`.
    pub s: Option<f64>,
    pub assumption: Assumption,
}

impl ScheduleInputs {
    pub fn new(eps: f64, beta: f64, d: usize, alpha: f64, gamma: f64) -> Self {
        ScheduleInputs {
            eps,
            beta,
            d,
            alpha,
            gamma,
            c: 1.0,
            s: None,
            assumption: Assumption::B,
        }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_assumption(mut self, assumption: Assumption) -> Self {
        self.assumption = assumption;
        self
    }

    pub fn with_tail_mass(mut self, s: f64) -> Self {
        self.s = Some(s);
        self
    }
}

/// A resolved step-size schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub eps: f64,
    pub beta: f64,
    pub d: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub c: f64,
    pub s: f64,
    pub assumption: Assumption,
    /// `r(s)` under A, `τ(s)` under B.
    pub radius: f64,
    pub omega: f64,
    pub h: f64,
    pub predicted_mixing_bound: f64,
}

/// Resolves the warm-start step size `h = 1/(c · radius(s) · d^ω)`.
pub fn step_size(inputs: ScheduleInputs) -> Result<Schedule> {
    let ScheduleInputs {
        eps,
        beta,
        d,
        alpha,
        gamma,
        c,
        s,
        assumption,
    } = inputs;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", format!("must lie in (0, 1), got {eps}")));
    }
    if !(beta >= 1.0 && beta.is_finite()) {
        return Err(invalid("beta", format!("must be >= 1, got {beta}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid("c", format!("must be positive, got {c}")));
    }
    if !(alpha >= 2.0) {
        return Err(invalid("alpha", format!("must be >= 2, got {alpha}")));
    }
    if !(gamma >= 2.0) {
        return Err(invalid("gamma", format!("must be >= 2, got {gamma}")));
    }
    check_dim(d)?;
    let s = s.unwrap_or(eps * eps / (3.0 * beta));
    let radius = match assumption {
        Assumption::A => radius_r(s, d)?,
        Assumption::B => tau_alpha(s, d, alpha)?,
    };
    let omega = omega(alpha, gamma, assumption);
    let h = 1.0 / (c * radius * (d as f64).powf(omega));
    let mut schedule = Schedule {
        eps,
        beta,
        d,
        alpha,
        gamma,
        c,
        s,
        assumption,
        radius,
        omega,
        h,
        predicted_mixing_bound: 0.0,
    };
    schedule.predicted_mixing_bound = predicted_bounds(&schedule, radius).mixing_upper.max(1.0);
    Ok(schedule)
}

/// The closed-form mixing-time upper bound and its warmness factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedBounds {
    pub mixing_upper: f64,
    /// `log(log(β)/ε)`, clamped below at 1 (and set to 1 when `β ≤ e`).
    pub warm_log_log: f64,
}

/// `c · radius · d^ω · log(log(β)/ε)`.
pub fn predicted_bounds(schedule: &Schedule, tau_or_r: f64) -> PredictedBounds {
    let warm_log_log = if schedule.beta <= std::f64::consts::E {
        1.0
    } else {
        (schedule.beta.ln() / schedule.eps).ln().max(1.0)
    };
    PredictedBounds {
        mixing_upper: schedule.c
            * tau_or_r
            * (schedule.d as f64).powf(schedule.omega)
            * warm_log_log,
        warm_log_log,
    }
}

/// Default mode-accuracy target `δ = min(c·log(1/ε)/h, √h)`.
pub fn delta_tolerance(h: f64, eps: f64, c: f64) -> f64 {
    debug_assert!(h > 0.0 && eps > 0.0 && eps <= 1.0);
    (c * (1.0 / eps).ln() / h).min(h.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn radius_examples() {
        let r = radius_r(1.0, 2).unwrap();
        assert!(close(r, 1.0 + (2f64.ln() / 2.0).powf(0.25), 1e-14));
        assert!(close(r, 1.7673, 1e-4));
        for d in [1, 3, 17] {
            assert_eq!(radius_r(0.5, d).unwrap(), big_r(0.5, d));
        }
        assert!(close(radius_r((-9f64).exp(), 9).unwrap(), 2.0, 1e-12));
    }

    #[test]
    fn radius_rejects_bad_tail_mass() {
        assert!(radius_r(0.0, 2).is_err());
        assert!(radius_r(-0.1, 2).is_err());
        assert!(radius_r(1.5, 2).is_err());
        assert!(tau_alpha(0.0, 2, 2.0).is_err());
        assert!(tau_alpha(2.0, 2, 2.0).is_err());
    }

    #[test]
    fn tau_examples() {
        assert!(close(tau_alpha(1.0, 7, 2.0).unwrap(), 0.5f64.sqrt(), 1e-14));
        assert!(close(
            tau_alpha((-1f64).exp(), 1, 2.0).unwrap(),
            2.5f64.sqrt(),
            1e-14
        ));
        let t = tau_alpha((-2f64).exp(), 4, 4.0).unwrap();
        assert!(close(t, 1.25f64.powf(0.25), 1e-14));
        assert!(close(t, 1.0574, 1e-4));
    }

    #[test]
    fn omega_examples() {
        assert_eq!(omega(4.0, 4.0, Assumption::B), 1.5);
        assert_eq!(omega(2.0, 2.0, Assumption::B), 1.0);
        assert_eq!(omega(2.0, 2.0, Assumption::A), 1.0);
        assert_eq!(omega(4.0, 4.0, Assumption::A), 3.0);
    }

    #[test]
    fn assumption_a_step() {
        // ε²/(3β) = 1/2 with ε = 0.5, β = 1/6 is outside β ≥ 1, so override s.
        let sched = step_size(
            ScheduleInputs::new(0.5, 1.0, 2, 4.0, 4.0)
                .with_assumption(Assumption::A)
                .with_tail_mass(0.5),
        )
        .unwrap();
        let r_half = 1.0 + (2f64.ln() / 2.0).powf(0.25);
        assert!(close(sched.h, 1.0 / (r_half * 8.0), 1e-15));
        assert!(close(sched.h, 0.0707, 1e-4));
        assert_eq!(sched.omega, 3.0);
    }

    #[test]
    fn default_tail_mass() {
        let sched = step_size(ScheduleInputs::new(0.5, 10.0, 2, 4.0, 4.0)).unwrap();
        assert!(close(sched.s, 0.25 / 30.0, 1e-16));
        assert!(sched.predicted_mixing_bound >= 1.0);
    }

    #[test]
    fn step_size_rejects_outside_class() {
        assert!(step_size(ScheduleInputs::new(0.5, 10.0, 2, 1.5, 4.0)).is_err());
        assert!(step_size(ScheduleInputs::new(0.5, 10.0, 2, 4.0, 1.0)).is_err());
        assert!(step_size(ScheduleInputs::new(1.0, 10.0, 2, 4.0, 4.0)).is_err());
        assert!(step_size(ScheduleInputs::new(0.5, 0.5, 2, 4.0, 4.0)).is_err());
        assert!(step_size(ScheduleInputs::new(0.5, 10.0, 2, 4.0, 4.0).with_c(0.0)).is_err());
    }

    fn schedule_with(c: f64, d: usize, omega: f64, beta: f64, eps: f64) -> Schedule {
        Schedule {
            eps,
            beta,
            d,
            alpha: 4.0,
            gamma: 4.0,
            c,
            s: 0.1,
            assumption: Assumption::B,
            radius: 1.0,
            omega,
            h: 1.0,
            predicted_mixing_bound: 1.0,
        }
    }

    #[test]
    fn bound_examples() {
        let a = schedule_with(1.0, 2, 3.0, E.powf(E), 1.0 / E);
        let b = predicted_bounds(&a, 2.0);
        assert!(close(b.warm_log_log, 2.0, 1e-12));
        assert!(close(b.mixing_upper, 32.0, 1e-10));

        let clamped = schedule_with(1.0, 2, 3.0, E, 0.1);
        let b = predicted_bounds(&clamped, 2.0);
        assert_eq!(b.warm_log_log, 1.0);
        assert!(close(b.mixing_upper, 16.0, 1e-12));

        let bb = schedule_with(1.0, 4, 1.5, E.powf(E), 1.0 / E);
        assert!(close(predicted_bounds(&bb, 1.0).mixing_upper, 16.0, 1e-10));
    }

    #[test]
    fn delta_examples() {
        let d = delta_tolerance(0.01, 0.5, 1e-4);
        assert!(close(d, 1e-4 * 100.0 * 2f64.ln(), 1e-15));
        assert!(close(d, 0.00693, 1e-5));
        assert_eq!(delta_tolerance(0.3, 1.0, 5.0), 0.0);
        assert_eq!(delta_tolerance(1.0, 0.5, 10.0), 1.0);
    }
}

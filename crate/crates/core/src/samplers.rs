//! Metropolis–Hastings chains with Gaussian proposals: RWM, MALA and MAO.
//!
//! All three kernels propose `z ~ N(mean(x), 2h·I)` and differ only in the
//! proposal mean:
//!
//! | kernel | `mean(x)`          |
//! |--------|--------------------|
//! | RWM    | `x`                |
//! | MALA   | `x − h∇f(x)`       |
//! | MAO    | `x − h(x − x̃)`     |
//!
//! where `x̃` is a precomputed estimate of the mode. Acceptance is evaluated in
//! log space throughout: `e^{−f}` underflows long before the tails matter.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::dist_sq;
use crate::potentials::Potential;
use crate::rng::{fill_standard_normal, stream_rng, ChainRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Rwm,
    Mala,
    Mao,
}

impl KernelKind {
    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::Rwm => "rwm",
            KernelKind::Mala => "mala",
            KernelKind::Mao => "mao",
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rwm" => Ok(KernelKind::Rwm),
            "mala" => Ok(KernelKind::Mala),
            "mao" => Ok(KernelKind::Mao),
            other => Err(invalid("algo", format!("unknown kernel `{other}`"))),
        }
    }
}

/// A Gaussian proposal with covariance `2h·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalKernel {
    kind: KernelKind,
    h: f64,
    mode_estimate: Vec<f64>,
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid(
            "h",
            format!("must be positive and finite, got {h}"),
        ));
    }
    Ok(())
}

impl ProposalKernel {
    pub fn rwm(h: f64) -> Result<Self> {
        check_step(h)?;
        Ok(ProposalKernel {
            kind: KernelKind::Rwm,
            h,
            mode_estimate: Vec::new(),
        })
    }

    pub fn mala(h: f64) -> Result<Self> {
        check_step(h)?;
        Ok(ProposalKernel {
            kind: KernelKind::Mala,
            h,
            mode_estimate: Vec::new(),
        })
    }

    /// MAO kernel contracting toward `mode_estimate`.
    pub fn mao(h: f64, mode_estimate: Vec<f64>) -> Result<Self> {
        check_step(h)?;
        if mode_estimate.iter().any(|v| !v.is_finite()) {
            return Err(invalid("mode_estimate", "must be finite"));
        }
        Ok(ProposalKernel {
            kind: KernelKind::Mao,
            h,
            mode_estimate,
        })
    }

    /// Builds a kernel of `kind`; `mode_estimate` is only used by MAO.
    pub fn new(kind: KernelKind, h: f64, mode_estimate: Vec<f64>) -> Result<Self> {
        match kind {
            KernelKind::Rwm => Self::rwm(h),
            KernelKind::Mala => Self::mala(h),
            KernelKind::Mao => Self::mao(h, mode_estimate),
        }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn mode_estimate(&self) -> Option<&[f64]> {
        match self.kind {
            KernelKind::Mao => Some(&self.mode_estimate),
            _ => None,
        }
    }

    fn check_compatible(&self, target: &Potential) -> Result<()> {
        if self.kind == KernelKind::Mao && self.mode_estimate.len() != target.dim() {
            return Err(Error::DimensionMismatch {
                expected: target.dim(),
                got: self.mode_estimate.len(),
            });
        }
        Ok(())
    }

    /// Writes the proposal mean at `x` into `out`. `grad` is scratch space
    /// for MALA. All slices have length `target.dim()`.
    fn mean_into(&self, target: &Potential, x: &[f64], grad: &mut [f64], out: &mut [f64]) {
        let h = self.h;
        match self.kind {
            KernelKind::Rwm => out.copy_from_slice(x),
            KernelKind::Mala => {
                target.gradient_into(x, grad);
                for ((o, xi), gi) in out.iter_mut().zip(x).zip(grad.iter()) {
                    *o = xi - h * gi;
                }
            }
            KernelKind::Mao => {
                for ((o, xi), mi) in out.iter_mut().zip(x).zip(&self.mode_estimate) {
                    *o = xi - h * (xi - mi);
                }
            }
        }
    }

    /// Proposal mean at `x`.
    pub fn proposal_mean(&self, target: &Potential, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(target, x)?;
        self.check_compatible(target)?;
        let d = target.dim();
        let mut out = vec![0.0; d];
        let mut grad = vec![0.0; d];
        self.mean_into(target, x, &mut grad, &mut out);
        Ok(out)
    }

    /// Normalized log-density of the proposal `q_x(z)`:
    /// `−‖z − mean(x)‖²/(4h) − (d/2)·log(4πh)`.
    pub fn log_proposal_density(&self, target: &Potential, x: &[f64], z: &[f64]) -> Result<f64> {
        check_dim(target, z)?;
        let mean = self.proposal_mean(target, x)?;
        let d = target.dim() as f64;
        Ok(-dist_sq(z, &mean) / (4.0 * self.h)
            - 0.5 * d * (4.0 * std::f64::consts::PI * self.h).ln())
    }
}

fn check_dim(target: &Potential, x: &[f64]) -> Result<()> {
    if x.len() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: x.len(),
        });
    }
    Ok(())
}

/// `log r = f(x) − f(z) + log q_z(x) − log q_x(z)` given the potential values
/// and both proposal means. NaN or `+∞` at `z` yields `−∞` (certain rejection).
#[inline]
fn log_ratio_from_parts(
    h: f64,
    x: &[f64],
    z: &[f64],
    fx: f64,
    fz: f64,
    mean_x: &[f64],
    mean_z: &[f64],
) -> f64 {
    let backward = dist_sq(x, mean_z);
    let forward = dist_sq(z, mean_x);
    let r = fx - fz - (backward - forward) / (4.0 * h);
    if r.is_nan() {
        f64::NEG_INFINITY
    } else {
        r
    }
}

/// Log Metropolis–Hastings ratio for moving `x → z` (unclamped; acceptance is
/// `min(1, e^{log r})`).
pub fn log_accept_ratio(
    kernel: &ProposalKernel,
    target: &Potential,
    x: &[f64],
    z: &[f64],
) -> Result<f64> {
    check_dim(target, x)?;
    check_dim(target, z)?;
    kernel.check_compatible(target)?;
    let fx = target.value_unchecked(x);
    if !fx.is_finite() {
        return Err(Error::NonFiniteState);
    }
    let d = target.dim();
    let mut grad = vec![0.0; d];
    let mut mean_x = vec![0.0; d];
    let mut mean_z = vec![0.0; d];
    kernel.mean_into(target, x, &mut grad, &mut mean_x);
    kernel.mean_into(target, z, &mut grad, &mut mean_z);
    let fz = target.value_unchecked(z);
    Ok(log_ratio_from_parts(
        kernel.h, x, z, fx, fz, &mean_x, &mean_z,
    ))
}

/// KL divergence between `N(μ₁, 2hI)` and `N(μ₂, 2hI)`: `‖μ₁ − μ₂‖²/(4h)`.
pub fn kl_gaussian_shift(mu1: &[f64], mu2: &[f64], h: f64) -> f64 {
    dist_sq(mu1, mu2) / (4.0 * h)
}

/// Pinsker's bound on the total variation between the same two Gaussians.
pub fn tv_bound_pinsker(mu1: &[f64], mu2: &[f64], h: f64) -> f64 {
    (2.0 * kl_gaussian_shift(mu1, mu2, h)).sqrt().min(1.0)
}

/// Monte Carlo estimate of the one-step acceptance probability at `x`:
/// the mean of `min(1, e^{log r})` over `n_proposals` draws.
pub fn estimate_acceptance(
    kernel: &ProposalKernel,
    target: &Potential,
    x: &[f64],
    n_proposals: usize,
    seed: u64,
) -> Result<f64> {
    check_dim(target, x)?;
    kernel.check_compatible(target)?;
    let fx = target.value_unchecked(x);
    if !fx.is_finite() {
        return Err(Error::NonFiniteState);
    }
    let d = target.dim();
    let mut rng = stream_rng(seed, 0);
    let mut grad = vec![0.0; d];
    let mut mean_x = vec![0.0; d];
    let mut mean_z = vec![0.0; d];
    let mut z = vec![0.0; d];
    kernel.mean_into(target, x, &mut grad, &mut mean_x);
    let sd = (2.0 * kernel.h).sqrt();
    let mut total = 0.0;
    for _ in 0..n_proposals {
        fill_standard_normal(&mut rng, &mut z);
        z.iter_mut()
            .zip(&mean_x)
            .for_each(|(zi, mi)| *zi = mi + sd * *zi);
        kernel.mean_into(target, &z, &mut grad, &mut mean_z);
        let fz = target.value_unchecked(&z);
        let lr = log_ratio_from_parts(kernel.h, x, &z, fx, fz, &mean_x, &mean_z);
        total += lr.min(0.0).exp();
    }
    Ok(total / n_proposals.max(1) as f64)
}

/// Chain configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub kernel: ProposalKernel,
    /// Probability of holding in place before proposing.
    pub zeta: f64,
    pub n_iters: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Random-stream id; distinct ids give independent streams under one seed.
    pub stream: u64,
    pub record_stride: usize,
}

impl SamplerConfig {
    /// Defaults: `ζ = 1/2`, no burn-in, seed 0, stream 0, stride 1.
    pub fn new(kernel: ProposalKernel, n_iters: usize) -> Self {
        SamplerConfig {
            kernel,
            zeta: 0.5,
            n_iters,
            burn_in: 0,
            seed: 0,
            stream: 0,
            record_stride: 1,
        }
    }

    pub fn zeta(mut self, zeta: f64) -> Self {
        self.zeta = zeta;
        self
    }

    pub fn burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta >= 0.0 && self.zeta < 1.0) {
            return Err(invalid(
                "zeta",
                format!("must lie in [0, 1), got {}", self.zeta),
            ));
        }
        if self.n_iters == 0 {
            return Err(invalid("n_iters", "must be positive"));
        }
        if self.burn_in >= self.n_iters {
            return Err(invalid(
                "burn_in",
                format!("must be < n_iters ({}), got {}", self.n_iters, self.burn_in),
            ));
        }
        if self.record_stride == 0 {
            return Err(invalid("record_stride", "must be positive"));
        }
        Ok(())
    }
}

/// What happened during one transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Accepted,
    Rejected,
    /// The lazy coin held the chain in place; no proposal was drawn.
    Lazy,
}

/// A running chain: current state, cached `f(x)` and proposal mean, and the
/// chain's private random stream.
pub struct Chain<'a> {
    kernel: ProposalKernel,
    zeta: f64,
    target: &'a Potential,
    rng: ChainRng,
    x: Vec<f64>,
    fx: f64,
    mean_x: Vec<f64>,
    z: Vec<f64>,
    mean_z: Vec<f64>,
    grad: Vec<f64>,
    iteration: usize,
}

impl<'a> Chain<'a> {
    pub fn new(config: &SamplerConfig, target: &'a Potential, x0: &[f64]) -> Result<Self> {
        config.validate()?;
        Self::with_rng(
            config.kernel.clone(),
            config.zeta,
            target,
            x0,
            stream_rng(config.seed, config.stream),
        )
    }

    fn with_rng(
        kernel: ProposalKernel,
        zeta: f64,
        target: &'a Potential,
        x0: &[f64],
        rng: ChainRng,
    ) -> Result<Self> {
        check_dim(target, x0)?;
        kernel.check_compatible(target)?;
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(invalid("x0", "must be finite"));
        }
        let fx = target.value_unchecked(x0);
        if !fx.is_finite() {
            return Err(Error::NonFiniteState);
        }
        let d = target.dim();
        let mut grad = vec![0.0; d];
        let mut mean_x = vec![0.0; d];
        kernel.mean_into(target, x0, &mut grad, &mut mean_x);
        Ok(Chain {
            kernel,
            zeta,
            target,
            rng,
            x: x0.to_vec(),
            fx,
            mean_x,
            z: vec![0.0; d],
            mean_z: vec![0.0; d],
            grad,
            iteration: 0,
        })
    }

    pub fn state(&self) -> &[f64] {
        &self.x
    }

    /// `−f` at the current state.
    pub fn log_density(&self) -> f64 {
        -self.fx
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Advances the chain by one transition.
    pub fn step(&mut self) -> Result<StepOutcome> {
        self.iteration += 1;
        if self.zeta > 0.0 && self.rng.random::<f64>() < self.zeta {
            return Ok(StepOutcome::Lazy);
        }
        let h = self.kernel.h;
        let sd = (2.0 * h).sqrt();
        fill_standard_normal(&mut self.rng, &mut self.z);
        for (zi, mi) in self.z.iter_mut().zip(&self.mean_x) {
            *zi = mi + sd * *zi;
        }
        self.kernel
            .mean_into(self.target, &self.z, &mut self.grad, &mut self.mean_z);
        let fz = self.target.value_unchecked(&self.z);
        let log_r =
            log_ratio_from_parts(h, &self.x, &self.z, self.fx, fz, &self.mean_x, &self.mean_z);
        let u: f64 = self.rng.random();
        if u.ln() < log_r {
            std::mem::swap(&mut self.x, &mut self.z);
            std::mem::swap(&mut self.mean_x, &mut self.mean_z);
            self.fx = fz;
            if !self.fx.is_finite() || self.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::ChainDiverged {
                    iteration: self.iteration,
                });
            }
            Ok(StepOutcome::Accepted)
        } else {
            Ok(StepOutcome::Rejected)
        }
    }
}

/// One transition from `x` using `rng`; returns the next state and its outcome.
pub fn step(
    config: &SamplerConfig,
    target: &Potential,
    x: &[f64],
    rng: &mut ChainRng,
) -> Result<(Vec<f64>, StepOutcome)> {
    config.validate()?;
    let mut chain = Chain::with_rng(config.kernel.clone(), config.zeta, target, x, rng.clone())?;
    let outcome = chain.step()?;
    *rng = chain.rng;
    Ok((chain.x, outcome))
}

/// Recorded output of [`run_chain`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    dim: usize,
    states: Vec<f64>,
    /// Iteration index (1-based) at which each recorded state was reached.
    pub iterations: Vec<usize>,
    /// Outcome of the transition that produced each recorded state.
    pub outcomes: Vec<StepOutcome>,
    /// `−f(x_t)` for each recorded state.
    pub log_densities: Vec<f64>,
    /// Post-burn-in proposals (non-lazy steps), recorded or not.
    pub n_proposals: usize,
    pub n_accepted: usize,
    pub n_lazy: usize,
    pub config: SamplerConfig,
}

impl Trace {
    /// Assembles a trace from raw parts, e.g. when re-reading one from disk.
    pub fn from_parts(
        dim: usize,
        states: Vec<Vec<f64>>,
        iterations: Vec<usize>,
        outcomes: Vec<StepOutcome>,
        log_densities: Vec<f64>,
        config: SamplerConfig,
    ) -> Result<Self> {
        let n = states.len();
        if iterations.len() != n || outcomes.len() != n || log_densities.len() != n {
            return Err(invalid("trace", "column lengths disagree"));
        }
        if let Some(bad) = states.iter().find(|s| s.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        let n_accepted = outcomes
            .iter()
            .filter(|o| **o == StepOutcome::Accepted)
            .count();
        let n_lazy = outcomes.iter().filter(|o| **o == StepOutcome::Lazy).count();
        Ok(Trace {
            dim,
            states: states.into_iter().flatten().collect(),
            iterations,
            n_proposals: n - n_lazy,
            n_accepted,
            n_lazy,
            outcomes,
            log_densities,
            config,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.log_densities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_densities.is_empty()
    }

    pub fn state(&self, t: usize) -> &[f64] {
        &self.states[t * self.dim..(t + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.dim)
    }

    /// The series of coordinate `j` across recorded states.
    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.states().map(|s| s[j]).collect()
    }

    /// Accepted / proposed over post-burn-in non-lazy steps.
    pub fn accept_rate(&self) -> f64 {
        if self.n_proposals == 0 {
            0.0
        } else {
            self.n_accepted as f64 / self.n_proposals as f64
        }
    }

    /// Accept flags of the recorded non-lazy steps (1 accepted, 0 rejected).
    pub fn accept_flags(&self) -> Vec<u8> {
        self.outcomes
            .iter()
            .filter_map(|o| match o {
                StepOutcome::Accepted => Some(1),
                StepOutcome::Rejected => Some(0),
                StepOutcome::Lazy => None,
            })
            .collect()
    }
}

/// Runs `config.n_iters` transitions from `x0`, discards the first
/// `burn_in`, and records every `record_stride`-th state thereafter.
pub fn run_chain(config: &SamplerConfig, target: &Potential, x0: &[f64]) -> Result<Trace> {
    let mut chain = Chain::new(config, target, x0)?;
    let kept = config.n_iters - config.burn_in;
    let capacity = kept / config.record_stride;
    let mut trace = Trace {
        dim: target.dim(),
        states: Vec::with_capacity(capacity * target.dim()),
        iterations: Vec::with_capacity(capacity),
        outcomes: Vec::with_capacity(capacity),
        log_densities: Vec::with_capacity(capacity),
        n_proposals: 0,
        n_accepted: 0,
        n_lazy: 0,
        config: config.clone(),
    };
    for it in 1..=config.n_iters {
        let outcome = chain.step()?;
        if it <= config.burn_in {
            continue;
        }
        match outcome {
            StepOutcome::Accepted => {
                trace.n_proposals += 1;
                trace.n_accepted += 1;
            }
            StepOutcome::Rejected => trace.n_proposals += 1,
            StepOutcome::Lazy => trace.n_lazy += 1,
        }
        if (it - config.burn_in).is_multiple_of(config.record_stride) {
            trace.states.extend_from_slice(chain.state());
            trace.iterations.push(it);
            trace.outcomes.push(outcome);
            trace.log_densities.push(chain.log_density());
        }
    }
    Ok(trace)
}

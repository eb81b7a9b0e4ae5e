//! Metropolized samplers for thin-tailed log-concave targets.
//!
//! The crate provides three Metropolis–Hastings chains sharing one Gaussian
//! proposal family: random-walk Metropolis, MALA and MAO (Metropolized
//! algorithm with an optimization step), whose proposal contracts toward a
//! precomputed mode estimate instead of following the gradient. Around the
//! samplers sit the pieces needed to run them the way the theory prescribes:
//!
//! - [`potentials`]: targets `π ∝ e^{−f}` with their class constants.
//! - [`schedules`]: warm-start step sizes and mixing-time bounds.
//! - [`optimizer`]: a Bregman gradient scheme that finds the mode.
//! - [`feasible_start`]: an explicitly samplable warm initial distribution.
//! - [`diagnostics`]: ACF, ESS and acceptance summaries.
//! - [`grid_oracle`]: exact 1-D discretization of the kernels for checking
//!   stationarity and mixing.
//!
//! ```
//! use mao_core::{run_chain, Potential, ProposalKernel, SamplerConfig};
//!
//! let target = Potential::pi1(1.0, 2).unwrap();
//! let kernel = ProposalKernel::mao(0.25, vec![0.0, 0.0]).unwrap();
//! let config = SamplerConfig::new(kernel, 1_000).zeta(0.0).seed(7);
//! let trace = run_chain(&config, &target, &[0.0, 0.0]).unwrap();
//! assert_eq!(trace.len(), 1_000);
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod feasible_start;
pub mod grid_oracle;
mod linalg;
pub mod optimizer;
pub mod potentials;
pub mod rng;
pub mod samplers;
pub mod schedules;

pub use diagnostics::{autocorrelation, effective_sample_size, summarize, DiagnosticsReport};
pub use error::{Error, Result};
pub use feasible_start::{log_beta, verify_warmness_grid, FeasibleStart, Grid1d};
pub use grid_oracle::{discretize, mixing_trajectory, stationary, GridKernel};
pub use optimizer::{find_mode, prox_step, ModeEstimate, OptimizerConfig};
pub use potentials::{ClassConstants, Potential, TargetKind};
pub use samplers::{
    estimate_acceptance, kl_gaussian_shift, log_accept_ratio, run_chain, step, Chain, KernelKind,
    ProposalKernel, SamplerConfig, StepOutcome, Trace,
};
pub use schedules::{
    delta_tolerance, predicted_bounds, radius_r, step_size, tau_alpha, Assumption, Schedule,
    ScheduleInputs,
};

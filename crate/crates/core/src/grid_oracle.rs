//! Brute-force verification of a sampler in one dimension.
//!
//! The transition kernel of any of the proposal kernels is discretized onto a
//! uniform grid of cell midpoints, producing an explicit row-stochastic
//! matrix. Rejection, laziness and proposal mass that leaves the grid are all
//! folded into the diagonal, so stochasticity holds by construction and the
//! Metropolis–Hastings structure makes the matrix reversible with respect to
//! the discretized target.

use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::feasible_start::{grid_masses, FeasibleStart, Grid1d};
use crate::potentials::Potential;
use crate::samplers::{log_accept_ratio, ProposalKernel};

/// Largest mass allowed outside the grid: target mass in the boundary cells,
/// or target-weighted proposal mass leaving the grid.
pub const MAX_LEAKAGE: f64 = 1e-6;

/// A discretized transition kernel.
#[derive(Debug, Clone)]
pub struct GridKernel {
    pub grid: Grid1d,
    pub zeta: f64,
    /// Row-major `n × n` transition matrix.
    p: Vec<f64>,
    pub pi_disc: Vec<f64>,
    /// Target-weighted proposal mass that fell outside the grid.
    pub leakage: f64,
}

impl GridKernel {
    pub fn n(&self) -> usize {
        self.grid.n_cells
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.p[i * n..(i + 1) * n]
    }

    /// Largest `|1 − Σ_j P[i, j]|`.
    pub fn row_sum_residual(&self) -> f64 {
        (0..self.n())
            .map(|i| (1.0 - self.row(i).iter().sum::<f64>()).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|π_i P[i, j] − π_j P[j, i]|`.
    pub fn reversibility_residual(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let lhs = self.pi_disc[i] * self.entry(i, j);
                let rhs = self.pi_disc[j] * self.entry(j, i);
                worst = worst.max((lhs - rhs).abs());
            }
        }
        worst
    }

    /// One step of the distribution: `μ ← μP`.
    pub fn push_forward(&self, mu: &[f64], out: &mut [f64]) {
        let n = self.n();
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, &mi) in mu.iter().enumerate() {
            if mi == 0.0 {
                continue;
            }
            let row = &self.p[i * n..(i + 1) * n];
            for (o, pij) in out.iter_mut().zip(row) {
                *o += mi * pij;
            }
        }
    }
}

/// Discretizes `kernel` for a one-dimensional `target` with laziness `zeta`.
pub fn discretize(
    kernel: &ProposalKernel,
    target: &Potential,
    zeta: f64,
    grid: &Grid1d,
) -> Result<GridKernel> {
    if target.dim() != 1 {
        return Err(invalid(
            "target",
            "grid discretization requires dimension 1",
        ));
    }
    if !(0.0..=1.0).contains(&zeta) {
        return Err(invalid("zeta", format!("must lie in [0, 1], got {zeta}")));
    }
    let n = grid.n_cells;
    let dx = grid.width();
    let xs = grid.points();
    let h = kernel.h();
    let log_pi: Vec<f64> = xs.iter().map(|x| -target.value_unchecked(&[*x])).collect();
    let (pi_disc, edge_mass) = grid_masses(&log_pi);
    if edge_mass > MAX_LEAKAGE {
        return Err(Error::GridTooNarrow {
            what: "target",
            mass: edge_mass,
        });
    }
    let norm = dx / (4.0 * std::f64::consts::PI * h).sqrt();
    let sd = (2.0 * h).sqrt();
    let mut p = vec![0.0; n * n];
    let mut leakage = 0.0;
    for i in 0..n {
        let xi = [xs[i]];
        let mean = kernel.proposal_mean(target, &xi)?[0];
        // Gaussian mass of N(mean, 2h) outside [lo, hi]
        let outside = 0.5 * erfc((mean - grid.lo) / (sd * std::f64::consts::SQRT_2))
            + 0.5 * erfc((grid.hi - mean) / (sd * std::f64::consts::SQRT_2));
        leakage += pi_disc[i] * outside;
        let row = &mut p[i * n..(i + 1) * n];
        let mut off = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let q = norm * (-(xs[j] - mean).powi(2) / (4.0 * h)).exp();
            if q == 0.0 {
                continue;
            }
            let log_r = log_accept_ratio(kernel, target, &xi, &[xs[j]])?;
            let v = (1.0 - zeta) * q * log_r.min(0.0).exp();
            row[j] = v;
            off += v;
        }
        if off > 1.0 + 1e-12 {
            return Err(invalid(
                "grid",
                format!("row {i} off-diagonal mass {off} exceeds 1; refine the grid"),
            ));
        }
        row[i] = (1.0 - off).max(0.0);
    }
    if leakage > MAX_LEAKAGE {
        return Err(Error::GridTooNarrow {
            what: "proposal",
            mass: leakage,
        });
    }
    Ok(GridKernel {
        grid: *grid,
        zeta,
        p,
        pi_disc,
        leakage,
    })
}

/// Total variation distance between two distributions on the grid.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// `d_p(μ, π) = (Σ_i |μ_i/π_i − 1|^p π_i)^{1/p}`.
pub fn lp_divergence(mu: &[f64], pi: &[f64], p: u32) -> f64 {
    let s: f64 = mu
        .iter()
        .zip(pi)
        .filter(|(_, q)| **q > 0.0)
        .map(|(m, q)| (m / q - 1.0).abs().powi(p as i32) * q)
        .sum();
    s.powf(1.0 / p as f64)
}

/// Result of [`stationary`].
#[derive(Debug, Clone)]
pub struct Stationary {
    pub distribution: Vec<f64>,
    pub iterations: usize,
    /// `TV(distribution, pi_disc)`.
    pub tv_to_target: f64,
}

pub const STATIONARY_MAX_ITERS: usize = 1_000_000;
pub const STATIONARY_TOL: f64 = 1e-12;

/// Stationary distribution by power iteration from the uniform distribution.
pub fn stationary(gk: &GridKernel) -> Result<Stationary> {
    let n = gk.n();
    for i in 0..n - 1 {
        if gk.entry(i, i + 1) <= 0.0 || gk.entry(i + 1, i) <= 0.0 {
            return Err(Error::Reducible(format!(
                "no transition between cells {i} and {}",
                i + 1
            )));
        }
    }
    let mut mu = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=STATIONARY_MAX_ITERS {
        gk.push_forward(&mu, &mut next);
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        residual = next.iter().zip(&mu).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut mu, &mut next);
        if residual < STATIONARY_TOL {
            let tv = total_variation(&mu, &gk.pi_disc);
            return Ok(Stationary {
                distribution: mu,
                iterations: it,
                tv_to_target: tv,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: STATIONARY_MAX_ITERS,
        residual,
    })
}

/// Divergence trajectory of `μ_k = μ₀P^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingTrajectory {
    /// `d_p(μ_k, π)` for `k = 0, 1, …`.
    pub divergences: Vec<f64>,
    /// First `k` with `d_p ≤ ε`; `None` if not reached within the cap.
    pub t_mix: Option<usize>,
}

/// Iterates `μ ← μP` from `mu0` until `d_p(μ, π) ≤ eps` or `max_steps`.
pub fn mixing_trajectory(
    gk: &GridKernel,
    mu0: &[f64],
    eps: f64,
    p: u32,
    max_steps: usize,
) -> Result<MixingTrajectory> {
    if mu0.len() != gk.n() {
        return Err(Error::DimensionMismatch {
            expected: gk.n(),
            got: mu0.len(),
        });
    }
    if !(p == 1 || p == 2) {
        return Err(invalid("p", format!("must be 1 or 2, got {p}")));
    }
    let mass: f64 = mu0.iter().sum();
    if mu0.iter().any(|v| *v < 0.0) || (mass - 1.0).abs() > 1e-9 {
        return Err(invalid("mu0", "must be a probability vector"));
    }
    let mut mu = mu0.to_vec();
    let mut next = vec![0.0; gk.n()];
    let mut divergences = vec![lp_divergence(&mu, &gk.pi_disc, p)];
    if divergences[0] <= eps {
        return Ok(MixingTrajectory {
            divergences,
            t_mix: Some(0),
        });
    }
    for k in 1..=max_steps {
        gk.push_forward(&mu, &mut next);
        std::mem::swap(&mut mu, &mut next);
        let dk = lp_divergence(&mu, &gk.pi_disc, p);
        divergences.push(dk);
        if dk <= eps {
            return Ok(MixingTrajectory {
                divergences,
                t_mix: Some(k),
            });
        }
    }
    Ok(MixingTrajectory {
        divergences,
        t_mix: None,
    })
}

/// The one-dimensional feasible start discretized onto the grid.
pub fn discretize_start(fs: &FeasibleStart, grid: &Grid1d) -> Result<Vec<f64>> {
    if fs.d != 1 {
        return Err(invalid("d", "grid discretization requires dimension 1"));
    }
    let log_mu: Vec<f64> = grid.points().iter().map(|x| -fs.potential(&[*x])).collect();
    let (mu, edge) = grid_masses(&log_mu);
    if edge > MAX_LEAKAGE {
        return Err(Error::GridTooNarrow {
            what: "feasible start",
            mass: edge,
        });
    }
    Ok(mu)
}

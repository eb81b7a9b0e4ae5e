//! Warm initial distribution `μ₀ ∝ exp(−f₀)` with
//! `f₀(x) = K2(‖x − x*‖²/2 + ‖x − x*‖^α/(α(α−1)))`.
//!
//! `μ₀` is isotropic around the target's mode, so it is sampled as a radius
//! drawn by numerical inverse CDF times a uniform direction. Its warmness
//! with respect to a strongly log-concave target has the closed form
//! [`log_beta`].

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::linalg::dist;
use crate::potentials::Potential;
use crate::rng::{stream_rng, unit_direction};

/// Closed-form `log β` of the warm start:
///
/// `(d/2)log(2/m) + logΓ(d/2+1) − logΓ(d/α) − log d + log α + K2/2 + (d/α)log(2K2/(α(α−1)))`.
pub fn log_beta(k2: f64, alpha: f64, m: f64, d: usize) -> f64 {
    let d = d as f64;
    0.5 * d * (2.0 / m).ln() + ln_gamma(0.5 * d + 1.0) - ln_gamma(d / alpha) - d.ln()
        + alpha.ln()
        + 0.5 * k2
        + (d / alpha) * (2.0 * k2 / (alpha * (alpha - 1.0))).ln()
}

/// Nodes of the tabulated radial CDF.
const CDF_NODES: usize = 4096;
/// Log-density drop (relative to the peak) at which the radial table is truncated.
const TAIL_LOG_DROP: f64 = 45.0;

#[derive(Debug, Clone)]
struct RadialTable {
    radii: Vec<f64>,
    cdf: Vec<f64>,
}

impl RadialTable {
    fn invert(&self, u: f64) -> f64 {
        let i = self
            .cdf
            .partition_point(|c| *c < u)
            .clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let (r0, r1) = (self.radii[i - 1], self.radii[i]);
        if c1 > c0 {
            r0 + (r1 - r0) * ((u - c0) / (c1 - c0)).clamp(0.0, 1.0)
        } else {
            r0
        }
    }
}

/// The feasible start for one target.
#[derive(Debug, Clone)]
pub struct FeasibleStart {
    pub k2: f64,
    pub alpha: f64,
    pub m: f64,
    pub d: usize,
    pub mode_shift: Vec<f64>,
    pub log_beta: f64,
    table: RadialTable,
}

impl FeasibleStart {
    /// Builds `μ₀` for dimension `mode_shift.len()` and tabulates its radial CDF.
    pub fn new(k2: f64, alpha: f64, m: f64, mode_shift: Vec<f64>) -> Result<Self> {
        if !(k2 > 0.0 && k2.is_finite()) {
            return Err(invalid("k2", format!("must be positive, got {k2}")));
        }
        if !(alpha >= 2.0 && alpha.is_finite()) {
            return Err(invalid("alpha", format!("must be >= 2, got {alpha}")));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(invalid("m", format!("must be positive, got {m}")));
        }
        let d = mode_shift.len();
        if d == 0 {
            return Err(invalid("mode_shift", "dimension must be positive"));
        }
        let table = tabulate_radial(k2, alpha, d)?;
        Ok(FeasibleStart {
            k2,
            alpha,
            m,
            d,
            log_beta: log_beta(k2, alpha, m, d),
            mode_shift,
            table,
        })
    }

    /// Uses the target's declared `K2`, `α`, `m` and mode.
    pub fn for_target(target: &Potential) -> Result<Self> {
        let c = target.constants();
        Self::new(c.k2, c.alpha, c.m, target.mode().to_vec())
    }

    /// `f₀` evaluated at radius `r` from the mode.
    pub fn radial_potential(&self, r: f64) -> f64 {
        radial_f0(self.k2, self.alpha, r)
    }

    /// `f₀(x)`.
    pub fn potential(&self, x: &[f64]) -> f64 {
        self.radial_potential(dist(x, &self.mode_shift))
    }

    /// Tabulated radial CDF at `r` (piecewise linear between nodes).
    pub fn radial_cdf(&self, r: f64) -> f64 {
        let t = &self.table;
        if r <= 0.0 {
            return 0.0;
        }
        let i = t.radii.partition_point(|x| *x < r);
        if i >= t.radii.len() {
            return 1.0;
        }
        let (r0, r1) = (t.radii[i - 1], t.radii[i]);
        t.cdf[i - 1] + (t.cdf[i] - t.cdf[i - 1]) * (r - r0) / (r1 - r0)
    }

    /// Radius past which the table was truncated.
    pub fn max_radius(&self) -> f64 {
        *self.table.radii.last().expect("non-empty table")
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let r = self.table.invert(rng.random::<f64>());
        let u = unit_direction(rng, self.d);
        self.mode_shift
            .iter()
            .zip(&u)
            .map(|(c, ui)| c + r * ui)
            .collect()
    }

    /// `n` independent draws from `μ₀`.
    pub fn sample_start(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = stream_rng(seed, 0x6d_7530);
        (0..n).map(|_| self.sample_one(&mut rng)).collect()
    }
}

fn radial_f0(k2: f64, alpha: f64, r: f64) -> f64 {
    k2 * (0.5 * r * r + r.powf(alpha) / (alpha * (alpha - 1.0)))
}

/// Unnormalized log radial density `(d−1)log r − f₀(r)`.
fn log_radial(k2: f64, alpha: f64, d: usize, r: f64) -> f64 {
    let jac = if d == 1 { 0.0 } else { (d - 1) as f64 * r.ln() };
    jac - radial_f0(k2, alpha, r)
}

fn tabulate_radial(k2: f64, alpha: f64, d: usize) -> Result<RadialTable> {
    // Peak of the radial density: (d−1)/r = K2(r + r^{α−1}/(α−1)).
    let peak = if d == 1 {
        0.0
    } else {
        let slope = |r: f64| (d - 1) as f64 / r - k2 * (r + r.powf(alpha - 1.0) / (alpha - 1.0));
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while slope(hi) > 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let top = log_radial(k2, alpha, d, peak.max(f64::MIN_POSITIVE));
    let mut r_max = peak.max(1e-3) * 2.0;
    while log_radial(k2, alpha, d, r_max) - top > -TAIL_LOG_DROP {
        r_max *= 1.25;
        if !r_max.is_finite() {
            return Err(Error::Tabulation("radial tail never decays".into()));
        }
    }
    let density = |r: f64| {
        if r <= 0.0 && d > 1 {
            0.0
        } else {
            (log_radial(k2, alpha, d, r) - top).exp()
        }
    };
    let step = r_max / (CDF_NODES - 1) as f64;
    let mut radii = Vec::with_capacity(CDF_NODES);
    let mut cdf = Vec::with_capacity(CDF_NODES);
    let mut acc = 0.0;
    radii.push(0.0);
    cdf.push(0.0);
    for i in 1..CDF_NODES {
        let (a, b) = ((i - 1) as f64 * step, i as f64 * step);
        // Simpson on each cell
        let piece = (b - a) / 6.0 * (density(a) + 4.0 * density(0.5 * (a + b)) + density(b));
        if !piece.is_finite() {
            return Err(Error::Tabulation(format!(
                "non-finite integrand near r = {b}"
            )));
        }
        acc += piece;
        radii.push(b);
        cdf.push(acc);
    }
    if !(acc > 0.0) {
        return Err(Error::Tabulation(
            "radial density integrates to zero".into(),
        ));
    }
    cdf.iter_mut().for_each(|c| *c /= acc);
    Ok(RadialTable { radii, cdf })
}

/// A uniform 1-D grid of cell midpoints on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1d {
    pub lo: f64,
    pub hi: f64,
    pub n_cells: usize,
}

impl Grid1d {
    pub fn new(lo: f64, hi: f64, n_cells: usize) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid("grid", format!("need lo < hi, got [{lo}, {hi}]")));
        }
        if n_cells < 2 {
            return Err(invalid("grid", "need at least two cells"));
        }
        Ok(Grid1d { lo, hi, n_cells })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.n_cells as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let w = self.width();
        (0..self.n_cells)
            .map(|i| self.lo + (i as f64 + 0.5) * w)
            .collect()
    }
}

/// Normalized cell masses of `exp(log_density)` on the grid, plus the mass in
/// the two boundary cells.
pub(crate) fn grid_masses(log_density: &[f64]) -> (Vec<f64>, f64) {
    let top = log_density
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = log_density.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = raw.iter().sum();
    let masses: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let boundary = masses[0] + masses[masses.len() - 1];
    (masses, boundary)
}

/// Outcome of [`verify_warmness_grid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarmnessReport {
    pub max_log_ratio: f64,
    pub log_beta: f64,
    pub ok: bool,
}

/// Checks `sup μ₀/π ≤ β` by quadrature on a 1-D grid.
pub fn verify_warmness_grid(
    fs: &FeasibleStart,
    target: &Potential,
    grid: &Grid1d,
) -> Result<WarmnessReport> {
    if fs.d != 1 || target.dim() != 1 {
        return Err(invalid(
            "d",
            "grid warmness verification requires dimension 1",
        ));
    }
    let xs = grid.points();
    let log_mu: Vec<f64> = xs.iter().map(|x| -fs.potential(&[*x])).collect();
    let log_pi: Vec<f64> = xs.iter().map(|x| -target.value_unchecked(&[*x])).collect();
    let (_, mu_edge) = grid_masses(&log_mu);
    let (_, pi_edge) = grid_masses(&log_pi);
    for (what, mass) in [("feasible start", mu_edge), ("target", pi_edge)] {
        if mass > 1e-10 {
            return Err(Error::GridTooNarrow { what, mass });
        }
    }
    // Cell widths cancel in the ratio of normalized densities.
    let log_z_mu = log_normalizer(&log_mu);
    let log_z_pi = log_normalizer(&log_pi);
    let max_log_ratio = log_mu
        .iter()
        .zip(&log_pi)
        .map(|(lm, lp)| (lm - log_z_mu) - (lp - log_z_pi))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(WarmnessReport {
        max_log_ratio,
        log_beta: fs.log_beta,
        ok: max_log_ratio <= fs.log_beta + 1e-6,
    })
}

fn log_normalizer(log_density: &[f64]) -> f64 {
    let top = log_density
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    top + log_density
        .iter()
        .map(|l| (l - top).exp())
        .sum::<f64>()
        .ln()
}

/// Radii `‖X‖` of `n` draws from the density `∝ exp(−‖x‖^α)` in `d`
/// dimensions, using `‖X‖^α ~ Gamma(d/α, 1)`.
pub fn radial_alpha_radii(alpha: f64, d: usize, n: usize, seed: u64) -> Result<Vec<f64>> {
    if !(alpha >= 2.0) {
        return Err(invalid("alpha", format!("must be >= 2, got {alpha}")));
    }
    if d == 0 {
        return Err(invalid("d", "must be positive"));
    }
    let gamma = Gamma::new(d as f64 / alpha, 1.0).map_err(|e| invalid("alpha", e.to_string()))?;
    let mut rng = stream_rng(seed, 0x7261_6469);
    Ok((0..n)
        .map(|_| gamma.sample(&mut rng).powf(1.0 / alpha))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_beta_examples() {
        assert!((log_beta(1.0, 2.0, 2.0, 2) - 0.5).abs() < 1e-12);
        assert!((log_beta(2.0, 2.0, 2.0, 2) - (1.0 + 2f64.ln())).abs() < 1e-12);
        assert!((log_beta(2.0, 2.0, 2.0, 2) - 1.6931).abs() < 1e-4);
    }

    #[test]
    fn log_beta_grows_like_d_log_d() {
        // (K2, α, m) = (1, 2, 2) collapses to the constant 1/2; a quartic
        // profile exhibits the d·log d growth.
        assert!((log_beta(1.0, 2.0, 2.0, 1000) - 0.5).abs() < 1e-9);
        let ratio = |d: usize| log_beta(1.0, 4.0, 1.0, d) / (d as f64 * (d as f64).ln());
        let (a, b) = (ratio(1000), ratio(10_000));
        assert!((a - b).abs() / a < 0.2, "{a} vs {b}");
    }

    #[test]
    fn log_beta_monotone_in_dimension() {
        for (k2, alpha, m) in [
            (1.0, 2.0, 2.0),
            (1.0, 4.0, 1.0),
            (4.0, 4.0, 1.0),
            (1.0, 3.0, 0.5),
            (5.0, 2.0, 1.0),
        ] {
            let vals: Vec<f64> = (2..=128).map(|d| log_beta(k2, alpha, m, d)).collect();
            for w in vals.windows(2) {
                assert!(w[1] >= w[0] - 1e-12, "({k2}, {alpha}, {m})");
            }
        }
    }

    #[test]
    fn f0_is_zero_at_shifted_mode() {
        let fs = FeasibleStart::new(2.0, 4.0, 1.0, vec![1.0, -1.0]).unwrap();
        assert_eq!(fs.potential(&[1.0, -1.0]), 0.0);
        assert!(fs.potential(&[1.5, -1.0]) > 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(FeasibleStart::new(0.0, 4.0, 1.0, vec![0.0]).is_err());
        assert!(FeasibleStart::new(1.0, 1.0, 1.0, vec![0.0]).is_err());
        assert!(FeasibleStart::new(1.0, 4.0, 0.0, vec![0.0]).is_err());
        assert!(FeasibleStart::new(1.0, 4.0, 1.0, vec![]).is_err());
    }

    #[test]
    fn gaussian_special_case_variance() {
        // α = 2, K2 = 1: f₀ = ‖x‖², i.e. N(0, I/2).
        let fs = FeasibleStart::new(1.0, 2.0, 2.0, vec![0.0; 3]).unwrap();
        let draws = fs.sample_start(100_000, 5);
        for j in 0..3 {
            let var = draws.iter().map(|x| x[j] * x[j]).sum::<f64>() / draws.len() as f64;
            assert!((var - 0.5).abs() < 0.01, "coord {j}: {var}");
        }
    }

    #[test]
    fn draws_centered_on_shift() {
        let shift = vec![2.0, -1.0, 0.5, 0.0];
        let fs = FeasibleStart::new(3.0, 4.0, 1.0, shift.clone()).unwrap();
        let n = 40_000;
        let draws = fs.sample_start(n, 8);
        for j in 0..4 {
            let col: Vec<f64> = draws.iter().map(|x| x[j]).collect();
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            assert!(
                (mean - shift[j]).abs() <= 3.0 * (var / n as f64).sqrt() + 1e-12,
                "coord {j}"
            );
        }
    }

    #[test]
    fn one_dimensional_quartic_matches_quadrature() {
        let fs = FeasibleStart::new(1.0, 4.0, 1.0, vec![0.0]).unwrap();
        let n = 100_000;
        let mut radii: Vec<f64> = fs
            .sample_start(n, 13)
            .into_iter()
            .map(|x| x[0].abs())
            .collect();
        radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // independent oracle: fine trapezoid on [0, 6]
        let m = 200_000;
        let h = 6.0 / m as f64;
        let dens = |r: f64| (-(0.5 * r * r + r.powi(4) / 12.0)).exp();
        let mut cum = vec![0.0; m + 1];
        for i in 1..=m {
            let (a, b) = ((i - 1) as f64 * h, i as f64 * h);
            cum[i] = cum[i - 1] + 0.5 * h * (dens(a) + dens(b));
        }
        let total = cum[m];
        let cdf = |r: f64| {
            let i = ((r / h) as usize).min(m);
            cum[i] / total
        };
        let ks = radii
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let c = cdf(*r);
                (c - i as f64 / n as f64)
                    .abs()
                    .max((c - (i + 1) as f64 / n as f64).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS = {ks}");
    }

    #[test]
    fn table_is_monotone_and_truncated_far_out() {
        for (k2, alpha, d) in [(1.0, 2.0, 1), (4.0, 4.0, 64), (0.5, 3.0, 8)] {
            let fs = FeasibleStart::new(k2, alpha, 1.0, vec![0.0; d]).unwrap();
            assert!(fs.table.cdf.windows(2).all(|w| w[1] >= w[0]));
            assert_eq!(*fs.table.cdf.last().unwrap(), 1.0);
            assert!(fs.radial_cdf(fs.max_radius() * 0.999) > 1.0 - 1e-12);
        }
    }

    #[test]
    fn warmness_identical_densities() {
        let fs = FeasibleStart::new(1.0, 2.0, 2.0, vec![0.0]).unwrap();
        let target = Potential::gaussian(2.0, 1).unwrap();
        let grid = Grid1d::new(-8.0, 8.0, 4001).unwrap();
        let report = verify_warmness_grid(&fs, &target, &grid).unwrap();
        assert!(report.max_log_ratio.abs() < 1e-9);
        assert!(report.ok);
        assert!((report.log_beta - 0.5).abs() < 1e-12);
    }

    #[test]
    fn warmness_pi1_one_dimensional() {
        let target = Potential::pi1(1.0, 1).unwrap();
        let fs = FeasibleStart::new(3.0, 4.0, 1.0, vec![0.0]).unwrap();
        let grid = Grid1d::new(-8.0, 8.0, 8001).unwrap();
        let report = verify_warmness_grid(&fs, &target, &grid).unwrap();
        assert!(report.ok, "{report:?}");
        assert!(report.max_log_ratio > 0.0);
    }

    #[test]
    fn warmness_rejects_narrow_grid() {
        let target = Potential::gaussian(1.0, 1).unwrap();
        let fs = FeasibleStart::new(1.0, 2.0, 1.0, vec![0.0]).unwrap();
        let grid = Grid1d::new(-1.0, 1.0, 101).unwrap();
        assert!(matches!(
            verify_warmness_grid(&fs, &target, &grid),
            Err(Error::GridTooNarrow { .. })
        ));
        let fs2 = FeasibleStart::new(1.0, 2.0, 1.0, vec![0.0; 2]).unwrap();
        assert!(
            verify_warmness_grid(&fs2, &target, &Grid1d::new(-8.0, 8.0, 100).unwrap()).is_err()
        );
    }

    #[test]
    fn f0_dominates_builtin_potentials() {
        for target in [
            Potential::pi1(1.0, 3).unwrap(),
            Potential::pi1(0.3, 3).unwrap(),
            Potential::pi2(3).unwrap(),
            Potential::radial(4.0, 3).unwrap(),
            Potential::radial(2.0, 3).unwrap(),
            Potential::gaussian(2.5, 3).unwrap(),
        ] {
            let fs = FeasibleStart::for_target(&target).unwrap();
            let mut rng = stream_rng(4, 4);
            for _ in 0..2000 {
                let x = crate::rng::uniform_in_ball(&mut rng, &[0.0; 3], 5.0);
                assert!(
                    target.value_unchecked(&x) <= fs.potential(&x) + 1e-9,
                    "{}",
                    target.name()
                );
            }
        }
    }

    #[test]
    fn radial_alpha_identity_alpha_two() {
        // α = 2: ‖X‖² ~ Gamma(d/2, 1), i.e. X ~ N(0, I/2); E‖X‖² = d/2.
        let r = radial_alpha_radii(2.0, 6, 50_000, 1).unwrap();
        let m = r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64;
        assert!((m - 3.0).abs() < 0.05, "{m}");
    }
}

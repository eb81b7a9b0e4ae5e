//! Single-chain convergence diagnostics: autocorrelation, effective sample
//! size and acceptance rate.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::samplers::Trace;

/// Largest lag kept in [`DiagnosticsReport::acf`].
pub const MAX_REPORTED_LAG: usize = 10_000;

/// Minimum series length accepted by [`effective_sample_size`].
pub const MIN_ESS_LENGTH: usize = 100;

/// Biased autocovariances `γ̂(k) = (1/n)Σ(x_t − x̄)(x_{t+k} − x̄)` for every
/// lag `0..n`, computed with a zero-padded FFT.
fn autocovariance_fft(series: &[f64]) -> Vec<f64> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let len = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = series
        .iter()
        .map(|x| Complex::new(x - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(len)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let scale = 1.0 / (len as f64 * n as f64);
    buf.iter().take(n).map(|c| c.re * scale).collect()
}

fn normalized_acf(series: &[f64]) -> Result<Vec<f64>> {
    let acov = autocovariance_fft(series);
    let var = acov[0];
    // Relative test: the FFT leaves round-off of order ε·Σx² in γ̂(0).
    let scale = series.iter().map(|x| x * x).sum::<f64>() / series.len() as f64;
    if !(var > 1e-24 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::ConstantSeries);
    }
    let mut acf: Vec<f64> = acov.iter().map(|g| g / var).collect();
    acf[0] = 1.0;
    Ok(acf)
}

/// Sample autocorrelation `ρ̂(k) = γ̂(k)/γ̂(0)` for `k = 0..=max_lag`.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag < 1 {
        return Err(invalid("max_lag", "must be at least 1"));
    }
    if series.len() <= max_lag {
        return Err(Error::SeriesTooShort {
            needed: max_lag + 1,
            got: series.len(),
        });
    }
    let mut acf = normalized_acf(series)?;
    acf.truncate(max_lag + 1);
    Ok(acf)
}

/// Integrated autocorrelation time from Geyer's initial monotone sequence:
/// pair sums `Γ_k = ρ̂(2k) + ρ̂(2k+1)` are accumulated until the first
/// negative pair, each capped by its predecessor; `τ = 2ΣΓ_k − 1`.
fn integrated_time(acf: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < acf.len() {
        let pair = acf[2 * k] + acf[2 * k + 1];
        if pair < 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        k += 1;
    }
    2.0 * sum - 1.0
}

/// Effective sample size `n/τ`, clamped to `(0, n]`.
pub fn effective_sample_size(series: &[f64]) -> Result<f64> {
    if series.len() < MIN_ESS_LENGTH {
        return Err(Error::SeriesTooShort {
            needed: MIN_ESS_LENGTH,
            got: series.len(),
        });
    }
    let acf = normalized_acf(series)?;
    Ok(ess_from_acf(&acf, series.len()))
}

fn ess_from_acf(acf: &[f64], n: usize) -> f64 {
    let n = n as f64;
    let tau = integrated_time(acf);
    if tau > 0.0 {
        (n / tau).min(n)
    } else {
        n
    }
}

/// Per-coordinate summary of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub ess: Vec<f64>,
    pub acf: Vec<Vec<f64>>,
    pub accept_rate: f64,
    pub n: usize,
}

/// ESS and ACF for every coordinate plus the acceptance rate.
///
/// Coordinates that never move (for example a chain that rejected every
/// proposal) have no defined autocorrelation; their ESS is reported as 1 and
/// their ACF as a single `1.0`.
pub fn summarize(trace: &Trace) -> Result<DiagnosticsReport> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let n = trace.len();
    let max_lag = (n - 1).min(MAX_REPORTED_LAG);
    let mut ess = Vec::with_capacity(trace.dim());
    let mut acf = Vec::with_capacity(trace.dim());
    for j in 0..trace.dim() {
        let series = trace.coordinate(j);
        match normalized_acf(&series) {
            Ok(mut full) => {
                ess.push(ess_from_acf(&full, n));
                full.truncate(max_lag + 1);
                acf.push(full);
            }
            Err(Error::ConstantSeries) => {
                ess.push(1.0);
                acf.push(vec![1.0]);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(DiagnosticsReport {
        ess,
        acf,
        accept_rate: trace.accept_rate(),
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{fill_standard_normal, stream_rng};

    fn white_noise(n: usize, seed: u64) -> Vec<f64> {
        let mut v = vec![0.0; n];
        fill_standard_normal(&mut stream_rng(seed, 0), &mut v);
        v
    }

    fn ar1(n: usize, phi: f64, seed: u64) -> Vec<f64> {
        let eps = white_noise(n, seed);
        let mut out = Vec::with_capacity(n);
        let mut x = eps[0] / (1.0 - phi * phi).sqrt();
        for e in eps {
            x = phi * x + e;
            out.push(x);
        }
        out
    }

    /// Direct O(n·max_lag) oracle.
    fn acf_direct(series: &[f64], max_lag: usize) -> Vec<f64> {
        let n = series.len();
        let mean = series.iter().sum::<f64>() / n as f64;
        let g = |k: usize| {
            (0..n - k)
                .map(|t| (series[t] - mean) * (series[t + k] - mean))
                .sum::<f64>()
                / n as f64
        };
        let g0 = g(0);
        (0..=max_lag).map(|k| g(k) / g0).collect()
    }

    #[test]
    fn fft_matches_direct() {
        let s = ar1(3000, 0.7, 2);
        let fast = autocorrelation(&s, 200).unwrap();
        let slow = acf_direct(&s, 200);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn lag_zero_is_one() {
        let acf = autocorrelation(&[1.0, 3.0, 2.0, 7.0], 2).unwrap();
        assert_eq!(acf[0], 1.0);
    }

    #[test]
    fn alternating_series() {
        let s: Vec<f64> = (0..1000)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let acf = autocorrelation(&s, 1).unwrap();
        assert!((acf[1] + 1.0).abs() < 2.0 / 1000.0);
    }

    #[test]
    fn white_noise_lag_one() {
        let acf = autocorrelation(&white_noise(100_000, 3), 1).unwrap();
        assert!(acf[1].abs() < 0.02);
    }

    #[test]
    fn errors() {
        assert_eq!(autocorrelation(&[2.0; 50], 3), Err(Error::ConstantSeries));
        assert!(autocorrelation(&[1.0, 2.0], 2).is_err());
        assert!(autocorrelation(&[1.0, 2.0], 0).is_err());
        assert_eq!(
            effective_sample_size(&[2.0; 500]),
            Err(Error::ConstantSeries)
        );
        assert!(matches!(
            effective_sample_size(&[1.0, 2.0, 3.0]),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn ess_white_noise() {
        let n = 100_000;
        let ess = effective_sample_size(&white_noise(n, 4)).unwrap();
        assert!((ess - n as f64).abs() <= 0.1 * n as f64, "{ess}");
    }

    #[test]
    fn ess_ar1() {
        let n = 100_000;
        let phi = 0.5;
        let ess = effective_sample_size(&ar1(n, phi, 5)).unwrap();
        let expected = n as f64 * (1.0 - phi) / (1.0 + phi);
        assert!(
            (ess - expected).abs() <= 0.15 * expected,
            "{ess} vs {expected}"
        );
    }

    #[test]
    fn ess_is_clamped_for_anticorrelated_series() {
        let n = 1000;
        let s: Vec<f64> = (0..n)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let ess = effective_sample_size(&s).unwrap();
        assert!(ess > 0.0 && ess <= n as f64);
    }
}

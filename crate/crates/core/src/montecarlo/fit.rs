//! Least-squares fit of an empirical exponent from finite-`n` estimates.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Fitted decay slope of `−ln p̂` against `n`, with its standard error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    /// Blocklengths dropped because their estimate was exactly zero (the
    /// log is undefined there).
    pub excluded: Vec<u32>,
}

/// Fit `−ln p̂ = slope · n + intercept` by least squares over the points
/// with `p̂ > 0`; requires at least three usable points.
pub fn fit_exponent(points: &[(u32, f64)]) -> Result<ExponentFit> {
    let mut excluded = Vec::new();
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|&(n, p)| {
            if p > 0.0 {
                Some((n as f64, -p.ln()))
            } else {
                excluded.push(n);
                None
            }
        })
        .collect();
    if usable.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "exponent fit needs >= 3 positive estimates, got {}",
            usable.len()
        )));
    }
    let k = usable.len() as f64;
    let mean_n: f64 = usable.iter().map(|&(n, _)| n).sum::<f64>() / k;
    let mean_y: f64 = usable.iter().map(|&(_, y)| y).sum::<f64>() / k;
    let sxx: f64 = usable.iter().map(|&(n, _)| (n - mean_n).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "exponent fit needs at least two distinct blocklengths".into(),
        ));
    }
    let sxy: f64 = usable
        .iter()
        .map(|&(n, y)| (n - mean_n) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_n;
    let ss_res: f64 = usable
        .iter()
        .map(|&(n, y)| (y - (slope * n + intercept)).powi(2))
        .sum();
    let stderr = if usable.len() > 2 {
        (ss_res / (k - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(ExponentFit {
        slope,
        stderr,
        intercept,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn exact_exponential_series() {
        let points: Vec<(u32, f64)> = (2..=10).map(|n| (n, (-0.3 * n as f64).exp())).collect();
        let fit = fit_exponent(&points).unwrap();
        assert!((fit.slope - 0.3).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
        assert!(fit.stderr < 1e-12);
    }

    #[test]
    fn constant_series_has_zero_slope() {
        let points: Vec<(u32, f64)> = (1..=6).map(|n| (n, 0.25)).collect();
        let fit = fit_exponent(&points).unwrap();
        assert!(fit.slope.abs() < 1e-12);
    }

    #[test]
    fn noisy_synthetic_recovers_slope_within_two_stderr() {
        let mut rng = SplitMix64::new(44);
        let slope = 0.5;
        let points: Vec<(u32, f64)> = (4..=16)
            .step_by(2)
            .map(|n| {
                // Multiplicative noise of about 5%.
                let noise = 1.0 + 0.05 * (2.0 * rng.next_f64() - 1.0);
                (n, (-slope * n as f64).exp() * noise)
            })
            .collect();
        let fit = fit_exponent(&points).unwrap();
        assert!(
            (fit.slope - slope).abs() <= 2.0 * fit.stderr.max(1e-3),
            "slope {} stderr {}",
            fit.slope,
            fit.stderr
        );
    }

    #[test]
    fn zero_estimates_are_excluded_with_flag() {
        let points = vec![(2u32, 0.5), (4, 0.0), (6, 0.1), (8, 0.02)];
        let fit = fit_exponent(&points).unwrap();
        assert_eq!(fit.excluded, vec![4]);

        let too_few = vec![(2u32, 0.5), (4, 0.0), (6, 0.1)];
        assert!(fit_exponent(&too_few).is_err());
    }
}

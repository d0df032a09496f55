//! Goodness-of-fit for sampler output.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
}

impl ChiSquare {
    /// Whether the statistic stays below the critical value at `alpha`.
    pub fn passes(&self, alpha: f64) -> bool {
        self.statistic < critical_value(self.dof, alpha)
    }
}

/// Pearson's statistic `sum (O - nE)^2 / (nE)` over bins with positive
/// expectation. Observations in a bin of zero expectation make the
/// statistic infinite.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> Result<ChiSquare> {
    if observed.len() != expected.len() {
        return Err(Error::Shape(format!(
            "{} observed bins, {} expected",
            observed.len(),
            expected.len()
        )));
    }
    let total: f64 = expected.iter().sum();
    if expected.iter().any(|&e| e.is_nan() || e < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "expected probabilities must be non-negative and sum to 1 (sum is {total})"
        )));
    }
    let bins = expected.iter().filter(|&&e| e > 0.0).count();
    if bins < 2 {
        return Err(Error::DegenerateBins);
    }
    let n: u64 = observed.iter().sum();
    let n = n as f64;
    let mut statistic = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        if e > 0.0 {
            let ne = n * e;
            statistic += (o as f64 - ne).powi(2) / ne;
        } else if o > 0 {
            statistic = f64::INFINITY;
        }
    }
    Ok(ChiSquare {
        statistic,
        dof: bins - 1,
    })
}

/// Upper-tail critical value: `P(X > c) = alpha` for `X ~ chi2(dof)`.
pub fn critical_value(dof: usize, alpha: f64) -> f64 {
    ChiSquared::new(dof as f64)
        .expect("dof is positive")
        .inverse_cdf(1.0 - alpha)
}

/// Histogram of draws over `k` bins.
pub fn counts(draws: &[usize], k: usize) -> Vec<u64> {
    let mut c = vec![0u64; k];
    for &d in draws {
        c[d] += 1;
    }
    c
}

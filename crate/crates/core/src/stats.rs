//! Goodness-of-fit tests used by the simulation checks.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Degrees of freedom for chi-square tests; effective sample size for KS.
    pub dof: f64,
}

/// Kolmogorov distribution tail `Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("KS test needs two non-empty samples"));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = n * m / (n + m);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(TestResult { statistic: d, p_value: kolmogorov_q(lambda), dof: ne })
}

fn chi2_p_value(statistic: f64, dof: f64) -> Result<f64> {
    let dist = ChiSquared::new(dof).map_err(|e| Error::domain(format!("chi-square with {dof} dof: {e}")))?;
    Ok(dist.sf(statistic))
}

/// Chi-square test that two count vectors over the same categories come from
/// one distribution. Categories empty in both samples are dropped.
pub fn chi2_homogeneity(a: &[u64], b: &[u64]) -> Result<TestResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), got: b.len() });
    }
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return Err(Error::domain("chi-square homogeneity needs two non-empty samples"));
    }
    let total = (na + nb) as f64;
    let mut stat = 0.0;
    let mut used = 0usize;
    for (&ca, &cb) in a.iter().zip(b) {
        let col = (ca + cb) as f64;
        if col == 0.0 {
            continue;
        }
        used += 1;
        for (obs, n) in [(ca, na), (cb, nb)] {
            let expected = col * n as f64 / total;
            stat += (obs as f64 - expected).powi(2) / expected;
        }
    }
    if used < 2 {
        return Ok(TestResult { statistic: 0.0, p_value: 1.0, dof: 0.0 });
    }
    let dof = (used - 1) as f64;
    Ok(TestResult { statistic: stat, p_value: chi2_p_value(stat, dof)?, dof })
}

/// Chi-square goodness of fit of observed counts to category probabilities.
pub fn chi2_gof(observed: &[u64], probs: &[f64]) -> Result<TestResult> {
    if observed.len() != probs.len() {
        return Err(Error::LengthMismatch { expected: probs.len(), got: observed.len() });
    }
    if observed.len() < 2 {
        return Err(Error::domain("chi-square goodness of fit needs at least 2 categories"));
    }
    let n: u64 = observed.iter().sum();
    let mut stat = 0.0;
    for (&o, &p) in observed.iter().zip(probs) {
        if !(p > 0.0) {
            return Err(Error::domain(format!("category probabilities must be > 0, got {p}")));
        }
        let e = p * n as f64;
        stat += (o as f64 - e).powi(2) / e;
    }
    let dof = (observed.len() - 1) as f64;
    Ok(TestResult { statistic: stat, p_value: chi2_p_value(stat, dof)?, dof })
}

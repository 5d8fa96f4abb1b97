//! Total-completion-time dependence in the standard two-process serial model.
//!
//! With probability `p` process `a` runs first (Case I: `T_a = z_a`,
//! `T_b = z_a + z_b`), otherwise `b` runs first (Case II). With `F` the stage
//! distribution function and `c = (f * F)(tau)`:
//!
//! ```text
//! P(T_a <= tau) = p F + (1 - p) c
//! P(T_b <= tau) = (1 - p) F + p c
//! P(T_a <= tau, T_b <= tau) = c
//! ```

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::dist::{ProcessingTimeDistribution, TimeDistribution};
use crate::error::{Error, Result};
use crate::mc::sharded;
use crate::numerics::{convolve_cdf, grid_map, Axis, GridSpec};
use crate::report::{fmt_f64, Sign, ZERO_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Process {
    A,
    B,
}

/// Two iid serial stages; `p` is the probability that `a` is processed first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerialTwoModel<D = ProcessingTimeDistribution> {
    dist: D,
    p: f64,
}

impl<D: TimeDistribution> SerialTwoModel<D> {
    pub fn new(dist: D, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("p must lie in [0, 1], got {p}")));
        }
        Ok(Self { dist, p })
    }

    pub fn dist(&self) -> &D {
        &self.dist
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `(F(tau), (f * F)(tau))`.
    fn cdf_and_conv(&self, tau: f64) -> Result<(f64, f64)> {
        if !tau.is_finite() || tau < 0.0 {
            return Err(Error::domain(format!("tau must be finite and >= 0, got {tau}")));
        }
        Ok((self.dist.cdf(tau)?, convolve_cdf(&self.dist, tau)?))
    }

    /// `P(T_which <= tau)`.
    pub fn marginal_completion_cdf(&self, which: Process, tau: f64) -> Result<f64> {
        let (f, c) = self.cdf_and_conv(tau)?;
        Ok(marginals(self.p, f, c)[which as usize])
    }

    /// `P(T_b <= tau | T_a <= tau) - P(T_b <= tau)`, as `c / m_a - m_b`.
    pub fn dependence_difference(&self, tau: f64) -> Result<f64> {
        Ok(self.dependence_point(tau)?.difference)
    }

    /// The same quantity through `R {1 - F - p (1 - p) (sqrt(c) - F / sqrt(c))^2}`.
    pub fn dependence_difference_factored(&self, tau: f64) -> Result<f64> {
        let (f, c) = self.cdf_and_conv(tau)?;
        let [ma, _] = marginals(self.p, f, c);
        if ma <= 0.0 {
            return Err(null_conditioning(tau));
        }
        if c <= 0.0 {
            // R = 0; the bracket times R reduces to -p (1 - p) F^2 / m_a.
            return Ok(-self.p * (1.0 - self.p) * f * f / ma);
        }
        let r = c / ma;
        let root = c.sqrt();
        let bracket = root - f / root;
        Ok(r * (1.0 - f - self.p * (1.0 - self.p) * bracket * bracket))
    }

    pub fn dependence_point(&self, tau: f64) -> Result<DependencePoint> {
        let (f, c) = self.cdf_and_conv(tau)?;
        let [ma, mb] = marginals(self.p, f, c);
        if ma <= 0.0 {
            return Err(null_conditioning(tau));
        }
        let difference = c / ma - mb;
        Ok(DependencePoint {
            tau,
            f,
            conv: c,
            marginal_a: ma,
            marginal_b: mb,
            r: c / ma,
            r_prime: 1.0 / ma,
            difference,
            sign: Sign::classify(difference, ZERO_TOL),
        })
    }

    /// One [`DependencePoint`] per value of `taus`, in order.
    pub fn dependence_profile(&self, taus: &Axis, workers: Option<usize>) -> Result<DependenceProfile> {
        let grid = GridSpec::new(vec![Axis { name: "tau".into(), ..taus.clone() }])?;
        let points = grid_map(&grid, |x| self.dependence_point(x[0]), workers)?;
        Ok(DependenceProfile { points })
    }
}

fn marginals(p: f64, f: f64, c: f64) -> [f64; 2] {
    [p * f + (1.0 - p) * c, (1.0 - p) * f + p * c]
}

fn null_conditioning(tau: f64) -> Error {
    Error::NullConditioning(format!("P(T_a <= {tau}) = 0"))
}

/// `1 - F - (sqrt(c) - F / sqrt(c))^2 / 4`: the `p = 1/2` bracket, whose sign
/// is the sign of the dependence difference at `p = 1/2`.
pub fn expression3(f_val: f64, conv_val: f64) -> Result<f64> {
    if !(f_val.is_finite() && conv_val.is_finite()) || f_val > 1.0 || conv_val < 0.0 {
        return Err(Error::domain(format!("need 0 < conv <= F <= 1, got F = {f_val}, conv = {conv_val}")));
    }
    if conv_val == 0.0 {
        return Err(Error::domain("the sign bracket divides by sqrt(conv); conv = 0"));
    }
    if conv_val > f_val {
        return Err(Error::Ordering { conv: conv_val, cdf: f_val });
    }
    let root = conv_val.sqrt();
    let d = root - f_val / root;
    Ok(1.0 - f_val - 0.25 * d * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependencePoint {
    pub tau: f64,
    pub f: f64,
    pub conv: f64,
    pub marginal_a: f64,
    pub marginal_b: f64,
    /// `conv / marginal_a`.
    pub r: f64,
    /// `1 / marginal_a`.
    pub r_prime: f64,
    pub difference: f64,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceProfile {
    pub points: Vec<DependencePoint>,
}

impl DependenceProfile {
    /// CSV with columns `tau,F,conv,marginal_a,marginal_b,R,difference,sign`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "tau,F,conv,marginal_a,marginal_b,R,difference,sign")?;
        for p in &self.points {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                fmt_f64(p.tau),
                fmt_f64(p.f),
                fmt_f64(p.conv),
                fmt_f64(p.marginal_a),
                fmt_f64(p.marginal_b),
                fmt_f64(p.r),
                fmt_f64(p.difference),
                p.sign
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    pub n_trials: u64,
    /// Sample covariance of `(T_a, T_b) = (z_a, z_a + z_b)`.
    pub cov_estimate: f64,
    /// Sample variance of `T_1 = z_a` from the same draws.
    pub var_t1_estimate: f64,
    /// Standard error of `cov_estimate - var_t1_estimate`.
    pub difference_stderr: f64,
    pub analytic_var: Option<f64>,
}

/// Monte Carlo check that `Cov(T_a, T_b) = Var(T_1)` under a fixed a-then-b order.
pub fn fixed_order_covariance<D: TimeDistribution>(dist: &D, n_trials: u64, seed: u64) -> Result<CovarianceEstimate> {
    if n_trials < 2 {
        return Err(Error::domain(format!("n_trials must be >= 2, got {n_trials}")));
    }
    let draws: Vec<(f64, f64)> = sharded(n_trials, seed, None, |range, rng| {
        range.map(|_| (rng.sample(dist), rng.sample(dist))).collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    let n = draws.len() as f64;
    let mean_a = draws.iter().map(|d| d.0).sum::<f64>() / n;
    let mean_b = draws.iter().map(|d| d.1).sum::<f64>() / n;
    let (mut saa, mut sab) = (0.0, 0.0);
    for &(a, b) in &draws {
        saa += (a - mean_a) * (a - mean_a);
        sab += (a - mean_a) * (b - mean_b);
    }
    let var_a = saa / (n - 1.0);
    let cov_ab = sab / (n - 1.0);
    // cov(a, a + b) - var(a) = cov(a, b)
    let spread: f64 = draws.iter().map(|&(a, b)| ((a - mean_a) * (b - mean_b) - cov_ab).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(CovarianceEstimate {
        n_trials,
        cov_estimate: var_a + cov_ab,
        var_t1_estimate: var_a,
        difference_stderr: (spread / n).sqrt(),
        analytic_var: dist.variance(),
    })
}

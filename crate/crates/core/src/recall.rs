//! n-item exponential free-recall models and Weibull fitting.
//!
//! In the serial (Vorberg-Ulrich) model the item recalled at stage `j` is
//! chosen with probability `u_i / R_j`, where `R_j` is the summed rate of the
//! items not yet recalled, and stage `j` lasts `Exp(R_j)`. The parallel
//! counterpart races independent `Exp(u_i)` clocks; the two produce the same
//! joint law of order and intercompletion times.
//!
//! Item indices are 0-based. Stage indices `j` in [`rw_mean_ict`] and
//! [`mcgill_stage_density`] are 1-based.

use std::io::{self, Write};

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::{sharded, StreamRng};
use crate::report::fmt_f64;

/// Largest `n` for which [`RecallModel::total_order_probability`] enumerates `n!` orders.
pub const MAX_ENUMERATION: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallModel {
    rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallTrial {
    /// Item recalled at each stage.
    pub order: Vec<usize>,
    /// Duration of each stage.
    pub icts: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecallArchitecture {
    Serial,
    Parallel,
}

impl RecallModel {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::domain("recall model needs at least one item"));
        }
        if let Some(bad) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::domain(format!("rates must be finite and > 0, got {bad}")));
        }
        Ok(Self { rates })
    }

    pub fn equal(n: usize, u: f64) -> Result<Self> {
        Self::new(vec![u; n])
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn n(&self) -> usize {
        self.rates.len()
    }

    fn check_order(&self, order: &[usize]) -> Result<()> {
        let n = self.n();
        if order.len() != n {
            return Err(Error::InvalidPermutation(format!("expected {n} items, got {}", order.len())));
        }
        let mut seen = vec![false; n];
        for &i in order {
            if i >= n {
                return Err(Error::InvalidPermutation(format!("item {i} out of range 0..{n}")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidPermutation(format!("item {i} repeated")));
            }
        }
        Ok(())
    }

    /// `R_j` for each stage of `order`: the summed rate of items not yet recalled.
    fn remaining_rates(&self, order: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; order.len()];
        let mut acc = 0.0;
        for (slot, &i) in out.iter_mut().zip(order).rev() {
            acc += self.rates[i];
            *slot = acc;
        }
        out
    }

    fn check_icts(&self, icts: &[f64]) -> Result<()> {
        if icts.len() != self.n() {
            return Err(Error::LengthMismatch { expected: self.n(), got: icts.len() });
        }
        if let Some(bad) = icts.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::domain(format!("intercompletion times must be finite and >= 0, got {bad}")));
        }
        Ok(())
    }

    /// `prod_j u_{i_j} / R_j`.
    pub fn vu_order_probability(&self, order: &[usize]) -> Result<f64> {
        self.check_order(order)?;
        let remaining = self.remaining_rates(order);
        Ok(order.iter().zip(&remaining).map(|(&i, r)| self.rates[i] / r).product())
    }

    /// Density of the intercompletion times given the order:
    /// `prod_j R_j exp(-R_j t_j)`.
    pub fn vu_ict_density(&self, order: &[usize], icts: &[f64]) -> Result<f64> {
        self.check_order(order)?;
        self.check_icts(icts)?;
        let remaining = self.remaining_rates(order);
        Ok(remaining.iter().zip(icts).map(|(r, t)| r * (-r * t).exp()).product())
    }

    /// Joint density of order and intercompletion times: `prod_j u_{i_j} exp(-R_j t_j)`.
    pub fn vu_joint_density(&self, order: &[usize], icts: &[f64]) -> Result<f64> {
        Ok(self.vu_order_probability(order)? * self.vu_ict_density(order, icts)?)
    }

    /// Sum of [`Self::vu_order_probability`] over all `n!` orders.
    pub fn total_order_probability(&self) -> Result<f64> {
        let n = self.n();
        if n > MAX_ENUMERATION {
            return Err(Error::domain(format!("enumeration is limited to n <= {MAX_ENUMERATION}, got {n}")));
        }
        (0..n).permutations(n).map(|p| self.vu_order_probability(&p)).sum()
    }

    /// Sequential sampler: pick the next item with probability `u_i / R_j`,
    /// then draw the stage duration from `Exp(R_j)`.
    pub fn sample_vu_serial(&self, rng: &mut StreamRng) -> RecallTrial {
        let n = self.n();
        let mut left: Vec<usize> = (0..n).collect();
        let mut order = Vec::with_capacity(n);
        let mut icts = Vec::with_capacity(n);
        while !left.is_empty() {
            let total: f64 = left.iter().map(|&i| self.rates[i]).sum();
            let target = rng.uniform() * total;
            let mut acc = 0.0;
            let mut pick = left.len() - 1;
            for (slot, &i) in left.iter().enumerate() {
                acc += self.rates[i];
                if target < acc {
                    pick = slot;
                    break;
                }
            }
            order.push(left.remove(pick));
            icts.push(rng.exponential(total));
        }
        RecallTrial { order, icts }
    }

    /// Race sampler: independent `Exp(u_i)` completion times, sorted.
    /// Ties go to the lower index.
    pub fn sample_parallel_expo(&self, rng: &mut StreamRng) -> RecallTrial {
        let times: Vec<f64> = self.rates.iter().map(|&u| rng.exponential(u)).collect();
        let mut order: Vec<usize> = (0..self.n()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]).then(a.cmp(&b)));
        let mut prev = 0.0;
        let icts = order
            .iter()
            .map(|&i| {
                let d = times[i] - prev;
                prev = times[i];
                d
            })
            .collect();
        RecallTrial { order, icts }
    }
}

/// `n_trials` trials from the chosen architecture, sharded as in [`crate::mc`].
pub fn simulate_recall(model: &RecallModel, arch: RecallArchitecture, n_trials: u64, seed: u64) -> Result<Vec<RecallTrial>> {
    if n_trials == 0 {
        return Err(Error::domain("n_trials must be >= 1"));
    }
    let shards = sharded(n_trials, seed, None, |range, rng| {
        range
            .map(|_| match arch {
                RecallArchitecture::Serial => model.sample_vu_serial(rng),
                RecallArchitecture::Parallel => model.sample_parallel_expo(rng),
            })
            .collect::<Vec<_>>()
    });
    Ok(shards.into_iter().flatten().collect())
}

/// CSV with columns `trial,position,item,ict,cumulative_time`; `position` is
/// the 1-based stage, `item` the 0-based item index.
pub fn write_recall_csv<W: Write>(trials: &[RecallTrial], mut w: W) -> io::Result<()> {
    writeln!(w, "trial,position,item,ict,cumulative_time")?;
    for (n, trial) in trials.iter().enumerate() {
        let mut total = 0.0;
        for (j, (item, ict)) in trial.order.iter().zip(&trial.icts).enumerate() {
            total += ict;
            writeln!(w, "{},{},{},{},{}", n, j + 1, item, fmt_f64(*ict), fmt_f64(total))?;
        }
    }
    Ok(())
}

/// Equal-rate stage density `(n - j + 1) u exp(-(n - j + 1) u t)` for 1-based `j`.
pub fn mcgill_stage_density(n: usize, u: f64, j: usize, t: f64) -> Result<f64> {
    if j == 0 || j > n {
        return Err(Error::domain(format!("stage index must lie in 1..={n}, got {j}")));
    }
    let r = (n - j + 1) as f64 * u;
    Ok(r * (-r * t).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RwConvention {
    /// `1 / (u (n - j))`, defined for `1 <= j < n`.
    AsPrinted,
    /// `1 / (u (n - j + 1))`, the mean of the equal-rate stage law, `1 <= j <= n`.
    Mcgill,
}

/// Mean duration of stage `j` (1-based) in an equal-rate recall of `n` items.
pub fn rw_mean_ict(n: usize, u: f64, j: usize, convention: RwConvention) -> Result<f64> {
    if !(u.is_finite() && u > 0.0) {
        return Err(Error::domain(format!("rate must be finite and > 0, got {u}")));
    }
    if j == 0 || j > n {
        return Err(Error::domain(format!("stage index must lie in 1..={n}, got {j}")));
    }
    let remaining = match convention {
        RwConvention::AsPrinted => {
            if j == n {
                return Err(Error::domain(format!("as-printed mean 1/(u(n - j)) divides by zero at j = n = {n}")));
            }
            n - j
        }
        RwConvention::Mcgill => n - j + 1,
    };
    Ok(1.0 / (u * remaining as f64))
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite and > 0, got {x}")))
    }
}

/// `sum_i ln f(x_i)` for the Weibull density `k u (u x)^(k-1) exp(-(u x)^k)`.
pub fn loglik_weibull(data: &[f64], k: f64, u: f64) -> Result<f64> {
    check_positive("k", k)?;
    check_positive("u", u)?;
    let mut sum = 0.0;
    for (i, &x) in data.iter().enumerate() {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::domain(format!("datum {i} must be finite and > 0, got {x}")));
        }
        let lux = (u * x).ln();
        sum += k.ln() + u.ln() + (k - 1.0) * lux - (k * lux).exp();
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleFit {
    pub k_hat: f64,
    pub u_hat: f64,
    pub loglik: f64,
    /// The bracket on `k` shrank below `1e-8` relative width inside the search interval.
    pub converged: bool,
    pub iterations: usize,
    pub n: usize,
}

pub const K_BRACKET: (f64, f64) = (0.05, 50.0);
const K_REL_TOL: f64 = 1e-8;
const MAX_ITERATIONS: usize = 500;

/// Profile likelihood in `k` with `u` at its conditional optimum
/// `u(k) = (mean x^k)^(-1/k)`; sums of powers use log-sum-exp.
struct Profile {
    logs: Vec<f64>,
    sum_logs: f64,
}

impl Profile {
    fn log_u(&self, k: f64) -> f64 {
        let m = self.logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = self.logs.iter().map(|l| (k * (l - m)).exp()).sum();
        let log_mean = k * m + s.ln() - (self.logs.len() as f64).ln();
        -log_mean / k
    }

    /// With `u = u(k)`, `sum (u x)^k = n`.
    fn value(&self, k: f64) -> f64 {
        let n = self.logs.len() as f64;
        n * k.ln() + n * k * self.log_u(k) + (k - 1.0) * self.sum_logs - n
    }
}

/// Maximum-likelihood Weibull fit by golden-section search on the profile
/// likelihood over `k` in [`K_BRACKET`], started from the moment estimate
/// `k0 = pi / (sqrt(6) sd(ln x))`.
pub fn weibull_mle(data: &[f64]) -> Result<MleFit> {
    if data.len() < 2 {
        return Err(Error::Degenerate(format!("need at least 2 data points, got {}", data.len())));
    }
    let logs = data
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            check_positive(&format!("datum {i}"), x)?;
            Ok(x.ln())
        })
        .collect::<Result<Vec<f64>>>()?;
    if data.iter().all(|&x| x == data[0]) {
        return Err(Error::Degenerate("all data identical; the shape estimate diverges".into()));
    }
    let n = logs.len() as f64;
    let sum_logs: f64 = logs.iter().sum();
    let mean = sum_logs / n;
    let sd = (logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let profile = Profile { logs, sum_logs };
    let (k_lo, k_hi) = K_BRACKET;
    let k0 = (std::f64::consts::PI / (6f64.sqrt() * sd)).clamp(k_lo, k_hi);

    // Expand geometrically about k0 until the profile drops on both sides.
    let (mut lo, mut hi) = ((k0 / 2.0).max(k_lo), (k0 * 2.0).min(k_hi));
    let f0 = profile.value(k0);
    while lo > k_lo && profile.value(lo) >= f0 {
        lo = (lo / 2.0).max(k_lo);
    }
    while hi < k_hi && profile.value(hi) >= f0 {
        hi = (hi * 2.0).min(k_hi);
    }

    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (profile.value(x1), profile.value(x2));
    let mut iterations = 0;
    while hi - lo > K_REL_TOL * 0.5 * (hi + lo) && iterations < MAX_ITERATIONS {
        iterations += 1;
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = profile.value(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = profile.value(x1);
        }
    }
    let k_hat = 0.5 * (lo + hi);
    let at_edge = (k_hat - k_lo).abs() <= K_REL_TOL * k_lo * 10.0 || (k_hi - k_hat).abs() <= K_REL_TOL * k_hi * 10.0;
    let converged = hi - lo <= K_REL_TOL * 0.5 * (hi + lo) && !at_edge;
    let u_hat = profile.log_u(k_hat).exp();
    Ok(MleFit { k_hat, u_hat, loglik: loglik_weibull(data, k_hat, u_hat)?, converged, iterations, n: data.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{ProcessingTimeDistribution, TimeDistribution};
    use proptest::prelude::*;

    #[test]
    fn order_probability_examples() {
        let m = RecallModel::new(vec![2.0, 1.0]).unwrap();
        assert!((m.vu_order_probability(&[0, 1]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let eq = RecallModel::equal(3, 1.7).unwrap();
        for p in (0..3).permutations(3) {
            assert!((eq.vu_order_probability(&p).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        }
        assert_eq!(RecallModel::new(vec![4.0]).unwrap().vu_order_probability(&[0]).unwrap(), 1.0);
    }

    #[test]
    fn invalid_orders() {
        let m = RecallModel::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(m.vu_order_probability(&[0, 1]), Err(Error::InvalidPermutation(_))));
        assert!(matches!(m.vu_order_probability(&[0, 1, 1]), Err(Error::InvalidPermutation(_))));
        assert!(matches!(m.vu_order_probability(&[0, 1, 3]), Err(Error::InvalidPermutation(_))));
        assert!(matches!(m.vu_ict_density(&[0, 1, 2], &[0.1]), Err(Error::LengthMismatch { .. })));
        assert!(RecallModel::new(vec![]).is_err());
        assert!(RecallModel::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn ict_density_examples() {
        let eq = RecallModel::equal(2, 1.0).unwrap();
        assert!((eq.vu_ict_density(&[0, 1], &[0.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
        let m = RecallModel::new(vec![2.0, 1.0]).unwrap();
        let (t1, t2): (f64, f64) = (0.3, 1.1);
        let expected = 3.0 * (-3.0 * t1).exp() * (-t2).exp();
        assert!((m.vu_ict_density(&[0, 1], &[t1, t2]).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn ict_density_integrates_to_one() {
        // Stage densities factor, so the integral is a product of 1-D integrals.
        use crate::numerics::{integrate, QuadratureConfig};
        let m = RecallModel::new(vec![0.5, 2.0, 1.2]).unwrap();
        let order = [2, 0, 1];
        let base = [0.0; 3];
        let cfg = QuadratureConfig::default();
        let mut total = 1.0;
        for j in 0..3 {
            let d0 = m.vu_ict_density(&order, &base).unwrap();
            let one = integrate(
                |t| {
                    let mut icts = base;
                    icts[j] = t;
                    m.vu_ict_density(&order, &icts).unwrap()
                },
                0.0,
                60.0,
                &cfg,
            )
            .unwrap();
            total *= one / d0 * (m.remaining_rates(&order)[j]);
        }
        assert!((total - 1.0).abs() < 1e-7, "{total}");
    }

    #[test]
    fn mcgill_reduction() {
        for n in 1..6 {
            let m = RecallModel::equal(n, 1.3).unwrap();
            let order: Vec<usize> = (0..n).rev().collect();
            let icts: Vec<f64> = (0..n).map(|j| 0.17 * (j + 1) as f64).collect();
            let product: f64 = (1..=n).map(|j| mcgill_stage_density(n, 1.3, j, icts[j - 1]).unwrap()).product();
            let d = m.vu_ict_density(&order, &icts).unwrap();
            assert!((d - product).abs() <= 1e-12 * product.max(1.0));
        }
    }

    #[test]
    fn rw_examples() {
        assert!((rw_mean_ict(9, 0.5, 5, RwConvention::AsPrinted).unwrap() - 0.5).abs() < 1e-15);
        assert!((rw_mean_ict(2, 1.0, 1, RwConvention::Mcgill).unwrap() - 0.5).abs() < 1e-15);
        let four = rw_mean_ict(4, 0.8, 3, RwConvention::AsPrinted).unwrap();
        let nine = rw_mean_ict(9, 0.8, 8, RwConvention::AsPrinted).unwrap();
        assert_eq!(four, nine);
        assert_eq!(four, 1.0 / 0.8);
        let err = rw_mean_ict(4, 1.0, 4, RwConvention::AsPrinted).unwrap_err();
        assert!(err.to_string().contains("divides by zero"));
        assert_eq!(rw_mean_ict(4, 1.0, 4, RwConvention::Mcgill).unwrap(), 1.0);
    }

    #[test]
    fn single_item_samplers_agree() {
        let m = RecallModel::new(vec![2.5]).unwrap();
        let mut a = StreamRng::from_seed(3);
        let mut b = StreamRng::from_seed(3);
        let s = m.sample_vu_serial(&mut a);
        assert_eq!(s.order, vec![0]);
        let p = m.sample_parallel_expo(&mut b);
        assert_eq!(p.order, vec![0]);
        // the serial sampler consumes one extra uniform for the item choice
        let mut c = StreamRng::from_seed(3);
        c.uniform();
        assert_eq!(s.icts[0], c.exponential(2.5));
    }

    #[test]
    fn race_order_probability() {
        let m = RecallModel::new(vec![2.0, 1.0]).unwrap();
        let trials = simulate_recall(&m, RecallArchitecture::Parallel, 60_000, 8).unwrap();
        let first = trials.iter().filter(|t| t.order[0] == 0).count() as f64 / trials.len() as f64;
        let sigma = (2.0 / 9.0 / trials.len() as f64).sqrt();
        assert!((first - 2.0 / 3.0).abs() < 4.0 * sigma, "{first}");
    }

    #[test]
    fn serial_first_stage_mean() {
        let m = RecallModel::new(vec![0.5, 1.5, 2.0]).unwrap();
        let trials = simulate_recall(&m, RecallArchitecture::Serial, 50_000, 2).unwrap();
        let mean = trials.iter().map(|t| t.icts[0]).sum::<f64>() / trials.len() as f64;
        let sigma = 0.25 / (trials.len() as f64).sqrt();
        assert!((mean - 0.25).abs() < 4.0 * sigma, "{mean}");
    }

    #[test]
    fn recall_csv_layout() {
        let trials = vec![RecallTrial { order: vec![1, 0], icts: vec![0.5, 0.25] }];
        let mut buf = Vec::new();
        write_recall_csv(&trials, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "trial,position,item,ict,cumulative_time");
        assert_eq!(lines[2], "0,2,0,2.5000000000000000e-1,7.5000000000000000e-1");
    }

    #[test]
    fn loglik_examples() {
        assert!((loglik_weibull(&[1.0], 1.0, 1.0).unwrap() - -1.0).abs() < 1e-15);
        let data = [0.3, 1.2, 2.5];
        let expo: f64 = data.iter().map(|x| 0.7f64.ln() - 0.7 * x).sum();
        assert!((loglik_weibull(&data, 1.0, 0.7).unwrap() - expo).abs() < 1e-12);
        assert!(loglik_weibull(&[1.0, -1.0], 1.0, 1.0).is_err());
        assert!(loglik_weibull(&[1.0], 0.0, 1.0).is_err());
    }

    #[test]
    fn mle_degenerate() {
        assert!(matches!(weibull_mle(&[1.0, 1.0]), Err(Error::Degenerate(_))));
        assert!(matches!(weibull_mle(&[1.0]), Err(Error::Degenerate(_))));
        assert!(weibull_mle(&[1.0, 0.0]).is_err());
    }

    fn weibull_sample(k: f64, u: f64, n: u64, seed: u64) -> Vec<f64> {
        let d = ProcessingTimeDistribution::weibull(k, u).unwrap();
        let mut rng = StreamRng::from_seed(seed);
        (0..n).map(|_| rng.sample(&d)).collect()
    }

    #[test]
    fn mle_recovers_exponential_shape() {
        let data = weibull_sample(1.0, 1.0, 5000, 21);
        let fit = weibull_mle(&data).unwrap();
        assert!(fit.converged);
        let se = 0.78 / (data.len() as f64).sqrt();
        assert!((fit.k_hat - 1.0).abs() < 4.0 * se, "{fit:?}");
    }

    #[test]
    fn mle_is_stationary() {
        let data = weibull_sample(0.7, 2.0, 2000, 5);
        let fit = weibull_mle(&data).unwrap();
        let (k, u) = (fit.k_hat, fit.u_hat);
        let l = |k: f64, u: f64| loglik_weibull(&data, k, u).unwrap();
        let h = 1e-4;
        let gk = (l(k + h, u) - l(k - h, u)) / (2.0 * h);
        let gu = (l(k, u + h) - l(k, u - h)) / (2.0 * h);
        let hkk = (l(k + h, u) - 2.0 * l(k, u) + l(k - h, u)) / (h * h);
        let huu = (l(k, u + h) - 2.0 * l(k, u) + l(k, u - h)) / (h * h);
        assert!(gk.abs() < 1e-4 * hkk.abs(), "{gk} vs {hkk}");
        assert!(gu.abs() < 1e-4 * huu.abs(), "{gu} vs {huu}");
        for (dk, du) in [(0.01, 0.0), (0.0, 0.01), (-0.01, 0.01)] {
            assert!(l(k + dk, u + du) < fit.loglik);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn order_probabilities_sum_to_one(rates in prop::collection::vec(0.05f64..20.0, 1..=6)) {
            let m = RecallModel::new(rates).unwrap();
            prop_assert!((m.total_order_probability().unwrap() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn loglik_scale_equivariance(
            data in prop::collection::vec(0.01f64..10.0, 1..20),
            k in 0.2f64..4.0,
            u in 0.1f64..5.0,
            c in 0.1f64..10.0,
        ) {
            let scaled: Vec<f64> = data.iter().map(|x| c * x).collect();
            let lhs = loglik_weibull(&scaled, k, u / c).unwrap();
            let rhs = loglik_weibull(&data, k, u).unwrap() - data.len() as f64 * c.ln();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn mle_beats_nearby_parameters(seed in 0u64..1000, k in 0.4f64..3.0) {
            let data = weibull_sample(k, 1.0, 300, seed);
            let fit = weibull_mle(&data).unwrap();
            prop_assert!(fit.converged);
            for (dk, du) in [(0.02, 0.0), (-0.02, 0.0), (0.0, 0.02), (0.0, -0.02)] {
                prop_assert!(loglik_weibull(&data, fit.k_hat + dk, fit.u_hat + du).unwrap() <= fit.loglik);
            }
        }
    }

    #[test]
    fn sampler_uses_distribution_quantile() {
        let d = ProcessingTimeDistribution::exponential(2.0).unwrap();
        let mut a = StreamRng::from_seed(1);
        let mut b = StreamRng::from_seed(1);
        let x = a.sample(&d);
        assert!((x - d.quantile(b.uniform()).unwrap()).abs() == 0.0);
    }
}

//! Invariant suites behind `archlab verify`. A check that errors is reported
//! as a failure carrying the error text.

use archlab::dist::{ProcessingTimeDistribution as P, TimeDistribution};
use archlab::mc::{run_theorem1_mc, simulate_parallel, StreamRng};
use archlab::numerics::{convolve_cdf, convolve_cdf_with, Axis, ConvolutionMethod, QuadratureConfig};
use archlab::parallel::{ParallelTwoModel, TrendClass};
use archlab::recall::{mcgill_stage_density, rw_mean_ict, simulate_recall, weibull_mle, RecallArchitecture, RecallModel, RecallTrial, RwConvention};
use archlab::serial::{fixed_order_covariance, SerialTwoModel};
use archlab::stats::{chi2_homogeneity, ks_two_sample};
use archlab::Result;
use clap::ValueEnum;
use itertools::Itertools;

use crate::table::Table;

/// Exact fraction of positive sign-bracket values among conditioned pairs.
const THEOREM1_EXACT: f64 = 0.629446;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Analysis,
    Mc,
    Recall,
}

pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

type CheckFn = fn(u64) -> Result<(bool, String)>;

const ANALYSIS: &[(&str, CheckFn)] = &[
    ("quotient_vs_factored", quotient_vs_factored),
    ("fixed_order_nonnegative", fixed_order_nonnegative),
    ("convolution_below_cdf", convolution_below_cdf),
    ("closed_vs_numerical_convolution", closed_vs_numerical),
    ("exponential_dependence_positive", exponential_positive),
    ("uniform_regime_values", uniform_regimes),
    ("parallel_dependence_zero", parallel_zero),
    ("exponential_expr4_linear", exponential_expr4),
    ("conditional_survival_monotone", conditional_monotone),
    ("stage_trend_classes", stage_classes),
];

const MC: &[(&str, CheckFn)] = &[
    ("theorem1_fraction_band", theorem1_band),
    ("theorem1_exact_value", theorem1_exact),
    ("parallel_totals_uncorrelated", parallel_covariance),
    ("fixed_order_covariance", fixed_order_cov),
];

const RECALL: &[(&str, CheckFn)] = &[
    ("order_probabilities_sum_to_one", order_sum),
    ("mcgill_density_reduction", mcgill_reduction),
    ("serial_race_equivalence", race_equivalence),
    ("mcgill_stage_means", stage_means),
    ("weibull_mle_recovery", mle_recovery),
];

pub fn run(suite: Suite, seed: u64) -> Vec<Check> {
    let groups: &[(&'static str, &[(&'static str, CheckFn)])] = &[("analysis", ANALYSIS), ("mc", MC), ("recall", RECALL)];
    let mut out = Vec::new();
    for (name, checks) in groups {
        let selected = match suite {
            Suite::All => true,
            Suite::Analysis => *name == "analysis",
            Suite::Mc => *name == "mc",
            Suite::Recall => *name == "recall",
        };
        if !selected {
            continue;
        }
        for (check, f) in checks.iter() {
            let (pass, detail) = f(seed).unwrap_or_else(|e| (false, format!("error: {e}")));
            out.push(Check { suite: name, name: check, pass, detail });
        }
    }
    out
}

pub fn table(checks: &[Check]) -> Table {
    let mut t = Table::new(&["suite", "check", "status", "detail"]);
    for c in checks {
        t.push(vec![c.suite.into(), c.name.into(), (if c.pass { "PASS" } else { "FAIL" }).into(), c.detail.clone().into()]);
    }
    t
}

/// `count` draws of (distribution, quantile level) from a seeded stream.
fn random_cases(seed: u64, count: usize) -> Result<Vec<(P, f64)>> {
    let mut rng = StreamRng::from_seed(seed);
    (0..count)
        .map(|_| {
            let pick = rng.uniform();
            let a = 0.2 + 4.8 * rng.uniform();
            let b = 0.2 + 4.8 * rng.uniform();
            let d = if pick < 1.0 / 3.0 {
                P::weibull(a, b)?
            } else if pick < 2.0 / 3.0 {
                P::exponential(a)?
            } else {
                P::uniform(a)?
            };
            Ok((d, 0.01 + 0.98 * rng.uniform()))
        })
        .collect()
}

fn quotient_vs_factored(seed: u64) -> Result<(bool, String)> {
    let mut rng = StreamRng::from_seed(seed ^ 0xA11);
    let mut worst = 0.0f64;
    for (d, q) in random_cases(seed, 500)? {
        let tau = d.quantile(q)?;
        let m = SerialTwoModel::new(d, rng.uniform())?;
        worst = worst.max((m.dependence_difference(tau)? - m.dependence_difference_factored(tau)?).abs());
    }
    Ok((worst <= 1e-9, format!("max |quotient - factored| = {worst:.3e} over 500 cases")))
}

fn fixed_order_nonnegative(seed: u64) -> Result<(bool, String)> {
    let mut min = f64::INFINITY;
    for (i, (d, q)) in random_cases(seed + 1, 200)?.into_iter().enumerate() {
        let tau = d.quantile(q)?;
        min = min.min(SerialTwoModel::new(d, (i % 2) as f64)?.dependence_difference(tau)?);
    }
    Ok((min >= -1e-9, format!("min difference at p in {{0, 1}} = {min:.3e}")))
}

fn convolution_below_cdf(seed: u64) -> Result<(bool, String)> {
    let mut worst = f64::NEG_INFINITY;
    for (d, q) in random_cases(seed + 2, 200)? {
        let tau = d.quantile(q)?;
        worst = worst.max(convolve_cdf(&d, tau)? - d.cdf(tau)?);
    }
    Ok((worst <= 1e-12, format!("max (conv - F) = {worst:.3e}")))
}

fn closed_vs_numerical(_: u64) -> Result<(bool, String)> {
    let cfg = QuadratureConfig::default();
    let mut worst = 0.0f64;
    for d in [P::exponential(0.5)?, P::exponential(1.0)?, P::exponential(5.0)?, P::uniform(1.0)?, P::uniform(3.0)?] {
        for i in 1..=100 {
            let tau = 2.5 * d.scale() * i as f64 / 100.0;
            let a = convolve_cdf_with(&d, tau, ConvolutionMethod::ClosedForm, &cfg)?;
            let b = convolve_cdf_with(&d, tau, ConvolutionMethod::Numerical, &cfg)?;
            worst = worst.max((a - b).abs());
        }
    }
    Ok((worst <= 1e-7, format!("max |closed - numerical| = {worst:.3e}")))
}

fn exponential_positive(_: u64) -> Result<(bool, String)> {
    let mut min = f64::INFINITY;
    for u in [0.5, 1.0, 5.0] {
        let d = P::exponential(u)?;
        let m = SerialTwoModel::new(d, 0.5)?;
        for i in 0..100 {
            let tau = d.quantile(0.01 + 0.989 * i as f64 / 99.0)?;
            min = min.min(m.dependence_difference(tau)?);
        }
    }
    Ok((min > 0.0, format!("min difference = {min:.3e}")))
}

fn uniform_regimes(_: u64) -> Result<(bool, String)> {
    let m = SerialTwoModel::new(P::uniform(1.0)?, 0.5)?;
    let a = m.dependence_difference(0.5)?;
    let b = m.dependence_difference(5.0 / 6.0)?;
    let c = m.dependence_difference(2.5)?;
    let pass = (a - 0.0875).abs() <= 1e-9 && (b + 0.0020424836601307117).abs() <= 1e-9 && c.abs() <= 1e-9;
    Ok((pass, format!("tau = v/2: {a:.10}; tau = 5v/6: {b:.10}; tau = 2.5v: {c:.3e}")))
}

fn parallel_zero(seed: u64) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for (d, q) in random_cases(seed + 3, 500)? {
        let tau = d.quantile(q)?;
        worst = worst.max(ParallelTwoModel::new(d).parallel_dependence_difference(tau)?.abs());
    }
    Ok((worst <= 1e-12, format!("max |difference| = {worst:.3e} over 500 cases")))
}

fn exponential_expr4(_: u64) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut negative = true;
    for u in [0.5, 1.0, 3.0] {
        let m = ParallelTwoModel::new(P::exponential(u)?);
        for i in 1..=20 {
            for j in 0..=20 {
                let (t, ta) = (0.5 * i as f64, 0.5 * j as f64);
                let g = m.stage_survival_gap(t, ta)?;
                worst = worst.max((g.expr4 + u * t).abs());
                negative &= g.gap < 0.0;
            }
        }
    }
    Ok((worst <= 1e-12 && negative, format!("max |expr4 + ut| = {worst:.3e}; gap < 0 everywhere: {negative}")))
}

fn conditional_monotone(_: u64) -> Result<(bool, String)> {
    let mut monotone = true;
    for k in [0.3, 0.5, 0.8] {
        let m = ParallelTwoModel::new(P::weibull(k, 1.0)?);
        for t in [0.25, 1.0, 4.0] {
            let vals = (0..50).map(|i| m.conditional_ict_survival(0.1 * i as f64, t)).collect::<Result<Vec<_>>>()?;
            monotone &= vals.windows(2).all(|w| w[1] >= w[0]);
        }
    }
    let e = ParallelTwoModel::new(P::exponential(1.0)?);
    let mut spread = 0.0f64;
    for i in 0..50 {
        spread = spread.max((e.conditional_ict_survival(0.1 * i as f64, 1.0)? - (-1.0f64).exp()).abs());
    }
    Ok((monotone && spread <= 1e-12, format!("weibull k < 1 non-decreasing: {monotone}; exponential spread {spread:.3e}")))
}

fn stage_classes(_: u64) -> Result<(bool, String)> {
    let wide = Axis::new("t", 0.0, 10.0, 50)?;
    let narrow = Axis::new("t", 0.0, 1.0, 50)?;
    let cases = [
        (P::weibull(0.5, 1.0)?, &wide, TrendClass::SecondStageSlower),
        (P::weibull(2.0, 1.0)?, &wide, TrendClass::Mixed),
        (P::weibull(4.0, 1.0)?, &wide, TrendClass::Mixed),
        (P::uniform(2.0)?, &narrow, TrendClass::Mixed),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (d, axis, expected) in cases {
        let class = ParallelTwoModel::new(d).stage_survival_grid(axis, axis, None)?.trend()?.class;
        pass &= class == expected;
        notes.push(format!("{d}: {}", class.as_str()));
    }
    Ok((pass, notes.join("; ")))
}

fn theorem1_band(seed: u64) -> Result<(bool, String)> {
    let r = run_theorem1_mc(1_000_000, seed)?;
    Ok(((r.fraction_positive - 0.62).abs() <= 0.01, format!("fraction {:.6} vs 0.62 +/- 0.01", r.fraction_positive)))
}

fn theorem1_exact(seed: u64) -> Result<(bool, String)> {
    let r = run_theorem1_mc(1_000_000, seed)?;
    let z = (r.fraction_positive - THEOREM1_EXACT) / r.stderr;
    Ok((z.abs() <= 4.0, format!("fraction {:.6} vs exact {THEOREM1_EXACT}, z = {z:.2}", r.fraction_positive)))
}

fn parallel_covariance(seed: u64) -> Result<(bool, String)> {
    let trials = simulate_parallel(&ParallelTwoModel::new(P::exponential(1.0)?), 1_000_000, seed)?;
    let n = trials.len() as f64;
    let ma = trials.iter().map(|t| t.total_a).sum::<f64>() / n;
    let mb = trials.iter().map(|t| t.total_b).sum::<f64>() / n;
    let prods: Vec<f64> = trials.iter().map(|t| (t.total_a - ma) * (t.total_b - mb)).collect();
    let cov = prods.iter().sum::<f64>() / (n - 1.0);
    let se = (prods.iter().map(|p| (p - cov).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    Ok((cov.abs() <= 3.0 * se, format!("cov {cov:.3e}, se {se:.3e}")))
}

fn fixed_order_cov(seed: u64) -> Result<(bool, String)> {
    let mut pass = true;
    let mut notes = Vec::new();
    for d in [P::weibull(1.5, 1.0)?, P::exponential(1.0)?, P::uniform(1.0)?] {
        let e = fixed_order_covariance(&d, 1_000_000, seed)?;
        let z = (e.cov_estimate - e.var_t1_estimate) / e.difference_stderr;
        pass &= z.abs() <= 3.0;
        notes.push(format!("{d}: z = {z:.2}"));
    }
    Ok((pass, notes.join("; ")))
}

fn random_rates(rng: &mut StreamRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| 0.2 + 4.8 * rng.uniform()).collect()
}

fn order_sum(seed: u64) -> Result<(bool, String)> {
    let mut rng = StreamRng::from_seed(seed);
    let mut worst = 0.0f64;
    for n in 2..=6 {
        worst = worst.max((RecallModel::new(random_rates(&mut rng, n))?.total_order_probability()? - 1.0).abs());
    }
    Ok((worst <= 1e-12, format!("max |sum - 1| = {worst:.3e}")))
}

fn mcgill_reduction(_: u64) -> Result<(bool, String)> {
    let (n, u) = (4, 0.7);
    let model = RecallModel::equal(n, u)?;
    let icts = [0.3, 1.1, 0.05, 2.0];
    let order = [2, 0, 3, 1];
    let given_order = model.vu_ict_density(&order, &icts)?;
    let product = (1..=n).map(|j| mcgill_stage_density(n, u, j, icts[j - 1])).product::<Result<f64>>()?;
    let rel = (given_order - product).abs() / product;
    Ok((rel <= 1e-12, format!("density given order {given_order:.6e} vs stage product {product:.6e}")))
}

fn order_index(trials: &[RecallTrial], n: usize) -> Vec<u64> {
    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let mut counts = vec![0u64; perms.len()];
    for t in trials {
        counts[perms.iter().position(|p| *p == t.order).expect("trial order is a permutation")] += 1;
    }
    counts
}

fn race_equivalence(seed: u64) -> Result<(bool, String)> {
    const N: u64 = 100_000;
    let mut rng = StreamRng::from_seed(seed);
    let mut min_p = 1.0f64;
    for n in 2..=4 {
        let model = RecallModel::new(random_rates(&mut rng, n))?;
        let serial = simulate_recall(&model, RecallArchitecture::Serial, N, seed + n as u64)?;
        let race = simulate_recall(&model, RecallArchitecture::Parallel, N, seed + 100 + n as u64)?;
        min_p = min_p.min(chi2_homogeneity(&order_index(&serial, n), &order_index(&race, n))?.p_value);
        for j in 0..n {
            let a: Vec<f64> = serial.iter().map(|t| t.icts[j]).collect();
            let b: Vec<f64> = race.iter().map(|t| t.icts[j]).collect();
            min_p = min_p.min(ks_two_sample(&a, &b)?.p_value);
        }
    }
    Ok((min_p > 0.001, format!("smallest chi-square / KS p-value {min_p:.4}")))
}

fn stage_means(seed: u64) -> Result<(bool, String)> {
    const N: u64 = 100_000;
    let (n, u) = (5, 1.0);
    let trials = simulate_recall(&RecallModel::equal(n, u)?, RecallArchitecture::Serial, N, seed)?;
    let mut zs = Vec::new();
    for j in 1..=n {
        let mean = trials.iter().map(|t| t.icts[j - 1]).sum::<f64>() / N as f64;
        let expected = rw_mean_ict(n, u, j, RwConvention::Mcgill)?;
        zs.push((mean - expected) / (expected / (N as f64).sqrt()));
    }
    let pass = zs.iter().all(|z| z.abs() <= 3.0);
    Ok((pass, format!("stage z-scores [{}]", zs.iter().map(|z| format!("{z:.2}")).join(", "))))
}

fn mle_recovery(seed: u64) -> Result<(bool, String)> {
    let d = P::weibull(0.7, 2.0)?;
    let mut rng = StreamRng::from_seed(seed);
    let data: Vec<f64> = (0..10_000).map(|_| rng.sample(&d)).collect();
    let fit = weibull_mle(&data)?;
    let pass = fit.converged && (0.68..=0.72).contains(&fit.k_hat) && (1.96..=2.04).contains(&fit.u_hat);
    Ok((pass, format!("k_hat {:.5}, u_hat {:.5}", fit.k_hat, fit.u_hat)))
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

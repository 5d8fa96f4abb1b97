//! Seeded sampling: the two-process simulators, the Monte Carlo check on the
//! sign of the p = 1/2 dependence bound, and empirical dependence estimates.
//!
//! All randomness comes from ChaCha8 (`rand_chacha` pinned at 0.9.0). Trials
//! are cut into shards of [`SHARD_LEN`] consecutive indices; shard `s` draws
//! from stream `s` of the generator keyed by the seed. Output therefore
//! depends only on `(seed, n)`, never on the number of worker threads.

use std::io::{self, Write};
use std::ops::Range;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::TimeDistribution;
use crate::error::{Error, Result};
use crate::parallel::ParallelTwoModel;
use crate::report::fmt_f64;
use crate::serial::{expression3, SerialTwoModel};

pub const DEFAULT_SEED: u64 = 0x5EED_2024;

/// Trials per independent substream.
pub const SHARD_LEN: u64 = 8192;

/// Position in the family of substreams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
}

impl RngState {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> StreamRng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(self.stream);
        StreamRng { inner }
    }
}

pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn from_seed(seed: u64) -> Self {
        RngState::new(seed, 0).rng()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1)`.
    pub fn open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Exponential with the given rate, by inversion.
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -(-self.uniform()).ln_1p() / rate
    }

    /// Inverse-CDF draw from `dist`.
    pub fn sample<D: TimeDistribution + ?Sized>(&mut self, dist: &D) -> f64 {
        dist.quantile(self.uniform()).expect("quantile defined on [0, 1)")
    }
}

/// Runs `f` once per shard of `0..n` and returns the shard outputs in order.
pub(crate) fn sharded<T, F>(n: u64, seed: u64, workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>, &mut StreamRng) -> T + Sync + Send,
{
    let shards = n.div_ceil(SHARD_LEN);
    let run = |s: u64| {
        let mut rng = RngState::new(seed, s).rng();
        let lo = s * SHARD_LEN;
        f(lo..(lo + SHARD_LEN).min(n), &mut rng)
    };
    match workers {
        Some(1) => (0..shards).map(run).collect(),
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(|| (0..shards).into_par_iter().map(run).collect()),
            Err(_) => (0..shards).map(run).collect(),
        },
        None => (0..shards).into_par_iter().map(run).collect(),
    }
}

/// Outcome of one `(alpha, beta)` draw of the sign check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairOutcome {
    /// `beta^2 / alpha < 1`: not a candidate.
    Unconditioned,
    Positive,
    NotPositive,
}

/// `alpha` stands for `f * F(tau)`, `beta` for `F(tau)`.
pub fn classify_pair(alpha: f64, beta: f64) -> Result<PairOutcome> {
    if beta * beta / alpha < 1.0 {
        return Ok(PairOutcome::Unconditioned);
    }
    Ok(if expression3(beta, alpha)? > 0.0 { PairOutcome::Positive } else { PairOutcome::NotPositive })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub n_samples: u64,
    pub n_conditioned: u64,
    pub fraction_positive: f64,
    pub stderr: f64,
    pub seed: u64,
}

/// Draws `alpha ~ U[0,1]`, then `beta ~ U[alpha, 1]`; keeps pairs with
/// `beta^2 / alpha >= 1` and reports the fraction of kept pairs whose
/// sign-bracket value is strictly positive, with its binomial standard error.
pub fn run_theorem1_mc(n_samples: u64, seed: u64) -> Result<Theorem1Report> {
    run_theorem1_mc_with_workers(n_samples, seed, None)
}

pub fn run_theorem1_mc_with_workers(n_samples: u64, seed: u64, workers: Option<usize>) -> Result<Theorem1Report> {
    if n_samples == 0 {
        return Err(Error::domain("n_samples must be >= 1"));
    }
    let counts = sharded(n_samples, seed, workers, |range, rng| -> Result<(u64, u64)> {
        let (mut kept, mut positive) = (0u64, 0u64);
        for _ in range {
            let alpha = rng.open01();
            let beta = alpha + (1.0 - alpha) * rng.uniform();
            match classify_pair(alpha, beta)? {
                PairOutcome::Unconditioned => {}
                PairOutcome::Positive => {
                    kept += 1;
                    positive += 1;
                }
                PairOutcome::NotPositive => kept += 1,
            }
        }
        Ok((kept, positive))
    });
    let (mut kept, mut positive) = (0u64, 0u64);
    for c in counts {
        let (k, p) = c?;
        kept += k;
        positive += p;
    }
    if kept == 0 {
        return Err(Error::NoConditionedSamples { n_samples });
    }
    let frac = positive as f64 / kept as f64;
    Ok(Theorem1Report {
        n_samples,
        n_conditioned: kept,
        fraction_positive: frac,
        stderr: (frac * (1.0 - frac) / kept as f64).sqrt(),
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    AFirst,
    BFirst,
}

impl Order {
    pub fn as_str(self) -> &'static str {
        match self {
            Order::AFirst => "a_first",
            Order::BFirst => "b_first",
        }
    }
}

/// One simulated two-process trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub order: Order,
    /// First intercompletion time.
    pub t1: f64,
    /// Second intercompletion time.
    pub t2: f64,
    pub total_a: f64,
    pub total_b: f64,
}

fn collect_trials<F>(n_trials: u64, seed: u64, workers: Option<usize>, draw: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(&mut StreamRng) -> TrialRecord + Sync + Send,
{
    if n_trials == 0 {
        return Err(Error::domain("n_trials must be >= 1"));
    }
    let shards = sharded(n_trials, seed, workers, |range, rng| range.map(|_| draw(rng)).collect::<Vec<_>>());
    Ok(shards.into_iter().flatten().collect())
}

/// Case I (a first) with probability `p`: `T_a = z_a`, `T_b = z_a + z_b`;
/// Case II: `T_b = z_b`, `T_a = z_b + z_a`.
pub fn simulate_serial<D: TimeDistribution>(model: &SerialTwoModel<D>, n_trials: u64, seed: u64) -> Result<Vec<TrialRecord>> {
    simulate_serial_with_workers(model, n_trials, seed, None)
}

pub fn simulate_serial_with_workers<D: TimeDistribution>(
    model: &SerialTwoModel<D>,
    n_trials: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<Vec<TrialRecord>> {
    collect_trials(n_trials, seed, workers, |rng| serial_trial(model, rng))
}

fn serial_trial<D: TimeDistribution>(model: &SerialTwoModel<D>, rng: &mut StreamRng) -> TrialRecord {
    let a_first = rng.uniform() < model.p();
    let za = rng.sample(model.dist());
    let zb = rng.sample(model.dist());
    if a_first {
        TrialRecord { order: Order::AFirst, t1: za, t2: zb, total_a: za, total_b: za + zb }
    } else {
        TrialRecord { order: Order::BFirst, t1: zb, t2: za, total_a: zb + za, total_b: zb }
    }
}

/// Streams the trials of [`simulate_serial`] (same seed, same draws) into
/// per-`tau` cell counts without storing them, then estimates the dependence
/// difference at each `tau`.
pub fn serial_dependence_streamed<D: TimeDistribution>(
    model: &SerialTwoModel<D>,
    taus: &[f64],
    n_trials: u64,
    seed: u64,
) -> Result<Vec<DependenceEstimate>> {
    if n_trials == 0 {
        return Err(Error::domain("n_trials must be >= 1"));
    }
    let shards = sharded(n_trials, seed, None, |range, rng| {
        let mut counts = vec![CellCounts::default(); taus.len()];
        for _ in range {
            let trial = serial_trial(model, rng);
            for (c, &tau) in counts.iter_mut().zip(taus) {
                c.add(&trial, tau);
            }
        }
        counts
    });
    let mut total = vec![CellCounts::default(); taus.len()];
    for shard in shards {
        for (t, c) in total.iter_mut().zip(shard) {
            t.merge(&c);
        }
    }
    total.iter().zip(taus).map(|(c, &tau)| c.estimate(tau)).collect()
}

/// Both channels start together; `t1 = min`, `t2 = max - min`, totals are the raw draws.
/// Exact ties count as `a_first`.
pub fn simulate_parallel<D: TimeDistribution>(model: &ParallelTwoModel<D>, n_trials: u64, seed: u64) -> Result<Vec<TrialRecord>> {
    simulate_parallel_with_workers(model, n_trials, seed, None)
}

pub fn simulate_parallel_with_workers<D: TimeDistribution>(
    model: &ParallelTwoModel<D>,
    n_trials: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<Vec<TrialRecord>> {
    let dist = model.dist();
    collect_trials(n_trials, seed, workers, |rng| {
        let za = rng.sample(dist);
        let zb = rng.sample(dist);
        let (order, lo, hi) = if za <= zb { (Order::AFirst, za, zb) } else { (Order::BFirst, zb, za) };
        TrialRecord { order, t1: lo, t2: hi - lo, total_a: za, total_b: zb }
    })
}

/// Trace CSV: `trial,order,t1,t2,total_a,total_b`.
pub fn write_trace_csv<W: Write>(trials: &[TrialRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "trial,order,t1,t2,total_a,total_b")?;
    for (i, t) in trials.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            i,
            t.order.as_str(),
            fmt_f64(t.t1),
            fmt_f64(t.t2),
            fmt_f64(t.total_a),
            fmt_f64(t.total_b)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependenceEstimate {
    pub tau: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub n_conditioned: u64,
}

/// Joint counts of `(T_a <= tau, T_b <= tau)`, indexed `[a done][b done]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub cells: [[u64; 2]; 2],
}

impl CellCounts {
    pub fn add(&mut self, t: &TrialRecord, tau: f64) {
        self.cells[(t.total_a <= tau) as usize][(t.total_b <= tau) as usize] += 1;
    }

    pub fn merge(&mut self, other: &CellCounts) {
        for a in 0..2 {
            for b in 0..2 {
                self.cells[a][b] += other.cells[a][b];
            }
        }
    }

    /// Plug-in conditional minus marginal frequency with a delta-method
    /// standard error.
    pub fn estimate(&self, tau: f64) -> Result<DependenceEstimate> {
        let cells = &self.cells;
        let n = cells.iter().flatten().sum::<u64>() as f64;
        let n_a = cells[1][0] + cells[1][1];
        if n_a == 0 {
            return Err(Error::NullConditioning(format!("no trial has total_a <= {tau}")));
        }
        let p_a = n_a as f64 / n;
        let p_b = (cells[0][1] + cells[1][1]) as f64 / n;
        let p_b_given_a = cells[1][1] as f64 / n_a as f64;

        // influence of one observation in cell (a, b)
        let influence = |a: usize, b: usize| {
            let (ia, ib) = (a as f64, b as f64);
            ia * (ib - p_b_given_a) / p_a - (ib - p_b)
        };
        let (mut mean, mut second) = (0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                let w = cells[a][b] as f64 / n;
                let v = influence(a, b);
                mean += w * v;
                second += w * v * v;
            }
        }
        Ok(DependenceEstimate {
            tau,
            estimate: p_b_given_a - p_b,
            stderr: ((second - mean * mean).max(0.0) / n).sqrt(),
            n_conditioned: n_a,
        })
    }
}

/// Plug-in `P(T_b <= tau | T_a <= tau) - P(T_b <= tau)` over `trials`.
pub fn empirical_dependence(trials: &[TrialRecord], tau: f64) -> Result<DependenceEstimate> {
    let mut counts = CellCounts::default();
    for t in trials {
        counts.add(t, tau);
    }
    counts.estimate(tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ProcessingTimeDistribution;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = RngState::new(7, 3).rng();
        let mut b = RngState::new(7, 3).rng();
        let mut c = RngState::new(7, 4).rng();
        let xa: Vec<u64> = (0..4).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..4).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..4).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn uniform_ranges() {
        let mut rng = StreamRng::from_seed(1);
        for _ in 0..10_000 {
            let u = rng.uniform();
            assert!((0.0..1.0).contains(&u));
            let o = rng.open01();
            assert!(o > 0.0 && o < 1.0);
        }
    }

    #[test]
    fn boundary_pair_is_not_positive() {
        assert_eq!(classify_pair(1.0, 1.0).unwrap(), PairOutcome::NotPositive);
        assert_eq!(classify_pair(0.5, 0.6).unwrap(), PairOutcome::Unconditioned);
        // alpha = 0.25, beta = 0.6: (3) = 0.4 - (0.35)^2 / 1 > 0
        assert_eq!(classify_pair(0.25, 0.6).unwrap(), PairOutcome::Positive);
    }

    #[test]
    fn theorem1_small_runs_are_deterministic() {
        let a = run_theorem1_mc(100, DEFAULT_SEED).unwrap();
        let b = run_theorem1_mc(100, DEFAULT_SEED).unwrap();
        assert_eq!(a, b);
        assert!(run_theorem1_mc(0, 1).is_err());
    }

    #[test]
    fn theorem1_worker_count_does_not_matter() {
        let n = 3 * SHARD_LEN + 17;
        let one = run_theorem1_mc_with_workers(n, 11, Some(1)).unwrap();
        let many = run_theorem1_mc_with_workers(n, 11, Some(4)).unwrap();
        assert_eq!(one, many);
    }

    #[test]
    fn serial_p_one_is_always_case_one() {
        let m = SerialTwoModel::new(ProcessingTimeDistribution::exponential(1.0).unwrap(), 1.0).unwrap();
        let trials = simulate_serial(&m, 5000, 3).unwrap();
        assert!(trials.iter().all(|t| t.order == Order::AFirst && t.total_a == t.t1));
        assert!(trials.iter().all(|t| t.total_b == t.t1 + t.t2));
    }

    #[test]
    fn serial_simulation_is_worker_independent() {
        let m = SerialTwoModel::new(ProcessingTimeDistribution::uniform(1.0).unwrap(), 0.3).unwrap();
        let n = 2 * SHARD_LEN + 5;
        let a = simulate_serial_with_workers(&m, n, 5, Some(1)).unwrap();
        let b = simulate_serial_with_workers(&m, n, 5, Some(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parallel_records_are_consistent() {
        let m = ParallelTwoModel::new(ProcessingTimeDistribution::weibull(1.5, 2.0).unwrap());
        for t in simulate_parallel(&m, 20_000, 9).unwrap() {
            let max = t.total_a.max(t.total_b);
            assert!((t.t1 + t.t2 - max).abs() <= f64::EPSILON * max, "{t:?}");
            assert_eq!(t.t1, t.total_a.min(t.total_b));
            assert_eq!(t.order == Order::AFirst, t.total_a <= t.total_b);
        }
    }

    #[test]
    fn empirical_dependence_requires_conditioning_mass() {
        let trials = vec![TrialRecord { order: Order::AFirst, t1: 1.0, t2: 1.0, total_a: 1.0, total_b: 2.0 }];
        assert!(matches!(empirical_dependence(&trials, 0.5), Err(Error::NullConditioning(_))));
        let est = empirical_dependence(&trials, 1.5).unwrap();
        assert_eq!(est.estimate, 0.0);
    }

    #[test]
    fn streamed_estimate_matches_materialised() {
        let m = SerialTwoModel::new(ProcessingTimeDistribution::uniform(1.0).unwrap(), 0.5).unwrap();
        let n = 3 * SHARD_LEN + 100;
        let taus = [0.3, 0.9, 1.4];
        let trials = simulate_serial(&m, n, 17).unwrap();
        let streamed = serial_dependence_streamed(&m, &taus, n, 17).unwrap();
        for (s, &tau) in streamed.iter().zip(&taus) {
            assert_eq!(*s, empirical_dependence(&trials, tau).unwrap());
        }
    }

    #[test]
    fn trace_csv_header() {
        let trials = vec![TrialRecord { order: Order::BFirst, t1: 0.5, t2: 0.25, total_a: 0.75, total_b: 0.5 }];
        let mut buf = Vec::new();
        write_trace_csv(&trials, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("trial,order,t1,t2,total_a,total_b"));
        assert!(lines.next().unwrap().starts_with("0,b_first,5.0000000000000000e-1,"));
    }
}

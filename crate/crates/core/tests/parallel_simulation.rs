use archlab::dist::{ProcessingTimeDistribution as P, TimeDistribution};
use archlab::mc::{empirical_dependence, simulate_parallel, Order, StreamRng};
use archlab::parallel::ParallelTwoModel;
use archlab::stats::ks_two_sample;

const N: u64 = 1_000_000;

#[test]
fn totals_are_uncorrelated() {
    for (i, d) in [P::exponential(1.0).unwrap(), P::weibull(0.5, 2.0).unwrap(), P::uniform(3.0).unwrap()].into_iter().enumerate() {
        let m = ParallelTwoModel::new(d);
        let trials = simulate_parallel(&m, N, 40 + i as u64).unwrap();
        let n = trials.len() as f64;
        let ma = trials.iter().map(|t| t.total_a).sum::<f64>() / n;
        let mb = trials.iter().map(|t| t.total_b).sum::<f64>() / n;
        let prods: Vec<f64> = trials.iter().map(|t| (t.total_a - ma) * (t.total_b - mb)).collect();
        let cov = prods.iter().sum::<f64>() / (n - 1.0);
        let se = (prods.iter().map(|p| (p - cov).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        assert!(cov.abs() <= 3.0 * se, "{}: {cov} (se {se})", m.dist());

        for q in [0.2, 0.5, 0.8] {
            let tau = m.dist().quantile(q).unwrap();
            let e = empirical_dependence(&trials, tau).unwrap();
            assert!(e.estimate.abs() <= 3.0 * e.stderr, "{} tau={tau}: {e:?}", m.dist());
        }
    }
}

#[test]
fn exponential_second_stage_is_memoryless() {
    let m = ParallelTwoModel::new(P::exponential(1.0).unwrap());
    let trials = simulate_parallel(&m, 100_000, 2).unwrap();
    let t2: Vec<f64> = trials.iter().map(|t| t.t2).collect();
    let mut rng = StreamRng::from_seed(99);
    let reference: Vec<f64> = (0..100_000).map(|_| rng.exponential(1.0)).collect();
    let ks = ks_two_sample(&t2, &reference).unwrap();
    assert!(ks.p_value > 0.001, "{ks:?}");
}

#[test]
fn uniform_order_is_symmetric() {
    let m = ParallelTwoModel::new(P::uniform(1.0).unwrap());
    let trials = simulate_parallel(&m, N, 6).unwrap();
    let frac = trials.iter().filter(|t| t.order == Order::AFirst).count() as f64 / N as f64;
    assert!((frac - 0.5).abs() <= 3.0 * (0.25 / N as f64).sqrt(), "{frac}");
}

/// `P(T_b > t | second finisher, first finisher in a small bin around T_a)`.
#[test]
fn conditional_survival_matches_binned_simulation() {
    let cases = [(P::weibull(0.5, 1.0).unwrap(), 0.8, 0.6), (P::weibull(2.0, 1.0).unwrap(), 0.5, 0.4), (P::uniform(2.0).unwrap(), 0.5, 0.5)];
    for (i, (d, ta, t)) in cases.into_iter().enumerate() {
        let m = ParallelTwoModel::new(d);
        let trials = simulate_parallel(&m, 2 * N, 70 + i as u64).unwrap();
        let half = 0.01;
        let bin: Vec<_> = trials.iter().filter(|r| (r.t1 - ta).abs() <= half).collect();
        let n = bin.len() as f64;
        let hat = bin.iter().filter(|r| r.t2 > t).count() as f64 / n;
        let exact = m.conditional_ict_survival(ta, t).unwrap();
        let sigma = (exact * (1.0 - exact) / n).sqrt();
        let lo = m.conditional_ict_survival(ta - half, t).unwrap();
        let hi = m.conditional_ict_survival(ta + half, t).unwrap();
        let bias = (lo - exact).abs().max((hi - exact).abs());
        assert!((hat - exact).abs() <= 3.0 * sigma + bias, "{}: {hat} vs {exact}", m.dist());
    }
}

#[test]
fn shape_below_one_survival_rises_with_first_stage() {
    for k in [0.3, 0.5, 0.8] {
        let m = ParallelTwoModel::new(P::weibull(k, 1.0).unwrap());
        for t in [0.1, 1.0, 3.0] {
            let vals: Vec<f64> = (0..50).map(|i| m.conditional_ict_survival(0.1 * i as f64, t).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[1] >= w[0]), "k={k} t={t}");
        }
    }
    let m = ParallelTwoModel::new(P::weibull(1.0, 1.0).unwrap());
    for t in [0.1, 1.0, 3.0] {
        for i in 0..50 {
            let s = m.conditional_ict_survival(0.1 * i as f64, t).unwrap();
            assert!((s - (-t).exp()).abs() <= 1e-12);
        }
    }
}

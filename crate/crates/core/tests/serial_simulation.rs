use archlab::dist::{ProcessingTimeDistribution as P, TimeDistribution};
use archlab::mc::{self, empirical_dependence, serial_dependence_streamed, simulate_serial, Order};
use archlab::numerics::convolve_cdf;
use archlab::serial::{Process, SerialTwoModel};

const N: u64 = 1_000_000;

fn families() -> Vec<P> {
    vec![P::weibull(0.6, 1.0).unwrap(), P::weibull(2.0, 1.0).unwrap(), P::exponential(1.0).unwrap(), P::uniform(1.0).unwrap()]
}

fn taus(d: &P) -> Vec<f64> {
    (1..=10).map(|i| 1.8 * d.quantile(0.09 * i as f64).unwrap()).collect()
}

#[test]
fn empirical_dependence_matches_analytic() {
    for (i, d) in families().into_iter().enumerate() {
        let ts = taus(&d);
        let m = SerialTwoModel::new(d, 0.5).unwrap();
        let est = serial_dependence_streamed(&m, &ts, N, 10 + i as u64).unwrap();
        for e in est {
            let exact = m.dependence_difference(e.tau).unwrap();
            assert!((e.estimate - exact).abs() <= 3.0 * e.stderr, "{} tau={}: {} vs {} (se {})", m.dist(), e.tau, e.estimate, exact, e.stderr);
        }
    }
}

#[test]
fn marginals_match_simulation() {
    for (i, d) in families().into_iter().enumerate() {
        let ts = taus(&d);
        let m = SerialTwoModel::new(d, 0.3).unwrap();
        let trials = simulate_serial(&m, N, 20 + i as u64).unwrap();
        for &tau in &ts {
            let p = m.marginal_completion_cdf(Process::A, tau).unwrap();
            let hat = trials.iter().filter(|t| t.total_a <= tau).count() as f64 / N as f64;
            let sigma = (p * (1.0 - p) / N as f64).sqrt();
            assert!((hat - p).abs() <= 3.0 * sigma, "{} tau={tau}", m.dist());
        }
    }
}

#[test]
fn exponential_totals() {
    let m = SerialTwoModel::new(P::exponential(1.0).unwrap(), 0.5).unwrap();
    let trials = simulate_serial(&m, N, 3).unwrap();
    let n = trials.len() as f64;
    let mean_b = trials.iter().map(|t| t.total_b).sum::<f64>() / n;
    // Var(total_b) = E[Var] + Var[E] = 1.5 + 0.25
    let sigma = (1.75f64 / n).sqrt();
    assert!((mean_b - 1.5).abs() <= 3.0 * sigma, "{mean_b}");

    for tau in [0.5, 1.0, 2.0, 4.0] {
        let c = convolve_cdf(m.dist(), tau).unwrap();
        let hat = trials.iter().filter(|t| t.total_a.max(t.total_b) <= tau).count() as f64 / n;
        assert!((hat - c).abs() <= 3.0 * (c * (1.0 - c) / n).sqrt(), "tau={tau}");
    }
    let frac_a = trials.iter().filter(|t| t.order == Order::AFirst).count() as f64 / n;
    assert!((frac_a - 0.5).abs() <= 3.0 * (0.25 / n).sqrt());
}

#[test]
fn exponential_estimate_is_positive() {
    let m = SerialTwoModel::new(P::exponential(2.0).unwrap(), 0.5).unwrap();
    let trials = simulate_serial(&m, N, 5).unwrap();
    let e = empirical_dependence(&trials, 0.5).unwrap();
    assert!(e.estimate > 3.0 * e.stderr, "{e:?}");
    assert!((e.estimate - 0.14140509473259866).abs() <= 3.0 * e.stderr);
}

#[test]
fn uniform_small_negative_effect() {
    let m = SerialTwoModel::new(P::uniform(1.0).unwrap(), 0.5).unwrap();
    let est = serial_dependence_streamed(&m, &[5.0 / 6.0], 10_000_000, 7).unwrap()[0];
    assert!(est.estimate < 0.0, "{est:?}");
    assert!((est.estimate - -0.0020424836601307117).abs() <= 3.0 * est.stderr);
}

#[test]
fn trials_are_reproducible() {
    let m = SerialTwoModel::new(P::weibull(1.3, 2.0).unwrap(), 0.4).unwrap();
    let a = simulate_serial(&m, 50_000, mc::DEFAULT_SEED).unwrap();
    let b = simulate_serial(&m, 50_000, mc::DEFAULT_SEED).unwrap();
    assert_eq!(a, b);
}

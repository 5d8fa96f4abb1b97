//! Quadrature, the iid convolution `f * F`, and grid evaluation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::TimeDistribution;
use crate::error::{Error, Result};
use crate::report::fmt_f64;

/// Hard cap on integrand evaluations per call.
const MAX_EVALUATIONS: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub max_depth: u32,
    /// Points where the integrand is split; must be sorted ascending.
    pub breakpoints: Vec<f64>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-8, max_depth: 40, breakpoints: Vec::new() }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::domain(format!("abs_tol must be > 0, got {}", self.abs_tol)));
        }
        if self.max_depth < 1 {
            return Err(Error::domain("max_depth must be >= 1"));
        }
        if self.breakpoints.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::domain("breakpoints must be sorted ascending"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    flm: f64,
    frm: f64,
    left: f64,
    right: f64,
    estimate: f64,
    err: f64,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

struct Integrand<F> {
    f: F,
    evaluations: usize,
}

impl<F: Fn(f64) -> f64> Integrand<F> {
    fn eval(&mut self, x: f64) -> Result<f64> {
        self.evaluations += 1;
        let y = (self.f)(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::domain(format!("integrand is not finite at x = {x}")))
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn panel(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, depth: u32) -> Result<Panel> {
        let m = 0.5 * (a + b);
        let flm = self.eval(0.5 * (a + m))?;
        let frm = self.eval(0.5 * (m + b))?;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        Ok(Panel {
            a,
            b,
            fa,
            fm,
            fb,
            flm,
            frm,
            left,
            right,
            estimate: left + right + delta / 15.0,
            err: delta.abs(),
            depth,
        })
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// Refinement is global: the panel with the largest local error estimate is
/// bisected until the summed estimate drops below `cfg.abs_tol`. The interval
/// is split at every breakpoint strictly inside `(a, b)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<f64> {
    integrate_detailed(f, a, b, cfg).map(|q| q.value)
}

pub fn integrate_detailed<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<Quadrature> {
    cfg.validate()?;
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::domain(format!("invalid integration interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(Quadrature { value: 0.0, error_estimate: 0.0, evaluations: 0 });
    }

    let mut cuts = vec![a];
    cuts.extend(cfg.breakpoints.iter().copied().filter(|&x| x > a && x < b));
    cuts.push(b);

    let mut integrand = Integrand { f, evaluations: 0 };
    let mut heap = BinaryHeap::new();
    const INITIAL_PANELS: usize = 4;
    for seg in cuts.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        let h = (hi - lo) / INITIAL_PANELS as f64;
        // Endpoints sit exactly on breakpoints; nudge evaluation inward by
        // sampling one-sided values so jumps at cuts do not leak across.
        for i in 0..INITIAL_PANELS {
            let pa = lo + h * i as f64;
            let pb = if i + 1 == INITIAL_PANELS { hi } else { lo + h * (i + 1) as f64 };
            let fa = integrand.eval(one_sided(pa, pb, true))?;
            let fb = integrand.eval(one_sided(pa, pb, false))?;
            let fm = integrand.eval(0.5 * (pa + pb))?;
            let whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb);
            heap.push(integrand.panel(pa, pb, fa, fm, fb, whole, 0)?);
        }
    }

    let mut total_err: f64 = heap.iter().map(|p| p.err).sum();
    while total_err > cfg.abs_tol {
        let worst = heap.pop().expect("non-empty heap");
        if worst.depth >= cfg.max_depth || integrand.evaluations >= MAX_EVALUATIONS {
            heap.push(worst);
            return Err(Error::Convergence {
                estimate: heap.iter().map(|p| p.estimate).sum(),
                error_estimate: heap.iter().map(|p| p.err).sum(),
            });
        }
        let m = 0.5 * (worst.a + worst.b);
        let l = integrand.panel(worst.a, m, worst.fa, worst.flm, worst.fm, worst.left, worst.depth + 1)?;
        let r = integrand.panel(m, worst.b, worst.fm, worst.frm, worst.fb, worst.right, worst.depth + 1)?;
        total_err += l.err + r.err - worst.err;
        heap.push(l);
        heap.push(r);
        if heap.len() % 256 == 0 {
            total_err = heap.iter().map(|p| p.err).sum();
        }
    }

    Ok(Quadrature {
        value: heap.iter().map(|p| p.estimate).sum(),
        error_estimate: heap.iter().map(|p| p.err).sum(),
        evaluations: integrand.evaluations,
    })
}

/// Panel endpoint pulled a hair toward the panel interior.
fn one_sided(a: f64, b: f64, at_left: bool) -> f64 {
    let eps = 1e-13 * (b - a);
    if at_left {
        a + eps
    } else {
        b - eps
    }
}

/// How [`convolve_cdf_with`] obtains `f * F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvolutionMethod {
    /// Closed form when the family has one, otherwise quadrature.
    #[default]
    Auto,
    ClosedForm,
    Numerical,
}

/// `(f * F)(tau) = P(z_a + z_b <= tau)` for iid `z_a, z_b`.
pub fn convolve_cdf<D: TimeDistribution + ?Sized>(dist: &D, tau: f64) -> Result<f64> {
    convolve_cdf_with(dist, tau, ConvolutionMethod::Auto, &QuadratureConfig::default())
}

/// `(f * F)(tau) = int_0^tau f(x) F(tau - x) dx`.
///
/// The numerical path folds the integral about `tau / 2`:
/// `F(tau/2)^2 + 2 int_0^{tau/2} F(x) f(tau - x) dx`, which never evaluates
/// the density near the origin (where Weibull densities with `k < 1` are
/// unbounded). The absolute tolerance is scaled by `F(tau/2)^2`, a lower bound
/// on the result, so small convolution values keep their relative accuracy.
/// Results are clamped into `[0, F(tau)]`.
pub fn convolve_cdf_with<D: TimeDistribution + ?Sized>(
    dist: &D,
    tau: f64,
    method: ConvolutionMethod,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::domain(format!("tau must be finite and >= 0, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(0.0);
    }
    let cdf_tau = dist.cdf(tau)?;
    let raw = match method {
        ConvolutionMethod::Auto => match dist.convolution_closed_form(tau) {
            Some(v) => v,
            None => convolve_numerically(dist, tau, cfg)?,
        },
        ConvolutionMethod::ClosedForm => dist
            .convolution_closed_form(tau)
            .ok_or_else(|| Error::domain("no closed-form convolution for this distribution"))?,
        ConvolutionMethod::Numerical => convolve_numerically(dist, tau, cfg)?,
    };
    Ok(raw.clamp(0.0, cdf_tau))
}

fn convolve_numerically<D: TimeDistribution + ?Sized>(dist: &D, tau: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let half = 0.5 * tau;
    let cdf_half = dist.cdf(half)?;
    if cdf_half == 0.0 {
        return Ok(0.0);
    }
    let mut breakpoints: Vec<f64> = cfg.breakpoints.clone();
    for b in dist.breakpoints() {
        breakpoints.push(b);
        breakpoints.push(tau - b);
    }
    breakpoints.retain(|&x| x > 0.0 && x < half);
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();

    let floor = cdf_half * cdf_half;
    let local = QuadratureConfig {
        abs_tol: (0.5 * cfg.abs_tol * floor.min(1.0)).max(f64::MIN_POSITIVE),
        max_depth: cfg.max_depth,
        breakpoints,
    };
    let integrand = |x: f64| {
        let c = dist.cdf(x).unwrap_or(f64::NAN);
        let d = dist.pdf(tau - x).unwrap_or(f64::NAN);
        c * d
    };
    let tail = integrate(integrand, 0.0, half, &local)?;
    Ok(floor + 2.0 * tail)
}

/// One linearly spaced grid axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(name: impl Into<String>, min: f64, max: f64, steps: usize) -> Result<Self> {
        let name = name.into();
        if !(min.is_finite() && max.is_finite()) || min >= max {
            return Err(Error::domain(format!("axis {name}: need finite min < max, got [{min}, {max}]")));
        }
        if steps < 2 {
            return Err(Error::domain(format!("axis {name}: need at least 2 steps, got {steps}")));
        }
        Ok(Self { name, min, max, steps })
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.steps {
            self.max
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.value(i)).collect()
    }
}

/// Cartesian product of axes, enumerated row-major (first axis outermost).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::domain("grid needs at least one axis"));
        }
        Ok(Self { axes })
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.steps).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, mut index: usize) -> Vec<f64> {
        let mut coords = vec![0.0; self.axes.len()];
        for (slot, axis) in coords.iter_mut().zip(&self.axes).rev() {
            *slot = axis.value(index % axis.steps);
            index /= axis.steps;
        }
        coords
    }

    fn describe(&self, point: &[f64]) -> String {
        let parts: Vec<String> =
            self.axes.iter().zip(point).map(|(a, x)| format!("{}={}", a.name, x)).collect();
        format!("({})", parts.join(", "))
    }
}

fn run_with_workers<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(1) => job(),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(job),
            Err(_) => job(),
        },
        None => job(),
    }
}

/// Evaluates `f` at every grid point, possibly in parallel. Results are in
/// cell-index order whatever the worker count; on failure the error of the
/// lowest-indexed failing cell is returned with its coordinates.
pub fn grid_map<T, F>(grid: &GridSpec, f: F, workers: Option<usize>) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&[f64]) -> Result<T> + Sync + Send,
{
    let n = grid.len();
    let eval = |i: usize| {
        let point = grid.point(i);
        f(&point).map_err(|e| Error::Cell { coords: grid.describe(&point), source: Box::new(e) })
    };
    let results: Vec<Result<T>> = if workers == Some(1) {
        (0..n).map(eval).collect()
    } else {
        run_with_workers(workers, || (0..n).into_par_iter().map(eval).collect())
    };
    results.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub axes: Vec<Axis>,
    pub values: Vec<f64>,
}

impl GridResult {
    pub fn spec(&self) -> GridSpec {
        GridSpec { axes: self.axes.clone() }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<f64>, f64)> + '_ {
        let spec = self.spec();
        self.values.iter().enumerate().map(move |(i, &v)| (spec.point(i), v))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV with header `axis1,axis2,...,value`, rows in grid order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let header: Vec<String> = (1..=self.axes.len()).map(|i| format!("axis{i}")).collect();
        writeln!(w, "{},value", header.join(","))?;
        for (point, value) in self.iter() {
            let mut row: Vec<String> = point.iter().map(|&x| fmt_f64(x)).collect();
            row.push(fmt_f64(value));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub fn grid_eval<F>(f: F, grid: &GridSpec, workers: Option<usize>) -> Result<GridResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync + Send,
{
    Ok(GridResult { axes: grid.axes.clone(), values: grid_map(grid, f, workers)? })
}

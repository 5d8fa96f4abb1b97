//! Command-line front end for `archlab`. All file and terminal I/O of the
//! workspace happens here.
//!
//! Exit codes: 0 success, 1 usage error, 2 domain or convergence error,
//! 3 verification failure.

pub mod figure;
pub mod table;
pub mod verify;

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use archlab::dist::{ProcessingTimeDistribution, TimeDistribution};
use archlab::mc::{run_theorem1_mc, simulate_parallel, simulate_serial, TrialRecord, DEFAULT_SEED};
use archlab::parallel::ParallelTwoModel;
use archlab::recall::{simulate_recall, weibull_mle, RecallArchitecture, RecallModel, RecallTrial};
use archlab::serial::SerialTwoModel;
use clap::{Args, Parser, Subcommand, ValueEnum};

use figure::{FigureId, FigureRequest};
use table::{Cell, Table};

#[derive(Debug)]
pub enum CliError {
    /// Rendered clap error, printed verbatim.
    Clap(String),
    Usage(String),
    Domain(String),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Clap(_) | CliError::Usage(_) => 1,
            CliError::Domain(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Clap(s) => f.write_str(s.trim_end()),
            CliError::Usage(s) => write!(f, "error: {s}"),
            CliError::Domain(s) => write!(f, "error: {s}"),
            CliError::Verification(s) => write!(f, "verification failed: {s}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<archlab::Error> for CliError {
    fn from(e: archlab::Error) -> Self {
        match e {
            archlab::Error::Parse { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Domain(format!("i/o: {e}"))
    }
}

/// `NAME=MIN:MAX` override of one grid axis.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeArg {
    pub axis: String,
    pub min: f64,
    pub max: f64,
}

impl FromStr for RangeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (axis, span) = s.split_once('=').ok_or_else(|| format!("expected NAME=MIN:MAX, got `{s}`"))?;
        let (lo, hi) = span.split_once(':').ok_or_else(|| format!("expected MIN:MAX after `{axis}=`, got `{span}`"))?;
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("axis `{axis}`: `{x}` is not a number"));
        Ok(Self { axis: axis.trim().to_string(), min: num(lo)?, max: num(hi)? })
    }
}

/// Decimal or `0x`-prefixed hexadecimal, `_` separators allowed.
fn parse_seed(s: &str) -> Result<u64, String> {
    let clean = s.replace('_', "");
    let parsed = match clean.strip_prefix("0x").or_else(|| clean.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => clean.parse(),
    };
    parsed.map_err(|e| format!("`{s}`: {e}"))
}

fn parse_dist(s: &str) -> Result<ProcessingTimeDistribution, String> {
    s.parse().map_err(|e: archlab::Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct Output {
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Parser)]
#[command(name = "archlab", version, about = "Dependence analysis of serial and parallel processing-time models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Data grid behind one figure surface.
    Figure {
        #[arg(value_enum)]
        id: FigureId,
        /// Weibull shape of one panel; repeat for several (fig4-fig6).
        #[arg(long = "k")]
        shapes: Vec<f64>,
        /// Weibull rate (fig6, default 1).
        #[arg(long)]
        u: Option<f64>,
        /// Uniform upper bound (fig7, default 2).
        #[arg(long)]
        v: Option<f64>,
        /// Axis override, e.g. `tau=0.1:3`; repeatable.
        #[arg(long = "range", value_name = "NAME=MIN:MAX")]
        ranges: Vec<RangeArg>,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo sign check of the p = 1/2 dependence bracket.
    Theorem1 {
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        #[arg(long, default_value_t = DEFAULT_SEED, value_parser = parse_seed)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Serial dependence profile over a tau grid.
    Dependence {
        #[arg(long, value_parser = parse_dist)]
        dist: ProcessingTimeDistribution,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        /// tau range (default `tau=0:3s`, s the time scale of the law).
        #[arg(long = "range", value_name = "tau=MIN:MAX")]
        ranges: Vec<RangeArg>,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Second-stage survival gap over a (t, Ta) grid.
    StageSurvival {
        #[arg(long, value_parser = parse_dist)]
        dist: ProcessingTimeDistribution,
        /// Axis override for `t` or `Ta`; repeatable.
        #[arg(long = "range", value_name = "NAME=MIN:MAX")]
        ranges: Vec<RangeArg>,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Seeded trial traces.
    Simulate {
        #[arg(value_enum)]
        arch: Arch,
        /// Processing-time law (serial, parallel).
        #[arg(long, value_parser = parse_dist)]
        dist: Option<ProcessingTimeDistribution>,
        /// Probability that process a goes first (serial).
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        /// Comma-separated item rates (recall).
        #[arg(long, value_delimiter = ',')]
        rates: Vec<f64>,
        /// Number of equal-rate items (recall, with --u).
        #[arg(long)]
        items: Option<usize>,
        /// Common item rate (recall, with --items).
        #[arg(long)]
        u: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long, default_value_t = DEFAULT_SEED, value_parser = parse_seed)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Emit::Trace)]
        emit: Emit,
        #[command(flatten)]
        output: Output,
    },
    /// Weibull maximum-likelihood fit to a `time` column.
    Fit {
        input: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Run invariant suites; exit 3 if any check fails.
    Verify {
        #[arg(value_enum, default_value_t = verify::Suite::All)]
        suite: verify::Suite,
        #[arg(long, default_value_t = DEFAULT_SEED, value_parser = parse_seed)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Arch {
    Serial,
    Parallel,
    RecallSerial,
    RecallParallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    /// One row per trial (per stage for recall).
    Trace,
    /// One `time` column of total completion times, ready for `fit`.
    Totals,
}

/// Parses `args` (program name first) and runs the command. Data goes to
/// `--out` or to `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            write!(stdout, "{}", e.render())?;
            return Ok(());
        }
        Err(e) => return Err(CliError::Clap(e.render().to_string())),
    };
    match cli.command {
        Command::Figure { id, shapes, u, v, ranges, steps, output } => {
            let table = figure::run(&FigureRequest { id, shapes, rate: u, upper: v, ranges, steps })?;
            emit(&table, &output, Format::Csv, false, stdout)
        }
        Command::Theorem1 { n, seed, output } => {
            if n == 0 {
                return Err(CliError::Usage("--n must be >= 1".into()));
            }
            let r = run_theorem1_mc(n, seed)?;
            let mut t = Table::new(&["n_samples", "n_conditioned", "fraction_positive", "stderr", "seed"]);
            t.push(vec![r.n_samples.into(), r.n_conditioned.into(), r.fraction_positive.into(), r.stderr.into(), r.seed.into()]);
            emit(&t, &output, Format::Json, true, stdout)
        }
        Command::Dependence { dist, p, ranges, steps, output } => {
            let table = dependence(dist, p, &ranges, steps)?;
            emit(&table, &output, Format::Csv, false, stdout)
        }
        Command::StageSurvival { dist, ranges, steps, output } => {
            let table = stage_survival(dist, &ranges, steps)?;
            emit(&table, &output, Format::Csv, false, stdout)
        }
        Command::Simulate { arch, dist, p, rates, items, u, n, seed, emit: what, output } => {
            if n == 0 {
                return Err(CliError::Usage("--n must be >= 1".into()));
            }
            let table = simulate(arch, dist, p, rates, items, u, n, seed, what)?;
            emit(&table, &output, Format::Csv, false, stdout)
        }
        Command::Fit { input, output } => {
            let data = read_times(&input)?;
            let fit = weibull_mle(&data)?;
            let mut t = Table::new(&["k_hat", "u_hat", "loglik", "converged", "iterations", "n"]);
            t.push(vec![fit.k_hat.into(), fit.u_hat.into(), fit.loglik.into(), fit.converged.into(), fit.iterations.into(), fit.n.into()]);
            emit(&t, &output, Format::Json, true, stdout)?;
            if !fit.converged {
                return Err(CliError::Domain(format!("fit did not converge after {} iterations", fit.iterations)));
            }
            Ok(())
        }
        Command::Verify { suite, seed, output } => {
            let checks = verify::run(suite, seed);
            emit(&verify::table(&checks), &output, Format::Csv, false, stdout)?;
            let failed = checks.iter().filter(|c| !c.pass).count();
            if failed > 0 {
                return Err(CliError::Verification(format!("{failed} of {} checks failed", checks.len())));
            }
            Ok(())
        }
    }
}

fn emit(table: &Table, output: &Output, default: Format, record: bool, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut buf = Vec::new();
    match output.format.unwrap_or(default) {
        Format::Csv => table.write_csv(&mut buf)?,
        Format::Json => {
            let value = if record { table.record_json() } else { table.to_json() };
            serde_json::to_writer_pretty(&mut buf, &value).map_err(io::Error::from)?;
            buf.push(b'\n');
        }
    }
    match &output.out {
        Some(path) => fs::write(path, &buf).map_err(|e| CliError::Domain(format!("cannot write {}: {e}", path.display()))),
        None => Ok(stdout.write_all(&buf)?),
    }
}

fn dependence(dist: ProcessingTimeDistribution, p: f64, ranges: &[RangeArg], steps: usize) -> Result<Table, CliError> {
    let model = SerialTwoModel::new(dist, p).map_err(|e| CliError::Usage(format!("--p: {e}")))?;
    let axis = figure::resolve_axes(&[("tau", 0.0, 3.0 * dist.scale())], ranges, steps)?.remove(0);
    if axis.min < 0.0 {
        return Err(CliError::Domain(format!("axis `tau`: range [{}, {}] is outside the support; tau must be >= 0", axis.min, axis.max)));
    }
    let mut t = Table::new(&["tau", "F", "conv", "marginal_a", "marginal_b", "R", "difference", "sign"]);
    for tau in axis.points() {
        match model.dependence_point(tau) {
            Ok(pt) => t.push(vec![
                tau.into(),
                pt.f.into(),
                pt.conv.into(),
                pt.marginal_a.into(),
                pt.marginal_b.into(),
                pt.r.into(),
                pt.difference.into(),
                pt.sign.as_str().into(),
            ]),
            // P(T_a <= tau) = 0: the conditional probability is undefined.
            Err(archlab::Error::NullConditioning(_)) => {
                let nan = Cell::Num(f64::NAN);
                t.push(vec![tau.into(), 0.0.into(), 0.0.into(), 0.0.into(), 0.0.into(), nan.clone(), nan, "undefined".into()]);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(t)
}

fn stage_survival(dist: ProcessingTimeDistribution, ranges: &[RangeArg], steps: usize) -> Result<Table, CliError> {
    let upper = dist.upper();
    let hi = if upper.is_finite() { upper / 2.0 } else { 10.0 * dist.scale() };
    let mut axes = figure::resolve_axes(&[("t", 0.0, hi), ("Ta", 0.0, hi)], ranges, steps)?;
    let (b, a) = (axes.pop().expect("two axes"), axes.pop().expect("two axes"));
    for axis in [&a, &b] {
        if axis.min < 0.0 {
            return Err(CliError::Domain(format!("axis `{}`: range [{}, {}] is outside the support; times must be >= 0", axis.name, axis.min, axis.max)));
        }
    }
    if b.max >= upper {
        return Err(CliError::Domain(format!("axis `Ta`: range [{}, {}] is outside the support; the first stage must end before {upper}", b.min, b.max)));
    }
    let grid = ParallelTwoModel::new(dist).stage_survival_grid(&a, &b, None)?;
    let mut t = Table::new(&["t", "Ta", "alpha", "expr4", "gap", "sign"]);
    figure::push_stage_rows(&mut t, &grid, None);
    Ok(t)
}

fn recall_model(rates: Vec<f64>, items: Option<usize>, u: Option<f64>) -> Result<RecallModel, CliError> {
    let model = match (rates.is_empty(), items, u) {
        (false, None, None) => RecallModel::new(rates),
        (true, Some(n), Some(u)) => RecallModel::equal(n, u),
        _ => return Err(CliError::Usage("recall needs either --rates or both --items and --u".into())),
    };
    model.map_err(|e| CliError::Usage(e.to_string()))
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    arch: Arch,
    dist: Option<ProcessingTimeDistribution>,
    p: f64,
    rates: Vec<f64>,
    items: Option<usize>,
    u: Option<f64>,
    n: u64,
    seed: u64,
    what: Emit,
) -> Result<Table, CliError> {
    let two_process = |trials: Vec<TrialRecord>| {
        let mut t;
        match what {
            Emit::Trace => {
                t = Table::new(&["trial", "order", "t1", "t2", "total_a", "total_b"]);
                for (i, r) in trials.iter().enumerate() {
                    t.push(vec![i.into(), r.order.as_str().into(), r.t1.into(), r.t2.into(), r.total_a.into(), r.total_b.into()]);
                }
            }
            Emit::Totals => {
                t = Table::new(&["time"]);
                for r in &trials {
                    t.push(vec![r.total_a.into()]);
                    t.push(vec![r.total_b.into()]);
                }
            }
        }
        t
    };
    let recall = |trials: Vec<RecallTrial>| {
        let mut t = match what {
            Emit::Trace => Table::new(&["trial", "position", "item", "ict", "cumulative_time"]),
            Emit::Totals => Table::new(&["time"]),
        };
        for (i, r) in trials.iter().enumerate() {
            let mut total = 0.0;
            for (j, (item, ict)) in r.order.iter().zip(&r.icts).enumerate() {
                total += ict;
                match what {
                    Emit::Trace => t.push(vec![i.into(), (j + 1).into(), (*item).into(), (*ict).into(), total.into()]),
                    Emit::Totals => t.push(vec![total.into()]),
                }
            }
        }
        t
    };
    let need_dist = || dist.ok_or_else(|| CliError::Usage("serial and parallel simulation need --dist".into()));
    Ok(match arch {
        Arch::Serial => {
            let model = SerialTwoModel::new(need_dist()?, p).map_err(|e| CliError::Usage(format!("--p: {e}")))?;
            two_process(simulate_serial(&model, n, seed)?)
        }
        Arch::Parallel => two_process(simulate_parallel(&ParallelTwoModel::new(need_dist()?), n, seed)?),
        Arch::RecallSerial => recall(simulate_recall(&recall_model(rates, items, u)?, RecallArchitecture::Serial, n, seed)?),
        Arch::RecallParallel => recall(simulate_recall(&recall_model(rates, items, u)?, RecallArchitecture::Parallel, n, seed)?),
    })
}

/// Reads a CSV whose first non-blank line is the header `time`, followed by
/// one positive finite time per line. Blank lines are skipped.
pub fn read_times(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_times(&text).map_err(|e| match e {
        CliError::Domain(msg) => CliError::Domain(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_times(text: &str) -> Result<Vec<f64>, CliError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.trim() == "time" => {}
        Some((i, header)) => return Err(CliError::Domain(format!("line {}: expected header `time`, got `{}`", i + 1, header.trim()))),
        None => return Err(CliError::Domain("empty input; expected header `time`".into())),
    }
    lines
        .map(|(i, line)| {
            let x: f64 = line.trim().parse().map_err(|_| CliError::Domain(format!("line {}: `{}` is not a number", i + 1, line.trim())))?;
            if !(x.is_finite() && x > 0.0) {
                return Err(CliError::Domain(format!("line {}: time must be finite and > 0, got {x}", i + 1)));
            }
            Ok(x)
        })
        .collect()
}

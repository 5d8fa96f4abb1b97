//! Data grids behind the four figure surfaces.

use archlab::dist::{ProcessingTimeDistribution as P, TimeDistribution};
use archlab::numerics::{convolve_cdf, grid_eval, Axis, GridSpec};
use archlab::parallel::{ParallelTwoModel, StageSurvivalGrid};
use archlab::serial::expression3;
use clap::ValueEnum;

use crate::table::Table;
use crate::{CliError, RangeArg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureId {
    Fig4,
    Fig5,
    Fig6,
    Fig7,
}

impl FigureId {
    fn default_shapes(self) -> &'static [f64] {
        match self {
            FigureId::Fig4 => &[0.5, 1.5],
            FigureId::Fig5 => &[0.2, 2.0],
            FigureId::Fig6 => &[2.0, 4.0],
            FigureId::Fig7 => &[],
        }
    }

    /// Axis names with default ranges, outer axis first.
    fn default_axes(self) -> [(&'static str, f64, f64); 2] {
        match self {
            FigureId::Fig4 | FigureId::Fig5 => [("tau", 0.01, 5.0), ("u", 0.5, 10.0)],
            FigureId::Fig6 => [("t", 0.0, 10.0), ("Ta", 0.0, 10.0)],
            FigureId::Fig7 => [("t", 0.0, 1.0), ("Ta", 0.0, 1.0)],
        }
    }
}

pub struct FigureRequest {
    pub id: FigureId,
    pub shapes: Vec<f64>,
    pub rate: Option<f64>,
    pub upper: Option<f64>,
    pub ranges: Vec<RangeArg>,
    pub steps: usize,
}

fn support_error(axis: &str, r: (f64, f64), need: &str) -> CliError {
    CliError::Domain(format!("axis `{axis}`: range [{}, {}] is outside the support; {need}", r.0, r.1))
}

/// Applies `--range` overrides to the named axes; unknown names are usage errors.
pub(crate) fn resolve_axes(defaults: &[(&str, f64, f64)], ranges: &[RangeArg], steps: usize) -> Result<Vec<Axis>, CliError> {
    for r in ranges {
        if !defaults.iter().any(|(name, ..)| *name == r.axis) {
            let names: Vec<&str> = defaults.iter().map(|d| d.0).collect();
            return Err(CliError::Usage(format!("unknown axis `{}` (expected one of: {})", r.axis, names.join(", "))));
        }
    }
    defaults
        .iter()
        .map(|&(name, lo, hi)| {
            let (lo, hi) = ranges.iter().rev().find(|r| r.axis == name).map_or((lo, hi), |r| (r.min, r.max));
            Axis::new(name, lo, hi, steps).map_err(|e| CliError::Usage(e.to_string()))
        })
        .collect()
}

pub fn run(req: &FigureRequest) -> Result<Table, CliError> {
    let id = req.id;
    let fig6_or_7 = matches!(id, FigureId::Fig6 | FigureId::Fig7);
    if req.rate.is_some() && id != FigureId::Fig6 {
        return Err(CliError::Usage("--u fixes the rate of fig6 only; fig4/fig5 vary u along an axis".into()));
    }
    if req.upper.is_some() && id != FigureId::Fig7 {
        return Err(CliError::Usage("--v applies to fig7 only".into()));
    }
    if id == FigureId::Fig7 && !req.shapes.is_empty() {
        return Err(CliError::Usage("--k does not apply to fig7 (uniform)".into()));
    }
    let shapes = if req.shapes.is_empty() { id.default_shapes().to_vec() } else { req.shapes.clone() };
    for &k in &shapes {
        P::weibull(k, 1.0).map_err(|e| CliError::Usage(format!("--k: {e}")))?;
    }
    let mut axes = resolve_axes(&id.default_axes(), &req.ranges, req.steps)?;
    let (b, a) = (axes.pop().expect("two axes"), axes.pop().expect("two axes"));

    if !fig6_or_7 {
        if a.min <= 0.0 {
            return Err(support_error("tau", (a.min, a.max), "the sign bracket needs tau > 0"));
        }
        if b.min <= 0.0 {
            return Err(support_error("u", (b.min, b.max), "the Weibull rate must be > 0"));
        }
        let grid = GridSpec::new(vec![a, b])?;
        let mut table = Table::new(&["k", "tau", "u", "value"]);
        for k in shapes {
            let r = grid_eval(
                |x| {
                    let d = P::weibull(k, x[1])?;
                    expression3(d.cdf(x[0])?, convolve_cdf(&d, x[0])?)
                },
                &grid,
                None,
            )?;
            for (x, v) in r.iter() {
                table.push(vec![k.into(), x[0].into(), x[1].into(), v.into()]);
            }
        }
        return Ok(table);
    }

    for axis in [&a, &b] {
        if axis.min < 0.0 {
            return Err(support_error(&axis.name, (axis.min, axis.max), "times must be >= 0"));
        }
    }
    let panels: Vec<(f64, P)> = match id {
        FigureId::Fig6 => {
            let u = req.rate.unwrap_or(1.0);
            shapes.iter().map(|&k| Ok((k, P::weibull(k, u).map_err(|e| CliError::Usage(format!("--u: {e}")))?))).collect::<Result<_, CliError>>()?
        }
        _ => {
            let v = req.upper.unwrap_or(2.0);
            let d = P::uniform(v).map_err(|e| CliError::Usage(format!("--v: {e}")))?;
            if b.max >= v {
                return Err(support_error("Ta", (b.min, b.max), &format!("the first stage must end before v = {v}")));
            }
            vec![(v, d)]
        }
    };
    let lead = if id == FigureId::Fig6 { "k" } else { "v" };
    let mut table = Table::new(&[lead, "t", "Ta", "alpha", "expr4", "gap", "sign"]);
    for (param, d) in panels {
        let g = ParallelTwoModel::new(d).stage_survival_grid(&a, &b, None)?;
        push_stage_rows(&mut table, &g, Some(param));
    }
    Ok(table)
}

/// Stage-survival rows, optionally prefixed by a panel parameter.
pub(crate) fn push_stage_rows(table: &mut Table, g: &StageSurvivalGrid, lead: Option<f64>) {
    for r in &g.records {
        let mut row = Vec::with_capacity(7);
        if let Some(p) = lead {
            row.push(p.into());
        }
        row.extend([r.t.into(), r.ta.into(), r.alpha.unwrap_or(f64::NAN).into(), r.expr4.into(), r.gap.into(), r.sign.as_str().into()]);
        table.push(row);
    }
}

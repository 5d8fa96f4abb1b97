//! The standard two-process parallel model: both channels start at time zero
//! with iid processing times, so `T_a = z_a` and `T_b = z_b`.
//!
//! Stage comparisons are made through the cumulative hazard. With
//! `expr4 = -2 H(t) + H(T_a + t) - H(T_a)` and
//! `gap = S(t)^2 - S(T_a + t) / S(T_a)`, one has
//! `gap = S(T_a + t) / S(T_a) * expm1(expr4)`, so the two share a sign.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::dist::{ProcessingTimeDistribution, TimeDistribution, EPS_SURVIVAL};
use crate::error::{Error, Result};
use crate::numerics::{grid_map, Axis, GridSpec};
use crate::report::{fmt_f64, Sign, ZERO_TOL};

/// Number of interior points used to bound the hazard ratio over `(0, t]`.
const ALPHA_SAMPLES: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelTwoModel<D = ProcessingTimeDistribution> {
    dist: D,
}

fn check_time(name: &str, t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite and >= 0, got {t}")))
    }
}

impl<D: TimeDistribution> ParallelTwoModel<D> {
    pub fn new(dist: D) -> Self {
        Self { dist }
    }

    pub fn dist(&self) -> &D {
        &self.dist
    }

    /// `P(T_a <= tau, T_b <= tau) / P(T_a <= tau) - P(T_b <= tau)`, evaluated
    /// literally; it vanishes because the channels are independent.
    pub fn parallel_dependence_difference(&self, tau: f64) -> Result<f64> {
        check_time("tau", tau)?;
        let f = self.dist.cdf(tau)?;
        if f <= 0.0 {
            return Err(Error::NullConditioning(format!("P(T_a <= {tau}) = 0")));
        }
        let joint = f * f;
        Ok(joint / f - f)
    }

    /// `P(T_b - T_a > t | T_a first, T_a) = S(T_a + t) / S(T_a)`; zero once the
    /// support is exhausted.
    pub fn conditional_ict_survival(&self, ta: f64, t: f64) -> Result<f64> {
        check_time("T_a", ta)?;
        check_time("t", t)?;
        let log_ta = self.dist.log_survival(ta)?;
        if log_ta <= EPS_SURVIVAL.ln() {
            return Err(Error::NullConditioning(format!("S(T_a = {ta}) is exhausted")));
        }
        if t == 0.0 {
            return Ok(1.0);
        }
        let log_end = self.dist.log_survival(ta + t)?;
        Ok((log_end - log_ta).exp().min(1.0))
    }

    /// Sign of `d/dT_a S(T_a + t) / S(T_a)`, which is the sign of `h(T_a) - h(T_a + t)`.
    pub fn ict_survival_trend(&self, ta: f64, t: f64) -> Result<Sign> {
        check_time("T_a", ta)?;
        check_time("t", t)?;
        let lo = self.dist.hazard(ta)?;
        let hi = self.dist.hazard(ta + t)?;
        if lo == hi {
            return Ok(Sign::Zero);
        }
        Ok(Sign::classify(lo - hi, ZERO_TOL))
    }

    /// `alpha(t, T_a + t) = h(T_a + t) / h(t)`.
    pub fn hazard_ratio_alpha(&self, t: f64, ta: f64) -> Result<f64> {
        check_time("t", t)?;
        check_time("T_a", ta)?;
        let base = self.dist.hazard(t)?;
        if !(base.is_finite() && base > 0.0) {
            return Err(Error::domain(format!("hazard ratio undefined: h({t}) = {base}")));
        }
        Ok(self.dist.hazard(ta + t)? / base)
    }

    /// `alpha(s, T_a + s)`, reading an exhausted `h(T_a + s)` as `+inf`.
    fn alpha_or_inf(&self, s: f64, ta: f64) -> Option<f64> {
        let base = self.dist.hazard(s).ok()?;
        if !(base.is_finite() && base > 0.0) {
            return None;
        }
        match self.dist.hazard(ta + s) {
            Ok(h) => Some(h / base),
            Err(Error::ExhaustedSurvival { .. }) => Some(f64::INFINITY),
            Err(_) => None,
        }
    }

    /// `(gap, expr4)` at `(t, T_a)`. When `T_a + t` is past the end of a
    /// bounded support (but `t` and `T_a` are not), `expr4 = +inf` and
    /// `gap = S(t)^2`.
    pub fn stage_survival_gap(&self, t: f64, ta: f64) -> Result<StageGap> {
        check_time("t", t)?;
        check_time("T_a", ta)?;
        let h_t = self.dist.cum_hazard(t)?;
        let h_ta = self.dist.cum_hazard(ta)?;
        let first = (-2.0 * h_t).exp();
        let h_end = match self.dist.cum_hazard(ta + t) {
            Ok(h) => h,
            Err(Error::ExhaustedSurvival { .. }) => {
                return Ok(StageGap { gap: first, expr4: f64::INFINITY, scale: first });
            }
            Err(e) => return Err(e),
        };
        let expr4 = -2.0 * h_t + h_end - h_ta;
        let second = (h_ta - h_end).exp();
        // expm1 keeps precision near the sign change; away from it the direct
        // difference avoids 0 * inf once `second` underflows.
        let gap = if expr4.abs() < 1.0 { second * expr4.exp_m1() } else { first - second };
        Ok(StageGap { gap, expr4, scale: first.max(second) })
    }

    pub fn stage_survival_record(&self, t: f64, ta: f64) -> Result<StageSurvivalRecord> {
        let StageGap { gap, expr4, scale } = self.stage_survival_gap(t, ta)?;
        let alpha = self.alpha_or_inf(t, ta);
        let range: Vec<f64> = if t > 0.0 {
            std::iter::once(1e-6 * t)
                .chain((1..=ALPHA_SAMPLES).map(|i| t * i as f64 / ALPHA_SAMPLES as f64))
                .filter_map(|s| self.alpha_or_inf(s, ta))
                .collect()
        } else {
            Vec::new()
        };
        let alpha_min = range.iter().copied().reduce(f64::min);
        let alpha_max = range.iter().copied().reduce(f64::max);
        let sign = Sign::classify(expr4, ZERO_TOL);
        let pointwise_disagrees = match alpha {
            Some(a) => (a >= 2.0 && sign == Sign::Negative) || (a < 2.0 && sign == Sign::Positive),
            None => false,
        };
        Ok(StageSurvivalRecord { t, ta, alpha, alpha_min, alpha_max, expr4, gap, scale, sign, pointwise_disagrees })
    }

    /// Records over the product of a `t` axis (outer) and a `T_a` axis (inner).
    pub fn stage_survival_grid(&self, t_axis: &Axis, ta_axis: &Axis, workers: Option<usize>) -> Result<StageSurvivalGrid> {
        let grid = GridSpec::new(vec![
            Axis { name: "t".into(), ..t_axis.clone() },
            Axis { name: "Ta".into(), ..ta_axis.clone() },
        ])?;
        let records = grid_map(&grid, |x| self.stage_survival_record(x[0], x[1]), workers)?;
        Ok(StageSurvivalGrid { records })
    }

    /// Summarises the sign of the gap over a `(t, T_a)` region. Cells whose
    /// gap is zero within tolerance carry no direction and are skipped.
    pub fn classify_stage_trend(&self, t_axis: &Axis, ta_axis: &Axis, workers: Option<usize>) -> Result<StageTrend> {
        self.stage_survival_grid(t_axis, ta_axis, workers)?.trend()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageGap {
    /// `S(t)^2 - S(T_a + t) / S(T_a)`.
    pub gap: f64,
    /// `-2 H(t) + H(T_a + t) - H(T_a)`.
    pub expr4: f64,
    /// `max(S(t)^2, S(T_a + t) / S(T_a))`, the magnitude the gap is measured against.
    pub scale: f64,
}

impl StageGap {
    /// Sign of the gap with the zero tolerance taken relative to `scale`;
    /// `None` when both survival terms underflow.
    pub fn resolved_sign(&self) -> Option<Sign> {
        (self.scale > 0.0).then(|| Sign::classify(self.gap, ZERO_TOL * self.scale))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageSurvivalRecord {
    pub t: f64,
    pub ta: f64,
    /// `alpha(t, T_a + t)`; `None` where `h(t)` is zero or unbounded.
    pub alpha: Option<f64>,
    /// Extremes of `alpha(s, T_a + s)` over `s` in `(0, t]`.
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub expr4: f64,
    pub gap: f64,
    pub scale: f64,
    /// Sign of `expr4`, which is the sign of the gap.
    pub sign: Sign,
    /// The single-point reading `alpha(t, T_a + t) >= 2` predicts the wrong sign.
    pub pointwise_disagrees: bool,
}

impl StageSurvivalRecord {
    pub fn gap_parts(&self) -> StageGap {
        StageGap { gap: self.gap, expr4: self.expr4, scale: self.scale }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendClass {
    /// Gap negative throughout: second-stage survival exceeds `S(t)^2`.
    SecondStageSlower,
    /// Gap positive throughout.
    SecondStageFaster,
    Mixed,
}

impl TrendClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TrendClass::SecondStageSlower => "second_stage_slower",
            TrendClass::SecondStageFaster => "second_stage_faster",
            TrendClass::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub t: f64,
    pub ta: f64,
    pub gap: f64,
    pub expr4: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTrend {
    pub class: TrendClass,
    pub positive_witness: Option<Witness>,
    pub negative_witness: Option<Witness>,
    pub n_positive: usize,
    pub n_negative: usize,
    pub n_zero: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSurvivalGrid {
    pub records: Vec<StageSurvivalRecord>,
}

impl StageSurvivalGrid {
    pub fn trend(&self) -> Result<StageTrend> {
        let witness = |r: &StageSurvivalRecord| Witness { t: r.t, ta: r.ta, gap: r.gap, expr4: r.expr4 };
        let count = |s: Sign| self.records.iter().filter(|r| r.sign == s).count();
        let positive_witness = self.records.iter().find(|r| r.sign == Sign::Positive).map(witness);
        let negative_witness = self.records.iter().find(|r| r.sign == Sign::Negative).map(witness);
        let class = match (positive_witness.is_some(), negative_witness.is_some()) {
            (true, true) => TrendClass::Mixed,
            (false, true) => TrendClass::SecondStageSlower,
            (true, false) => TrendClass::SecondStageFaster,
            (false, false) => return Err(Error::Degenerate("gap is zero on every cell of the region".into())),
        };
        Ok(StageTrend {
            class,
            positive_witness,
            negative_witness,
            n_positive: count(Sign::Positive),
            n_negative: count(Sign::Negative),
            n_zero: count(Sign::Zero),
        })
    }

    /// CSV with columns `t,Ta,alpha,expr4,gap,sign`; an undefined alpha is written as `NaN`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,Ta,alpha,expr4,gap,sign")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_f64(r.t),
                fmt_f64(r.ta),
                fmt_f64(r.alpha.unwrap_or(f64::NAN)),
                fmt_f64(r.expr4),
                fmt_f64(r.gap),
                r.sign
            )?;
        }
        Ok(())
    }
}

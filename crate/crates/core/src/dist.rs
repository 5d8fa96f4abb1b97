//! Processing-time distributions.
//!
//! Every distribution lives on `[0, upper)` and exposes the density `f`, the
//! distribution function `F`, survival `S = 1 - F`, hazard `h = f / S` and
//! cumulative hazard `H = -ln S`. The three parametric families used by the
//! analysis modules are provided by [`ProcessingTimeDistribution`]; any other
//! law can be plugged in through [`TimeDistribution`] by supplying only `pdf`
//! and `cdf`, in which case the remaining functionals are derived numerically.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Survival at or below this value makes hazard-type quantities undefined for
/// distributions whose hazard is computed as `f / S`.
pub const EPS_SURVIVAL: f64 = 1e-300;

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("time must be finite, got {t}")))
    }
}

/// A nonnegative processing-time law.
///
/// Implementors must supply `pdf` and `cdf`. The default `hazard`,
/// `cum_hazard` and `quantile` are derived from them; the built-in families
/// override all of them with closed forms.
pub trait TimeDistribution: Send + Sync {
    /// Density at `t`; zero outside the support.
    fn pdf(&self, t: f64) -> Result<f64>;

    /// Distribution function at `t`.
    fn cdf(&self, t: f64) -> Result<f64>;

    fn survival(&self, t: f64) -> Result<f64> {
        Ok(1.0 - self.cdf(t)?)
    }

    /// `ln S(t)`, `-inf` once the support is exhausted.
    fn log_survival(&self, t: f64) -> Result<f64> {
        Ok(self.survival(t)?.ln())
    }

    fn hazard(&self, t: f64) -> Result<f64> {
        let s = self.survival(t)?;
        if s <= EPS_SURVIVAL {
            return Err(Error::ExhaustedSurvival { t });
        }
        Ok(self.pdf(t)? / s)
    }

    fn cum_hazard(&self, t: f64) -> Result<f64> {
        let s = self.survival(t)?;
        if s <= EPS_SURVIVAL {
            return Err(Error::ExhaustedSurvival { t });
        }
        Ok(-s.ln())
    }

    /// Upper end of the support (`+inf` for unbounded laws).
    fn upper(&self) -> f64 {
        f64::INFINITY
    }

    /// Characteristic time scale, used for tolerances and bracketing.
    fn scale(&self) -> f64 {
        1.0
    }

    /// Points in `(0, upper]` where the density jumps.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Smallest `t` with `F(t) >= q`, by bisection.
    fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&q) {
            return Err(Error::domain(format!("quantile level must lie in [0, 1), got {q}")));
        }
        if q == 0.0 {
            return Ok(0.0);
        }
        let scale = self.scale();
        let mut lo = 0.0;
        let mut hi = scale;
        while self.cdf(hi)? < q {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::domain(format!("quantile {q} not bracketed")));
            }
        }
        let tol = 1e-10 * scale;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid)? >= q {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// `P(z_a + z_b <= tau)` for two iid copies, when a closed form exists.
    fn convolution_closed_form(&self, _tau: f64) -> Option<f64> {
        None
    }

    /// Variance, when known analytically.
    fn variance(&self) -> Option<f64> {
        None
    }
}

/// Parametric family of a [`ProcessingTimeDistribution`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    /// `f(t) = k u (u t)^(k-1) exp(-(u t)^k)`.
    Weibull { k: f64, u: f64 },
    Exponential { u: f64 },
    /// Uniform on `[0, v)`.
    Uniform { v: f64 },
}

/// One of the three processing-time families used throughout the analyses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Family", into = "Family")]
pub struct ProcessingTimeDistribution {
    family: Family,
}

fn positive(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::domain(format!("{name} must be finite and > 0, got {value}")))
    }
}

impl ProcessingTimeDistribution {
    pub fn weibull(k: f64, u: f64) -> Result<Self> {
        Ok(Self {
            family: Family::Weibull { k: positive("shape k", k)?, u: positive("rate u", u)? },
        })
    }

    pub fn exponential(u: f64) -> Result<Self> {
        Ok(Self { family: Family::Exponential { u: positive("rate u", u)? } })
    }

    pub fn uniform(v: f64) -> Result<Self> {
        Ok(Self { family: Family::Uniform { v: positive("upper bound v", v)? } })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Rate and shape of the Weibull view (`k = 1` for the exponential).
    fn weibull_params(&self) -> Option<(f64, f64)> {
        match self.family {
            Family::Weibull { k, u } => Some((k, u)),
            Family::Exponential { u } => Some((1.0, u)),
            Family::Uniform { .. } => None,
        }
    }
}

impl TryFrom<Family> for ProcessingTimeDistribution {
    type Error = Error;

    fn try_from(family: Family) -> Result<Self> {
        match family {
            Family::Weibull { k, u } => Self::weibull(k, u),
            Family::Exponential { u } => Self::exponential(u),
            Family::Uniform { v } => Self::uniform(v),
        }
    }
}

impl From<ProcessingTimeDistribution> for Family {
    fn from(d: ProcessingTimeDistribution) -> Self {
        d.family
    }
}

/// `P(G <= x)` for `G ~ Gamma(2, 1)`, i.e. `1 - e^-x - x e^-x`, accurate for small `x`.
fn gamma2_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < 0.5 {
        // e^-x * sum_{n>=2} x^n / n!
        let mut term = x * x / 2.0;
        let mut sum: f64 = 0.0;
        let mut n = 2.0;
        while term > 1e-18 * sum.max(f64::MIN_POSITIVE) {
            sum += term;
            n += 1.0;
            term *= x / n;
        }
        sum * (-x).exp()
    } else {
        -(-x).exp_m1() - x * (-x).exp()
    }
}

impl TimeDistribution for ProcessingTimeDistribution {
    fn pdf(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        if t < 0.0 {
            return Ok(0.0);
        }
        Ok(match self.family {
            Family::Uniform { v } => {
                if t < v {
                    1.0 / v
                } else {
                    0.0
                }
            }
            Family::Exponential { u } => u * (-u * t).exp(),
            Family::Weibull { k, u } => {
                let x = u * t;
                if x == 0.0 {
                    if k < 1.0 {
                        f64::INFINITY
                    } else if k == 1.0 {
                        u
                    } else {
                        0.0
                    }
                } else {
                    k * u * x.powf(k - 1.0) * (-x.powf(k)).exp()
                }
            }
        })
    }

    fn cdf(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        if t <= 0.0 {
            return Ok(0.0);
        }
        Ok(match self.family {
            Family::Uniform { v } => (t / v).min(1.0),
            Family::Exponential { u } => -(-u * t).exp_m1(),
            Family::Weibull { k, u } => -(-(u * t).powf(k)).exp_m1(),
        })
    }

    fn survival(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        if t <= 0.0 {
            return Ok(1.0);
        }
        Ok(match self.family {
            Family::Uniform { v } => (1.0 - t / v).max(0.0),
            Family::Exponential { u } => (-u * t).exp(),
            Family::Weibull { k, u } => (-(u * t).powf(k)).exp(),
        })
    }

    fn log_survival(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        if t <= 0.0 {
            return Ok(0.0);
        }
        Ok(match self.family {
            Family::Uniform { v } => {
                if t >= v {
                    f64::NEG_INFINITY
                } else {
                    (-t / v).ln_1p()
                }
            }
            _ => {
                let (k, u) = self.weibull_params().expect("weibull view");
                -(u * t).powf(k)
            }
        })
    }

    fn hazard(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let t = t.max(0.0);
        match self.family {
            Family::Uniform { v } => {
                if self.survival(t)? <= EPS_SURVIVAL {
                    Err(Error::ExhaustedSurvival { t })
                } else {
                    Ok(1.0 / (v - t))
                }
            }
            Family::Exponential { u } => Ok(u),
            Family::Weibull { k, u } => {
                let x = u * t;
                if x == 0.0 && k < 1.0 {
                    Ok(f64::INFINITY)
                } else if k == 1.0 {
                    Ok(u)
                } else {
                    Ok(u * k * x.powf(k - 1.0))
                }
            }
        }
    }

    /// Weibull cumulative hazard is evaluated as `(u t)^k`, which is the same
    /// quantity as the product form `u (u t)^(k-1) t`.
    fn cum_hazard(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        match self.family {
            Family::Uniform { v } => {
                if t >= v {
                    Err(Error::ExhaustedSurvival { t })
                } else {
                    Ok(-self.log_survival(t)?)
                }
            }
            _ => Ok(-self.log_survival(t)?),
        }
    }

    fn upper(&self) -> f64 {
        match self.family {
            Family::Uniform { v } => v,
            _ => f64::INFINITY,
        }
    }

    fn scale(&self) -> f64 {
        match self.family {
            Family::Uniform { v } => v,
            Family::Exponential { u } | Family::Weibull { u, .. } => 1.0 / u,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self.family {
            Family::Uniform { v } => vec![v],
            _ => Vec::new(),
        }
    }

    fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&q) {
            return Err(Error::domain(format!("quantile level must lie in [0, 1), got {q}")));
        }
        Ok(match self.family {
            Family::Uniform { v } => q * v,
            Family::Exponential { u } => -(-q).ln_1p() / u,
            Family::Weibull { k, u } => (-(-q).ln_1p()).powf(1.0 / k) / u,
        })
    }

    fn convolution_closed_form(&self, tau: f64) -> Option<f64> {
        if tau <= 0.0 {
            return Some(0.0);
        }
        match self.family {
            Family::Uniform { v } => {
                let r = tau / v;
                Some(if r < 1.0 {
                    r * r / 2.0
                } else if r < 2.0 {
                    2.0 * r - r * r / 2.0 - 1.0
                } else {
                    1.0
                })
            }
            Family::Exponential { u } => Some(gamma2_cdf(u * tau)),
            Family::Weibull { k, u } if k == 1.0 => Some(gamma2_cdf(u * tau)),
            Family::Weibull { .. } => None,
        }
    }

    fn variance(&self) -> Option<f64> {
        use statrs::function::gamma::gamma;
        Some(match self.family {
            Family::Uniform { v } => v * v / 12.0,
            Family::Exponential { u } => 1.0 / (u * u),
            Family::Weibull { k, u } => {
                let g1 = gamma(1.0 + 1.0 / k);
                (gamma(1.0 + 2.0 / k) - g1 * g1) / (u * u)
            }
        })
    }
}

impl fmt::Display for ProcessingTimeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Weibull { k, u } => write!(f, "weibull:k={k},u={u}"),
            Family::Exponential { u } => write!(f, "exp:u={u}"),
            Family::Uniform { v } => write!(f, "uniform:v={v}"),
        }
    }
}

fn parse_err(token: &str, reason: impl Into<String>) -> Error {
    Error::Parse { token: token.to_string(), reason: reason.into() }
}

/// Parses `weibull:k=<float>,u=<float>`, `exp:u=<float>` or `uniform:v=<float>`.
impl FromStr for ProcessingTimeDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, params) = s
            .split_once(':')
            .ok_or_else(|| parse_err(s, "expected `<family>:<key>=<value>,...`"))?;
        let expected: &[&str] = match name {
            "weibull" => &["k", "u"],
            "exp" => &["u"],
            "uniform" => &["v"],
            other => {
                return Err(parse_err(other, "unknown family (expected weibull, exp or uniform)"))
            }
        };
        let mut values = vec![None; expected.len()];
        for item in params.split(',') {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| parse_err(item, "expected `<key>=<value>`"))?;
            let slot = expected
                .iter()
                .position(|k| *k == key.trim())
                .ok_or_else(|| parse_err(key, format!("unknown parameter for `{name}`")))?;
            if values[slot].is_some() {
                return Err(parse_err(key, "parameter given twice"));
            }
            let value: f64 = raw.trim().parse().map_err(|_| parse_err(raw, "not a number"))?;
            if !(value.is_finite() && value > 0.0) {
                return Err(parse_err(raw, format!("`{}` must be finite and > 0", key.trim())));
            }
            values[slot] = Some(value);
        }
        let get = |i: usize| values[i].ok_or_else(|| parse_err(s, format!("missing parameter `{}`", expected[i])));
        match name {
            "weibull" => Self::weibull(get(0)?, get(1)?),
            "exp" => Self::exponential(get(0)?),
            _ => Self::uniform(get(0)?),
        }
    }
}

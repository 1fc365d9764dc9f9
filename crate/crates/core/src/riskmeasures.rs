//! Closed-form risk measures on discrete samples.
//!
//! Every function returns a capital amount in loss units: positive values
//! mean capital must be added to the position.

use std::fmt;
use std::str::FromStr;

use crate::empirical::{sorted_lower_quantile, Sample};
use crate::error::{Error, Result};

/// Choice of risk functional.
///
/// `Var` is not coherent and is only accepted where the plain quantile is
/// wanted; the dual-set machinery rejects it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RiskMeasure {
    /// Expected loss, `E[-Y]`.
    El,
    /// Mean plus lower semideviation, `0 <= beta <= 1`.
    Msd { beta: f64 },
    /// Expected shortfall at tail probability `alpha`.
    Es { alpha: f64 },
    /// Expectile value at risk; coherent for `alpha <= 0.5`.
    Evar { alpha: f64 },
    /// Maximum loss, `-inf Y`.
    Ml,
    /// Value at risk, `-F^{-1}(alpha)`.
    Var { alpha: f64 },
}

impl RiskMeasure {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RiskMeasure::El | RiskMeasure::Ml => Ok(()),
            RiskMeasure::Msd { beta } => {
                if (0.0..=1.0).contains(&beta) {
                    Ok(())
                } else {
                    Err(Error::domain(format!("MSD beta {beta} outside [0, 1]")))
                }
            }
            RiskMeasure::Es { alpha } | RiskMeasure::Var { alpha } | RiskMeasure::Evar { alpha } => {
                if alpha > 0.0 && alpha <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::domain(format!("{self} alpha outside (0, 1]")))
                }
            }
        }
    }

    /// Coherent functionals admit a dual set; EVaR only up to `alpha = 0.5`.
    pub fn is_coherent(&self) -> bool {
        match *self {
            RiskMeasure::Var { .. } => false,
            RiskMeasure::Evar { alpha } => alpha <= 0.5,
            _ => true,
        }
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            RiskMeasure::El => "EL",
            RiskMeasure::Msd { .. } => "MSD",
            RiskMeasure::Es { .. } => "ES",
            RiskMeasure::Evar { .. } => "EVaR",
            RiskMeasure::Ml => "ML",
            RiskMeasure::Var { .. } => "VaR",
        }
    }
}

impl fmt::Display for RiskMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            RiskMeasure::El | RiskMeasure::Ml => f.write_str(self.short_name()),
            RiskMeasure::Msd { beta } => write!(f, "MSD({beta})"),
            RiskMeasure::Es { alpha } | RiskMeasure::Evar { alpha } | RiskMeasure::Var { alpha } => {
                write!(f, "{}({alpha})", self.short_name())
            }
        }
    }
}

impl FromStr for RiskMeasure {
    type Err = Error;

    /// Parses `EL`, `ML`, `MSD(1)`, `ES(0.025)`, `EVaR(0.00145)`, `VaR(0.01)`
    /// (case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.find('(') {
            Some(open) => {
                let close = s
                    .rfind(')')
                    .filter(|&c| c > open)
                    .ok_or_else(|| Error::domain(format!("unbalanced parentheses in {s:?}")))?;
                let value: f64 = s[open + 1..close]
                    .trim()
                    .parse()
                    .map_err(|_| Error::domain(format!("bad parameter in {s:?}")))?;
                (&s[..open], Some(value))
            }
            None => (s, None),
        };
        let measure = match (name.trim().to_ascii_lowercase().as_str(), arg) {
            ("el", None) => RiskMeasure::El,
            ("ml", None) => RiskMeasure::Ml,
            ("msd", Some(beta)) => RiskMeasure::Msd { beta },
            ("es", Some(alpha)) => RiskMeasure::Es { alpha },
            ("evar", Some(alpha)) => RiskMeasure::Evar { alpha },
            ("var", Some(alpha)) => RiskMeasure::Var { alpha },
            _ => return Err(Error::domain(format!("unknown risk measure {s:?}"))),
        };
        measure.validate()?;
        Ok(measure)
    }
}

pub fn el(sample: &Sample) -> f64 {
    -sample.mean()
}

pub fn var(sample: &Sample, alpha: f64) -> Result<f64> {
    RiskMeasure::Var { alpha }.validate()?;
    Ok(-sorted_lower_quantile(&sample.sorted(), alpha))
}

/// `-E[Y | Y <= F^{-1}(alpha)]`. With ties at the quantile the conditioning
/// set may carry more than `alpha` of the mass.
pub fn es(sample: &Sample, alpha: f64) -> Result<f64> {
    RiskMeasure::Es { alpha }.validate()?;
    let q = sorted_lower_quantile(&sample.sorted(), alpha);
    // summed in scenario order so that alpha = 1 reproduces `el` bit for bit
    let (sum, count) = sample
        .iter()
        .filter(|&&v| v <= q)
        .fold((0.0, 0usize), |(s, c), &v| (s + v, c + 1));
    Ok(-sum / count as f64)
}

/// Negated `alpha`-expectile, found by bisection on the first-order condition
/// `alpha E[(Y - t)^+] = (1 - alpha) E[(t - Y)^+]` over `[min Y, max Y]`.
///
/// Accepts `alpha` up to 1; the result is not coherent above 0.5.
pub fn evar(sample: &Sample, alpha: f64) -> Result<f64> {
    RiskMeasure::Evar { alpha }.validate()?;
    if sample.is_constant() {
        return Ok(-sample[0]);
    }
    Ok(-expectile(sample, alpha))
}

pub(crate) fn expectile(values: &[f64], alpha: f64) -> f64 {
    let foc = |t: f64| {
        let (mut up, mut down) = (0.0, 0.0);
        for &y in values {
            if y > t {
                up += y - t;
            } else {
                down += t - y;
            }
        }
        alpha * up - (1.0 - alpha) * down
    };
    let (mut lo, mut hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    // foc is continuous and strictly decreasing on [lo, hi]
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if foc(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `-E[Y] + beta * sqrt(E[((Y - E[Y])^-)^2])`.
pub fn msd(sample: &Sample, beta: f64) -> Result<f64> {
    RiskMeasure::Msd { beta }.validate()?;
    let m = sample.mean();
    let semi = sample.iter().map(|&y| (m - y).max(0.0).powi(2)).sum::<f64>() / sample.len() as f64;
    Ok(-m + beta * semi.sqrt())
}

pub fn ml(sample: &Sample) -> f64 {
    -sample.min()
}

/// Evaluates a coherent measure. `Var` is rejected.
pub fn coherent_value(spec: &RiskMeasure, sample: &Sample) -> Result<f64> {
    spec.validate()?;
    match *spec {
        RiskMeasure::El => Ok(el(sample)),
        RiskMeasure::Msd { beta } => msd(sample, beta),
        RiskMeasure::Es { alpha } => es(sample, alpha),
        RiskMeasure::Evar { alpha } => evar(sample, alpha),
        RiskMeasure::Ml => Ok(ml(sample)),
        RiskMeasure::Var { .. } => Err(Error::UnsupportedMeasure(
            "VaR is not coherent; use riskmeasures::var".into(),
        )),
    }
}

/// Evaluates any measure including `Var`.
pub fn value(spec: &RiskMeasure, sample: &Sample) -> Result<f64> {
    match *spec {
        RiskMeasure::Var { alpha } => var(sample, alpha),
        _ => coherent_value(spec, sample),
    }
}

//! Discrete probability-space primitives.
//!
//! A [`Sample`] is a finite set of equally likely scenarios `X_1, ..., X_N`.
//! Quantiles follow the left-continuous inverse
//! `F^{-1}(p) = inf { x : F(x) >= p }` without interpolation.

use std::ops::Deref;

use crate::error::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Finite, non-empty set of real outcomes under the uniform empirical measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("sample must contain at least one value"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("sample value {i} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }

    /// Ascending copy of the values (stable, ties kept).
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn is_constant(&self) -> bool {
        let first = self.values[0];
        self.values.iter().all(|&v| v == first)
    }

    /// Applies `f` pointwise. The result is validated again.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.values.iter().map(|&v| f(v)).collect())
    }
}

impl Deref for Sample {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

impl TryFrom<Vec<f64>> for Sample {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

/// Probability weights `Q(omega_i)` over the scenarios of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMeasure {
    weights: Vec<f64>,
}

impl WeightedMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("measure needs at least one atom"));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::domain(format!("weight {i} is negative or not finite")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL * weights.len().max(1) as f64 {
            return Err(Error::domain(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// Point mass on atom `index`.
    pub fn dirac(n: usize, index: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[index] = 1.0;
        Self { weights }
    }

    /// Builds a measure from nonnegative weights that are already normalised
    /// up to rounding. Used by the closed-form dual maximisers.
    pub(crate) fn from_normalised(weights: Vec<f64>) -> Self {
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Density `dQ/dP = N * Q(omega_i)` with respect to the uniform measure.
    pub fn radon_nikodym(&self) -> Vec<f64> {
        let n = self.weights.len() as f64;
        self.weights.iter().map(|w| w * n).collect()
    }
}

/// Mean, population deviation, minimum and maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub mean: f64,
    pub dev: f64,
    pub min: f64,
    pub max: f64,
}

/// `F(x) = #{i : X_i <= x} / N`.
pub fn empirical_cdf(sample: &Sample, x: f64) -> f64 {
    let count = sample.iter().filter(|&&v| v <= x).count();
    count as f64 / sample.len() as f64
}

/// 1-based rank `k` of the order statistic returned by the lower quantile at
/// `level`, i.e. the smallest `k` with `k / n >= level`. Products `level * n`
/// within 1e-9 of an integer are treated as that integer.
pub(crate) fn quantile_rank(level: f64, n: usize) -> usize {
    let t = level * n as f64;
    let r = t.round();
    let k = if (t - r).abs() <= 1e-9 * t.max(1.0) {
        r
    } else {
        t.ceil()
    };
    (k as usize).clamp(1, n)
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("quantile level {level} outside (0, 1]")))
    }
}

/// Lower (left-continuous) quantile `inf { x : F(x) >= level }`.
pub fn lower_quantile(sample: &Sample, level: f64) -> Result<f64> {
    check_level(level)?;
    let sorted = sample.sorted();
    Ok(sorted_lower_quantile(&sorted, level))
}

pub(crate) fn sorted_lower_quantile(sorted: &[f64], level: f64) -> f64 {
    sorted[quantile_rank(level, sorted.len()) - 1]
}

/// Lower-tail mean `(1/level) * integral_0^level F^{-1}(u) du`.
///
/// The atom at the quantile enters with the fractional mass needed to make
/// the tail exactly `level`; when `F(F^{-1}(level)) == level` this is the
/// plain conditional mean `E[X | X <= F^{-1}(level)]`.
pub fn lower_tail_mean(sample: &Sample, level: f64) -> Result<f64> {
    check_level(level)?;
    Ok(sorted_lower_tail_mean(&sample.sorted(), level))
}

pub(crate) fn sorted_lower_tail_mean(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    let k = quantile_rank(level, n);
    let atom = 1.0 / n as f64;
    let full: f64 = sorted[..k - 1].iter().sum::<f64>() * atom;
    let rest = (level - (k - 1) as f64 * atom).clamp(0.0, atom);
    (full + rest * sorted[k - 1]) / level
}

/// `sum_i X_i Q(omega_i)`; uniform weights when `measure` is `None`.
pub fn expectation(sample: &Sample, measure: Option<&WeightedMeasure>) -> Result<f64> {
    match measure {
        None => Ok(sample.mean()),
        Some(q) => {
            Error::check_len(sample.len(), q.len())?;
            Ok(sample.iter().zip(q.weights()).map(|(x, w)| x * w).sum())
        }
    }
}

/// Percentage log returns `100 * (ln p_t - ln p_{t-1})`.
pub fn log_returns(prices: &[f64]) -> Result<Sample> {
    if prices.len() < 2 {
        return Err(Error::domain("need at least two prices for a return"));
    }
    if let Some(i) = prices.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(Error::domain(format!(
            "price {i} is not strictly positive: {}",
            prices[i]
        )));
    }
    Sample::new(
        prices
            .windows(2)
            .map(|w| 100.0 * (w[1].ln() - w[0].ln()))
            .collect(),
    )
}

pub fn summary(sample: &Sample) -> SummaryStats {
    let mean = sample.mean();
    let var = sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / sample.len() as f64;
    SummaryStats {
        mean,
        dev: var.sqrt(),
        min: sample.min(),
        max: sample.max(),
    }
}

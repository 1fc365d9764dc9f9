//! Rolling-window forecasting, cost aggregates, realised costs, realised
//! scoring losses and model ranking.
//!
//! Forecasts are stored in risk units (`rho_t`, positive for a loss); the
//! capital used by the cost and loss functions is the sign-corrected
//! `x_t = -rho_t`.

use std::fmt;

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::empirical::{summary, Sample, SummaryStats};
use crate::error::{Error, Result};
use crate::garch::{fit_from, forecast_from_fit, GarchFit, GarchParams, ModelSpec, Scheme};
use crate::riskmeasures::{self, RiskMeasure};
use crate::robust::{robust_risk, CostRates, LossKind};

pub const DEFAULT_WINDOW: usize = 250;
/// `|x|` above which the exponential terms of the ES score are flagged.
pub const ES_SCORE_LIMIT: f64 = 50.0;

/// What produces a forecast series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Forecaster {
    /// Robust capital `R^kind_spec` computed on the historical window.
    Robust { kind: LossKind, spec: RiskMeasure },
    /// A plain risk measure forecast by a model (HS, FHS or GARCH).
    Model { model: ModelSpec, spec: RiskMeasure },
    /// The realised return itself, i.e. a perfect forecast `x_t = X_t`.
    Realized,
}

impl Forecaster {
    pub fn model_label(&self) -> String {
        match self {
            Forecaster::Robust { kind, .. } => match kind {
                LossKind::Ours => "R".to_string(),
                LossKind::B => "R^b".to_string(),
                LossKind::C => "R^c".to_string(),
            },
            Forecaster::Model { model, .. } => model.to_string(),
            Forecaster::Realized => "Returns".to_string(),
        }
    }

    pub fn measure_label(&self) -> String {
        match self {
            Forecaster::Robust { spec, .. } | Forecaster::Model { spec, .. } => spec.to_string(),
            Forecaster::Realized => "-".to_string(),
        }
    }
}

impl fmt::Display for Forecaster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.model_label(), self.measure_label())
    }
}

/// Inclusive date range; open ends are unbounded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub name: String,
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
}

impl Split {
    pub fn full() -> Self {
        Self {
            name: "full".into(),
            start: None,
            end: None,
        }
    }

    /// The whole sample plus the two halves around `boundary` (the boundary
    /// date belongs to the first half).
    pub fn around(boundary: NaiveDate) -> Vec<Self> {
        vec![
            Self::full(),
            Self {
                name: format!("to {boundary}"),
                start: None,
                end: Some(boundary),
            },
            Self {
                name: format!("after {boundary}"),
                start: boundary.succ_opt(),
                end: None,
            },
        ]
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start.is_none_or(|s| d >= s) && self.end.is_none_or(|e| d <= e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollingConfig {
    pub window: usize,
    pub streams: Vec<Forecaster>,
    pub loss_kinds: Vec<LossKind>,
    pub splits: Vec<Split>,
    /// First out-of-sample date; defaults to the first date with a full window.
    pub oos_start: Option<NaiveDate>,
    /// Coherent measure applied to the daily cost stream for CR.
    pub cr_spec: RiskMeasure,
    /// Report CR as a sum over days instead of a time average.
    pub cr_sum: bool,
    pub scale1000: bool,
    /// Rank rows within each measure (model selection) rather than across the
    /// whole table (capital determination).
    pub group_by_measure: bool,
}

impl RollingConfig {
    /// Every model crossed with every measure.
    pub fn selection(models: &[ModelSpec], measures: &[RiskMeasure]) -> Self {
        let streams = measures
            .iter()
            .flat_map(|&spec| models.iter().map(move |&model| Forecaster::Model { model, spec }))
            .collect();
        Self {
            streams,
            group_by_measure: true,
            ..Self::default()
        }
    }

    pub fn validate(&self, series_len: usize) -> Result<()> {
        if self.window < 100 {
            return Err(Error::domain(format!("window must be at least 100, got {}", self.window)));
        }
        if self.window >= series_len {
            return Err(Error::domain(format!(
                "window {} must be shorter than the series ({series_len})",
                self.window
            )));
        }
        if self.streams.is_empty() {
            return Err(Error::domain("no forecast streams configured"));
        }
        for s in &self.streams {
            match s {
                Forecaster::Robust { spec, .. } => {
                    if !spec.is_coherent() {
                        return Err(Error::UnsupportedMeasure(format!("robust capital needs a coherent measure, not {spec}")));
                    }
                }
                Forecaster::Model { spec, .. } => spec.validate()?,
                Forecaster::Realized => {}
            }
        }
        if !self.cr_spec.is_coherent() {
            return Err(Error::UnsupportedMeasure(format!("CR needs a coherent measure, not {}", self.cr_spec)));
        }
        Ok(())
    }
}

impl Default for RollingConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            streams: Vec::new(),
            loss_kinds: LossKind::ALL.to_vec(),
            splits: vec![Split::full()],
            oos_start: None,
            cr_spec: RiskMeasure::El,
            cr_sum: false,
            scale1000: false,
            group_by_measure: false,
        }
    }
}

/// One out-of-sample forecast with the realised outcome and cost rates.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRecord {
    pub date: NaiveDate,
    /// Index of the stream in [`RollingConfig::streams`].
    pub stream: usize,
    pub model: String,
    pub measure: String,
    /// Risk forecast `rho_t` for day `t`, made with data up to `t - 1`.
    pub forecast: f64,
    pub realized: f64,
    pub g: f64,
    pub l: f64,
    /// Same-level VaR forecast paired with ES forecasts, stored as the
    /// position-sign value `z_t = -VaR_t`.
    pub paired_var: Option<f64>,
}

impl ForecastRecord {
    /// Sign-corrected capital `x_t = -rho_t`.
    pub fn capital(&self) -> f64 {
        -self.forecast
    }
}

/// Rolling one-step-ahead forecasts for every configured stream.
///
/// The forecast for day `t` only sees `returns[t - window .. t]` and the
/// matching cost rates. Records come back ordered by stream, then date.
pub fn rolling_forecast(
    dates: &[NaiveDate],
    returns: &[f64],
    costs: &CostRates,
    config: &RollingConfig,
) -> Result<Vec<ForecastRecord>> {
    let n = returns.len();
    Error::check_len(n, dates.len())?;
    costs.check_len(n)?;
    if costs.len().is_none() {
        return Err(Error::domain("rolling forecasts need dated cost-rate series"));
    }
    if dates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Data("dates must be strictly increasing".into()));
    }
    config.validate(n)?;
    let first = match config.oos_start {
        Some(d) => (config.window..n).find(|&t| dates[t] >= d).unwrap_or(n),
        None => config.window,
    };
    let days: Vec<usize> = (first..n).collect();
    let window_of = |t: usize| Sample::from_slice(&returns[t - config.window..t]);

    let record = |t: usize, stream: usize, forecast: f64, paired_var: Option<f64>| ForecastRecord {
        date: dates[t],
        stream,
        model: config.streams[stream].model_label(),
        measure: config.streams[stream].measure_label(),
        forecast,
        realized: returns[t],
        g: costs.g(t),
        l: costs.l(t),
        paired_var,
    };

    // one job per robust or realised stream, one per model (shared fits)
    let mut models: Vec<ModelSpec> = Vec::new();
    for s in &config.streams {
        if let Forecaster::Model { model, .. } = s {
            if !models.contains(model) {
                models.push(*model);
            }
        }
    }

    let single: Vec<Result<Vec<ForecastRecord>>> = config
        .streams
        .par_iter()
        .enumerate()
        .filter(|(_, s)| !matches!(s, Forecaster::Model { .. }))
        .map(|(k, s)| match *s {
            Forecaster::Robust { kind, spec } => days
                .par_iter()
                .map(|&t| {
                    let w = window_of(t)?;
                    let c = costs.window(t - config.window, t)?;
                    let r = robust_risk(kind, &w, &c, &spec)?;
                    Ok(record(t, k, r.risk, None))
                })
                .collect(),
            Forecaster::Realized => Ok(days.iter().map(|&t| record(t, k, -returns[t], None)).collect()),
            Forecaster::Model { .. } => unreachable!(),
        })
        .collect();

    let grouped: Vec<Result<Vec<ForecastRecord>>> = models
        .par_iter()
        .map(|model| {
            let members: Vec<(usize, RiskMeasure)> = config
                .streams
                .iter()
                .enumerate()
                .filter_map(|(k, s)| match s {
                    Forecaster::Model { model: m, spec } if m == model => Some((k, *spec)),
                    _ => None,
                })
                .collect();
            let mut out = Vec::with_capacity(members.len() * days.len());
            let mut last_good: Option<GarchParams> = None;
            for &t in &days {
                let w = window_of(t)?;
                let fit = if model.needs_fit() {
                    Some(fit_with_fallback(model, &w, &mut last_good)?)
                } else {
                    None
                };
                for &(k, spec) in &members {
                    let forecast = model_forecast(model, fit.as_ref(), &w, &spec)?;
                    let paired = match spec {
                        RiskMeasure::Es { alpha } if alpha < 1.0 => {
                            let v = model_forecast(model, fit.as_ref(), &w, &RiskMeasure::Var { alpha })?;
                            Some(-v)
                        }
                        _ => None,
                    };
                    out.push(record(t, k, forecast, paired));
                }
            }
            Ok(out)
        })
        .collect();

    let mut all = Vec::new();
    for r in single.into_iter().chain(grouped) {
        all.extend(r?);
    }
    all.sort_by(|a, b| a.stream.cmp(&b.stream).then(a.date.cmp(&b.date)));
    Ok(all)
}

fn model_forecast(model: &ModelSpec, fit: Option<&GarchFit>, window: &Sample, spec: &RiskMeasure) -> Result<f64> {
    match (model.scheme, fit) {
        (Scheme::Hs, _) => riskmeasures::value(spec, window),
        (scheme, Some(f)) => forecast_from_fit(scheme, f, spec),
        (_, None) => Err(Error::domain("model forecast needs a fitted model")),
    }
}

/// Fits the window, warm-started from the last converged parameters. A fit
/// that fails or does not converge is replaced by filtering the window with
/// those parameters.
fn fit_with_fallback(model: &ModelSpec, window: &Sample, last_good: &mut Option<GarchParams>) -> Result<GarchFit> {
    let attempt = fit_from(window, model.dist, last_good.as_ref());
    match (attempt, *last_good) {
        (Ok(f), _) if f.converged => {
            *last_good = Some(f.params);
            Ok(f)
        }
        (_, Some(p)) => {
            log::debug!("{model}: falling back to the previous converged parameters");
            GarchFit::filter(p, window)
        }
        (Ok(f), None) => {
            log::warn!("{model}: no converged fit yet; using the best parameters found");
            Ok(f)
        }
        (Err(e), None) => Err(e),
    }
}

fn daily_costs(kind: LossKind, records: &[ForecastRecord]) -> Vec<f64> {
    records
        .iter()
        .map(|r| kind.loss(r.realized, r.g, r.l, r.capital()))
        .collect()
}

/// Sum of daily capital costs.
pub fn aggregate_cost(kind: LossKind, records: &[ForecastRecord]) -> f64 {
    daily_costs(kind, records).iter().sum()
}

/// Coherent measure `rho_spec` of the realised cost stream, i.e. of the
/// position `-cost_t`. With EL this is the time average of daily costs.
pub fn realized_cost(kind: LossKind, records: &[ForecastRecord], rho_spec: &RiskMeasure) -> Result<f64> {
    let neg: Vec<f64> = daily_costs(kind, records).iter().map(|c| -c).collect();
    riskmeasures::coherent_value(rho_spec, &Sample::new(neg)?)
}

fn mean_of(records: &[ForecastRecord], f: impl Fn(&ForecastRecord) -> f64) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::domain("no records to score"));
    }
    Ok(records.iter().map(f).sum::<f64>() / records.len() as f64)
}

fn check_level(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Mean squared error `E[(X - x)^2]`.
pub fn realized_loss_el(records: &[ForecastRecord]) -> Result<f64> {
    mean_of(records, |r| (r.realized - r.capital()).powi(2))
}

/// Mean pinball loss `E[alpha (X - x)^+ + (1 - alpha) (X - x)^-]`.
pub fn realized_loss_var(records: &[ForecastRecord], alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    mean_of(records, |r| {
        let d = r.realized - r.capital();
        alpha * d.max(0.0) + (1.0 - alpha) * (-d).max(0.0)
    })
}

/// Joint VaR/ES score with an exponential ES term,
///
/// ```text
/// (I - a) z - I X + e^x (x - z + (I / a)(z - X)) - e^x + 1 - ln(1 - a),   I = 1{X < z},
/// ```
///
/// with `x` the sign-corrected ES forecast and `z` the paired VaR forecast.
pub fn realized_loss_es(records: &[ForecastRecord], alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    let mut flagged = 0;
    for (i, r) in records.iter().enumerate() {
        if r.paired_var.is_none() {
            return Err(Error::Pairing(i));
        }
        if r.capital().abs() > ES_SCORE_LIMIT {
            flagged += 1;
        }
    }
    if flagged > 0 {
        log::warn!("{flagged} ES forecasts exceed |x| = {ES_SCORE_LIMIT}; exponential terms may be inaccurate");
    }
    let c = 1.0 - (1.0 - alpha).ln();
    mean_of(records, |r| {
        let (x, z, xr) = (r.capital(), r.paired_var.expect("checked"), r.realized);
        let hit = if xr < z { 1.0 } else { 0.0 };
        let ex = x.exp();
        (hit - alpha) * z - hit * xr + ex * (x - z + hit / alpha * (z - xr)) - ex + c
    })
}

/// Mean asymmetric squared loss `E[alpha ((X - x)^+)^2 + (1 - alpha) ((X - x)^-)^2]`.
pub fn realized_loss_evar(records: &[ForecastRecord], alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    mean_of(records, |r| {
        let d = r.realized - r.capital();
        alpha * d.max(0.0).powi(2) + (1.0 - alpha) * d.min(0.0).powi(2)
    })
}

/// Realised scoring loss matched to the measure a stream forecasts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossMetric {
    El,
    Var(f64),
    Es(f64),
    Evar(f64),
}

impl LossMetric {
    pub fn for_spec(spec: &RiskMeasure) -> Option<Self> {
        match *spec {
            RiskMeasure::El => Some(LossMetric::El),
            RiskMeasure::Var { alpha } => Some(LossMetric::Var(alpha)),
            RiskMeasure::Es { alpha } if alpha < 1.0 => Some(LossMetric::Es(alpha)),
            RiskMeasure::Evar { alpha } if alpha < 1.0 => Some(LossMetric::Evar(alpha)),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossMetric::El => "L_EL",
            LossMetric::Var(_) => "L_VaR",
            LossMetric::Es(_) => "L_ES",
            LossMetric::Evar(_) => "L_EVaR",
        }
    }

    pub fn evaluate(&self, records: &[ForecastRecord]) -> Result<f64> {
        match *self {
            LossMetric::El => realized_loss_el(records),
            LossMetric::Var(a) => realized_loss_var(records, a),
            LossMetric::Es(a) => realized_loss_es(records, a),
            LossMetric::Evar(a) => realized_loss_evar(records, a),
        }
    }
}

/// Column header for the cost of a loss kind (`Cost`, `Cost^b`, `Cost^c`).
pub fn cost_column(kind: LossKind) -> &'static str {
    match kind {
        LossKind::Ours => "Cost",
        LossKind::B => "Cost^b",
        LossKind::C => "Cost^c",
    }
}

/// Column header for the realised cost of a loss kind.
pub fn cr_column(kind: LossKind) -> &'static str {
    match kind {
        LossKind::Ours => "CR",
        LossKind::B => "CR^b",
        LossKind::C => "CR^c",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub split: String,
    pub group: String,
    pub model: String,
    pub measure: String,
    pub days: usize,
    /// Statistics of the forecasts (of the returns for the realised row).
    pub stats: SummaryStats,
    /// Aggregate costs, aligned with [`ScoreTable::kinds`].
    pub cost: Vec<f64>,
    /// Realised costs, aligned with [`ScoreTable::kinds`].
    pub cr: Vec<f64>,
    pub loss: Option<(LossMetric, f64)>,
    /// Columns in which this row is the best (smallest) of its group.
    pub best: Vec<String>,
    /// Columns in which this row is the worst (largest) of its group.
    pub worst: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub kinds: Vec<LossKind>,
    pub scaled: bool,
    pub rows: Vec<ScoreRow>,
}

/// Metrics per stream and split, with best/worst flags per column within
/// each group. Cost, CR and loss columns are multiplied by 1000 when
/// `config.scale1000` is set.
pub fn score_table(records: &[ForecastRecord], config: &RollingConfig) -> Result<ScoreTable> {
    let scale = if config.scale1000 { 1000.0 } else { 1.0 };
    let mut rows = Vec::new();
    for split in &config.splits {
        let in_split: Vec<&ForecastRecord> = records.iter().filter(|r| split.contains(r.date)).collect();
        if in_split.is_empty() {
            return Err(Error::EmptySplit(split.name.clone()));
        }
        for (k, stream) in config.streams.iter().enumerate() {
            let recs: Vec<ForecastRecord> = in_split.iter().filter(|r| r.stream == k).map(|r| (*r).clone()).collect();
            if recs.is_empty() {
                return Err(Error::EmptySplit(format!("{} ({stream})", split.name)));
            }
            let shown: Vec<f64> = match stream {
                Forecaster::Realized => recs.iter().map(|r| r.realized).collect(),
                _ => recs.iter().map(|r| r.forecast).collect(),
            };
            let stats = summary(&Sample::new(shown)?);
            let mut cost = Vec::new();
            let mut cr = Vec::new();
            for &kind in &config.loss_kinds {
                cost.push(scale * aggregate_cost(kind, &recs));
                let mut v = realized_cost(kind, &recs, &config.cr_spec)?;
                if config.cr_sum {
                    v *= recs.len() as f64;
                }
                cr.push(scale * v);
            }
            let loss = match stream {
                Forecaster::Model { spec, .. } => match LossMetric::for_spec(spec) {
                    Some(m) => Some((m, scale * m.evaluate(&recs)?)),
                    None => None,
                },
                _ => None,
            };
            // realized returns are a reference row, never ranked
            let group = if matches!(stream, Forecaster::Realized) {
                "returns".to_string()
            } else if config.group_by_measure {
                stream.measure_label()
            } else {
                "all".to_string()
            };
            rows.push(ScoreRow {
                split: split.name.clone(),
                group,
                model: stream.model_label(),
                measure: stream.measure_label(),
                days: recs.len(),
                stats,
                cost,
                cr,
                loss,
                best: Vec::new(),
                worst: Vec::new(),
            });
        }
    }
    flag_extremes(&mut rows, &config.loss_kinds);
    Ok(ScoreTable {
        kinds: config.loss_kinds.clone(),
        scaled: config.scale1000,
        rows,
    })
}

type Column = (String, Box<dyn Fn(&ScoreRow) -> Option<f64>>);

fn flag_extremes(rows: &mut [ScoreRow], kinds: &[LossKind]) {
    let mut columns: Vec<Column> = Vec::new();
    for (j, &kind) in kinds.iter().enumerate() {
        columns.push((cost_column(kind).to_string(), Box::new(move |r: &ScoreRow| Some(r.cost[j]))));
        columns.push((cr_column(kind).to_string(), Box::new(move |r: &ScoreRow| Some(r.cr[j]))));
    }
    columns.push(("Loss".to_string(), Box::new(|r: &ScoreRow| r.loss.map(|l| l.1))));

    let mut keys: Vec<(String, String)> = rows.iter().map(|r| (r.split.clone(), r.group.clone())).collect();
    keys.dedup();
    for (split, group) in keys {
        let members: Vec<usize> = (0..rows.len())
            .filter(|&i| rows[i].split == split && rows[i].group == group)
            .collect();
        if members.len() < 2 {
            continue;
        }
        for (name, get) in &columns {
            let vals: Vec<(usize, f64)> = members.iter().filter_map(|&i| get(&rows[i]).map(|v| (i, v))).collect();
            if vals.len() < 2 {
                continue;
            }
            let lo = vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
            let hi = vals.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
            if lo == hi {
                continue;
            }
            for &(i, v) in &vals {
                if v == lo {
                    rows[i].best.push(name.clone());
                }
                if v == hi {
                    rows[i].worst.push(name.clone());
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn rec(realized: f64, forecast: f64, g: f64, l: f64) -> ForecastRecord {
        ForecastRecord {
            date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            stream: 0,
            model: "m".into(),
            measure: "s".into(),
            forecast,
            realized,
            g,
            l,
            paired_var: None,
        }
    }

    fn dates(n: usize) -> Vec<NaiveDate> {
        let d0 = NaiveDate::from_ymd_opt(2008, 1, 1).unwrap();
        (0..n).map(|i| d0 + chrono::Days::new(i as u64)).collect()
    }

    fn wiggle(n: usize) -> Vec<f64> {
        (0..n).map(|i| ((i * 7919) % 101) as f64 / 25.0 - 2.0 + (i as f64 * 0.37).sin()).collect()
    }

    #[test]
    fn aggregate_cost_examples() {
        let perfect: Vec<_> = [-1.0, 0.5, -2.0].iter().map(|&x| rec(x, -x, 0.01, 0.02)).collect();
        assert_eq!(aggregate_cost(LossKind::Ours, &perfect), 0.0);
        let b = aggregate_cost(LossKind::B, &perfect);
        assert_abs_diff_eq!(b, (1.0 - 0.5 + 2.0) * 0.01, epsilon = 1e-15);
        assert!(b > 0.0);
        assert_eq!(aggregate_cost(LossKind::Ours, &[rec(1.0, 0.0, 0.5, 0.5)]), 0.5);
    }

    #[test]
    fn realized_cost_examples() {
        let recs: Vec<_> = [(1.0, 0.3), (-0.5, 1.0), (2.0, -1.0)].iter().map(|&(x, f)| rec(x, f, 0.2, 0.7)).collect();
        let total = aggregate_cost(LossKind::Ours, &recs);
        assert_abs_diff_eq!(realized_cost(LossKind::Ours, &recs, &RiskMeasure::El).unwrap(), total / 3.0, epsilon = 1e-12);
        let daily = daily_costs(LossKind::Ours, &recs);
        let max = daily.iter().copied().fold(f64::MIN, f64::max);
        assert_abs_diff_eq!(realized_cost(LossKind::Ours, &recs, &RiskMeasure::Ml).unwrap(), max, epsilon = 1e-15);

        let flat: Vec<_> = (0..4).map(|_| rec(1.0, 0.0, 0.25, 0.25)).collect();
        for spec in [RiskMeasure::El, RiskMeasure::Es { alpha: 0.3 }, RiskMeasure::Ml, RiskMeasure::Msd { beta: 1.0 }] {
            assert_abs_diff_eq!(realized_cost(LossKind::Ours, &flat, &spec).unwrap(), 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn scoring_losses_examples() {
        assert_eq!(realized_loss_el(&[rec(0.0, -1.0, 0.0, 0.0), rec(0.0, 1.0, 0.0, 0.0)]).unwrap(), 1.0);
        assert_eq!(realized_loss_el(&[rec(1.5, -1.5, 0.0, 0.0)]).unwrap(), 0.0);
        assert_abs_diff_eq!(realized_loss_var(&[rec(1.0, 0.0, 0.0, 0.0)], 0.01).unwrap(), 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(realized_loss_var(&[rec(0.0, -1.0, 0.0, 0.0)], 0.01).unwrap(), 0.99, epsilon = 1e-15);
        assert_eq!(realized_loss_evar(&[rec(1.0, 0.0, 0.0, 0.0)], 0.25).unwrap(), 0.25);
        assert_eq!(realized_loss_evar(&[rec(0.7, -0.7, 0.0, 0.0)], 0.25).unwrap(), 0.0);
    }

    #[test]
    fn es_score_examples() {
        let alpha = 0.025;
        let mut r = rec(0.0, 1.0, 0.0, 0.0);
        r.paired_var = Some(-1.0);
        let v = realized_loss_es(&[r.clone()], alpha).unwrap();
        let expected = 0.025 - (-1f64).exp() + 1.0 - (0.975f64).ln();
        assert_abs_diff_eq!(v, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 0.68244, epsilon = 1e-5);

        let mut z = rec(0.0, 0.0, 0.0, 0.0);
        z.paired_var = Some(0.0);
        assert_abs_diff_eq!(realized_loss_es(&[z], alpha).unwrap(), -(1.0 - alpha).ln(), epsilon = 1e-15);

        r.paired_var = None;
        assert!(matches!(realized_loss_es(&[r], alpha), Err(Error::Pairing(0))));
    }

    #[test]
    fn el_loss_is_homogeneous_of_degree_two() {
        let recs: Vec<_> = [(1.0, 0.3), (-0.5, 1.0)].iter().map(|&(x, f)| rec(x, f, 0.0, 0.0)).collect();
        let scaled: Vec<_> = recs.iter().map(|r| rec(3.0 * r.realized, 3.0 * r.forecast, 0.0, 0.0)).collect();
        assert_abs_diff_eq!(
            realized_loss_el(&scaled).unwrap(),
            9.0 * realized_loss_el(&recs).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn pinball_minimised_at_the_empirical_quantile() {
        let xs = wiggle(400);
        let alpha = 0.05;
        let q = crate::empirical::lower_quantile(&Sample::from_slice(&xs).unwrap(), alpha).unwrap();
        let score = |c: f64| {
            let recs: Vec<_> = xs.iter().map(|&x| rec(x, -c, 0.0, 0.0)).collect();
            realized_loss_var(&recs, alpha).unwrap()
        };
        let at_q = score(q);
        for k in -300..=300 {
            assert!(score(q + k as f64 * 0.01) >= at_q - 1e-12);
        }
    }

    #[test]
    fn one_record_per_stream_when_series_is_window_plus_one() {
        let n = 101;
        let x = wiggle(n);
        let costs = CostRates::series(vec![0.0001; n], vec![0.0002; n]).unwrap();
        let mut cfg = RollingConfig::selection(&[ModelSpec::hs()], &[RiskMeasure::Var { alpha: 0.01 }, RiskMeasure::El]);
        cfg.window = 100;
        cfg.streams.push(Forecaster::Robust { kind: LossKind::Ours, spec: RiskMeasure::El });
        let recs = rolling_forecast(&dates(n), &x, &costs, &cfg).unwrap();
        assert_eq!(recs.len(), 3);
        assert!(recs.iter().all(|r| r.date == dates(n)[100]));
    }

    #[test]
    fn hs_var_on_a_constant_series() {
        let n = 130;
        let c = 0.4;
        let costs = CostRates::series(vec![0.0001; n], vec![0.0002; n]).unwrap();
        let mut cfg = RollingConfig::selection(&[ModelSpec::hs()], &[RiskMeasure::Var { alpha: 0.01 }]);
        cfg.window = 100;
        let recs = rolling_forecast(&dates(n), &vec![c; n], &costs, &cfg).unwrap();
        assert_eq!(recs.len(), 30);
        assert!(recs.iter().all(|r| r.forecast == -c));
    }

    #[test]
    fn no_lookahead() {
        let n = 160;
        let x = wiggle(n);
        let costs = CostRates::series((0..n).map(|i| 1e-4 * (1.0 + i as f64 / n as f64)).collect(), vec![2e-4; n]).unwrap();
        let mut cfg = RollingConfig::selection(&[ModelSpec::hs()], &[RiskMeasure::Es { alpha: 0.025 }]);
        cfg.window = 100;
        cfg.streams.push(Forecaster::Robust { kind: LossKind::Ours, spec: RiskMeasure::Ml });
        let base = rolling_forecast(&dates(n), &x, &costs, &cfg).unwrap();
        let cut = 130;
        let mut shuffled = x.clone();
        shuffled[cut + 1..].reverse();
        let other = rolling_forecast(&dates(n), &shuffled, &costs, &cfg).unwrap();
        for (a, b) in base.iter().zip(&other) {
            if a.date <= dates(n)[cut + 1] {
                assert_eq!(a.forecast, b.forecast);
                assert_eq!(a.paired_var, b.paired_var);
            }
        }
    }

    #[test]
    fn score_table_flags_and_splits() {
        let n = 180;
        let d = dates(n);
        let x = wiggle(n);
        let costs = CostRates::series(vec![1e-4; n], vec![3e-4; n]).unwrap();
        let mut cfg = RollingConfig::selection(
            &[ModelSpec::hs(), ModelSpec::hs()],
            &[RiskMeasure::Var { alpha: 0.01 }, RiskMeasure::Es { alpha: 0.025 }],
        );
        cfg.window = 100;
        cfg.splits = Split::around(d[140]);
        let recs = rolling_forecast(&d, &x, &costs, &cfg).unwrap();
        let table = score_table(&recs, &cfg).unwrap();
        assert_eq!(table.rows.len(), 3 * 4);
        // identical models give identical rows and no strict extremes
        for pair in table.rows.chunks(2) {
            assert_eq!(pair[0].cost, pair[1].cost);
            assert_eq!(pair[0].loss, pair[1].loss);
            assert!(pair[0].best.is_empty() && pair[0].worst.is_empty());
        }
        let first_half: Vec<_> = recs.iter().filter(|r| r.stream == 0 && r.date <= d[140]).cloned().collect();
        let row = &table.rows[4];
        assert_eq!(row.days, first_half.len());
        assert_eq!(row.cost[0], aggregate_cost(LossKind::Ours, &first_half));

        cfg.splits = vec![Split {
            name: "later".into(),
            start: NaiveDate::from_ymd_opt(2030, 1, 1),
            end: None,
        }];
        assert!(matches!(score_table(&recs, &cfg), Err(Error::EmptySplit(_))));
    }

    #[test]
    fn best_flag_goes_to_the_minimum() {
        let n = 150;
        let d = dates(n);
        let x = wiggle(n);
        let costs = CostRates::series(vec![1e-4; n], vec![3e-4; n]).unwrap();
        let mut cfg = RollingConfig::selection(&[ModelSpec::hs()], &[RiskMeasure::El, RiskMeasure::Var { alpha: 0.01 }]);
        cfg.window = 100;
        cfg.group_by_measure = false;
        let recs = rolling_forecast(&d, &x, &costs, &cfg).unwrap();
        let t = score_table(&recs, &cfg).unwrap();
        let best = if t.rows[0].cr[0] < t.rows[1].cr[0] { 0 } else { 1 };
        assert!(t.rows[best].best.contains(&"CR".to_string()));
        assert!(t.rows[1 - best].worst.contains(&"CR".to_string()));
    }

    proptest! {
        #[test]
        fn ours_cost_is_nonnegative(v in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, 0.0f64..0.1, 0.0f64..0.1), 1..30)) {
            let recs: Vec<_> = v.iter().map(|&(x, f, g, l)| rec(x, f, g, l)).collect();
            prop_assert!(aggregate_cost(LossKind::Ours, &recs) >= 0.0);
            let el = realized_cost(LossKind::Ours, &recs, &RiskMeasure::El).unwrap();
            let es = realized_cost(LossKind::Ours, &recs, &RiskMeasure::Es { alpha: 0.1 }).unwrap();
            let ml = realized_cost(LossKind::Ours, &recs, &RiskMeasure::Ml).unwrap();
            prop_assert!(el <= es + 1e-12 && es <= ml + 1e-12);
            prop_assert!((el - aggregate_cost(LossKind::Ours, &recs) / recs.len() as f64).abs() <= 1e-12);
        }
    }
}

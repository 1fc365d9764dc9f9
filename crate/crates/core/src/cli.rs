//! Data ingestion, run configuration and the batch commands behind the
//! `robust-risk` binary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::backtest::{
    cost_column, cr_column, rolling_forecast, score_table, ForecastRecord, Forecaster, RollingConfig, ScoreTable,
    Split,
};
use crate::distributions::{DistSpec, InnovationDist};
use crate::empirical::log_returns;
use crate::error::{Error, Result};
use crate::garch::{simulate, GarchParams, ModelSpec};
use crate::riskmeasures::RiskMeasure;
use crate::robust::{CostRates, LossKind};

/// Longest run of business days a yield may be carried forward.
pub const MAX_FILL_DAYS: i64 = 5;

/// Invalid configuration or command-line input (as opposed to bad data).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// Date-aligned prices and annual yields (in percent).
#[derive(Debug, Clone, PartialEq)]
pub struct MarketDataset {
    pub dates: Vec<NaiveDate>,
    pub prices: Vec<f64>,
    pub yield_g: Vec<f64>,
    pub yield_l: Vec<f64>,
}

impl MarketDataset {
    pub fn new(dates: Vec<NaiveDate>, prices: Vec<f64>, yield_g: Vec<f64>, yield_l: Vec<f64>) -> Result<Self> {
        let n = dates.len();
        Error::check_len(n, prices.len())?;
        Error::check_len(n, yield_g.len())?;
        Error::check_len(n, yield_l.len())?;
        if n < 2 {
            return Err(Error::Data("need at least two dated prices".into()));
        }
        if let Some(i) = dates.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::Data(format!("dates not strictly increasing at {}", dates[i + 1])));
        }
        if let Some(i) = prices.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::domain(format!("price on {} must be positive, got {}", dates[i], prices[i])));
        }
        for (name, ys) in [("yield_g", &yield_g), ("yield_l", &yield_l)] {
            if let Some(i) = ys.iter().position(|y| !(y.is_finite() && *y >= 0.0)) {
                return Err(Error::domain(format!("{name} on {} must be nonnegative, got {}", dates[i], ys[i])));
            }
        }
        Ok(Self {
            dates,
            prices,
            yield_g,
            yield_l,
        })
    }

    /// Percentage log returns, dated by the later price.
    pub fn returns(&self) -> Result<(Vec<NaiveDate>, Vec<f64>)> {
        let r = log_returns(&self.prices)?;
        Ok((self.dates[1..].to_vec(), r.into_inner()))
    }

    /// Daily cost rates aligned with [`MarketDataset::returns`].
    pub fn cost_rates(&self, daycount: f64, compound: bool) -> Result<CostRates> {
        let conv = |ys: &[f64]| -> Vec<f64> { ys[1..].iter().map(|&y| daily_rate(y, daycount, compound)).collect() };
        CostRates::series(conv(&self.yield_g), conv(&self.yield_l))
    }
}

/// Converts an annual yield in percent to a daily decimal rate.
pub fn daily_rate(annual_pct: f64, daycount: f64, compound: bool) -> f64 {
    let y = annual_pct / 100.0;
    if compound {
        (1.0 + y).powf(1.0 / daycount) - 1.0
    } else {
        y / daycount
    }
}

/// Reads a `date,value` CSV. Blank values and `.` mark missing
/// observations and are skipped.
pub fn read_series(path: &Path) -> Result<Vec<(NaiveDate, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Data(format!("{}:{line}: {e}", path.display())))?;
        if row.len() < 2 {
            return Err(Error::Data(format!("{}:{line}: expected date,value", path.display())));
        }
        let date = NaiveDate::parse_from_str(&row[0], "%Y-%m-%d")
            .map_err(|e| Error::Data(format!("{}:{line}: bad date {:?}: {e}", path.display(), &row[0])))?;
        let raw = &row[1];
        if raw.is_empty() || raw == "." {
            continue;
        }
        let value: f64 = raw
            .parse()
            .map_err(|_| Error::Data(format!("{}:{line}: bad value {raw:?}", path.display())))?;
        out.push((date, value));
    }
    Ok(out)
}

fn business_days_between(from: NaiveDate, to: NaiveDate) -> i64 {
    let mut d = from;
    let mut n = 0;
    while d < to {
        d = d + Days::new(1);
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            n += 1;
        }
    }
    n
}

fn align(prices: &[(NaiveDate, f64)], yields: &[(NaiveDate, f64)], name: &str) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(prices.len());
    let mut j = 0;
    let mut last: Option<(NaiveDate, f64)> = None;
    for &(d, _) in prices {
        while j < yields.len() && yields[j].0 <= d {
            last = Some(yields[j]);
            j += 1;
        }
        match last {
            Some((yd, y)) if business_days_between(yd, d) <= MAX_FILL_DAYS => out.push(y),
            Some((yd, _)) => {
                return Err(Error::Data(format!(
                    "{name}: no observation between {yd} and {d} (more than {MAX_FILL_DAYS} business days)"
                )))
            }
            None => return Err(Error::Data(format!("{name}: no observation on or before {d}"))),
        }
    }
    Ok(out)
}

/// Joins the three series on the price dates, forward-filling yields over
/// gaps of at most [`MAX_FILL_DAYS`] business days.
pub fn ingest(price_csv: &Path, yield_g_csv: &Path, yield_l_csv: &Path) -> Result<MarketDataset> {
    let prices = read_series(price_csv)?;
    let g = read_series(yield_g_csv)?;
    let l = read_series(yield_l_csv)?;
    for (name, s) in [("prices", &prices), ("yield_g", &g), ("yield_l", &l)] {
        if let Some(w) = s.windows(2).find(|w| w[0].0 >= w[1].0) {
            return Err(Error::Data(format!("{name}: dates not increasing at {}", w[1].0)));
        }
    }
    let yg = align(&prices, &g, "yield_g")?;
    let yl = align(&prices, &l, "yield_l")?;
    let (dates, px) = prices.into_iter().unzip();
    MarketDataset::new(dates, px, yg, yl)
}

fn write_series(path: &Path, dates: &[NaiveDate], values: &[f64]) -> Result<()> {
    let mut s = String::from("date,value\n");
    for (d, v) in dates.iter().zip(values) {
        // shortest representation that round-trips exactly
        writeln!(s, "{d},{v}").expect("write to string");
    }
    fs::write(path, s)?;
    Ok(())
}

pub const PRICES_FILE: &str = "prices.csv";
pub const YIELD_G_FILE: &str = "yield_g.csv";
pub const YIELD_L_FILE: &str = "yield_l.csv";

/// Writes `prices.csv`, `yield_g.csv` and `yield_l.csv` into `dir`.
pub fn write_dataset(dir: &Path, data: &MarketDataset) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_series(&dir.join(PRICES_FILE), &data.dates, &data.prices)?;
    write_series(&dir.join(YIELD_G_FILE), &data.dates, &data.yield_g)?;
    write_series(&dir.join(YIELD_L_FILE), &data.dates, &data.yield_l)?;
    Ok(())
}

/// Settings shared by the commands. Every field can be set from a flat
/// `key = value` file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub window: usize,
    pub var_alpha: f64,
    pub es_alpha: f64,
    pub evar_alpha: f64,
    pub msd_beta: f64,
    pub models: Vec<ModelSpec>,
    pub kinds: Vec<LossKind>,
    /// Boundary between the two sub-samples; `None` keeps only the full sample.
    pub split: Option<NaiveDate>,
    pub oos_start: Option<NaiveDate>,
    pub daycount: f64,
    pub compound: bool,
    pub scale1000: bool,
    pub cr_spec: RiskMeasure,
    pub cr_sum: bool,
    pub sim: SimConfig,
}

/// Parameters of the synthetic market used by `simulate`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub days: usize,
    pub start: NaiveDate,
    pub mu: f64,
    pub phi: f64,
    pub omega: f64,
    pub a: f64,
    pub b: f64,
    pub dist: InnovationDist,
    pub yield_g: f64,
    pub yield_l: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            days: 300,
            start: NaiveDate::from_ymd_opt(2008, 1, 2).expect("valid date"),
            mu: 0.03,
            phi: 0.05,
            omega: 0.02,
            a: 0.08,
            b: 0.9,
            dist: InnovationDist::normal(),
            yield_g: 2.0,
            yield_l: 3.0,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut models = vec![ModelSpec::hs(), ModelSpec::fhs(DistSpec::ALL[0])];
        models.extend(DistSpec::ALL.iter().map(|d| ModelSpec::garch(*d)));
        Self {
            window: 250,
            var_alpha: 0.01,
            es_alpha: 0.025,
            evar_alpha: 0.00145,
            msd_beta: 1.0,
            models,
            kinds: LossKind::ALL.to_vec(),
            split: NaiveDate::from_ymd_opt(2008, 12, 31),
            oos_start: None,
            daycount: 252.0,
            compound: false,
            scale1000: false,
            cr_spec: RiskMeasure::El,
            cr_sum: false,
            sim: SimConfig::default(),
        }
    }
}

fn usage(msg: String) -> UsageError {
    UsageError(msg)
}

type UsageResult<T> = std::result::Result<T, UsageError>;

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> UsageResult<()> {
        let v = value.trim();
        let num = |v: &str| -> UsageResult<f64> { v.parse().map_err(|_| usage(format!("{key}: not a number: {v:?}"))) };
        let flag = |v: &str| -> UsageResult<bool> {
            match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" | "on" => Ok(true),
                "false" | "no" | "0" | "off" => Ok(false),
                _ => Err(usage(format!("{key}: not a boolean: {v:?}"))),
            }
        };
        let date = |v: &str| -> UsageResult<NaiveDate> {
            NaiveDate::parse_from_str(v, "%Y-%m-%d").map_err(|_| usage(format!("{key}: not a date: {v:?}")))
        };
        let list = |v: &str| v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect::<Vec<_>>();
        match key.trim() {
            "window" => self.window = v.parse().map_err(|_| usage(format!("window: not an integer: {v:?}")))?,
            "var_alpha" => self.var_alpha = num(v)?,
            "es_alpha" => self.es_alpha = num(v)?,
            "evar_alpha" => self.evar_alpha = num(v)?,
            "msd_beta" => self.msd_beta = num(v)?,
            "models" => {
                self.models = list(v)
                    .iter()
                    .map(|m| m.parse().map_err(|e: Error| usage(e.to_string())))
                    .collect::<UsageResult<_>>()?
            }
            "kinds" => {
                self.kinds = list(v)
                    .iter()
                    .map(|m| m.parse().map_err(|e: Error| usage(e.to_string())))
                    .collect::<UsageResult<_>>()?
            }
            "split" => self.split = if v.eq_ignore_ascii_case("none") { None } else { Some(date(v)?) },
            "oos_start" => self.oos_start = if v.eq_ignore_ascii_case("none") { None } else { Some(date(v)?) },
            "daycount" => self.daycount = num(v)?,
            "compound" => self.compound = flag(v)?,
            "scale1000" => self.scale1000 = flag(v)?,
            "cr_spec" => self.cr_spec = v.parse().map_err(|e: Error| usage(e.to_string()))?,
            "cr_sum" => self.cr_sum = flag(v)?,
            "sim_days" => self.sim.days = v.parse().map_err(|_| usage(format!("sim_days: not an integer: {v:?}")))?,
            "sim_start" => self.sim.start = date(v)?,
            "sim_mu" => self.sim.mu = num(v)?,
            "sim_phi" => self.sim.phi = num(v)?,
            "sim_omega" => self.sim.omega = num(v)?,
            "sim_a" => self.sim.a = num(v)?,
            "sim_b" => self.sim.b = num(v)?,
            "sim_yield_g" => self.sim.yield_g = num(v)?,
            "sim_yield_l" => self.sim.yield_l = num(v)?,
            other => return Err(usage(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    /// Parses a flat `key = value` file; `#` starts a comment.
    pub fn parse(text: &str) -> UsageResult<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("config line {}: expected key = value", i + 1)))?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> UsageResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> UsageResult<()> {
        let specs = [
            RiskMeasure::Var { alpha: self.var_alpha },
            RiskMeasure::Es { alpha: self.es_alpha },
            RiskMeasure::Evar { alpha: self.evar_alpha },
            RiskMeasure::Msd { beta: self.msd_beta },
        ];
        for s in specs {
            s.validate().map_err(|e| usage(e.to_string()))?;
        }
        if !(self.evar_alpha <= 0.5) {
            return Err(usage("evar_alpha must not exceed 0.5 for a coherent EVaR".into()));
        }
        if self.window < 100 {
            return Err(usage(format!("window must be at least 100, got {}", self.window)));
        }
        if !(self.daycount > 0.0) {
            return Err(usage("daycount must be positive".into()));
        }
        if self.models.is_empty() || self.kinds.is_empty() {
            return Err(usage("models and kinds must not be empty".into()));
        }
        Ok(())
    }

    /// Coherent measures used for robust capital.
    pub fn robust_specs(&self) -> Vec<RiskMeasure> {
        vec![
            RiskMeasure::El,
            RiskMeasure::Msd { beta: self.msd_beta },
            RiskMeasure::Es { alpha: self.es_alpha },
            RiskMeasure::Evar { alpha: self.evar_alpha },
            RiskMeasure::Ml,
        ]
    }

    /// Elicitable measures scored in model selection.
    pub fn selection_specs(&self) -> Vec<RiskMeasure> {
        vec![
            RiskMeasure::El,
            RiskMeasure::Var { alpha: self.var_alpha },
            RiskMeasure::Es { alpha: self.es_alpha },
            RiskMeasure::Evar { alpha: self.evar_alpha },
        ]
    }

    fn rolling(&self, streams: Vec<Forecaster>, group_by_measure: bool) -> RollingConfig {
        RollingConfig {
            window: self.window,
            streams,
            loss_kinds: self.kinds.clone(),
            splits: match self.split {
                Some(d) => Split::around(d),
                None => vec![Split::full()],
            },
            oos_start: self.oos_start,
            cr_spec: self.cr_spec,
            cr_sum: self.cr_sum,
            scale1000: self.scale1000,
            group_by_measure,
        }
    }
}

/// Output of `measure` or `select`.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub config: RollingConfig,
    pub table: ScoreTable,
    pub records: Vec<ForecastRecord>,
}

fn run(data: &MarketDataset, cfg: &RunConfig, command: &'static str, rolling: RollingConfig) -> Result<Report> {
    let (dates, returns) = data.returns()?;
    let costs = data.cost_rates(cfg.daycount, cfg.compound)?;
    let records = rolling_forecast(&dates, &returns, &costs, &rolling)?;
    let table = score_table(&records, &rolling)?;
    Ok(Report {
        command,
        config: rolling,
        table,
        records,
    })
}

/// Capital determination: robust capital for every loss kind and coherent
/// measure, plus HS VaR, ES and ML benchmarks and the realised returns.
pub fn cmd_measure(data: &MarketDataset, cfg: &RunConfig) -> Result<Report> {
    let mut streams = Vec::new();
    for &kind in &cfg.kinds {
        for spec in cfg.robust_specs() {
            streams.push(Forecaster::Robust { kind, spec });
        }
    }
    for spec in [
        RiskMeasure::Var { alpha: cfg.var_alpha },
        RiskMeasure::Es { alpha: cfg.es_alpha },
        RiskMeasure::Ml,
    ] {
        streams.push(Forecaster::Model {
            model: ModelSpec::hs(),
            spec,
        });
    }
    streams.push(Forecaster::Realized);
    run(data, cfg, "measure", cfg.rolling(streams, false))
}

/// Model selection: every configured model forecasting EL, VaR, ES and
/// EVaR, scored by realised cost and realised loss.
pub fn cmd_select(data: &MarketDataset, cfg: &RunConfig) -> Result<Report> {
    let mut rolling = RollingConfig::selection(&cfg.models, &cfg.selection_specs());
    rolling = RollingConfig {
        streams: rolling.streams,
        ..cfg.rolling(Vec::new(), true)
    };
    run(data, cfg, "select", rolling)
}

fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

/// Synthetic market: AR(1)-GARCH(1,1) percentage log returns turned into a
/// price index, and two slowly drifting yields. Deterministic given `seed`.
pub fn cmd_simulate(seed: u64, sim: &SimConfig) -> Result<MarketDataset> {
    let params = GarchParams::new(sim.mu, sim.phi, sim.omega, sim.a, sim.b, sim.dist)?;
    if sim.days < 2 {
        return Err(Error::domain("simulation needs at least two days"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let returns = simulate(&params, sim.days - 1, &mut rng)?;
    let mut prices = Vec::with_capacity(sim.days);
    let mut p = 1000.0f64;
    prices.push(p);
    for r in &returns {
        p *= (r / 100.0).exp();
        prices.push(p);
    }
    let mut walk = |level: f64| -> Vec<f64> {
        let mut y = level;
        (0..sim.days)
            .map(|_| {
                let step: f64 = rng.sample(StandardNormal);
                y = (y + 0.01 * step + 0.002 * (level - y)).max(0.0);
                y
            })
            .collect()
    };
    let yg = walk(sim.yield_g);
    let yl = walk(sim.yield_l);
    MarketDataset::new(business_days(sim.start, sim.days), prices, yg, yl)
}

/// Fixed-precision number for reports; negative zero prints as zero.
pub fn fmt6(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

impl Report {
    fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["split", "model", "measure", "days", "mean", "dev", "min", "max"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for &k in &self.table.kinds {
            h.push(cost_column(k).to_string());
        }
        for &k in &self.table.kinds {
            h.push(cr_column(k).to_string());
        }
        h.extend(["loss", "loss_value", "best", "worst"].iter().map(|s| s.to_string()));
        h
    }

    fn cells(&self) -> Vec<Vec<String>> {
        self.table
            .rows
            .iter()
            .map(|r| {
                let mut c = vec![
                    r.split.clone(),
                    r.model.clone(),
                    r.measure.clone(),
                    r.days.to_string(),
                    fmt6(r.stats.mean),
                    fmt6(r.stats.dev),
                    fmt6(r.stats.min),
                    fmt6(r.stats.max),
                ];
                c.extend(r.cost.iter().map(|v| fmt6(*v)));
                c.extend(r.cr.iter().map(|v| fmt6(*v)));
                match r.loss {
                    Some((m, v)) => {
                        c.push(m.name().to_string());
                        c.push(fmt6(v));
                    }
                    None => {
                        c.push(String::new());
                        c.push(String::new());
                    }
                }
                c.push(r.best.join(";"));
                c.push(r.worst.join(";"));
                c
            })
            .collect()
    }

    /// Machine-readable table with fixed columns.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header()).expect("in-memory write");
        for row in self.cells() {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
    }

    /// Aligned text table, one block per split.
    pub fn to_text(&self) -> String {
        let header = self.header();
        let cells = self.cells();
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let line = |row: &[String]| -> String {
            let parts: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .skip(1)
                .map(|(i, (c, w))| {
                    // labels left, numbers right
                    let label = i <= 2 || i == row.len() - 4 || i >= row.len() - 2;
                    if label {
                        format!("{c:<w$}")
                    } else {
                        format!("{c:>w$}")
                    }
                })
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        let mut out = String::new();
        let scale = if self.table.scaled { " (costs and losses x1000)" } else { "" };
        writeln!(out, "{} report{scale}", self.command).expect("write to string");
        let mut by_split: BTreeMap<usize, (&str, Vec<&Vec<String>>)> = BTreeMap::new();
        let mut order: Vec<&str> = Vec::new();
        for row in &cells {
            if !order.contains(&row[0].as_str()) {
                order.push(&row[0]);
            }
            let k = order.iter().position(|s| *s == row[0]).expect("present");
            by_split.entry(k).or_insert((&row[0], Vec::new())).1.push(row);
        }
        for (_, (split, rows)) in by_split {
            writeln!(out, "\n[{split}]").expect("write to string");
            writeln!(out, "{}", line(&header)).expect("write to string");
            for r in rows {
                writeln!(out, "{}", line(r)).expect("write to string");
            }
        }
        out
    }

    /// Gnuplot-friendly columns: date followed by one column per stream
    /// (realised returns for the returns stream).
    pub fn to_dat(&self) -> String {
        let mut out = String::from("# date");
        for (k, s) in self.config.streams.iter().enumerate() {
            write!(out, " \"{k}:{s}\"").expect("write to string");
        }
        out.push('\n');
        let mut rows: BTreeMap<NaiveDate, Vec<String>> = BTreeMap::new();
        let width = self.config.streams.len();
        for r in &self.records {
            let v = match self.config.streams[r.stream] {
                Forecaster::Realized => r.realized,
                _ => r.forecast,
            };
            rows.entry(r.date).or_insert_with(|| vec!["NaN".to_string(); width])[r.stream] = fmt6(v);
        }
        for (d, vals) in rows {
            writeln!(out, "{d} {}", vals.join(" ")).expect("write to string");
        }
        out
    }

    /// Writes `<command>.csv`, `<command>.txt` and `<command>_series.dat`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let files = [
            (dir.join(format!("{}.csv", self.command)), self.to_csv()),
            (dir.join(format!("{}.txt", self.command)), self.to_text()),
            (dir.join(format!("{}_series.dat", self.command)), self.to_dat()),
        ];
        let mut paths = Vec::new();
        for (p, body) in files {
            fs::write(&p, body)?;
            paths.push(p);
        }
        Ok(paths)
    }
}

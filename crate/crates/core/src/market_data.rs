//! Price, sector and EPU ingestion, panel cleaning and log returns.
//!
//! Panels are stored as `dates × tickers` matrices. Missing prices are held
//! as `NaN` and flagged in a parallel boolean mask; cleaning replaces them by
//! forward fill and records every imputed cell.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats;

pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// Three market years of 252 trading days.
pub const DEFAULT_MAX_CONSECUTIVE_DAYS: usize = 756;
pub const DEFAULT_MAX_MISSING_FRAC: f64 = 0.30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sector {
    Financial,
    NonFinancial,
}

impl FromStr for Sector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "F" => Ok(Sector::Financial),
            "NF" => Ok(Sector::NonFinancial),
            other => Err(Error::domain(
                "sector",
                format!("unknown sector `{other}`, expected F or NF"),
            )),
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sector::Financial => "F",
            Sector::NonFinancial => "NF",
        })
    }
}

pub type SectorMap = BTreeMap<String, Sector>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalendarPolicy {
    #[default]
    Union,
    Intersection,
}

impl FromStr for CalendarPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "union" => Ok(CalendarPolicy::Union),
            "intersection" => Ok(CalendarPolicy::Intersection),
            other => Err(Error::Config(format!("unknown calendar policy `{other}`"))),
        }
    }
}

/// A calendar month, written `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn of(date: NaiveDate) -> Self {
        YearMonth {
            year: date.year(),
            month: date.month(),
        }
    }

    pub fn next(self) -> Self {
        if self.month == 12 {
            YearMonth {
                year: self.year + 1,
                month: 1,
            }
        } else {
            YearMonth {
                year: self.year,
                month: self.month + 1,
            }
        }
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::domain("month", format!("expected YYYY-MM, got `{s}`"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        if !(1..=12).contains(&month) {
            return Err(bad());
        }
        Ok(YearMonth { year, month })
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

pub fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), DATE_FORMAT)
        .map_err(|e| Error::domain("date", format!("`{s}`: {e}")))
}

/// Daily adjusted closing prices aligned to one calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    pub tickers: Vec<String>,
    pub dates: Vec<NaiveDate>,
    /// `dates × tickers`; `NaN` where missing.
    pub prices: DMatrix<f64>,
    pub missing: DMatrix<bool>,
    /// Cells filled in by [`clean_panel`].
    pub imputed: DMatrix<bool>,
    pub sector_tags: SectorMap,
}

/// A price cell that failed validation and was treated as missing.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedCell {
    pub line: u64,
    pub ticker: String,
    pub date: NaiveDate,
    pub reason: String,
}

impl fmt::Display for RejectedCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}: {} {} rejected: {}",
            self.line, self.ticker, self.date, self.reason
        )
    }
}

#[derive(Debug, Clone)]
pub struct PriceLoad {
    pub panel: PricePanel,
    pub rejected: Vec<RejectedCell>,
}

impl PricePanel {
    /// Builds a panel from per-ticker observations. `None` values mark
    /// missing prices; every present price must be positive and finite.
    pub fn from_observations(
        observations: BTreeMap<String, BTreeMap<NaiveDate, Option<f64>>>,
        policy: CalendarPolicy,
        sectors: Option<&SectorMap>,
    ) -> Result<Self> {
        let tickers: Vec<String> = observations.keys().cloned().collect();
        let dates: Vec<NaiveDate> = match policy {
            CalendarPolicy::Union => observations
                .values()
                .flat_map(|obs| obs.keys().copied())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
            CalendarPolicy::Intersection => {
                let mut iter = observations.values().map(|obs| {
                    obs.iter()
                        .filter(|(_, p)| p.is_some())
                        .map(|(d, _)| *d)
                        .collect::<BTreeSet<_>>()
                });
                let first = iter.next().unwrap_or_default();
                iter.fold(first, |acc, set| acc.intersection(&set).copied().collect())
                    .into_iter()
                    .collect()
            }
        };

        let (n_dates, n_tickers) = (dates.len(), tickers.len());
        let mut prices = DMatrix::from_element(n_dates, n_tickers, f64::NAN);
        let mut missing = DMatrix::from_element(n_dates, n_tickers, true);
        for (j, obs) in observations.values().enumerate() {
            for (i, date) in dates.iter().enumerate() {
                if let Some(Some(p)) = obs.get(date) {
                    if !(p.is_finite() && *p > 0.0) {
                        return Err(Error::domain(
                            "price panel",
                            format!("price {p} for {} on {date} is not positive", tickers[j]),
                        ));
                    }
                    prices[(i, j)] = *p;
                    missing[(i, j)] = false;
                }
            }
        }

        let sector_tags = tag_sectors(&tickers, sectors)?;
        Ok(PricePanel {
            tickers,
            dates,
            prices,
            missing,
            imputed: DMatrix::from_element(n_dates, n_tickers, false),
            sector_tags,
        })
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    pub fn column(&self, ticker: usize) -> &[f64] {
        let n = self.prices.nrows();
        &self.prices.as_slice()[ticker * n..(ticker + 1) * n]
    }

    /// Multiplies every price by `c > 0`.
    pub fn scaled(&self, c: f64) -> PricePanel {
        let mut out = self.clone();
        out.prices *= c;
        out
    }

    /// Replaces the sector tags; every ticker must be present in `sectors`.
    pub fn with_sectors(mut self, sectors: &SectorMap) -> Result<Self> {
        self.sector_tags = tag_sectors(&self.tickers, Some(sectors))?;
        Ok(self)
    }
}

fn tag_sectors(tickers: &[String], sectors: Option<&SectorMap>) -> Result<SectorMap> {
    match sectors {
        Some(map) => tickers
            .iter()
            .map(|t| {
                map.get(t)
                    .map(|s| (t.clone(), *s))
                    .ok_or_else(|| Error::MissingSector(t.clone()))
            })
            .collect(),
        None => {
            if !tickers.is_empty() {
                log::warn!("no sector map supplied; tagging every ticker NF");
            }
            Ok(tickers
                .iter()
                .map(|t| (t.clone(), Sector::NonFinancial))
                .collect())
        }
    }
}

/// Reads a long-format `date,ticker,close` price file.
pub fn load_prices(
    path: impl AsRef<Path>,
    policy: CalendarPolicy,
    sectors: Option<&SectorMap>,
) -> Result<PriceLoad> {
    let path = path.as_ref();
    let mut reader = formats::reader(path, &["date", "ticker", "close"])?;
    let mut observations: BTreeMap<String, BTreeMap<NaiveDate, Option<f64>>> = BTreeMap::new();
    let mut rejected = Vec::new();

    for record in reader.records() {
        let record = record.map_err(|e| Error::malformed(path, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let date = parse_date(&record[0])
            .map_err(|e| Error::malformed(path, format!("line {line}: {e}")))?;
        let ticker = record[1].to_string();
        if ticker.is_empty() {
            return Err(Error::malformed(path, format!("line {line}: empty ticker")));
        }
        let close = match record[2].trim() {
            "" => None,
            raw => {
                let value: f64 = raw.parse().map_err(|_| {
                    Error::malformed(path, format!("line {line}: close `{raw}` is not a number"))
                })?;
                if value.is_finite() && value > 0.0 {
                    Some(value)
                } else {
                    let cell = RejectedCell {
                        line,
                        ticker: ticker.clone(),
                        date,
                        reason: format!("nonpositive price {raw}"),
                    };
                    log::warn!("{}: {cell}", path.display());
                    rejected.push(cell);
                    None
                }
            }
        };
        let series = observations.entry(ticker.clone()).or_default();
        if series.insert(date, close).is_some() {
            return Err(Error::DuplicateDate {
                ticker,
                date: date.to_string(),
            });
        }
    }

    let panel = PricePanel::from_observations(observations, policy, sectors)?;
    Ok(PriceLoad { panel, rejected })
}

/// Reads a `ticker,sector` file with sectors `F` or `NF`.
pub fn load_sectors(path: impl AsRef<Path>) -> Result<SectorMap> {
    let path = path.as_ref();
    let mut reader = formats::reader(path, &["ticker", "sector"])?;
    let mut out = SectorMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::malformed(path, e.to_string()))?;
        let sector = record[1]
            .parse()
            .map_err(|e: Error| Error::malformed(path, e.to_string()))?;
        out.insert(record[0].to_string(), sector);
    }
    Ok(out)
}

/// Screening thresholds for [`clean_panel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningRules {
    pub max_consecutive_days: usize,
    pub max_missing_frac: f64,
    /// Tickers exempt from screening (still forward-filled).
    #[serde(default)]
    pub keep: BTreeSet<String>,
}

impl Default for CleaningRules {
    fn default() -> Self {
        CleaningRules {
            max_consecutive_days: DEFAULT_MAX_CONSECUTIVE_DAYS,
            max_missing_frac: DEFAULT_MAX_MISSING_FRAC,
            keep: BTreeSet::new(),
        }
    }
}

pub fn longest_missing_run(mask: &[bool]) -> usize {
    let mut best = 0;
    let mut run = 0;
    for &m in mask {
        run = if m { run + 1 } else { 0 };
        best = best.max(run);
    }
    best
}

/// Drops tickers with too many missing prices and forward-fills the rest.
pub fn clean_panel(panel: &PricePanel, rules: &CleaningRules) -> Result<PricePanel> {
    if rules.max_consecutive_days < 1 {
        return Err(Error::Config(
            "max_consecutive_days must be at least 1".into(),
        ));
    }
    if !(rules.max_missing_frac > 0.0 && rules.max_missing_frac < 1.0) {
        return Err(Error::Config("max_missing_frac must lie in (0, 1)".into()));
    }
    let n_dates = panel.n_dates();

    let retained: Vec<usize> = (0..panel.n_tickers())
        .filter(|&j| {
            let ticker = &panel.tickers[j];
            let mask = panel.missing.column(j);
            let mask = mask.as_slice();
            let run = longest_missing_run(mask);
            let frac = if n_dates == 0 {
                1.0
            } else {
                mask.iter().filter(|m| **m).count() as f64 / n_dates as f64
            };
            let exempt = rules.keep.contains(ticker);
            let present = mask.iter().any(|m| !m);
            let keep = present
                && (exempt
                    || (run <= rules.max_consecutive_days && frac <= rules.max_missing_frac));
            if !keep {
                log::info!(
                    "dropping {ticker}: longest missing run {run}, missing fraction {frac:.3}"
                );
            }
            keep
        })
        .collect();

    if retained.is_empty() {
        return Err(Error::EmptyPanel);
    }

    let k = retained.len();
    let mut prices = DMatrix::from_element(n_dates, k, f64::NAN);
    let mut missing = DMatrix::from_element(n_dates, k, false);
    let mut imputed = DMatrix::from_element(n_dates, k, false);
    for (c, &j) in retained.iter().enumerate() {
        let src = panel.prices.column(j);
        let first = (0..n_dates)
            .find(|&i| !panel.missing[(i, j)])
            .expect("retained tickers have at least one price");
        let mut last = src[first];
        for i in 0..n_dates {
            if panel.missing[(i, j)] {
                prices[(i, c)] = last;
                imputed[(i, c)] = true;
            } else {
                last = src[i];
                prices[(i, c)] = last;
                imputed[(i, c)] = panel.imputed[(i, j)];
            }
            missing[(i, c)] = false;
        }
    }

    let tickers: Vec<String> = retained.iter().map(|&j| panel.tickers[j].clone()).collect();
    let sector_tags = tickers
        .iter()
        .filter_map(|t| panel.sector_tags.get(t).map(|s| (t.clone(), *s)))
        .collect();
    Ok(PricePanel {
        tickers,
        dates: panel.dates.clone(),
        prices,
        missing,
        imputed,
        sector_tags,
    })
}

/// Daily log returns; row `t` is the return from `dates[t]` of the source
/// panel to the next trading day and is labelled with the later date.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    pub tickers: Vec<String>,
    pub dates: Vec<NaiveDate>,
    pub returns: DMatrix<f64>,
    pub imputed: DMatrix<bool>,
    pub sector_tags: SectorMap,
}

impl ReturnPanel {
    pub fn new(
        tickers: Vec<String>,
        dates: Vec<NaiveDate>,
        returns: DMatrix<f64>,
        sector_tags: SectorMap,
    ) -> Result<Self> {
        if returns.nrows() != dates.len() || returns.ncols() != tickers.len() {
            return Err(Error::domain(
                "return panel",
                format!(
                    "matrix is {}x{} but there are {} dates and {} tickers",
                    returns.nrows(),
                    returns.ncols(),
                    dates.len(),
                    tickers.len()
                ),
            ));
        }
        let imputed = DMatrix::from_element(dates.len(), tickers.len(), false);
        Ok(ReturnPanel {
            tickers,
            dates,
            returns,
            imputed,
            sector_tags,
        })
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    pub fn series(&self, ticker: usize) -> &[f64] {
        let n = self.returns.nrows();
        &self.returns.as_slice()[ticker * n..(ticker + 1) * n]
    }

    /// Index of the last date on or before `date`.
    pub fn index_at_or_before(&self, date: NaiveDate) -> Option<usize> {
        match self.dates.binary_search(&date) {
            Ok(i) => Some(i),
            Err(0) => None,
            Err(i) => Some(i - 1),
        }
    }
}

pub fn log_returns(panel: &PricePanel) -> Result<ReturnPanel> {
    let (n_dates, n_tickers) = (panel.n_dates(), panel.n_tickers());
    for j in 0..n_tickers {
        if let Some(i) = (0..n_dates).find(|&i| panel.missing[(i, j)]) {
            return Err(Error::UnresolvedMissing {
                ticker: panel.tickers[j].clone(),
                date: panel.dates[i].to_string(),
            });
        }
    }
    let rows = n_dates.saturating_sub(1);
    let returns = DMatrix::from_fn(rows, n_tickers, |t, i| {
        (panel.prices[(t + 1, i)] / panel.prices[(t, i)]).ln()
    });
    let imputed = DMatrix::from_fn(rows, n_tickers, |t, i| {
        panel.imputed[(t, i)] || panel.imputed[(t + 1, i)]
    });
    Ok(ReturnPanel {
        tickers: panel.tickers.clone(),
        dates: panel.dates.iter().skip(1).copied().collect(),
        returns,
        imputed,
        sector_tags: panel.sector_tags.clone(),
    })
}

/// Monthly Economic Policy Uncertainty with relative inverse temperatures.
#[derive(Debug, Clone, PartialEq)]
pub struct EpuSeries {
    pub months: Vec<YearMonth>,
    pub epu: Vec<f64>,
    pub beta_rel: Vec<f64>,
}

impl EpuSeries {
    pub fn new(months: Vec<YearMonth>, epu: Vec<f64>) -> Result<Self> {
        if months.len() != epu.len() {
            return Err(Error::LengthMismatch {
                left: months.len(),
                right: epu.len(),
            });
        }
        if months.is_empty() {
            return Err(Error::TooShort { needed: 1, got: 0 });
        }
        for w in months.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::UnsortedMonths(w[1].to_string()));
            }
        }
        for (m, v) in months.iter().zip(&epu) {
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::NonPositiveEpu {
                    month: m.to_string(),
                    value: *v,
                });
            }
        }
        let max = epu.iter().copied().fold(f64::MIN, f64::max);
        let beta_rel = epu.iter().map(|v| v / max).collect();
        Ok(EpuSeries {
            months,
            epu,
            beta_rel,
        })
    }

    /// Constant `beta_rel` across the given months, for runs without EPU data.
    pub fn constant(months: Vec<YearMonth>) -> Result<Self> {
        let epu = vec![1.0; months.len()];
        EpuSeries::new(months, epu)
    }

    pub fn beta_for_month(&self, month: YearMonth) -> Option<f64> {
        self.months
            .binary_search(&month)
            .ok()
            .map(|i| self.beta_rel[i])
    }

    pub fn beta_for_date(&self, date: NaiveDate) -> Option<f64> {
        self.beta_for_month(YearMonth::of(date))
    }
}

/// Reads a `month,epu` file.
pub fn load_epu(path: impl AsRef<Path>) -> Result<EpuSeries> {
    let path = path.as_ref();
    let mut reader = formats::reader(path, &["month", "epu"])?;
    let mut months = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::malformed(path, e.to_string()))?;
        let month: YearMonth = record[0]
            .parse()
            .map_err(|e: Error| Error::malformed(path, e.to_string()))?;
        let value: f64 = record[1]
            .parse()
            .map_err(|_| Error::malformed(path, format!("EPU `{}` is not a number", &record[1])))?;
        months.push(month);
        values.push(value);
    }
    EpuSeries::new(months, values)
}

/// Writes a `ticker,sector` file.
pub fn write_sectors(path: impl AsRef<Path>, sectors: &SectorMap) -> Result<()> {
    let rows = sectors.iter().map(|(t, s)| vec![t.clone(), s.to_string()]);
    formats::write_rows(path.as_ref(), &["ticker", "sector"], rows)
}

fn parse_flag(path: &Path, raw: &str) -> Result<bool> {
    match raw {
        "0" | "false" => Ok(false),
        "1" | "true" => Ok(true),
        other => Err(Error::malformed(
            path,
            format!("flag `{other}` is not 0 or 1"),
        )),
    }
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

/// Long rows `(date, ticker, value, flag)` gathered into a dense matrix.
struct LongTable {
    tickers: Vec<String>,
    dates: Vec<NaiveDate>,
    values: DMatrix<f64>,
    flags: DMatrix<bool>,
    present: DMatrix<bool>,
}

fn read_long(path: &Path, header: &[&str]) -> Result<LongTable> {
    let mut cells: BTreeMap<(String, NaiveDate), (f64, bool)> = BTreeMap::new();
    let mut tickers = BTreeSet::new();
    let mut dates = BTreeSet::new();
    for record in formats::records(path, header)? {
        let date = parse_date(&record[0]).map_err(|e| Error::malformed(path, e.to_string()))?;
        let ticker = record[1].to_string();
        let value = formats::parse_float(path, header[2], &record[2])?;
        let f = parse_flag(path, &record[3])?;
        tickers.insert(ticker.clone());
        dates.insert(date);
        if cells.insert((ticker.clone(), date), (value, f)).is_some() {
            return Err(Error::DuplicateDate {
                ticker,
                date: date.to_string(),
            });
        }
    }
    let tickers: Vec<String> = tickers.into_iter().collect();
    let dates: Vec<NaiveDate> = dates.into_iter().collect();
    let (n, m) = (dates.len(), tickers.len());
    let mut values = DMatrix::from_element(n, m, f64::NAN);
    let mut flags = DMatrix::from_element(n, m, false);
    let mut present = DMatrix::from_element(n, m, false);
    for (j, t) in tickers.iter().enumerate() {
        for (i, d) in dates.iter().enumerate() {
            if let Some((v, f)) = cells.get(&(t.clone(), *d)) {
                values[(i, j)] = *v;
                flags[(i, j)] = *f;
                present[(i, j)] = true;
            }
        }
    }
    Ok(LongTable {
        tickers,
        dates,
        values,
        flags,
        present,
    })
}

impl PricePanel {
    /// Writes present cells as `date,ticker,close,imputed`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut rows = Vec::new();
        for (i, d) in self.dates.iter().enumerate() {
            for (j, t) in self.tickers.iter().enumerate() {
                if !self.missing[(i, j)] {
                    rows.push(vec![
                        d.to_string(),
                        t.clone(),
                        formats::float(self.prices[(i, j)]),
                        flag(self.imputed[(i, j)]),
                    ]);
                }
            }
        }
        formats::write_rows(path.as_ref(), &["date", "ticker", "close", "imputed"], rows)
    }

    /// Reads a file written by [`PricePanel::write_csv`]; absent cells are
    /// missing.
    pub fn read_csv(path: impl AsRef<Path>, sectors: Option<&SectorMap>) -> Result<Self> {
        let path = path.as_ref();
        let table = read_long(path, &["date", "ticker", "close", "imputed"])?;
        if table
            .values
            .iter()
            .any(|p| !p.is_nan() && !(p.is_finite() && *p > 0.0))
        {
            return Err(Error::malformed(path, "prices must be positive"));
        }
        let sector_tags = tag_sectors(&table.tickers, sectors)?;
        Ok(PricePanel {
            tickers: table.tickers,
            dates: table.dates,
            prices: table.values,
            missing: table.present.map(|p| !p),
            imputed: table.flags,
            sector_tags,
        })
    }
}

impl ReturnPanel {
    /// Writes `date,ticker,log_return,imputed`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut rows = Vec::with_capacity(self.n_dates() * self.n_tickers());
        for (i, d) in self.dates.iter().enumerate() {
            for (j, t) in self.tickers.iter().enumerate() {
                rows.push(vec![
                    d.to_string(),
                    t.clone(),
                    formats::float(self.returns[(i, j)]),
                    flag(self.imputed[(i, j)]),
                ]);
            }
        }
        formats::write_rows(
            path.as_ref(),
            &["date", "ticker", "log_return", "imputed"],
            rows,
        )
    }

    pub fn read_csv(path: impl AsRef<Path>, sectors: Option<&SectorMap>) -> Result<Self> {
        let path = path.as_ref();
        let table = read_long(path, &["date", "ticker", "log_return", "imputed"])?;
        if let Some(k) = table.present.iter().position(|p| !p) {
            let (i, j) = (k % table.dates.len(), k / table.dates.len());
            return Err(Error::malformed(
                path,
                format!("no return for {} on {}", table.tickers[j], table.dates[i]),
            ));
        }
        let sector_tags = tag_sectors(&table.tickers, sectors)?;
        Ok(ReturnPanel {
            tickers: table.tickers,
            dates: table.dates,
            returns: table.values,
            imputed: table.flags,
            sector_tags,
        })
    }
}

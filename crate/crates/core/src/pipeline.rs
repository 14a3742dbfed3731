//! Staged end-to-end analysis over files.
//!
//! Every stage reads its inputs from the output directory (or the configured
//! raw inputs), writes its artifacts atomically, and can be rerun on its own.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balance::{balance_series, BalanceSeries};
use crate::dependence::{select_bandwidth, tau_matrix, BlockCv, KernelSpec, TauSnapshot};
use crate::ensembles::{fit_clique_size, FitReport};
use crate::error::{Error, Result};
use crate::formats;
use crate::market_data::{
    clean_panel, load_epu, load_prices, load_sectors, log_returns, write_sectors, CalendarPolicy,
    CleaningRules, EpuSeries, PricePanel, ReturnPanel, YearMonth,
};
use crate::svg::line_chart;
use crate::transition::{dcs_values, detect_break, write_dcs_csv, BreakConfig};
use crate::wssn::{
    build_wssn, read_edge_list, sector_subnet, signed_degrees, write_degrees, write_edge_list,
    SectorMode, SignedAdjacency,
};

pub const PRICES_CLEAN: &str = "prices_clean.csv";
pub const SECTORS: &str = "sectors.csv";
pub const INGEST_SUMMARY: &str = "ingest.json";
pub const RETURNS: &str = "returns.csv";
pub const BANDWIDTH: &str = "bandwidth.json";
pub const TAU_DIR: &str = "tau";
pub const NETWORKS: &str = "networks.csv";
pub const BALANCE: &str = "balance.csv";
pub const DCS: &str = "dcs.csv";
pub const BUT: &str = "but.json";
pub const DEGREES: &str = "degrees.csv";
pub const FIT: &str = "fit.json";
pub const REPORT: &str = "report.json";

pub fn sector_balance_file(mode: SectorMode) -> String {
    format!("balance_{}.csv", mode.label())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cadence {
    #[default]
    WeeklyFriday,
    Monthly,
    EveryKDays(usize),
}

impl std::str::FromStr for Cadence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown cadence `{s}`"));
        match s {
            "weekly_friday" | "weekly" => Ok(Cadence::WeeklyFriday),
            "monthly" => Ok(Cadence::Monthly),
            other => {
                let k = other
                    .strip_prefix("every_k_days:")
                    .or_else(|| {
                        other
                            .strip_prefix("every_k_days(")
                            .and_then(|r| r.strip_suffix(')'))
                    })
                    .ok_or_else(bad)?;
                Ok(Cadence::EveryKDays(k.trim().parse().map_err(|_| bad())?))
            }
        }
    }
}

impl std::fmt::Display for Cadence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cadence::WeeklyFriday => f.write_str("weekly_friday"),
            Cadence::Monthly => f.write_str("monthly"),
            Cadence::EveryKDays(k) => write!(f, "every_k_days:{k}"),
        }
    }
}

/// Indices of the trading dates used as snapshots.
///
/// Weekly: the Friday of each week, or the last earlier trading day of that
/// week when Friday is missing. Monthly: the last trading day of each month.
pub fn snapshot_indices(cadence: Cadence, dates: &[NaiveDate]) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    match cadence {
        Cadence::WeeklyFriday => {
            let mut last: Option<((i32, u32), usize)> = None;
            for (i, d) in dates.iter().enumerate() {
                if d.weekday().number_from_monday() > 5 {
                    continue;
                }
                let week = (d.iso_week().year(), d.iso_week().week());
                if let Some((w, j)) = last {
                    if w != week {
                        out.push(j);
                    }
                }
                last = Some((week, i));
            }
            out.extend(last.map(|(_, j)| j));
        }
        Cadence::Monthly => {
            for (i, d) in dates.iter().enumerate() {
                let closes_month = dates
                    .get(i + 1)
                    .is_none_or(|n| YearMonth::of(*n) != YearMonth::of(*d));
                if closes_month {
                    out.push(i);
                }
            }
        }
        Cadence::EveryKDays(k) => {
            if k == 0 {
                return Err(Error::Config("every_k_days needs k >= 1".into()));
            }
            out.extend((k - 1..dates.len()).step_by(k));
        }
    }
    Ok(out)
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_epsilon() -> f64 {
    0.3
}
fn default_bandwidth() -> Option<f64> {
    Some(0.05)
}
fn default_true() -> bool {
    true
}
fn default_s_range() -> (usize, usize) {
    (2, 10)
}
fn default_trials() -> usize {
    10
}
fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub prices: PathBuf,
    #[serde(default)]
    pub sectors: Option<PathBuf>,
    #[serde(default)]
    pub epu: Option<PathBuf>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Fixed kernel bandwidth; ignored when candidates are given.
    #[serde(default = "default_bandwidth")]
    pub bandwidth_h: Option<f64>,
    #[serde(default)]
    pub bandwidth_candidates: Option<Vec<f64>>,
    #[serde(default = "default_true")]
    pub normalize_weights: bool,
    #[serde(default)]
    pub cadence: Cadence,
    #[serde(default)]
    pub calendar: CalendarPolicy,
    #[serde(default)]
    pub cleaning: CleaningRules,
    #[serde(default)]
    pub transition: BreakConfig,
    #[serde(default = "default_true")]
    pub fit_csg: bool,
    #[serde(default = "default_s_range")]
    pub s_range: (usize, usize),
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl PipelineConfig {
    pub fn new(prices: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            prices: prices.into(),
            sectors: None,
            epu: None,
            out: out.into(),
            epsilon: default_epsilon(),
            bandwidth_h: default_bandwidth(),
            bandwidth_candidates: None,
            normalize_weights: true,
            cadence: Cadence::default(),
            calendar: CalendarPolicy::default(),
            cleaning: CleaningRules::default(),
            transition: BreakConfig::default(),
            fit_csg: true,
            s_range: default_s_range(),
            trials: default_trials(),
            seed: default_seed(),
        }
    }

    /// Reads a JSON config; relative paths resolve against the file's
    /// directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.prices);
        cfg.sectors.as_mut().map(resolve);
        cfg.epu.as_mut().map(resolve);
        resolve(&mut cfg.out);
        Ok(cfg)
    }

    /// Checks every field and that the raw inputs exist.
    pub fn validate(&self) -> Result<()> {
        self.validate_parameters()?;
        for p in std::iter::once(&self.prices)
            .chain(&self.sectors)
            .chain(&self.epu)
        {
            if !p.is_file() {
                return Err(Error::Config(format!(
                    "input file {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    /// Field checks only, for stages that read cached artifacts.
    pub fn validate_parameters(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        match (&self.bandwidth_candidates, self.bandwidth_h) {
            (Some(c), _) if c.is_empty() => {
                return Err(Error::Config("empty bandwidth candidate list".into()))
            }
            (Some(c), _) => {
                for h in c {
                    KernelSpec::new(*h)?;
                }
            }
            (None, Some(h)) => {
                KernelSpec::new(h)?;
            }
            (None, None) => {
                return Err(Error::Config("no bandwidth or bandwidth candidates".into()))
            }
        }
        if let Cadence::EveryKDays(0) = self.cadence {
            return Err(Error::Config("every_k_days needs k >= 1".into()));
        }
        if self.cleaning.max_consecutive_days == 0
            || !(self.cleaning.max_missing_frac > 0.0 && self.cleaning.max_missing_frac < 1.0)
        {
            return Err(Error::Config("cleaning thresholds out of range".into()));
        }
        self.transition.validate()?;
        if self.s_range.0 < 2 || self.s_range.0 > self.s_range.1 {
            return Err(Error::Config(format!("bad s_range {:?}", self.s_range)));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        Ok(())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub tickers_loaded: Vec<String>,
    pub tickers_kept: Vec<String>,
    pub dates: usize,
    pub rejected_cells: usize,
    pub imputed_cells: usize,
}

fn staged<T>(stage: &'static str, input: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(stage, input.display().to_string()))
}

pub fn stage_ingest(cfg: &PipelineConfig) -> Result<IngestSummary> {
    let sectors = match &cfg.sectors {
        Some(p) => Some(staged("ingest", p, load_sectors(p))?),
        None => None,
    };
    let load = staged(
        "ingest",
        &cfg.prices,
        load_prices(&cfg.prices, cfg.calendar, sectors.as_ref()),
    )?;
    let clean = staged(
        "ingest",
        &cfg.prices,
        clean_panel(&load.panel, &cfg.cleaning),
    )?;
    clean.write_csv(cfg.path(PRICES_CLEAN))?;
    write_sectors(cfg.path(SECTORS), &clean.sector_tags)?;
    let summary = IngestSummary {
        tickers_loaded: load.panel.tickers.clone(),
        tickers_kept: clean.tickers.clone(),
        dates: clean.n_dates(),
        rejected_cells: load.rejected.len(),
        imputed_cells: clean.imputed.iter().filter(|b| **b).count(),
    };
    formats::write_json(&cfg.path(INGEST_SUMMARY), &summary)?;
    Ok(summary)
}

fn read_sectors_artifact(
    cfg: &PipelineConfig,
    stage: &'static str,
) -> Result<crate::market_data::SectorMap> {
    let p = cfg.path(SECTORS);
    staged(stage, &p, load_sectors(&p))
}

pub fn stage_returns(cfg: &PipelineConfig) -> Result<ReturnPanel> {
    let sectors = read_sectors_artifact(cfg, "returns")?;
    let p = cfg.path(PRICES_CLEAN);
    let panel = staged("returns", &p, PricePanel::read_csv(&p, Some(&sectors)))?;
    let returns = staged("returns", &p, log_returns(&panel))?;
    returns.write_csv(cfg.path(RETURNS))?;
    Ok(returns)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthRecord {
    pub bandwidth_h: f64,
    pub scores: Vec<(f64, f64)>,
}

fn read_returns(cfg: &PipelineConfig, stage: &'static str) -> Result<ReturnPanel> {
    let sectors = read_sectors_artifact(cfg, stage)?;
    let p = cfg.path(RETURNS);
    staged(stage, &p, ReturnPanel::read_csv(&p, Some(&sectors)))
}

/// Tau snapshots at the configured cadence, or at the single trading date
/// on or before `only`.
pub fn stage_tau(cfg: &PipelineConfig, only: Option<NaiveDate>) -> Result<Vec<TauSnapshot>> {
    let returns = read_returns(cfg, "tau")?;
    let input = cfg.path(RETURNS);
    let record = match &cfg.bandwidth_candidates {
        Some(candidates) => {
            let choice = staged(
                "tau",
                &input,
                select_bandwidth(&returns, candidates, &BlockCv::default()),
            )?;
            BandwidthRecord {
                bandwidth_h: choice.bandwidth_h,
                scores: choice.scores,
            }
        }
        None => BandwidthRecord {
            bandwidth_h: cfg.bandwidth_h.expect("validated"),
            scores: Vec::new(),
        },
    };
    formats::write_json(&cfg.path(BANDWIDTH), &record)?;
    let mut spec = KernelSpec::new(record.bandwidth_h)?;
    spec.normalize_weights = cfg.normalize_weights;
    let indices = match only {
        Some(date) => {
            let i = returns.index_at_or_before(date).ok_or_else(|| {
                Error::domain("tau", format!("{date} precedes the first return date"))
                    .in_stage("tau", input.display().to_string())
            })?;
            vec![i]
        }
        None => snapshot_indices(cfg.cadence, &returns.dates)?,
    };
    let dir = cfg.path(TAU_DIR);
    if only.is_none() && dir.exists() {
        std::fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let snaps: Vec<TauSnapshot> = indices
        .par_iter()
        .map(|&t| staged("tau", &input, tau_matrix(&returns, &spec, t)))
        .collect::<Result<_>>()?;
    for snap in &snaps {
        snap.write_csv(dir.join(format!("{}.csv", snap.date)))?;
    }
    Ok(snaps)
}

/// Every snapshot file in the tau directory, in date order.
pub fn read_tau_dir(dir: &Path) -> Result<Vec<TauSnapshot>> {
    let mut files: Vec<(NaiveDate, PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        match NaiveDate::parse_from_str(stem, "%Y-%m-%d") {
            Ok(date) => files.push((date, path)),
            Err(_) => log::warn!("ignoring {}", path.display()),
        }
    }
    files.sort();
    files
        .into_iter()
        .map(|(date, path)| TauSnapshot::read_csv(&path, date))
        .collect()
}

pub fn stage_build_net(cfg: &PipelineConfig) -> Result<Vec<SignedAdjacency>> {
    let dir = cfg.path(TAU_DIR);
    let snaps = staged("build-net", &dir, read_tau_dir(&dir))?;
    if snaps.is_empty() {
        return Err(
            Error::TooShort { needed: 1, got: 0 }.in_stage("build-net", dir.display().to_string())
        );
    }
    let nets: Vec<SignedAdjacency> = snaps
        .iter()
        .map(|s| build_wssn(s, cfg.epsilon))
        .collect::<Result<_>>()?;
    write_edge_list(cfg.path(NETWORKS), &nets)?;
    Ok(nets)
}

fn read_networks(cfg: &PipelineConfig, stage: &'static str) -> Result<Vec<SignedAdjacency>> {
    let p = cfg.path(NETWORKS);
    staged(stage, &p, read_edge_list(&p))
}

fn epu_for(cfg: &PipelineConfig, nets: &[SignedAdjacency]) -> Result<EpuSeries> {
    match &cfg.epu {
        Some(p) => staged("balance", p, load_epu(p)),
        None => {
            let mut months: Vec<YearMonth> = nets.iter().map(|n| YearMonth::of(n.date)).collect();
            months.dedup();
            EpuSeries::constant(months)
        }
    }
}

/// Whole-market balance plus the three sector restrictions.
pub fn stage_balance(cfg: &PipelineConfig) -> Result<BalanceSeries> {
    let nets = read_networks(cfg, "balance")?;
    let sectors = read_sectors_artifact(cfg, "balance")?;
    let epu = epu_for(cfg, &nets)?;
    let input = cfg.path(NETWORKS);
    let series = staged("balance", &input, balance_series(&nets, &epu))?;
    series.write_csv(cfg.path(BALANCE))?;
    for mode in SectorMode::ALL {
        let sub: Vec<SignedAdjacency> = nets
            .iter()
            .map(|n| sector_subnet(n, &sectors, mode))
            .collect::<Result<_>>()?;
        let s = staged("balance", &input, balance_series(&sub, &epu))?;
        s.write_csv(cfg.path(&sector_balance_file(mode)))?;
    }
    Ok(series)
}

fn read_balance(cfg: &PipelineConfig, stage: &'static str) -> Result<BalanceSeries> {
    let p = cfg.path(BALANCE);
    staged(stage, &p, BalanceSeries::read_csv(&p))
}

pub fn stage_dcs(cfg: &PipelineConfig) -> Result<Vec<f64>> {
    let series = read_balance(cfg, "dcs")?;
    let values = staged(
        "dcs",
        &cfg.path(BALANCE),
        dcs_values(&series.k(), cfg.transition.mode),
    )?;
    write_dcs_csv(cfg.path(DCS), &series.dates(), &values)?;
    Ok(values)
}

pub fn stage_detect_but(cfg: &PipelineConfig) -> Result<crate::transition::TransitionReport> {
    let series = read_balance(cfg, "detect-but")?;
    let report = staged(
        "detect-but",
        &cfg.path(BALANCE),
        detect_break(&series.dates(), &series.k(), &cfg.transition),
    )?;
    report.write_json(cfg.path(BUT))?;
    Ok(report)
}

pub fn stage_degrees(cfg: &PipelineConfig) -> Result<()> {
    let nets = read_networks(cfg, "degrees")?;
    write_degrees(cfg.path(DEGREES), &nets)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub date: Option<NaiveDate>,
    pub skipped: Option<String>,
    pub report: Option<FitReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ButJson {
    break_date: Option<NaiveDate>,
    slope_before: f64,
    slope_after: f64,
    sse_gain: f64,
    detected: bool,
}

/// Clique-size fit on the last snapshot, when a transition was detected.
pub fn stage_fit_csg(cfg: &PipelineConfig) -> Result<FitRecord> {
    let but_path = cfg.path(BUT);
    let but: ButJson = staged("fit-csg", &but_path, formats::read_json(&but_path))?;
    let nets = read_networks(cfg, "fit-csg")?;
    let record = match (but.detected, nets.last()) {
        (true, Some(target)) => {
            match fit_clique_size(target, cfg.s_range.0..=cfg.s_range.1, cfg.trials, cfg.seed) {
                Ok(report) => FitRecord {
                    date: Some(target.date),
                    skipped: None,
                    report: Some(report),
                },
                Err(Error::Infeasible(why)) => FitRecord {
                    date: Some(target.date),
                    skipped: Some(why),
                    report: None,
                },
                Err(e) => {
                    return Err(e.in_stage("fit-csg", cfg.path(NETWORKS).display().to_string()))
                }
            }
        }
        _ => FitRecord {
            date: None,
            skipped: Some("no transition detected".into()),
            report: None,
        },
    };
    formats::write_json(&cfg.path(FIT), &record)?;
    Ok(record)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceSummary {
    pub mean_k: f64,
    pub min_k: f64,
    pub max_k: f64,
    pub snapshots_with_k_one: usize,
}

impl BalanceSummary {
    fn of(series: &BalanceSeries) -> Self {
        let k = series.k();
        BalanceSummary {
            mean_k: k.iter().sum::<f64>() / k.len().max(1) as f64,
            min_k: k.iter().copied().fold(f64::INFINITY, f64::min),
            max_k: k.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            snapshots_with_k_one: k.iter().filter(|v| **v == 1.0).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub snapshots: usize,
    pub first_snapshot: NaiveDate,
    pub last_snapshot: NaiveDate,
    pub tickers: Vec<String>,
    pub epsilon: f64,
    pub bandwidth_h: f64,
    pub cadence: String,
    pub balance: BalanceSummary,
    pub sector_balance: BTreeMap<String, BalanceSummary>,
    pub transition: serde_json::Value,
    pub fit: Option<FitRecord>,
    pub artifacts: Vec<String>,
}

pub fn stage_report(cfg: &PipelineConfig) -> Result<Report> {
    let series = read_balance(cfg, "report")?;
    if series.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 }
            .in_stage("report", cfg.path(BALANCE).display().to_string()));
    }
    let dates = series.dates();
    let mut sector_balance = BTreeMap::new();
    let mut k_lines = vec![("all".to_string(), series.k())];
    for mode in SectorMode::ALL {
        let p = cfg.path(&sector_balance_file(mode));
        let s = staged("report", &p, BalanceSeries::read_csv(&p))?;
        sector_balance.insert(mode.label().to_string(), BalanceSummary::of(&s));
        k_lines.push((mode.label().to_string(), s.k()));
    }
    let svg = line_chart("Structural balance K(t)", &dates, &k_lines);
    formats::write_atomic(&cfg.path("balance.svg"), svg.as_bytes())?;

    let dcs_path = cfg.path(DCS);
    let (dcs_dates, dcs) = staged(
        "report",
        &dcs_path,
        crate::transition::read_dcs_csv(&dcs_path),
    )?;
    let svg = line_chart(
        "Detrended cumulative sum of K",
        &dcs_dates,
        &[("DCS".to_string(), dcs)],
    );
    formats::write_atomic(&cfg.path("dcs.svg"), svg.as_bytes())?;

    let nets = read_networks(cfg, "report")?;
    let mean_degree = |pick: fn(&crate::wssn::SignedDegree) -> usize| -> Vec<f64> {
        nets.iter()
            .map(|n| {
                let d = signed_degrees(n);
                d.iter().map(pick).sum::<usize>() as f64 / d.len().max(1) as f64
            })
            .collect()
    };
    let net_dates: Vec<NaiveDate> = nets.iter().map(|n| n.date).collect();
    let svg = line_chart(
        "Mean signed degree",
        &net_dates,
        &[
            ("positive".to_string(), mean_degree(|d| d.pos)),
            ("negative".to_string(), mean_degree(|d| d.neg)),
        ],
    );
    formats::write_atomic(&cfg.path("degrees.svg"), svg.as_bytes())?;

    let but_path = cfg.path(BUT);
    let transition: serde_json::Value = staged("report", &but_path, formats::read_json(&but_path))?;
    let fit_path = cfg.path(FIT);
    let fit = if fit_path.exists() {
        Some(staged("report", &fit_path, formats::read_json(&fit_path))?)
    } else {
        None
    };
    let bw_path = cfg.path(BANDWIDTH);
    let bandwidth: BandwidthRecord = staged("report", &bw_path, formats::read_json(&bw_path))?;
    let mut artifacts: Vec<String> = [
        PRICES_CLEAN,
        SECTORS,
        INGEST_SUMMARY,
        RETURNS,
        BANDWIDTH,
        NETWORKS,
        BALANCE,
        DCS,
        BUT,
        DEGREES,
        "balance.svg",
        "dcs.svg",
        "degrees.svg",
        REPORT,
    ]
    .iter()
    .map(|s| s.to_string())
    .chain(SectorMode::ALL.iter().map(|m| sector_balance_file(*m)))
    .chain(fit.as_ref().map(|_| FIT.to_string()))
    .collect();
    artifacts.sort();
    let report = Report {
        snapshots: series.len(),
        first_snapshot: dates[0],
        last_snapshot: *dates.last().expect("nonempty"),
        tickers: nets.first().map(|n| n.tickers.clone()).unwrap_or_default(),
        epsilon: cfg.epsilon,
        bandwidth_h: bandwidth.bandwidth_h,
        cadence: cfg.cadence.to_string(),
        balance: BalanceSummary::of(&series),
        sector_balance,
        transition,
        fit,
        artifacts,
    };
    formats::write_json(&cfg.path(REPORT), &report)?;
    Ok(report)
}

/// Runs every stage in order.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Report> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let fit_path = cfg.path(FIT);
    if fit_path.exists() {
        std::fs::remove_file(&fit_path).map_err(|e| Error::io(&fit_path, e))?;
    }
    stage_ingest(cfg)?;
    stage_returns(cfg)?;
    stage_tau(cfg, None)?;
    stage_build_net(cfg)?;
    stage_balance(cfg)?;
    stage_dcs(cfg)?;
    stage_detect_but(cfg)?;
    stage_degrees(cfg)?;
    if cfg.fit_csg {
        stage_fit_csg(cfg)?;
    }
    stage_report(cfg)
}

//! Detrended cumulative sums of a balance series and single slope-break
//! detection.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::balance::BalanceSeries;
use crate::error::{Error, Result};
use crate::formats;
use crate::market_data::parse_date;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DcsMode {
    /// Deviations from the full-sample mean.
    #[default]
    Mean,
    /// Residuals of a least-squares line over the whole sample.
    LinearTrend,
}

impl std::str::FromStr for DcsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(DcsMode::Mean),
            "linear_trend" | "trend" => Ok(DcsMode::LinearTrend),
            other => Err(Error::Config(format!("unknown dcs mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakConfig {
    pub min_segment: usize,
    pub gain_threshold: f64,
    #[serde(default)]
    pub mode: DcsMode,
}

impl Default for BreakConfig {
    fn default() -> Self {
        BreakConfig {
            min_segment: 26,
            gain_threshold: 0.85,
            mode: DcsMode::Mean,
        }
    }
}

impl BreakConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_segment < 2 {
            return Err(Error::Config(format!(
                "min_segment must be at least 2, got {}",
                self.min_segment
            )));
        }
        if !(self.gain_threshold >= 0.0 && self.gain_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "gain_threshold must lie in [0, 1], got {}",
                self.gain_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub dates: Vec<NaiveDate>,
    pub dcs: Vec<f64>,
    pub break_date: Option<NaiveDate>,
    /// First index of the second segment.
    pub break_index: Option<usize>,
    pub slope_before: f64,
    pub slope_after: f64,
    pub sse_gain: f64,
    pub detected: bool,
}

#[derive(Serialize, Deserialize)]
struct ReportJson {
    break_date: Option<NaiveDate>,
    slope_before: f64,
    slope_after: f64,
    sse_gain: f64,
    detected: bool,
}

impl TransitionReport {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let view = ReportJson {
            break_date: self.break_date,
            slope_before: self.slope_before,
            slope_after: self.slope_after,
            sse_gain: self.sse_gain,
            detected: self.detected,
        };
        formats::write_json(path.as_ref(), &view)
    }

    /// Writes `date,dcs`.
    pub fn write_dcs_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_dcs_csv(path, &self.dates, &self.dcs)
    }
}

pub fn write_dcs_csv(path: impl AsRef<Path>, dates: &[NaiveDate], dcs: &[f64]) -> Result<()> {
    let rows = dates
        .iter()
        .zip(dcs)
        .map(|(d, v)| vec![d.to_string(), formats::float(*v)]);
    formats::write_rows(path.as_ref(), &["date", "dcs"], rows)
}

pub fn read_dcs_csv(path: impl AsRef<Path>) -> Result<(Vec<NaiveDate>, Vec<f64>)> {
    let path = path.as_ref();
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for record in formats::records(path, &["date", "dcs"])? {
        dates.push(parse_date(&record[0]).map_err(|e| Error::malformed(path, e.to_string()))?);
        values.push(formats::parse_float(path, "dcs", &record[1])?);
    }
    Ok((dates, values))
}

fn is_constant(x: &[f64]) -> bool {
    x.windows(2).all(|p| p[0] == p[1])
}

/// Least-squares line through `(i, y_i)`, returned as `(intercept, slope)`.
fn fit_line(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let x_mean = (n - 1.0) / 2.0;
    let y_mean = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxy += dx * (v - y_mean);
        sxx += dx * dx;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (y_mean - slope * x_mean, slope)
}

/// Cumulative sum of deviations from the mean (or from a fitted trend).
/// Ends at zero up to rounding; the last value is set to exactly zero.
pub fn dcs_values(k: &[f64], mode: DcsMode) -> Result<Vec<f64>> {
    if k.len() < 3 {
        return Err(Error::TooShort {
            needed: 3,
            got: k.len(),
        });
    }
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("dcs", "series contains non-finite values"));
    }
    if is_constant(k) {
        return Ok(vec![0.0; k.len()]);
    }
    let deviations: Vec<f64> = match mode {
        DcsMode::Mean => {
            let mean = k.iter().sum::<f64>() / k.len() as f64;
            k.iter().map(|v| v - mean).collect()
        }
        DcsMode::LinearTrend => {
            let (a, b) = fit_line(k);
            k.iter()
                .enumerate()
                .map(|(i, v)| v - (a + b * i as f64))
                .collect()
        }
    };
    let mut acc = 0.0;
    let mut out: Vec<f64> = deviations
        .iter()
        .map(|d| {
            acc += d;
            acc
        })
        .collect();
    *out.last_mut().expect("nonempty") = 0.0;
    Ok(out)
}

pub fn dcs(series: &BalanceSeries, mode: DcsMode) -> Result<Vec<f64>> {
    dcs_values(&series.k(), mode)
}

/// Prefix sums for O(1) segment least squares.
struct Prefix {
    x: Vec<f64>,
    xx: Vec<f64>,
    y: Vec<f64>,
    xy: Vec<f64>,
    yy: Vec<f64>,
}

impl Prefix {
    fn new(y: &[f64]) -> Self {
        let n = y.len();
        let mut p = Prefix {
            x: vec![0.0; n + 1],
            xx: vec![0.0; n + 1],
            y: vec![0.0; n + 1],
            xy: vec![0.0; n + 1],
            yy: vec![0.0; n + 1],
        };
        for (i, v) in y.iter().enumerate() {
            let x = i as f64;
            p.x[i + 1] = p.x[i] + x;
            p.xx[i + 1] = p.xx[i] + x * x;
            p.y[i + 1] = p.y[i] + v;
            p.xy[i + 1] = p.xy[i] + x * v;
            p.yy[i + 1] = p.yy[i] + v * v;
        }
        p
    }

    /// `(sse, slope)` of the line fitted on `lo..hi`.
    fn segment(&self, lo: usize, hi: usize) -> (f64, f64) {
        let n = (hi - lo) as f64;
        let sx = self.x[hi] - self.x[lo];
        let sy = self.y[hi] - self.y[lo];
        let sxx = self.xx[hi] - self.xx[lo] - sx * sx / n;
        let sxy = self.xy[hi] - self.xy[lo] - sx * sy / n;
        let syy = self.yy[hi] - self.yy[lo] - sy * sy / n;
        let slope = sxy / sxx;
        ((syy - slope * sxy).max(0.0), slope)
    }
}

/// Break detection on a raw dated series.
pub fn detect_break(
    dates: &[NaiveDate],
    k: &[f64],
    config: &BreakConfig,
) -> Result<TransitionReport> {
    config.validate()?;
    if dates.len() != k.len() {
        return Err(Error::LengthMismatch {
            left: dates.len(),
            right: k.len(),
        });
    }
    let n = k.len();
    let needed = 2 * config.min_segment + 1;
    if n < needed {
        return Err(Error::TooShort { needed, got: n });
    }
    let dcs = dcs_values(k, config.mode)?;
    let mut report = TransitionReport {
        dates: dates.to_vec(),
        dcs,
        break_date: None,
        break_index: None,
        slope_before: 0.0,
        slope_after: 0.0,
        sse_gain: 0.0,
        detected: false,
    };
    if is_constant(&report.dcs) {
        return Ok(report);
    }
    // centre and scale so the running sums stay well conditioned
    let centre = report.dcs.iter().sum::<f64>() / n as f64;
    let scale = report
        .dcs
        .iter()
        .map(|v| (v - centre).abs())
        .fold(0.0, f64::max);
    let y: Vec<f64> = report.dcs.iter().map(|v| (v - centre) / scale).collect();
    let prefix = Prefix::new(&y);
    let (sse0, _) = prefix.segment(0, n);
    if sse0 <= 0.0 {
        return Ok(report);
    }
    let mut best: Option<(usize, f64, f64, f64)> = None;
    for b in config.min_segment..=(n - config.min_segment) {
        let (sse_l, slope_l) = prefix.segment(0, b);
        let (sse_r, slope_r) = prefix.segment(b, n);
        let sse = sse_l + sse_r;
        if best.is_none_or(|(_, s, _, _)| sse < s) {
            best = Some((b, sse, slope_l, slope_r));
        }
    }
    let (b, sse1, slope_l, slope_r) = best.expect("at least one admissible break");
    report.break_index = Some(b);
    report.break_date = Some(dates[b]);
    report.slope_before = slope_l * scale;
    report.slope_after = slope_r * scale;
    report.sse_gain = (1.0 - sse1 / sse0).clamp(0.0, 1.0);
    report.detected = report.sse_gain >= config.gain_threshold && slope_l >= 0.0 && slope_r < 0.0;
    Ok(report)
}

pub fn detect_but(series: &BalanceSeries, config: &BreakConfig) -> Result<TransitionReport> {
    detect_break(&series.dates(), &series.k(), config)
}

//! Time-varying nonparametric regression between two return series.
//!
//! `m_i(y)` is estimated by a Nadaraya-Watson ratio that multiplies a time
//! kernel (centred on the reference index) with a covariate kernel centred on
//! the query value. The semiparametric special case `m_i(y) = beta_i(t) y`
//! gives the time-varying slope, which links back to linear correlation via
//! `rho = beta sigma_j / sigma_i`.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dependence::{kernel_window, KernelSpec};
use crate::error::{Error, Result};
use crate::formats;

/// Bandwidth of the covariate kernel, in the units of the regressor.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateBandwidth {
    /// `1.06 sd(Y_j) S^(-1/5)`.
    #[default]
    Silverman,
    Fixed(f64),
}

impl CovariateBandwidth {
    pub fn resolve(self, regressor: &[f64]) -> Result<f64> {
        let bw = match self {
            CovariateBandwidth::Fixed(b) => b,
            CovariateBandwidth::Silverman => silverman_bandwidth(regressor),
        };
        if bw.is_finite() && bw > 0.0 {
            Ok(bw)
        } else {
            Err(Error::domain(
                "covariate bandwidth",
                format!("bandwidth must be positive, got {bw}"),
            ))
        }
    }
}

pub fn silverman_bandwidth(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return f64::NAN;
    }
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    1.06 * var.sqrt() * n.powf(-0.2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionSpec {
    pub time: KernelSpec,
    #[serde(default)]
    pub covariate: CovariateBandwidth,
}

impl RegressionSpec {
    pub fn new(time: KernelSpec) -> Self {
        RegressionSpec {
            time,
            covariate: CovariateBandwidth::Silverman,
        }
    }

    pub fn with_covariate_bandwidth(mut self, bw: f64) -> Self {
        self.covariate = CovariateBandwidth::Fixed(bw);
        self
    }
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    Ok(())
}

/// Nadaraya-Watson estimate of `Y_i` given `Y_j = y` around index `t`.
pub fn nw_estimate(yi: &[f64], yj: &[f64], spec: &RegressionSpec, t: usize, y: f64) -> Result<f64> {
    check_lengths(yi, yj)?;
    let bw = spec.covariate.resolve(yj)?;
    let kernel = spec.time.kernel;
    let window = kernel_window(&spec.time, t, yi.len())?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, s) in window.range().enumerate() {
        let w = window.weights[k] * kernel.eval((y - yj[s]) / bw);
        num += w * yi[s];
        den += w;
    }
    if den <= 0.0 {
        return Err(Error::EmptyNeighbourhood { t, y });
    }
    Ok(num / den)
}

/// `beta_i(t) = (sum_s w_s Y_j(s)^2)^-1 sum_s w_s Y_i(s) Y_j(s)`.
pub fn tv_slope(yi: &[f64], yj: &[f64], spec: &KernelSpec, t: usize) -> Result<f64> {
    check_lengths(yi, yj)?;
    let window = kernel_window(spec, t, yi.len())?;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (k, s) in window.range().enumerate() {
        let w = window.weights[k];
        sxx += w * yj[s] * yj[s];
        sxy += w * yi[s] * yj[s];
    }
    if sxx <= 0.0 {
        return Err(Error::domain(
            "tv_slope",
            format!("regressor vanishes on the kernel window at index {t}"),
        ));
    }
    Ok(sxy / sxx)
}

/// Kernel-smoothed variance: weighted mean of squared deviations from the
/// kernel-smoothed mean, with weights renormalized to sum to one.
pub fn tv_variance(y: &[f64], spec: &KernelSpec, t: usize) -> Result<f64> {
    let window = kernel_window(spec, t, y.len())?;
    let total: f64 = window.weights.iter().sum();
    let slice = &y[window.range()];
    let mean = slice
        .iter()
        .zip(&window.weights)
        .map(|(v, w)| v * w)
        .sum::<f64>()
        / total;
    Ok(slice
        .iter()
        .zip(&window.weights)
        .map(|(v, w)| w * (v - mean).powi(2))
        .sum::<f64>()
        / total)
}

pub fn slope_to_rho(beta: f64, sigma_i: f64, sigma_j: f64) -> Result<f64> {
    if !(sigma_i > 0.0 && sigma_j > 0.0) {
        return Err(Error::domain(
            "slope_to_rho",
            format!("standard deviations must be positive, got {sigma_i} and {sigma_j}"),
        ));
    }
    Ok(beta * sigma_j / sigma_i)
}

/// Linear correlation implied by Kendall's tau under joint normality.
pub fn tau_to_rho_gaussian(tau: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&tau) {
        return Err(Error::domain(
            "tau_to_rho_gaussian",
            format!("tau {tau} outside [-1, 1]"),
        ));
    }
    Ok((std::f64::consts::FRAC_PI_2 * tau).sin())
}

/// Correlation implied by the time-varying slope and local variances.
pub fn tv_slope_rho(yi: &[f64], yj: &[f64], spec: &KernelSpec, t: usize) -> Result<f64> {
    let beta = tv_slope(yi, yj, spec, t)?;
    let si = tv_variance(yi, spec, t)?.sqrt();
    let sj = tv_variance(yj, spec, t)?.sqrt();
    slope_to_rho(beta, si, sj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainedEstimate {
    /// `m_1(Y_2(t))`.
    pub direct: f64,
    /// `m_1(m_3(Y_2(t)))`, where the outer regression is on `Y_3`.
    pub chained: f64,
}

/// Predicts `Y_1` from `Y_2` directly and through `Y_3`.
pub fn chained_estimate(
    y1: &[f64],
    y2: &[f64],
    y3: &[f64],
    spec: &RegressionSpec,
    t: usize,
) -> Result<ChainedEstimate> {
    check_lengths(y1, y2)?;
    check_lengths(y1, y3)?;
    let query = y2[t];
    chained_at(y1, y2, y3, spec, t, query)
}

/// As [`chained_estimate`] but at an arbitrary query value of `Y_2`.
pub fn chained_at(
    y1: &[f64],
    y2: &[f64],
    y3: &[f64],
    spec: &RegressionSpec,
    t: usize,
    query: f64,
) -> Result<ChainedEstimate> {
    let direct = nw_estimate(y1, y2, spec, t, query)?;
    let y3_hat = nw_estimate(y3, y2, spec, t, query)?;
    let chained = nw_estimate(y1, y3, spec, t, y3_hat)?;
    Ok(ChainedEstimate { direct, chained })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub dates: Vec<NaiveDate>,
    pub fitted: Vec<f64>,
    pub slope: Option<Vec<f64>>,
    pub residual_variance: Option<(Vec<f64>, Vec<f64>)>,
}

/// Fitted values `m_i(Y_j(t))`, slopes and local variances at every index.
pub fn fit_series(
    yi: &[f64],
    yj: &[f64],
    dates: &[NaiveDate],
    spec: &RegressionSpec,
) -> Result<RegressionFit> {
    check_lengths(yi, yj)?;
    if dates.len() != yi.len() {
        return Err(Error::LengthMismatch {
            left: dates.len(),
            right: yi.len(),
        });
    }
    let n = yi.len();
    let mut fitted = Vec::with_capacity(n);
    let mut slope = Vec::with_capacity(n);
    let mut var_i = Vec::with_capacity(n);
    let mut var_j = Vec::with_capacity(n);
    for t in 0..n {
        fitted.push(nw_estimate(yi, yj, spec, t, yj[t])?);
        slope.push(tv_slope(yi, yj, &spec.time, t)?);
        var_i.push(tv_variance(yi, &spec.time, t)?);
        var_j.push(tv_variance(yj, &spec.time, t)?);
    }
    Ok(RegressionFit {
        dates: dates.to_vec(),
        fitted,
        slope: Some(slope),
        residual_variance: Some((var_i, var_j)),
    })
}

impl RegressionFit {
    /// Writes `date,fitted,slope`; the slope column is empty when absent.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut rows = Vec::with_capacity(self.dates.len());
        for (k, d) in self.dates.iter().enumerate() {
            let slope = self
                .slope
                .as_ref()
                .map(|s| formats::float(s[k]))
                .unwrap_or_default();
            rows.push(vec![d.to_string(), formats::float(self.fitted[k]), slope]);
        }
        formats::write_rows(path.as_ref(), &["date", "fitted", "slope"], rows)
    }
}

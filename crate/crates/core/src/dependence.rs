//! Kernel-smoothed, time-varying Kendall's tau.
//!
//! The estimator at reference index `t` weights every observation `s` by an
//! Epanechnikov kernel of `(t - s) / (S h)` and counts weighted concordant
//! ordered pairs:
//!
//! ```text
//! tau(t) = 4 / (1 - sum_s w_s^2) * sum_{s,r} w_s w_r 1{A_s < A_r, B_s < B_r} - 1
//! ```
//!
//! Only the compact kernel support is visited, and the double sum is
//! evaluated in `O(W log W)` with a Fenwick tree over the ranks of `B`.

use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats;
use crate::market_data::ReturnPanel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    #[default]
    Epanechnikov,
}

impl KernelKind {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            KernelKind::Epanechnikov => epanechnikov(x),
        }
    }
}

/// `k(x) = 3/4 (1 - x^2)` on `|x| < 1`, zero elsewhere.
pub fn epanechnikov(x: f64) -> f64 {
    if x.abs() < 1.0 {
        0.75 * (1.0 - x * x)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    /// Bandwidth as a fraction of the sample length.
    pub bandwidth_h: f64,
    #[serde(default)]
    pub kernel: KernelKind,
    #[serde(default = "default_true")]
    pub normalize_weights: bool,
}

fn default_true() -> bool {
    true
}

impl KernelSpec {
    pub fn new(bandwidth_h: f64) -> Result<Self> {
        let spec = KernelSpec {
            bandwidth_h,
            kernel: KernelKind::Epanechnikov,
            normalize_weights: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_h.is_finite() && self.bandwidth_h > 0.0) {
            return Err(Error::Config(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth_h
            )));
        }
        Ok(())
    }
}

/// Positive kernel weights around one reference index: `weights[k]` belongs
/// to observation `start + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelWindow {
    pub start: usize,
    pub weights: Vec<f64>,
}

impl KernelWindow {
    pub fn end(&self) -> usize {
        self.start + self.weights.len()
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.end()
    }
}

/// Kernel weights restricted to the support `|t - s| < S h`.
pub fn kernel_window(spec: &KernelSpec, t: usize, len: usize) -> Result<KernelWindow> {
    spec.validate()?;
    if t >= len {
        return Err(Error::domain(
            "kernel_weights",
            format!("reference index {t} outside sample of length {len}"),
        ));
    }
    let scale = len as f64 * spec.bandwidth_h;
    let reach = scale.ceil() as usize;
    let start = t.saturating_sub(reach);
    let end = (t + reach + 1).min(len);
    let raw: Vec<f64> = (start..end)
        .map(|s| spec.kernel.eval((t as f64 - s as f64) / scale))
        .collect();
    let first = raw.iter().position(|w| *w > 0.0);
    let last = raw.iter().rposition(|w| *w > 0.0);
    let (first, last) = match (first, last) {
        (Some(f), Some(l)) => (f, l),
        _ => {
            return Err(Error::domain(
                "kernel_weights",
                format!("all kernel weights vanish at index {t}; bandwidth too small"),
            ))
        }
    };
    let mut weights = raw[first..=last].to_vec();
    if spec.normalize_weights {
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
    } else {
        weights.iter_mut().for_each(|w| *w /= scale);
    }
    Ok(KernelWindow {
        start: start + first,
        weights,
    })
}

/// Weights for every `s` in `0..len` at reference index `t` (zero outside
/// the kernel support).
pub fn kernel_weights(spec: &KernelSpec, t: usize, len: usize) -> Result<Vec<f64>> {
    let window = kernel_window(spec, t, len)?;
    let mut out = vec![0.0; len];
    out[window.range()].copy_from_slice(&window.weights);
    Ok(out)
}

struct Fenwick {
    tree: Vec<f64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick {
            tree: vec![0.0; n + 1],
        }
    }

    fn add(&mut self, idx: usize, value: f64) {
        let mut i = idx + 1;
        while i < self.tree.len() {
            self.tree[i] += value;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum over indices `< idx`.
    fn prefix(&self, idx: usize) -> f64 {
        let mut i = idx;
        let mut acc = 0.0;
        while i > 0 {
            acc += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        acc
    }
}

/// Dense ranks with ties sharing a rank.
fn dense_ranks(values: &[f64]) -> (Vec<usize>, usize) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0; values.len()];
    let mut rank = 0;
    for (k, &i) in order.iter().enumerate() {
        if k > 0 && values[i] != values[order[k - 1]] {
            rank += 1;
        }
        ranks[i] = rank;
    }
    (ranks, rank + 1)
}

/// Weighted pair masses over unordered pairs: concordant, discordant and
/// tied in at least one coordinate.
struct PairMass {
    concordant: f64,
    discordant: f64,
    tied: f64,
}

/// `sum_{s<r} w_s w_r` over groups sharing a key.
fn tied_mass<K: Ord>(keys: Vec<(K, usize)>, w: &[f64]) -> f64 {
    let mut keys = keys;
    keys.sort_by(|x, y| x.0.cmp(&y.0));
    let mut total = 0.0;
    let mut k = 0;
    while k < keys.len() {
        let mut end = k + 1;
        let mut group = w[keys[k].1];
        let mut group_sq = group * group;
        while end < keys.len() && keys[end].0 == keys[k].0 {
            let x = w[keys[end].1];
            group += x;
            group_sq += x * x;
            end += 1;
        }
        total += (group * group - group_sq) / 2.0;
        k = end;
    }
    total
}

fn pair_mass(a: &[f64], b: &[f64], w: &[f64]) -> PairMass {
    let (a_rank, _) = dense_ranks(a);
    let (b_rank, n_ranks) = dense_ranks(b);
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by_key(|&x| a_rank[x]);
    let mut tree = Fenwick::new(n_ranks);
    let mut inserted = 0.0;
    let mut concordant = 0.0;
    let mut discordant = 0.0;
    let mut k = 0;
    while k < order.len() {
        let mut end = k + 1;
        while end < order.len() && a_rank[order[end]] == a_rank[order[k]] {
            end += 1;
        }
        for &r in &order[k..end] {
            concordant += w[r] * tree.prefix(b_rank[r]);
            discordant += w[r] * (inserted - tree.prefix(b_rank[r] + 1));
        }
        for &r in &order[k..end] {
            tree.add(b_rank[r], w[r]);
            inserted += w[r];
        }
        k = end;
    }
    let idx = 0..a.len();
    let tied_a = tied_mass(idx.clone().map(|i| (a_rank[i], i)).collect(), w);
    let tied_b = tied_mass(idx.clone().map(|i| (b_rank[i], i)).collect(), w);
    let tied_ab = tied_mass(idx.map(|i| ((a_rank[i], b_rank[i]), i)).collect(), w);
    PairMass {
        concordant,
        discordant: discordant.max(0.0),
        tied: tied_a + tied_b - tied_ab,
    }
}

fn is_constant(x: &[f64]) -> bool {
    x.windows(2).all(|p| p[0] == p[1])
}

/// Weighted Kendall estimator with arbitrary nonnegative weights.
pub fn weighted_kendall(a: &[f64], b: &[f64], w: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() != w.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len().max(w.len()),
        });
    }
    if a.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: a.len(),
        });
    }
    if is_constant(a) || is_constant(b) {
        log::debug!("constant series in kendall window; all pairs tied, tau defined as 0");
        return Ok(0.0);
    }
    let sum_sq: f64 = w.iter().map(|x| x * x).sum();
    let total: f64 = w.iter().sum();
    let denom = 1.0 - sum_sq;
    if denom <= 1e-12 {
        return Err(Error::domain(
            "kendall",
            format!("degenerate weights: 1 - sum w^2 = {denom:e}"),
        ));
    }
    let mass = pair_mass(a, b, w);
    let raw = if (total - 1.0).abs() < 1e-9 {
        // 1 - sum w^2 = 2 (C + D + T) when the weights sum to one
        let pairs = mass.concordant + mass.discordant + mass.tied;
        (mass.concordant - mass.discordant - mass.tied) / pairs
    } else {
        4.0 / denom * mass.concordant - 1.0
    };
    if !(-1.0..=1.0).contains(&raw) {
        log::debug!("kendall estimate {raw} clamped to [-1, 1]");
    }
    Ok(raw.clamp(-1.0, 1.0))
}

/// Time-varying Kendall's tau at reference index `t`.
pub fn tv_kendall(ya: &[f64], yb: &[f64], spec: &KernelSpec, t: usize) -> Result<f64> {
    if ya.len() != yb.len() {
        return Err(Error::LengthMismatch {
            left: ya.len(),
            right: yb.len(),
        });
    }
    if ya.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: ya.len(),
        });
    }
    let window = kernel_window(spec, t, ya.len())?;
    if window.weights.len() < 2 {
        return Err(Error::EmptyWindow { t });
    }
    let range = window.range();
    weighted_kendall(&ya[range.clone()], &yb[range], &window.weights)
}

/// Classical tau-a by exhaustive pair enumeration.
pub fn classical_kendall(ya: &[f64], yb: &[f64]) -> Result<f64> {
    if ya.len() != yb.len() {
        return Err(Error::LengthMismatch {
            left: ya.len(),
            right: yb.len(),
        });
    }
    let n = ya.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let mut score: i64 = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let s = (ya[j] - ya[i]).signum() * (yb[j] - yb[i]).signum();
            if ya[j] != ya[i] && yb[j] != yb[i] {
                score += s as i64;
            }
        }
    }
    Ok(score as f64 / (n * (n - 1) / 2) as f64)
}

/// Weighted empirical CDF and its generalized inverse over one window.
struct WeightedMarginal {
    sorted: Vec<f64>,
    cumulative: Vec<f64>,
}

impl WeightedMarginal {
    fn new(values: &[f64], weights: &[f64]) -> Self {
        let mut pairs: Vec<(f64, f64)> = values
            .iter()
            .copied()
            .zip(weights.iter().copied())
            .collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut sorted = Vec::with_capacity(pairs.len());
        let mut cumulative: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut acc = 0.0;
        for (v, w) in pairs {
            acc += w;
            if sorted.last() == Some(&v) {
                *cumulative.last_mut().unwrap() = acc;
            } else {
                sorted.push(v);
                cumulative.push(acc);
            }
        }
        WeightedMarginal { sorted, cumulative }
    }

    /// Smallest observed value whose CDF reaches `u`; `-inf` for `u = 0`.
    fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let idx = self.cumulative.partition_point(|c| *c < u - 1e-12);
        self.sorted.get(idx).copied().unwrap_or(f64::INFINITY)
    }
}

/// Kernel-weighted empirical copula `C(u1, u2, t)`.
///
/// Weights are always normalized here so that `C(1, 1) = 1`.
pub fn empirical_copula(
    ya: &[f64],
    yb: &[f64],
    spec: &KernelSpec,
    u1: f64,
    u2: f64,
    t: usize,
) -> Result<f64> {
    if ya.len() != yb.len() {
        return Err(Error::LengthMismatch {
            left: ya.len(),
            right: yb.len(),
        });
    }
    for u in [u1, u2] {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::domain(
                "empirical_copula",
                format!("{u} outside [0, 1]"),
            ));
        }
    }
    let spec = KernelSpec {
        normalize_weights: true,
        ..*spec
    };
    let window = kernel_window(&spec, t, ya.len())?;
    let range = window.range();
    let (a, b) = (&ya[range.clone()], &yb[range]);
    let qa = WeightedMarginal::new(a, &window.weights).quantile(u1);
    let qb = WeightedMarginal::new(b, &window.weights).quantile(u2);
    let mass: f64 = a
        .iter()
        .zip(b)
        .zip(&window.weights)
        .filter(|((x, y), _)| **x <= qa && **y <= qb)
        .map(|(_, w)| *w)
        .sum();
    Ok(mass.clamp(0.0, 1.0))
}

/// Symmetric matrix of time-varying Kendall's tau for one date.
#[derive(Debug, Clone, PartialEq)]
pub struct TauSnapshot {
    pub date: NaiveDate,
    pub tickers: Vec<String>,
    pub tau: DMatrix<f64>,
}

impl TauSnapshot {
    pub fn n(&self) -> usize {
        self.tickers.len()
    }

    /// Checks symmetry, unit diagonal and `|tau| <= 1`.
    pub fn check(&self) -> Result<()> {
        let n = self.n();
        if self.tau.nrows() != n || self.tau.ncols() != n {
            return Err(Error::domain(
                "tau snapshot",
                "matrix shape does not match tickers",
            ));
        }
        for i in 0..n {
            if self.tau[(i, i)] != 1.0 {
                return Err(Error::domain(
                    "tau snapshot",
                    format!("diagonal entry {i} is not 1"),
                ));
            }
            for j in 0..n {
                let v = self.tau[(i, j)];
                if v.is_nan() || v.abs() > 1.0 || v != self.tau[(j, i)] {
                    return Err(Error::domain(
                        "tau snapshot",
                        format!("entry ({i}, {j}) = {v} breaks symmetry or bounds"),
                    ));
                }
            }
        }
        Ok(())
    }
}

impl TauSnapshot {
    /// Writes the upper triangle as `ticker_i,ticker_j,tau`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let n = self.n();
        let rows = (0..n).flat_map(|i| {
            ((i + 1)..n).map(move |j| {
                vec![
                    self.tickers[i].clone(),
                    self.tickers[j].clone(),
                    formats::float(self.tau[(i, j)]),
                ]
            })
        });
        formats::write_rows(path.as_ref(), &["ticker_i", "ticker_j", "tau"], rows)
    }

    /// Reads an upper-triangle file; ticker order follows first appearance.
    pub fn read_csv(path: impl AsRef<Path>, date: NaiveDate) -> Result<Self> {
        let path = path.as_ref();
        let mut tickers: Vec<String> = Vec::new();
        let mut entries = Vec::new();
        for record in formats::records(path, &["ticker_i", "ticker_j", "tau"])? {
            for t in [&record[0], &record[1]] {
                if !tickers.iter().any(|x| x == t) {
                    tickers.push(t.to_string());
                }
            }
            let v = formats::parse_float(path, "tau", &record[2])?;
            entries.push((record[0].to_string(), record[1].to_string(), v));
        }
        let index = |t: &str| tickers.iter().position(|x| x == t).expect("registered");
        let n = tickers.len();
        let mut tau = DMatrix::identity(n, n);
        for (a, b, v) in &entries {
            let (i, j) = (index(a), index(b));
            tau[(i, j)] = *v;
            tau[(j, i)] = *v;
        }
        let snap = TauSnapshot { date, tickers, tau };
        snap.check()
            .map_err(|e| Error::malformed(path, e.to_string()))?;
        Ok(snap)
    }

    pub fn write_dense_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        formats::write_dense_matrix(path.as_ref(), &self.tickers, &self.tau)
    }

    pub fn read_dense_csv(path: impl AsRef<Path>, date: NaiveDate) -> Result<Self> {
        let path = path.as_ref();
        let (tickers, tau) = formats::read_dense_matrix(path)?;
        let snap = TauSnapshot { date, tickers, tau };
        snap.check()
            .map_err(|e| Error::malformed(path, e.to_string()))?;
        Ok(snap)
    }
}

/// All pairwise time-varying taus of a return panel at index `t`.
pub fn tau_matrix(panel: &ReturnPanel, spec: &KernelSpec, t: usize) -> Result<TauSnapshot> {
    let n = panel.n_tickers();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    if t >= panel.n_dates() {
        return Err(Error::domain(
            "tau_matrix",
            format!("index {t} outside panel of {} dates", panel.n_dates()),
        ));
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            tv_kendall(panel.series(i), panel.series(j), spec, t).map_err(|e| Error::Pair {
                a: panel.tickers[i].clone(),
                b: panel.tickers[j].clone(),
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let mut tau = DMatrix::identity(n, n);
    for (&(i, j), v) in pairs.iter().zip(values) {
        tau[(i, j)] = v;
        tau[(j, i)] = v;
    }
    Ok(TauSnapshot {
        date: panel.dates[t],
        tickers: panel.tickers.clone(),
        tau,
    })
}

/// Leave-one-block-out cross-validation settings for bandwidth selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockCv {
    pub blocks: usize,
    /// Evaluate every `stride`-th index inside each block.
    pub stride: usize,
}

impl Default for BlockCv {
    fn default() -> Self {
        BlockCv {
            blocks: 10,
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthChoice {
    pub bandwidth_h: f64,
    /// `(candidate, score)` in the order given; unusable candidates score `inf`.
    pub scores: Vec<(f64, f64)>,
}

/// Block cross-validation score of one bandwidth for one series pair.
///
/// For every block, each index inside it is estimated from the
/// observations outside the block (kernel weights renormalized). The mean of
/// those held-out estimates is compared with the plain tau-a of the block.
/// Indices whose held-out window keeps fewer than two observations are
/// skipped, and so are blocks with no usable index.
fn block_cv_terms(ya: &[f64], yb: &[f64], spec: &KernelSpec, cv: &BlockCv) -> Result<(f64, usize)> {
    let len = ya.len();
    let mut sum = 0.0;
    let mut count = 0;
    for b in 0..cv.blocks {
        let lo = b * len / cv.blocks;
        let hi = (b + 1) * len / cv.blocks;
        if hi - lo < 2 {
            continue;
        }
        let reference = weighted_kendall(
            &ya[lo..hi],
            &yb[lo..hi],
            &vec![1.0 / (hi - lo) as f64; hi - lo],
        )?;
        let mut block_sum = 0.0;
        let mut block_count = 0;
        for t in (lo..hi).step_by(cv.stride.max(1)) {
            let window = kernel_window(spec, t, len)?;
            let mut a = Vec::new();
            let mut bb = Vec::new();
            let mut w = Vec::new();
            for (k, s) in window.range().enumerate() {
                if s < lo || s >= hi {
                    a.push(ya[s]);
                    bb.push(yb[s]);
                    w.push(window.weights[k]);
                }
            }
            if w.len() < 2 {
                continue;
            }
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= total);
            let sum_sq: f64 = w.iter().map(|x| x * x).sum();
            if 1.0 - sum_sq <= 1e-12 {
                continue;
            }
            block_sum += weighted_kendall(&a, &bb, &w)?;
            block_count += 1;
        }
        if block_count > 0 {
            sum += (block_sum / block_count as f64 - reference).powi(2);
            count += 1;
        }
    }
    Ok((sum, count))
}

/// Picks the candidate bandwidth with the lowest block-CV score, averaged
/// over every ticker pair. Ties go to the smallest bandwidth.
pub fn select_bandwidth(
    panel: &ReturnPanel,
    candidates: &[f64],
    cv: &BlockCv,
) -> Result<BandwidthChoice> {
    if candidates.is_empty() {
        return Err(Error::Config("empty bandwidth candidate list".into()));
    }
    if cv.blocks < 2 {
        return Err(Error::Config(
            "cross-validation needs at least two blocks".into(),
        ));
    }
    let n = panel.n_tickers();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let mut scores = Vec::with_capacity(candidates.len());
    for &h in candidates {
        let spec = KernelSpec::new(h)?;
        let terms: Vec<(f64, usize)> = pairs
            .par_iter()
            .map(|&(i, j)| block_cv_terms(panel.series(i), panel.series(j), &spec, cv))
            .collect::<Result<_>>()?;
        let (sum, count) = terms
            .iter()
            .fold((0.0, 0), |(s, c), (ts, tc)| (s + ts, c + tc));
        let score = if count == 0 {
            f64::INFINITY
        } else {
            sum / count as f64
        };
        scores.push((h, score));
    }
    let best = scores
        .iter()
        .copied()
        .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.total_cmp(&y.0)))
        .expect("nonempty");
    if !best.1.is_finite() {
        return Err(Error::domain(
            "select_bandwidth",
            "no candidate leaves enough held-out observations",
        ));
    }
    Ok(BandwidthChoice {
        bandwidth_h: best.0,
        scores,
    })
}

//! Seeded synthetic inputs: a small price market with a dependence regime
//! switch, and dated network sequences with a planted negative clique.

use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats;
use crate::market_data::{write_sectors, Sector, SectorMap, YearMonth};
use crate::wssn::SignedAdjacency;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketFixtureSpec {
    pub n_financial: usize,
    pub n_non_financial: usize,
    pub n_days: usize,
    /// Trading day on which the dependence structure changes.
    pub switch_day: usize,
    /// Probability that a price cell is left empty.
    pub missing_rate: f64,
    pub seed: u64,
}

impl Default for MarketFixtureSpec {
    fn default() -> Self {
        MarketFixtureSpec {
            n_financial: 4,
            n_non_financial: 6,
            n_days: 780,
            switch_day: 390,
            missing_rate: 0.01,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketFixture {
    pub tickers: Vec<String>,
    pub dates: Vec<NaiveDate>,
    /// `dates x tickers`, `NaN` where the cell is left empty.
    pub prices: DMatrix<f64>,
    pub sectors: SectorMap,
    pub epu: Vec<(YearMonth, f64)>,
}

/// Weekdays starting at `start` (moved forward to a Monday if needed).
pub fn business_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

/// One common factor before the switch (every pair positively dependent);
/// afterwards three groups load on directions 120 degrees apart in a
/// two-factor plane, so groups are mutually negatively dependent.
pub fn market_fixture(spec: &MarketFixtureSpec) -> Result<MarketFixture> {
    let n = spec.n_financial + spec.n_non_financial;
    if n < 3 || spec.n_days < 2 || spec.switch_day >= spec.n_days {
        return Err(Error::Config(format!("degenerate market fixture {spec:?}")));
    }
    if !(0.0..0.5).contains(&spec.missing_rate) {
        return Err(Error::Config("missing_rate must lie in [0, 0.5)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let tickers: Vec<String> = (0..spec.n_financial)
        .map(|i| format!("F{:02}", i + 1))
        .chain((0..spec.n_non_financial).map(|i| format!("N{:02}", i + 1)))
        .collect();
    let sectors: SectorMap = tickers
        .iter()
        .map(|t| {
            let s = if t.starts_with('F') {
                Sector::Financial
            } else {
                Sector::NonFinancial
            };
            (t.clone(), s)
        })
        .collect();
    let start = NaiveDate::from_ymd_opt(2010, 1, 4).expect("valid date");
    let dates = business_days(start, spec.n_days);
    let angle = |i: usize| 2.0 * std::f64::consts::PI * (i % 3) as f64 / 3.0;
    let mut prices = DMatrix::from_element(spec.n_days, n, f64::NAN);
    let mut level: Vec<f64> = (0..n).map(|i| 20.0 + 10.0 * i as f64).collect();
    for t in 0..spec.n_days {
        let f1: f64 = StandardNormal.sample(&mut rng);
        let f2: f64 = StandardNormal.sample(&mut rng);
        for i in 0..n {
            let e: f64 = StandardNormal.sample(&mut rng);
            let r = if t < spec.switch_day {
                0.01 * (f1 + 0.5 * e)
            } else {
                0.01 * (angle(i).cos() * f1 + angle(i).sin() * f2 + 0.1 * e)
            };
            if t > 0 {
                level[i] *= r.exp();
            }
            if rng.random::<f64>() >= spec.missing_rate {
                prices[(t, i)] = level[i];
            }
        }
    }
    let first = YearMonth::of(dates[0]);
    let last = YearMonth::of(*dates.last().expect("nonempty"));
    let switch_month = YearMonth::of(dates[spec.switch_day]);
    let mut epu = Vec::new();
    let mut m = first;
    while m <= last {
        let base = if m < switch_month { 90.0 } else { 160.0 };
        epu.push((m, base + rng.random_range(0.0..40.0)));
        m = m.next();
    }
    Ok(MarketFixture {
        tickers,
        dates,
        prices,
        sectors,
        epu,
    })
}

impl MarketFixture {
    /// Writes `prices.csv`, `sectors.csv` and `epu.csv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let mut rows = Vec::new();
        for (i, d) in self.dates.iter().enumerate() {
            for (j, t) in self.tickers.iter().enumerate() {
                let p = self.prices[(i, j)];
                let close = if p.is_nan() {
                    String::new()
                } else {
                    format!("{p:.4}")
                };
                rows.push(vec![d.to_string(), t.clone(), close]);
            }
        }
        formats::write_rows(&dir.join("prices.csv"), &["date", "ticker", "close"], rows)?;
        write_sectors(dir.join("sectors.csv"), &self.sectors)?;
        let rows = self
            .epu
            .iter()
            .map(|(m, v)| vec![m.to_string(), format!("{v:.2}")]);
        formats::write_rows(&dir.join("epu.csv"), &["month", "epu"], rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ButScenario {
    pub n: usize,
    pub snapshots: usize,
    /// First snapshot carrying the negative clique.
    pub switch_at: usize,
    /// Size of the planted negative clique.
    pub s: usize,
    /// Edge probability of the balanced background.
    pub density: f64,
    pub seed: u64,
}

impl Default for ButScenario {
    fn default() -> Self {
        ButScenario {
            n: 40,
            snapshots: 300,
            switch_at: 150,
            s: 6,
            density: 0.3,
            seed: 1,
        }
    }
}

fn signed_weight(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.3..=1.0)
}

/// Two factions with random membership: positive weights inside a faction,
/// negative across. Balanced by construction.
pub fn two_faction_network(n: usize, density: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let side: Vec<f64> = (0..n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < density {
                let w = signed_weight(rng) * side[i] * side[j];
                a[(i, j)] = w;
                a[(j, i)] = w;
            }
        }
    }
    a
}

/// Overwrites every pair among `nodes` with a negative weight.
pub fn embed_fnc(a: &mut DMatrix<f64>, nodes: &[usize], rng: &mut ChaCha8Rng) {
    for (k, &i) in nodes.iter().enumerate() {
        for &j in &nodes[k + 1..] {
            let w = -signed_weight(rng);
            a[(i, j)] = w;
            a[(j, i)] = w;
        }
    }
}

/// Weekly (Friday) snapshots: balanced two-faction networks, then the same
/// kind of network with a negative clique on nodes `0..s` from `switch_at`.
pub fn but_scenario(spec: &ButScenario) -> Result<Vec<SignedAdjacency>> {
    if spec.s < 2 || spec.s > spec.n || spec.switch_at >= spec.snapshots {
        return Err(Error::Config(format!("degenerate scenario {spec:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let first = NaiveDate::from_ymd_opt(2000, 1, 7).expect("a Friday");
    let tickers: Vec<String> = (0..spec.n).map(|i| format!("S{i:03}")).collect();
    let clique: Vec<usize> = (0..spec.s).collect();
    (0..spec.snapshots)
        .map(|t| {
            let mut a = two_faction_network(spec.n, spec.density, &mut rng);
            if t >= spec.switch_at {
                embed_fnc(&mut a, &clique, &mut rng);
            }
            let date = first + Days::new(7 * t as u64);
            SignedAdjacency::new(date, tickers.clone(), a)
        })
        .collect()
}

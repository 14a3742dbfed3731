//! Weighted signed stock networks: thresholding, degrees, sector splits and
//! triad classification.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dependence::TauSnapshot;
use crate::error::{Error, Result};
use crate::formats;
use crate::market_data::{parse_date, Sector, SectorMap};

/// Symmetric signed adjacency with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedAdjacency {
    pub date: NaiveDate,
    pub tickers: Vec<String>,
    pub a: DMatrix<f64>,
    pub m_pos: usize,
    pub m_neg: usize,
}

impl SignedAdjacency {
    /// Validates symmetry, zero diagonal and `|w| <= 1`, then counts edges.
    pub fn new(date: NaiveDate, tickers: Vec<String>, a: DMatrix<f64>) -> Result<Self> {
        let n = tickers.len();
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::domain(
                "signed adjacency",
                format!("{}x{} matrix for {n} tickers", a.nrows(), a.ncols()),
            ));
        }
        let (mut m_pos, mut m_neg) = (0, 0);
        for i in 0..n {
            if a[(i, i)] != 0.0 {
                return Err(Error::domain(
                    "signed adjacency",
                    format!("nonzero diagonal at {i}"),
                ));
            }
            for j in (i + 1)..n {
                let w = a[(i, j)];
                if w != a[(j, i)] || w.is_nan() || w.abs() > 1.0 {
                    return Err(Error::domain(
                        "signed adjacency",
                        format!("entry ({i}, {j}) = {w} breaks symmetry or bounds"),
                    ));
                }
                if w > 0.0 {
                    m_pos += 1;
                } else if w < 0.0 {
                    m_neg += 1;
                }
            }
        }
        Ok(SignedAdjacency {
            date,
            tickers,
            a,
            m_pos,
            m_neg,
        })
    }

    /// Nodes named `0..n` for synthetic networks.
    pub fn unnamed(a: DMatrix<f64>) -> Result<Self> {
        let tickers = (0..a.nrows()).map(|i| format!("n{i}")).collect();
        SignedAdjacency::new(NaiveDate::default(), tickers, a)
    }

    pub fn n(&self) -> usize {
        self.tickers.len()
    }

    pub fn m(&self) -> usize {
        self.m_pos + self.m_neg
    }

    /// Entrywise absolute value: the unsigned companion network.
    pub fn unsigned(&self) -> DMatrix<f64> {
        self.a.abs()
    }

    /// Upper-triangle edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n();
        (0..n).flat_map(move |i| {
            ((i + 1)..n).filter_map(move |j| {
                let w = self.a[(i, j)];
                (w != 0.0).then_some((i, j, w))
            })
        })
    }

    /// The adjacency read back as a tau matrix (unit diagonal).
    pub fn as_tau_snapshot(&self) -> TauSnapshot {
        let mut tau = self.a.clone();
        tau.fill_diagonal(1.0);
        TauSnapshot {
            date: self.date,
            tickers: self.tickers.clone(),
            tau,
        }
    }

    pub fn with_date(mut self, date: NaiveDate) -> Self {
        self.date = date;
        self
    }

    /// Writes `ticker,<tickers...>` rows of the full matrix.
    pub fn write_dense_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        formats::write_dense_matrix(path.as_ref(), &self.tickers, &self.a)
    }

    pub fn read_dense_csv(path: impl AsRef<Path>, date: NaiveDate) -> Result<Self> {
        let (tickers, a) = formats::read_dense_matrix(path.as_ref())?;
        SignedAdjacency::new(date, tickers, a)
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )))
    }
}

/// Keeps `tau_ij` where `|tau_ij| >= epsilon` and zeroes the diagonal.
pub fn build_wssn(snapshot: &TauSnapshot, epsilon: f64) -> Result<SignedAdjacency> {
    check_epsilon(epsilon)?;
    let n = snapshot.n();
    let a = DMatrix::from_fn(n, n, |i, j| {
        let v = snapshot.tau[(i, j)];
        if i != j && v.abs() >= epsilon {
            v
        } else {
            0.0
        }
    });
    SignedAdjacency::new(snapshot.date, snapshot.tickers.clone(), a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SignedDegree {
    pub pos: usize,
    pub neg: usize,
}

pub fn signed_degrees(net: &SignedAdjacency) -> Vec<SignedDegree> {
    (0..net.n())
        .map(|i| {
            let row = net.a.row(i);
            SignedDegree {
                pos: row.iter().filter(|w| **w > 0.0).count(),
                neg: row.iter().filter(|w| **w < 0.0).count(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SectorMode {
    /// Financial to financial.
    FF,
    /// Non-financial to non-financial.
    NFNF,
    /// Financial to non-financial.
    Cross,
}

impl SectorMode {
    pub const ALL: [SectorMode; 3] = [SectorMode::FF, SectorMode::NFNF, SectorMode::Cross];

    pub fn label(self) -> &'static str {
        match self {
            SectorMode::FF => "FF",
            SectorMode::NFNF => "NFNF",
            SectorMode::Cross => "cross",
        }
    }

    fn keeps(self, a: Sector, b: Sector) -> bool {
        match self {
            SectorMode::FF => a == Sector::Financial && b == Sector::Financial,
            SectorMode::NFNF => a == Sector::NonFinancial && b == Sector::NonFinancial,
            SectorMode::Cross => a != b,
        }
    }
}

impl std::str::FromStr for SectorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "FF" | "ff" => Ok(SectorMode::FF),
            "NFNF" | "nfnf" => Ok(SectorMode::NFNF),
            "cross" | "FNF" => Ok(SectorMode::Cross),
            other => Err(Error::Config(format!("unknown sector mode `{other}`"))),
        }
    }
}

/// Restricts the edge set by sector while keeping every node.
pub fn sector_subnet(
    net: &SignedAdjacency,
    sectors: &SectorMap,
    mode: SectorMode,
) -> Result<SignedAdjacency> {
    let tags: Vec<Sector> = net
        .tickers
        .iter()
        .map(|t| {
            sectors
                .get(t)
                .copied()
                .ok_or_else(|| Error::MissingSector(t.clone()))
        })
        .collect::<Result<_>>()?;
    let n = net.n();
    let a = DMatrix::from_fn(n, n, |i, j| {
        if mode.keeps(tags[i], tags[j]) {
            net.a[(i, j)]
        } else {
            0.0
        }
    });
    SignedAdjacency::new(net.date, net.tickers.clone(), a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TriadCaseId {
    /// All three pairs correlated.
    I,
    /// One correlated pair, two anticorrelated.
    II,
    /// Two correlated pairs, one anticorrelated.
    III,
    /// All three anticorrelated.
    IV,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriadCase {
    pub case_id: TriadCaseId,
    pub balanced: bool,
    /// Product of the three taus.
    pub ktilde: f64,
}

pub fn classify_triad(t12: f64, t13: f64, t23: f64) -> Result<TriadCase> {
    let taus = [t12, t13, t23];
    if taus.iter().any(|t| *t == 0.0 || !t.is_finite()) {
        return Err(Error::domain(
            "classify_triad",
            format!("{taus:?} is not a triangle of the thresholded network"),
        ));
    }
    let positives = taus.iter().filter(|t| **t > 0.0).count();
    let case_id = match positives {
        3 => TriadCaseId::I,
        1 => TriadCaseId::II,
        2 => TriadCaseId::III,
        _ => TriadCaseId::IV,
    };
    let ktilde = t12 * t13 * t23;
    Ok(TriadCase {
        case_id,
        balanced: ktilde > 0.0,
        ktilde,
    })
}

/// Writes snapshots as `date,ticker_i,ticker_j,weight`.
///
/// Each snapshot first declares its nodes in order with rows whose
/// `ticker_j` and `weight` are empty, so isolated nodes and the node order
/// survive a round trip.
pub fn write_edge_list(path: impl AsRef<Path>, nets: &[SignedAdjacency]) -> Result<()> {
    let mut rows = Vec::new();
    for net in nets {
        let date = net.date.to_string();
        for t in &net.tickers {
            rows.push(vec![date.clone(), t.clone(), String::new(), String::new()]);
        }
        for (i, j, w) in net.edges() {
            rows.push(vec![
                date.clone(),
                net.tickers[i].clone(),
                net.tickers[j].clone(),
                formats::float(w),
            ]);
        }
    }
    formats::write_rows(
        path.as_ref(),
        &["date", "ticker_i", "ticker_j", "weight"],
        rows,
    )
}

/// Reads snapshots written by [`write_edge_list`]. Files without node
/// declarations are accepted; nodes then come from the edges in sorted order.
pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Vec<SignedAdjacency>> {
    let path = path.as_ref();
    struct Pending {
        nodes: Vec<String>,
        edges: Vec<(String, String, f64)>,
    }
    let mut order: Vec<NaiveDate> = Vec::new();
    let mut by_date: BTreeMap<NaiveDate, Pending> = BTreeMap::new();
    for record in formats::records(path, &["date", "ticker_i", "ticker_j", "weight"])? {
        let date = parse_date(&record[0]).map_err(|e| Error::malformed(path, e.to_string()))?;
        let entry = by_date.entry(date).or_insert_with(|| {
            order.push(date);
            Pending {
                nodes: Vec::new(),
                edges: Vec::new(),
            }
        });
        if record[2].is_empty() {
            entry.nodes.push(record[1].to_string());
        } else {
            let w = formats::parse_float(path, "weight", &record[3])?;
            entry
                .edges
                .push((record[1].to_string(), record[2].to_string(), w));
        }
    }
    let mut out = Vec::with_capacity(order.len());
    for date in order {
        let mut pending = by_date.remove(&date).expect("recorded");
        if pending.nodes.is_empty() {
            let mut nodes: Vec<String> = pending
                .edges
                .iter()
                .flat_map(|(a, b, _)| [a.clone(), b.clone()])
                .collect();
            nodes.sort();
            nodes.dedup();
            pending.nodes = nodes;
        }
        let index: BTreeMap<&str, usize> = pending
            .nodes
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();
        let n = pending.nodes.len();
        let mut a = DMatrix::zeros(n, n);
        for (ti, tj, w) in &pending.edges {
            let (i, j) = match (index.get(ti.as_str()), index.get(tj.as_str())) {
                (Some(i), Some(j)) => (*i, *j),
                _ => {
                    return Err(Error::malformed(
                        path,
                        format!("edge {ti}-{tj} on {date} uses an undeclared node"),
                    ))
                }
            };
            a[(i, j)] = *w;
            a[(j, i)] = *w;
        }
        out.push(
            SignedAdjacency::new(date, pending.nodes, a)
                .map_err(|e| Error::malformed(path, e.to_string()))?,
        );
    }
    Ok(out)
}

/// Writes `date,ticker,pos_degree,neg_degree` for every snapshot.
pub fn write_degrees(path: impl AsRef<Path>, nets: &[SignedAdjacency]) -> Result<()> {
    let mut rows = Vec::new();
    for net in nets {
        for (t, d) in net.tickers.iter().zip(signed_degrees(net)) {
            rows.push(vec![
                net.date.to_string(),
                t.clone(),
                d.pos.to_string(),
                d.neg.to_string(),
            ]);
        }
    }
    formats::write_rows(
        path.as_ref(),
        &["date", "ticker", "pos_degree", "neg_degree"],
        rows,
    )
}

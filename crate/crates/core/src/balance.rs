//! Structural balance of a signed network.
//!
//! `K = tr exp(beta A) / tr exp(beta |A|)`, evaluated from the spectra of the
//! signed adjacency and its entrywise absolute value. `K = 1` exactly when
//! the two spectra coincide, which happens iff the network is balanced.

use std::collections::VecDeque;
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats;
use crate::market_data::{parse_date, EpuSeries, YearMonth};
use crate::wssn::SignedAdjacency;

/// Largest network the exhaustive switching search accepts.
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// Networks at or below this size are cross-checked combinatorially.
pub const CROSS_CHECK_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceResult {
    pub date: NaiveDate,
    #[serde(rename = "K")]
    pub k: f64,
    pub beta_rel: f64,
    pub trace_signed: f64,
    pub trace_unsigned: f64,
    pub is_balanced: bool,
    pub m_pos: usize,
    pub m_neg: usize,
}

/// Spectral tolerance for declaring two spectra equal.
pub fn spectral_tolerance(n: usize) -> f64 {
    1e-9 * n.max(1) as f64
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn spectrum(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::domain("spectrum", "matrix is not square"));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigen("matrix has non-finite entries".into()));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Eigen(format!("no convergence for {0}x{0} matrix", m.nrows())))?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn log_sum_exp(beta: f64, values: &[f64]) -> f64 {
    let max = values
        .iter()
        .map(|v| beta * v)
        .fold(f64::NEG_INFINITY, f64::max);
    max + values
        .iter()
        .map(|v| (beta * v - max).exp())
        .sum::<f64>()
        .ln()
}

fn check_beta(beta_rel: f64) -> Result<()> {
    if beta_rel > 0.0 && beta_rel <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(
            "balance",
            format!("beta_rel must lie in (0, 1], got {beta_rel}"),
        ))
    }
}

fn spectra_match(signed: &[f64], unsigned: &[f64]) -> bool {
    let tol = spectral_tolerance(signed.len());
    signed
        .iter()
        .zip(unsigned)
        .all(|(a, b)| (a - b).abs() <= tol)
}

/// Balance constant of one network at inverse temperature `beta_rel`.
pub fn balance_k(net: &SignedAdjacency, beta_rel: f64) -> Result<BalanceResult> {
    check_beta(beta_rel)?;
    let signed = spectrum(&net.a)?;
    let unsigned = spectrum(&net.unsigned())?;
    let (k, trace_signed, trace_unsigned) = if signed.is_empty() {
        (1.0, 0.0, 0.0)
    } else {
        let ls = log_sum_exp(beta_rel, &signed);
        let lu = log_sum_exp(beta_rel, &unsigned);
        ((ls - lu).exp().min(1.0), ls.exp(), lu.exp())
    };
    let is_balanced = spectra_match(&signed, &unsigned);
    if net.n() <= CROSS_CHECK_LIMIT && net.n() > 0 {
        let exact = switching_signature(net).is_some();
        if exact != is_balanced {
            log::warn!(
                "spectral balance test ({is_balanced}) disagrees with switching search ({exact}) on {}",
                net.date
            );
        }
    }
    Ok(BalanceResult {
        date: net.date,
        k,
        beta_rel,
        trace_signed,
        trace_unsigned,
        is_balanced,
        m_pos: net.m_pos,
        m_neg: net.m_neg,
    })
}

/// Closed-form balance of a fully negative clique of `s` nodes.
pub fn fnc_balance(s: usize, beta_rel: f64) -> Result<f64> {
    check_beta(beta_rel)?;
    if s < 2 {
        return Err(Error::domain(
            "fnc_balance",
            format!("clique size must be >= 2, got {s}"),
        ));
    }
    let b = beta_rel;
    let s1 = (s - 1) as f64;
    // divide numerator and denominator by exp(b (s - 1))
    let num = (-2.0 * b * s1).exp() + s1 * (b - b * s1).exp();
    let den = 1.0 + s1 * (-b - b * s1).exp();
    Ok(num / den)
}

/// Tail bound `(beta ||A||)^k / k!` of the walk series after `k` terms,
/// with `||A||` the largest absolute row sum.
pub fn walk_tail_bound(a: &DMatrix<f64>, beta_rel: f64, k: usize) -> f64 {
    let norm = a
        .row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let x = beta_rel * norm;
    if x == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let log_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    (k as f64 * x.ln() - log_fact).exp()
}

/// Balance from the spectrum and from truncated walk sums
/// `sum_k beta^k tr(A^k) / k!`, returned as `(spectral, walks)`.
pub fn walk_identity_check(
    net: &SignedAdjacency,
    beta_rel: f64,
    truncation: usize,
) -> Result<(f64, f64)> {
    check_beta(beta_rel)?;
    let bound = walk_tail_bound(&net.a, beta_rel, truncation);
    if bound >= 1e-12 {
        return Err(Error::Truncation { truncation, bound });
    }
    let spectral = balance_k(net, beta_rel)?.k;
    let n = net.n();
    if n == 0 {
        return Ok((spectral, 1.0));
    }
    let abs = net.unsigned();
    let mut p_signed = DMatrix::<f64>::identity(n, n);
    let mut p_unsigned = DMatrix::<f64>::identity(n, n);
    let mut w_signed = n as f64;
    let mut w_unsigned = n as f64;
    let mut coef = 1.0;
    for k in 1..truncation {
        p_signed = &p_signed * &net.a;
        p_unsigned = &p_unsigned * &abs;
        coef *= beta_rel / k as f64;
        w_signed += coef * p_signed.trace();
        w_unsigned += coef * p_unsigned.trace();
    }
    Ok((spectral, w_signed / w_unsigned))
}

/// Node signs `sigma` with `sign(A_ij) = sigma_i sigma_j` on every edge, if
/// any exist. Breadth-first two-colouring, linear in the edge count.
pub fn switching_signature(net: &SignedAdjacency) -> Option<Vec<i8>> {
    let n = net.n();
    let mut sigma = vec![0i8; n];
    for root in 0..n {
        if sigma[root] != 0 {
            continue;
        }
        sigma[root] = 1;
        let mut queue = VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                let w = net.a[(i, j)];
                if w == 0.0 {
                    continue;
                }
                let want = if w > 0.0 { sigma[i] } else { -sigma[i] };
                if sigma[j] == 0 {
                    sigma[j] = want;
                    queue.push_back(j);
                } else if sigma[j] != want {
                    return None;
                }
            }
        }
    }
    Some(sigma)
}

/// Tries every bipartition of the nodes (node 0 fixed) and reports whether
/// one makes all edges inside a part positive and all edges across negative.
pub fn is_balanced_exhaustive(net: &SignedAdjacency) -> Result<bool> {
    let n = net.n();
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::domain(
            "is_balanced_exhaustive",
            format!("{n} nodes exceeds the limit of {EXHAUSTIVE_LIMIT}"),
        ));
    }
    if n <= 1 {
        return Ok(true);
    }
    let edges: Vec<(usize, usize, bool)> = net.edges().map(|(i, j, w)| (i, j, w > 0.0)).collect();
    for mask in 0u32..(1 << (n - 1)) {
        let side = |i: usize| i > 0 && mask & (1 << (i - 1)) != 0;
        if edges.iter().all(|&(i, j, pos)| (side(i) == side(j)) == pos) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Isospectrality of `A` and `|A|` within `1e-9 n`.
pub fn is_balanced(net: &SignedAdjacency) -> Result<bool> {
    let signed = spectrum(&net.a)?;
    let unsigned = spectrum(&net.unsigned())?;
    Ok(spectra_match(&signed, &unsigned))
}

/// `D A D` for a diagonal sign matrix `D = diag(sigma)`.
pub fn switch_signs(net: &SignedAdjacency, sigma: &[i8]) -> Result<SignedAdjacency> {
    if sigma.len() != net.n() {
        return Err(Error::LengthMismatch {
            left: sigma.len(),
            right: net.n(),
        });
    }
    let a = DMatrix::from_fn(net.n(), net.n(), |i, j| {
        net.a[(i, j)] * f64::from(sigma[i]) * f64::from(sigma[j])
    });
    SignedAdjacency::new(net.date, net.tickers.clone(), a)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BalanceSeries {
    pub results: Vec<BalanceResult>,
}

impl BalanceSeries {
    pub fn new(results: Vec<BalanceResult>) -> Result<Self> {
        for w in results.windows(2) {
            if w[1].date <= w[0].date {
                return Err(Error::UnsortedDates(w[1].date.to_string()));
            }
        }
        Ok(BalanceSeries { results })
    }

    pub fn len(&self) -> usize {
        self.results.len()
    }

    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.results.iter().map(|r| r.date).collect()
    }

    pub fn k(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.k).collect()
    }

    /// Writes `date,K,beta_rel,m_pos,m_neg`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let rows = self.results.iter().map(|r| {
            vec![
                r.date.to_string(),
                formats::float(r.k),
                formats::float(r.beta_rel),
                r.m_pos.to_string(),
                r.m_neg.to_string(),
            ]
        });
        formats::write_rows(path.as_ref(), &BALANCE_HEADER, rows)
    }

    /// Reads the CSV form back. Traces and the balance flag are not stored
    /// there, so they come back as `NaN` and `K == 1`.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut results = Vec::new();
        for record in formats::records(path, &BALANCE_HEADER)? {
            let date = parse_date(&record[0]).map_err(|e| Error::malformed(path, e.to_string()))?;
            let k = formats::parse_float(path, "K", &record[1])?;
            let count = |raw: &str| {
                raw.parse::<usize>()
                    .map_err(|_| Error::malformed(path, format!("edge count `{raw}`")))
            };
            results.push(BalanceResult {
                date,
                k,
                beta_rel: formats::parse_float(path, "beta_rel", &record[2])?,
                trace_signed: f64::NAN,
                trace_unsigned: f64::NAN,
                is_balanced: k == 1.0,
                m_pos: count(&record[3])?,
                m_neg: count(&record[4])?,
            });
        }
        BalanceSeries::new(results).map_err(|e| Error::malformed(path, e.to_string()))
    }
}

const BALANCE_HEADER: [&str; 5] = ["date", "K", "beta_rel", "m_pos", "m_neg"];

/// Balance of every network with the inverse temperature of its month.
pub fn balance_series(nets: &[SignedAdjacency], epu: &EpuSeries) -> Result<BalanceSeries> {
    for w in nets.windows(2) {
        if w[1].date <= w[0].date {
            return Err(Error::UnsortedDates(w[1].date.to_string()));
        }
    }
    let betas: Vec<f64> = nets
        .iter()
        .map(|net| {
            epu.beta_for_date(net.date)
                .ok_or_else(|| Error::MissingMonth(YearMonth::of(net.date).to_string()))
        })
        .collect::<Result<_>>()?;
    let results = nets
        .par_iter()
        .zip(betas.par_iter())
        .map(|(net, &beta)| balance_k(net, beta))
        .collect::<Result<Vec<_>>>()?;
    BalanceSeries::new(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn net(a: DMatrix<f64>) -> SignedAdjacency {
        SignedAdjacency::unnamed(a).unwrap()
    }

    fn triangle(w01: f64, w02: f64, w12: f64) -> SignedAdjacency {
        let mut a = DMatrix::zeros(3, 3);
        for (i, j, w) in [(0, 1, w01), (0, 2, w02), (1, 2, w12)] {
            a[(i, j)] = w;
            a[(j, i)] = w;
        }
        net(a)
    }

    fn clique(s: usize, w: f64) -> SignedAdjacency {
        net(DMatrix::from_fn(s, s, |i, j| if i == j { 0.0 } else { w }))
    }

    /// Trace of the matrix exponential by Taylor series with exact
    /// rescaling, independent of the eigensolver.
    fn trace_exp_series(a: &DMatrix<f64>, beta: f64) -> f64 {
        let n = a.nrows();
        let mut term = DMatrix::<f64>::identity(n, n);
        let mut acc = term.trace();
        for k in 1..200 {
            term = &term * a * (beta / k as f64);
            acc += term.trace();
        }
        acc
    }

    fn random_signed(rng: &mut ChaCha8Rng, n: usize, density: f64) -> SignedAdjacency {
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < density {
                    let w =
                        rng.random_range(0.3..1.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
                    a[(i, j)] = w;
                    a[(j, i)] = w;
                }
            }
        }
        net(a)
    }

    /// A positive network switched by random node signs: balanced by
    /// construction.
    fn random_balanced(rng: &mut ChaCha8Rng, n: usize, density: f64) -> SignedAdjacency {
        let mut a = DMatrix::zeros(n, n);
        let sigma: Vec<f64> = (0..n)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < density {
                    let w = rng.random_range(0.3..1.0) * sigma[i] * sigma[j];
                    a[(i, j)] = w;
                    a[(j, i)] = w;
                }
            }
        }
        net(a)
    }

    #[test]
    fn all_positive_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for beta in [0.1, 0.5, 1.0] {
            let mut a = DMatrix::zeros(8, 8);
            for i in 0..8 {
                for j in (i + 1)..8 {
                    let w = rng.random_range(0.0..1.0);
                    a[(i, j)] = w;
                    a[(j, i)] = w;
                }
            }
            let r = balance_k(&net(a), beta).unwrap();
            assert_eq!(r.k, 1.0);
            assert!(r.is_balanced);
        }
    }

    #[test]
    fn triangle_examples() {
        let r = balance_k(&triangle(1.0, -1.0, -1.0), 1.0).unwrap();
        assert!((r.k - 1.0).abs() < 1e-12);
        assert!(r.is_balanced);

        let e = std::f64::consts::E;
        let expected = (e.powi(-2) + 2.0 * e) / (e * e + 2.0 / e);
        let r = balance_k(&triangle(-1.0, -1.0, -1.0), 1.0).unwrap();
        assert!((r.k - expected).abs() < 1e-12);
        assert!((r.k - 0.68578).abs() < 1e-5);
        assert!(!r.is_balanced);
        assert!((r.k - r.trace_signed / r.trace_unsigned).abs() < 1e-14);
    }

    #[test]
    fn traces_agree_with_series_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let g = random_signed(&mut rng, 9, 0.5);
            let r = balance_k(&g, 0.7).unwrap();
            let ts = trace_exp_series(&g.a, 0.7);
            let tu = trace_exp_series(&g.unsigned(), 0.7);
            assert!((r.trace_signed - ts).abs() < 1e-10 * tu);
            assert!((r.trace_unsigned - tu).abs() < 1e-10 * tu);
            assert!((r.k - ts / tu).abs() < 1e-12);
        }
    }

    #[test]
    fn fnc_examples() {
        for beta in [0.1, 0.5, 1.0] {
            assert!((fnc_balance(2, beta).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!((fnc_balance(3, 1.0).unwrap() - 0.68578).abs() < 1e-5);
        let v = fnc_balance(50, 1.0).unwrap();
        // exact value is about 6.98e-20
        let e = std::f64::consts::E;
        let oracle = (e.powi(-49) + 49.0 * e) / (e.powi(49) + 49.0 / e);
        assert!((v - oracle).abs() < 1e-12 * oracle);
        assert!(v > 0.0 && v < 1e-19);
        assert!(fnc_balance(1, 1.0).is_err());
        assert!(fnc_balance(3, 0.0).is_err());
    }

    #[test]
    fn fnc_matches_spectral_clique() {
        for s in 2..=50 {
            for beta in [0.1, 0.5, 1.0] {
                let closed = fnc_balance(s, beta).unwrap();
                let spectral = balance_k(&clique(s, -1.0), beta).unwrap().k;
                assert!((closed - spectral).abs() < 1e-10, "s={s} beta={beta}");
            }
        }
    }

    #[test]
    fn fnc_nonincreasing_in_beta() {
        for s in 3..=30 {
            let mut last = 1.0;
            for step in 1..=50 {
                let k = balance_k(&clique(s, -1.0), step as f64 / 50.0).unwrap().k;
                assert!(k <= last + 1e-15);
                last = k;
            }
        }
    }

    #[test]
    fn small_beta_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let g = random_signed(&mut rng, 15, 0.6);
            assert!(balance_k(&g, 1e-6).unwrap().k > 1.0 - 1e-4);
        }
        assert!(balance_k(&clique(3, -1.0), 0.0).is_err());
        assert!(balance_k(&clique(3, -1.0), 1.5).is_err());
    }

    #[test]
    fn k_in_unit_interval_and_switching_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..40 {
            let n = rng.random_range(2..25);
            let density = rng.random_range(0.1..0.9);
            let g = random_signed(&mut rng, n, density);
            let beta = rng.random_range(0.01..1.0);
            let k = balance_k(&g, beta).unwrap().k;
            assert!(k > 0.0 && k <= 1.0);
            let sigma: Vec<i8> = (0..n)
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect();
            let switched = switch_signs(&g, &sigma).unwrap();
            assert!((balance_k(&switched, beta).unwrap().k - k).abs() < 1e-12);
        }
    }

    #[test]
    fn walk_identity_examples() {
        let empty = net(DMatrix::zeros(4, 4));
        assert_eq!(walk_identity_check(&empty, 1.0, 1).unwrap(), (1.0, 1.0));

        let (s, w) = walk_identity_check(&clique(3, -1.0), 1.0, 60).unwrap();
        assert!((s - w).abs() < 1e-10);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let g = random_signed(&mut rng, 20, 0.4);
            let (s, w) = walk_identity_check(&g, 1.0, 150).unwrap();
            assert!((s - w).abs() < 1e-9, "{s} vs {w}");
        }
    }

    #[test]
    fn walk_identity_rejects_short_truncation() {
        let err = walk_identity_check(&clique(3, -1.0), 1.0, 5).unwrap_err();
        assert!(matches!(err, Error::Truncation { truncation: 5, .. }));
    }

    #[test]
    fn balance_examples() {
        assert!(is_balanced(&clique(6, 0.4)).unwrap());
        assert!(is_balanced(&triangle(1.0, -1.0, -1.0)).unwrap());
        assert!(!is_balanced(&triangle(1.0, 1.0, -1.0)).unwrap());
        assert!(!is_balanced_exhaustive(&triangle(1.0, 1.0, -1.0)).unwrap());
    }

    #[test]
    fn spectral_and_combinatorial_tests_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut seen = [0usize; 2];
        for k in 0..300 {
            let n = rng.random_range(2..=CROSS_CHECK_LIMIT);
            let density = rng.random_range(0.15..0.9);
            let g = if k % 2 == 0 {
                random_balanced(&mut rng, n, density)
            } else {
                random_signed(&mut rng, n, density)
            };
            let spectral = is_balanced(&g).unwrap();
            let exhaustive = is_balanced_exhaustive(&g).unwrap();
            assert_eq!(spectral, exhaustive, "{}", g.a);
            assert_eq!(switching_signature(&g).is_some(), exhaustive);
            seen[usize::from(exhaustive)] += 1;
        }
        assert!(seen[0] > 50 && seen[1] > 100, "{seen:?}");
    }

    #[test]
    fn signature_reproduces_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = random_balanced(&mut rng, 30, 0.3);
        let sigma = switching_signature(&g).unwrap();
        for (i, j, w) in g.edges() {
            assert_eq!(w > 0.0, sigma[i] == sigma[j]);
        }
        let flipped = switch_signs(&g, &sigma).unwrap();
        assert!(flipped.a.iter().all(|w| *w >= 0.0));
    }

    #[test]
    fn exhaustive_limit() {
        assert!(is_balanced_exhaustive(&clique(21, 1.0)).is_err());
    }

    fn dated(g: SignedAdjacency, y: i32, m: u32) -> SignedAdjacency {
        g.with_date(NaiveDate::from_ymd_opt(y, m, 15).unwrap())
    }

    #[test]
    fn series_joins_monthly_beta() {
        let months = vec![
            YearMonth {
                year: 2020,
                month: 1,
            },
            YearMonth {
                year: 2020,
                month: 2,
            },
            YearMonth {
                year: 2020,
                month: 3,
            },
        ];
        let epu = EpuSeries::new(months, vec![50.0, 100.0, 200.0]).unwrap();
        let nets: Vec<_> = (1..=3).map(|m| dated(clique(4, 0.5), 2020, m)).collect();
        let series = balance_series(&nets, &epu).unwrap();
        let betas: Vec<f64> = series.results.iter().map(|r| r.beta_rel).collect();
        assert_eq!(betas, vec![0.25, 0.5, 1.0]);
        assert!(series.k().iter().all(|k| *k == 1.0));

        let late = vec![dated(clique(4, 0.5), 2020, 4)];
        assert!(
            matches!(balance_series(&late, &epu), Err(Error::MissingMonth(m)) if m == "2020-04")
        );
        let unsorted = vec![nets[1].clone(), nets[0].clone()];
        assert!(balance_series(&unsorted, &epu).is_err());
    }

    #[test]
    fn planted_clique_lowers_balance() {
        let months = (1..=6)
            .map(|month| YearMonth { year: 2021, month })
            .collect();
        let epu = EpuSeries::constant(months).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let nets: Vec<_> = (1..=6)
            .map(|m| {
                let g = if m < 4 {
                    random_balanced(&mut rng, 30, 0.3)
                } else {
                    let mut g = random_balanced(&mut rng, 30, 0.3);
                    for i in 0..8 {
                        for j in 0..8 {
                            if i != j {
                                g.a[(i, j)] = -1.0;
                            }
                        }
                    }
                    SignedAdjacency::unnamed(g.a).unwrap()
                };
                dated(g, 2021, m)
            })
            .collect();
        let k = balance_series(&nets, &epu).unwrap().k();
        let before = k[..3].iter().copied().fold(f64::MAX, f64::min);
        let after = k[3..].iter().copied().fold(f64::MIN, f64::max);
        assert!(after < before, "{k:?}");
    }

    #[test]
    fn series_csv_round_trip() {
        let months = vec![
            YearMonth {
                year: 2020,
                month: 1,
            },
            YearMonth {
                year: 2020,
                month: 2,
            },
        ];
        let epu = EpuSeries::new(months, vec![3.0, 4.0]).unwrap();
        let nets = vec![
            dated(clique(3, -0.5), 2020, 1),
            dated(triangle(0.5, -0.5, -0.5), 2020, 2),
        ];
        let series = balance_series(&nets, &epu).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("balance.csv");
        series.write_csv(&p).unwrap();
        let back = BalanceSeries::read_csv(&p).unwrap();
        assert_eq!(back.k(), series.k());
        assert_eq!(back.dates(), series.dates());
        assert_eq!(back.results[1].m_neg, 2);
    }
}

//! Quasi complete-split-graph networks, signed Erdős–Rényi baselines and
//! clique-size fitting by spectral distance.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balance::spectrum;
use crate::error::{Error, Result};
use crate::formats;
use crate::wssn::SignedAdjacency;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueModelSpec {
    pub n: usize,
    pub m_neg: usize,
    pub m_pos: usize,
    pub s: usize,
    pub seed: u64,
}

fn pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

impl CliqueModelSpec {
    /// Negative edges that tie the clique to every node.
    pub fn anchored_negatives(&self) -> usize {
        pairs(self.s) + self.s * (self.n - self.s)
    }

    pub fn validate(&self) -> Result<()> {
        let CliqueModelSpec {
            n, m_neg, m_pos, s, ..
        } = *self;
        if s < 2 || s >= n {
            return Err(Error::Infeasible(format!(
                "clique size must satisfy 2 <= s < n, got s = {s}, n = {n}"
            )));
        }
        let anchored = self.anchored_negatives();
        if m_neg < anchored {
            return Err(Error::Infeasible(format!(
                "m_neg = {m_neg} is below s(2n-s-1)/2 = {anchored}"
            )));
        }
        let free = pairs(n - s);
        let extra = m_neg - anchored;
        if extra > free {
            return Err(Error::Infeasible(format!(
                "{extra} extra negatives exceed the {free} pairs outside the clique"
            )));
        }
        if m_pos > free - extra {
            return Err(Error::Infeasible(format!(
                "m_pos = {m_pos} exceeds the {} remaining non-adjacent pairs",
                free - extra
            )));
        }
        Ok(())
    }
}

fn set(a: &mut DMatrix<f64>, i: usize, j: usize, w: f64) {
    a[(i, j)] = w;
    a[(j, i)] = w;
}

/// Clique on nodes `0..s` with `-1` to every node, extra negatives among the
/// other nodes, then positives on pairs that are still empty.
pub fn gen_quasi_csg(spec: &CliqueModelSpec) -> Result<SignedAdjacency> {
    spec.validate()?;
    let CliqueModelSpec {
        n,
        m_neg,
        m_pos,
        s,
        seed,
    } = *spec;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..s {
        for j in (i + 1)..n {
            set(&mut a, i, j, -1.0);
        }
    }
    let outside: Vec<(usize, usize)> = (s..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let extra = m_neg - spec.anchored_negatives();
    let chosen = index::sample(&mut rng, outside.len(), extra + m_pos).into_vec();
    // the sample is in random order: the first `extra` become negatives
    for (k, idx) in chosen.into_iter().enumerate() {
        let (i, j) = outside[idx];
        set(&mut a, i, j, if k < extra { -1.0 } else { 1.0 });
    }
    SignedAdjacency::unnamed(a)
}

/// `m_neg + m_pos` distinct pairs chosen uniformly, signs assigned uniformly.
pub fn gen_signed_er(n: usize, m_neg: usize, m_pos: usize, seed: u64) -> Result<SignedAdjacency> {
    let total = pairs(n);
    if m_neg + m_pos > total {
        return Err(Error::Infeasible(format!(
            "{} edges requested on {n} nodes with only {total} pairs",
            m_neg + m_pos
        )));
    }
    let all: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = index::sample(&mut rng, total, m_neg + m_pos).into_vec();
    chosen.shuffle(&mut rng);
    let mut a = DMatrix::zeros(n, n);
    for (k, idx) in chosen.into_iter().enumerate() {
        let (i, j) = all[idx];
        set(&mut a, i, j, if k < m_neg { -1.0 } else { 1.0 });
    }
    SignedAdjacency::unnamed(a)
}

fn rmse_sorted(x: &[f64], y: &[f64]) -> f64 {
    let sum: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
    (sum / x.len() as f64).sqrt()
}

/// Root mean square distance between the sorted spectra of two networks.
pub fn spectral_rmse(target: &SignedAdjacency, model: &SignedAdjacency) -> Result<f64> {
    if target.n() != model.n() {
        return Err(Error::LengthMismatch {
            left: target.n(),
            right: model.n(),
        });
    }
    if target.n() == 0 {
        return Ok(0.0);
    }
    Ok(rmse_sorted(&spectrum(&target.a)?, &spectrum(&model.a)?))
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one trial, independent of evaluation order. `s = 0` is used for
/// the random baseline.
pub fn trial_seed(master: u64, s: usize, trial: usize) -> u64 {
    let a = mix(master.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let b = mix(a ^ (s as u64).wrapping_mul(0xd1b5_4a32_d192_ed03));
    mix(b ^ (trial as u64).wrapping_mul(0x8cb9_2ba7_2f3d_8dd7))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub s_opt: usize,
    pub rmse_by_s: BTreeMap<usize, f64>,
    /// Sample standard deviation of the per-trial RMSE for each `s`.
    pub rmse_sd_by_s: BTreeMap<usize, f64>,
    pub rmse_random: f64,
    pub rmse_random_sd: f64,
    pub trials: usize,
    /// Requested sizes dropped because the edge counts cannot host them.
    pub infeasible: Vec<usize>,
}

impl FitReport {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        formats::write_json(path.as_ref(), self)
    }

    pub fn best_rmse(&self) -> f64 {
        self.rmse_by_s[&self.s_opt]
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean spectral RMSE of `trials` quasi-CSG draws for every feasible `s`
/// with the target's node and edge counts, against the same number of
/// signed Erdős–Rényi draws.
pub fn fit_clique_size(
    target: &SignedAdjacency,
    s_range: RangeInclusive<usize>,
    trials: usize,
    seed: u64,
) -> Result<FitReport> {
    if trials == 0 {
        return Err(Error::Config("fit needs at least one trial".into()));
    }
    let (n, m_neg, m_pos) = (target.n(), target.m_neg, target.m_pos);
    let mut feasible = Vec::new();
    let mut infeasible = Vec::new();
    for s in s_range.clone() {
        let spec = CliqueModelSpec {
            n,
            m_neg,
            m_pos,
            s,
            seed: 0,
        };
        match spec.validate() {
            Ok(()) => feasible.push(s),
            Err(e) => {
                log::debug!("skipping s = {s}: {e}");
                infeasible.push(s);
            }
        }
    }
    if feasible.is_empty() {
        return Err(Error::Infeasible(format!(
            "no clique size in {}..={} fits n = {n}, m_neg = {m_neg}, m_pos = {m_pos}",
            s_range.start(),
            s_range.end()
        )));
    }
    let target_spectrum = spectrum(&target.a)?;
    let jobs: Vec<(usize, usize)> = feasible
        .iter()
        .chain(std::iter::once(&0))
        .flat_map(|&s| (0..trials).map(move |t| (s, t)))
        .collect();
    let rmse: Vec<f64> = jobs
        .par_iter()
        .map(|&(s, t)| {
            let seed = trial_seed(seed, s, t);
            let model = if s == 0 {
                gen_signed_er(n, m_neg, m_pos, seed)?
            } else {
                gen_quasi_csg(&CliqueModelSpec {
                    n,
                    m_neg,
                    m_pos,
                    s,
                    seed,
                })?
            };
            Ok(rmse_sorted(&target_spectrum, &spectrum(&model.a)?))
        })
        .collect::<Result<_>>()?;
    let mut rmse_by_s = BTreeMap::new();
    let mut rmse_sd_by_s = BTreeMap::new();
    for (k, chunk) in rmse.chunks(trials).enumerate() {
        let (mean, sd) = mean_sd(chunk);
        if k < feasible.len() {
            rmse_by_s.insert(feasible[k], mean);
            rmse_sd_by_s.insert(feasible[k], sd);
        } else {
            let (rmse_random, rmse_random_sd) = (mean, sd);
            let s_opt = *rmse_by_s
                .iter()
                .min_by(|x, y| x.1.total_cmp(y.1).then(x.0.cmp(y.0)))
                .expect("nonempty")
                .0;
            return Ok(FitReport {
                s_opt,
                rmse_by_s,
                rmse_sd_by_s,
                rmse_random,
                rmse_random_sd,
                trials,
                infeasible,
            });
        }
    }
    unreachable!("random baseline chunk is always present")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balance::balance_k;
    use crate::wssn::signed_degrees;

    fn spec(n: usize, m_neg: usize, m_pos: usize, s: usize, seed: u64) -> CliqueModelSpec {
        CliqueModelSpec {
            n,
            m_neg,
            m_pos,
            s,
            seed,
        }
    }

    #[test]
    fn listing_parameters_give_600_edges() {
        let sp = spec(50, 500, 100, 10, 1);
        assert_eq!(sp.anchored_negatives(), 445);
        let g = gen_quasi_csg(&sp).unwrap();
        assert_eq!((g.m_neg, g.m_pos, g.m()), (500, 100, 600));
        let deg = signed_degrees(&g);
        for d in &deg[..10] {
            assert_eq!(d.neg, 49);
            assert_eq!(d.pos, 0);
        }
    }

    #[test]
    fn minimal_spec_is_negative_triangle() {
        let g = gen_quasi_csg(&spec(3, 3, 0, 2, 9)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(g.a[(i, j)], if i == j { 0.0 } else { -1.0 });
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let sp = spec(40, 400, 150, 6, 77);
        assert_eq!(gen_quasi_csg(&sp).unwrap(), gen_quasi_csg(&sp).unwrap());
        let other = gen_quasi_csg(&CliqueModelSpec { seed: 78, ..sp }).unwrap();
        assert_ne!(gen_quasi_csg(&sp).unwrap(), other);
        assert_eq!(
            gen_signed_er(30, 50, 60, 4).unwrap(),
            gen_signed_er(30, 50, 60, 4).unwrap()
        );
    }

    #[test]
    fn infeasible_specs_report_bounds() {
        for bad in [
            spec(10, 100, 0, 1, 0),
            spec(10, 100, 0, 10, 0),
            spec(50, 444, 0, 10, 0),
            spec(10, 46, 0, 5, 0),
            spec(10, 35, 11, 5, 0),
        ] {
            assert!(
                matches!(gen_quasi_csg(&bad), Err(Error::Infeasible(_))),
                "{bad:?}"
            );
        }
        // exactly filling every pair is allowed
        let g = gen_quasi_csg(&spec(10, 35, 10, 5, 0)).unwrap();
        assert_eq!(g.m(), 45);
    }

    #[test]
    fn counts_match_for_random_specs() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.random_range(4..60);
            let s = rng.random_range(2..n);
            let base = spec(n, 0, 0, s, 0).anchored_negatives();
            let free = pairs(n - s);
            let extra = rng.random_range(0..=free);
            let m_pos = rng.random_range(0..=free - extra);
            let g = gen_quasi_csg(&spec(n, base + extra, m_pos, s, rng.random())).unwrap();
            assert_eq!(g.m_neg, base + extra);
            assert_eq!(g.m_pos, m_pos);
        }
    }

    #[test]
    fn signed_er_examples() {
        let full = gen_signed_er(8, 10, 18, 1).unwrap();
        assert_eq!(full.m(), 28);
        assert_eq!((full.m_neg, full.m_pos), (10, 18));
        let empty = gen_signed_er(8, 0, 0, 1).unwrap();
        assert_eq!(empty.m(), 0);
        assert!(gen_signed_er(8, 20, 9, 1).is_err());

        let mut total = 0.0;
        for seed in 0..100 {
            let g = gen_signed_er(100, 500, 0, seed).unwrap();
            total += 2.0 * g.m() as f64 / 100.0;
        }
        assert!((total / 100.0 - 10.0).abs() <= 0.5);
    }

    #[test]
    fn signed_er_signs_are_exchangeable() {
        // every pair is equally likely to be negative
        let n = 6;
        let mut neg = DMatrix::<f64>::zeros(n, n);
        let runs = 4000;
        for seed in 0..runs {
            let g = gen_signed_er(n, 3, 3, seed).unwrap();
            neg += g.a.map(|w| if w < 0.0 { 1.0 } else { 0.0 });
        }
        let p = 3.0 / 15.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let freq = neg[(i, j)] / runs as f64;
                assert!((freq - p).abs() < 0.03, "{i} {j} {freq}");
            }
        }
    }

    fn triangle(w: f64) -> SignedAdjacency {
        SignedAdjacency::unnamed(DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { w }))
            .unwrap()
    }

    #[test]
    fn rmse_examples() {
        let neg = triangle(-1.0);
        assert_eq!(spectral_rmse(&neg, &neg).unwrap(), 0.0);
        // sorted spectra (-2, 1, 1) and (-1, -1, 2)
        let r = spectral_rmse(&neg, &triangle(1.0)).unwrap();
        let oracle = ((1.0 + 4.0 + 1.0) / 3.0f64).sqrt();
        assert!((r - oracle).abs() < 1e-12);
        // a path 0-1-2 and its switched copy share a spectrum
        let mut a = DMatrix::zeros(3, 3);
        set(&mut a, 0, 1, 1.0);
        set(&mut a, 1, 2, 1.0);
        let mut b = a.clone();
        set(&mut b, 0, 1, -1.0);
        let pa = SignedAdjacency::unnamed(a).unwrap();
        let pb = SignedAdjacency::unnamed(b).unwrap();
        assert!(spectral_rmse(&pa, &pb).unwrap() < 1e-12);
        assert!(spectral_rmse(&pa, &triangle(1.0)).unwrap() > 0.1);
        let four = SignedAdjacency::unnamed(DMatrix::zeros(4, 4)).unwrap();
        assert!(spectral_rmse(&pa, &four).is_err());
    }

    #[test]
    fn rmse_is_pseudometric() {
        let g: Vec<_> = (0..6)
            .map(|k| gen_signed_er(20, 30, 30, k).unwrap())
            .collect();
        for x in &g {
            for y in &g {
                let xy = spectral_rmse(x, y).unwrap();
                assert!((xy - spectral_rmse(y, x).unwrap()).abs() < 1e-15);
                for z in &g {
                    let xz = spectral_rmse(x, z).unwrap();
                    let zy = spectral_rmse(z, y).unwrap();
                    assert!(xy <= xz + zy + 1e-12);
                }
            }
        }
    }

    #[test]
    fn trial_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for s in 0..30 {
            for t in 0..30 {
                assert!(seen.insert(trial_seed(5, s, t)));
            }
        }
        assert_ne!(trial_seed(5, 1, 1), trial_seed(6, 1, 1));
    }

    #[test]
    fn fit_recovers_planted_size() {
        let target = gen_quasi_csg(&spec(100, 10 * 189 / 2 + 600, 200, 10, 2024)).unwrap();
        let report = fit_clique_size(&target, 5..=15, 10, 1).unwrap();
        assert!((9..=11).contains(&report.s_opt), "{report:?}");
        assert!(report.best_rmse() < report.rmse_random);
        assert_eq!(report.rmse_by_s.len(), 11);
    }

    #[test]
    fn fit_is_reproducible_and_skips_infeasible() {
        let target = gen_quasi_csg(&spec(30, 5 * 54 / 2 + 20, 40, 5, 3)).unwrap();
        let a = fit_clique_size(&target, 2..=12, 1, 42).unwrap();
        let b = fit_clique_size(&target, 2..=12, 1, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.infeasible.iter().all(|s| *s > 5));
        assert!(!a.infeasible.is_empty());
        assert!(matches!(
            fit_clique_size(&target, 20..=25, 1, 42),
            Err(Error::Infeasible(_))
        ));
        assert!(fit_clique_size(&target, 2..=3, 0, 42).is_err());
    }

    #[test]
    fn random_target_prefers_random_model() {
        let mut wins = 0;
        for seed in 0..10 {
            let target = gen_signed_er(60, 400, 300, 1000 + seed).unwrap();
            let report = fit_clique_size(&target, 2..=5, 5, seed).unwrap();
            if report.rmse_random <= report.best_rmse() {
                wins += 1;
            }
        }
        assert!(wins >= 8, "{wins}");
    }

    #[test]
    fn balance_falls_with_clique_size() {
        // only the anchored negatives, so the clique is the sole source of frustration
        let k: Vec<f64> = [2, 5, 10, 20]
            .iter()
            .map(|&s| {
                let m_neg = spec(100, 0, 0, s, 0).anchored_negatives();
                let g = gen_quasi_csg(&spec(100, m_neg, 300, s, 11)).unwrap();
                balance_k(&g, 1.0).unwrap().k
            })
            .collect();
        for w in k.windows(2) {
            assert!(w[1] < w[0], "{k:?}");
        }
    }
}

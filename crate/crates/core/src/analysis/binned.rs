//! Equal-width binned regression of a per-user response on a per-user covariate.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{self, linear_fit, StatResult, TIE_EPS};
use crate::error::{Error, Result};
use crate::rng::{rng_for, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinnedConfig {
    pub n_bins: usize,
    pub log_x: bool,
    pub n_perm: usize,
    pub n_boot: usize,
    pub seed: u64,
}

impl Default for BinnedConfig {
    fn default() -> Self {
        BinnedConfig {
            n_bins: 30,
            log_x: false,
            n_perm: stats::DEFAULT_PERMUTATIONS,
            n_boot: stats::DEFAULT_BOOTSTRAP,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedPoint {
    pub bin: usize,
    /// Bin midpoint on the (possibly log) x scale.
    pub center: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    pub count: usize,
    pub fitted: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedRegression {
    pub result: StatResult,
    pub points: Vec<BinnedPoint>,
}

struct Bins {
    assign: Vec<usize>,
    centers: Vec<f64>,
}

fn make_bins(x: &[f64], n_bins: usize) -> Bins {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / n_bins as f64;
    let assign = x
        .iter()
        .map(|v| (((v - lo) / width).floor() as usize).min(n_bins - 1))
        .collect();
    let centers = (0..n_bins).map(|b| lo + (b as f64 + 0.5) * width).collect();
    Bins { assign, centers }
}

/// Per-bin sums of `x` and `y` and counts with a fixed assignment.
struct BinSums {
    x: Vec<f64>,
    y: Vec<f64>,
    n: Vec<usize>,
}

fn bin_sums(assign: &[usize], xy: impl Iterator<Item = (f64, f64)>, n_bins: usize) -> BinSums {
    let mut s = BinSums {
        x: vec![0.0; n_bins],
        y: vec![0.0; n_bins],
        n: vec![0; n_bins],
    };
    for (&b, (x, y)) in assign.iter().zip(xy) {
        s.x[b] += x;
        s.y[b] += y;
        s.n[b] += 1;
    }
    s
}

/// Line through the non-empty bins at (mean x, mean y).
fn fit_bins(s: &BinSums) -> Option<StatResult> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..s.n.len())
        .filter(|&b| s.n[b] > 0)
        .map(|b| (s.x[b] / s.n[b] as f64, s.y[b] / s.n[b] as f64))
        .unzip();
    if xs.len() < 2 {
        return None;
    }
    linear_fit(&xs, &ys).ok()
}

/// Bins `x` into `n_bins` equal-width bins over its range, averages `x` and
/// `y` per bin and fits a line through the non-empty bin means. The p-value
/// is the permutation probability of a binned R² at least as large; the band
/// is a percentile bootstrap over users of the fitted line.
pub fn binned_regression(x: &[f64], y: &[f64], cfg: &BinnedConfig) -> Result<BinnedRegression> {
    if x.len() != y.len() {
        return Err(Error::Invalid(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if cfg.n_bins < 2 {
        return Err(Error::Invalid(format!("need at least 2 bins, got {}", cfg.n_bins)));
    }
    let xs: Vec<f64> = if cfg.log_x {
        x.iter()
            .map(|&v| if v > 0.0 { Ok(v.ln()) } else { Err(Error::NonPositiveLog(v)) })
            .collect::<Result<_>>()?
    } else {
        x.to_vec()
    };
    let mut distinct = xs.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < cfg.n_bins {
        return Err(Error::InsufficientData(format!(
            "{} distinct x values for {} bins",
            distinct.len(),
            cfg.n_bins
        )));
    }
    let bins = make_bins(&xs, cfg.n_bins);
    let sums = bin_sums(&bins.assign, xs.iter().copied().zip(y.iter().copied()), cfg.n_bins);
    let occupied = sums.n.iter().filter(|&&c| c > 0).count();
    if occupied < 3 {
        return Err(Error::InsufficientData(format!("only {occupied} non-empty bins")));
    }
    let mut result = fit_bins(&sums).expect("at least three bins");
    result.n = x.len();
    result.n_bins = occupied;
    result.log_x = cfg.log_x;

    let observed = result.r2;
    let hits: usize = (0..cfg.n_perm)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(cfg.seed, Stream::Permutation, i as u64);
            let mut yp = y.to_vec();
            yp.shuffle(&mut rng);
            let s = bin_sums(&bins.assign, xs.iter().copied().zip(yp), cfg.n_bins);
            let r2 = fit_bins(&s).map_or(0.0, |f| f.r2);
            usize::from(r2 >= observed - TIE_EPS)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    result.p = (hits + 1) as f64 / (cfg.n_perm + 1) as f64;

    let occupied_bins: Vec<usize> = (0..cfg.n_bins).filter(|&b| sums.n[b] > 0).collect();
    let x_mean: Vec<f64> = (0..cfg.n_bins).map(|b| sums.x[b] / sums.n[b].max(1) as f64).collect();
    let boot: Vec<Option<Vec<f64>>> = (0..cfg.n_boot)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(cfg.seed, Stream::Bootstrap, i as u64);
            let n = y.len();
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let assign: Vec<usize> = idx.iter().map(|&j| bins.assign[j]).collect();
            let s = bin_sums(&assign, idx.iter().map(|&j| (xs[j], y[j])), cfg.n_bins);
            let f = fit_bins(&s)?;
            Some(occupied_bins.iter().map(|&b| f.slope * x_mean[b] + f.intercept).collect())
        })
        .collect();
    let boot: Vec<Vec<f64>> = boot.into_iter().flatten().collect();

    let points = occupied_bins
        .iter()
        .enumerate()
        .map(|(k, &b)| {
            let fitted = result.slope * x_mean[b] + result.intercept;
            let mut draws: Vec<f64> = boot.iter().map(|d| d[k]).collect();
            draws.sort_by(f64::total_cmp);
            let (ci_low, ci_high) = if draws.is_empty() {
                (fitted, fitted)
            } else {
                (stats::percentile(&draws, 0.025), stats::percentile(&draws, 0.975))
            };
            BinnedPoint {
                bin: b,
                center: bins.centers[b],
                mean_x: x_mean[b],
                mean_y: sums.y[b] / sums.n[b] as f64,
                count: sums.n[b],
                fitted,
                ci_low,
                ci_high,
            }
        })
        .collect();
    Ok(BinnedRegression { result, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(n_bins: usize, log_x: bool) -> BinnedConfig {
        BinnedConfig {
            n_bins,
            log_x,
            n_perm: 199,
            n_boot: 99,
            seed: 11,
        }
    }

    #[test]
    fn flat_response() {
        let x: Vec<f64> = (0..200).map(|i| f64::from(i) * 0.37).collect();
        let y = vec![0.5; 200];
        let b = binned_regression(&x, &y, &cfg(20, false)).unwrap();
        assert_eq!(b.result.slope, 0.0);
        assert_eq!(b.result.r2, 0.0);
        assert_eq!(b.result.p, 1.0);
    }

    #[test]
    fn exact_line_any_binning() {
        let x: Vec<f64> = (0..300).map(|i| 1.0 + f64::from(i) * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 2.0).collect();
        for n_bins in [20, 33, 50] {
            let b = binned_regression(&x, &y, &cfg(n_bins, false)).unwrap();
            assert!((b.result.slope - 3.0).abs() < 1e-9, "{n_bins}: {}", b.result.slope);
            assert!((b.result.r2 - 1.0).abs() < 1e-12);
            for p in &b.points {
                assert!(p.ci_low <= p.fitted + 1e-9 && p.fitted <= p.ci_high + 1e-9);
            }
        }
    }

    #[test]
    fn errors() {
        let x = vec![1.0, 2.0, -1.0];
        assert!(matches!(
            binned_regression(&x, &[0.0; 3], &cfg(2, true)),
            Err(Error::NonPositiveLog(v)) if v == -1.0
        ));
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        assert!(binned_regression(&x, &[0.0; 10], &cfg(20, false)).is_err());
        // two tight clusters leave only two non-empty bins
        let x: Vec<f64> = (0..40).map(|i| if i < 20 { f64::from(i) * 1e-6 } else { 100.0 + f64::from(i) * 1e-6 }).collect();
        assert!(matches!(binned_regression(&x, &[0.0; 40], &cfg(20, false)), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn noisy_line_is_significant_and_reproducible() {
        let x: Vec<f64> = (0..2000).map(|i| f64::from(i % 1000)).collect();
        let y: Vec<f64> = (0..2000).map(|i| f64::from(i % 1000) * 0.01 + if i % 2 == 0 { 3.0 } else { -3.0 }).collect();
        let a = binned_regression(&x, &y, &cfg(30, false)).unwrap();
        assert!(a.result.slope > 0.0 && a.result.r2 > 0.9);
        assert_eq!(a.result.p, 1.0 / 200.0);
        assert_eq!(a, binned_regression(&x, &y, &cfg(30, false)).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn log_of_exp_matches_linear(xs in proptest::collection::vec(-3f64..3.0, 60..120), seed in 0u64..1000) {
            let y: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * 0.2 + ((i * 7919) % 13) as f64 * 0.01).collect();
            let ex: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
            let mut c = cfg(20, false);
            c.seed = seed;
            let lin = binned_regression(&xs, &y, &c);
            c.log_x = true;
            let log = binned_regression(&ex, &y, &c);
            match (lin, log) {
                (Ok(a), Ok(b)) => {
                    prop_assert!((a.result.slope - b.result.slope).abs() < 1e-9);
                    prop_assert!((a.result.r2 - b.result.r2).abs() < 1e-9);
                    prop_assert_eq!(a.points.len(), b.points.len());
                    for (p, q) in a.points.iter().zip(&b.points) {
                        prop_assert_eq!(p.count, q.count);
                        prop_assert!((p.center - q.center).abs() < 1e-9);
                    }
                }
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{:?} vs {:?}", a.is_ok(), b.is_ok()),
            }
        }
    }
}

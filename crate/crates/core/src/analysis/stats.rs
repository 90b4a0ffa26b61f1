//! Descriptive statistics, least squares and seeded resampling tests.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_for, Stream};

pub const DEFAULT_PERMUTATIONS: usize = 10_000;
pub const DEFAULT_BOOTSTRAP: usize = 1_000;

/// Tolerance when comparing a resampled statistic with the observed one.
pub(crate) const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub slope: f64,
    pub intercept: f64,
    pub r: f64,
    pub r2: f64,
    pub p: f64,
    pub n: usize,
    pub n_bins: usize,
    pub log_x: bool,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sum of squared deviations from the mean.
fn ss(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m) * (x - m)).sum()
}

fn check_pair(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Invalid(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < min {
        return Err(Error::InsufficientData(format!(
            "need at least {min} observations, got {}",
            x.len()
        )));
    }
    Ok(())
}

/// Sample Pearson correlation.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    let (mx, my) = (mean(x), mean(y));
    let (sx, sy) = (ss(x, mx), ss(y, my));
    if sx <= 0.0 {
        return Err(Error::ZeroVariance("x"));
    }
    if sy <= 0.0 {
        return Err(Error::ZeroVariance("y"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok((sxy / (sx * sy).sqrt()).clamp(-1.0, 1.0))
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn ols(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    check_pair(x, y, 2)?;
    let (mx, my) = (mean(x), mean(y));
    let sx = ss(x, mx);
    if sx <= 0.0 {
        return Err(Error::ZeroVariance("x"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sx;
    Ok((slope, my - slope * mx))
}

/// Fit summary where a constant response yields slope 0 and R² 0.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<StatResult> {
    let (slope, intercept) = ols(x, y)?;
    let r = match pearson_r(x, y) {
        Ok(r) => r,
        Err(Error::ZeroVariance("y")) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(StatResult {
        slope,
        intercept,
        r,
        r2: r * r,
        p: 1.0,
        n: x.len(),
        ..Default::default()
    })
}

/// Pearson r with a two-sided permutation p-value.
pub fn pearson(x: &[f64], y: &[f64], n_perm: usize, seed: u64) -> Result<StatResult> {
    check_pair(x, y, 3)?;
    let mut fit = linear_fit(x, y)?;
    pearson_r(x, y)?;
    let mx = mean(x);
    let xc: Vec<f64> = x.iter().map(|v| v - mx).collect();
    let my = mean(y);
    let denom = (ss(x, mx) * ss(y, my)).sqrt();
    let observed = fit.r.abs();
    let hits: usize = (0..n_perm)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, Stream::Permutation, i as u64);
            let mut yp = y.to_vec();
            yp.shuffle(&mut rng);
            let sxy: f64 = xc.iter().zip(&yp).map(|(a, b)| a * (b - my)).sum();
            usize::from((sxy / denom).abs() >= observed - TIE_EPS)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    fit.p = (hits + 1) as f64 / (n_perm + 1) as f64;
    Ok(fit)
}

/// Average ranks, 1-based.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson_r(&ranks(x), &ranks(y))
}

/// Linear-interpolation percentile of sorted data, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Standardizes to zero mean and unit (population) standard deviation.
pub fn zscore(xs: &[f64]) -> Option<Vec<f64>> {
    let m = mean(xs);
    let sd = (ss(xs, m) / xs.len() as f64).sqrt();
    (sd > 0.0).then(|| xs.iter().map(|x| (x - m) / sd).collect())
}

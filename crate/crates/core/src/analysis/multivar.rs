//! Ordinary least squares on standardized regressors.

use serde::{Deserialize, Serialize};

use super::stats::{self, zscore};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultivarResult {
    pub names: Vec<String>,
    /// Per standard deviation of each regressor.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

impl MultivarResult {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.coefficients[i])
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let p = b.len();
    for col in 0..p {
        let piv = (col..p)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty");
        if a[piv][col].abs() < 1e-12 {
            return Err(Error::Singular);
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..p {
            let f = a[row][col] / a[col][col];
            for c in col..p {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Ok(x)
}

pub fn multivariate_regression(y: &[f64], regressors: &[(&str, &[f64])]) -> Result<MultivarResult> {
    let n = y.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!("multivariate regression needs 10 users, got {n}")));
    }
    let mut z = Vec::with_capacity(regressors.len());
    for (name, x) in regressors {
        if x.len() != n {
            return Err(Error::Invalid(format!("regressor {name} has {} values for {n} users", x.len())));
        }
        z.push(zscore(x).ok_or_else(|| Error::Invalid(format!("regressor {name} is constant")))?);
    }
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            if stats::pearson_r(&z[i], &z[j])?.abs() > 1.0 - 1e-9 {
                return Err(Error::Collinear(regressors[i].0.to_owned(), regressors[j].0.to_owned()));
            }
        }
    }
    let p = z.len();
    let my = stats::mean(y);
    let a: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| z[i].iter().zip(&z[j]).map(|(u, v)| u * v).sum()).collect())
        .collect();
    let b: Vec<f64> = (0..p).map(|i| z[i].iter().zip(y).map(|(u, v)| u * (v - my)).sum()).collect();
    let beta = solve(a, b)?;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = (0..n)
        .map(|r| {
            let fit = my + (0..p).map(|i| beta[i] * z[i][r]).sum::<f64>();
            (y[r] - fit).powi(2)
        })
        .sum();
    Ok(MultivarResult {
        names: regressors.iter().map(|r| r.0.to_owned()).collect(),
        coefficients: beta,
        intercept: my,
        r2: if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 0.0 },
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design() -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let lat: Vec<f64> = (0..50).map(|i| 43.0 + (i * 37 % 50) as f64 * 0.1).collect();
        let lon: Vec<f64> = (0..50).map(|i| -1.0 + (i * 11 % 50) as f64 * 0.2).collect();
        let inc: Vec<f64> = (0..50).map(|i| 15_000.0 + (i * 23 % 50) as f64 * 300.0).collect();
        (lat, lon, inc)
    }

    #[test]
    fn recovers_income_only() {
        let (lat, lon, inc) = design();
        let y: Vec<f64> = inc.iter().map(|x| 0.5 + x * 1e-5).collect();
        let r = multivariate_regression(&y, &[("latitude", &lat), ("longitude", &lon), ("S_inc", &inc)]).unwrap();
        assert!(r.coefficient("S_inc").unwrap() > 0.0);
        assert!(r.coefficient("latitude").unwrap().abs() < 1e-9);
        assert!(r.coefficient("longitude").unwrap().abs() < 1e-9);
        assert!((r.r2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn standardized_identity() {
        let (lat, lon, inc) = design();
        let y = zscore(&lat).unwrap();
        let r = multivariate_regression(&y, &[("latitude", &lat), ("longitude", &lon), ("S_inc", &inc)]).unwrap();
        assert!((r.coefficients[0] - 1.0).abs() < 1e-9);
        assert!(r.coefficients[1].abs() < 1e-9 && r.coefficients[2].abs() < 1e-9);
    }

    #[test]
    fn collinear_pair_is_named() {
        let (lat, _, inc) = design();
        let twice: Vec<f64> = lat.iter().map(|x| 2.0 * x + 3.0).collect();
        let err = multivariate_regression(&inc, &[("latitude", &lat), ("S_inc", &inc), ("lat2", &twice)]).unwrap_err();
        assert!(matches!(err, Error::Collinear(a, b) if a == "latitude" && b == "lat2"));
        assert!(multivariate_regression(&lat[..9], &[("x", &lat[..9])]).is_err());
    }
}

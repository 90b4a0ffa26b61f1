//! Statistical battery relating markers to socioeconomic status, space,
//! time and the mention network, plus the CSV tables each analysis emits.

pub mod binned;
pub mod multivar;
pub mod similarity;
pub mod spatial;
pub mod stats;
pub mod temporal;

use std::path::Path;

pub use binned::{binned_regression, BinnedConfig, BinnedPoint, BinnedRegression};
pub use multivar::{multivariate_regression, MultivarResult};
pub use similarity::{similarity_distributions, SimilarityDistribution, DEFAULT_BIN_WIDTH};
pub use spatial::{spatial_aggregate, SpatialAggregate, UnitMean};
pub use stats::{pearson, StatResult};
pub use temporal::{temporal_profile, TemporalProfile};

use crate::error::Result;
use crate::lingmark::Marker;
use crate::ses::CorrelationMatrix;
use crate::table::{self, fmt_f64, fmt_opt};

/// One marker-versus-indicator regression.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionRow {
    pub marker: Marker,
    pub indicator: String,
    pub fit: BinnedRegression,
}

pub fn write_fig2(path: &Path, rows: &[RegressionRow]) -> Result<()> {
    let mut w = table::writer(path)?;
    table::row(
        &mut w,
        path,
        ["marker", "indicator", "log_x", "bin", "center", "mean_x", "mean_y", "count", "fitted", "ci_low", "ci_high"],
    )?;
    for r in rows {
        for p in &r.fit.points {
            table::row(
                &mut w,
                path,
                [
                    r.marker.name().to_string(),
                    r.indicator.clone(),
                    r.fit.result.log_x.to_string(),
                    p.bin.to_string(),
                    fmt_f64(p.center),
                    fmt_f64(p.mean_x),
                    fmt_f64(p.mean_y),
                    p.count.to_string(),
                    fmt_f64(p.fitted),
                    fmt_f64(p.ci_low),
                    fmt_f64(p.ci_high),
                ],
            )?;
        }
    }
    table::finish(w, path)
}

pub fn write_table2(path: &Path, rows: &[RegressionRow]) -> Result<()> {
    let mut w = table::writer(path)?;
    table::row(
        &mut w,
        path,
        ["marker", "indicator", "log_x", "n", "n_bins", "slope", "intercept", "r", "R2", "p"],
    )?;
    for r in rows {
        let s = &r.fit.result;
        table::row(
            &mut w,
            path,
            [
                r.marker.name().to_string(),
                r.indicator.clone(),
                s.log_x.to_string(),
                s.n.to_string(),
                s.n_bins.to_string(),
                fmt_f64(s.slope),
                fmt_f64(s.intercept),
                fmt_f64(s.r),
                fmt_f64(s.r2),
                fmt_f64(s.p),
            ],
        )?;
    }
    table::finish(w, path)
}

pub fn write_table1(path: &Path, m: &CorrelationMatrix) -> Result<()> {
    let mut w = table::writer(path)?;
    table::row(&mut w, path, ["a", "b", "r", "p", "n"])?;
    for i in 0..3 {
        for j in i + 1..3 {
            let c = &m.cells[i][j];
            table::row(
                &mut w,
                path,
                [m.names[i].clone(), m.names[j].clone(), fmt_f64(c.r), fmt_f64(c.p), m.n.to_string()],
            )?;
        }
    }
    table::finish(w, path)
}

pub fn write_fig3(path: &Path, aggs: &[SpatialAggregate]) -> Result<()> {
    let mut w = table::writer(path)?;
    table::row(&mut w, path, ["level", "unit", "marker", "mean", "n", "n_users", "mean_lat"])?;
    for a in aggs {
        for r in &a.rows {
            table::row(
                &mut w,
                path,
                [
                    a.level.clone(),
                    r.unit.clone(),
                    a.marker.name().to_string(),
                    fmt_opt(r.mean),
                    r.n.to_string(),
                    r.n_users.to_string(),
                    fmt_f64(r.mean_lat),
                ],
            )?;
        }
    }
    table::finish(w, path)
}

pub fn write_fig4(path: &Path, profiles: &[TemporalProfile]) -> Result<()> {
    let mut w = table::writer(path)?;
    table::row(&mut w, path, ["population", "marker", "hour", "value", "n_obs", "income", "active_users"])?;
    for p in profiles {
        for h in 0..p.values.len() {
            table::row(
                &mut w,
                path,
                [
                    p.population.clone(),
                    p.marker.name().to_string(),
                    h.to_string(),
                    fmt_opt(p.values[h]),
                    p.n_obs[h].to_string(),
                    fmt_opt(p.income_overlay[h]),
                    p.active_users[h].to_string(),
                ],
            )?;
        }
    }
    table::finish(w, path)
}

/// Overlay correlation of one temporal profile.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlayRow {
    pub population: String,
    pub marker: Marker,
    pub stat: StatResult,
}

pub fn write_table3(path: &Path, rows: &[OverlayRow]) -> Result<()> {
    let mut w = table::writer(path)?;
    table::row(&mut w, path, ["population", "marker", "r", "p", "n_hours"])?;
    for r in rows {
        table::row(
            &mut w,
            path,
            [
                r.population.clone(),
                r.marker.name().to_string(),
                fmt_f64(r.stat.r),
                fmt_f64(r.stat.p),
                r.stat.n.to_string(),
            ],
        )?;
    }
    table::finish(w, path)
}

pub fn write_fig5(
    hist_path: &Path,
    summary_path: &Path,
    dists: &[(Marker, Vec<SimilarityDistribution>)],
) -> Result<()> {
    let mut w = table::writer(hist_path)?;
    table::row(&mut w, hist_path, ["marker", "category", "bin_low", "bin_high", "count"])?;
    for (m, ds) in dists {
        for d in ds {
            for (b, c) in d.counts.iter().enumerate() {
                table::row(
                    &mut w,
                    hist_path,
                    [
                        m.name().to_string(),
                        d.category.label().to_string(),
                        fmt_f64(b as f64 * d.bin_width),
                        fmt_f64((b + 1) as f64 * d.bin_width),
                        c.to_string(),
                    ],
                )?;
            }
        }
    }
    table::finish(w, hist_path)?;
    let mut w = table::writer(summary_path)?;
    table::row(&mut w, summary_path, ["marker", "category", "n_pairs", "mean", "resampled"])?;
    for (m, ds) in dists {
        for d in ds {
            table::row(
                &mut w,
                summary_path,
                [
                    m.name().to_string(),
                    d.category.label().to_string(),
                    d.n_pairs.to_string(),
                    fmt_f64(d.mean),
                    d.resampled.to_string(),
                ],
            )?;
        }
    }
    table::finish(w, summary_path)
}

pub fn write_multivar(path: &Path, rows: &[(Marker, MultivarResult)]) -> Result<()> {
    let mut w = table::writer(path)?;
    table::row(&mut w, path, ["marker", "term", "value", "n"])?;
    for (m, r) in rows {
        let mut emit = |term: &str, v: f64| {
            table::row(&mut w, path, [m.name().to_string(), term.to_string(), fmt_f64(v), r.n.to_string()])
        };
        emit("intercept", r.intercept)?;
        for (name, c) in r.names.iter().zip(&r.coefficients) {
            emit(name, *c)?;
        }
        emit("R2", r.r2)?;
    }
    table::finish(w, path)
}

//! Distributions of linguistic distance between sampled user pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lingmark::Marker;
use crate::rng::{rng_for, Stream};
use crate::socionet::{sample_pairs, MentionGraph, PairCategory};

pub const DEFAULT_BIN_WIDTH: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityDistribution {
    pub category: PairCategory,
    pub bin_width: f64,
    /// Counts of `|L_u - L_v|` per bin starting at 0.
    pub counts: Vec<u64>,
    pub n_pairs: usize,
    pub mean: f64,
    /// Pairs redrawn because a member lacked the marker.
    pub resampled: usize,
}

/// Histograms of `|L_u - L_v|` for the four pair categories. `values` holds
/// the marker per graph node.
pub fn similarity_distributions(
    graph: &MentionGraph,
    labels: &[u8],
    values: &[Option<f64>],
    marker: Marker,
    n: usize,
    bin_width: f64,
    seed: u64,
) -> Result<Vec<SimilarityDistribution>> {
    if values.len() != graph.n_nodes() || labels.len() != graph.n_nodes() {
        return Err(Error::Invalid("one label and value per graph node is required".into()));
    }
    if !(bin_width > 0.0) {
        return Err(Error::Invalid(format!("bin width must be positive, got {bin_width}")));
    }
    let mut out = Vec::with_capacity(4);
    for (ci, category) in PairCategory::ALL.into_iter().enumerate() {
        let mut rng = rng_for(seed, Stream::PairSample, ci as u64);
        let mut diffs = Vec::with_capacity(n);
        let mut resampled = 0;
        let mut stalled = 0;
        while diffs.len() < n {
            let want = n - diffs.len();
            let before = diffs.len();
            for (a, b) in sample_pairs(graph, labels, category, want, &mut rng)? {
                match (values[a as usize], values[b as usize]) {
                    (Some(x), Some(y)) => diffs.push((x - y).abs()),
                    _ => resampled += 1,
                }
            }
            stalled = if diffs.len() == before { stalled + 1 } else { 0 };
            if stalled >= 50 {
                return Err(Error::EmptyCategory(category.label()));
            }
        }
        let max_bin = diffs.iter().map(|d| (d / bin_width).floor() as usize).max().unwrap_or(0);
        let len = if marker.is_rate() {
            (1.0 / bin_width).round().max(1.0) as usize
        } else {
            max_bin + 1
        };
        let mut counts = vec![0u64; len.max(1)];
        for d in &diffs {
            let b = ((d / bin_width).floor() as usize).min(counts.len() - 1);
            counts[b] += 1;
        }
        out.push(SimilarityDistribution {
            category,
            bin_width,
            counts,
            n_pairs: diffs.len(),
            mean: if diffs.is_empty() { 0.0 } else { diffs.iter().sum::<f64>() / diffs.len() as f64 },
            resampled,
        });
    }
    Ok(out)
}

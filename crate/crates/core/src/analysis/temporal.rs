//! Weekly hour-of-week profiles of marker standardness and active-user income.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::stats;
use crate::corpus::{CleanPost, HOURS_PER_WEEK};
use crate::error::{Error, Result};
use crate::lingmark::{Marker, PostMarkers, Variant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalProfile {
    pub population: String,
    pub marker: Marker,
    /// Standard share of pooled observations per hour; `None` is a gap.
    pub values: Vec<Option<f64>>,
    pub n_obs: Vec<usize>,
    /// Mean income of distinct active users per hour.
    pub income_overlay: Vec<Option<f64>>,
    pub active_users: Vec<usize>,
}

impl TemporalProfile {
    pub fn defined_hours(&self) -> usize {
        self.values.iter().flatten().count()
    }

    /// Pearson correlation of values with the income overlay over hours
    /// where both are defined.
    pub fn overlay_correlation(&self, n_perm: usize, seed: u64) -> Result<stats::StatResult> {
        let (x, y): (Vec<f64>, Vec<f64>) = self
            .values
            .iter()
            .zip(&self.income_overlay)
            .filter_map(|(v, i)| Some(((*v)?, (*i)?)))
            .unzip();
        stats::pearson(&x, &y, n_perm, seed)
    }
}

fn observations(m: &PostMarkers, marker: Marker) -> Vec<Variant> {
    match marker {
        Marker::Cn => m.negation.into_iter().collect(),
        Marker::Cp => m.plurals.clone(),
        Marker::Vs => Vec::new(),
    }
}

/// Folds every marker observation by posts of included users onto its local
/// hour of the week.
pub fn temporal_profile(
    posts: &[CleanPost],
    markers: &[PostMarkers],
    marker: Marker,
    label: &str,
    include: impl Fn(&str) -> bool,
    incomes: &BTreeMap<String, f64>,
) -> Result<TemporalProfile> {
    if !marker.is_rate() {
        return Err(Error::Invalid(format!("{marker} is not a rate marker")));
    }
    if posts.len() != markers.len() {
        return Err(Error::Invalid("one marker record per post is required".into()));
    }
    let h = HOURS_PER_WEEK as usize;
    let mut standard = vec![0usize; h];
    let mut n_obs = vec![0usize; h];
    let mut active: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); h];
    for (p, m) in posts.iter().zip(markers) {
        if !include(&p.author_id) {
            continue;
        }
        let hour = p.local_hour_of_week as usize;
        active[hour].insert(&p.author_id);
        for v in observations(m, marker) {
            n_obs[hour] += 1;
            standard[hour] += usize::from(v.is_standard());
        }
    }
    let values = (0..h)
        .map(|i| (n_obs[i] > 0).then(|| standard[i] as f64 / n_obs[i] as f64))
        .collect();
    let income_overlay = active
        .iter()
        .map(|users| {
            let inc: Vec<f64> = users.iter().filter_map(|u| incomes.get(*u).copied()).collect();
            (!inc.is_empty()).then(|| stats::mean(&inc))
        })
        .collect();
    Ok(TemporalProfile {
        population: label.to_owned(),
        marker,
        values,
        n_obs,
        income_overlay,
        active_users: active.iter().map(BTreeSet::len).collect(),
    })
}

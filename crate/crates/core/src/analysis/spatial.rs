//! Per-unit marker averages over users' home locations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::stats;
use crate::error::Result;
use crate::geoloc::HomeRecord;
use crate::lingmark::{group_average, LinguisticProfile, Marker};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitMean {
    pub unit: String,
    pub mean: Option<f64>,
    /// Users with the marker present.
    pub n: usize,
    pub n_users: usize,
    pub mean_lat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialAggregate {
    pub level: String,
    pub marker: Marker,
    pub rows: Vec<UnitMean>,
    pub unassigned: usize,
}

impl SpatialAggregate {
    /// Spearman correlation of unit mean latitude with the unit mean marker.
    pub fn latitude_rank_correlation(&self) -> Result<f64> {
        let (lat, v): (Vec<f64>, Vec<f64>) =
            self.rows.iter().filter_map(|r| Some((r.mean_lat, r.mean?))).unzip();
        stats::spearman(&lat, &v)
    }
}

pub fn spatial_aggregate(
    homes: &BTreeMap<String, HomeRecord>,
    level: &str,
    profiles: &BTreeMap<String, LinguisticProfile>,
    marker: Marker,
) -> SpatialAggregate {
    let mut units: BTreeMap<&str, Vec<(&str, f64)>> = BTreeMap::new();
    let mut unassigned = 0;
    for (user, h) in homes {
        match h.units.get(level) {
            Some(u) => units.entry(u.as_str()).or_default().push((user.as_str(), h.lat)),
            None => unassigned += 1,
        }
    }
    let rows = units
        .into_iter()
        .map(|(unit, members)| {
            let avg = group_average(profiles, members.iter().map(|m| m.0), marker);
            UnitMean {
                unit: unit.to_owned(),
                mean: avg.mean,
                n: avg.n,
                n_users: members.len(),
                mean_lat: members.iter().map(|m| m.1).sum::<f64>() / members.len() as f64,
            }
        })
        .collect();
    SpatialAggregate {
        level: level.to_owned(),
        marker,
        rows,
        unassigned,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geoloc::{GridCell, HomeLocation};

    fn home(user: &str, unit: Option<&str>, lat: f64) -> (String, HomeRecord) {
        (
            user.to_string(),
            HomeRecord {
                home: HomeLocation {
                    author_id: user.into(),
                    cell: GridCell::new(0, 0, 100).unwrap(),
                    support: 1,
                    total_geoposts: 1,
                },
                lat,
                lon: 2.0,
                patch: None,
                units: unit.map(|u| BTreeMap::from([("department".to_string(), u.to_string())])).unwrap_or_default(),
            },
        )
    }

    fn prof(v: f64) -> LinguisticProfile {
        LinguisticProfile {
            l_cn: Some(v),
            l_cp: None,
            l_vs: None,
        }
    }

    #[test]
    fn single_unit_is_global_mean() {
        let homes: BTreeMap<_, _> = [home("a", Some("75"), 48.0), home("b", Some("75"), 49.0)].into_iter().collect();
        let profiles = BTreeMap::from([("a".to_string(), prof(0.2)), ("b".to_string(), prof(0.6))]);
        let s = spatial_aggregate(&homes, "department", &profiles, Marker::Cn);
        assert_eq!(s.rows.len(), 1);
        assert!((s.rows[0].mean.unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(s.rows[0].mean_lat, 48.5);
    }

    #[test]
    fn separated_units_and_unassigned() {
        let homes: BTreeMap<_, _> = [
            home("a", Some("1"), 43.0),
            home("b", Some("1"), 43.0),
            home("c", Some("2"), 50.0),
            home("d", None, 45.0),
            home("e", Some("3"), 47.0),
        ]
        .into_iter()
        .collect();
        let profiles: BTreeMap<String, LinguisticProfile> = [("a", 0.8), ("b", 0.8), ("c", 0.2), ("e", 0.5)]
            .iter()
            .map(|(u, v)| (u.to_string(), prof(*v)))
            .collect();
        let s = spatial_aggregate(&homes, "department", &profiles, Marker::Cn);
        let means: Vec<Option<f64>> = s.rows.iter().map(|r| r.mean).collect();
        assert_eq!(means, vec![Some(0.8), Some(0.2), Some(0.5)]);
        assert_eq!(s.unassigned, 1);
        assert_eq!(s.latitude_rank_correlation().unwrap(), -1.0);
    }
}

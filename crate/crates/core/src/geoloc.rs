//! Home-location inference, census patch join and spatial representativeness.
//!
//! Coordinates are projected with a single-reference-latitude equirectangular
//! projection onto a planar metric grid. Homes are snapped to a 100 m
//! lattice; census patches are 200 m cells identified by their SW corner.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::stats;
use crate::corpus::{CleanPost, Coords};
use crate::error::{Error, Result};
use crate::table::{self, Table};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;
pub const HOME_CELL_M: i64 = 100;
pub const PATCH_CELL_M: i64 = 200;
pub const PATCH_AREA_M2: f64 = (PATCH_CELL_M * PATCH_CELL_M) as f64;
pub const DEFAULT_OVERUSE_THRESHOLD: usize = 500;
pub const DEFAULT_MAX_PATCH_DISTANCE_M: i64 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl BoundingBox {
    /// Metropolitan France and Corsica.
    pub const FRANCE: BoundingBox = BoundingBox {
        lat_min: 41.0,
        lat_max: 51.5,
        lon_min: -5.5,
        lon_max: 10.0,
    };

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        (self.lat_min..=self.lat_max).contains(&lat) && (self.lon_min..=self.lon_max).contains(&lon)
    }
}

impl Default for BoundingBox {
    fn default() -> Self {
        BoundingBox::FRANCE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub ref_lat_deg: f64,
    pub bbox: BoundingBox,
}

impl Default for Projection {
    fn default() -> Self {
        Projection {
            ref_lat_deg: 46.5,
            bbox: BoundingBox::FRANCE,
        }
    }
}

impl Projection {
    fn scale_x(&self) -> f64 {
        EARTH_RADIUS_M * self.ref_lat_deg.to_radians().cos()
    }

    /// `(easting, northing)` in meters, no bounding-box check.
    pub fn forward(&self, lat: f64, lon: f64) -> (f64, f64) {
        (self.scale_x() * lon.to_radians(), EARTH_RADIUS_M * lat.to_radians())
    }

    pub fn project(&self, lat: f64, lon: f64) -> Result<(f64, f64)> {
        if !self.bbox.contains(lat, lon) {
            return Err(Error::OutOfBounds { lat, lon });
        }
        Ok(self.forward(lat, lon))
    }

    /// `(lat, lon)` in degrees.
    pub fn unproject(&self, easting_m: f64, northing_m: f64) -> (f64, f64) {
        (
            (northing_m / EARTH_RADIUS_M).to_degrees(),
            (easting_m / self.scale_x()).to_degrees(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridCell {
    pub easting_m: i64,
    pub northing_m: i64,
    pub size_m: i64,
}

impl GridCell {
    /// The cell containing a planar point (floor snapping).
    pub fn containing(easting_m: f64, northing_m: f64, size_m: i64) -> Self {
        let s = size_m as f64;
        GridCell {
            easting_m: (easting_m / s).floor() as i64 * size_m,
            northing_m: (northing_m / s).floor() as i64 * size_m,
            size_m,
        }
    }

    pub fn new(easting_m: i64, northing_m: i64, size_m: i64) -> Result<Self> {
        if size_m <= 0 || easting_m.rem_euclid(size_m) != 0 || northing_m.rem_euclid(size_m) != 0 {
            return Err(Error::Invalid(format!(
                "cell ({easting_m}, {northing_m}) is not aligned to a {size_m} m grid"
            )));
        }
        Ok(GridCell {
            easting_m,
            northing_m,
            size_m,
        })
    }

    /// Center in doubled meters, exact for any integer cell.
    fn center_x2(&self) -> (i64, i64) {
        (2 * self.easting_m + self.size_m, 2 * self.northing_m + self.size_m)
    }

    pub fn center(&self) -> (f64, f64) {
        let (x, y) = self.center_x2();
        (x as f64 / 2.0, y as f64 / 2.0)
    }
}

/// Patch identifier. Numeric ids order numerically, others lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatchId(pub String);

impl Ord for PatchId {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.0.parse::<u64>(), other.0.parse::<u64>()) {
            (Ok(a), Ok(b)) => a.cmp(&b).then_with(|| self.0.cmp(&other.0)),
            _ => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for PatchId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PatchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Drops every item whose exact raw coordinate pair occurs more than
/// `threshold` times across the input. Items without coordinates are kept.
pub fn filter_overused_coords<T>(
    items: Vec<T>,
    coords_of: impl Fn(&T) -> Option<Coords>,
    threshold: usize,
) -> Vec<T> {
    let key = |c: Coords| (c.lat.to_bits(), c.lon.to_bits());
    let mut counts: HashMap<(u64, u64), usize> = HashMap::new();
    for it in &items {
        if let Some(c) = coords_of(it) {
            *counts.entry(key(c)).or_default() += 1;
        }
    }
    items
        .into_iter()
        .filter(|it| coords_of(it).is_none_or(|c| counts[&key(c)] <= threshold))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoObservation {
    pub timestamp: i64,
    pub coords: Coords,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomeLocation {
    pub author_id: String,
    pub cell: GridCell,
    pub support: usize,
    pub total_geoposts: usize,
}

impl HomeLocation {
    /// The snapped 100 m lattice point used for distances.
    pub fn point(&self) -> (i64, i64) {
        (self.cell.easting_m, self.cell.northing_m)
    }
}

/// Modal 100 m cell of a user's geotagged posts. Observations outside the
/// bounding box are ignored; ties go to the cell seen first.
pub fn infer_home(author_id: &str, observations: &[GeoObservation], proj: &Projection) -> Option<HomeLocation> {
    // cell -> (count, first timestamp)
    let mut cells: HashMap<GridCell, (usize, i64)> = HashMap::new();
    let mut total = 0usize;
    for obs in observations {
        let Ok((e, n)) = proj.project(obs.coords.lat, obs.coords.lon) else {
            continue;
        };
        total += 1;
        let entry = cells
            .entry(GridCell::containing(e, n, HOME_CELL_M))
            .or_insert((0, obs.timestamp));
        entry.0 += 1;
        entry.1 = entry.1.min(obs.timestamp);
    }
    let (cell, (support, _)) = cells.into_iter().min_by(|(ca, (na, ta)), (cb, (nb, tb))| {
        nb.cmp(na).then(ta.cmp(tb)).then(ca.cmp(cb))
    })?;
    Some(HomeLocation {
        author_id: author_id.to_owned(),
        cell,
        support,
        total_geoposts: total,
    })
}

/// Overuse filter over all geotagged posts, then per-user home inference.
pub fn infer_homes(
    posts: &[CleanPost],
    proj: &Projection,
    overuse_threshold: usize,
) -> BTreeMap<String, HomeLocation> {
    let geo: Vec<&CleanPost> = posts.iter().filter(|p| p.coords.is_some()).collect();
    let kept = filter_overused_coords(geo, |p| p.coords, overuse_threshold);
    let mut by_user: BTreeMap<&str, Vec<GeoObservation>> = BTreeMap::new();
    for p in kept {
        by_user.entry(&p.author_id).or_default().push(GeoObservation {
            timestamp: p.timestamp,
            coords: p.coords.expect("geotagged"),
        });
    }
    by_user
        .into_iter()
        .filter_map(|(user, obs)| infer_home(user, &obs, proj).map(|h| (user.to_owned(), h)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchAssignment {
    pub patch_id: PatchId,
    pub distance_m: f64,
}

/// Bucketed nearest-patch lookup over 200 m patch cells.
#[derive(Debug, Clone)]
pub struct PatchIndex {
    max_distance_m: i64,
    bucket_m: i64,
    patches: Vec<(PatchId, (i64, i64))>,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl PatchIndex {
    pub fn new(patches: impl IntoIterator<Item = (PatchId, GridCell)>, max_distance_m: i64) -> Self {
        let bucket_m = max_distance_m.max(PATCH_CELL_M);
        let mut idx = PatchIndex {
            max_distance_m,
            bucket_m,
            patches: Vec::new(),
            buckets: HashMap::new(),
        };
        for (id, cell) in patches {
            let c = cell.center_x2();
            let i = idx.patches.len();
            idx.buckets.entry(idx.bucket_of(c)).or_default().push(i);
            idx.patches.push((id, c));
        }
        idx
    }

    fn bucket_of(&self, (x2, y2): (i64, i64)) -> (i64, i64) {
        (x2.div_euclid(2 * self.bucket_m), y2.div_euclid(2 * self.bucket_m))
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    /// Nearest patch center to a planar point given in whole meters; ties
    /// go to the smallest id, and nothing beyond the maximum distance.
    pub fn nearest(&self, point: (i64, i64)) -> Option<PatchAssignment> {
        let p2 = (2 * point.0, 2 * point.1);
        let (bx, by) = self.bucket_of(p2);
        let limit = (2 * self.max_distance_m).pow(2);
        let mut best: Option<(i64, &PatchId)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(members) = self.buckets.get(&(bx + dx, by + dy)) else {
                    continue;
                };
                for &i in members {
                    let (id, c) = &self.patches[i];
                    let d2 = (c.0 - p2.0).pow(2) + (c.1 - p2.1).pow(2);
                    if d2 > limit {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some((bd, bid)) => d2 < bd || (d2 == bd && id < bid),
                    };
                    if better {
                        best = Some((d2, id));
                    }
                }
            }
        }
        best.map(|(d2, id)| PatchAssignment {
            patch_id: id.clone(),
            distance_m: (d2 as f64).sqrt() / 2.0,
        })
    }
}

pub fn assign_patch(home: &HomeLocation, index: &PatchIndex) -> Option<PatchAssignment> {
    index.nearest(home.point())
}

/// Cell-to-unit lookup for several administrative levels.
#[derive(Debug, Clone)]
pub struct RegionMap {
    cell_size_m: i64,
    levels: BTreeMap<String, HashMap<(i64, i64), String>>,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl RegionMap {
    /// Builds from `(easting, northing, level, unit)` rows. The cell size is
    /// inferred as the greatest common divisor of all coordinates unless
    /// given explicitly.
    pub fn new(rows: Vec<(i64, i64, String, String)>, cell_size_m: Option<i64>) -> Result<Self> {
        let size = match cell_size_m {
            Some(s) => s,
            None => rows.iter().fold(0, |g, (e, n, _, _)| gcd(gcd(g, *e), *n)),
        };
        if size <= 0 {
            return Err(Error::Invalid("cannot determine region cell size".into()));
        }
        let mut levels: BTreeMap<String, HashMap<(i64, i64), String>> = BTreeMap::new();
        for (e, n, level, unit) in rows {
            GridCell::new(e, n, size)?;
            let cells = levels.entry(level.clone()).or_default();
            if let Some(prev) = cells.insert((e, n), unit.clone()) {
                if prev != unit {
                    return Err(Error::Invalid(format!(
                        "cell ({e}, {n}) assigned to both {prev:?} and {unit:?} at level {level:?}"
                    )));
                }
            }
        }
        Ok(RegionMap {
            cell_size_m: size,
            levels,
        })
    }

    pub fn from_csv(path: &Path, cell_size_m: Option<i64>) -> Result<Self> {
        let t = Table::read(path)?;
        let (ce, cn, cl, cu) = (
            t.column("easting_m")?,
            t.column("northing_m")?,
            t.column("level")?,
            t.column("unit_id")?,
        );
        let mut rows = Vec::with_capacity(t.rows.len());
        for r in &t.rows {
            rows.push((t.i64_at(r, ce)?, t.i64_at(r, cn)?, r[cl].to_string(), r[cu].to_string()));
        }
        Self::new(rows, cell_size_m)
    }

    pub fn cell_size_m(&self) -> i64 {
        self.cell_size_m
    }

    pub fn levels(&self) -> impl Iterator<Item = &str> {
        self.levels.keys().map(String::as_str)
    }

    pub fn has_level(&self, level: &str) -> bool {
        self.levels.contains_key(level)
    }

    pub fn lookup(&self, level: &str, easting_m: f64, northing_m: f64) -> Option<&str> {
        let c = GridCell::containing(easting_m, northing_m, self.cell_size_m);
        self.levels
            .get(level)?
            .get(&(c.easting_m, c.northing_m))
            .map(String::as_str)
    }

    pub fn units(&self, level: &str) -> BTreeSet<&str> {
        self.levels
            .get(level)
            .map(|m| m.values().map(String::as_str).collect())
            .unwrap_or_default()
    }
}

/// Official population per unit, per level.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferencePopulation {
    pub levels: BTreeMap<String, BTreeMap<String, f64>>,
}

impl ReferencePopulation {
    pub fn from_csv(path: &Path) -> Result<Self> {
        let t = Table::read(path)?;
        let (cl, cu, cp) = (t.column("level")?, t.column("unit_id")?, t.column("population")?);
        let mut levels: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for r in &t.rows {
            levels
                .entry(r[cl].to_string())
                .or_default()
                .insert(r[cu].to_string(), t.f64_at(r, cp)?);
        }
        Ok(ReferencePopulation { levels })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = table::writer(path)?;
        table::row(&mut w, path, ["level", "unit_id", "population"])?;
        for (level, units) in &self.levels {
            for (unit, pop) in units {
                table::row(&mut w, path, [level.clone(), unit.clone(), table::fmt_f64(*pop)])?;
            }
        }
        table::finish(w, path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelFit {
    pub level: String,
    pub n_units: usize,
    pub n_users: usize,
    pub unassigned: usize,
    pub r2: f64,
}

/// R² of a linear fit of users-per-unit against official populations.
pub fn representativeness_counts(counts: &BTreeMap<String, f64>, reference: &BTreeMap<String, f64>) -> Result<f64> {
    if reference.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "representativeness needs at least 3 units, got {}",
            reference.len()
        )));
    }
    let xs: Vec<f64> = reference.values().copied().collect();
    let ys: Vec<f64> = reference.keys().map(|u| counts.get(u).copied().unwrap_or(0.0)).collect();
    Ok(match stats::pearson_r(&xs, &ys) {
        Ok(r) => r * r,
        Err(Error::ZeroVariance(_)) => 0.0,
        Err(e) => return Err(e),
    })
}

pub fn representativeness<'a>(
    homes: impl IntoIterator<Item = &'a HomeLocation>,
    regions: &RegionMap,
    reference: &ReferencePopulation,
) -> Result<Vec<LevelFit>> {
    let homes: Vec<&HomeLocation> = homes.into_iter().collect();
    let mut out = Vec::new();
    for (level, units) in &reference.levels {
        let mut counts: BTreeMap<String, f64> = BTreeMap::new();
        let mut unassigned = 0;
        for h in &homes {
            let (e, n) = h.point();
            match regions.lookup(level, e as f64, n as f64) {
                Some(u) => *counts.entry(u.to_owned()).or_default() += 1.0,
                None => unassigned += 1,
            }
        }
        out.push(LevelFit {
            level: level.clone(),
            n_units: units.len(),
            n_users: homes.len() - unassigned,
            unassigned,
            r2: representativeness_counts(&counts, units)?,
        });
    }
    Ok(out)
}

/// A user's home with its optional patch and administrative units.
#[derive(Debug, Clone, PartialEq)]
pub struct HomeRecord {
    pub home: HomeLocation,
    pub lat: f64,
    pub lon: f64,
    pub patch: Option<PatchAssignment>,
    pub units: BTreeMap<String, String>,
}

/// Joins inferred homes to their nearest patch and to every region level.
pub fn locate_homes(
    homes: BTreeMap<String, HomeLocation>,
    proj: &Projection,
    patches: &PatchIndex,
    regions: Option<&RegionMap>,
) -> BTreeMap<String, HomeRecord> {
    homes
        .into_iter()
        .map(|(user, home)| {
            let (ce, cn) = home.cell.center();
            let (lat, lon) = proj.unproject(ce, cn);
            let units = regions
                .map(|r| {
                    r.levels()
                        .filter_map(|l| Some((l.to_owned(), r.lookup(l, ce, cn)?.to_owned())))
                        .collect()
                })
                .unwrap_or_default();
            let patch = assign_patch(&home, patches);
            (user, HomeRecord { home, lat, lon, patch, units })
        })
        .collect()
}

pub fn write_homes(path: &Path, homes: &BTreeMap<String, HomeRecord>, levels: &[String]) -> Result<()> {
    let mut w = table::writer(path)?;
    let mut header: Vec<String> = [
        "user",
        "easting_m",
        "northing_m",
        "lat",
        "lon",
        "support",
        "total_geoposts",
        "patch_id",
        "distance_m",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(levels.iter().map(|l| format!("unit_{l}")));
    table::row(&mut w, path, &header)?;
    for (user, r) in homes {
        let (e, n) = r.home.point();
        let mut rec = vec![
            user.clone(),
            e.to_string(),
            n.to_string(),
            table::fmt_f64(r.lat),
            table::fmt_f64(r.lon),
            r.home.support.to_string(),
            r.home.total_geoposts.to_string(),
            r.patch.as_ref().map(|p| p.patch_id.0.clone()).unwrap_or_default(),
            r.patch.as_ref().map(|p| table::fmt_f64(p.distance_m)).unwrap_or_default(),
        ];
        rec.extend(levels.iter().map(|l| r.units.get(l).cloned().unwrap_or_default()));
        table::row(&mut w, path, &rec)?;
    }
    table::finish(w, path)
}

pub fn read_homes(path: &Path) -> Result<BTreeMap<String, HomeRecord>> {
    let t = Table::read(path)?;
    let cols: Vec<usize> = [
        "user",
        "easting_m",
        "northing_m",
        "lat",
        "lon",
        "support",
        "total_geoposts",
        "patch_id",
        "distance_m",
    ]
    .iter()
    .map(|c| t.column(c))
    .collect::<Result<_>>()?;
    let unit_cols: Vec<(usize, String)> = t
        .headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.strip_prefix("unit_").map(|l| (i, l.to_string())))
        .collect();
    let mut out = BTreeMap::new();
    for r in &t.rows {
        let user = r[cols[0]].to_string();
        let home = HomeLocation {
            author_id: user.clone(),
            cell: GridCell::new(t.i64_at(r, cols[1])?, t.i64_at(r, cols[2])?, HOME_CELL_M)?,
            support: t.i64_at(r, cols[5])? as usize,
            total_geoposts: t.i64_at(r, cols[6])? as usize,
        };
        let patch = if r[cols[7]].is_empty() {
            None
        } else {
            Some(PatchAssignment {
                patch_id: PatchId(r[cols[7]].to_string()),
                distance_m: t.f64_at(r, cols[8])?,
            })
        };
        let units = unit_cols
            .iter()
            .filter(|(i, _)| !r[*i].is_empty())
            .map(|(i, l)| (l.clone(), r[*i].to_string()))
            .collect();
        out.insert(
            user,
            HomeRecord {
                home,
                lat: t.f64_at(r, cols[3])?,
                lon: t.f64_at(r, cols[4])?,
                patch,
                units,
            },
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn obs(ts: i64, lat: f64, lon: f64) -> GeoObservation {
        GeoObservation {
            timestamp: ts,
            coords: Coords { lat, lon },
        }
    }

    fn wide() -> Projection {
        Projection {
            ref_lat_deg: 46.5,
            bbox: BoundingBox {
                lat_min: -90.0,
                lat_max: 90.0,
                lon_min: -180.0,
                lon_max: 180.0,
            },
        }
    }

    #[test]
    fn projection_examples() {
        let p = wide();
        assert_eq!(p.forward(46.5, 0.0).0, 0.0);
        assert_eq!(p.forward(0.0, 0.0), (0.0, 0.0));
        let (e, n) = p.forward(48.8566, 2.3522);
        let (lat, lon) = p.unproject(e, n);
        assert!((lat - 48.8566).abs() < 1e-9 && (lon - 2.3522).abs() < 1e-9);
        assert!(Projection::default().project(40.0, 2.0).is_err());
        assert!(Projection::default().project(46.0, 2.0).is_ok());
    }

    #[test]
    fn overuse_threshold_is_strict() {
        let c = |lat| Some(Coords { lat, lon: 2.0 });
        let mut items: Vec<Option<Coords>> = vec![c(45.0); 501];
        items.extend(vec![c(46.0); 500]);
        items.push(None);
        let kept = filter_overused_coords(items, |x| *x, 500);
        assert_eq!(kept.len(), 501);
        assert!(kept.iter().all(|x| x.is_none_or(|c| c.lat == 46.0)));
        let distinct: Vec<Option<Coords>> = (0..50).map(|i| c(45.0 + i as f64 * 0.01)).collect();
        assert_eq!(filter_overused_coords(distinct.clone(), |x| *x, 500), distinct);
    }

    fn cell_point(p: &Projection, cell_e: f64, cell_n: f64) -> (f64, f64) {
        // a point well inside the 100 m cell whose SW corner is given
        p.unproject(cell_e + 50.0, cell_n + 50.0)
    }

    #[test]
    fn home_is_modal_cell() {
        let p = Projection::default();
        let a = cell_point(&p, 200_000.0, 5_200_000.0);
        let b = cell_point(&p, 200_300.0, 5_200_000.0);
        let h = infer_home("u", &[obs(1, a.0, a.1), obs(2, a.0, a.1), obs(3, b.0, b.1)], &p).unwrap();
        assert_eq!(h.point(), (200_000, 5_200_000));
        assert_eq!((h.support, h.total_geoposts), (2, 3));
        assert!(infer_home("u", &[], &p).is_none());
    }

    #[test]
    fn home_tie_goes_to_first_seen_for_every_ordering() {
        let p = Projection::default();
        let a = cell_point(&p, 200_000.0, 5_200_000.0);
        let b = cell_point(&p, 300_000.0, 5_300_000.0);
        let cell_a = (200_000, 5_200_000);
        let cell_b = (300_000, 5_300_000);
        // exhaustive over both timestamp orders and both slice orders
        for (ta, tb) in [(1, 2), (2, 1)] {
            let first = if ta < tb { cell_a } else { cell_b };
            for reversed in [false, true] {
                let mut v = vec![obs(ta, a.0, a.1), obs(tb, b.0, b.1)];
                if reversed {
                    v.reverse();
                }
                assert_eq!(infer_home("u", &v, &p).unwrap().point(), first);
            }
        }
    }

    #[test]
    fn out_of_box_observations_are_ignored() {
        let p = Projection::default();
        let a = cell_point(&p, 200_000.0, 5_200_000.0);
        let h = infer_home("u", &[obs(1, 0.0, 0.0), obs(2, 0.0, 0.0), obs(3, a.0, a.1)], &p).unwrap();
        assert_eq!(h.total_geoposts, 1);
        assert!(infer_home("u", &[obs(1, 0.0, 0.0)], &p).is_none());
    }

    fn patch(id: &str, e: i64, n: i64) -> (PatchId, GridCell) {
        (PatchId(id.into()), GridCell::new(e, n, PATCH_CELL_M).unwrap())
    }

    fn home_at(e: i64, n: i64) -> HomeLocation {
        HomeLocation {
            author_id: "u".into(),
            cell: GridCell::new(e, n, HOME_CELL_M).unwrap(),
            support: 1,
            total_geoposts: 1,
        }
    }

    #[test]
    fn assign_patch_cases() {
        let idx = PatchIndex::new(vec![patch("1", 0, 0), patch("2", 10_000, 0)], 1_000);
        let a = assign_patch(&home_at(100, 100), &idx).unwrap();
        assert_eq!(a.patch_id.0, "1");
        assert_eq!(a.distance_m, 0.0);
        // 1,200 m from the nearest center
        assert!(assign_patch(&home_at(1_300, 100), &idx).is_none());
        // exactly 1,000 m is still within reach
        assert_eq!(assign_patch(&home_at(1_100, 100), &idx).unwrap().distance_m, 1_000.0);
    }

    #[test]
    fn equidistant_tie_matches_brute_force() {
        let patches = vec![patch("10", 400, 0), patch("9", -400, 0), patch("11", 0, 400)];
        let idx = PatchIndex::new(patches.clone(), 1_000);
        for e in (-1_000..=1_000).step_by(100) {
            for n in (-1_000..=1_000).step_by(100) {
                let home = home_at(e, n);
                let got = assign_patch(&home, &idx);
                let mut brute: Vec<(i64, PatchId)> = patches
                    .iter()
                    .map(|(id, c)| {
                        let (x, y) = c.center_x2();
                        ((x - 2 * e).pow(2) + (y - 2 * n).pow(2), id.clone())
                    })
                    .filter(|(d2, _)| *d2 <= 4_000_000)
                    .collect();
                brute.sort();
                assert_eq!(got.map(|a| a.patch_id), brute.first().map(|b| b.1.clone()), "at ({e},{n})");
            }
        }
        // center of 9 and 10 at equal distance: numeric id order picks 9
        assert_eq!(assign_patch(&home_at(100, 100), &idx).unwrap().patch_id.0, "9");
    }

    #[test]
    fn region_map_infers_cell_size() {
        let rows = vec![
            (0, 0, "dep".to_string(), "A".to_string()),
            (2_000, 0, "dep".to_string(), "B".to_string()),
            (0, 2_000, "dep".to_string(), "A".to_string()),
            (2_000, 2_000, "dep".to_string(), "B".to_string()),
        ];
        let m = RegionMap::new(rows.clone(), None).unwrap();
        assert_eq!(m.cell_size_m(), 2_000);
        assert_eq!(m.lookup("dep", 2_500.0, 3_999.0), Some("B"));
        assert_eq!(m.lookup("dep", 4_100.0, 0.0), None);
        assert!(RegionMap::new(rows, Some(3_000)).is_err());
    }

    #[test]
    fn representativeness_examples() {
        let reference: BTreeMap<String, f64> =
            [("a", 100.0), ("b", 250.0), ("c", 400.0)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let prop: BTreeMap<String, f64> = reference.iter().map(|(k, v)| (k.clone(), v / 50.0)).collect();
        assert!((representativeness_counts(&prop, &reference).unwrap() - 1.0).abs() < 1e-12);
        let flat: BTreeMap<String, f64> = reference.keys().map(|k| (k.clone(), 7.0)).collect();
        assert_eq!(representativeness_counts(&flat, &reference).unwrap(), 0.0);
        let two: BTreeMap<String, f64> = reference.iter().take(2).map(|(k, v)| (k.clone(), *v)).collect();
        assert!(representativeness_counts(&prop, &two).is_err());
    }

    proptest! {
        #[test]
        fn projection_round_trips(lat in 41.0f64..51.5, lon in -5.5f64..10.0) {
            let p = Projection::default();
            let (e, n) = p.project(lat, lon).unwrap();
            let (la, lo) = p.unproject(e, n);
            prop_assert!((la - lat).abs() < 1e-9 && (lo - lon).abs() < 1e-9);
        }

        #[test]
        fn snapping_is_idempotent(e in -1e6f64..1e6, n in -1e6f64..1e7) {
            let c = GridCell::containing(e, n, HOME_CELL_M);
            let again = GridCell::containing(c.easting_m as f64, c.northing_m as f64, HOME_CELL_M);
            prop_assert_eq!(c, again);
            prop_assert!(c.easting_m as f64 <= e && e < (c.easting_m + HOME_CELL_M) as f64);
        }

        #[test]
        fn patch_distance_is_reflection_symmetric(e in -20i64..20, n in -20i64..20, pe in -5i64..5, pn in -5i64..5) {
            let idx = PatchIndex::new(vec![patch("1", pe * 200, pn * 200)], 1_000);
            // reflect every coordinate through the origin: patch SW corner maps to -(corner + size)
            let mirror = PatchIndex::new(vec![patch("1", -pe * 200 - 200, -pn * 200 - 200)], 1_000);
            let a = idx.nearest((e * 100, n * 100)).map(|a| a.distance_m);
            let b = mirror.nearest((-e * 100, -n * 100)).map(|a| a.distance_m);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn representativeness_scale_invariant(pops in proptest::collection::vec(1.0f64..1e5, 3..20),
                                              counts in proptest::collection::vec(0u32..50, 20),
                                              scale in 0.01f64..100.0) {
            let reference: BTreeMap<String, f64> = pops.iter().enumerate().map(|(i, p)| (format!("u{i}"), *p)).collect();
            let scaled: BTreeMap<String, f64> = reference.iter().map(|(k, v)| (k.clone(), v * scale)).collect();
            let c: BTreeMap<String, f64> = reference.keys().zip(&counts).map(|(k, c)| (k.clone(), f64::from(*c))).collect();
            let a = representativeness_counts(&c, &reference).unwrap();
            let b = representativeness_counts(&c, &scaled).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}

//! Patch-level socioeconomic indicators, user attachment and income classes.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::stats::{self, StatResult};
use crate::error::{Error, Result};
use crate::geoloc::{GridCell, PatchId, PATCH_AREA_M2, PATCH_CELL_M};
use crate::table::{self, Table};

/// A 200 m census cell with raw counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub patch_id: PatchId,
    pub cell: GridCell,
    /// Cumulative yearly income of inhabitants, euros.
    pub s_hh: f64,
    pub n_hh: f64,
    pub n_own: f64,
    pub n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Indicators {
    pub s_inc: Option<f64>,
    pub s_own: Option<f64>,
    pub s_den: f64,
}

impl Indicators {
    pub fn complete(&self) -> Option<[f64; 3]> {
        Some([self.s_inc?, self.s_own?, self.s_den])
    }
}

impl Patch {
    pub fn indicators(&self) -> Indicators {
        compute_indicators(self.s_hh, self.n_hh, self.n_own, self.n)
    }
}

/// Income per capita, owner fraction and density per m².
pub fn compute_indicators(s_hh: f64, n_hh: f64, n_own: f64, n: f64) -> Indicators {
    Indicators {
        s_inc: (n_hh > 0.0).then(|| s_hh / n_hh),
        s_own: (n > 0.0).then(|| n_own / n),
        s_den: n / PATCH_AREA_M2,
    }
}

pub const PATCH_HEADER: [&str; 7] = ["patch_id", "easting_m", "northing_m", "S_hh", "N_hh", "N_own", "N"];

pub fn read_patches(path: &Path) -> Result<Vec<Patch>> {
    let t = Table::read(path)?;
    let c: Vec<usize> = PATCH_HEADER.iter().map(|h| t.column(h)).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(t.rows.len());
    for r in &t.rows {
        let p = Patch {
            patch_id: PatchId(r[c[0]].to_string()),
            cell: GridCell::new(t.i64_at(r, c[1])?, t.i64_at(r, c[2])?, PATCH_CELL_M)
                .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?,
            s_hh: t.f64_at(r, c[3])?,
            n_hh: t.f64_at(r, c[4])?,
            n_own: t.f64_at(r, c[5])?,
            n: t.f64_at(r, c[6])?,
        };
        if p.n_own > p.n || p.n < 0.0 || p.n_hh < 0.0 || p.n_own < 0.0 {
            return Err(Error::Invalid(format!(
                "{}: patch {} has inconsistent counts",
                path.display(),
                p.patch_id
            )));
        }
        out.push(p);
    }
    Ok(out)
}

pub fn write_patches(path: &Path, patches: &[Patch]) -> Result<()> {
    let mut w = table::writer(path)?;
    table::row(&mut w, path, PATCH_HEADER)?;
    for p in patches {
        table::row(
            &mut w,
            path,
            [
                p.patch_id.0.clone(),
                p.cell.easting_m.to_string(),
                p.cell.northing_m.to_string(),
                table::fmt_f64(p.s_hh),
                table::fmt_f64(p.n_hh),
                table::fmt_f64(p.n_own),
                table::fmt_f64(p.n),
            ],
        )?;
    }
    table::finish(w, path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSes {
    pub author_id: String,
    pub patch_id: PatchId,
    pub s_inc: Option<f64>,
    pub s_own: Option<f64>,
    pub s_den: f64,
    pub socio_class: Option<u8>,
}

/// Users inherit the indicators of their assigned patch.
pub fn attach_users<'a>(
    assignments: impl IntoIterator<Item = (&'a str, &'a PatchId)>,
    patches: &[Patch],
) -> BTreeMap<String, UserSes> {
    let by_id: BTreeMap<&PatchId, Indicators> = patches
        .par_iter()
        .map(|p| (&p.patch_id, p.indicators()))
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    assignments
        .into_iter()
        .filter_map(|(user, pid)| {
            let ind = by_id.get(pid)?;
            Some((
                user.to_owned(),
                UserSes {
                    author_id: user.to_owned(),
                    patch_id: pid.clone(),
                    s_inc: ind.s_inc,
                    s_own: ind.s_own,
                    s_den: ind.s_den,
                    socio_class: None,
                },
            ))
        })
        .collect()
}

pub const INDICATOR_NAMES: [&str; 3] = ["S_inc", "S_own", "S_den"];

/// Pairwise Pearson correlation with permutation p-values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: [String; 3],
    pub cells: [[StatResult; 3]; 3],
    pub n: usize,
}

pub fn ses_cross_correlations(rows: &[[f64; 3]], n_perm: usize, seed: u64) -> Result<CorrelationMatrix> {
    if rows.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "SES correlations need at least 10 complete observations, got {}",
            rows.len()
        )));
    }
    let cols: Vec<Vec<f64>> = (0..3).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let mut cells: [[StatResult; 3]; 3] = Default::default();
    for i in 0..3 {
        cells[i][i] = StatResult {
            r: 1.0,
            r2: 1.0,
            p: 1.0 / (n_perm as f64 + 1.0),
            n: rows.len(),
            ..Default::default()
        };
        for j in i + 1..3 {
            let res = stats::pearson(&cols[i], &cols[j], n_perm, seed.wrapping_add((3 * i + j) as u64))?;
            cells[i][j] = res.clone();
            cells[j][i] = res;
        }
    }
    Ok(CorrelationMatrix {
        names: INDICATOR_NAMES.map(String::from),
        cells,
        n: rows.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPartition {
    pub k: usize,
    /// Income of the poorest member of classes 2..=k.
    pub boundaries: Vec<f64>,
    /// Class (1-based) per user.
    pub assignment: BTreeMap<String, u8>,
    /// Summed income per class.
    pub class_income: Vec<f64>,
}

impl ClassPartition {
    pub fn class_of(&self, user: &str) -> Option<u8> {
        self.assignment.get(user).copied()
    }

    pub fn members(&self, class: u8) -> impl Iterator<Item = &str> {
        self.assignment
            .iter()
            .filter(move |(_, c)| **c == class)
            .map(|(u, _)| u.as_str())
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &c in self.assignment.values() {
            s[c as usize - 1] += 1;
        }
        s
    }
}

const EPS: f64 = 1e-12;

/// Contiguous split of sorted weights into `k` parts whose sums all lie in
/// `[l, l + m]`. Positions reachable after `c` parts form an index interval.
struct Windows<'a> {
    prefix: &'a [f64],
    m: f64,
    k: usize,
}

impl Windows<'_> {
    fn n(&self) -> usize {
        self.prefix.len() - 1
    }

    /// First index with prefix >= v.
    fn first_at_least(&self, v: f64) -> usize {
        self.prefix.partition_point(|&p| p < v - EPS)
    }

    /// Last index with prefix <= v, or None.
    fn last_at_most(&self, v: f64) -> Option<usize> {
        self.prefix.partition_point(|&p| p <= v + EPS).checked_sub(1)
    }

    /// Reachable interval after each number of parts; None once empty.
    fn reach(&self, l: f64) -> Vec<Option<(usize, usize)>> {
        let mut out = vec![Some((0, 0))];
        for _ in 0..self.k {
            let next = out.last().copied().flatten().and_then(|(lo, hi)| {
                let a = self.first_at_least(self.prefix[lo] + l);
                let b = self.last_at_most(self.prefix[hi] + l + self.m)?;
                (a <= b && a <= self.n()).then_some((a, b.min(self.n())))
            });
            out.push(next);
        }
        out
    }

    fn lo_k(&self, l: f64) -> usize {
        self.reach(l)[self.k].map_or(usize::MAX, |r| r.0)
    }

    fn hi_k(&self, l: f64) -> usize {
        self.reach(l)[self.k].map_or(usize::MAX, |r| r.1)
    }

    fn feasible(&self, l: f64) -> bool {
        self.reach(l)[self.k].is_some_and(|(a, b)| a <= self.n() && self.n() <= b)
    }

    /// Boundary of a monotone predicate: true at `lo`, false at `hi`.
    fn bisect(&self, mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> (f64, f64) {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if pred(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo, hi)
    }

    /// Cuts for a feasible `l`, each placed as close as possible to the
    /// equal-share targets.
    fn cuts(&self, l: f64) -> Option<Vec<usize>> {
        let reach = self.reach(l);
        let total = self.prefix[self.n()];
        let mut cuts = vec![self.n()];
        let mut pos = self.n();
        for c in (1..=self.k).rev() {
            let (rlo, rhi) = reach[c - 1]?;
            let a = self.first_at_least(self.prefix[pos] - l - self.m).max(rlo);
            let b = self.last_at_most(self.prefix[pos] - l)?.min(rhi).min(pos.checked_sub(1)?);
            if a > b {
                return None;
            }
            let target = total * (c - 1) as f64 / self.k as f64;
            let mut best = a;
            for i in a..=b {
                if (self.prefix[i] - target).abs() < (self.prefix[best] - target).abs() - EPS {
                    best = i;
                }
            }
            pos = best;
            cuts.push(pos);
        }
        cuts.reverse();
        (cuts[0] == 0).then_some(cuts)
    }
}

fn balanced_cuts(weights: &[f64], k: usize) -> Option<Vec<usize>> {
    let mut prefix = Vec::with_capacity(weights.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        prefix.push(acc);
    }
    let total = acc;
    let m = weights.iter().copied().fold(0.0, f64::max);
    let win = Windows { prefix: &prefix, m, k };
    let n = win.n();
    let share = total / k as f64;
    let lower = (share - m).max(0.0) + 4.0 * EPS;
    // hi_k and lo_k are nondecreasing in l; overshoot counts as +inf
    let l0 = if win.hi_k(lower) >= n {
        lower
    } else {
        win.bisect(lower, share, |l| win.hi_k(l) < n).1
    };
    let l1 = if win.lo_k(share) <= n {
        share
    } else {
        win.bisect(lower, share, |l| win.lo_k(l) <= n).0
    };
    if l0 > l1 {
        return None;
    }
    let margin = 0.25 * (l1 - l0);
    let target = (share - m / 2.0).clamp(l0 + margin, l1 - margin);
    let mid = 0.5 * (l0 + l1);
    for l in [target, mid, l0, l1] {
        if win.feasible(l) {
            if let Some(c) = win.cuts(l) {
                return Some(c);
            }
        }
    }
    None
}

fn midpoint_cuts(weights: &[f64], k: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let mut cuts = vec![0];
    let mut before = 0.0;
    let mut prev_class = 1;
    for (i, w) in weights.iter().enumerate() {
        let class = (1 + (k as f64 * (before + w / 2.0) / total).floor() as usize).min(k);
        while prev_class < class {
            cuts.push(i);
            prev_class += 1;
        }
        before += w;
    }
    while cuts.len() <= k {
        cuts.push(weights.len());
    }
    cuts
}

/// Splits users, sorted by `(S_inc, author_id)`, into `k` contiguous classes
/// of near-equal cumulative income: every class sum differs from every
/// other by at most the largest individual income.
pub fn partition_classes<'a>(
    users: impl IntoIterator<Item = (&'a str, f64)>,
    k: usize,
) -> Result<ClassPartition> {
    let mut sorted: Vec<(&str, f64)> = users.into_iter().collect();
    if k < 2 || k > u8::MAX as usize {
        return Err(Error::Invalid(format!("class count must be in 2..=255, got {k}")));
    }
    if sorted.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} users cannot fill {k} classes",
            sorted.len()
        )));
    }
    if let Some((u, x)) = sorted.iter().find(|(_, x)| !x.is_finite() || *x < 0.0) {
        return Err(Error::Invalid(format!("user {u} has invalid income {x}")));
    }
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    let total: f64 = sorted.iter().map(|u| u.1).sum();
    if total <= 0.0 {
        return Err(Error::ZeroIncome);
    }
    let weights: Vec<f64> = sorted.iter().map(|u| u.1 / total).collect();
    let cuts = balanced_cuts(&weights, k).unwrap_or_else(|| {
        log::warn!("no balanced contiguous split found; falling back to midpoint walk");
        midpoint_cuts(&weights, k)
    });
    let mut assignment = BTreeMap::new();
    let mut class_income = vec![0.0; k];
    let mut boundaries = Vec::with_capacity(k - 1);
    for c in 0..k {
        for &(u, x) in &sorted[cuts[c]..cuts[c + 1]] {
            assignment.insert(u.to_owned(), (c + 1) as u8);
            class_income[c] += x;
        }
        if c > 0 {
            boundaries.push(sorted.get(cuts[c]).map_or(f64::INFINITY, |u| u.1));
        }
    }
    Ok(ClassPartition {
        k,
        boundaries,
        assignment,
        class_income,
    })
}

/// Copies class labels into the user records.
pub fn apply_partition(users: &mut BTreeMap<String, UserSes>, partition: &ClassPartition) {
    for (u, s) in users.iter_mut() {
        s.socio_class = partition.class_of(u);
    }
}

pub const USERS_SES_HEADER: [&str; 6] = ["user", "patch_id", "S_inc", "S_own", "S_den", "class"];

pub fn write_users_ses(path: &Path, users: &BTreeMap<String, UserSes>) -> Result<()> {
    let mut w = table::writer(path)?;
    table::row(&mut w, path, USERS_SES_HEADER)?;
    for (u, s) in users {
        table::row(
            &mut w,
            path,
            [
                u.clone(),
                s.patch_id.0.clone(),
                table::fmt_opt(s.s_inc),
                table::fmt_opt(s.s_own),
                table::fmt_f64(s.s_den),
                s.socio_class.map(|c| c.to_string()).unwrap_or_default(),
            ],
        )?;
    }
    table::finish(w, path)
}

pub fn read_users_ses(path: &Path) -> Result<BTreeMap<String, UserSes>> {
    let t = Table::read(path)?;
    let c: Vec<usize> = USERS_SES_HEADER.iter().map(|h| t.column(h)).collect::<Result<_>>()?;
    let mut out = BTreeMap::new();
    for r in &t.rows {
        let user = r[c[0]].to_string();
        let class = if r[c[5]].is_empty() {
            None
        } else {
            Some(r[c[5]].parse::<u8>().map_err(|_| {
                Error::Invalid(format!("{}: bad class {:?}", path.display(), &r[c[5]]))
            })?)
        };
        out.insert(
            user.clone(),
            UserSes {
                author_id: user,
                patch_id: PatchId(r[c[1]].to_string()),
                s_inc: t.opt_f64_at(r, c[2])?,
                s_own: t.opt_f64_at(r, c[3])?,
                s_den: t.f64_at(r, c[4])?,
                socio_class: class,
            },
        );
    }
    Ok(out)
}

/// Rebuilds a partition from stored class labels.
pub fn partition_from_users(users: &BTreeMap<String, UserSes>) -> Result<ClassPartition> {
    let labelled: Vec<(&String, u8, f64)> = users
        .iter()
        .filter_map(|(u, s)| Some((u, s.socio_class?, s.s_inc.unwrap_or(0.0))))
        .collect();
    let k = labelled.iter().map(|x| x.1).max().ok_or_else(|| {
        Error::InsufficientData("no user carries a socioeconomic class".into())
    })? as usize;
    let mut class_income = vec![0.0; k];
    let mut lows = vec![f64::INFINITY; k];
    let mut assignment = BTreeMap::new();
    for (u, c, x) in labelled {
        if c == 0 {
            return Err(Error::Invalid(format!("user {u} has class 0")));
        }
        class_income[c as usize - 1] += x;
        lows[c as usize - 1] = lows[c as usize - 1].min(x);
        assignment.insert(u.clone(), c);
    }
    Ok(ClassPartition {
        k,
        boundaries: lows[1..].to_vec(),
        assignment,
        class_income,
    })
}

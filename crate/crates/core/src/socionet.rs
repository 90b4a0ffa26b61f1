//! Mutual-mention network, degree-preserving null ensembles and status homophily.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_for, Rng, Stream};
use crate::ses::ClassPartition;
use crate::table::{self, Table};

pub const DEFAULT_NULL_SAMPLES: usize = 100;
pub const DEFAULT_SWAPS_PER_EDGE: usize = 10;
pub const DEFAULT_PAIR_SAMPLES: usize = 10_000;

/// Undirected simple graph over named users.
#[derive(Debug, Clone, PartialEq)]
pub struct MentionGraph {
    nodes: Vec<String>,
    index: HashMap<String, u32>,
    /// `(u, v)` with `u < v` by node index, sorted.
    edges: Vec<(u32, u32)>,
}

fn key(a: u32, b: u32) -> u64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    (u64::from(lo) << 32) | u64::from(hi)
}

impl MentionGraph {
    /// Graph over the union of `nodes` and all edge endpoints. Self-loops
    /// and duplicates are discarded.
    pub fn from_edges<'n, 'e>(
        nodes: impl IntoIterator<Item = &'n str>,
        edges: impl IntoIterator<Item = (&'e str, &'e str)>,
    ) -> Self {
        let edges: Vec<(&str, &str)> = edges.into_iter().filter(|(u, v)| u != v).collect();
        let names: BTreeSet<&str> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
        let extra: Vec<&'n str> = nodes.into_iter().filter(|n| !names.contains(n)).collect();
        let mut nodes: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        nodes.extend(extra.into_iter().map(str::to_owned));
        nodes.sort_unstable();
        nodes.dedup();
        let index: HashMap<String, u32> = nodes.iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect();
        let mut idx: Vec<(u32, u32)> = edges
            .into_iter()
            .map(|(u, v)| {
                let (a, b) = (index[u], index[v]);
                (a.min(b), a.max(b))
            })
            .collect();
        idx.sort_unstable();
        idx.dedup();
        MentionGraph {
            nodes,
            index,
            edges: idx,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_index(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, i: u32) -> &str {
        &self.nodes[i as usize]
    }

    pub fn edge_indices(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Edges as name pairs, each pair ordered lexicographically.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.edges.iter().map(|&(a, b)| (self.name(a), self.name(b)))
    }

    pub fn degrees(&self) -> Vec<usize> {
        degrees_of(self.nodes.len(), &self.edges)
    }

    pub fn has_edge(&self, u: &str, v: &str) -> bool {
        match (self.node_index(u), self.node_index(v)) {
            (Some(a), Some(b)) if a != b => self.edges.binary_search(&(a.min(b), a.max(b))).is_ok(),
            _ => false,
        }
    }
}

fn degrees_of(n: usize, edges: &[(u32, u32)]) -> Vec<usize> {
    let mut d = vec![0; n];
    for &(a, b) in edges {
        d[a as usize] += 1;
        d[b as usize] += 1;
    }
    d
}

/// Reduces directed mentions to mutual undirected edges. Every author
/// becomes a node.
pub fn build_network<'a, M>(posts: impl IntoIterator<Item = (&'a str, M)>) -> MentionGraph
where
    M: IntoIterator<Item = &'a String>,
{
    let mut authors: BTreeSet<&str> = BTreeSet::new();
    let mut directed: FxHashSet<(&str, &str)> = FxHashSet::default();
    for (author, mentions) in posts {
        authors.insert(author);
        for m in mentions {
            if m != author {
                directed.insert((author, m.as_str()));
            }
        }
    }
    let mutual: Vec<(&str, &str)> = directed
        .iter()
        .filter(|(u, v)| u < v && directed.contains(&(*v, *u)))
        .copied()
        .collect();
    MentionGraph::from_edges(authors, mutual)
}

/// One degree-preserving randomization by double-edge swaps.
pub fn rewire(edges: &[(u32, u32)], swaps_per_edge: usize, rng: &mut Rng) -> Vec<(u32, u32)> {
    let mut e = edges.to_vec();
    let m = e.len();
    if m < 2 {
        return e;
    }
    let mut present: FxHashSet<u64> = e.iter().map(|&(a, b)| key(a, b)).collect();
    for _ in 0..swaps_per_edge * m {
        let i = rng.random_range(0..m);
        let j = rng.random_range(0..m);
        if i == j {
            continue;
        }
        let (a, b) = e[i];
        let (mut c, mut d) = e[j];
        if rng.random::<bool>() {
            std::mem::swap(&mut c, &mut d);
        }
        // (a,b),(c,d) -> (a,d),(c,b)
        if a == d || c == b {
            continue;
        }
        let (k1, k2) = (key(a, d), key(c, b));
        if present.contains(&k1) || present.contains(&k2) {
            continue;
        }
        present.remove(&key(a, b));
        present.remove(&key(c, d));
        present.insert(k1);
        present.insert(k2);
        e[i] = (a.min(d), a.max(d));
        e[j] = (c.min(b), c.max(b));
    }
    e
}

/// Class label per graph node (0 = unclassed), validated against `partition`.
pub fn node_classes(graph: &MentionGraph, partition: &ClassPartition) -> Result<Vec<u8>> {
    let labels: Vec<u8> = graph
        .nodes
        .iter()
        .map(|n| partition.class_of(n).unwrap_or(0))
        .collect();
    if let Some(bad) = labels.iter().find(|&&c| c as usize > partition.k) {
        return Err(Error::PartitionMismatch(format!(
            "class {bad} exceeds the partition's {} classes",
            partition.k
        )));
    }
    if labels.iter().all(|&c| c == 0) {
        return Err(Error::PartitionMismatch("no graph node carries a class".into()));
    }
    Ok(labels)
}

/// Unordered class-pair link counts as a symmetric `k x k` matrix.
pub fn class_counts(edges: &[(u32, u32)], labels: &[u8], k: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; k]; k];
    for &(a, b) in edges {
        let (ca, cb) = (labels[a as usize], labels[b as usize]);
        if ca == 0 || cb == 0 {
            continue;
        }
        let (i, j) = (ca as usize - 1, cb as usize - 1);
        m[i][j] += 1.0;
        if i != j {
            m[j][i] += 1.0;
        }
    }
    m
}

/// Class-pair link counts of each randomized sample and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullEnsemble {
    pub k: usize,
    pub samples: Vec<Vec<Vec<f64>>>,
    pub mean: Vec<Vec<f64>>,
    pub seed: u64,
}

pub fn configuration_null(
    graph: &MentionGraph,
    labels: &[u8],
    k: usize,
    n_samples: usize,
    swaps_per_edge: usize,
    seed: u64,
) -> Result<NullEnsemble> {
    if graph.n_edges() < 2 {
        return Err(Error::InsufficientData(format!(
            "null model needs at least 2 edges, got {}",
            graph.n_edges()
        )));
    }
    if n_samples == 0 {
        return Err(Error::Invalid("null model needs at least one sample".into()));
    }
    let samples: Vec<Vec<Vec<f64>>> = (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng_for(seed, Stream::NullGraph, s as u64);
            class_counts(&rewire(&graph.edges, swaps_per_edge, &mut rng), labels, k)
        })
        .collect();
    let mut mean = vec![vec![0.0; k]; k];
    for s in &samples {
        for i in 0..k {
            for j in 0..k {
                mean[i][j] += s[i][j];
            }
        }
    }
    for row in &mut mean {
        for v in row {
            *v /= n_samples as f64;
        }
    }
    Ok(NullEnsemble {
        k,
        samples,
        mean,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomophilyMatrix {
    pub k: usize,
    pub observed: Vec<Vec<f64>>,
    pub expected: Vec<Vec<f64>>,
    /// `None` where the null expectation is zero.
    pub ratio: Vec<Vec<Option<f64>>>,
    pub n_samples: usize,
    /// Graph nodes without a class.
    pub dropped_nodes: usize,
}

impl HomophilyMatrix {
    pub fn diagonal_mean(&self) -> Option<f64> {
        let d: Vec<f64> = (0..self.k).filter_map(|i| self.ratio[i][i]).collect();
        (!d.is_empty()).then(|| d.iter().sum::<f64>() / d.len() as f64)
    }

    pub fn off_diagonal_mean(&self) -> Option<f64> {
        let d: Vec<f64> = (0..self.k)
            .flat_map(|i| (0..self.k).filter(move |&j| j != i).map(move |j| (i, j)))
            .filter_map(|(i, j)| self.ratio[i][j])
            .collect();
        (!d.is_empty()).then(|| d.iter().sum::<f64>() / d.len() as f64)
    }
}

pub fn homophily_matrix(graph: &MentionGraph, labels: &[u8], null: &NullEnsemble) -> Result<HomophilyMatrix> {
    if labels.len() != graph.n_nodes() {
        return Err(Error::PartitionMismatch(format!(
            "{} labels for {} nodes",
            labels.len(),
            graph.n_nodes()
        )));
    }
    let k = null.k;
    let observed = class_counts(&graph.edges, labels, k);
    let ratio = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| (null.mean[i][j] > 0.0).then(|| observed[i][j] / null.mean[i][j]))
                .collect()
        })
        .collect();
    Ok(HomophilyMatrix {
        k,
        observed,
        expected: null.mean.clone(),
        ratio,
        n_samples: null.samples.len(),
        dropped_nodes: labels.iter().filter(|&&c| c == 0).count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub p: f64,
    pub n_samples: usize,
    pub cells: usize,
}

fn chi2(obs: &[Vec<f64>], exp: &[Vec<f64>]) -> f64 {
    let k = exp.len();
    let mut s = 0.0;
    for i in 0..k {
        for j in i..k {
            let e = exp[i][j];
            if e > 0.0 {
                s += (obs[i][j] - e).powi(2) / e;
            }
        }
    }
    s
}

/// Monte Carlo chi-square of observed class-pair counts against the
/// ensemble mean, over unordered cells with positive expectation.
pub fn chi_square_test(observed: &[Vec<f64>], null: &NullEnsemble) -> Result<ChiSquare> {
    let k = null.k;
    let cells = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).filter(|&(i, j)| null.mean[i][j] > 0.0).count();
    if cells == 0 {
        return Err(Error::InsufficientData("all expected counts are zero".into()));
    }
    let nonempty = (0..k)
        .flat_map(|i| (i..k).map(move |j| (i, j)))
        .filter(|&(i, j)| observed[i][j] > 0.0)
        .count();
    if nonempty < 2 {
        return Err(Error::InsufficientData(format!("{nonempty} non-empty cells")));
    }
    let statistic = chi2(observed, &null.mean);
    let hits = null
        .samples
        .iter()
        .filter(|s| chi2(s, &null.mean) >= statistic - 1e-12)
        .count();
    Ok(ChiSquare {
        statistic,
        p: (hits + 1) as f64 / (null.samples.len() + 1) as f64,
        n_samples: null.samples.len(),
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PairCategory {
    ConnectedSameClass,
    Connected,
    DisconnectedSameClass,
    DisconnectedRandom,
}

impl PairCategory {
    pub const ALL: [PairCategory; 4] = [
        PairCategory::ConnectedSameClass,
        PairCategory::Connected,
        PairCategory::DisconnectedSameClass,
        PairCategory::DisconnectedRandom,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PairCategory::ConnectedSameClass => "connected-same-class",
            PairCategory::Connected => "connected",
            PairCategory::DisconnectedSameClass => "disconnected-same-class",
            PairCategory::DisconnectedRandom => "disconnected-random",
        }
    }
}

impl fmt::Display for PairCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PairCategory {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PairCategory::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown pair category {s:?}")))
    }
}

/// Samples `n` node-index pairs from a category. Connected categories draw
/// distinct edges when enough exist and repeat otherwise; disconnected
/// categories draw independent non-adjacent pairs.
pub fn sample_pairs(
    graph: &MentionGraph,
    labels: &[u8],
    category: PairCategory,
    n: usize,
    rng: &mut Rng,
) -> Result<Vec<(u32, u32)>> {
    let empty = || Error::EmptyCategory(category.label());
    match category {
        PairCategory::ConnectedSameClass | PairCategory::Connected => {
            let same = category == PairCategory::ConnectedSameClass;
            let pool: Vec<(u32, u32)> = graph
                .edges
                .iter()
                .copied()
                .filter(|&(a, b)| {
                    let (ca, cb) = (labels[a as usize], labels[b as usize]);
                    ca != 0 && cb != 0 && (!same || ca == cb)
                })
                .collect();
            if pool.is_empty() {
                return Err(empty());
            }
            if n <= pool.len() {
                Ok(index::sample(rng, pool.len(), n).into_iter().map(|i| pool[i]).collect())
            } else {
                Ok((0..n).map(|_| pool[rng.random_range(0..pool.len())]).collect())
            }
        }
        PairCategory::DisconnectedSameClass | PairCategory::DisconnectedRandom => {
            let same = category == PairCategory::DisconnectedSameClass;
            let mut groups: BTreeMap<u8, Vec<u32>> = BTreeMap::new();
            for (i, &c) in labels.iter().enumerate() {
                if c != 0 {
                    groups.entry(if same { c } else { 1 }).or_default().push(i as u32);
                }
            }
            let groups: Vec<Vec<u32>> = groups.into_values().filter(|g| g.len() >= 2).collect();
            let pairs_in = |g: &Vec<u32>| (g.len() * (g.len() - 1) / 2) as u64;
            let total: u64 = groups.iter().map(pairs_in).sum();
            let linked = graph
                .edges
                .iter()
                .filter(|&&(a, b)| {
                    let (ca, cb) = (labels[a as usize], labels[b as usize]);
                    ca != 0 && cb != 0 && (!same || ca == cb)
                })
                .count() as u64;
            if total <= linked {
                return Err(empty());
            }
            let mut out = Vec::with_capacity(n);
            while out.len() < n {
                let mut pick = rng.random_range(0..total);
                let g = groups
                    .iter()
                    .find(|g| {
                        let c = pairs_in(g);
                        if pick < c {
                            true
                        } else {
                            pick -= c;
                            false
                        }
                    })
                    .expect("pick below total");
                let i = rng.random_range(0..g.len());
                let mut j = rng.random_range(0..g.len() - 1);
                if j >= i {
                    j += 1;
                }
                let (a, b) = (g[i].min(g[j]), g[i].max(g[j]));
                if graph.edges.binary_search(&(a, b)).is_err() {
                    out.push((a, b));
                }
            }
            Ok(out)
        }
    }
}

pub fn write_edges(path: &Path, graph: &MentionGraph) -> Result<()> {
    let mut w = table::writer(path)?;
    table::row(&mut w, path, ["u", "v"])?;
    let mut named: Vec<(&str, &str)> = graph.edges().map(|(a, b)| (a.min(b), a.max(b))).collect();
    named.sort_unstable();
    for (u, v) in named {
        table::row(&mut w, path, [u, v])?;
    }
    table::finish(w, path)
}

/// Reads an edge list; `nodes` adds isolated users.
pub fn read_edges<'a>(path: &Path, nodes: impl IntoIterator<Item = &'a str>) -> Result<MentionGraph> {
    let t = Table::read(path)?;
    let (cu, cv) = (t.column("u")?, t.column("v")?);
    let pairs: Vec<(String, String)> = t.rows.iter().map(|r| (r[cu].to_string(), r[cv].to_string())).collect();
    Ok(MentionGraph::from_edges(
        nodes,
        pairs.iter().map(|(u, v)| (u.as_str(), v.as_str())),
    ))
}

/// Ratio matrix as CSV with row label column `class`.
pub fn write_homophily(path: &Path, m: &HomophilyMatrix) -> Result<()> {
    let mut w = table::writer(path)?;
    let mut header = vec!["class".to_string()];
    header.extend((1..=m.k).map(|c| c.to_string()));
    table::row(&mut w, path, &header)?;
    for i in 0..m.k {
        let mut rec = vec![(i + 1).to_string()];
        rec.extend(m.ratio[i].iter().map(|r| table::fmt_opt(*r)));
        table::row(&mut w, path, &rec)?;
    }
    table::finish(w, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn posts(list: &[(&str, &[&str])]) -> Vec<(String, Vec<String>)> {
        list.iter()
            .map(|(a, ms)| (a.to_string(), ms.iter().map(|m| m.to_string()).collect()))
            .collect()
    }

    fn graph_of(p: &[(String, Vec<String>)]) -> MentionGraph {
        build_network(p.iter().map(|(a, m)| (a.as_str(), m.iter())))
    }

    #[test]
    fn mutuality_rules() {
        let g = graph_of(&posts(&[("u", &["v"]), ("v", &["u"])]));
        assert!(g.has_edge("u", "v"));
        let g = graph_of(&posts(&[("u", &["v", "v", "v", "v", "v"]), ("v", &[])]));
        assert_eq!(g.n_edges(), 0);
        let g = graph_of(&posts(&[("u", &["u"])]));
        assert_eq!((g.n_edges(), g.n_nodes()), (0, 1));
    }

    #[test]
    fn order_independent() {
        let mut p = posts(&[("a", &["b", "c"]), ("b", &["a"]), ("c", &["a", "b"]), ("b", &["c"]), ("d", &["a"])]);
        let g1 = graph_of(&p);
        p.reverse();
        assert_eq!(g1, graph_of(&p));
        assert_eq!(g1.n_edges(), 3);
    }

    fn named(edges: &[(&'static str, &'static str)]) -> MentionGraph {
        MentionGraph::from_edges([], edges.iter().copied())
    }

    #[test]
    fn swaps_preserve_degrees() {
        let mut edges = Vec::new();
        let names: Vec<String> = (0..60).map(|i| format!("n{i}")).collect();
        for i in 0..60 {
            for d in [1, 2, 7] {
                edges.push((names[i].as_str(), names[(i + d) % 60].as_str()));
            }
        }
        let g = MentionGraph::from_edges([], edges);
        let deg = g.degrees();
        for s in 0..5 {
            let mut rng = rng_for(1, Stream::NullGraph, s);
            let r = rewire(g.edge_indices(), 10, &mut rng);
            assert_eq!(degrees_of(g.n_nodes(), &r), deg);
            let set: FxHashSet<u64> = r.iter().map(|&(a, b)| key(a, b)).collect();
            assert_eq!(set.len(), r.len());
            assert!(r.iter().all(|(a, b)| a != b));
        }
    }

    #[test]
    fn triangle_is_rigid() {
        let g = named(&[("a", "b"), ("b", "c"), ("a", "c")]);
        let labels = vec![1, 1, 2];
        let null = configuration_null(&g, &labels, 2, 20, 10, 3).unwrap();
        let h = homophily_matrix(&g, &labels, &null).unwrap();
        assert_eq!(h.expected, h.observed);
        let chi = chi_square_test(&h.observed, &null).unwrap();
        assert_eq!(chi.statistic, 0.0);
        assert_eq!(chi.p, 1.0);
    }

    #[test]
    fn path_ensemble_is_uniform() {
        let g = named(&[("a", "b"), ("b", "c"), ("c", "d")]);
        let mut freq: HashMap<Vec<(u32, u32)>, usize> = HashMap::new();
        let n = 1000;
        for s in 0..n {
            let mut rng = rng_for(77, Stream::NullGraph, s);
            let mut r = rewire(g.edge_indices(), 10, &mut rng);
            r.sort_unstable();
            *freq.entry(r).or_default() += 1;
        }
        // a-b-c-d and a-c-b-d are the only simple graphs with degrees 1,2,2,1
        assert_eq!(freq.len(), 2);
        for c in freq.values() {
            let share = *c as f64 / n as f64;
            assert!((share - 0.5).abs() < 0.05, "{freq:?}");
        }
    }

    #[test]
    fn planted_extreme_and_counting_convention() {
        let mut edges: Vec<(String, String)> = Vec::new();
        for i in 0..20 {
            edges.push((format!("a{i}"), format!("a{}", (i + 1) % 20)));
            edges.push((format!("b{i}"), format!("c{i}")));
        }
        let g = MentionGraph::from_edges([], edges.iter().map(|(u, v)| (u.as_str(), v.as_str())));
        let labels: Vec<u8> = g.nodes().iter().map(|n| if n.starts_with('a') { 1 } else { 2 }).collect();
        let null = configuration_null(&g, &labels, 2, 50, 10, 5).unwrap();
        let h = homophily_matrix(&g, &labels, &null).unwrap();
        let upper: f64 = (0..2).flat_map(|i| (i..2).map(move |j| (i, j))).map(|(i, j)| h.observed[i][j]).sum();
        assert_eq!(upper, g.n_edges() as f64);
        for s in &null.samples {
            let u: f64 = s[0][0] + s[0][1] + s[1][1];
            assert_eq!(u, g.n_edges() as f64);
        }
        assert!(h.ratio[0][0].unwrap() > 1.0);
        assert_eq!(h.observed[0][1], 0.0);
    }

    #[test]
    fn random_labels_give_unit_ratios() {
        let n = 600;
        let mut rng = rng_for(9, Stream::SynthNetwork, 0);
        let names: Vec<String> = (0..n).map(|i| format!("u{i:04}")).collect();
        let mut edges = BTreeSet::new();
        while edges.len() < 3000 {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a != b {
                edges.insert((a.min(b), a.max(b)));
            }
        }
        let g = MentionGraph::from_edges(
            names.iter().map(String::as_str),
            edges.iter().map(|&(a, b)| (names[a].as_str(), names[b].as_str())),
        );
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(1..=3u8)).collect();
        let null = configuration_null(&g, &labels, 3, 100, 10, 13).unwrap();
        let h = homophily_matrix(&g, &labels, &null).unwrap();
        for row in &h.ratio {
            for r in row.iter().flatten() {
                assert!((0.8..=1.2).contains(r), "{:?}", h.ratio);
            }
        }
    }

    #[test]
    fn null_is_reproducible() {
        let g = named(&[("a", "b"), ("c", "d"), ("e", "f"), ("a", "c"), ("b", "e")]);
        let labels = vec![1, 2, 1, 2, 1, 2];
        let a = configuration_null(&g, &labels, 2, 10, 10, 4).unwrap();
        let b = configuration_null(&g, &labels, 2, 10, 10, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pair_sampling_categories() {
        let complete = named(&[("a", "b"), ("a", "c"), ("b", "c")]);
        let mut rng = rng_for(1, Stream::PairSample, 0);
        assert!(matches!(
            sample_pairs(&complete, &[1, 1, 2], PairCategory::DisconnectedRandom, 5, &mut rng),
            Err(Error::EmptyCategory(_))
        ));
        let single = named(&[("a", "b")]);
        let p = sample_pairs(&single, &[1, 2], PairCategory::Connected, 3, &mut rng).unwrap();
        assert_eq!(p, vec![(0, 1); 3]);

        let mut edges: Vec<(String, String)> = Vec::new();
        for i in 0..30 {
            edges.push((format!("x{i}"), format!("x{}", (i + 1) % 30)));
            edges.push((format!("x{i}"), format!("y{i}")));
            edges.push((format!("y{i}"), format!("y{}", (i + 3) % 30)));
        }
        let g = MentionGraph::from_edges([], edges.iter().map(|(u, v)| (u.as_str(), v.as_str())));
        let labels: Vec<u8> = g.nodes().iter().map(|n| if n.starts_with('x') { 1 } else { 2 }).collect();
        for cat in PairCategory::ALL {
            let pairs = sample_pairs(&g, &labels, cat, 200, &mut rng).unwrap();
            assert_eq!(pairs.len(), 200);
            for (a, b) in pairs {
                let connected = g.has_edge(g.name(a), g.name(b));
                let same = labels[a as usize] == labels[b as usize];
                match cat {
                    PairCategory::ConnectedSameClass => assert!(connected && same),
                    PairCategory::Connected => assert!(connected),
                    PairCategory::DisconnectedSameClass => assert!(!connected && same),
                    PairCategory::DisconnectedRandom => assert!(!connected && a != b),
                }
            }
        }
    }

    #[test]
    fn edges_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("edges.csv");
        let g = named(&[("b", "a"), ("c", "b")]);
        write_edges(&path, &g).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "u,v\na,b\nb,c\n");
        assert_eq!(read_edges(&path, []).unwrap(), g);
    }
}

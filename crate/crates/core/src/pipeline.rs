//! End-to-end assembly: from raw posts and census inputs to every analysis
//! table, either in memory or through the on-disk artifacts.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::analysis::{
    self, binned_regression, multivariate_regression, similarity_distributions, spatial_aggregate, stats,
    temporal_profile, BinnedConfig, MultivarResult, OverlayRow, RegressionRow, SimilarityDistribution,
    SpatialAggregate, StatResult, TemporalProfile,
};
use crate::corpus::{preprocess_all, CleanPost, RawPost};
use crate::error::{Error, Result};
use crate::geoloc::{
    infer_homes, locate_homes, HomeRecord, PatchIndex, Projection, RegionMap, DEFAULT_MAX_PATCH_DISTANCE_M,
    DEFAULT_OVERUSE_THRESHOLD,
};
use crate::lingmark::{profile_corpus, LinguisticProfile, Marker, MarkerExtractor, PluralLexicon, PostMarkers};
use crate::rng::{derive_seed, Stream};
use crate::ses::{
    apply_partition, attach_users, partition_classes, partition_from_users, ses_cross_correlations, ClassPartition,
    CorrelationMatrix, Patch, UserSes,
};
use crate::socionet::{
    build_network, chi_square_test, configuration_null, homophily_matrix, node_classes, ChiSquare, HomophilyMatrix,
    MentionGraph, DEFAULT_NULL_SAMPLES, DEFAULT_PAIR_SAMPLES, DEFAULT_SWAPS_PER_EDGE,
};

pub const DEFAULT_CLASSES: usize = 9;

/// SES indicators regressed against, with their x transform.
pub const INDICATORS: [(&str, bool); 3] = [("S_inc", false), ("S_own", false), ("S_den", true)];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildConfig {
    pub n_classes: usize,
    pub overuse_threshold: usize,
    pub max_patch_distance_m: i64,
    pub projection: Projection,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            n_classes: DEFAULT_CLASSES,
            overuse_threshold: DEFAULT_OVERUSE_THRESHOLD,
            max_patch_distance_m: DEFAULT_MAX_PATCH_DISTANCE_M,
            projection: Projection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisConfig {
    pub seed: u64,
    pub n_bins: usize,
    pub n_perm: usize,
    pub n_boot: usize,
    pub null_samples: usize,
    pub swaps_per_edge: usize,
    pub pair_samples: usize,
    pub bin_width: f64,
    /// Region level aggregated in the spatial table.
    pub level: String,
}

impl AnalysisConfig {
    pub fn new(seed: u64) -> Self {
        AnalysisConfig {
            seed,
            n_bins: 30,
            n_perm: stats::DEFAULT_PERMUTATIONS,
            n_boot: stats::DEFAULT_BOOTSTRAP,
            null_samples: DEFAULT_NULL_SAMPLES,
            swaps_per_edge: DEFAULT_SWAPS_PER_EDGE,
            pair_samples: DEFAULT_PAIR_SAMPLES,
            bin_width: analysis::DEFAULT_BIN_WIDTH,
            level: "department".into(),
        }
    }

    fn sub_seed(&self, tag: u64) -> u64 {
        derive_seed(self.seed, Stream::Resample, tag)
    }
}

/// Everything the analyses consume. Fields an analysis does not need may
/// stay empty.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub posts: Vec<CleanPost>,
    pub markers: Vec<PostMarkers>,
    pub profiles: BTreeMap<String, LinguisticProfile>,
    pub homes: BTreeMap<String, HomeRecord>,
    pub users: BTreeMap<String, UserSes>,
    pub graph: Option<MentionGraph>,
}

impl Dataset {
    /// Runs every preparation stage in memory.
    pub fn build(
        raw: &[RawPost],
        patches: &[Patch],
        regions: Option<&RegionMap>,
        lexicon: PluralLexicon,
        cfg: &BuildConfig,
    ) -> Result<Dataset> {
        let (posts, _) = preprocess_all(raw);
        let markers = MarkerExtractor::new(lexicon).all_post_markers(&posts);
        let profiles = profile_corpus(&posts, &markers).into_iter().map(|(u, (_, p))| (u, p)).collect();
        let homes = infer_homes(&posts, &cfg.projection, cfg.overuse_threshold);
        let index = PatchIndex::new(patches.iter().map(|p| (p.patch_id.clone(), p.cell)), cfg.max_patch_distance_m);
        let homes = locate_homes(homes, &cfg.projection, &index, regions);
        let users = classify_users(&homes, patches, cfg.n_classes)?;
        let graph = build_network(posts.iter().map(|p| (p.author_id.as_str(), p.mentioned_ids.iter())));
        Ok(Dataset {
            posts,
            markers,
            profiles,
            homes,
            users,
            graph: Some(graph),
        })
    }

    pub fn partition(&self) -> Result<ClassPartition> {
        partition_from_users(&self.users)
    }

    pub fn graph(&self) -> Result<&MentionGraph> {
        self.graph
            .as_ref()
            .ok_or_else(|| Error::Invalid("this analysis needs the mention network".into()))
    }

    fn incomes(&self) -> BTreeMap<String, f64> {
        self.users.iter().filter_map(|(u, s)| Some((u.clone(), s.s_inc?))).collect()
    }
}

/// Attaches patch indicators to located users and splits those with an
/// income into balanced classes.
pub fn classify_users(
    homes: &BTreeMap<String, HomeRecord>,
    patches: &[Patch],
    n_classes: usize,
) -> Result<BTreeMap<String, UserSes>> {
    let mut users = attach_users(
        homes
            .iter()
            .filter_map(|(u, h)| Some((u.as_str(), &h.patch.as_ref()?.patch_id))),
        patches,
    );
    let partition = partition_classes(users.iter().filter_map(|(u, s)| Some((u.as_str(), s.s_inc?))), n_classes)?;
    apply_partition(&mut users, &partition);
    Ok(users)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Analysis {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Table1,
    Table2,
    Table3,
    Multivar,
}

impl Analysis {
    pub const ALL: [Analysis; 8] = [
        Analysis::Fig2,
        Analysis::Fig3,
        Analysis::Fig4,
        Analysis::Fig5,
        Analysis::Table1,
        Analysis::Table2,
        Analysis::Table3,
        Analysis::Multivar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Analysis::Fig2 => "fig2",
            Analysis::Fig3 => "fig3",
            Analysis::Fig4 => "fig4",
            Analysis::Fig5 => "fig5",
            Analysis::Table1 => "table1",
            Analysis::Table2 => "table2",
            Analysis::Table3 => "table3",
            Analysis::Multivar => "multivar",
        }
    }

    /// Output files, relative to the output directory.
    pub fn files(self) -> &'static [&'static str] {
        match self {
            Analysis::Fig2 => &["fig2_binned.csv"],
            Analysis::Fig3 => &["fig3_departments.csv"],
            Analysis::Fig4 => &["fig4_profile.csv"],
            Analysis::Fig5 => &["fig5_histograms.csv", "fig5_summary.csv"],
            Analysis::Table1 => &["table1_ses.csv", "table1_ses.json"],
            Analysis::Table2 => &["table2_r2.csv", "table2_r2.json"],
            Analysis::Table3 => &["table3_temporal.csv", "table3_temporal.json"],
            Analysis::Multivar => &["multivar.csv", "multivar.json"],
        }
    }

    pub fn needs_posts(self) -> bool {
        matches!(self, Analysis::Fig4 | Analysis::Table3)
    }

    pub fn needs_profiles(self) -> bool {
        !matches!(self, Analysis::Table1)
    }

    pub fn needs_homes(self) -> bool {
        matches!(self, Analysis::Fig3 | Analysis::Multivar)
    }

    pub fn needs_users(self) -> bool {
        !matches!(self, Analysis::Fig3)
    }

    pub fn needs_graph(self) -> bool {
        matches!(self, Analysis::Fig5)
    }
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Analysis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Analysis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown analysis {s:?}")))
    }
}

/// Binned regressions of every marker against every SES indicator.
pub fn regressions(ds: &Dataset, cfg: &AnalysisConfig) -> Result<Vec<RegressionRow>> {
    let mut rows = Vec::with_capacity(9);
    for (mi, marker) in Marker::ALL.into_iter().enumerate() {
        for (ii, (indicator, log_x)) in INDICATORS.into_iter().enumerate() {
            let (x, y): (Vec<f64>, Vec<f64>) = ds
                .users
                .iter()
                .filter_map(|(u, s)| {
                    let x = match indicator {
                        "S_inc" => s.s_inc?,
                        "S_own" => s.s_own?,
                        _ => s.s_den,
                    };
                    if log_x && x <= 0.0 {
                        return None;
                    }
                    Some((x, ds.profiles.get(u)?.get(marker)?))
                })
                .unzip();
            let bcfg = BinnedConfig {
                n_bins: cfg.n_bins,
                log_x,
                n_perm: cfg.n_perm,
                n_boot: cfg.n_boot,
                seed: cfg.sub_seed((10 + mi * 3 + ii) as u64),
            };
            let fit = binned_regression(&x, &y, &bcfg)?;
            rows.push(RegressionRow {
                marker,
                indicator: indicator.to_owned(),
                fit,
            });
        }
    }
    Ok(rows)
}

pub fn ses_table(ds: &Dataset, cfg: &AnalysisConfig) -> Result<CorrelationMatrix> {
    let rows: Vec<[f64; 3]> = ds
        .users
        .values()
        .filter_map(|s| Some([s.s_inc?, s.s_own?, s.s_den]))
        .collect();
    ses_cross_correlations(&rows, cfg.n_perm, cfg.sub_seed(1))
}

pub fn spatial(ds: &Dataset, cfg: &AnalysisConfig) -> Result<Vec<SpatialAggregate>> {
    let aggs: Vec<SpatialAggregate> = Marker::ALL
        .into_iter()
        .map(|m| spatial_aggregate(&ds.homes, &cfg.level, &ds.profiles, m))
        .collect();
    if aggs.iter().all(|a| a.rows.is_empty()) {
        return Err(Error::InsufficientData(format!("no home falls in a {:?} unit", cfg.level)));
    }
    Ok(aggs)
}

/// Weekly profiles for all users and for users with SES, plus the overlay
/// and cross-population correlations.
pub fn temporal(ds: &Dataset, cfg: &AnalysisConfig) -> Result<(Vec<TemporalProfile>, Vec<OverlayRow>)> {
    let incomes = ds.incomes();
    let mut profiles = Vec::new();
    let mut rows = Vec::new();
    for (mi, marker) in [Marker::Cn, Marker::Cp].into_iter().enumerate() {
        let all = temporal_profile(&ds.posts, &ds.markers, marker, "all", |_| true, &incomes)?;
        let geo = temporal_profile(&ds.posts, &ds.markers, marker, "geo", |u| incomes.contains_key(u), &incomes)?;
        for (pi, p) in [&all, &geo].into_iter().enumerate() {
            rows.push(OverlayRow {
                population: p.population.clone(),
                marker,
                stat: p.overlay_correlation(cfg.n_perm, cfg.sub_seed((30 + mi * 3 + pi) as u64))?,
            });
        }
        let (a, g): (Vec<f64>, Vec<f64>) = all
            .values
            .iter()
            .zip(&geo.values)
            .filter_map(|(a, g)| Some(((*a)?, (*g)?)))
            .unzip();
        rows.push(OverlayRow {
            population: "all~geo".into(),
            marker,
            stat: stats::pearson(&a, &g, cfg.n_perm, cfg.sub_seed((32 + mi * 3) as u64))?,
        });
        profiles.push(all);
        profiles.push(geo);
    }
    Ok((profiles, rows))
}

pub fn similarity(ds: &Dataset, cfg: &AnalysisConfig) -> Result<Vec<(Marker, Vec<SimilarityDistribution>)>> {
    let graph = ds.graph()?;
    let labels = node_classes(graph, &ds.partition()?)?;
    Marker::ALL
        .into_iter()
        .enumerate()
        .map(|(mi, marker)| {
            let values: Vec<Option<f64>> = graph
                .nodes()
                .iter()
                .map(|n| ds.profiles.get(n).and_then(|p| p.get(marker)))
                .collect();
            let d = similarity_distributions(
                graph,
                &labels,
                &values,
                marker,
                cfg.pair_samples,
                cfg.bin_width,
                cfg.sub_seed((50 + mi) as u64),
            )?;
            Ok((marker, d))
        })
        .collect()
}

/// Marker on standardized latitude, longitude and income.
pub fn multivar(ds: &Dataset) -> Result<Vec<(Marker, MultivarResult)>> {
    Marker::ALL
        .into_iter()
        .map(|marker| {
            let mut y = Vec::new();
            let mut lat = Vec::new();
            let mut lon = Vec::new();
            let mut inc = Vec::new();
            for (u, h) in &ds.homes {
                let (Some(s), Some(v)) = (
                    ds.users.get(u).and_then(|s| s.s_inc),
                    ds.profiles.get(u).and_then(|p| p.get(marker)),
                ) else {
                    continue;
                };
                y.push(v);
                lat.push(h.lat);
                lon.push(h.lon);
                inc.push(s);
            }
            let r = multivariate_regression(&y, &[("latitude", &lat), ("longitude", &lon), ("S_inc", &inc)])?;
            Ok((marker, r))
        })
        .collect()
}

/// Homophily ratios against the configuration null with its chi-square test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomophilyResult {
    pub matrix: HomophilyMatrix,
    pub chi_square: ChiSquare,
    pub seed: u64,
}

#[derive(Serialize)]
struct HomophilyStats<'a> {
    statistic: f64,
    p: f64,
    n_samples: usize,
    seed: u64,
    cells: usize,
    diagonal_mean: Option<f64>,
    off_diagonal_mean: Option<f64>,
    dropped_nodes: usize,
    n_edges: usize,
    observed: &'a [Vec<f64>],
    expected: &'a [Vec<f64>],
}

pub fn homophily(
    graph: &MentionGraph,
    partition: &ClassPartition,
    n_samples: usize,
    swaps_per_edge: usize,
    seed: u64,
) -> Result<HomophilyResult> {
    let labels = node_classes(graph, partition)?;
    let null = configuration_null(graph, &labels, partition.k, n_samples, swaps_per_edge, seed)?;
    let matrix = homophily_matrix(graph, &labels, &null)?;
    let chi_square = chi_square_test(&matrix.observed, &null)?;
    Ok(HomophilyResult {
        matrix,
        chi_square,
        seed,
    })
}

pub fn write_homophily_stats(path: &Path, h: &HomophilyResult, n_edges: usize) -> Result<()> {
    write_json(
        path,
        &HomophilyStats {
            statistic: h.chi_square.statistic,
            p: h.chi_square.p,
            n_samples: h.chi_square.n_samples,
            seed: h.seed,
            cells: h.chi_square.cells,
            diagonal_mean: h.matrix.diagonal_mean(),
            off_diagonal_mean: h.matrix.off_diagonal_mean(),
            dropped_nodes: h.matrix.dropped_nodes,
            n_edges,
            observed: &h.matrix.observed,
            expected: &h.matrix.expected,
        },
    )
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path.display().to_string(), e))?;
    let mut f = crate::table::create(path)?;
    std::io::Write::write_all(&mut f, (text + "\n").as_bytes()).map_err(|e| Error::write(path, e))
}

#[derive(Serialize)]
struct RegressionJson<'a> {
    marker: &'static str,
    indicator: &'a str,
    stat: &'a StatResult,
}

#[derive(Serialize)]
struct OverlayJson<'a> {
    population: &'a str,
    marker: &'static str,
    stat: &'a StatResult,
}

#[derive(Serialize)]
struct MultivarJson<'a> {
    marker: &'static str,
    fit: &'a MultivarResult,
}

/// Runs the requested analyses and writes their tables into `outdir`.
/// Shared computations run once.
pub fn run_analyses(ds: &Dataset, what: &[Analysis], cfg: &AnalysisConfig, outdir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(outdir).map_err(|e| Error::write(outdir, e))?;
    let mut written = Vec::new();
    let mut regs: Option<Vec<RegressionRow>> = None;
    let mut temp: Option<(Vec<TemporalProfile>, Vec<OverlayRow>)> = None;
    let mut what = what.to_vec();
    what.sort();
    what.dedup();
    for a in what {
        log::info!("running {a}");
        let files: Vec<PathBuf> = a.files().iter().map(|f| outdir.join(f)).collect();
        match a {
            Analysis::Fig2 | Analysis::Table2 => {
                if regs.is_none() {
                    regs = Some(regressions(ds, cfg)?);
                }
                let rows = regs.as_deref().expect("computed");
                if a == Analysis::Fig2 {
                    analysis::write_fig2(&files[0], rows)?;
                } else {
                    analysis::write_table2(&files[0], rows)?;
                    let json: Vec<RegressionJson> = rows
                        .iter()
                        .map(|r| RegressionJson {
                            marker: r.marker.name(),
                            indicator: &r.indicator,
                            stat: &r.fit.result,
                        })
                        .collect();
                    write_json(&files[1], &json)?;
                }
            }
            Analysis::Fig3 => analysis::write_fig3(&files[0], &spatial(ds, cfg)?)?,
            Analysis::Fig4 | Analysis::Table3 => {
                if temp.is_none() {
                    temp = Some(temporal(ds, cfg)?);
                }
                let (profiles, rows) = temp.as_ref().expect("computed");
                if a == Analysis::Fig4 {
                    analysis::write_fig4(&files[0], profiles)?;
                } else {
                    analysis::write_table3(&files[0], rows)?;
                    let json: Vec<OverlayJson> = rows
                        .iter()
                        .map(|r| OverlayJson {
                            population: &r.population,
                            marker: r.marker.name(),
                            stat: &r.stat,
                        })
                        .collect();
                    write_json(&files[1], &json)?;
                }
            }
            Analysis::Fig5 => analysis::write_fig5(&files[0], &files[1], &similarity(ds, cfg)?)?,
            Analysis::Table1 => {
                let m = ses_table(ds, cfg)?;
                analysis::write_table1(&files[0], &m)?;
                write_json(&files[1], &m)?;
            }
            Analysis::Multivar => {
                let rows = multivar(ds)?;
                analysis::write_multivar(&files[0], &rows)?;
                let json: Vec<MultivarJson> = rows
                    .iter()
                    .map(|(m, fit)| MultivarJson { marker: m.name(), fit })
                    .collect();
                write_json(&files[1], &json)?;
            }
        }
        written.extend(files);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig};

    fn small() -> (Dataset, crate::synth::SynthData) {
        let cfg = SynthConfig {
            n_users: 600,
            patches_per_side: 12,
            n_communities: 20,
            ..SynthConfig::new(21)
        };
        let data = generate(&cfg).unwrap();
        let regions = data.region_map().unwrap();
        let ds = Dataset::build(
            &data.all_posts(),
            &data.patches,
            Some(&regions),
            PluralLexicon::french(),
            &BuildConfig::default(),
        )
        .unwrap();
        (ds, data)
    }

    #[test]
    fn analysis_names_round_trip() {
        for a in Analysis::ALL {
            assert_eq!(a.name().parse::<Analysis>().unwrap(), a);
        }
        assert!("fig9".parse::<Analysis>().is_err());
    }

    #[test]
    fn small_world_runs_every_analysis() {
        let (ds, data) = small();
        let located = data.truth.users.iter().filter(|u| u.geolocated && !u.offgrid).count();
        assert!(ds.users.len() >= located * 9 / 10, "{} of {located}", ds.users.len());
        // located users land on their true patch
        let truth: BTreeMap<&str, &str> =
            data.truth.users.iter().map(|u| (u.id.as_str(), u.patch_id.as_str())).collect();
        let hits = ds.users.iter().filter(|(u, s)| truth[u.as_str()] == s.patch_id.0).count();
        assert!(hits * 100 >= ds.users.len() * 95, "{hits} of {}", ds.users.len());
        assert_eq!(ds.graph().unwrap().n_edges(), data.edges.len());

        let mut cfg = AnalysisConfig::new(3);
        cfg.n_perm = 99;
        cfg.n_boot = 50;
        cfg.null_samples = 10;
        cfg.pair_samples = 500;
        cfg.n_bins = 20;
        let dir = tempfile::tempdir().unwrap();
        let files = run_analyses(&ds, &Analysis::ALL, &cfg, dir.path()).unwrap();
        assert_eq!(files.len(), 13);
        assert!(files.iter().all(|f| f.exists()));
        let h = homophily(ds.graph().unwrap(), &ds.partition().unwrap(), 10, 5, 1).unwrap();
        assert_eq!(h.matrix.k, 9);
    }
}

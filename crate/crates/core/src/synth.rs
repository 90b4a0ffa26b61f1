//! Synthetic corpora with planted couplings between income, language, space,
//! time and the mention network.
//!
//! Every generated artifact is a regular pipeline input: NDJSON corpus
//! shards, a census patch grid, a region map and reference populations.
//! A ground-truth file records the latent quantities for oracle checks.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::Rng as _;
use rand_distr::{Distribution, LogNormal, Normal};
use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::corpus::{Coords, RawPost};
use crate::error::{Error, Result};
use crate::geoloc::{GridCell, PatchId, Projection, ReferencePopulation, RegionMap, PATCH_CELL_M};
use crate::lingmark::{PluralLexicon, NEGATION_PARTICLES};
use crate::rng::{rng_for, Rng, Stream};
use crate::ses::{self, partition_classes, Patch};

/// Monday 2015-01-05 00:00 UTC.
pub const SPAN_START: i64 = 1_420_416_000;

const SUBJECTS: [&str; 5] = ["je", "tu", "il", "elle", "on"];
const NEGATORS: [&str; 5] = ["pas", "pas", "pas", "jamais", "rien"];
const ONSETS: [&str; 14] = ["b", "c", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "ch"];
const NUCLEI: [&str; 8] = ["a", "e", "i", "o", "u", "ou", "on", "an"];
const EMOTICONS: [&str; 6] = [":)", ";)", ":(", "<3", "\u{1F600}", "\u{2764}\u{FE0F}"];

macro_rules! synth_config {
    ($($(#[$doc:meta])* $name:ident : $ty:ty = $default:expr),* $(,)?) => {
        /// Generator knobs, read from a flat `key = value` file.
        #[derive(Debug, Clone, PartialEq, Serialize)]
        pub struct SynthConfig {
            pub seed: u64,
            $($(#[$doc])* pub $name: $ty,)*
        }

        impl SynthConfig {
            pub fn new(seed: u64) -> Self {
                SynthConfig { seed, $($name: $default,)* }
            }

            fn set(&mut self, key: &str, value: &str) -> Result<()> {
                let bad = |e: &dyn std::fmt::Display| Error::Config(format!("{key} = {value:?}: {e}"));
                match key {
                    "seed" => self.seed = value.parse().map_err(|e| bad(&e))?,
                    $(stringify!($name) => self.$name = value.parse().map_err(|e| bad(&e))?,)*
                    _ => return Err(Error::Config(format!("unknown key {key:?}"))),
                }
                Ok(())
            }

            /// All keys with their resolved values, in declaration order.
            pub fn pairs(&self) -> Vec<(&'static str, String)> {
                vec![("seed", self.seed.to_string()), $((stringify!($name), self.$name.to_string()),)*]
            }
        }
    };
}

synth_config! {
    n_users: usize = 10_000,
    patches_per_side: usize = 40,
    patch_spacing_m: i64 = 4_000,
    origin_lat: f64 = 44.5,
    origin_lon: f64 = 0.5,
    region_cell_m: i64 = 2_000,
    /// log-normal income per capita
    income_mu: f64 = 20_000f64.ln(),
    income_sigma: f64 = 0.35,
    /// two-sided winsorizing quantile, 0 disables
    winsorize: f64 = 0.01,
    patch_population_median: f64 = 60.0,
    n_cities: usize = 6,
    /// peak population multiplier at a city center
    city_boost: f64 = 10.0,
    city_radius_m: f64 = 15_000.0,
    n_classes: usize = 9,
    cn_base: f64 = 0.0,
    cn_slope: f64 = 0.8,
    cp_base: f64 = 0.4,
    cp_slope: f64 = 0.8,
    /// log vocabulary pool size
    vs_base: f64 = 5.5,
    vs_slope: f64 = 0.25,
    vs_latent_weight: f64 = 0.3,
    /// logit change per standardized northing
    lat_gradient: f64 = -0.4,
    n_communities: usize = 200,
    community_sd: f64 = 0.9,
    user_sd: f64 = 0.3,
    /// logit of day-time posting per standardized income
    diurnal: f64 = 1.5,
    day_hour: f64 = 13.0,
    day_hour_sd: f64 = 3.5,
    night_hour: f64 = 22.0,
    night_hour_sd: f64 = 3.0,
    mean_degree: f64 = 6.0,
    /// same-class edge weight is 1 + alpha (k - 1)
    alpha: f64 = 0.7,
    /// same-community edge weight is 1 + beta (G - 1)
    beta: f64 = 8.0,
    posts_min: usize = 60,
    posts_max: usize = 140,
    weeks: i64 = 20,
    negation_rate: f64 = 0.5,
    plural_rate: f64 = 0.5,
    words_min: usize = 3,
    words_max: usize = 8,
    word_list_size: usize = 6_000,
    geo_user_rate: f64 = 0.9,
    offgrid_rate: f64 = 0.02,
    geotag_rate: f64 = 0.3,
    home_share: f64 = 0.7,
    hotspot_rate: f64 = 0.02,
    n_hotspots: usize = 3,
    cet_rate: f64 = 0.9,
    retweet_rate: f64 = 0.05,
    url_rate: f64 = 0.1,
    hashtag_rate: f64 = 0.1,
    emoticon_rate: f64 = 0.1,
    capitalize_rate: f64 = 0.3,
    noise_mentions_per_user: f64 = 1.0,
    malformed_rate: f64 = 0.0005,
    shards: usize = 4,
}

impl SynthConfig {
    /// Parses `key = value` lines; `#` starts a comment. `seed` is required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SynthConfig::new(0);
        let mut seen_seed = false;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            let k = k.trim();
            seen_seed |= k == "seed";
            cfg.set(k, v.trim())?;
        }
        if !seen_seed {
            return Err(Error::Config("seed is mandatory".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
        Self::parse(&text)
    }

    /// Every slope and the class assortativity set to zero.
    pub fn null(seed: u64) -> Self {
        SynthConfig {
            cn_slope: 0.0,
            cp_slope: 0.0,
            vs_slope: 0.0,
            lat_gradient: 0.0,
            diurnal: 0.0,
            alpha: 0.0,
            ..SynthConfig::new(seed)
        }
    }

    pub fn to_text(&self) -> String {
        self.pairs().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        for (k, v) in [
            ("negation_rate", self.negation_rate),
            ("plural_rate", self.plural_rate),
            ("geo_user_rate", self.geo_user_rate),
            ("offgrid_rate", self.offgrid_rate),
            ("geotag_rate", self.geotag_rate),
            ("home_share", self.home_share),
            ("hotspot_rate", self.hotspot_rate),
            ("cet_rate", self.cet_rate),
            ("retweet_rate", self.retweet_rate),
            ("url_rate", self.url_rate),
            ("hashtag_rate", self.hashtag_rate),
            ("emoticon_rate", self.emoticon_rate),
            ("capitalize_rate", self.capitalize_rate),
            ("malformed_rate", self.malformed_rate),
            ("alpha", self.alpha),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return err(format!("{k} must lie in [0, 1], got {v}"));
            }
        }
        for (k, v) in [
            ("income_mu", self.income_mu),
            ("cn_slope", self.cn_slope),
            ("cp_slope", self.cp_slope),
            ("vs_slope", self.vs_slope),
            ("lat_gradient", self.lat_gradient),
            ("diurnal", self.diurnal),
        ] {
            if !v.is_finite() {
                return err(format!("{k} must be finite"));
            }
        }
        if !(self.city_boost >= 0.0 && self.city_radius_m > 0.0) {
            return err("city_boost must be non-negative and city_radius_m positive".into());
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return err(format!("beta must be finite and non-negative, got {}", self.beta));
        }
        if !(0.0..0.5).contains(&self.winsorize) {
            return err(format!("winsorize must lie in [0, 0.5), got {}", self.winsorize));
        }
        if self.n_users < 10 {
            return err(format!("n_users must be at least 10, got {}", self.n_users));
        }
        if !(2..=255).contains(&self.n_classes) || self.n_classes > self.n_users {
            return err(format!("n_classes must lie in 2..=min(255, n_users), got {}", self.n_classes));
        }
        if self.mean_degree < 0.0 || self.mean_degree >= self.n_users as f64 {
            return Err(Error::InfeasibleNetwork(format!(
                "mean degree {} with {} users",
                self.mean_degree, self.n_users
            )));
        }
        if self.patches_per_side == 0 || self.n_communities == 0 || self.shards == 0 {
            return err("patches_per_side, n_communities and shards must be positive".into());
        }
        if self.patch_spacing_m % (2 * PATCH_CELL_M) != 0 || self.patch_spacing_m < 1_600 {
            return err("patch_spacing_m must be a multiple of 400 and at least 1600".into());
        }
        if self.region_cell_m <= 0 || self.region_cell_m % PATCH_CELL_M != 0 {
            return err("region_cell_m must be a positive multiple of 200".into());
        }
        if (self.patches_per_side as i64 * self.patch_spacing_m) % self.region_cell_m != 0 {
            return err("territory extent must be a multiple of region_cell_m".into());
        }
        if self.posts_min == 0 || self.posts_min > self.posts_max || self.words_min > self.words_max {
            return err("posts_min..=posts_max and words_min..=words_max must be non-empty".into());
        }
        if self.weeks <= 0 {
            return err("weeks must be positive".into());
        }
        if self.word_list_size < 100 {
            return err("word_list_size must be at least 100".into());
        }
        Ok(())
    }
}

/// Latent and observed attributes of one synthetic user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueUser {
    pub id: String,
    pub patch_id: String,
    pub income: f64,
    pub z_income: f64,
    pub z_north: f64,
    pub community: usize,
    pub class: u8,
    pub geolocated: bool,
    pub offgrid: bool,
    pub p_cn: f64,
    pub p_cp: f64,
    pub vocab_pool: usize,
    pub day_prob: f64,
    pub n_posts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSigns {
    pub cn_income: f64,
    pub cp_income: f64,
    pub vs_income: f64,
    pub latitude: f64,
    pub diurnal_income: f64,
    pub homophily: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub config: BTreeMap<String, String>,
    pub planted: PlantedSigns,
    pub n_edges: usize,
    pub n_noise_mentions: usize,
    pub hotspots: Vec<(f64, f64)>,
    pub users: Vec<TrueUser>,
}

/// A fully generated synthetic world, held in memory.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub config: SynthConfig,
    pub projection: Projection,
    /// Per shard, sorted by (timestamp, post id).
    pub shards: Vec<Vec<RawPost>>,
    /// Garbage lines: (shard, insert-before position, text).
    pub junk: Vec<(usize, usize, String)>,
    pub patches: Vec<Patch>,
    pub regions: Vec<(i64, i64, String, String)>,
    pub reference: ReferencePopulation,
    pub edges: Vec<(String, String)>,
    pub truth: GroundTruth,
}

impl SynthData {
    pub fn posts(&self) -> impl Iterator<Item = &RawPost> {
        self.shards.iter().flatten()
    }

    pub fn all_posts(&self) -> Vec<RawPost> {
        self.posts().cloned().collect()
    }

    pub fn region_map(&self) -> Result<RegionMap> {
        RegionMap::new(self.regions.clone(), Some(self.config.region_cell_m))
    }
}

/// Paths written by [`SynthData::write_to`].
#[derive(Debug, Clone)]
pub struct SynthFiles {
    pub corpus: Vec<PathBuf>,
    pub patches: PathBuf,
    pub regions: PathBuf,
    pub reference: PathBuf,
    pub truth: PathBuf,
    pub config: PathBuf,
}

impl SynthData {
    pub fn write_to(&self, dir: &Path) -> Result<SynthFiles> {
        fs::create_dir_all(dir).map_err(|e| Error::write(dir, e))?;
        let mut corpus = Vec::new();
        for (s, posts) in self.shards.iter().enumerate() {
            let path = dir.join(format!("corpus_{s:02}.ndjson"));
            let f = fs::File::create(&path).map_err(|e| Error::write(&path, e))?;
            let mut w = BufWriter::new(f);
            let mut junk = self.junk.iter().filter(|j| j.0 == s).peekable();
            for (i, p) in posts.iter().enumerate() {
                while let Some(j) = junk.next_if(|j| j.1 <= i) {
                    writeln!(w, "{}", j.2).map_err(|e| Error::write(&path, e))?;
                }
                writeln!(w, "{}", p.to_json_line()).map_err(|e| Error::write(&path, e))?;
            }
            for j in junk {
                writeln!(w, "{}", j.2).map_err(|e| Error::write(&path, e))?;
            }
            w.flush().map_err(|e| Error::write(&path, e))?;
            corpus.push(path);
        }
        let patches = dir.join("patches.csv");
        ses::write_patches(&patches, &self.patches)?;
        let regions = dir.join("regions.csv");
        {
            let mut w = crate::table::writer(&regions)?;
            crate::table::row(&mut w, &regions, ["easting_m", "northing_m", "level", "unit_id"])?;
            for (e, n, level, unit) in &self.regions {
                crate::table::row(&mut w, &regions, [e.to_string(), n.to_string(), level.clone(), unit.clone()])?;
            }
            crate::table::finish(w, &regions)?;
        }
        let reference = dir.join("reference.csv");
        self.reference.write_csv(&reference)?;
        let truth = dir.join("ground_truth.json");
        let json = serde_json::to_string_pretty(&self.truth).map_err(|e| Error::json("ground truth", e))?;
        fs::write(&truth, json + "\n").map_err(|e| Error::write(&truth, e))?;
        let config = dir.join("synth_config.txt");
        fs::write(&config, self.config.to_text()).map_err(|e| Error::write(&config, e))?;
        Ok(SynthFiles {
            corpus,
            patches,
            regions,
            reference,
            truth,
            config,
        })
    }
}

fn sign(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Filler vocabulary: two-syllable pseudo-words that collide with no marker
/// word.
fn word_list(size: usize, lexicon: &PluralLexicon, rng: &mut Rng) -> Vec<String> {
    let mut banned: HashSet<&str> = NEGATION_PARTICLES.iter().copied().collect();
    banned.extend(SUBJECTS);
    banned.extend(["ne", "xd", "rt"]);
    for (s, p) in lexicon.pairs() {
        banned.insert(s);
        banned.insert(p);
    }
    let dets = lexicon.determiners();
    banned.extend(dets.iter().copied());
    let mut firsts: Vec<String> = NUCLEI.iter().map(|v| v.to_string()).collect();
    for o in ONSETS {
        for v in NUCLEI {
            firsts.push(format!("{o}{v}"));
        }
    }
    let mut words: Vec<String> = Vec::new();
    for a in &firsts {
        for o in ONSETS {
            for v in NUCLEI {
                let w = format!("{a}{o}{v}");
                if !banned.contains(w.as_str()) {
                    words.push(w);
                }
            }
        }
    }
    words.sort_unstable();
    words.dedup();
    words.shuffle(rng);
    // three-syllable words top up large requests
    let mut extra = 0usize;
    while words.len() < size {
        let w = format!("{}{}{}", words[extra % words.len()], ONSETS[extra % ONSETS.len()], NUCLEI[(extra / 14) % 8]);
        if !banned.contains(w.as_str()) {
            words.push(w);
        }
        extra += 1;
    }
    words.truncate(size);
    words
}

struct Territory {
    origin: (i64, i64),
    extent: i64,
}

impl Territory {
    fn patch_center(&self, cfg: &SynthConfig, ix: usize, iy: usize) -> (i64, i64) {
        let half = cfg.patch_spacing_m / 2;
        (
            self.origin.0 + ix as i64 * cfg.patch_spacing_m + half + PATCH_CELL_M / 2,
            self.origin.1 + iy as i64 * cfg.patch_spacing_m + half + PATCH_CELL_M / 2,
        )
    }
}

fn winsorize(values: &mut [f64], q: f64) {
    if q <= 0.0 || values.len() < 3 {
        return;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = crate::analysis::stats::percentile(&sorted, q);
    let hi = crate::analysis::stats::percentile(&sorted, 1.0 - q);
    for v in values {
        *v = v.clamp(lo, hi);
    }
}

struct UserDraft {
    truth: TrueUser,
    home: (f64, f64),
    offset: i32,
    shared: f64,
}

/// Generates a complete synthetic world. Deterministic given the config.
pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let proj = Projection::default();
    let lexicon = PluralLexicon::french();
    let (oe, on) = proj.project(cfg.origin_lat, cfg.origin_lon)?;
    let rc = cfg.region_cell_m;
    let terr = Territory {
        origin: ((oe / rc as f64).floor() as i64 * rc, (on / rc as f64).floor() as i64 * rc),
        extent: cfg.patches_per_side as i64 * cfg.patch_spacing_m,
    };
    let corner = proj.unproject((terr.origin.0 + terr.extent) as f64, (terr.origin.1 + terr.extent) as f64);
    proj.project(corner.0, corner.1)?;

    // census patches
    let side = cfg.patches_per_side;
    let mut rng = rng_for(cfg.seed, Stream::SynthPatch, 0);
    let inc_dist = LogNormal::new(cfg.income_mu, cfg.income_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let pop_dist = LogNormal::new(cfg.patch_population_median.ln(), 0.5).map_err(|e| Error::Config(e.to_string()))?;
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut incomes: Vec<f64> = (0..side * side).map(|_| inc_dist.sample(&mut rng)).collect();
    winsorize(&mut incomes, cfg.winsorize);
    let inc_mean = incomes.iter().sum::<f64>() / incomes.len() as f64;
    let inc_sd = (incomes.iter().map(|x| (x - inc_mean).powi(2)).sum::<f64>() / incomes.len() as f64).sqrt().max(1e-9);
    let mut city_rng = rng_for(cfg.seed, Stream::SynthPatch, 4);
    let cities: Vec<(f64, f64)> = (0..cfg.n_cities)
        .map(|_| {
            (
                terr.origin.0 as f64 + city_rng.random_range(0.0..terr.extent as f64),
                terr.origin.1 as f64 + city_rng.random_range(0.0..terr.extent as f64),
            )
        })
        .collect();
    let mut patches = Vec::with_capacity(side * side);
    for iy in 0..side {
        for ix in 0..side {
            let i = iy * side + ix;
            let (ce, cn) = terr.patch_center(cfg, ix, iy);
            let urban: f64 = cities
                .iter()
                .map(|c| (-((c.0 - ce as f64).powi(2) + (c.1 - cn as f64).powi(2)) / (2.0 * cfg.city_radius_m.powi(2))).exp())
                .sum::<f64>()
                .min(1.0);
            let n = (pop_dist.sample(&mut rng) * (1.0 + cfg.city_boost * urban)).round().max(1.0);
            let own = sigmoid(0.8 * (incomes[i] - inc_mean) / inc_sd - 2.0 * urban + 0.5 * unit.sample(&mut rng));
            patches.push(Patch {
                patch_id: PatchId((i + 1).to_string()),
                cell: GridCell::new(ce - PATCH_CELL_M / 2, cn - PATCH_CELL_M / 2, PATCH_CELL_M)?,
                s_hh: (incomes[i] * n).round(),
                n_hh: n,
                n_own: (own * n).round(),
                n,
            });
        }
    }
    let patch_income: Vec<f64> = patches.iter().map(|p| p.indicators().s_inc.expect("n_hh > 0")).collect();
    let pi_mean = patch_income.iter().sum::<f64>() / patch_income.len() as f64;
    let pi_sd = (patch_income.iter().map(|x| (x - pi_mean).powi(2)).sum::<f64>() / patch_income.len() as f64)
        .sqrt()
        .max(1e-9);

    let n_comm = cfg.n_communities;
    let mut crng = rng_for(cfg.seed, Stream::SynthPatch, 1);
    let comm_offset: Vec<f64> = (0..n_comm).map(|_| cfg.community_sd * unit.sample(&mut crng)).collect();

    // users
    let weights = WeightedIndex::new(patches.iter().map(|p| p.n)).map_err(|e| Error::Config(e.to_string()))?;
    let mid = terr.origin.1 as f64 + terr.extent as f64 / 2.0;
    let north_sd = terr.extent as f64 / 12f64.sqrt();
    let width = format!("{}", cfg.n_users - 1).len();
    let drafts: Vec<UserDraft> = (0..cfg.n_users)
        .into_par_iter()
        .map(|i| {
            let mut r = rng_for(cfg.seed, Stream::SynthUser, i as u64);
            let pi = weights.sample(&mut r);
            let (ix, iy) = (pi % side, pi / side);
            let (ce, cn) = terr.patch_center(cfg, ix, iy);
            let geolocated = r.random_bool(cfg.geo_user_rate);
            let offgrid = geolocated && r.random_bool(cfg.offgrid_rate);
            let mut home = (ce as f64 + r.random_range(-300.0..300.0), cn as f64 + r.random_range(-300.0..300.0));
            if offgrid {
                let half = (cfg.patch_spacing_m / 2) as f64;
                home.0 += if ix + 1 < side { half } else { -half };
                home.1 += if iy + 1 < side { half } else { -half };
            }
            let community = r.random_range(0..n_comm);
            let z_income = (patch_income[pi] - pi_mean) / pi_sd;
            let z_north = (home.1 - mid) / north_sd;
            let shared = cfg.lat_gradient * z_north + comm_offset[community] + cfg.user_sd * unit.sample(&mut r);
            let pool = (cfg.vs_base + cfg.vs_slope * z_income + cfg.vs_latent_weight * shared).exp().round();
            UserDraft {
                truth: TrueUser {
                    id: format!("u{i:0width$}"),
                    patch_id: patches[pi].patch_id.0.clone(),
                    income: patch_income[pi],
                    z_income,
                    z_north,
                    community,
                    class: 0,
                    geolocated,
                    offgrid,
                    p_cn: sigmoid(cfg.cn_base + cfg.cn_slope * z_income + shared),
                    p_cp: sigmoid(cfg.cp_base + cfg.cp_slope * z_income + shared),
                    vocab_pool: (pool as usize).clamp(20, cfg.word_list_size),
                    day_prob: sigmoid(cfg.diurnal * z_income),
                    n_posts: r.random_range(cfg.posts_min..=cfg.posts_max),
                },
                home,
                offset: if r.random_bool(cfg.cet_rate) { 60 } else { 0 },
                shared,
            }
        })
        .collect();
    let mut drafts = drafts;

    let partition = partition_classes(drafts.iter().map(|d| (d.truth.id.as_str(), d.truth.income)), cfg.n_classes)?;
    for d in &mut drafts {
        d.truth.class = partition.class_of(&d.truth.id).expect("every user classed");
    }

    // mention network
    let n = cfg.n_users;
    let target = (cfg.mean_degree * n as f64 / 2.0).round() as usize;
    let a_class = 1.0 + cfg.alpha * (cfg.n_classes as f64 - 1.0);
    let a_comm = 1.0 + cfg.beta * (n_comm as f64 - 1.0);
    let a_max = a_class * a_comm;
    let mut nrng = rng_for(cfg.seed, Stream::SynthNetwork, 0);
    let mut seen: FxHashSet<u64> = FxHashSet::default();
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(target);
    let max_pairs = n * (n - 1) / 2;
    if target > max_pairs {
        return Err(Error::InfeasibleNetwork(format!("{target} edges among {n} users")));
    }
    let mut draws: u64 = 0;
    let budget = 10_000u64 * (target as u64 + 1) * a_max.ceil() as u64;
    while edges.len() < target {
        draws += 1;
        if draws > budget {
            return Err(Error::InfeasibleNetwork(format!("could not place {target} edges")));
        }
        let u = nrng.random_range(0..n);
        let v = nrng.random_range(0..n);
        if u == v {
            continue;
        }
        let (a, b) = (&drafts[u].truth, &drafts[v].truth);
        let mut w = 1.0;
        if a.class == b.class {
            w *= a_class;
        }
        if a.community == b.community {
            w *= a_comm;
        }
        if nrng.random::<f64>() * a_max >= w {
            continue;
        }
        let (lo, hi) = (u.min(v) as u64, u.max(v) as u64);
        if seen.insert((lo << 32) | hi) {
            edges.push((lo as u32, hi as u32));
        }
    }
    let n_noise = (cfg.noise_mentions_per_user * n as f64).round() as usize;
    let mut noise: FxHashSet<(u32, u32)> = FxHashSet::default();
    let mut noise_list = Vec::with_capacity(n_noise);
    let mut tries = 0;
    while noise_list.len() < n_noise && tries < 100 * (n_noise + 1) {
        tries += 1;
        let u = nrng.random_range(0..n) as u32;
        let v = nrng.random_range(0..n) as u32;
        let key = ((u.min(v) as u64) << 32) | u.max(v) as u64;
        if u == v || seen.contains(&key) || noise.contains(&(v, u)) || !noise.insert((u, v)) {
            continue;
        }
        noise_list.push((u, v));
    }
    let mut mentions: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &(u, v) in &edges {
        let times = nrng.random_range(1..=2);
        for _ in 0..times {
            mentions[u as usize].push(v);
        }
        let times = nrng.random_range(1..=2);
        for _ in 0..times {
            mentions[v as usize].push(u);
        }
    }
    for &(u, v) in &noise_list {
        mentions[u as usize].push(v);
    }

    // hotspots shared by many users
    let mut hrng = rng_for(cfg.seed, Stream::SynthPatch, 2);
    let hotspots: Vec<(f64, f64)> = (0..cfg.n_hotspots)
        .map(|_| {
            let (ce, cn) = terr.patch_center(cfg, hrng.random_range(0..side), hrng.random_range(0..side));
            let (lat, lon) = proj.unproject(ce as f64 + 37.0, cn as f64 + 53.0);
            ((lat * 1e4).round() / 1e4, (lon * 1e4).round() / 1e4)
        })
        .collect();

    let mut wrng = rng_for(cfg.seed, Stream::SynthPatch, 3);
    let words = word_list(cfg.word_list_size, &lexicon, &mut wrng);
    let pairs = lexicon.pairs();
    let dets = lexicon.determiners();
    let ids: Vec<&str> = drafts.iter().map(|d| d.truth.id.as_str()).collect();
    let text_kit = TextKit {
        words: &words,
        pairs: &pairs,
        dets: &dets,
    };

    let per_user: Vec<Vec<RawPost>> = drafts
        .par_iter()
        .enumerate()
        .map(|(i, d)| user_posts(cfg, &proj, &text_kit, d, &mentions[i], &ids, &hotspots, i))
        .collect();

    let mut shards: Vec<Vec<RawPost>> = vec![Vec::new(); cfg.shards];
    for (i, posts) in per_user.into_iter().enumerate() {
        shards[i % cfg.shards].extend(posts);
    }
    for s in &mut shards {
        s.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.post_id.cmp(&b.post_id)));
    }
    let mut jrng = rng_for(cfg.seed, Stream::SynthNoise, u64::MAX);
    let total: usize = shards.iter().map(Vec::len).sum();
    let n_junk = (cfg.malformed_rate * total as f64).round() as usize;
    let mut junk: Vec<(usize, usize, String)> = (0..n_junk)
        .map(|j| {
            let s = jrng.random_range(0..cfg.shards);
            let pos = jrng.random_range(0..=shards[s].len());
            let text = match j % 3 {
                0 => "{\"id\": \"broken".to_string(),
                1 => "not json at all".to_string(),
                _ => "{\"id\":\"x\",\"user\":7}".to_string(),
            };
            (s, pos, text)
        })
        .collect();
    junk.sort();

    // regions: departments on an 8 x 12 grid, 22 regions, 4 cantons each
    let cells = terr.extent / rc;
    let mut regions = Vec::with_capacity((cells * cells * 3) as usize);
    for cy in 0..cells {
        for cx in 0..cells {
            let (e, nn) = (terr.origin.0 + cx * rc, terr.origin.1 + cy * rc);
            let col = cx * 8 / cells;
            let row = cy * 12 / cells;
            let dept = row * 8 + col;
            let quarter = (cx * 16 / cells) % 2 + 2 * ((cy * 24 / cells) % 2);
            regions.push((e, nn, "region".to_string(), format!("R{:02}", dept * 22 / 96 + 1)));
            regions.push((e, nn, "department".to_string(), format!("{:02}", dept + 1)));
            regions.push((e, nn, "canton".to_string(), format!("{:02}-{}", dept + 1, quarter + 1)));
        }
    }
    let region_map = RegionMap::new(regions.clone(), Some(rc))?;
    let mut reference = ReferencePopulation::default();
    for level in ["region", "department", "canton"] {
        let mut pops: BTreeMap<String, f64> = region_map.units(level).into_iter().map(|u| (u.to_owned(), 0.0)).collect();
        for p in &patches {
            let (ce, cn) = p.cell.center();
            if let Some(u) = region_map.lookup(level, ce, cn) {
                *pops.get_mut(u).expect("unit listed") += p.n;
            }
        }
        reference.levels.insert(level.to_string(), pops);
    }

    let truth = GroundTruth {
        config: cfg.pairs().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        planted: PlantedSigns {
            cn_income: sign(cfg.cn_slope),
            cp_income: sign(cfg.cp_slope),
            vs_income: sign(cfg.vs_slope),
            latitude: sign(cfg.lat_gradient),
            diurnal_income: sign(cfg.diurnal),
            homophily: sign(cfg.alpha),
        },
        n_edges: edges.len(),
        n_noise_mentions: noise_list.len(),
        hotspots: hotspots.clone(),
        users: drafts.iter().map(|d| d.truth.clone()).collect(),
    };
    let edges = edges
        .iter()
        .map(|&(a, b)| (ids[a as usize].to_owned(), ids[b as usize].to_owned()))
        .collect();
    Ok(SynthData {
        config: cfg.clone(),
        projection: proj,
        shards,
        junk,
        patches,
        regions,
        reference,
        edges,
        truth,
    })
}

struct TextKit<'a> {
    words: &'a [String],
    pairs: &'a [(&'a str, &'a str)],
    dets: &'a [&'a str],
}

fn random_token(r: &mut Rng, len: usize) -> String {
    const ALNUM: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
    (0..len).map(|_| ALNUM[r.random_range(0..ALNUM.len())] as char).collect()
}

fn starts_with_vowel(w: &str) -> bool {
    w.starts_with(['a', 'e', 'i', 'o', 'u'])
}

#[allow(clippy::too_many_arguments)]
fn user_posts(
    cfg: &SynthConfig,
    proj: &Projection,
    kit: &TextKit,
    d: &UserDraft,
    mentions: &[u32],
    ids: &[&str],
    hotspots: &[(f64, f64)],
    index_: usize,
) -> Vec<RawPost> {
    let u = &d.truth;
    let mut r = rng_for(cfg.seed, Stream::SynthNoise, index_ as u64);
    let pool: Vec<&str> = index::sample(&mut r, kit.words.len(), u.vocab_pool)
        .into_iter()
        .map(|i| kit.words[i].as_str())
        .collect();
    let mut per_post: Vec<Vec<&str>> = vec![Vec::new(); u.n_posts];
    for &m in mentions {
        per_post[r.random_range(0..u.n_posts)].push(ids[m as usize]);
    }
    let day_n = Normal::new(cfg.day_hour, cfg.day_hour_sd).expect("finite day hour");
    let night_n = Normal::new(cfg.night_hour, cfg.night_hour_sd).expect("finite night hour");
    let home_cell = GridCell::containing(d.home.0, d.home.1, 100);
    let mut out = Vec::with_capacity(u.n_posts + u.n_posts / 10);
    for (j, post_mentions) in per_post.iter().enumerate() {
        let day = r.random_range(0..7 * cfg.weeks);
        let hour = if r.random_bool(u.day_prob) { day_n.sample(&mut r) } else { night_n.sample(&mut r) };
        let secs = (hour.rem_euclid(24.0) * 3_600.0) as i64;
        let local = SPAN_START + day * 86_400 + secs;
        let timestamp = local - i64::from(d.offset) * 60;

        let mut segments: Vec<String> = Vec::new();
        let n_fill = r.random_range(cfg.words_min..=cfg.words_max);
        let split = r.random_range(0..=n_fill);
        let fill: Vec<&str> = (0..n_fill).map(|_| *pool.choose(&mut r).expect("pool")).collect();
        if split > 0 {
            segments.push(fill[..split].join(" "));
        }
        if split < n_fill {
            segments.push(fill[split..].join(" "));
        }
        if r.random_bool(cfg.negation_rate) {
            let subj = SUBJECTS.choose(&mut r).expect("subjects");
            let verb = pool.choose(&mut r).expect("pool");
            let neg = NEGATORS.choose(&mut r).expect("negators");
            segments.push(if r.random_bool(u.p_cn) {
                if starts_with_vowel(verb) {
                    format!("{subj} n'{verb} {neg}")
                } else {
                    format!("{subj} ne {verb} {neg}")
                }
            } else {
                format!("{subj} {verb} {neg}")
            });
        }
        if r.random_bool(cfg.plural_rate) {
            let (sing, plur) = kit.pairs.choose(&mut r).expect("lexicon");
            let det = kit.dets.choose(&mut r).expect("determiners");
            segments.push(format!("{det} {}", if r.random_bool(u.p_cp) { plur } else { sing }));
        }
        segments.shuffle(&mut r);
        let mut text = String::new();
        for m in post_mentions {
            text.push('@');
            text.push_str(m);
            text.push(' ');
        }
        text.push_str(&segments.join(" "));
        if r.random_bool(cfg.capitalize_rate) {
            if let Some(pos) = text.find(|c: char| c.is_ascii_lowercase()) {
                if pos == 0 || text[..pos].ends_with(' ') {
                    let upper = text[pos..pos + 1].to_ascii_uppercase();
                    text.replace_range(pos..pos + 1, &upper);
                }
            }
        }
        if r.random_bool(cfg.hashtag_rate) {
            text.push_str(&format!(" #{}", pool.choose(&mut r).expect("pool")));
        }
        if r.random_bool(cfg.emoticon_rate) {
            text.push(' ');
            text.push_str(EMOTICONS.choose(&mut r).expect("emoticons"));
        }
        if r.random_bool(cfg.url_rate) {
            text.push_str(&format!(" https://t.co/{}", random_token(&mut r, 10)));
        }

        let coords = if u.geolocated && r.random_bool(cfg.geotag_rate) {
            if r.random_bool(cfg.hotspot_rate) && !hotspots.is_empty() {
                let (lat, lon) = *hotspots.choose(&mut r).expect("hotspots");
                Coords::new(lat, lon)
            } else if r.random_bool(cfg.home_share) {
                let e = home_cell.easting_m as f64 + r.random_range(5.0..95.0);
                let n = home_cell.northing_m as f64 + r.random_range(5.0..95.0);
                let (lat, lon) = proj.unproject(e, n);
                Coords::new(lat, lon)
            } else {
                let e = d.home.0 + r.random_range(-5_000.0..5_000.0);
                let n = d.home.1 + r.random_range(-5_000.0..5_000.0);
                let (lat, lon) = proj.unproject(e, n);
                Coords::new(lat, lon)
            }
        } else {
            None
        };
        let post_id = format!("{}-{j:04}", u.id);
        if r.random_bool(cfg.retweet_rate) {
            out.push(RawPost {
                post_id: format!("{post_id}-rt"),
                author_id: u.id.clone(),
                timestamp: timestamp + 1,
                utc_offset_minutes: d.offset,
                text: format!("RT @{}: {}", ids[r.random_range(0..ids.len())], fill.join(" ")),
                is_retweet: true,
                mentioned_ids: Vec::new(),
                coords: None,
            });
        }
        out.push(RawPost {
            post_id,
            author_id: u.id.clone(),
            timestamp,
            utc_offset_minutes: d.offset,
            text,
            is_retweet: false,
            mentioned_ids: post_mentions.iter().map(|m| m.to_string()).collect(),
            coords,
        });
    }
    let _ = d.shared;
    out
}

//! Command-line front end. Every subcommand writes its outputs plus a
//! JSON run manifest.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::corpus::{expand_inputs, preprocess_all, read_clean, read_corpus, write_clean};
use crate::error::{Error, Result};
use crate::geoloc::{
    infer_homes, locate_homes, read_homes, representativeness, write_homes, PatchIndex, Projection,
    ReferencePopulation, RegionMap, DEFAULT_MAX_PATCH_DISTANCE_M, DEFAULT_OVERUSE_THRESHOLD,
};
use crate::lingmark::{profile_corpus, read_profiles, write_profiles, MarkerExtractor, PluralLexicon};
use crate::pipeline::{self, Analysis, AnalysisConfig, Dataset, DEFAULT_CLASSES};
use crate::report;
use crate::ses::{read_patches, read_users_ses, write_users_ses};
use crate::socionet::{build_network, read_edges, write_edges, write_homophily};
use crate::synth::{generate, GroundTruth, SynthConfig};
use crate::table;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "sociolex", version, about = "Sociolinguistic markers joined with socioeconomic status, space, time and the mention network")]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "SOCIOLEX_THREADS")]
    pub threads: Option<usize>,
    /// More logging (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Manifest path; defaults next to the main output.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize raw NDJSON posts into clean posts.
    Ingest(IngestArgs),
    /// Per-user linguistic profiles.
    Markers(MarkersArgs),
    /// Home locations joined to census patches and regions.
    Geo(GeoArgs),
    /// Per-user SES indicators and income classes.
    Ses(SesArgs),
    /// Mutual mention network.
    Network(NetworkArgs),
    /// Class mixing ratios against a degree-preserving null.
    Homophily(HomophilyArgs),
    /// Statistical battery.
    Analyze(AnalyzeArgs),
    /// Synthetic world with planted effects.
    Synth(SynthArgs),
    /// Markdown summary of an analysis directory.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    /// Input files or glob patterns.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct MarkersArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// `singular,plural` CSV; the shipped French lexicon by default.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct GeoArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub patches: PathBuf,
    #[arg(long)]
    pub regions: Option<PathBuf>,
    /// Cell size of regions.csv; inferred from its coordinates when absent.
    #[arg(long)]
    pub region_cell_m: Option<i64>,
    /// Reference populations; enables the representativeness table.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Where the representativeness table goes; next to --out by default.
    #[arg(long)]
    pub representativeness: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_OVERUSE_THRESHOLD)]
    pub overuse_threshold: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_PATCH_DISTANCE_M)]
    pub max_distance: i64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SesArgs {
    #[arg(long)]
    pub patches: PathBuf,
    #[arg(long)]
    pub homes: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CLASSES)]
    pub classes: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct NetworkArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct HomophilyArgs {
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub users: PathBuf,
    #[arg(long, default_value_t = crate::socionet::DEFAULT_NULL_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = crate::socionet::DEFAULT_SWAPS_PER_EDGE)]
    pub swaps: usize,
    #[arg(long)]
    pub seed: u64,
    /// Ratio matrix CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Test statistics JSON; defaults to the CSV path with a .json extension.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    /// Comma-separated analyses, or `all`.
    #[arg(long, default_value = "all")]
    pub what: String,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub clean: Option<PathBuf>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    #[arg(long)]
    pub homes: Option<PathBuf>,
    #[arg(long)]
    pub users: Option<PathBuf>,
    #[arg(long)]
    pub edges: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    pub bins: usize,
    #[arg(long, default_value_t = crate::analysis::stats::DEFAULT_PERMUTATIONS)]
    pub permutations: usize,
    #[arg(long, default_value_t = crate::analysis::stats::DEFAULT_BOOTSTRAP)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = crate::socionet::DEFAULT_PAIR_SAMPLES)]
    pub pairs: usize,
    #[arg(long, default_value_t = crate::analysis::DEFAULT_BIN_WIDTH)]
    pub bin_width: f64,
    #[arg(long, default_value = "department")]
    pub level: String,
    #[arg(long)]
    pub outdir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Flat `key = value` file.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub outdir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Directory holding analysis and homophily outputs.
    #[arg(long)]
    pub dir: PathBuf,
    /// Ground truth of a synthetic run; adds planted-effect checks.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub threads: usize,
    pub parameters: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<PathBuf>,
    pub wall_time_s: f64,
}

pub fn digest(path: &Path) -> Result<InputDigest> {
    let f = File::open(path).map_err(|e| Error::read(path, e))?;
    let mut hasher = Sha256::new();
    let bytes = std::io::copy(&mut BufReader::new(f), &mut hasher).map_err(|e| Error::read(path, e))?;
    Ok(InputDigest {
        path: path.to_owned(),
        bytes,
        sha256: format!("{:x}", hasher.finalize()),
    })
}

/// What a subcommand touched, for the manifest.
struct Outcome {
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    manifest: PathBuf,
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str, what: &str) -> Result<&'a PathBuf> {
    p.as_ref()
        .ok_or_else(|| Error::Invalid(format!("{what} requires --{flag}")))
}

fn lexicon(path: &Option<PathBuf>) -> Result<PluralLexicon> {
    match path {
        Some(p) => PluralLexicon::from_path(p),
        None => Ok(PluralLexicon::french()),
    }
}

fn beside(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn ingest(a: &IngestArgs) -> Result<Outcome> {
    let files = expand_inputs(&a.input)?;
    let (raw, stats) = read_corpus(&files)?;
    let (clean, pre) = preprocess_all(&raw);
    write_clean(&a.out, &clean)?;
    log::info!(
        "{} files, {} records, {} malformed, {} retweets dropped, {} clean posts",
        stats.files,
        stats.records,
        stats.malformed,
        pre.retweets,
        pre.clean
    );
    Ok(Outcome {
        seed: None,
        inputs: files,
        outputs: vec![a.out.clone()],
        manifest: beside(&a.out, ".manifest.json"),
    })
}

fn markers(a: &MarkersArgs) -> Result<Outcome> {
    let lex = lexicon(&a.lexicon)?;
    let posts = read_clean(&a.input)?;
    let m = MarkerExtractor::new(lex).all_post_markers(&posts);
    write_profiles(&a.out, &profile_corpus(&posts, &m))?;
    let mut inputs = vec![a.input.clone()];
    inputs.extend(a.lexicon.clone());
    Ok(Outcome {
        seed: None,
        inputs,
        outputs: vec![a.out.clone()],
        manifest: beside(&a.out, ".manifest.json"),
    })
}

fn geo(a: &GeoArgs) -> Result<Outcome> {
    let posts = read_clean(&a.input)?;
    let patches = read_patches(&a.patches)?;
    let regions = a.regions.as_ref().map(|p| RegionMap::from_csv(p, a.region_cell_m)).transpose()?;
    let proj = Projection::default();
    let homes = infer_homes(&posts, &proj, a.overuse_threshold);
    let index = PatchIndex::new(patches.iter().map(|p| (p.patch_id.clone(), p.cell)), a.max_distance);
    let located = locate_homes(homes, &proj, &index, regions.as_ref());
    let levels: Vec<String> = regions
        .as_ref()
        .map(|r| r.levels().map(str::to_owned).collect())
        .unwrap_or_default();
    write_homes(&a.out, &located, &levels)?;
    let mut inputs = vec![a.input.clone(), a.patches.clone()];
    inputs.extend(a.regions.clone());
    let mut outputs = vec![a.out.clone()];
    if let Some(refp) = &a.reference {
        let regions = regions
            .as_ref()
            .ok_or_else(|| Error::Invalid("--reference requires --regions".into()))?;
        let reference = ReferencePopulation::from_csv(refp)?;
        let fits = representativeness(located.values().map(|h| &h.home), regions, &reference)?;
        let path = a
            .representativeness
            .clone()
            .unwrap_or_else(|| a.out.with_file_name("representativeness.csv"));
        let mut w = table::writer(&path)?;
        table::row(&mut w, &path, ["level", "n_units", "n_users", "unassigned", "R2"])?;
        for f in &fits {
            table::row(
                &mut w,
                &path,
                [
                    f.level.clone(),
                    f.n_units.to_string(),
                    f.n_users.to_string(),
                    f.unassigned.to_string(),
                    table::fmt_f64(f.r2),
                ],
            )?;
        }
        table::finish(w, &path)?;
        inputs.push(refp.clone());
        outputs.push(path);
    }
    Ok(Outcome {
        seed: None,
        inputs,
        outputs,
        manifest: beside(&a.out, ".manifest.json"),
    })
}

fn ses(a: &SesArgs) -> Result<Outcome> {
    let patches = read_patches(&a.patches)?;
    let homes = read_homes(&a.homes)?;
    let users = pipeline::classify_users(&homes, &patches, a.classes)?;
    write_users_ses(&a.out, &users)?;
    Ok(Outcome {
        seed: None,
        inputs: vec![a.patches.clone(), a.homes.clone()],
        outputs: vec![a.out.clone()],
        manifest: beside(&a.out, ".manifest.json"),
    })
}

fn network(a: &NetworkArgs) -> Result<Outcome> {
    let posts = read_clean(&a.input)?;
    let g = build_network(posts.iter().map(|p| (p.author_id.as_str(), p.mentioned_ids.iter())));
    log::info!("{} nodes, {} mutual edges", g.n_nodes(), g.n_edges());
    write_edges(&a.out, &g)?;
    Ok(Outcome {
        seed: None,
        inputs: vec![a.input.clone()],
        outputs: vec![a.out.clone()],
        manifest: beside(&a.out, ".manifest.json"),
    })
}

fn homophily(a: &HomophilyArgs) -> Result<Outcome> {
    let users = read_users_ses(&a.users)?;
    let graph = read_edges(&a.edges, users.keys().map(String::as_str))?;
    let partition = crate::ses::partition_from_users(&users)?;
    let h = pipeline::homophily(&graph, &partition, a.samples, a.swaps, a.seed)?;
    write_homophily(&a.out, &h.matrix)?;
    let stats = a.stats.clone().unwrap_or_else(|| a.out.with_extension("json"));
    pipeline::write_homophily_stats(&stats, &h, graph.n_edges())?;
    Ok(Outcome {
        seed: Some(a.seed),
        inputs: vec![a.edges.clone(), a.users.clone()],
        outputs: vec![a.out.clone(), stats],
        manifest: beside(&a.out, ".manifest.json"),
    })
}

fn parse_what(s: &str) -> Result<Vec<Analysis>> {
    if s == "all" {
        return Ok(Analysis::ALL.to_vec());
    }
    s.split(',').map(|w| w.trim().parse()).collect()
}

fn analyze(a: &AnalyzeArgs) -> Result<Outcome> {
    let what = parse_what(&a.what)?;
    let mut ds = Dataset::default();
    let mut inputs = Vec::new();
    let any = |f: fn(Analysis) -> bool| what.iter().any(|&w| f(w));
    let label = a.what.as_str();
    if any(Analysis::needs_posts) {
        let p = need(&a.clean, "clean", label)?;
        ds.posts = read_clean(p)?;
        ds.markers = MarkerExtractor::new(lexicon(&a.lexicon)?).all_post_markers(&ds.posts);
        inputs.push(p.clone());
        inputs.extend(a.lexicon.clone());
    }
    if any(Analysis::needs_profiles) {
        let p = need(&a.profiles, "profiles", label)?;
        ds.profiles = read_profiles(p)?.into_iter().map(|(u, (_, prof))| (u, prof)).collect();
        inputs.push(p.clone());
    }
    if any(Analysis::needs_homes) {
        let p = need(&a.homes, "homes", label)?;
        ds.homes = read_homes(p)?;
        inputs.push(p.clone());
    }
    if any(Analysis::needs_users) || any(Analysis::needs_graph) {
        let p = need(&a.users, "users", label)?;
        ds.users = read_users_ses(p)?;
        inputs.push(p.clone());
    }
    if any(Analysis::needs_graph) {
        let p = need(&a.edges, "edges", label)?;
        let nodes = ds.profiles.keys().chain(ds.users.keys()).map(String::as_str);
        ds.graph = Some(read_edges(p, nodes)?);
        inputs.push(p.clone());
    }
    let cfg = AnalysisConfig {
        seed: a.seed,
        n_bins: a.bins,
        n_perm: a.permutations,
        n_boot: a.bootstrap,
        pair_samples: a.pairs,
        bin_width: a.bin_width,
        level: a.level.clone(),
        ..AnalysisConfig::new(a.seed)
    };
    let outputs = pipeline::run_analyses(&ds, &what, &cfg, &a.outdir)?;
    Ok(Outcome {
        seed: Some(a.seed),
        inputs,
        outputs,
        manifest: a.outdir.join(format!("analyze_{}.manifest.json", a.what.replace(',', "-"))),
    })
}

fn synth(a: &SynthArgs) -> Result<Outcome> {
    let mut cfg = SynthConfig::from_path(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let data = generate(&cfg)?;
    let files = data.write_to(&a.outdir)?;
    let mut outputs = files.corpus.clone();
    outputs.extend([files.patches, files.regions, files.reference, files.truth, files.config]);
    Ok(Outcome {
        seed: Some(cfg.seed),
        inputs: vec![a.config.clone()],
        outputs,
        manifest: a.outdir.join("synth.manifest.json"),
    })
}

fn report_cmd(a: &ReportArgs) -> Result<Outcome> {
    let truth: Option<GroundTruth> = a
        .truth
        .as_ref()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::read(p, e))?;
            serde_json::from_str(&text).map_err(|e| Error::json(p.display().to_string(), e))
        })
        .transpose()?;
    let (md, checks) = report::render(&a.dir, truth.as_ref().map(|t| &t.planted))?;
    let mut f = table::create(&a.out)?;
    std::io::Write::write_all(&mut f, md.as_bytes()).map_err(|e| Error::write(&a.out, e))?;
    if !checks.is_empty() {
        let failed = checks.iter().filter(|c| !c.pass).count();
        log::info!("{} of {} planted-effect checks pass", checks.len() - failed, checks.len());
    }
    let mut inputs: Vec<PathBuf> = std::fs::read_dir(&a.dir)
        .map_err(|e| Error::read(&a.dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    inputs.sort();
    inputs.extend(a.truth.clone());
    Ok(Outcome {
        seed: None,
        inputs,
        outputs: vec![a.out.clone()],
        manifest: beside(&a.out, ".manifest.json"),
    })
}

fn dispatch(cmd: &Command) -> Result<(&'static str, serde_json::Value, Outcome)> {
    let params = |v: &dyn erased::Ser| v.value();
    Ok(match cmd {
        Command::Ingest(a) => ("ingest", params(a), ingest(a)?),
        Command::Markers(a) => ("markers", params(a), markers(a)?),
        Command::Geo(a) => ("geo", params(a), geo(a)?),
        Command::Ses(a) => ("ses", params(a), ses(a)?),
        Command::Network(a) => ("network", params(a), network(a)?),
        Command::Homophily(a) => ("homophily", params(a), homophily(a)?),
        Command::Analyze(a) => ("analyze", params(a), analyze(a)?),
        Command::Synth(a) => ("synth", params(a), synth(a)?),
        Command::Report(a) => ("report", params(a), report_cmd(a)?),
    })
}

mod erased {
    pub trait Ser {
        fn value(&self) -> serde_json::Value;
    }

    impl<T: serde::Serialize> Ser for T {
        fn value(&self) -> serde_json::Value {
            serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let start = Instant::now();
    let threads = rayon::current_num_threads();
    let (name, parameters, outcome) = dispatch(&cli.command)?;
    let inputs = outcome.inputs.iter().map(|p| digest(p)).collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        subcommand: name,
        version: env!("CARGO_PKG_VERSION"),
        seed: outcome.seed,
        threads,
        parameters,
        inputs,
        outputs: outcome.outputs,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let path = cli.manifest.clone().unwrap_or(outcome.manifest);
    pipeline::write_json(&path, &manifest)
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    let result = match cli.threads {
        Some(0) => Err(Error::Invalid("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Invalid(format!("cannot start {n} threads: {e}")))
            .and_then(|pool| pool.install(|| execute(&cli))),
        None => execute(&cli),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["sociolex", "ingest", "--bogus"]), EXIT_USAGE);
        assert_eq!(run(["sociolex", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["sociolex", "--help"]), EXIT_OK);
    }

    #[test]
    fn what_lists() {
        assert_eq!(parse_what("all").unwrap().len(), 8);
        assert_eq!(parse_what("fig2, table2").unwrap(), vec![Analysis::Fig2, Analysis::Table2]);
        assert!(parse_what("fig2,nope").is_err());
    }

    #[test]
    fn digests_are_content_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        std::fs::write(&p, "abc").unwrap();
        let d = digest(&p).unwrap();
        assert_eq!(d.sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert_eq!(d.bytes, 3);
    }
}

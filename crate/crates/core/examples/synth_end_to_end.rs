//! Generates the default synthetic world, runs the whole pipeline in memory
//! and prints the planted-effect checks.
//!
//! cargo run --release --example synth_end_to_end -- [seed] [n_users] [null]

use std::time::Instant;

use sociolex::geoloc::representativeness;
use sociolex::lingmark::PluralLexicon;
use sociolex::pipeline::{self, Analysis, AnalysisConfig, BuildConfig, Dataset};
use sociolex::report::{planted_checks, HOMOPHILY_CSV, HOMOPHILY_JSON};
use sociolex::socionet::write_homophily;
use sociolex::synth::{generate, SynthConfig};

fn main() -> sociolex::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map_or(7, |s| s.parse().expect("seed"));
    let n_users = args.next().map(|n| n.parse().expect("n_users"));
    let mut cfg = match args.next().as_deref() {
        Some("null") => SynthConfig::null(seed),
        _ => SynthConfig::new(seed),
    };
    if let Some(n) = n_users {
        cfg.n_users = n;
    }
    let t0 = Instant::now();
    let data = generate(&cfg)?;
    println!("generated {} posts in {:.1?}", data.posts().count(), t0.elapsed());

    let regions = data.region_map()?;
    let ds = Dataset::build(&data.all_posts(), &data.patches, Some(&regions), PluralLexicon::french(), &BuildConfig::default())?;
    println!(
        "{} users profiled, {} located, {} with SES, {} mutual edges ({:.1?})",
        ds.profiles.len(),
        ds.homes.len(),
        ds.users.len(),
        ds.graph()?.n_edges(),
        t0.elapsed()
    );
    for fit in representativeness(ds.homes.values().map(|h| &h.home), &regions, &data.reference)? {
        println!("representativeness {}: R2 {:.3} over {} units", fit.level, fit.r2, fit.n_units);
    }

    let acfg = AnalysisConfig::new(seed);
    let dir = tempfile_dir();
    pipeline::run_analyses(&ds, &Analysis::ALL, &acfg, &dir)?;
    let h = pipeline::homophily(ds.graph()?, &ds.partition()?, acfg.null_samples, acfg.swaps_per_edge, seed)?;
    write_homophily(&dir.join(HOMOPHILY_CSV), &h.matrix)?;
    pipeline::write_homophily_stats(&dir.join(HOMOPHILY_JSON), &h, ds.graph()?.n_edges())?;
    println!("analyses done in {:.1?}, outputs in {}", t0.elapsed(), dir.display());

    for c in planted_checks(&dir, &data.truth.planted) {
        println!("{} {}: {} (expected {})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.observed, c.expected);
    }
    Ok(())
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("sociolex-e2e-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    dir
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and a summary.
//! Failures make the process exit non-zero only when
//! `SOCIOLEX_ACCEPTANCE_STRICT` is set, so the rest of the test run proceeds.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::Rng as _;
use sociolex::corpus::{hour_of_week, preprocess, CleanPost, RawPost};
use sociolex::lingmark::{detect_negation, profile_corpus, Marker, MarkerCounts, MarkerExtractor, Variant};
use sociolex::pipeline::{self, Analysis, AnalysisConfig, BuildConfig, Dataset};
use sociolex::report::{planted_checks, HOMOPHILY_CSV, HOMOPHILY_JSON};
use sociolex::rng::{rng_for, Stream};
use sociolex::ses::{compute_indicators, partition_classes};
use sociolex::socionet::{configuration_null, homophily_matrix, rewire, write_homophily, MentionGraph};
use sociolex::synth::{generate, GroundTruth, SynthConfig};
use sociolex::analysis::temporal::temporal_profile;
use sociolex::lingmark::PluralLexicon;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn raw(id: &str, user: &str, ts: i64, text: &str) -> RawPost {
    RawPost {
        post_id: id.into(),
        author_id: user.into(),
        timestamp: ts,
        utc_offset_minutes: 0,
        text: text.into(),
        is_retweet: false,
        mentioned_ids: Vec::new(),
        coords: None,
    }
}

fn formulas() -> Outcome {
    let t = Instant::now();
    let s = compute_indicators(60_000.0, 3.0, 0.0, 400.0);
    ensure(s.s_inc == Some(20_000.0), || format!("S_inc {:?}", s.s_inc))?;
    ensure(s.s_own == Some(0.0), || format!("S_own {:?}", s.s_own))?;
    ensure(s.s_den == 0.01, || format!("S_den {}", s.s_den))?;

    let c = MarkerCounts { n_cn: 3, n_incn: 1, n_cp: 1, n_incp: 3, ..Default::default() };
    ensure(c.profile().l_cn == Some(0.75), || "L_cn".into())?;
    ensure(c.profile().l_cp == Some(0.25), || "L_cp".into())?;
    ensure(MarkerCounts::default().profile().l_cn.is_none(), || "L_cn without particles".into())?;

    let posts: Vec<CleanPost> = [raw("1", "u", 0, "a b"), raw("2", "u", 60, "b c")]
        .iter()
        .filter_map(preprocess)
        .collect();
    let ex = MarkerExtractor::default();
    let prof = profile_corpus(&posts, &ex.all_post_markers(&posts));
    let (counts, p) = &prof["u"];
    ensure(counts.n_unique_words == 3 && p.l_vs == Some(1.5), || format!("L_vs {:?}", p.l_vs))?;

    // one standard and one nonstandard negation in every hour of the week
    let week: Vec<CleanPost> = (0..168i64)
        .flat_map(|h| {
            let ts = 4 * 86_400 + h * 3600;
            [raw(&format!("s{h}"), "a", ts, "je ne fume pas"), raw(&format!("n{h}"), "b", ts, "je fume pas")]
        })
        .filter_map(|r| preprocess(&r))
        .collect();
    ensure(week.iter().all(|p| p.local_hour_of_week == hour_of_week(p.timestamp, 0)), || "hour fold".into())?;
    let incomes = BTreeMap::from([("a".to_string(), 1.0), ("b".to_string(), 3.0)]);
    let prof = temporal_profile(&week, &ex.all_post_markers(&week), Marker::Cn, "all", |_| true, &incomes)
        .map_err(|e| e.to_string())?;
    ensure(prof.values.iter().all(|v| *v == Some(0.5)), || "flat profile is not constant".into())?;
    ensure(prof.income_overlay.iter().all(|v| *v == Some(2.0)), || "flat overlay is not constant".into())?;
    within(t.elapsed(), Duration::from_secs(1))?;
    Ok(format!("{:.0?}", t.elapsed()))
}

const WORDS: [&str; 16] = [
    "je", "tu", "il", "fume", "mange", "aime", "sais", "veux", "le", "la", "chat", "demain", "vraiment", "ici", "bien", "toujours",
];
const PARTICLES: [&str; 11] = ["pas", "pa", "aps", "jamais", "ni", "personne", "rien", "ri1", "r1", "aucun", "aucune"];

fn has_ne(sentence: &str) -> bool {
    sentence.split(' ').any(|w| w == "ne" || w.starts_with("n'"))
}

fn detector() -> Outcome {
    let t = Instant::now();
    let cases = [
        ("je ne fume pas", Some(Variant::Standard)),
        ("je fume pas", Some(Variant::Nonstandard)),
        ("je fume", None),
    ];
    for (s, want) in cases {
        ensure(detect_negation(s) == want, || format!("{s:?} gave {:?}", detect_negation(s)))?;
    }
    let mut rng = rng_for(2024, Stream::Resample, 0);
    let mut with_ne = 0;
    for _ in 0..10_000 {
        let n = rng.random_range(1..12);
        let words: Vec<String> = (0..n)
            .map(|_| match rng.random_range(0..10) {
                0 => "ne".to_string(),
                1 => format!("n'{}", WORDS.choose(&mut rng).unwrap()),
                2 | 3 => PARTICLES.choose(&mut rng).unwrap().to_string(),
                _ => WORDS.choose(&mut rng).unwrap().to_string(),
            })
            .collect();
        let s = words.join(" ");
        if has_ne(&s) {
            with_ne += 1;
            ensure(detect_negation(&s) != Some(Variant::Nonstandard), || format!("nonstandard despite ne: {s:?}"))?;
        }
        let has_particle = words.iter().any(|w| PARTICLES.contains(&w.as_str()));
        ensure(detect_negation(&s).is_some() == has_particle, || format!("particle presence mismatch: {s:?}"))?;
    }
    within(t.elapsed(), Duration::from_secs(5))?;
    Ok(format!("{with_ne} of 10000 sentences carry ne, {:.0?}", t.elapsed()))
}

fn partition_balance() -> Outcome {
    let t = Instant::now();
    let mut rng = rng_for(77, Stream::Resample, 1);
    for trial in 0..1000 {
        let n = rng.random_range(9..400);
        let k = rng.random_range(2..=9usize);
        let heavy = rng.random_bool(0.2);
        let incomes: Vec<f64> = (0..n)
            .map(|_| {
                let x: f64 = rng.random_range(1.0..100.0);
                if heavy { x.powi(3) } else { x.round() }
            })
            .collect();
        let names: Vec<String> = (0..n).map(|i| format!("u{i:03}")).collect();
        let p = partition_classes(names.iter().map(String::as_str).zip(incomes.iter().copied()), k)
            .map_err(|e| format!("trial {trial}: {e}"))?;
        let max_x = incomes.iter().copied().fold(0.0, f64::max);
        let hi = p.class_income.iter().copied().fold(f64::MIN, f64::max);
        let lo = p.class_income.iter().copied().fold(f64::MAX, f64::min);
        ensure(hi - lo <= max_x * (1.0 + 1e-12), || format!("trial {trial}: spread {} > {max_x}", hi - lo))?;
        for (a, xa) in names.iter().zip(&incomes) {
            for (b, xb) in names.iter().zip(&incomes) {
                if xa < xb {
                    ensure(p.class_of(a) <= p.class_of(b), || format!("trial {trial}: not monotone"))?;
                }
            }
        }
    }
    within(t.elapsed(), Duration::from_secs(10))?;
    Ok(format!("{:.1?}", t.elapsed()))
}

fn random_graph(seed: u64, n: usize, m: usize) -> (Vec<String>, MentionGraph) {
    let mut rng = rng_for(seed, Stream::SynthNetwork, 0);
    let names: Vec<String> = (0..n).map(|i| format!("n{i:04}")).collect();
    let mut edges = BTreeSet::new();
    while edges.len() < m {
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
    (names, g)
}

fn null_model() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for g_seed in 0..50u64 {
        let (_, g) = random_graph(g_seed, 1000, 4000);
        let want = g.degrees();
        for s in 0..4 {
            let mut rng = rng_for(g_seed, Stream::NullGraph, s);
            let e = rewire(g.edge_indices(), 10, &mut rng);
            let mut deg = vec![0usize; g.n_nodes()];
            for &(a, b) in &e {
                deg[a as usize] += 1;
                deg[b as usize] += 1;
            }
            ensure(deg == want, || format!("graph {g_seed} sample {s}: degrees changed"))?;
            let distinct: BTreeSet<_> = e.iter().collect();
            ensure(distinct.len() == e.len() && e.iter().all(|(a, b)| a != b), || "not simple".into())?;
        }
        if g_seed < 5 {
            let mut rng = rng_for(g_seed, Stream::Resample, 2);
            let labels: Vec<u8> = (0..g.n_nodes()).map(|_| rng.random_range(1..=3u8)).collect();
            let null = configuration_null(&g, &labels, 3, 100, 10, g_seed).map_err(|e| e.to_string())?;
            let h = homophily_matrix(&g, &labels, &null).map_err(|e| e.to_string())?;
            for r in h.ratio.iter().flatten().flatten() {
                worst = worst.max((r - 1.0).abs());
                ensure((0.8..=1.2).contains(r), || format!("graph {g_seed}: ratio {r:.3}"))?;
            }
        }
    }
    within(t.elapsed(), Duration::from_secs(120))?;
    Ok(format!("max |ratio - 1| {worst:.3}, {:.1?}", t.elapsed()))
}

const BIN: &str = env!("CARGO_BIN_EXE_sociolex");

fn sociolex(dir: &Path, threads: usize, args: &[&str]) -> Result<(), String> {
    let out = Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .args(["--threads", &threads.to_string()])
        .env_remove("SOCIOLEX_THREADS")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{} failed: {}", args[0], String::from_utf8_lossy(&out.stderr).lines().last().unwrap_or(""))
    })
}

/// Runs the whole CLI chain from synth to report inside `dir`.
fn cli_pipeline(dir: &Path, seed: u64, threads: usize) -> Result<Duration, String> {
    let t = Instant::now();
    std::fs::write(dir.join("synth.conf"), format!("seed = {seed}\n")).map_err(|e| e.to_string())?;
    let seed = seed.to_string();
    let steps: [&[&str]; 9] = [
        &["synth", "--config", "synth.conf", "--outdir", "data"],
        &["ingest", "--input", "data/corpus_*.ndjson", "--out", "clean.ndjson"],
        &["markers", "--in", "clean.ndjson", "--out", "profiles.csv"],
        &[
            "geo", "--in", "clean.ndjson", "--patches", "data/patches.csv", "--regions", "data/regions.csv",
            "--reference", "data/reference.csv", "--representativeness", "out/representativeness.csv", "--out", "homes.csv",
        ],
        &["ses", "--patches", "data/patches.csv", "--homes", "homes.csv", "--classes", "9", "--out", "users_ses.csv"],
        &["network", "--in", "clean.ndjson", "--out", "edges.csv"],
        &["homophily", "--edges", "edges.csv", "--users", "users_ses.csv", "--seed", &seed, "--out", "out/homophily.csv"],
        &[
            "analyze", "--what", "all", "--seed", &seed, "--clean", "clean.ndjson", "--profiles", "profiles.csv",
            "--homes", "homes.csv", "--users", "users_ses.csv", "--edges", "edges.csv", "--outdir", "out",
        ],
        &["report", "--dir", "out", "--truth", "data/ground_truth.json", "--out", "out/report.md"],
    ];
    for step in steps {
        sociolex(dir, threads, step)?;
    }
    Ok(t.elapsed())
}

fn truth(path: &Path) -> Result<GroundTruth, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn end_to_end(dir: &Path) -> Outcome {
    let took = cli_pipeline(dir, 7, 4)?;
    let gt = truth(&dir.join("data/ground_truth.json"))?;
    let checks = planted_checks(&dir.join("out"), &gt.planted);
    let failed: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| format!("{} ({})", c.name, c.observed)).collect();
    ensure(checks.len() == 15, || format!("{} checks instead of 15", checks.len()))?;
    ensure(failed.is_empty(), || failed.join("; "))?;
    within(took, Duration::from_secs(300))?;
    Ok(format!("15 of 15 planted checks, {} users, {took:.0?}", gt.users.len()))
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for sub in [dir.to_path_buf(), dir.join("data"), dir.join("out")] {
        let Ok(entries) = std::fs::read_dir(&sub) else { continue };
        out.extend(
            entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv")),
        );
    }
    out.sort();
    out
}

fn determinism(first: &Path, second: &Path) -> Outcome {
    cli_pipeline(second, 7, 1)?;
    let a = csv_files(first);
    let rel = |p: &Path, root: &Path| p.strip_prefix(root).unwrap().to_path_buf();
    let names_a: Vec<PathBuf> = a.iter().map(|p| rel(p, first)).collect();
    let names_b: Vec<PathBuf> = csv_files(second).iter().map(|p| rel(p, second)).collect();
    ensure(names_a == names_b, || "different CSV sets".into())?;
    ensure(names_a.len() >= 15, || format!("only {} CSVs", names_a.len()))?;
    for name in &names_a {
        let x = std::fs::read(first.join(name)).map_err(|e| e.to_string())?;
        let y = std::fs::read(second.join(name)).map_err(|e| e.to_string())?;
        ensure(x == y, || format!("{} differs between 4 and 1 threads", name.display()))?;
    }
    Ok(format!("{} CSVs identical across 4 and 1 threads", names_a.len()))
}

fn null_repetition(seed: u64, dir: &Path) -> Result<(bool, String), String> {
    let cfg = SynthConfig::null(seed);
    let data = generate(&cfg).map_err(|e| e.to_string())?;
    let regions = data.region_map().map_err(|e| e.to_string())?;
    let ds = Dataset::build(&data.all_posts(), &data.patches, Some(&regions), PluralLexicon::french(), &BuildConfig::default())
        .map_err(|e| e.to_string())?;
    let acfg = AnalysisConfig::new(seed);
    pipeline::run_analyses(&ds, &[Analysis::Table2], &acfg, dir).map_err(|e| e.to_string())?;
    let graph = ds.graph().map_err(|e| e.to_string())?;
    let partition = ds.partition().map_err(|e| e.to_string())?;
    let h = pipeline::homophily(graph, &partition, acfg.null_samples, acfg.swaps_per_edge, seed).map_err(|e| e.to_string())?;
    write_homophily(&dir.join(HOMOPHILY_CSV), &h.matrix).map_err(|e| e.to_string())?;
    pipeline::write_homophily_stats(&dir.join(HOMOPHILY_JSON), &h, graph.n_edges()).map_err(|e| e.to_string())?;
    let checks = planted_checks(dir, &data.truth.planted);
    let failed: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| format!("{}: {}", c.name, c.observed)).collect();
    Ok((failed.is_empty(), failed.join("; ")))
}

fn null_honesty(root: &Path) -> Outcome {
    let t = Instant::now();
    let mut clean = 0;
    let mut notes = Vec::new();
    for seed in 1..=20u64 {
        let dir = root.join(format!("null{seed}"));
        let (ok, why) = null_repetition(seed, &dir)?;
        if ok {
            clean += 1;
        } else {
            notes.push(format!("seed {seed}: {why}"));
        }
    }
    for n in &notes {
        println!("    {n}");
    }
    let summary = format!("{clean} of 20 null worlds without spurious detection, {:.0?}", t.elapsed());
    ensure(clean >= 19, || summary.clone())?;
    Ok(summary)
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let (first, second) = (tmp.path().join("threads4"), tmp.path().join("threads1"));
    for d in [&first, &second] {
        std::fs::create_dir_all(d).expect("run dir");
    }
    let criteria: Vec<(&str, Box<dyn FnOnce() -> Outcome>)> = vec![
        ("1 formula suite", Box::new(formulas)),
        ("2 negation detector", Box::new(detector)),
        ("3 partition balance", Box::new(partition_balance)),
        ("4 null model", Box::new(null_model)),
        ("5 planted effects end to end", Box::new(|| end_to_end(&first))),
        ("6 thread-count determinism", Box::new(|| determinism(&first, &second))),
        ("7 null-effect honesty", Box::new(|| null_honesty(tmp.path()))),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failures += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("{} of 7 criteria pass", 7 - failures);
    if failures > 0 && std::env::var_os("SOCIOLEX_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}

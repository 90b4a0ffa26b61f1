//! Post ingestion, normalization and per-user timelines.
//!
//! Input is newline-delimited JSON, one post per line:
//!
//! ```text
//! {"id":"p1","user":"u1","ts":1420416000,"utc_offset":60,"text":"Je ne fume pas",
//!  "retweet":false,"mentions":["u2"],"lat":45.1,"lon":1.2}
//! ```
//!
//! `utc_offset`, `retweet` and `mentions` are optional; `lat`/`lon` come in
//! pairs or not at all. Malformed lines are counted and skipped.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use log::warn;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coords {
    pub lat: f64,
    pub lon: f64,
}

impl Coords {
    pub fn new(lat: f64, lon: f64) -> Option<Self> {
        let valid = lat.is_finite()
            && lon.is_finite()
            && (-90.0..=90.0).contains(&lat)
            && (-180.0..=180.0).contains(&lon);
        valid.then_some(Coords { lat, lon })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawPost {
    pub post_id: String,
    pub author_id: String,
    pub timestamp: i64,
    pub utc_offset_minutes: i32,
    pub text: String,
    pub is_retweet: bool,
    pub mentioned_ids: Vec<String>,
    pub coords: Option<Coords>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PostRecord {
    id: String,
    user: String,
    ts: i64,
    #[serde(default)]
    utc_offset: i32,
    text: String,
    #[serde(default)]
    retweet: bool,
    #[serde(default)]
    mentions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lon: Option<f64>,
}

fn coords_from(lat: Option<f64>, lon: Option<f64>) -> std::result::Result<Option<Coords>, String> {
    match (lat, lon) {
        (None, None) => Ok(None),
        (Some(lat), Some(lon)) => Coords::new(lat, lon)
            .map(Some)
            .ok_or_else(|| format!("coordinates out of range: ({lat}, {lon})")),
        _ => Err("lat and lon must be given together".into()),
    }
}

impl RawPost {
    pub fn from_json_line(line: &str) -> std::result::Result<Self, String> {
        let rec: PostRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let coords = coords_from(rec.lat, rec.lon)?;
        Ok(RawPost {
            post_id: rec.id,
            author_id: rec.user,
            timestamp: rec.ts,
            utc_offset_minutes: rec.utc_offset,
            text: rec.text,
            is_retweet: rec.retweet,
            mentioned_ids: rec.mentions,
            coords,
        })
    }

    pub fn to_json_line(&self) -> String {
        let rec = PostRecord {
            id: self.post_id.clone(),
            user: self.author_id.clone(),
            ts: self.timestamp,
            utc_offset: self.utc_offset_minutes,
            text: self.text.clone(),
            retweet: self.is_retweet,
            mentions: self.mentioned_ids.clone(),
            lat: self.coords.map(|c| c.lat),
            lon: self.coords.map(|c| c.lon),
        };
        serde_json::to_string(&rec).expect("post record serializes")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestStats {
    pub files: usize,
    pub records: usize,
    pub posts: usize,
    pub malformed: usize,
}

impl IngestStats {
    fn merge(&mut self, other: &IngestStats) {
        self.files += other.files;
        self.records += other.records;
        self.posts += other.posts;
        self.malformed += other.malformed;
    }
}

/// Streaming reader over one newline-delimited source.
pub struct PostReader<R> {
    lines: std::io::Lines<R>,
    label: String,
    line_no: usize,
    stats: IngestStats,
}

impl<R: BufRead> PostReader<R> {
    pub fn new(reader: R, label: impl Into<String>) -> Self {
        PostReader {
            lines: reader.lines(),
            label: label.into(),
            line_no: 0,
            stats: IngestStats::default(),
        }
    }

    pub fn stats(&self) -> IngestStats {
        self.stats
    }
}

impl<R: BufRead> Iterator for PostReader<R> {
    type Item = std::io::Result<RawPost>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e)),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            self.stats.records += 1;
            match RawPost::from_json_line(&line) {
                Ok(post) => {
                    self.stats.posts += 1;
                    return Some(Ok(post));
                }
                Err(msg) => {
                    self.stats.malformed += 1;
                    warn!("{}:{}: skipping malformed record: {}", self.label, self.line_no, msg);
                }
            }
        }
    }
}

/// Sequential stream over several files in order. An unreadable file is a
/// fatal error naming the path; malformed lines are skipped.
pub struct Ingest {
    pending: std::vec::IntoIter<PathBuf>,
    current: Option<(PathBuf, PostReader<BufReader<File>>)>,
    stats: IngestStats,
    failed: bool,
}

pub fn ingest(paths: &[PathBuf]) -> Ingest {
    Ingest {
        pending: paths.to_vec().into_iter(),
        current: None,
        stats: IngestStats::default(),
        failed: false,
    }
}

impl Ingest {
    pub fn stats(&self) -> IngestStats {
        let mut s = self.stats;
        if let Some((_, r)) = &self.current {
            s.merge(&r.stats());
        }
        s
    }
}

impl Iterator for Ingest {
    type Item = Result<RawPost>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            if let Some((path, reader)) = self.current.as_mut() {
                match reader.next() {
                    Some(Ok(post)) => return Some(Ok(post)),
                    Some(Err(e)) => {
                        self.failed = true;
                        return Some(Err(Error::read(path.clone(), e)));
                    }
                    None => {
                        let (_, done) = self.current.take().expect("current reader");
                        self.stats.merge(&done.stats());
                    }
                }
            }
            let path = self.pending.next()?;
            match File::open(&path) {
                Ok(f) => {
                    self.stats.files += 1;
                    let label = path.display().to_string();
                    self.current = Some((path, PostReader::new(BufReader::new(f), label)));
                }
                Err(e) => {
                    self.failed = true;
                    return Some(Err(Error::read(path, e)));
                }
            }
        }
    }
}

/// Reads every file (in parallel, one task per file) and concatenates the
/// posts in file order.
pub fn read_corpus(paths: &[PathBuf]) -> Result<(Vec<RawPost>, IngestStats)> {
    let per_file: Vec<Result<(Vec<RawPost>, IngestStats)>> = paths
        .par_iter()
        .map(|path| {
            let mut it = ingest(std::slice::from_ref(path));
            let posts = it.by_ref().collect::<Result<Vec<_>>>()?;
            Ok((posts, it.stats()))
        })
        .collect();
    let mut posts = Vec::new();
    let mut stats = IngestStats::default();
    for r in per_file {
        let (p, s) = r?;
        posts.extend(p);
        stats.merge(&s);
    }
    Ok((posts, stats))
}

/// Expands glob patterns into a sorted, de-duplicated path list. A pattern
/// without matches is kept verbatim so the subsequent open fails naming it.
pub fn expand_inputs(patterns: &[String]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for pat in patterns {
        let entries = glob::glob(pat).map_err(|e| Error::Pattern {
            pattern: pat.clone(),
            message: e.to_string(),
        })?;
        let mut matched: Vec<PathBuf> = entries.filter_map(|e| e.ok()).collect();
        if matched.is_empty() {
            matched.push(PathBuf::from(pat));
        }
        matched.sort();
        out.extend(matched);
    }
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanPost {
    pub post_id: String,
    pub author_id: String,
    pub timestamp: i64,
    pub utc_offset_minutes: i32,
    /// 0 = Monday 00:00-01:00 local time.
    pub local_hour_of_week: u16,
    pub text_marker: String,
    pub tokens: Vec<String>,
    pub mentioned_ids: Vec<String>,
    pub coords: Option<Coords>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CleanRecord {
    id: String,
    user: String,
    ts: i64,
    utc_offset: i32,
    text: String,
    #[serde(default)]
    mentions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lon: Option<f64>,
    tokens: Vec<String>,
    how: u16,
}

impl CleanPost {
    pub fn to_json_line(&self) -> String {
        let rec = CleanRecord {
            id: self.post_id.clone(),
            user: self.author_id.clone(),
            ts: self.timestamp,
            utc_offset: self.utc_offset_minutes,
            text: self.text_marker.clone(),
            mentions: self.mentioned_ids.clone(),
            lat: self.coords.map(|c| c.lat),
            lon: self.coords.map(|c| c.lon),
            tokens: self.tokens.clone(),
            how: self.local_hour_of_week,
        };
        serde_json::to_string(&rec).expect("clean record serializes")
    }

    pub fn from_json_line(line: &str) -> std::result::Result<Self, String> {
        let rec: CleanRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
        if rec.how >= HOURS_PER_WEEK {
            return Err(format!("hour of week {} out of range", rec.how));
        }
        Ok(CleanPost {
            post_id: rec.id,
            author_id: rec.user,
            timestamp: rec.ts,
            utc_offset_minutes: rec.utc_offset,
            text_marker: rec.text,
            tokens: rec.tokens,
            mentioned_ids: rec.mentions,
            coords: coords_from(rec.lat, rec.lon)?,
            local_hour_of_week: rec.how,
        })
    }
}

/// Reads a clean-post file written by [`write_clean`]. Malformed lines are
/// skipped with a warning, like raw ingestion.
pub fn read_clean(path: &Path) -> Result<Vec<CleanPost>> {
    let f = File::open(path).map_err(|e| Error::read(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::read(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match CleanPost::from_json_line(&line) {
            Ok(p) => out.push(p),
            Err(msg) => warn!("{}:{}: skipping malformed record: {}", path.display(), i + 1, msg),
        }
    }
    Ok(out)
}

pub fn write_clean<'a>(path: &Path, posts: impl IntoIterator<Item = &'a CleanPost>) -> Result<()> {
    let f = crate::table::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    for p in posts {
        writeln!(w, "{}", p.to_json_line()).map_err(|e| Error::write(path, e))?;
    }
    w.flush().map_err(|e| Error::write(path, e))
}

pub const HOURS_PER_WEEK: u16 = 168;

/// Hour of the week in local time, Monday 00:00 = 0.
pub fn hour_of_week(timestamp: i64, utc_offset_minutes: i32) -> u16 {
    let local = timestamp + i64::from(utc_offset_minutes) * 60;
    let days = local.div_euclid(86_400);
    let hour = local.rem_euclid(86_400) / 3_600;
    // 1970-01-01 was a Thursday.
    let weekday = (days + 3).rem_euclid(7);
    (weekday * 24 + hour) as u16
}

static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:https?://|www\.)\S*").expect("url regex"));
static MENTION_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\S*").expect("mention regex"));
static HASHTAG_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"#\S*").expect("hashtag regex"));
static EMOTICON_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(?::\)|:\(|;\)|:/|<3|:[dp]\b)").expect("emoticon regex")
});

/// Emoticons, Misc Symbols & Pictographs, Transport & Map, Dingbats, plus
/// the variation selector and zero-width joiner used inside emoji sequences.
pub fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x1F600..=0x1F64F | 0x1F300..=0x1F5FF | 0x1F680..=0x1F6FF | 0x2700..=0x27BF | 0xFE0F | 0x200D)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c as u32, 0x0300..=0x036F)
}

fn normalize_apostrophes(c: char) -> char {
    match c {
        '\u{2019}' | '\u{2018}' | '\u{02BC}' | '`' | '\u{00B4}' => '\'',
        '\u{2010}' | '\u{2011}' => '-',
        other => other,
    }
}

/// Downcased, punctuation-stripped tokens. Apostrophes and hyphens survive
/// only inside a token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mapped: String = text
        .chars()
        .map(normalize_apostrophes)
        .flat_map(char::to_lowercase)
        .map(|c| if is_word_char(c) || c == '\'' || c == '-' { c } else { ' ' })
        .collect();
    mapped
        .split_whitespace()
        .map(|t| t.trim_matches(|c| c == '\'' || c == '-'))
        .filter(|t| !t.is_empty() && *t != "xd")
        .map(str::to_owned)
        .collect()
}

/// Applies the stripping rules without the retweet filter or time fields.
/// Returns `(text_marker, tokens)`.
pub fn normalize_text(text: &str) -> (String, Vec<String>) {
    let s = URL_RE.replace_all(text, " ");
    let s = MENTION_RE.replace_all(&s, " ");
    let s = HASHTAG_RE.replace_all(&s, " ");
    let s = EMOTICON_RE.replace_all(&s, " ");
    let s: String = s.chars().map(|c| if is_emoji(c) { ' ' } else { c }).collect();
    let tokens = tokenize(&s);
    (tokens.join(" "), tokens)
}

/// Drops retweets and normalizes everything else.
pub fn preprocess(post: &RawPost) -> Option<CleanPost> {
    if post.is_retweet {
        return None;
    }
    let (text_marker, tokens) = normalize_text(&post.text);
    Some(CleanPost {
        post_id: post.post_id.clone(),
        author_id: post.author_id.clone(),
        timestamp: post.timestamp,
        utc_offset_minutes: post.utc_offset_minutes,
        local_hour_of_week: hour_of_week(post.timestamp, post.utc_offset_minutes),
        text_marker,
        tokens,
        mentioned_ids: post.mentioned_ids.clone(),
        coords: post.coords,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PreprocessStats {
    pub clean: usize,
    pub retweets: usize,
}

/// Parallel preprocessing that preserves input order.
pub fn preprocess_all(posts: &[RawPost]) -> (Vec<CleanPost>, PreprocessStats) {
    let cleaned: Vec<Option<CleanPost>> = posts.par_iter().map(preprocess).collect();
    let retweets = cleaned.iter().filter(|c| c.is_none()).count();
    let clean: Vec<CleanPost> = cleaned.into_iter().flatten().collect();
    let stats = PreprocessStats {
        clean: clean.len(),
        retweets,
    };
    (clean, stats)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserTimeline {
    pub author_id: String,
    pub posts: Vec<CleanPost>,
}

impl UserTimeline {
    pub fn n_tweets(&self) -> usize {
        self.posts.len()
    }
}

/// Groups posts per author, each timeline sorted by `(timestamp, post_id)`.
pub fn build_timelines(posts: impl IntoIterator<Item = CleanPost>) -> BTreeMap<String, UserTimeline> {
    let mut map: BTreeMap<String, UserTimeline> = BTreeMap::new();
    for p in posts {
        map.entry(p.author_id.clone())
            .or_insert_with(|| UserTimeline {
                author_id: p.author_id.clone(),
                posts: Vec::new(),
            })
            .posts
            .push(p);
    }
    for tl in map.values_mut() {
        tl.posts
            .sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.post_id.cmp(&b.post_id)));
    }
    map
}

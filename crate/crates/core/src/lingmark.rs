//! Linguistic marker detection and per-user linguistic variables.
//!
//! Three variables are tracked per user: the rate of standard (two-particle)
//! negation, the rate of standard plural agreement after a plural
//! determiner, and the number of distinct tokens per post.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;
use std::sync::LazyLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{CleanPost, UserTimeline};
use crate::error::{Error, Result};
use crate::table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    Standard,
    Nonstandard,
}

impl Variant {
    pub fn is_standard(self) -> bool {
        self == Variant::Standard
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Marker {
    /// standard negation rate
    Cn,
    /// standard plural rate
    Cp,
    /// distinct words per post
    Vs,
}

impl Marker {
    pub const ALL: [Marker; 3] = [Marker::Cn, Marker::Cp, Marker::Vs];

    pub fn name(self) -> &'static str {
        match self {
            Marker::Cn => "cn",
            Marker::Cp => "cp",
            Marker::Vs => "vs",
        }
    }

    /// Rate markers live in [0, 1]; the vocabulary marker is unbounded.
    pub fn is_rate(self) -> bool {
        !matches!(self, Marker::Vs)
    }
}

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Marker {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cn" => Ok(Marker::Cn),
            "cp" => Ok(Marker::Cp),
            "vs" => Ok(Marker::Vs),
            other => Err(Error::Invalid(format!("unknown marker {other:?}"))),
        }
    }
}

pub const NEGATION_PARTICLES: [&str; 11] = [
    "pas", "pa", "aps", "jamais", "ni", "personne", "rien", "ri1", "r1", "aucun", "aucune",
];

static PARTICLE_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\b(?:pas|pa|aps|jamais|ni|personne|rien|ri1|r1|aucun|aucune)\b").expect("particle regex")
});
static NE_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(?:ne|n')\b").expect("ne regex"));

/// Classifies a post's negation. The first particle match is the single
/// observation for the post; it is standard when a `ne`/`n'` token is
/// present anywhere, or, with `require_ne_before`, before that particle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NegationDetector {
    pub require_ne_before: bool,
}

impl NegationDetector {
    pub fn detect(&self, text_marker: &str) -> Option<Variant> {
        let particle = PARTICLE_RE.find(text_marker)?;
        let standard = if self.require_ne_before {
            NE_RE.find(&text_marker[..particle.start()]).is_some()
        } else {
            NE_RE.is_match(text_marker)
        };
        Some(if standard { Variant::Standard } else { Variant::Nonstandard })
    }
}

pub fn detect_negation(text_marker: &str) -> Option<Variant> {
    NegationDetector::default().detect(text_marker)
}

pub const PLURAL_DETERMINERS: [&str; 21] = [
    "les", "des", "ces", "ses", "mes", "tes", "nos", "vos", "leurs", "aux", "quelques", "plusieurs",
    "deux", "trois", "quatre", "cinq", "six", "sept", "huit", "neuf", "dix",
];

static FRENCH_LEXICON: &str = include_str!("../data/lexicon_fr.csv");

/// Singular/plural pairs for nouns and adjectives plus the plural
/// determiner set.
#[derive(Debug, Clone)]
pub struct PluralLexicon {
    entries: HashMap<String, String>,
    plurals: HashMap<String, String>,
    determiners: HashSet<String>,
}

impl PluralLexicon {
    pub fn new(
        pairs: impl IntoIterator<Item = (String, String)>,
        determiners: impl IntoIterator<Item = String>,
    ) -> Result<Self> {
        let mut entries = HashMap::new();
        let mut plurals = HashMap::new();
        for (singular, plural) in pairs {
            if singular.is_empty() || plural.is_empty() {
                return Err(Error::Lexicon("empty form".into()));
            }
            if singular == plural {
                return Err(Error::Lexicon(format!("entry maps {singular:?} to itself")));
            }
            if entries.contains_key(&singular) {
                continue;
            }
            plurals.insert(plural.clone(), singular.clone());
            entries.insert(singular, plural);
        }
        let determiners: HashSet<String> = determiners.into_iter().collect();
        if determiners.is_empty() {
            return Err(Error::Lexicon("determiner set is empty".into()));
        }
        Ok(PluralLexicon {
            entries,
            plurals,
            determiners,
        })
    }

    /// The bundled French lexicon with the default determiner set.
    pub fn french() -> Self {
        Self::from_csv_reader(FRENCH_LEXICON.as_bytes()).expect("bundled lexicon is valid")
    }

    /// Headerless `singular,plural` CSV, paired with the default determiners.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut pairs = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Lexicon(format!("line {}: {e}", i + 1)))?;
            if rec.len() != 2 {
                return Err(Error::Lexicon(format!("line {}: expected 2 fields", i + 1)));
            }
            pairs.push((rec[0].to_lowercase(), rec[1].to_lowercase()));
        }
        Self::new(pairs, PLURAL_DETERMINERS.iter().map(|s| s.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::read(path, e))?;
        Self::from_csv_reader(f)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn plural_of(&self, singular: &str) -> Option<&str> {
        self.entries.get(singular).map(String::as_str)
    }

    pub fn is_determiner(&self, word: &str) -> bool {
        self.determiners.contains(word)
    }

    /// Sorted pairs, for deterministic iteration.
    pub fn pairs(&self) -> Vec<(&str, &str)> {
        let mut v: Vec<_> = self.entries.iter().map(|(s, p)| (s.as_str(), p.as_str())).collect();
        v.sort_unstable();
        v
    }

    pub fn determiners(&self) -> Vec<&str> {
        let mut v: Vec<_> = self.determiners.iter().map(String::as_str).collect();
        v.sort_unstable();
        v
    }

    fn classify(&self, word: &str) -> Option<Variant> {
        if self.plurals.contains_key(word) {
            Some(Variant::Standard)
        } else if self.entries.contains_key(word) {
            Some(Variant::Nonstandard)
        } else {
            None
        }
    }
}

/// One observation per (plural determiner, lexicon word) bigram.
pub fn detect_plural<S: AsRef<str>>(tokens: &[S], lexicon: &PluralLexicon) -> Vec<Variant> {
    tokens
        .windows(2)
        .filter(|w| lexicon.is_determiner(w[0].as_ref()))
        .filter_map(|w| lexicon.classify(w[1].as_ref()))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostMarkers {
    pub negation: Option<Variant>,
    pub plurals: Vec<Variant>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerCounts {
    pub n_cn: u64,
    pub n_incn: u64,
    pub n_cp: u64,
    pub n_incp: u64,
    pub n_unique_words: u64,
    pub n_tweets: u64,
    pub n_tokens: u64,
}

impl MarkerCounts {
    fn add_post(&mut self, m: &PostMarkers, n_tokens: usize) {
        match m.negation {
            Some(Variant::Standard) => self.n_cn += 1,
            Some(Variant::Nonstandard) => self.n_incn += 1,
            None => {}
        }
        for v in &m.plurals {
            match v {
                Variant::Standard => self.n_cp += 1,
                Variant::Nonstandard => self.n_incp += 1,
            }
        }
        self.n_tweets += 1;
        self.n_tokens += n_tokens as u64;
    }

    pub fn profile(&self) -> LinguisticProfile {
        let rate = |a: u64, b: u64| (a + b > 0).then(|| a as f64 / (a + b) as f64);
        LinguisticProfile {
            l_cn: rate(self.n_cn, self.n_incn),
            l_cp: rate(self.n_cp, self.n_incp),
            l_vs: (self.n_tweets > 0).then(|| self.n_unique_words as f64 / self.n_tweets as f64),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LinguisticProfile {
    pub l_cn: Option<f64>,
    pub l_cp: Option<f64>,
    pub l_vs: Option<f64>,
}

impl LinguisticProfile {
    pub fn get(&self, marker: Marker) -> Option<f64> {
        match marker {
            Marker::Cn => self.l_cn,
            Marker::Cp => self.l_cp,
            Marker::Vs => self.l_vs,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MarkerExtractor {
    pub negation: NegationDetector,
    pub lexicon: PluralLexicon,
}

impl Default for MarkerExtractor {
    fn default() -> Self {
        MarkerExtractor {
            negation: NegationDetector::default(),
            lexicon: PluralLexicon::french(),
        }
    }
}

impl MarkerExtractor {
    pub fn new(lexicon: PluralLexicon) -> Self {
        MarkerExtractor {
            negation: NegationDetector::default(),
            lexicon,
        }
    }

    pub fn post_markers(&self, post: &CleanPost) -> PostMarkers {
        PostMarkers {
            negation: self.negation.detect(&post.text_marker),
            plurals: detect_plural(&post.tokens, &self.lexicon),
        }
    }

    /// Per-post markers in input order.
    pub fn all_post_markers(&self, posts: &[CleanPost]) -> Vec<PostMarkers> {
        posts.par_iter().map(|p| self.post_markers(p)).collect()
    }
}

pub fn profile_user(
    timeline: &UserTimeline,
    extractor: &MarkerExtractor,
) -> Result<(MarkerCounts, LinguisticProfile)> {
    if timeline.posts.is_empty() {
        return Err(Error::EmptyTimeline(timeline.author_id.clone()));
    }
    let mut counts = MarkerCounts::default();
    let mut vocab: HashSet<&str> = HashSet::new();
    for post in &timeline.posts {
        counts.add_post(&extractor.post_markers(post), post.tokens.len());
        vocab.extend(post.tokens.iter().map(String::as_str));
    }
    counts.n_unique_words = vocab.len() as u64;
    Ok((counts, counts.profile()))
}

/// Profiles every author of a flat post list without materializing
/// timelines. Equivalent to [`profile_user`] on each timeline.
pub fn profile_corpus(
    posts: &[CleanPost],
    markers: &[PostMarkers],
) -> BTreeMap<String, (MarkerCounts, LinguisticProfile)> {
    assert_eq!(posts.len(), markers.len(), "one marker record per post");
    let mut acc: HashMap<&str, (MarkerCounts, HashSet<&str>)> = HashMap::new();
    for (post, m) in posts.iter().zip(markers) {
        let (counts, vocab) = acc.entry(post.author_id.as_str()).or_default();
        counts.add_post(m, post.tokens.len());
        vocab.extend(post.tokens.iter().map(String::as_str));
    }
    acc.into_iter()
        .map(|(user, (mut counts, vocab))| {
            counts.n_unique_words = vocab.len() as u64;
            (user.to_owned(), (counts, counts.profile()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupAverage {
    pub mean: Option<f64>,
    /// members with the variable present
    pub n: usize,
}

/// Mean of one variable over the members that have it.
pub fn group_average<'a>(
    profiles: &BTreeMap<String, LinguisticProfile>,
    members: impl IntoIterator<Item = &'a str>,
    marker: Marker,
) -> GroupAverage {
    let mut sum = 0.0;
    let mut n = 0usize;
    for m in members {
        if let Some(v) = profiles.get(m).and_then(|p| p.get(marker)) {
            sum += v;
            n += 1;
        }
    }
    GroupAverage {
        mean: (n > 0).then(|| sum / n as f64),
        n,
    }
}

pub const PROFILE_HEADER: [&str; 10] =
    ["user", "n_cn", "n_incn", "L_cn", "n_cp", "n_incp", "L_cp", "N_vs", "N_tw", "L_vs"];

pub fn write_profiles(
    path: &Path,
    profiles: &BTreeMap<String, (MarkerCounts, LinguisticProfile)>,
) -> Result<()> {
    let mut w = table::writer(path)?;
    table::row(&mut w, path, PROFILE_HEADER)?;
    for (user, (c, p)) in profiles {
        table::row(
            &mut w,
            path,
            [
                user.clone(),
                c.n_cn.to_string(),
                c.n_incn.to_string(),
                table::fmt_opt(p.l_cn),
                c.n_cp.to_string(),
                c.n_incp.to_string(),
                table::fmt_opt(p.l_cp),
                c.n_unique_words.to_string(),
                c.n_tweets.to_string(),
                table::fmt_opt(p.l_vs),
            ],
        )?;
    }
    table::finish(w, path)
}

pub fn read_profiles(path: &Path) -> Result<BTreeMap<String, (MarkerCounts, LinguisticProfile)>> {
    let mut out = BTreeMap::new();
    for rec in table::records(path)? {
        let rec = rec?;
        let int = |i: usize| table::parse_u64(&rec, i, path);
        let counts = MarkerCounts {
            n_cn: int(1)?,
            n_incn: int(2)?,
            n_cp: int(4)?,
            n_incp: int(5)?,
            n_unique_words: int(7)?,
            n_tweets: int(8)?,
            n_tokens: 0,
        };
        out.insert(rec[0].to_string(), (counts, counts.profile()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{preprocess, RawPost};
    use proptest::prelude::*;

    fn lex() -> PluralLexicon {
        PluralLexicon::new(
            vec![("cheval".to_string(), "chevaux".to_string())],
            PLURAL_DETERMINERS.iter().map(|s| s.to_string()),
        )
        .unwrap()
    }

    fn post(id: &str, text: &str) -> CleanPost {
        preprocess(&RawPost {
            post_id: id.into(),
            author_id: "u".into(),
            timestamp: 0,
            utc_offset_minutes: 0,
            text: text.into(),
            is_retweet: false,
            mentioned_ids: vec![],
            coords: None,
        })
        .unwrap()
    }

    #[test]
    fn negation_examples() {
        assert_eq!(detect_negation("je ne fume pas"), Some(Variant::Standard));
        assert_eq!(detect_negation("je fume pas"), Some(Variant::Nonstandard));
        assert_eq!(detect_negation("je fume"), None);
        assert_eq!(detect_negation("je n'aime pas"), Some(Variant::Standard));
        assert_eq!(detect_negation("j'ai r1 compris"), Some(Variant::Nonstandard));
        // word boundaries: "pastis" and "nez" are not particles / ne
        assert_eq!(detect_negation("un pastis"), None);
        assert_eq!(detect_negation("le nez rien"), Some(Variant::Nonstandard));
    }

    #[test]
    fn strict_order_flag() {
        let strict = NegationDetector {
            require_ne_before: true,
        };
        assert_eq!(strict.detect("pas du tout ne"), Some(Variant::Nonstandard));
        assert_eq!(detect_negation("pas du tout ne"), Some(Variant::Standard));
        assert_eq!(strict.detect("il ne vient pas"), Some(Variant::Standard));
    }

    #[test]
    fn plural_examples() {
        let l = lex();
        assert_eq!(detect_plural(&["les", "chevaux"], &l), vec![Variant::Standard]);
        assert_eq!(detect_plural(&["les", "cheval"], &l), vec![Variant::Nonstandard]);
        assert!(detect_plural(&["le", "cheval"], &l).is_empty());
        assert!(detect_plural::<&str>(&[], &l).is_empty());
    }

    #[test]
    fn lexicon_validation() {
        let dets = || PLURAL_DETERMINERS.iter().map(|s| s.to_string());
        assert!(PluralLexicon::new(vec![("bus".into(), "bus".into())], dets()).is_err());
        assert!(PluralLexicon::new(vec![("a".into(), "as".into())], Vec::<String>::new()).is_err());
        assert!(PluralLexicon::from_csv_reader("chat,chats\nchien\n".as_bytes()).is_err());
    }

    #[test]
    fn bundled_lexicon() {
        let l = PluralLexicon::french();
        assert!(l.len() > 2_000);
        assert_eq!(l.plural_of("cheval"), Some("chevaux"));
        assert_eq!(l.plural_of("bijou"), Some("bijoux"));
        assert_eq!(l.plural_of("travail"), Some("travaux"));
        for (s, p) in l.pairs() {
            assert_ne!(s, p);
            assert!(!l.is_determiner(s) && !NEGATION_PARTICLES.contains(&s));
        }
        assert_eq!(l.determiners().len(), 21);
    }

    #[test]
    fn profile_rates() {
        let c = MarkerCounts {
            n_cn: 3,
            n_incn: 1,
            n_tweets: 2,
            n_unique_words: 3,
            ..Default::default()
        };
        let p = c.profile();
        assert_eq!(p.l_cn, Some(0.75));
        assert_eq!(p.l_cp, None);
        assert_eq!(p.l_vs, Some(1.5));
    }

    #[test]
    fn profile_user_vocabulary() {
        let tl = UserTimeline {
            author_id: "u".into(),
            posts: vec![post("1", "a b"), post("2", "b c")],
        };
        let (c, p) = profile_user(&tl, &MarkerExtractor::new(lex())).unwrap();
        assert_eq!(c.n_unique_words, 3);
        assert_eq!(p.l_vs, Some(1.5));
        assert_eq!(p.l_cn, None);
        let empty = UserTimeline {
            author_id: "v".into(),
            posts: vec![],
        };
        assert!(profile_user(&empty, &MarkerExtractor::new(lex())).is_err());
    }

    #[test]
    fn corpus_profile_matches_per_user() {
        let ex = MarkerExtractor::new(lex());
        let posts = vec![
            post("1", "je ne fume pas les chevaux"),
            post("2", "je fume pas, les cheval"),
            post("3", "rien"),
        ];
        let marks = ex.all_post_markers(&posts);
        let prof = profile_corpus(&posts, &marks);
        let tl = UserTimeline {
            author_id: "u".into(),
            posts: posts.clone(),
        };
        let (c, p) = profile_user(&tl, &ex).unwrap();
        assert_eq!(prof["u"].0.n_cn, c.n_cn);
        assert_eq!(prof["u"].0.n_unique_words, c.n_unique_words);
        assert_eq!(prof["u"].1, p);
        assert_eq!((c.n_cn, c.n_incn, c.n_cp, c.n_incp), (1, 2, 1, 1));
    }

    #[test]
    fn group_average_cases() {
        let mut profiles = BTreeMap::new();
        profiles.insert("a".to_string(), LinguisticProfile { l_cn: Some(0.5), ..Default::default() });
        profiles.insert("b".to_string(), LinguisticProfile { l_cn: Some(1.0), ..Default::default() });
        let g = group_average(&profiles, ["a", "b"], Marker::Cn);
        assert_eq!(g.mean, Some(0.75));
        assert_eq!(g.n, 2);
        assert_eq!(group_average(&profiles, ["a"], Marker::Cn).mean, Some(0.5));
        let none = group_average(&profiles, ["a", "b"], Marker::Cp);
        assert_eq!(none.mean, None);
        assert_eq!(none.n, 0);
    }

    proptest! {
        #[test]
        fn ne_prefix_never_nonstandard(s in "[a-z' ]{0,40}") {
            let text = format!("ne {s}");
            prop_assert_ne!(detect_negation(&text), Some(Variant::Nonstandard));
        }

        #[test]
        fn marker_counts_are_order_invariant(
            texts in proptest::collection::vec("(je |ne |pas |les |cheval |chevaux |rien |x ){1,8}", 1..12),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let ex = MarkerExtractor::new(lex());
            let posts: Vec<_> = texts.iter().enumerate().map(|(i, t)| post(&i.to_string(), t)).collect();
            let mut shuffled = posts.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = profile_user(&UserTimeline { author_id: "u".into(), posts }, &ex).unwrap();
            let b = profile_user(&UserTimeline { author_id: "u".into(), posts: shuffled }, &ex).unwrap();
            prop_assert_eq!(a.0, b.0);
            let max_tokens = texts.iter().map(|t| t.split_whitespace().count()).max().unwrap() as f64;
            prop_assert!(a.1.l_vs.unwrap() <= max_tokens);
            for r in [a.1.l_cn, a.1.l_cp].into_iter().flatten() {
                prop_assert!((0.0..=1.0).contains(&r));
            }
        }

        #[test]
        fn group_average_is_weighted_consistent(
            vals in proptest::collection::vec(proptest::option::of(0.0f64..1.0), 1..30),
            split in 0usize..30,
        ) {
            let profiles: BTreeMap<String, LinguisticProfile> = vals.iter().enumerate()
                .map(|(i, v)| (format!("u{i:03}"), LinguisticProfile { l_cn: *v, ..Default::default() }))
                .collect();
            let names: Vec<String> = profiles.keys().cloned().collect();
            let k = split.min(names.len());
            let (left, right) = names.split_at(k);
            let all = group_average(&profiles, names.iter().map(String::as_str), Marker::Cn);
            let l = group_average(&profiles, left.iter().map(String::as_str), Marker::Cn);
            let r = group_average(&profiles, right.iter().map(String::as_str), Marker::Cn);
            prop_assert_eq!(all.n, l.n + r.n);
            if let Some(m) = all.mean {
                let combined = (l.mean.unwrap_or(0.0) * l.n as f64 + r.mean.unwrap_or(0.0) * r.n as f64)
                    / all.n as f64;
                prop_assert!((combined - m).abs() < 1e-9);
            }
        }
    }
}

//! Negation and plural detection and the per-user marker profile.
//!
//! cargo run --example negation_markers

use sociolex::corpus::{preprocess, RawPost};
use sociolex::lingmark::{detect_negation, detect_plural, profile_corpus, MarkerExtractor, PluralLexicon};

fn main() {
    for s in ["je ne fume pas", "je fume pas", "je fume", "j'en sais rien", "il n'a jamais vu"] {
        println!("{s:<20} {:?}", detect_negation(s));
    }
    let lex = PluralLexicon::french();
    for s in ["les chevaux", "les cheval", "le cheval", "des maisons", "des maison"] {
        let tokens: Vec<&str> = s.split(' ').collect();
        println!("{s:<20} {:?}", detect_plural(&tokens, &lex));
    }

    let texts = ["Je ne sais pas", "je sais pas", "les chats dorment", "les chat mangent", "bonne nuit"];
    let raw: Vec<RawPost> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| RawPost {
            post_id: i.to_string(),
            author_id: "u1".into(),
            timestamp: 1_600_000_000 + 3600 * i as i64,
            utc_offset_minutes: 120,
            text: t.to_string(),
            is_retweet: false,
            mentioned_ids: Vec::new(),
            coords: None,
        })
        .collect();
    let posts: Vec<_> = raw.iter().filter_map(preprocess).collect();
    let markers = MarkerExtractor::default().all_post_markers(&posts);
    let (counts, profile) = &profile_corpus(&posts, &markers)["u1"];
    println!("{counts:?}");
    println!("L_cn {:?}  L_cp {:?}  L_vs {:?}", profile.l_cn, profile.l_cp, profile.l_vs);
}

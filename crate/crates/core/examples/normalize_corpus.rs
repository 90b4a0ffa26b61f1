//! Parses raw NDJSON posts and shows what normalization keeps.
//!
//! cargo run --example normalize_corpus

use std::io::Cursor;

use sociolex::corpus::{build_timelines, preprocess, PostReader};

const RAW: &str = r#"{"id":"1","user":"alice","ts":1609488000,"utc_offset":60,"text":"Je NE fume PAS http://x.co @bob #tabac","mentions":["bob"],"lat":48.85,"lon":2.35}
{"id":"2","user":"bob","ts":1609491600,"utc_offset":60,"text":"RT @alice je ne fume pas","retweet":true}
{"id":"3","user":"bob","ts":1609495200,"utc_offset":60,"text":"les chevaux :) sont là !!!","mentions":["alice"]}
{"id":"4","user":"alice","ts":1609
"#;

fn main() {
    let mut reader = PostReader::new(Cursor::new(RAW), "inline");
    let raw: Vec<_> = reader.by_ref().collect::<Result<_, _>>().expect("readable");
    let stats = reader.stats();
    println!("{} records, {} posts, {} malformed", stats.records, stats.posts, stats.malformed);
    let clean: Vec<_> = raw.iter().filter_map(preprocess).collect();
    for p in &clean {
        println!("{} {:>6} hour {:>3}: {:?} -> {:?}", p.post_id, p.author_id, p.local_hour_of_week, p.text_marker, p.tokens);
    }
    for (user, t) in build_timelines(clean) {
        println!("{user}: {} posts", t.n_tweets());
    }
}

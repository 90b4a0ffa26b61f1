//! Hour-of-week folding of negation standardness with the income overlay.
//!
//! cargo run --release --example temporal_profile

use std::collections::BTreeMap;

use rand::Rng;
use sociolex::analysis::temporal::temporal_profile;
use sociolex::corpus::{preprocess, RawPost};
use sociolex::lingmark::{Marker, MarkerExtractor};
use sociolex::rng::{rng_for, Stream};

fn main() {
    let mut rng = rng_for(11, Stream::Resample, 0);
    let mut raw = Vec::new();
    let mut incomes = BTreeMap::new();
    for u in 0..200 {
        let rich = u % 2 == 0;
        let user = format!("u{u:03}");
        incomes.insert(user.clone(), if rich { 40_000.0 } else { 15_000.0 });
        for i in 0..200 {
            // richer users post in the day, the others at night
            let hour = if rich { rng.random_range(8..18) } else { (rng.random_range(20..30)) % 24 };
            let day = rng.random_range(0..28);
            let standard = rng.random_bool(if rich { 0.8 } else { 0.4 });
            raw.push(RawPost {
                post_id: format!("{user}-{i}"),
                author_id: user.clone(),
                timestamp: 1_609_113_600 + day * 86_400 + hour * 3600,
                utc_offset_minutes: 0,
                text: if standard { "je ne sais pas" } else { "je sais pas" }.into(),
                is_retweet: false,
                mentioned_ids: Vec::new(),
                coords: None,
            });
        }
    }
    let posts: Vec<_> = raw.iter().filter_map(preprocess).collect();
    let markers = MarkerExtractor::default().all_post_markers(&posts);
    let prof = temporal_profile(&posts, &markers, Marker::Cn, "all", |_| true, &incomes).expect("profile");
    for h in (0..24).step_by(3) {
        println!(
            "Mon {h:02}:00  L_cn {:>5}  income {:>7}",
            prof.values[h].map_or("-".into(), |v| format!("{v:.2}")),
            prof.income_overlay[h].map_or("-".into(), |v| format!("{v:.0}"))
        );
    }
    let r = prof.overlay_correlation(2000, 1).expect("correlation");
    println!("{} defined hours, r {:.3}, p {:.4}", prof.defined_hours(), r.r, r.p);
}

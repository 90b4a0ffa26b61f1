//! Degree-preserving null model and the class mixing ratio matrix on a
//! planted two-class graph.
//!
//! cargo run --release --example homophily_null

use rand::Rng;
use sociolex::rng::{rng_for, Stream};
use sociolex::socionet::{chi_square_test, configuration_null, homophily_matrix, MentionGraph};

fn main() {
    let n = 400;
    let names: Vec<String> = (0..n).map(|i| format!("u{i:03}")).collect();
    let labels: Vec<u8> = (0..n).map(|i| if i < n / 2 { 1 } else { 2 }).collect();
    let mut rng = rng_for(5, Stream::SynthNetwork, 0);
    let mut edges = Vec::new();
    while edges.len() < 2000 {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        let keep = if labels[a] == labels[b] { 1.0 } else { 0.3 };
        if a != b && rng.random_bool(keep) {
            edges.push((names[a].as_str(), names[b].as_str()));
        }
    }
    let g = MentionGraph::from_edges(names.iter().map(String::as_str), edges);
    let null = configuration_null(&g, &labels, 2, 100, 10, 42).expect("null");
    let h = homophily_matrix(&g, &labels, &null).expect("matrix");
    for row in &h.ratio {
        println!("{:?}", row.iter().map(|r| r.map(|v| format!("{v:.2}"))).collect::<Vec<_>>());
    }
    let chi = chi_square_test(&h.observed, &null).expect("chi2");
    println!("{} edges, chi2 {:.1}, p {:.4}", g.n_edges(), chi.statistic, chi.p);
}

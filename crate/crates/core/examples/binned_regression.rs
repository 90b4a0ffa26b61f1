//! Binned regression of a noisy marker rate against income, with the
//! permutation p-value and bootstrap band.
//!
//! cargo run --release --example binned_regression

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use sociolex::analysis::binned::{binned_regression, BinnedConfig};
use sociolex::rng::{rng_for, Stream};

fn main() {
    let mut rng = rng_for(3, Stream::Resample, 0);
    let income = LogNormal::new(10.0, 0.35).unwrap();
    let x: Vec<f64> = (0..5000).map(|_| income.sample(&mut rng)).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|&v| (0.3 + 0.1 * (v / 22_000.0).ln() + rng.random_range(-0.15..0.15)).clamp(0.0, 1.0))
        .collect();
    for log_x in [false, true] {
        let cfg = BinnedConfig { log_x, n_perm: 2000, n_boot: 200, seed: 9, ..Default::default() };
        let fit = binned_regression(&x, &y, &cfg).expect("fit");
        let r = &fit.result;
        println!("log_x {log_x}: slope {:.3e}, R2 {:.3}, p {:.4}, {} bins", r.slope, r.r2, r.p, r.n_bins);
        if let (Some(a), Some(b)) = (fit.points.first(), fit.points.last()) {
            println!("  band {:.3}..{:.3} at low end, {:.3}..{:.3} at high end", a.ci_low, a.ci_high, b.ci_low, b.ci_high);
        }
    }
}

//! SES indicators of census patches and the equal-income class partition.
//!
//! cargo run --example ses_classes

use sociolex::ses::{compute_indicators, partition_classes, ses_cross_correlations};

fn main() {
    let s = compute_indicators(60_000.0, 3.0, 1.0, 400.0);
    println!("S_inc {:?}, S_own {:?}, S_den {} per m2", s.s_inc, s.s_own, s.s_den);

    let incomes = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 10.0];
    let names: Vec<String> = (1..=9).map(|i| format!("u{i}")).collect();
    let p = partition_classes(names.iter().map(String::as_str).zip(incomes), 2).expect("partition");
    println!("class sums {:?}", p.class_income);
    for n in &names {
        print!("{n}:{} ", p.class_of(n).unwrap());
    }
    println!();

    let rows: Vec<[f64; 3]> = (0..200)
        .map(|i| {
            let inc = 15_000.0 + 100.0 * i as f64;
            let own = 0.2 + 0.002 * i as f64 + 0.05 * ((i * 7919) % 13) as f64 / 13.0;
            [inc, own, ((i * 31) % 17) as f64 / 1000.0]
        })
        .collect();
    let m = ses_cross_correlations(&rows, 2000, 1).expect("correlations");
    for i in 0..3 {
        for j in i + 1..3 {
            let c = &m.cells[i][j];
            println!("{} ~ {}: r {:.3}, p {:.4}", m.names[i], m.names[j], c.r, c.p);
        }
    }
}

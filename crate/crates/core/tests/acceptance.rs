//! Acceptance suite: one PASS/FAIL line per check, nonzero exit on failure.
//! `cargo test --test acceptance -- 3 8` runs a subset.

use pointreg::acceptance::{run, Thresholds};

fn main() {
    let th = Thresholds::default();
    let ids: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ids = if ids.is_empty() { (1..=11).collect() } else { ids };
    let mut failures = 0;
    for id in ids {
        let c = run(id, &th);
        println!("{c}");
        if !c.passed {
            failures += 1;
        }
    }
    if failures > 0 {
        println!("{failures} acceptance check(s) failed");
        std::process::exit(1);
    }
}

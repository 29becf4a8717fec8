//! Reproduction suite: one PASS/FAIL line per acceptance criterion, with
//! the individual checks listed underneath.
//!
//! Failed criteria are reported but do not fail the test binary; set
//! `BAMGATE_ACCEPTANCE_STRICT=1` to turn any FAIL into a non-zero exit.

use std::time::Instant;

use bamgate::cli::verification_rows;
use bamgate::verify::{CheckRow, REFINE_BUDGET};

const CRITERIA: [(usize, &str, &str); 9] = [
    (1, "raw", "published coefficients, error <= 5e-3 in < 5 s"),
    (2, "refined", "refinement within +-5, error < 1e-4 in < 5 min"),
    (3, "doppler", "dual-pulse Doppler insensitivity"),
    (4, "ccz", "three-qubit phase gate"),
    (5, "oracle", "reduced branches vs product-space oracle"),
    (6, "relay", "relay exactness"),
    (7, "propagator", "propagator properties"),
    (8, "tranquility", "tranquil endpoints"),
    (9, "baseline", "two-body baseline from scratch"),
];

fn main() {
    // `cargo test -- --list` and filters from the default harness are not
    // meaningful here
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let strict = std::env::var("BAMGATE_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let start = Instant::now();
    let rows = verification_rows(&[], REFINE_BUDGET, 0, 100, |r: &CheckRow| println!("    {}", r.line()));
    println!();
    let mut failed = 0;
    for (n, group, what) in CRITERIA {
        let mine: Vec<&CheckRow> = rows.iter().filter(|r| r.group == group).collect();
        let ok = !mine.is_empty() && mine.iter().all(|r| r.passed);
        if !ok {
            failed += 1;
        }
        let bad: Vec<&str> = mine.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
        let detail = if bad.is_empty() { String::new() } else { format!(" [failing: {}]", bad.join("; ")) };
        println!("criterion {n}: {} {what}{detail}", if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} of 9 criteria pass ({:.0} s)", 9 - failed, start.elapsed().as_secs_f64());
    if strict && failed > 0 {
        std::process::exit(1);
    }
}

//! Runs every acceptance criterion in order and prints one line each.
//!
//! Criterion ids given as arguments restrict the run, e.g.
//! `cargo test -p ilw-core --test acceptance -- 3 8`.

use std::process::ExitCode;

use ilw_core::acceptance;

fn main() -> ExitCode {
    let ids: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, f) in acceptance::CRITERIA.iter().enumerate() {
        if !ids.is_empty() && !ids.contains(&(i as u8 + 1)) {
            continue;
        }
        let outcome = f();
        println!("{}", outcome.line());
        ran += 1;
        if !outcome.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

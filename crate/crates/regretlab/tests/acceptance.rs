//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use regretlab::report::{run_criterion, CRITERIA};
use regretlab::value_engine::EngineOptions;

fn main() {
    let opts = EngineOptions::default();
    let mut failed = Vec::new();
    for id in 1..=CRITERIA {
        let r = run_criterion(id, 0, &opts).expect("criterion id in range");
        println!("{r}");
        if !r.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {CRITERIA} criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}

//! Runs every acceptance criterion, printing one line each, and fails if any
//! criterion fails.

use std::process::ExitCode;

use l1_obstacle::acceptance::run_all;

fn main() -> ExitCode {
    let results = run_all(|r| println!("{r}"));
    let failed: Vec<_> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!(
        "acceptance: {} of {} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}

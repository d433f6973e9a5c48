//! Prints one line per acceptance criterion. Exits nonzero when a criterion
//! fails, except those listed as unattainable; set `ACCEPTANCE_STRICT=1` to
//! fail on those as well.

use std::process::ExitCode;

use stockframe_core::acceptance::{run, DEFAULT_SEED};

fn main() -> ExitCode {
    let strict = std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v != "0");
    let seed = std::env::var("ACCEPTANCE_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_SEED);
    let mut failed = 0;
    println!("acceptance suite, seed {seed}");
    for id in 1..=13 {
        let v = run(id, seed);
        println!("{}", v.line());
        if !v.passed && (strict || !v.waived()) {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

//! Runs every acceptance check and prints one line per check.
//!
//! `GMN_ACCEPTANCE_ONLY=golden,dephasing` restricts the run to the named
//! checks. The process exits with status 1 if any check fails.

use gmn_robustness_acceptance::{Config, Suite, CHECKS};

fn main() {
    let config = match Config::from_env() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("acceptance: {e}");
            std::process::exit(2);
        }
    };
    let only: Option<Vec<String>> = std::env::var("GMN_ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').map(|s| s.trim().to_string()).collect());
    println!(
        "acceptance: {} members per 3-qubit ensemble, {} per 4-qubit Haar ensemble, seed {}",
        config.ensemble_count, config.n4_haar_count, config.seed
    );
    let suite = Suite::new(config);
    let mut failed = 0;
    for (key, _, check) in CHECKS {
        if only
            .as_ref()
            .is_some_and(|keys| !keys.iter().any(|k| k == key))
        {
            continue;
        }
        let outcome = check(&suite);
        println!("{}", outcome.line());
        if !outcome.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} failed");
        std::process::exit(1);
    }
    println!("acceptance: all passed");
}

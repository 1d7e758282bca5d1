//! `verify`: Monte-Carlo sweep of every stability check, one JSON report
//! per theorem.

use std::path::Path;

use serde_json::json;

use srcgeo_lab::run_suite;

use crate::fmt::{sig9, sig9_round};

pub fn run(trials: usize, seed: u64, output_path: Option<&Path>) -> Result<(), String> {
    let reports = run_suite(trials, seed);
    let total_violations: usize = reports.iter().map(|r| r.violations).sum();

    let rendered: Vec<serde_json::Value> = reports
        .iter()
        .map(|r| {
            json!({
                "theorem": r.theorem,
                "trials": r.trials,
                "violations": r.violations,
                "min_slack": sig9_round(r.min_slack),
                "parameters": r.parameters,
            })
        })
        .collect();
    let text = serde_json::to_string_pretty(&rendered).map_err(|e| e.to_string())? + "\n";

    match output_path {
        Some(path) => std::fs::write(path, &text).map_err(|e| e.to_string())?,
        None => print!("{text}"),
    }

    for r in &reports {
        eprintln!(
            "{}: {} trials, {} violations, min slack {}",
            r.theorem,
            r.trials,
            r.violations,
            sig9(r.min_slack)
        );
    }
    if total_violations > 0 {
        return Err(format!("{total_violations} theorem violations"));
    }
    Ok(())
}

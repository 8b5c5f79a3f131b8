//! The `verify` subcommand: randomized suites with per-suite reporting.

use std::path::PathBuf;

use anyhow::anyhow;
use serde::Serialize;
use vulcan::verify::{Suite, SuiteReport};

use crate::commands::{CliError, CmdOutcome};
use crate::config::{resolve_out_dir, FileConfig};
use crate::records::{write_json, SCHEMA_VERSION};

#[derive(Debug, Serialize)]
struct VerifyReport {
    schema_version: u32,
    library_version: String,
    seed: u64,
    instances: usize,
    suites: Vec<SuiteReport>,
    passed: bool,
}

pub fn execute(
    suite: Option<String>,
    seed: u64,
    instances: usize,
    out_flag: Option<PathBuf>,
) -> Result<CmdOutcome, CliError> {
    if instances == 0 {
        return Err(CliError::Config(anyhow!("--instances must be at least 1")));
    }
    let suites: Vec<Suite> = match suite {
        Some(name) => vec![Suite::parse(&name).ok_or_else(|| {
            CliError::Config(anyhow!(
                "unknown suite '{name}' (expected lemmas, theorem1, counts, dominance, functional-equality)"
            ))
        })?],
        None => Suite::ALL.to_vec(),
    };
    let reports: Vec<SuiteReport> = suites.iter().map(|s| s.run(seed, instances)).collect();
    for report in &reports {
        let status = if report.passed() { "PASS" } else { "FAIL" };
        println!(
            "suite {:<20} {} instances={} checks={} max_residual={:.3e}",
            report.suite, status, report.instances, report.checks, report.max_residual
        );
        for failure in report.failures.iter().take(5) {
            println!("    {failure}");
        }
    }
    let passed = reports.iter().all(|r| r.passed());
    let out_dir = resolve_out_dir(out_flag, &FileConfig::default());
    let report = VerifyReport {
        schema_version: SCHEMA_VERSION,
        library_version: vulcan::version().to_string(),
        seed,
        instances,
        suites: reports,
        passed,
    };
    write_json(&out_dir, "verify_report.json", &report).map_err(CliError::internal)?;
    if passed {
        Ok(CmdOutcome::Ok)
    } else {
        Ok(CmdOutcome::VerificationFailure)
    }
}

//! `bi gradcheck`: run the finite-difference verification suite; nonzero
//! exit when any tensor exceeds the threshold.

use std::path::PathBuf;

use serde::Serialize;

use bi_core::network::gradcheck;
use bi_core::Error;

use crate::manifest::{ensure_out_dir, RunManifest, Stopwatch};
use crate::CliError;

#[derive(clap::Args, Serialize)]
pub struct Args {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of random instances per fragment family.
    #[arg(long, default_value_t = 25)]
    pub trials: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Test hook: flip one analytic gradient's sign so the suite must fail.
    #[arg(long, hide = true, default_value_t = false)]
    pub inject_fault: bool,
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let mut watch = Stopwatch::new();
    let report = gradcheck::run_suite(args.seed, args.trials, args.inject_fault);
    watch.mark("suite");

    ensure_out_dir(&args.out_dir)?;
    let report_path = args.out_dir.join("gradcheck.json");
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::format(&report_path, e.to_string()))?;
    std::fs::write(&report_path, json).map_err(|e| Error::io(&report_path, e))?;
    watch.mark("write");

    let mut manifest = RunManifest::new("gradcheck", serde_json::to_value(args).unwrap());
    manifest.seed = Some(args.seed);
    manifest.output(&report_path);
    manifest.stat("maxRelErr", report.max_rel_err());
    manifest.stat("passed", report.passed());
    manifest.write(&args.out_dir, watch)?;

    if !report.passed() {
        return Err(CliError::Verification(format!(
            "gradients exceed {} for: {}",
            report.threshold,
            report.failures().join(", ")
        )));
    }
    Ok(())
}

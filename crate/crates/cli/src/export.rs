//! `nomiclaw export`: run logs to the analysis CSV, with the balance check.

use std::path::Path;

use nomiclaw_core::ledger::{export_rows, load_run_logs, verify_balance, write_csv};

use crate::error::{input, runtime, CliError, CliResult};

pub fn run(logs: &Path, out: &Path, allow_unbalanced: bool) -> CliResult<()> {
    if !logs.is_dir() {
        return Err(input(format!("{} is not a directory", logs.display())));
    }
    let report = load_run_logs(logs).map_err(input)?;
    if !report.is_clean() {
        for (path, msg) in &report.errors {
            eprintln!("error: {}: {msg}", path.display());
        }
        return Err(CliError::Input(format!("{} unreadable run log(s) in {}", report.errors.len(), logs.display())));
    }
    if report.logs.is_empty() {
        return Err(input(format!("no run logs found in {}", logs.display())));
    }
    let num_rounds = report.logs.iter().map(|l| l.config.num_rounds).max().unwrap_or(0);
    let rows = export_rows(&report.logs);
    let balance = verify_balance(&rows, num_rounds);
    println!(
        "{} runs, {} rows, {} excluded round(s), balanced: {}",
        report.logs.len(),
        rows.len(),
        balance.excluded_rounds,
        if balance.is_balanced { "yes" } else { "no" }
    );
    if !balance.is_balanced {
        for o in &balance.offending {
            eprintln!("unbalanced: {o}");
        }
        if !allow_unbalanced {
            return Err(input("table is unbalanced; pass --allow-unbalanced to write it anyway"));
        }
        eprintln!("warning: writing an unbalanced table");
    }
    write_csv(&rows, out).map_err(runtime)?;
    println!("wrote {}", out.display());
    Ok(())
}

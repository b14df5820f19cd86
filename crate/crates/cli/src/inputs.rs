//! Loading and filtering the analysis table.

use std::path::Path;

use nomiclaw_core::ledger::{read_csv, InteractionRow};
use nomiclaw_core::metrics::{all_unit_metrics, MetricOptions, RunView, UnitMetrics};
use nomiclaw_core::protocol::Condition;

use crate::error::{input, CliResult};

/// Reads the table, keeps one condition if asked, and refuses an empty
/// result.
pub fn load_rows(path: &Path, condition: Option<Condition>) -> CliResult<Vec<InteractionRow>> {
    let mut rows = read_csv(path).map_err(input)?;
    if rows.is_empty() {
        return Err(input(format!("{} has no rows", path.display())));
    }
    if let Some(c) = condition {
        rows.retain(|r| r.condition() == Some(c));
        if rows.is_empty() {
            return Err(input(format!("{} has no {c} rows", path.display())));
        }
    }
    Ok(rows)
}

pub fn unit_metrics(rows: &[InteractionRow], num_rounds: u32, opts: MetricOptions) -> Vec<UnitMetrics> {
    all_unit_metrics(&RunView::from_rows(rows, num_rounds), opts)
}

pub fn parse_condition(s: &str) -> Result<Condition, String> {
    s.parse().map_err(|e: nomiclaw_core::protocol::ProtocolError| e.to_string())
}

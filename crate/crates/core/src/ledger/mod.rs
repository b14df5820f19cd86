//! Run-log persistence and the flat analysis table.
//!
//! Logs are written one JSON file per run, named
//! `nomiclaw_<homo|hetero>_<vignette>_run<NN>.json`. The analysis table has
//! one row per agent per counted round.

mod store;
mod table;

use std::path::PathBuf;

use thiserror::Error;

pub use store::{load_run_logs, log_file_name, parse_log_file_name, write_run_log, LoadReport};
pub use table::{export_rows, read_csv, verify_balance, write_csv, BalanceReport, InteractionRow};

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Validation(#[from] crate::protocol::ProtocolError),
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("csv error: {0}")]
    Csv(String),
}

impl From<csv::Error> for LedgerError {
    fn from(e: csv::Error) -> Self {
        LedgerError::Csv(e.to_string())
    }
}

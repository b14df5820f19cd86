use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;

use crate::ledger::LedgerError;
use crate::protocol::{run_id, Condition, RunLog};

pub fn log_file_name(condition: Condition, vignette_id: &str, run_index: u32) -> String {
    format!("nomiclaw_{}_{}_run{:02}.json", condition.short(), vignette_id, run_index)
}

/// Splits a log file name into (condition, vignette id, run index).
pub fn parse_log_file_name(name: &str) -> Option<(Condition, String, u32)> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"^nomiclaw_(homo|hetero)_(.+)_run(\d{2,})\.json$").expect("static regex"));
    let c = re.captures(name)?;
    let condition = c[1].parse().ok()?;
    let index = c[3].parse().ok()?;
    Some((condition, c[2].to_string(), index))
}

/// Validates `log` and writes it atomically (temporary file, then rename)
/// into `dir`. Returns the final path.
pub fn write_run_log(log: &RunLog, dir: &Path) -> Result<PathBuf, LedgerError> {
    log.validate()?;
    let name = log_file_name(log.config.condition, &log.vignette_id, log.run_index);
    let path = dir.join(&name);
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |source| LedgerError::Io { path: p, source }
    };
    let mut text = serde_json::to_string_pretty(log)
        .map_err(|e| LedgerError::Format { path: path.clone(), message: e.to_string() })?;
    text.push('\n');
    {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(text.as_bytes()).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, &path).map_err(io_err(&path))?;
    Ok(path)
}

/// Logs that loaded cleanly plus one message per file that did not.
#[derive(Debug, Default)]
pub struct LoadReport {
    pub logs: Vec<RunLog>,
    pub errors: Vec<(PathBuf, String)>,
}

impl LoadReport {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Reads every `nomiclaw_*.json` file in `dir` (sorted by name). Files
/// whose name disagrees with their body, that fail to parse, or that fail
/// validation are reported individually; the rest are still returned.
pub fn load_run_logs(dir: &Path) -> Result<LoadReport, LedgerError> {
    let entries = fs::read_dir(dir).map_err(|source| LedgerError::Io { path: dir.to_path_buf(), source })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("nomiclaw_") && n.ends_with(".json"))
        })
        .collect();
    paths.sort();
    let mut report = LoadReport::default();
    for path in paths {
        match load_one(&path) {
            Ok(log) => report.logs.push(log),
            Err(msg) => {
                log::warn!("skipping {}: {msg}", path.display());
                report.errors.push((path, msg));
            }
        }
    }
    Ok(report)
}

fn load_one(path: &Path) -> Result<RunLog, String> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let (condition, vignette, index) =
        parse_log_file_name(name).ok_or_else(|| "file name does not follow the log naming scheme".to_string())?;
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    let log: RunLog = serde_json::from_str(&text).map_err(|e| format!("malformed log: {e}"))?;
    if log.config.condition != condition {
        return Err(format!("file name says {condition} but log says {}", log.config.condition));
    }
    if log.vignette_id != vignette {
        return Err(format!("file name says vignette `{vignette}` but log says `{}`", log.vignette_id));
    }
    if log.run_index != index {
        return Err(format!("file name says run {index} but log says run {}", log.run_index));
    }
    let expected_id = run_id(condition, &vignette, index);
    if log.run_id != expected_id {
        return Err(format!("run id `{}` should be `{expected_id}`", log.run_id));
    }
    log.validate().map_err(|e| e.to_string())?;
    Ok(log)
}

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};

use serde::{Deserialize, Serialize};

use crate::agent::RateLimiter;
use crate::ledger::InteractionRow;
use crate::themes::classify::{classify, preprocess, Classifier, Preprocessed, RowKey, Stage, StageText};
use crate::themes::{Codebook, ThemeCode, ThemeError};

/// One classifier's label for one stage text. Also the checkpoint line
/// format (JSON lines).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    #[serde(flatten)]
    pub key: RowKey,
    pub stage: Stage,
    pub classifier: String,
    pub code: ThemeCode,
    pub raw_reply: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Annotation {
    fn job_key(&self) -> (RowKey, Stage, String) {
        (self.key.clone(), self.stage, self.classifier.clone())
    }
}

pub struct AnnotateOptions {
    pub codebook: Codebook,
    pub rate_limiter: Option<Arc<RateLimiter>>,
    /// Append-only JSONL file; existing entries are reused, not re-requested.
    pub checkpoint: Option<PathBuf>,
    pub workers: usize,
    /// Stop after this many new requests (the rest stays for a later resume).
    pub max_requests: Option<usize>,
}

impl Default for AnnotateOptions {
    fn default() -> Self {
        Self { codebook: Codebook::standard(), rate_limiter: None, checkpoint: None, workers: 1, max_requests: None }
    }
}

#[derive(Debug, Default)]
pub struct AnnotationRun {
    /// Sorted by (row, stage, classifier).
    pub annotations: Vec<Annotation>,
    pub preprocessed: Preprocessed,
    /// Requests issued in this call.
    pub requested: usize,
    /// Labels taken from the checkpoint.
    pub resumed: usize,
    /// Jobs left undone because of `max_requests`.
    pub pending: usize,
}

impl AnnotationRun {
    pub fn unknown_share(&self) -> f64 {
        if self.annotations.is_empty() {
            return 0.0;
        }
        let unknown = self.annotations.iter().filter(|a| !a.code.is_known()).count();
        unknown as f64 / self.annotations.len() as f64
    }
}

fn read_checkpoint(path: &Path) -> Result<Vec<Annotation>, ThemeError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = File::open(path).map_err(|e| ThemeError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| ThemeError::Io(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        // A torn final line from an interrupted write is skipped and redone.
        match serde_json::from_str::<Annotation>(&line) {
            Ok(a) => out.push(a),
            Err(e) => log::warn!("ignoring unreadable checkpoint line in {}: {e}", path.display()),
        }
    }
    Ok(out)
}

/// Opens the checkpoint for appending, first terminating a torn last line
/// so the next record does not run into it.
fn open_checkpoint(path: &Path) -> Result<File, ThemeError> {
    let io = |e: std::io::Error| ThemeError::Io(format!("{}: {e}", path.display()));
    let torn = std::fs::read(path).map(|b| b.last().is_some_and(|c| *c != b'\n')).unwrap_or(false);
    let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    if torn {
        file.write_all(b"\n").map_err(io)?;
    }
    Ok(file)
}

/// Labels every surviving stage text with every classifier. Requests are
/// spread over `workers` threads and paced by the shared rate limiter;
/// results are appended to the checkpoint by a single writer as they
/// arrive. Classifier failures become `UNKNOWN` with an error note.
pub fn annotate_dataset(
    rows: &[InteractionRow],
    classifiers: &[&dyn Classifier],
    opts: &AnnotateOptions,
) -> Result<AnnotationRun, ThemeError> {
    let preprocessed = preprocess(rows);
    let mut done: BTreeMap<(RowKey, Stage, String), Annotation> = BTreeMap::new();
    if let Some(path) = &opts.checkpoint {
        for a in read_checkpoint(path)? {
            done.insert(a.job_key(), a);
        }
    }
    let wanted: BTreeSet<(RowKey, Stage, String)> = preprocessed
        .texts
        .iter()
        .flat_map(|t| classifiers.iter().map(move |c| (t.key.clone(), t.stage, c.id().to_string())))
        .collect();
    done.retain(|k, _| wanted.contains(k));
    let resumed = done.len();

    let mut jobs: Vec<(&StageText, usize)> = Vec::new();
    for t in &preprocessed.texts {
        for (ci, c) in classifiers.iter().enumerate() {
            if !done.contains_key(&(t.key.clone(), t.stage, c.id().to_string())) {
                jobs.push((t, ci));
            }
        }
    }
    let total_jobs = jobs.len();
    if let Some(limit) = opts.max_requests {
        jobs.truncate(limit);
    }
    let pending = total_jobs - jobs.len();

    let mut writer = match &opts.checkpoint {
        Some(path) => Some(open_checkpoint(path)?),
        None => None,
    };

    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<Annotation>();
    let mut fresh = Vec::with_capacity(jobs.len());
    let mut write_error = None;
    std::thread::scope(|scope| {
        for _ in 0..opts.workers.max(1) {
            let tx = tx.clone();
            let (jobs, next) = (&jobs, &next);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((text, ci)) = jobs.get(i) else { break };
                if let Some(l) = &opts.rate_limiter {
                    l.acquire();
                }
                let classifier = classifiers[*ci];
                let c = classify(&text.text, classifier, &opts.codebook);
                if let Some(e) = &c.error {
                    log::warn!("{} {} via {}: {e}", text.key, text.stage, classifier.id());
                }
                let ann = Annotation {
                    key: text.key.clone(),
                    stage: text.stage,
                    classifier: classifier.id().to_string(),
                    code: c.code,
                    raw_reply: c.raw_reply,
                    error: c.error,
                };
                if tx.send(ann).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for ann in rx {
            if let (Some(w), None) = (writer.as_mut(), &write_error) {
                let line = serde_json::to_string(&ann).expect("annotation serializes");
                if let Err(e) = writeln!(w, "{line}").and_then(|_| w.flush()) {
                    write_error = Some(e.to_string());
                }
            }
            fresh.push(ann);
        }
    });
    if let Some(e) = write_error {
        return Err(ThemeError::Io(format!("checkpoint write failed: {e}")));
    }
    let requested = fresh.len();
    for a in fresh {
        done.insert(a.job_key(), a);
    }
    Ok(AnnotationRun { annotations: done.into_values().collect(), preprocessed, requested, resumed, pending })
}

/// Copies one classifier's labels into the row theme columns. Stages that
/// were filtered out or never labelled become `UNKNOWN`.
pub fn apply_annotations(rows: &[InteractionRow], annotations: &[Annotation], classifier: &str) -> Vec<InteractionRow> {
    let index: BTreeMap<(&RowKey, Stage), ThemeCode> =
        annotations.iter().filter(|a| a.classifier == classifier).map(|a| ((&a.key, a.stage), a.code)).collect();
    rows.iter()
        .map(|row| {
            let key = RowKey::of(row);
            let code = |s: Stage| Some(index.get(&(&key, s)).copied().unwrap_or(ThemeCode::Unknown));
            InteractionRow {
                rule_theme: code(Stage::Rule),
                reasoning_theme: code(Stage::Reasoning),
                vote_theme: code(Stage::Vote),
                ..row.clone()
            }
        })
        .collect()
}

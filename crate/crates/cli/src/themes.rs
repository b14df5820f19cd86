//! `nomiclaw themes`: annotation, agreement sampling, kappa and trends.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nomiclaw_core::agent::{BackendClient, InvocationParams, RateLimiter};
use nomiclaw_core::ledger::{write_csv, InteractionRow};
use nomiclaw_core::metrics::annotate_mentions;
use nomiclaw_core::themes::{
    agreement_report, annotate_dataset, apply_annotations, persistence_table, preprocess, sample_for_agreement,
    theme_frequencies, AnnotateOptions, Annotation, BackendClassifier, Classifier, MockClassifier, SampleRow,
};
use nomiclaw_stats::PersistenceMode;

use crate::builders;
use crate::error::{input, runtime, CliError, CliResult};

pub struct AnnotateArgs {
    pub out: PathBuf,
    pub classifiers: Vec<String>,
    pub labels: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub workers: usize,
    pub rate: Option<f64>,
    pub max_requests: Option<usize>,
    pub backend_url: Option<String>,
}

fn default_labels_path(out: &Path) -> PathBuf {
    out.with_extension("labels.jsonl")
}

pub fn annotate(rows: &[InteractionRow], args: AnnotateArgs) -> CliResult<()> {
    if args.classifiers.is_empty() {
        return Err(input("name at least one --classifier"));
    }
    let needs_backend = args.classifiers.iter().any(|c| c != "mock");
    let client = if needs_backend {
        let url = args
            .backend_url
            .clone()
            .ok_or_else(|| input("model classifiers need NOMIC_BACKEND_URL or --backend-url"))?;
        // Classification wants repeatable replies.
        let params = InvocationParams { temperature: 0.0, ..InvocationParams::default() };
        Some(Arc::new(BackendClient::new(url, params).map_err(input)?))
    } else {
        None
    };
    let owned: Vec<Box<dyn Classifier>> = args
        .classifiers
        .iter()
        .map(|c| -> Box<dyn Classifier> {
            match (c.as_str(), &client) {
                ("mock", _) => Box::new(MockClassifier::new("mock")),
                (model, Some(client)) => Box::new(BackendClassifier::new(model, Arc::clone(client))),
                (_, None) => unreachable!("client exists whenever a model classifier is named"),
            }
        })
        .collect();
    let classifiers: Vec<&dyn Classifier> = owned.iter().map(|c| c.as_ref()).collect();
    let mut opts = AnnotateOptions {
        checkpoint: args.checkpoint.clone(),
        workers: args.workers.max(1),
        max_requests: args.max_requests,
        ..AnnotateOptions::default()
    };
    if let Some(rate) = args.rate {
        if rate <= 0.0 {
            return Err(input("--rate must be positive"));
        }
        opts.rate_limiter = Some(Arc::new(RateLimiter::new(rate)));
    }
    let run = annotate_dataset(rows, &classifiers, &opts)?;
    println!(
        "{} stage texts ({} dropped), {} requested, {} from checkpoint, {} pending, UNKNOWN share {:.3}",
        run.preprocessed.texts.len(),
        run.preprocessed.dropped_total(),
        run.requested,
        run.resumed,
        run.pending,
        run.unknown_share()
    );
    if run.pending > 0 {
        println!("annotation incomplete; rerun with the same --checkpoint to finish");
        return Ok(());
    }
    let labels = args.labels.clone().unwrap_or_else(|| default_labels_path(&args.out));
    write_labels(&labels, &run.annotations)?;
    let mut annotated = apply_annotations(rows, &run.annotations, classifiers[0].id());
    annotate_mentions(&mut annotated);
    write_csv(&annotated, &args.out).map_err(runtime)?;
    println!("wrote {} (themes from `{}`) and {}", args.out.display(), classifiers[0].id(), labels.display());
    Ok(())
}

fn write_labels(path: &Path, annotations: &[Annotation]) -> CliResult<()> {
    let mut f = File::create(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    for a in annotations {
        let line = serde_json::to_string(a).map_err(runtime)?;
        writeln!(f, "{line}").map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn read_labels(path: &Path) -> CliResult<Vec<Annotation>> {
    let f = File::open(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| input(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| input(format!("{}:{}: {e}", path.display(), i + 1)))?);
    }
    Ok(out)
}

pub fn sample(rows: &[InteractionRow], fraction: f64, seed: u64, out: &Path) -> CliResult<()> {
    let texts = preprocess(rows).texts;
    let sample = sample_for_agreement(&texts, fraction, seed)?;
    let mut w = csv::Writer::from_path(out).map_err(|e| runtime(format!("{}: {e}", out.display())))?;
    for s in &sample {
        w.serialize(s).map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    println!("sampled {} of {} stage texts into {}", sample.len(), texts.len(), out.display());
    Ok(())
}

pub fn agreement(human: &Path, labels: &Path, out: Option<PathBuf>) -> CliResult<()> {
    let mut r = csv::Reader::from_path(human).map_err(|e| input(format!("{}: {e}", human.display())))?;
    let human_rows: Vec<SampleRow> =
        r.deserialize().collect::<Result<_, _>>().map_err(|e| input(format!("{}: {e}", human.display())))?;
    let report = agreement_report(&human_rows, &read_labels(labels)?)?;
    let t = builders::agreement(&report);
    t.print();
    if let Some(path) = out {
        t.write_csv(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn require_themes(rows: &[InteractionRow]) -> CliResult<()> {
    if rows.iter().all(|r| r.rule_theme.is_none() && r.reasoning_theme.is_none() && r.vote_theme.is_none()) {
        return Err(CliError::Input("the table has no theme columns; run `themes annotate` first".into()));
    }
    Ok(())
}

pub fn trends(
    rows: &[InteractionRow],
    mode: PersistenceMode,
    out: Option<PathBuf>,
    persistence_out: Option<PathBuf>,
) -> CliResult<()> {
    require_themes(rows)?;
    let freq = builders::frequencies(&theme_frequencies(rows));
    let pers = builders::persistence(&persistence_table(rows, mode));
    pers.print();
    if let Some(path) = out {
        freq.write_csv(&path)?;
        println!("wrote {}", path.display());
    } else {
        println!();
        freq.print();
    }
    if let Some(path) = persistence_out {
        pers.write_csv(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

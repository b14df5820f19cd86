//! Closed-set jurisprudential theme coding of rule, reasoning and vote
//! texts, with checkpointed batch annotation, agreement sampling and
//! figure-ready trend tables.

mod agreement;
mod annotate;
mod classify;
mod codebook;
mod trends;

use thiserror::Error;

pub use agreement::{agreement_report, sample_for_agreement, AgreementRow, SampleRow, KAPPA_BAR};
pub use annotate::{annotate_dataset, apply_annotations, AnnotateOptions, Annotation, AnnotationRun};
pub use classify::{
    classify, preprocess, BackendClassifier, Classification, Classifier, DropReason, MockClassifier, Preprocessed,
    RowKey, Stage, StageText, MIN_TEXT_CHARS,
};
pub use codebook::{CodeEntry, Codebook, ThemeCode};
pub use trends::{persistence_table, theme_frequencies, FrequencyRow, PersistenceRow};

#[derive(Debug, Error)]
pub enum ThemeError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("missing labels for {} item(s): {}", .0.len(), .0.join(", "))]
    MissingLabels(Vec<String>),
}

use thiserror::Error;

use crate::model::{Group, Label, Span};

/// Violations of the annotation model invariants.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("span [{start}, {end}) is empty or reversed")]
    EmptySpan { start: usize, end: usize },
    #[error("span {span} exceeds document length {len}")]
    SpanOutOfBounds { span: Span, len: usize },
    #[error("duplicate span {span} in annotation set of '{annotator}'")]
    DuplicateSpan { annotator: String, span: Span },
    #[error("spans {first} and {second} of '{annotator}' overlap")]
    OverlappingSpans {
        annotator: String,
        first: Span,
        second: Span,
    },
    #[error("annotator '{0}' has more than one annotation set in a document")]
    DuplicateAnnotator(String),
    #[error("annotator '{id}' is listed as both {first} and {second}")]
    InconsistentGroup {
        id: String,
        first: Group,
        second: Group,
    },
    #[error("duplicate document id '{0}'")]
    DuplicateDocument(String),
    #[error("spans of different labels share token {index}")]
    TokenOverlap { index: usize },
    #[error("unknown label '{0}'")]
    UnknownLabel(String),
    #[error("unknown group '{0}'")]
    UnknownGroup(String),
    #[error("label sequence has {got} positions but the document has {expected} tokens")]
    LengthMismatch { expected: usize, got: usize },
    #[error("token {index} carries labels {labels:?} in a non-aggregated labeling")]
    MultiLabelToken { index: usize, labels: Vec<Label> },
}

/// Errors raised while reading corpus or prediction files.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed reading input: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: document '{doc_id}': {source}")]
    Validation {
        line: usize,
        doc_id: String,
        #[source]
        source: ModelError,
    },
    #[error("line {line}: span-form and token-form records mixed in one file")]
    MixedFormat { line: usize },
    #[error("line {line}: duplicate document id '{doc_id}'")]
    DuplicateDocument { line: usize, doc_id: String },
}

/// Errors raised by the aggregation and evaluation operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no document qualifies for {0}")]
    NoQualifyingDocuments(String),
    #[error("no {label} spans from {group} annotators")]
    NoSpans { group: Group, label: Label },
    #[error("predictions reference unknown document '{0}'")]
    UnknownDocument(String),
    #[error("document '{0}' has no gold annotation set")]
    MissingGold(String),
    #[error("document '{0}' has more than one aggregated annotation set; name the gold annotator")]
    AmbiguousGold(String),
    #[error("prediction for document '{doc_id}': {source}")]
    InvalidPrediction {
        doc_id: String,
        #[source]
        source: ModelError,
    },
}

/// Invalid synthetic-corpus parameters.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("{0} probability {1} is outside [0, 1]")]
    Probability(&'static str, f64),
    #[error("max shift must be at least 1")]
    ZeroShift,
    #[error("at least one label must be enabled")]
    NoLabels,
    #[error("{experts} experts requested but only {annotators} annotators")]
    TooManyExperts { experts: usize, annotators: usize },
}

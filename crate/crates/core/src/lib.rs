//! Span-level agreement and evaluation for token-indexed annotation corpora.
//!
//! Spans are compared under three criteria of increasing leniency:
//!
//! * **exact**: same label and identical boundaries;
//! * **one-side boundary (OB)**: same label, the start or the end boundary
//!   shared, and at least one token in common;
//! * **token overlap (TO)**: same label and at least one token in common.
//!
//! On top of the [`matching`] kernel, [`metrics`] provides symmetric pairwise
//! annotator agreement, within-group and cross-group statistics over a corpus,
//! span-length statistics, and pooled evaluation of predictions. [`io`] reads
//! and writes JSON Lines corpora, [`report`] renders CSV / JSON tables, and
//! [`synth`] generates jittered synthetic corpora.

pub mod error;
pub mod io;
pub mod matching;
pub mod metrics;
pub mod model;
pub mod report;
pub mod synth;

pub use error::{IngestError, MetricsError, ModelError, SynthError};
pub use matching::{count_matches, matches, MatchCounts, MatchCriterion};
pub use metrics::{
    cross_group_agreement, evaluate_predictions, pairwise_agreement, prf1, span_length_stats,
    within_group_agreement, AggregateStat, CrossGroupStat, EmptyPair, Evaluation, GoldSource,
    LengthStat, RecallMode, ScoreTriple, Scoring,
};
pub use model::{
    adjacent_merges, resolve_multilabel, spans_from_token_labels, token_labels_from_spans,
    AnnotationSet, Annotator, Corpus, Document, Group, Label, Predictions, Span, TokenLabeling,
};
pub use report::{emit_report, Cell, LabelKey, Metric, ReportFormat, ReportTable, RowKey};

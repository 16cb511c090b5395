//! Precision, recall and F1 from match counts, and the agreement
//! aggregations built on them: symmetric pairwise agreement, within-group and
//! cross-group statistics over documents, span-length statistics, and pooled
//! evaluation of predictions.
//!
//! Per-document work runs in parallel; every reduction happens sequentially
//! in corpus order so results do not depend on scheduling.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::MetricsError;
use crate::matching::{count_matches, MatchCounts, MatchCriterion};
use crate::model::{AnnotationSet, Corpus, Group, Label, Predictions, Span};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreTriple {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ScoreTriple {
    pub const PERFECT: ScoreTriple = ScoreTriple {
        precision: 1.0,
        recall: 1.0,
        f1: 1.0,
    };
    pub const ZERO: ScoreTriple = ScoreTriple {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };

    /// F1 is the harmonic mean, or 0 when both inputs are 0.
    pub fn from_precision_recall(precision: f64, recall: f64) -> ScoreTriple {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        ScoreTriple {
            precision,
            recall,
            f1,
        }
    }
}

/// Score assigned when both sides of a comparison have no spans.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EmptyPair {
    /// Mutual absence is full agreement.
    #[default]
    One,
    Zero,
    /// Leave the comparison out of every average.
    Skip,
}

impl EmptyPair {
    pub fn as_str(self) -> &'static str {
        match self {
            EmptyPair::One => "one",
            EmptyPair::Zero => "zero",
            EmptyPair::Skip => "skip",
        }
    }
}

impl FromStr for EmptyPair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one" => Ok(EmptyPair::One),
            "zero" => Ok(EmptyPair::Zero),
            "skip" => Ok(EmptyPair::Skip),
            other => Err(format!("unknown empty-pair convention '{other}'")),
        }
    }
}

/// Numerator used for recall.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RecallMode {
    /// Gold spans matched by some prediction; never exceeds 1.
    #[default]
    Bounded,
    /// Predictions matching some gold span; may exceed 1 under relaxed
    /// criteria when several predictions hit one gold span.
    PredictionCount,
}

impl RecallMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RecallMode::Bounded => "bounded",
            RecallMode::PredictionCount => "prediction-count",
        }
    }
}

impl FromStr for RecallMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bounded" => Ok(RecallMode::Bounded),
            "prediction-count" => Ok(RecallMode::PredictionCount),
            other => Err(format!("unknown recall convention '{other}'")),
        }
    }
}

/// Conventions that turn match counts into scores.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Scoring {
    pub empty_pair: EmptyPair,
    pub recall: RecallMode,
}

impl Scoring {
    /// `None` only for an empty/empty comparison under [`EmptyPair::Skip`].
    pub fn score(&self, counts: MatchCounts) -> Option<ScoreTriple> {
        let MatchCounts {
            matched_predicted,
            matched_gold,
            total_predicted,
            total_gold,
        } = counts;
        if total_predicted == 0 && total_gold == 0 {
            return match self.empty_pair {
                EmptyPair::One => Some(ScoreTriple::PERFECT),
                EmptyPair::Zero => Some(ScoreTriple::ZERO),
                EmptyPair::Skip => None,
            };
        }
        let precision = ratio(matched_predicted, total_predicted);
        let recall = match self.recall {
            RecallMode::Bounded => ratio(matched_gold, total_gold),
            RecallMode::PredictionCount => ratio(matched_predicted, total_gold),
        };
        Some(ScoreTriple::from_precision_recall(precision, recall))
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 under the default conventions: bounded recall,
/// and (1, 1, 1) when neither side has spans.
pub fn prf1(counts: MatchCounts) -> ScoreTriple {
    Scoring::default()
        .score(counts)
        .expect("default scoring never skips")
}

/// Mean, population standard deviation and count of a sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AggregateStat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl AggregateStat {
    /// Summation follows slice order. `None` for an empty slice.
    pub fn from_values(values: &[f64]) -> Option<AggregateStat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(AggregateStat {
            mean,
            std: var.sqrt(),
            n: values.len(),
        })
    }
}

/// Symmetric agreement between two annotators on one label: the mean of the
/// F1 obtained with `a` as gold and with `b` as gold.
pub fn pairwise_agreement(
    a: &AnnotationSet,
    b: &AnnotationSet,
    criterion: MatchCriterion,
    label: Label,
    scoring: &Scoring,
) -> Option<f64> {
    let spans_a = a.spans_with_label(label);
    let spans_b = b.spans_with_label(label);
    // b predicted against a as gold; the reverse direction is the same
    // counts with roles swapped since the predicate is symmetric
    let counts = count_matches(criterion, &spans_b, &spans_a);
    let a_gold = scoring.score(counts)?;
    let b_gold = scoring.score(counts.swapped())?;
    Some((a_gold.f1 + b_gold.f1) / 2.0)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Per-document mean of pairwise agreement over all unordered pairs of
/// `group` annotators, summarised across documents with at least two such
/// annotators.
pub fn within_group_agreement(
    corpus: &Corpus,
    group: Group,
    criterion: MatchCriterion,
    label: Label,
    scoring: &Scoring,
) -> Result<AggregateStat, MetricsError> {
    let per_doc: Vec<Option<f64>> = corpus
        .documents()
        .par_iter()
        .map(|doc| {
            let sets = doc.sets_in_group(group);
            let mut values = Vec::new();
            for (i, a) in sets.iter().enumerate() {
                for b in &sets[i + 1..] {
                    if let Some(v) = pairwise_agreement(a, b, criterion, label, scoring) {
                        values.push(v);
                    }
                }
            }
            (!values.is_empty()).then(|| mean(&values))
        })
        .collect();
    let values: Vec<f64> = per_doc.into_iter().flatten().collect();
    AggregateStat::from_values(&values).ok_or_else(|| {
        MetricsError::NoQualifyingDocuments(format!(
            "{group} within-group agreement on {label} ({criterion})"
        ))
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossGroupStat {
    pub precision: AggregateStat,
    pub recall: AggregateStat,
    pub f1: AggregateStat,
}

/// Directed agreement with `gold_group` annotators as gold and
/// `pred_group` annotators as predictions. Each document contributes the
/// componentwise mean over all (gold, predicted) annotator pairs.
pub fn cross_group_agreement(
    corpus: &Corpus,
    gold_group: Group,
    pred_group: Group,
    criterion: MatchCriterion,
    label: Label,
    scoring: &Scoring,
) -> Result<CrossGroupStat, MetricsError> {
    let per_doc: Vec<Option<ScoreTriple>> = corpus
        .documents()
        .par_iter()
        .map(|doc| {
            let golds = doc.sets_in_group(gold_group);
            let preds = doc.sets_in_group(pred_group);
            let mut triples = Vec::new();
            for g in &golds {
                let gold_spans = g.spans_with_label(label);
                for p in &preds {
                    let counts = count_matches(criterion, &p.spans_with_label(label), &gold_spans);
                    triples.extend(scoring.score(counts));
                }
            }
            if triples.is_empty() {
                return None;
            }
            let component =
                |f: fn(&ScoreTriple) -> f64| mean(&triples.iter().map(f).collect::<Vec<_>>());
            Some(ScoreTriple {
                precision: component(|t| t.precision),
                recall: component(|t| t.recall),
                f1: component(|t| t.f1),
            })
        })
        .collect();
    let triples: Vec<ScoreTriple> = per_doc.into_iter().flatten().collect();
    let stat = |f: fn(&ScoreTriple) -> f64| {
        AggregateStat::from_values(&triples.iter().map(f).collect::<Vec<_>>())
    };
    match (stat(|t| t.precision), stat(|t| t.recall), stat(|t| t.f1)) {
        (Some(precision), Some(recall), Some(f1)) => Ok(CrossGroupStat {
            precision,
            recall,
            f1,
        }),
        _ => Err(MetricsError::NoQualifyingDocuments(format!(
            "{gold_group} vs {pred_group} cross-group agreement on {label} ({criterion})"
        ))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LengthStat {
    pub label: Label,
    pub group: Group,
    pub stat: AggregateStat,
}

/// Token counts of every `label` span by `group` annotators, pooled over
/// the corpus.
pub fn span_length_stats(
    corpus: &Corpus,
    group: Group,
    label: Label,
) -> Result<LengthStat, MetricsError> {
    let lengths: Vec<f64> = corpus
        .documents()
        .iter()
        .flat_map(|d| d.sets_in_group(group))
        .flat_map(|s| s.spans().iter())
        .filter(|s| s.label() == label)
        .map(|s| s.len() as f64)
        .collect();
    AggregateStat::from_values(&lengths)
        .map(|stat| LengthStat { label, group, stat })
        .ok_or(MetricsError::NoSpans { group, label })
}

/// Where gold spans for prediction evaluation come from.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum GoldSource {
    /// The document's single aggregated annotation set.
    #[default]
    Aggregated,
    Annotator(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    /// Pooled counts per label, in [`Label::ALL`] order.
    pub label_counts: [(Label, MatchCounts); 3],
    pub micro_counts: MatchCounts,
    /// `None` where the pooled counts are empty on both sides and the
    /// scoring skips such comparisons.
    pub per_label: [(Label, Option<ScoreTriple>); 3],
    pub micro: Option<ScoreTriple>,
    pub documents: usize,
}

/// Pools match counts over every corpus document, per label and jointly,
/// then scores the pooled counts. Documents without a prediction record
/// count as predicting nothing.
pub fn evaluate_predictions(
    corpus: &Corpus,
    gold: &GoldSource,
    predictions: &Predictions,
    criterion: MatchCriterion,
    scoring: &Scoring,
) -> Result<Evaluation, MetricsError> {
    for (doc_id, spans) in predictions.iter() {
        let doc = corpus
            .get(doc_id)
            .ok_or_else(|| MetricsError::UnknownDocument(doc_id.to_string()))?;
        if let Some(&span) = spans.iter().find(|s| s.end() > doc.len()) {
            return Err(MetricsError::InvalidPrediction {
                doc_id: doc_id.to_string(),
                source: crate::ModelError::SpanOutOfBounds {
                    span,
                    len: doc.len(),
                },
            });
        }
    }

    let per_doc: Vec<[MatchCounts; 3]> = corpus
        .documents()
        .par_iter()
        .map(|doc| {
            let gold_set = select_gold(doc, gold)?;
            let predicted = predictions.get(doc.doc_id()).unwrap_or(&[]);
            Ok(Label::ALL.map(|label| {
                let p: Vec<Span> = predicted
                    .iter()
                    .copied()
                    .filter(|s| s.label() == label)
                    .collect();
                count_matches(criterion, &p, &gold_set.spans_with_label(label))
            }))
        })
        .collect::<Result<_, MetricsError>>()?;

    let mut totals = [MatchCounts::default(); 3];
    for counts in &per_doc {
        for (t, c) in totals.iter_mut().zip(counts) {
            *t = *t + *c;
        }
    }
    let micro_counts: MatchCounts = totals.iter().copied().sum();
    Ok(Evaluation {
        label_counts: [
            (Label::P, totals[0]),
            (Label::I, totals[1]),
            (Label::O, totals[2]),
        ],
        micro_counts,
        per_label: [
            (Label::P, scoring.score(totals[0])),
            (Label::I, scoring.score(totals[1])),
            (Label::O, scoring.score(totals[2])),
        ],
        micro: scoring.score(micro_counts),
        documents: per_doc.len(),
    })
}

fn select_gold<'a>(
    doc: &'a crate::model::Document,
    gold: &GoldSource,
) -> Result<&'a AnnotationSet, MetricsError> {
    match gold {
        GoldSource::Annotator(id) => doc
            .set_for(id)
            .ok_or_else(|| MetricsError::MissingGold(doc.doc_id().to_string())),
        GoldSource::Aggregated => match doc.sets_in_group(Group::Aggregate).as_slice() {
            [only] => Ok(only),
            [] => Err(MetricsError::MissingGold(doc.doc_id().to_string())),
            _ => Err(MetricsError::AmbiguousGold(doc.doc_id().to_string())),
        },
    }
}

impl fmt::Display for ScoreTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "P={:.3} R={:.3} F1={:.3}",
            self.precision, self.recall, self.f1
        )
    }
}

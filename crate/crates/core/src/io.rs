//! JSON Lines readers and writers for corpora and prediction files.
//!
//! Two corpus encodings are accepted, one document per line:
//!
//! * span form: `{"doc_id", "tokens", "annotations": [{"annotator", "group",
//!   "label", "start", "end"}], "annotators"?: [{"annotator", "group"}]}`
//! * token form: `{"doc_id", "tokens", "aggregated", "token_labels":
//!   {"<annotator>": [["P","I"], [], ["O"]]}, "groups"?: {"<annotator>": group}}`
//!
//! The optional `annotators` list declares annotators who produced no spans.
//! In token form, annotators missing from `groups` default to `aggregate` when
//! the record is aggregated and to `crowd` otherwise.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{IngestError, ModelError};
use crate::model::{
    adjacent_merges, resolve_multilabel, spans_from_token_labels, token_labels_from_spans,
    AnnotationSet, Annotator, Corpus, Document, Group, Label, Predictions, Span, TokenLabeling,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusFormat {
    Span,
    Token,
}

#[derive(Serialize, Deserialize)]
struct SpanRecord {
    doc_id: String,
    tokens: Vec<String>,
    annotations: Vec<AnnotationRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    annotators: Vec<AnnotatorRecord>,
}

#[derive(Serialize, Deserialize)]
struct AnnotationRecord {
    annotator: String,
    group: Group,
    label: Label,
    start: usize,
    end: usize,
}

#[derive(Serialize, Deserialize)]
struct AnnotatorRecord {
    annotator: String,
    group: Group,
}

#[derive(Serialize, Deserialize)]
struct TokenRecord {
    doc_id: String,
    tokens: Vec<String>,
    aggregated: bool,
    token_labels: BTreeMap<String, Vec<Vec<Label>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    groups: BTreeMap<String, Group>,
}

#[derive(Serialize, Deserialize)]
struct PredictionRecord {
    doc_id: String,
    spans: Vec<SpanEntry>,
}

#[derive(Serialize, Deserialize)]
struct SpanEntry {
    label: Label,
    start: usize,
    end: usize,
}

/// Non-blank lines with their 1-based line numbers.
fn records<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String), IngestError>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(Ok((i + 1, l))),
            Err(e) => Some(Err(IngestError::Io(e))),
        })
}

fn parse_err(line: usize, message: impl ToString) -> IngestError {
    IngestError::Parse {
        line,
        message: message.to_string(),
    }
}

fn invalid(line: usize, doc_id: &str) -> impl Fn(ModelError) -> IngestError + '_ {
    move |source| IngestError::Validation {
        line,
        doc_id: doc_id.to_string(),
        source,
    }
}

/// Reads a corpus in either encoding. All records must share one encoding.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<Corpus, IngestError> {
    parse_corpus_with_format(reader).map(|(corpus, _)| corpus)
}

/// As [`parse_corpus`], also reporting the encoding found (`None` for an
/// empty input).
pub fn parse_corpus_with_format<R: BufRead>(
    reader: R,
) -> Result<(Corpus, Option<CorpusFormat>), IngestError> {
    let mut format = None;
    let mut documents = Vec::new();
    let mut seen_ids = HashSet::new();
    let mut groups: BTreeMap<String, Group> = BTreeMap::new();

    for record in records(reader) {
        let (line, text) = record?;
        let value: Value = serde_json::from_str(&text).map_err(|e| parse_err(line, e))?;
        let Some(object) = value.as_object() else {
            return Err(parse_err(line, "record must be a JSON object"));
        };
        let this_format = match (
            object.contains_key("annotations"),
            object.contains_key("token_labels"),
        ) {
            (true, false) => CorpusFormat::Span,
            (false, true) => CorpusFormat::Token,
            (true, true) => {
                return Err(parse_err(
                    line,
                    "record has both 'annotations' and 'token_labels'",
                ))
            }
            (false, false) => {
                return Err(parse_err(
                    line,
                    "record needs 'annotations' or 'token_labels'",
                ))
            }
        };
        match format {
            None => format = Some(this_format),
            Some(f) if f != this_format => return Err(IngestError::MixedFormat { line }),
            Some(_) => {}
        }
        let doc = match this_format {
            CorpusFormat::Span => {
                let rec: SpanRecord =
                    serde_json::from_value(value).map_err(|e| parse_err(line, e))?;
                span_record_to_document(rec, line)?
            }
            CorpusFormat::Token => {
                let rec: TokenRecord =
                    serde_json::from_value(value).map_err(|e| parse_err(line, e))?;
                token_record_to_document(rec, line)?
            }
        };
        if !seen_ids.insert(doc.doc_id().to_string()) {
            return Err(IngestError::DuplicateDocument {
                line,
                doc_id: doc.doc_id().to_string(),
            });
        }
        for set in doc.annotation_sets() {
            let a = set.annotator();
            match groups.get(&a.id) {
                Some(&first) if first != a.group => {
                    return Err(invalid(line, doc.doc_id())(ModelError::InconsistentGroup {
                        id: a.id.clone(),
                        first,
                        second: a.group,
                    }))
                }
                Some(_) => {}
                None => {
                    groups.insert(a.id.clone(), a.group);
                }
            }
        }
        documents.push(doc);
    }
    let corpus = Corpus::new(documents).map_err(|e| invalid(0, "")(e))?;
    Ok((corpus, format))
}

fn span_record_to_document(rec: SpanRecord, line: usize) -> Result<Document, IngestError> {
    let err = invalid(line, &rec.doc_id);
    let mut by_annotator: BTreeMap<String, (Group, Vec<Span>)> = BTreeMap::new();
    for a in &rec.annotators {
        declare(&mut by_annotator, &a.annotator, a.group).map_err(&err)?;
    }
    for a in &rec.annotations {
        let span = Span::new(a.label, a.start, a.end).map_err(&err)?;
        declare(&mut by_annotator, &a.annotator, a.group)
            .map_err(&err)?
            .push(span);
    }
    let sets = by_annotator
        .into_iter()
        .map(|(id, (group, spans))| AnnotationSet::new(Annotator::new(id, group), spans))
        .collect::<Result<Vec<_>, _>>()
        .map_err(&err)?;
    Document::new(rec.doc_id.clone(), rec.tokens, sets).map_err(&err)
}

fn declare<'a>(
    by_annotator: &'a mut BTreeMap<String, (Group, Vec<Span>)>,
    id: &str,
    group: Group,
) -> Result<&'a mut Vec<Span>, ModelError> {
    let entry = by_annotator
        .entry(id.to_string())
        .or_insert_with(|| (group, Vec::new()));
    if entry.0 != group {
        return Err(ModelError::InconsistentGroup {
            id: id.to_string(),
            first: entry.0,
            second: group,
        });
    }
    Ok(&mut entry.1)
}

fn token_record_to_document(rec: TokenRecord, line: usize) -> Result<Document, IngestError> {
    let err = invalid(line, &rec.doc_id);
    let len = rec.tokens.len();
    let default_group = if rec.aggregated {
        Group::Aggregate
    } else {
        Group::Crowd
    };
    let mut sets = Vec::with_capacity(rec.token_labels.len());
    for (id, labels) in rec.token_labels {
        if labels.len() != len {
            return Err(err(ModelError::LengthMismatch {
                expected: len,
                got: labels.len(),
            }));
        }
        let labeling = TokenLabeling(
            labels
                .into_iter()
                .map(|l| l.into_iter().collect())
                .collect(),
        );
        let tags = if rec.aggregated {
            resolve_multilabel(&labeling)
        } else {
            labeling.into_single().map_err(&err)?
        };
        let group = rec.groups.get(&id).copied().unwrap_or(default_group);
        let set = AnnotationSet::new(Annotator::new(id, group), spans_from_token_labels(&tags))
            .map_err(&err)?;
        sets.push(set);
    }
    Document::new(rec.doc_id.clone(), rec.tokens, sets).map_err(&err)
}

/// Reads one prediction record per document.
pub fn parse_predictions<R: BufRead>(reader: R) -> Result<Predictions, IngestError> {
    let mut predictions = Predictions::default();
    for record in records(reader) {
        let (line, text) = record?;
        let rec: PredictionRecord = serde_json::from_str(&text).map_err(|e| parse_err(line, e))?;
        let err = invalid(line, &rec.doc_id);
        if predictions.get(&rec.doc_id).is_some() {
            return Err(IngestError::DuplicateDocument {
                line,
                doc_id: rec.doc_id.clone(),
            });
        }
        let spans = rec
            .spans
            .iter()
            .map(|s| Span::new(s.label, s.start, s.end))
            .collect::<Result<Vec<_>, _>>()
            .map_err(&err)?;
        predictions
            .insert(rec.doc_id.clone(), spans)
            .map_err(&err)?;
    }
    Ok(predictions)
}

/// Writes the corpus in span form, one document per line. Every annotator is
/// listed in `annotators` so that annotators without spans survive.
pub fn write_span_form<W: Write>(corpus: &Corpus, mut out: W) -> std::io::Result<()> {
    for doc in corpus.documents() {
        let rec = SpanRecord {
            doc_id: doc.doc_id().to_string(),
            tokens: doc.tokens().to_vec(),
            annotations: doc
                .annotation_sets()
                .iter()
                .flat_map(|set| {
                    set.spans().iter().map(|s| AnnotationRecord {
                        annotator: set.annotator().id.clone(),
                        group: set.annotator().group,
                        label: s.label(),
                        start: s.start(),
                        end: s.end(),
                    })
                })
                .collect(),
            annotators: doc
                .annotation_sets()
                .iter()
                .map(|set| AnnotatorRecord {
                    annotator: set.annotator().id.clone(),
                    group: set.annotator().group,
                })
                .collect(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes the corpus in non-aggregated token form. Returns how many pairs of
/// adjacent same-label spans were merged by the encoding.
pub fn write_token_form<W: Write>(corpus: &Corpus, mut out: W) -> std::io::Result<usize> {
    let mut merges = 0;
    for doc in corpus.documents() {
        let mut token_labels = BTreeMap::new();
        let mut groups = BTreeMap::new();
        for set in doc.annotation_sets() {
            merges += adjacent_merges(set.spans());
            let tags = token_labels_from_spans(set.spans(), doc.len())
                .expect("annotation sets never overlap");
            token_labels.insert(
                set.annotator().id.clone(),
                tags.into_iter().map(|t| t.into_iter().collect()).collect(),
            );
            groups.insert(set.annotator().id.clone(), set.annotator().group);
        }
        let rec = TokenRecord {
            doc_id: doc.doc_id().to_string(),
            tokens: doc.tokens().to_vec(),
            aggregated: false,
            token_labels,
            groups,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(merges)
}

/// Writes predictions, one record per document in id order.
pub fn write_predictions<W: Write>(predictions: &Predictions, mut out: W) -> std::io::Result<()> {
    for (doc_id, spans) in predictions.iter() {
        let rec = PredictionRecord {
            doc_id: doc_id.to_string(),
            spans: spans
                .iter()
                .map(|s| SpanEntry {
                    label: s.label(),
                    start: s.start(),
                    end: s.end(),
                })
                .collect(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

//! Core domain types and the conversions between span form and per-token
//! label form.
//!
//! Spans are half-open token intervals `[start, end)`. A per-token label
//! sequence holds `Option<Label>` at every position, where `None` is the
//! non-element marker written as `N` in files and reports.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Element label. Intervention and comparator share the `I` label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    P,
    I,
    O,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::P, Label::I, Label::O];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::P => "P",
            Label::I => "I",
            Label::O => "O",
        }
    }

    /// Rank used when a token carries several labels; the highest rank wins
    /// (I over P over O).
    pub fn priority(self) -> u8 {
        match self {
            Label::I => 3,
            Label::P => 2,
            Label::O => 1,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "P" => Ok(Label::P),
            "I" => Ok(Label::I),
            "O" => Ok(Label::O),
            other => Err(ModelError::UnknownLabel(other.to_string())),
        }
    }
}

/// Renders a per-token tag, using `N` for unlabeled tokens.
pub fn tag_str(tag: Option<Label>) -> &'static str {
    tag.map_or("N", Label::as_str)
}

/// A labeled, non-empty, half-open token interval.
///
/// Field order gives the derived ordering: by start, then end, then label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    start: usize,
    end: usize,
    label: Label,
}

impl Span {
    pub fn new(label: Label, start: usize, end: usize) -> Result<Span, ModelError> {
        if start >= end {
            return Err(ModelError::EmptySpan { start, end });
        }
        Ok(Span { start, end, label })
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    /// Number of tokens covered.
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// True when the two intervals share at least one token, ignoring labels.
    pub fn overlaps(&self, other: &Span) -> bool {
        self.start.max(other.start) < self.end.min(other.end)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{},{})", self.label, self.start, self.end)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Expert,
    Crowd,
    /// Sets produced by combining individual annotators.
    Aggregate,
}

impl Group {
    pub fn as_str(self) -> &'static str {
        match self {
            Group::Expert => "expert",
            Group::Crowd => "crowd",
            Group::Aggregate => "aggregate",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "expert" => Ok(Group::Expert),
            "crowd" => Ok(Group::Crowd),
            "aggregate" => Ok(Group::Aggregate),
            other => Err(ModelError::UnknownGroup(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Annotator {
    pub id: String,
    pub group: Group,
}

impl Annotator {
    pub fn new(id: impl Into<String>, group: Group) -> Annotator {
        Annotator {
            id: id.into(),
            group,
        }
    }
}

/// One annotator's spans for one document.
///
/// Spans are kept sorted, contain no duplicates, and never overlap one
/// another (whatever their labels).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotationSet {
    annotator: Annotator,
    spans: Vec<Span>,
}

impl AnnotationSet {
    pub fn new(annotator: Annotator, mut spans: Vec<Span>) -> Result<AnnotationSet, ModelError> {
        spans.sort_unstable();
        let mut widest: Option<Span> = None;
        for pair in spans.windows(2) {
            if pair[0] == pair[1] {
                return Err(ModelError::DuplicateSpan {
                    annotator: annotator.id.clone(),
                    span: pair[0],
                });
            }
        }
        for &span in &spans {
            if let Some(prev) = widest {
                if span.start < prev.end {
                    return Err(ModelError::OverlappingSpans {
                        annotator: annotator.id.clone(),
                        first: prev,
                        second: span,
                    });
                }
            }
            if widest.is_none_or(|w| span.end > w.end) {
                widest = Some(span);
            }
        }
        Ok(AnnotationSet { annotator, spans })
    }

    pub fn annotator(&self) -> &Annotator {
        &self.annotator
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn spans_with_label(&self, label: Label) -> Vec<Span> {
        self.spans
            .iter()
            .copied()
            .filter(|s| s.label == label)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    doc_id: String,
    tokens: Vec<String>,
    annotation_sets: Vec<AnnotationSet>,
}

impl Document {
    /// Builds a document, checking span bounds and annotator uniqueness.
    /// Annotation sets are ordered by annotator id.
    pub fn new(
        doc_id: impl Into<String>,
        tokens: Vec<String>,
        mut annotation_sets: Vec<AnnotationSet>,
    ) -> Result<Document, ModelError> {
        let len = tokens.len();
        for set in &annotation_sets {
            if let Some(&span) = set.spans.iter().find(|s| s.end > len) {
                return Err(ModelError::SpanOutOfBounds { span, len });
            }
        }
        annotation_sets.sort_by(|a, b| a.annotator.id.cmp(&b.annotator.id));
        for pair in annotation_sets.windows(2) {
            if pair[0].annotator.id == pair[1].annotator.id {
                return Err(ModelError::DuplicateAnnotator(pair[0].annotator.id.clone()));
            }
        }
        Ok(Document {
            doc_id: doc_id.into(),
            tokens,
            annotation_sets,
        })
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn annotation_sets(&self) -> &[AnnotationSet] {
        &self.annotation_sets
    }

    pub fn sets_in_group(&self, group: Group) -> Vec<&AnnotationSet> {
        self.annotation_sets
            .iter()
            .filter(|s| s.annotator.group == group)
            .collect()
    }

    pub fn set_for(&self, annotator_id: &str) -> Option<&AnnotationSet> {
        self.annotation_sets
            .iter()
            .find(|s| s.annotator.id == annotator_id)
    }
}

/// An ordered collection of documents with unique ids and a fixed group per
/// annotator.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Result<Corpus, ModelError> {
        let mut ids = HashSet::new();
        let mut groups: BTreeMap<&str, Group> = BTreeMap::new();
        for doc in &documents {
            if !ids.insert(doc.doc_id.as_str()) {
                return Err(ModelError::DuplicateDocument(doc.doc_id.clone()));
            }
            for set in &doc.annotation_sets {
                let a = &set.annotator;
                match groups.get(a.id.as_str()) {
                    Some(&g) if g != a.group => {
                        return Err(ModelError::InconsistentGroup {
                            id: a.id.clone(),
                            first: g,
                            second: a.group,
                        })
                    }
                    Some(_) => {}
                    None => {
                        groups.insert(&a.id, a.group);
                    }
                }
            }
        }
        Ok(Corpus { documents })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.doc_id == doc_id)
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Groups that own at least one annotation set, in group order.
    pub fn groups(&self) -> BTreeSet<Group> {
        self.documents
            .iter()
            .flat_map(|d| d.annotation_sets.iter().map(|s| s.annotator.group))
            .collect()
    }
}

/// Predicted span sets keyed by document id. Each set obeys the same
/// invariants as an [`AnnotationSet`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Predictions {
    by_doc: BTreeMap<String, Vec<Span>>,
}

impl Predictions {
    pub fn insert(
        &mut self,
        doc_id: impl Into<String>,
        spans: Vec<Span>,
    ) -> Result<(), ModelError> {
        let doc_id = doc_id.into();
        if self.by_doc.contains_key(&doc_id) {
            return Err(ModelError::DuplicateDocument(doc_id));
        }
        let set = AnnotationSet::new(Annotator::new("prediction", Group::Aggregate), spans)?;
        self.by_doc.insert(doc_id, set.spans);
        Ok(())
    }

    pub fn get(&self, doc_id: &str) -> Option<&[Span]> {
        self.by_doc.get(doc_id).map(Vec::as_slice)
    }

    /// Documents in id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Span])> {
        self.by_doc.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.by_doc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_doc.is_empty()
    }
}

/// Per-token label sets, as found in aggregated annotations where a token
/// may carry several labels at once.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TokenLabeling(pub Vec<BTreeSet<Label>>);

impl TokenLabeling {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Reads a labeling that must hold at most one label per token.
    pub fn into_single(self) -> Result<Vec<Option<Label>>, ModelError> {
        self.0
            .into_iter()
            .enumerate()
            .map(|(index, set)| match set.len() {
                0 => Ok(None),
                1 => Ok(set.into_iter().next()),
                _ => Err(ModelError::MultiLabelToken {
                    index,
                    labels: set.into_iter().collect(),
                }),
            })
            .collect()
    }
}

/// Maximal runs of identical non-`N` tags, one span per run.
pub fn spans_from_token_labels(tags: &[Option<Label>]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut run: Option<(Label, usize)> = None;
    for (i, &tag) in tags.iter().enumerate() {
        match (run, tag) {
            (Some((label, _)), Some(t)) if label == t => {}
            _ => {
                if let Some((label, start)) = run.take() {
                    spans.push(Span {
                        start,
                        end: i,
                        label,
                    });
                }
                run = tag.map(|t| (t, i));
            }
        }
    }
    if let Some((label, start)) = run {
        spans.push(Span {
            start,
            end: tags.len(),
            label,
        });
    }
    spans
}

/// Paints spans onto a sequence of `len` tags. Adjacent same-label spans are
/// painted as one run; see [`adjacent_merges`].
pub fn token_labels_from_spans(
    spans: &[Span],
    len: usize,
) -> Result<Vec<Option<Label>>, ModelError> {
    let mut tags: Vec<Option<Label>> = vec![None; len];
    for &span in spans {
        if span.end > len {
            return Err(ModelError::SpanOutOfBounds { span, len });
        }
        for (index, tag) in tags.iter_mut().enumerate().take(span.end).skip(span.start) {
            match *tag {
                Some(existing) if existing != span.label => {
                    return Err(ModelError::TokenOverlap { index })
                }
                _ => *tag = Some(span.label),
            }
        }
    }
    Ok(tags)
}

/// Number of same-label span pairs where one ends exactly where the other
/// starts. Each such pair collapses into one span after a round trip through
/// per-token form.
pub fn adjacent_merges(spans: &[Span]) -> usize {
    let ends: HashSet<(Label, usize)> = spans.iter().map(|s| (s.label, s.end)).collect();
    spans
        .iter()
        .filter(|s| ends.contains(&(s.label, s.start)))
        .count()
}

/// Collapses each token's label set to its highest-priority member.
pub fn resolve_multilabel(labeling: &TokenLabeling) -> Vec<Option<Label>> {
    labeling
        .0
        .iter()
        .map(|set| set.iter().copied().max_by_key(|l| l.priority()))
        .collect()
}

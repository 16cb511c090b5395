//! Deterministic synthetic corpora with simulated annotator boundary jitter.
//!
//! Every document draws a set of latent spans, then each annotator copies
//! them with independent boundary shifts and drops. Random draws are the same
//! whatever the jitter probability, so for a fixed seed the shifted
//! boundaries at a lower probability are a subset of those at a higher one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::SynthError;
use crate::model::{AnnotationSet, Annotator, Corpus, Document, Group, Label, Span};

const MIN_TOKENS: usize = 20;
const MAX_TOKENS: usize = 60;
const MAX_GAP: usize = 6;
const MAX_SPAN_LEN: usize = 10;

/// Id of the latent-truth annotation set, when requested.
pub const TRUTH_ANNOTATOR: &str = "truth";

#[derive(Clone, Debug, PartialEq)]
pub struct JitterParams {
    /// Probability that each boundary is shifted.
    pub jitter: f64,
    /// Largest shift in tokens; shifts are uniform in `1..=max_shift`.
    pub max_shift: usize,
    /// Probability that an annotator misses a latent span.
    pub drop: f64,
    /// Labels the latent spans are drawn from.
    pub labels: Vec<Label>,
    pub seed: u64,
}

impl Default for JitterParams {
    fn default() -> Self {
        JitterParams {
            jitter: 0.5,
            max_shift: 2,
            drop: 0.0,
            labels: Label::ALL.to_vec(),
            seed: 0,
        }
    }
}

impl JitterParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(0.0..=1.0).contains(&self.jitter) {
            return Err(SynthError::Probability("jitter", self.jitter));
        }
        if !(0.0..=1.0).contains(&self.drop) {
            return Err(SynthError::Probability("drop", self.drop));
        }
        if self.max_shift == 0 {
            return Err(SynthError::ZeroShift);
        }
        if self.labels.is_empty() {
            return Err(SynthError::NoLabels);
        }
        Ok(())
    }
}

/// How generated annotators are split into groups.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GroupAssignment {
    /// The first `experts` annotators are experts, the rest crowd.
    pub experts: usize,
    /// Also emit the latent spans as an aggregated set named
    /// [`TRUTH_ANNOTATOR`].
    pub include_truth: bool,
}

pub fn generate(
    params: &JitterParams,
    n_docs: usize,
    n_annotators: usize,
    groups: &GroupAssignment,
) -> Result<Corpus, SynthError> {
    params.validate()?;
    if groups.experts > n_annotators {
        return Err(SynthError::TooManyExperts {
            experts: groups.experts,
            annotators: n_annotators,
        });
    }
    let annotators: Vec<Annotator> = (0..n_annotators)
        .map(|i| {
            if i < groups.experts {
                Annotator::new(format!("expert-{i:03}"), Group::Expert)
            } else {
                Annotator::new(format!("crowd-{:03}", i - groups.experts), Group::Crowd)
            }
        })
        .collect();
    let documents: Vec<Document> = (0..n_docs)
        .into_par_iter()
        .map(|i| generate_document(params, i, &annotators, groups.include_truth))
        .collect();
    Ok(Corpus::new(documents).expect("generated ids and groups are unique"))
}

fn generate_document(
    params: &JitterParams,
    index: usize,
    annotators: &[Annotator],
    include_truth: bool,
) -> Document {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(index as u64);

    let len = rng.random_range(MIN_TOKENS..=MAX_TOKENS);
    let latent = latent_spans(&mut rng, len, &params.labels);

    let mut sets: Vec<AnnotationSet> = annotators
        .iter()
        .map(|a| {
            let spans = latent
                .iter()
                .filter_map(|s| perturb(&mut rng, params, s, len))
                .collect();
            AnnotationSet::new(a.clone(), repair_overlaps(spans))
                .expect("repaired spans never overlap")
        })
        .collect();
    if include_truth {
        sets.push(
            AnnotationSet::new(Annotator::new(TRUTH_ANNOTATOR, Group::Aggregate), latent)
                .expect("latent spans are disjoint"),
        );
    }
    let tokens = (0..len).map(|t| format!("w{t}")).collect();
    Document::new(format!("synth-{index:05}"), tokens, sets)
        .expect("spans are clamped to the document")
}

/// Disjoint spans separated by at least one unlabeled token.
fn latent_spans(rng: &mut ChaCha8Rng, len: usize, labels: &[Label]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut cursor = rng.random_range(0..MAX_GAP);
    loop {
        let width = rng.random_range(1..=MAX_SPAN_LEN);
        let label = labels[rng.random_range(0..labels.len())];
        if cursor + width > len {
            break;
        }
        spans.push(Span::new(label, cursor, cursor + width).expect("width >= 1"));
        cursor += width + rng.random_range(1..=MAX_GAP);
    }
    spans
}

/// Draws a boundary shift in `-max..=max \ {0}`. Always consumes the same
/// number of draws; returns 0 when the boundary stays put.
fn draw_shift(rng: &mut ChaCha8Rng, p: f64, max_shift: usize) -> isize {
    let hit = rng.random::<f64>() < p;
    let magnitude = rng.random_range(1..=max_shift) as isize;
    let negative = rng.random::<bool>();
    match (hit, negative) {
        (false, _) => 0,
        (true, true) => -magnitude,
        (true, false) => magnitude,
    }
}

fn perturb(rng: &mut ChaCha8Rng, params: &JitterParams, span: &Span, len: usize) -> Option<Span> {
    let dropped = rng.random::<f64>() < params.drop;
    let ds = draw_shift(rng, params.jitter, params.max_shift);
    let de = draw_shift(rng, params.jitter, params.max_shift);
    if dropped {
        return None;
    }
    let mut start = span.start().saturating_add_signed(ds).min(len - 1);
    let mut end = span.end().saturating_add_signed(de).clamp(1, len);
    if end <= start {
        if ds != 0 {
            start = end - 1;
        } else {
            end = start + 1;
        }
    }
    Some(Span::new(span.label(), start, end).expect("clamped to non-empty"))
}

/// Sorts spans and truncates each one to start after every earlier span;
/// spans emptied by truncation are dropped.
fn repair_overlaps(mut spans: Vec<Span>) -> Vec<Span> {
    spans.sort_unstable();
    let mut out: Vec<Span> = Vec::with_capacity(spans.len());
    let mut reach = 0;
    for s in spans {
        let start = s.start().max(reach);
        if start < s.end() {
            out.push(Span::new(s.label(), start, s.end()).expect("start < end"));
            reach = s.end();
        }
    }
    out
}

/// A random valid annotation set on a document of `len` tokens: disjoint
/// spans of random labels and widths, placed left to right. Used by property
/// tests and benchmarks.
pub fn random_span_set<R: Rng>(rng: &mut R, len: usize, max_spans: usize) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut cursor = 0;
    for _ in 0..rng.random_range(0..=max_spans) {
        if cursor >= len {
            break;
        }
        cursor += rng.random_range(0..=(len - cursor) / 2);
        if cursor >= len {
            break;
        }
        let width = rng.random_range(1..=(len - cursor).min(MAX_SPAN_LEN));
        let label = Label::ALL[rng.random_range(0..3)];
        spans.push(Span::new(label, cursor, cursor + width).expect("width >= 1"));
        cursor += width;
    }
    spans
}

//! Span match predicates for the exact, one-side-boundary and token-overlap
//! criteria, and existential match counting between two span sets.

use std::collections::HashSet;
use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use crate::model::{Label, Span};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MatchCriterion {
    /// Same label and both boundaries equal.
    Exact,
    /// Same label, at least one boundary equal, and at least one shared token.
    OneSideBoundary,
    /// Same label and at least one shared token.
    TokenOverlap,
}

impl MatchCriterion {
    /// Ordered from strictest to most relaxed.
    pub const ALL: [MatchCriterion; 3] = [
        MatchCriterion::Exact,
        MatchCriterion::OneSideBoundary,
        MatchCriterion::TokenOverlap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MatchCriterion::Exact => "exact",
            MatchCriterion::OneSideBoundary => "ob",
            MatchCriterion::TokenOverlap => "to",
        }
    }
}

impl fmt::Display for MatchCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MatchCriterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(MatchCriterion::Exact),
            "ob" => Ok(MatchCriterion::OneSideBoundary),
            "to" => Ok(MatchCriterion::TokenOverlap),
            other => Err(format!("unknown criterion '{other}'")),
        }
    }
}

/// Whether `predicted` counts as a match for `gold`. Symmetric in its two
/// span arguments; label mismatch never matches.
pub fn matches(criterion: MatchCriterion, predicted: &Span, gold: &Span) -> bool {
    if predicted.label() != gold.label() {
        return false;
    }
    match criterion {
        MatchCriterion::Exact => predicted.start() == gold.start() && predicted.end() == gold.end(),
        MatchCriterion::OneSideBoundary => {
            (predicted.start() == gold.start() || predicted.end() == gold.end())
                && predicted.overlaps(gold)
        }
        MatchCriterion::TokenOverlap => predicted.overlaps(gold),
    }
}

/// Existential match counts between a predicted and a gold span set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct MatchCounts {
    /// Predicted spans matching at least one gold span.
    pub matched_predicted: usize,
    /// Gold spans matched by at least one predicted span.
    pub matched_gold: usize,
    pub total_predicted: usize,
    pub total_gold: usize,
}

impl MatchCounts {
    pub fn new(
        matched_predicted: usize,
        matched_gold: usize,
        total_predicted: usize,
        total_gold: usize,
    ) -> MatchCounts {
        MatchCounts {
            matched_predicted,
            matched_gold,
            total_predicted,
            total_gold,
        }
    }

    /// The same counts with the gold and predicted roles exchanged.
    pub fn swapped(self) -> MatchCounts {
        MatchCounts {
            matched_predicted: self.matched_gold,
            matched_gold: self.matched_predicted,
            total_predicted: self.total_gold,
            total_gold: self.total_predicted,
        }
    }
}

impl Add for MatchCounts {
    type Output = MatchCounts;

    fn add(self, rhs: MatchCounts) -> MatchCounts {
        MatchCounts {
            matched_predicted: self.matched_predicted + rhs.matched_predicted,
            matched_gold: self.matched_gold + rhs.matched_gold,
            total_predicted: self.total_predicted + rhs.total_predicted,
            total_gold: self.total_gold + rhs.total_gold,
        }
    }
}

impl std::iter::Sum for MatchCounts {
    fn sum<I: Iterator<Item = MatchCounts>>(iter: I) -> MatchCounts {
        iter.fold(MatchCounts::default(), Add::add)
    }
}

/// Counts matched spans on both sides. Each span is matched independently
/// (many-to-many); no one-to-one assignment is made.
///
/// Works on arbitrary span slices, overlapping or not, in
/// O((p + g) log(p + g)).
pub fn count_matches(criterion: MatchCriterion, predicted: &[Span], gold: &[Span]) -> MatchCounts {
    MatchCounts {
        matched_predicted: count_matched(criterion, predicted, gold),
        matched_gold: count_matched(criterion, gold, predicted),
        total_predicted: predicted.len(),
        total_gold: gold.len(),
    }
}

fn label_index(label: Label) -> usize {
    match label {
        Label::P => 0,
        Label::I => 1,
        Label::O => 2,
    }
}

/// Number of `probes` that match at least one of `targets`.
fn count_matched(criterion: MatchCriterion, probes: &[Span], targets: &[Span]) -> usize {
    if probes.is_empty() || targets.is_empty() {
        return 0;
    }
    match criterion {
        MatchCriterion::Exact => {
            let index: HashSet<&Span> = targets.iter().collect();
            probes.iter().filter(|p| index.contains(p)).count()
        }
        MatchCriterion::OneSideBoundary => {
            // two non-empty spans sharing a boundary always share a token
            let starts: HashSet<(Label, usize)> =
                targets.iter().map(|t| (t.label(), t.start())).collect();
            let ends: HashSet<(Label, usize)> =
                targets.iter().map(|t| (t.label(), t.end())).collect();
            probes
                .iter()
                .filter(|p| {
                    starts.contains(&(p.label(), p.start())) || ends.contains(&(p.label(), p.end()))
                })
                .count()
        }
        MatchCriterion::TokenOverlap => {
            let index = OverlapIndex::new(targets);
            probes.iter().filter(|p| index.any_overlap(p)).count()
        }
    }
}

/// Per-label targets sorted by start with a running maximum of ends, so a
/// probe overlaps some target iff the widest target starting before the
/// probe's end reaches past the probe's start.
struct OverlapIndex {
    starts: [Vec<usize>; 3],
    max_end: [Vec<usize>; 3],
}

impl OverlapIndex {
    fn new(targets: &[Span]) -> OverlapIndex {
        let mut by_label: [Vec<(usize, usize)>; 3] = Default::default();
        for t in targets {
            by_label[label_index(t.label())].push((t.start(), t.end()));
        }
        let mut starts: [Vec<usize>; 3] = Default::default();
        let mut max_end: [Vec<usize>; 3] = Default::default();
        for (i, mut intervals) in by_label.into_iter().enumerate() {
            intervals.sort_unstable();
            let mut running = 0;
            for (s, e) in intervals {
                running = running.max(e);
                starts[i].push(s);
                max_end[i].push(running);
            }
        }
        OverlapIndex { starts, max_end }
    }

    fn any_overlap(&self, probe: &Span) -> bool {
        let i = label_index(probe.label());
        let k = self.starts[i].partition_point(|&s| s < probe.end());
        k > 0 && self.max_end[i][k - 1] > probe.start()
    }
}

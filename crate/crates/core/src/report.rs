//! Report tables and their deterministic CSV / JSON rendering.

use std::collections::BTreeMap;
use std::fmt;

use crate::matching::MatchCriterion;
use crate::metrics::{AggregateStat, ScoreTriple};
use crate::model::Label;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LabelKey {
    Label(Label),
    /// Pooled over all labels.
    Micro,
}

impl fmt::Display for LabelKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelKey::Label(l) => l.fmt(f),
            LabelKey::Micro => f.write_str("micro"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Precision,
    Recall,
    F1,
    /// Span length in tokens.
    Length,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
            Metric::Length => "length",
        }
    }
}

/// Row identity. The derived ordering (cohort, label, criterion, metric) is
/// the emission order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowKey {
    pub cohort: String,
    pub label: LabelKey,
    /// `None` for rows that do not depend on a criterion; rendered as `-`.
    pub criterion: Option<MatchCriterion>,
    pub metric: Metric,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl From<AggregateStat> for Cell {
    fn from(s: AggregateStat) -> Cell {
        Cell {
            mean: s.mean,
            std: s.std,
            n: s.n,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReportTable {
    rows: BTreeMap<RowKey, Cell>,
    metadata: BTreeMap<String, String>,
}

impl ReportTable {
    pub fn new() -> ReportTable {
        ReportTable::default()
    }

    pub fn insert(&mut self, key: RowKey, cell: Cell) {
        self.rows.insert(key, cell);
    }

    /// Adds precision, recall and F1 rows for one scored triple computed
    /// from `n` items; the std column is 0.
    pub fn insert_triple(
        &mut self,
        cohort: &str,
        label: LabelKey,
        criterion: MatchCriterion,
        triple: ScoreTriple,
        n: usize,
    ) {
        for (metric, value) in [
            (Metric::Precision, triple.precision),
            (Metric::Recall, triple.recall),
            (Metric::F1, triple.f1),
        ] {
            self.insert(
                RowKey {
                    cohort: cohort.to_string(),
                    label,
                    criterion: Some(criterion),
                    metric,
                },
                Cell {
                    mean: value,
                    std: 0.0,
                    n,
                },
            );
        }
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.insert(key.into(), value.into());
    }

    pub fn rows(&self) -> impl Iterator<Item = (&RowKey, &Cell)> {
        self.rows.iter()
    }

    pub fn get(&self, key: &RowKey) -> Option<&Cell> {
        self.rows.get(key)
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

pub const CSV_HEADER: &str = "cohort,label,criterion,metric,mean,std,n";

/// Six-decimal fixed point. Rounding is half-to-even on the exact binary
/// value, so `1/128` renders as `0.007812`.
pub fn fixed6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn criterion_str(c: Option<MatchCriterion>) -> &'static str {
    c.map_or("-", MatchCriterion::as_str)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub fn emit_report(table: &ReportTable, format: ReportFormat) -> Vec<u8> {
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for (key, cell) in table.rows() {
                let fields = [
                    csv_field(&key.cohort),
                    key.label.to_string(),
                    criterion_str(key.criterion).to_string(),
                    key.metric.as_str().to_string(),
                    fixed6(cell.mean),
                    fixed6(cell.std),
                    cell.n.to_string(),
                ];
                out.push_str(&fields.join(","));
                out.push('\n');
            }
        }
        ReportFormat::Json => {
            out.push_str("{\n  \"metadata\": {");
            let meta: Vec<String> = table
                .metadata()
                .iter()
                .map(|(k, v)| format!("\n    {}: {}", json_str(k), json_str(v)))
                .collect();
            out.push_str(&meta.join(","));
            out.push_str(if meta.is_empty() { "},\n" } else { "\n  },\n" });
            out.push_str("  \"rows\": [");
            let rows: Vec<String> = table
                .rows()
                .map(|(key, cell)| {
                    format!(
                        "\n    {{\"cohort\": {}, \"label\": {}, \"criterion\": {}, \"metric\": {}, \"mean\": {}, \"std\": {}, \"n\": {}}}",
                        json_str(&key.cohort),
                        json_str(&key.label.to_string()),
                        json_str(criterion_str(key.criterion)),
                        json_str(key.metric.as_str()),
                        fixed6(cell.mean),
                        fixed6(cell.std),
                        cell.n
                    )
                })
                .collect();
            out.push_str(&rows.join(","));
            out.push_str(if rows.is_empty() {
                "]\n}\n"
            } else {
                "\n  ]\n}\n"
            });
        }
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(cohort: &str, label: LabelKey, c: Option<MatchCriterion>, m: Metric) -> RowKey {
        RowKey {
            cohort: cohort.into(),
            label,
            criterion: c,
            metric: m,
        }
    }

    fn sample() -> ReportTable {
        let mut t = ReportTable::new();
        t.insert(
            key(
                "crowd",
                LabelKey::Label(Label::O),
                Some(MatchCriterion::Exact),
                Metric::F1,
            ),
            Cell {
                mean: 0.5,
                std: 0.25,
                n: 3,
            },
        );
        t.insert(
            key(
                "crowd",
                LabelKey::Label(Label::P),
                Some(MatchCriterion::TokenOverlap),
                Metric::F1,
            ),
            Cell {
                mean: 0.1875,
                std: 0.0,
                n: 4,
            },
        );
        t.set_meta("corpus_sha256", "abc");
        t
    }

    #[test]
    fn rounding() {
        assert_eq!(fixed6(0.1875), "0.187500");
        // exact binary ties
        assert_eq!(fixed6(1.0 / 128.0), "0.007812");
        assert_eq!(fixed6(3.0 / 128.0), "0.023438");
        assert_eq!(fixed6(-0.0), "0.000000");
        assert_eq!(fixed6(1.0), "1.000000");
    }

    #[test]
    fn csv_layout_and_order() {
        let text = String::from_utf8(emit_report(&sample(), ReportFormat::Csv)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "crowd,P,to,f1,0.187500,0.000000,4");
        assert_eq!(lines[2], "crowd,O,exact,f1,0.500000,0.250000,3");
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 7));
    }

    #[test]
    fn json_is_valid_and_stable() {
        let a = emit_report(&sample(), ReportFormat::Json);
        assert_eq!(a, emit_report(&sample(), ReportFormat::Json));
        let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
        assert_eq!(v["rows"][0]["mean"].as_f64(), Some(0.1875));
        assert_eq!(v["metadata"]["corpus_sha256"], "abc");
        let text = String::from_utf8(a).unwrap();
        assert!(text.contains("\"mean\": 0.187500"));

        let empty = emit_report(&ReportTable::new(), ReportFormat::Json);
        serde_json::from_slice::<serde_json::Value>(&empty).unwrap();
    }

    #[test]
    fn stats_rows_render_dash_criterion() {
        let mut t = ReportTable::new();
        t.insert(
            key("expert", LabelKey::Label(Label::I), None, Metric::Length),
            Cell {
                mean: 3.0,
                std: 1.0,
                n: 2,
            },
        );
        let text = String::from_utf8(emit_report(&t, ReportFormat::Csv)).unwrap();
        assert_eq!(
            text.lines().nth(1),
            Some("expert,I,-,length,3.000000,1.000000,2")
        );
    }
}

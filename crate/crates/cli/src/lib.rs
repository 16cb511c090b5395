//! Command-line front end: argument definitions and the five subcommands.
//!
//! Each command builds its whole output in memory; [`write_output`] then
//! writes it to standard output or atomically to a file, so a failed run
//! never leaves a partial file behind.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};
use thiserror::Error;

use spanagree_core::io::{
    parse_corpus, parse_corpus_with_format, parse_predictions, write_span_form, write_token_form,
    CorpusFormat,
};
use spanagree_core::synth::{generate, GroupAssignment, JitterParams};
use spanagree_core::{
    cross_group_agreement, emit_report, evaluate_predictions, span_length_stats,
    within_group_agreement, Corpus, EmptyPair, GoldSource, Group, IngestError, Label, LabelKey,
    MatchCriterion, Metric, MetricsError, RecallMode, ReportFormat, ReportTable, RowKey, Scoring,
    SynthError,
};

#[derive(Debug, Parser)]
#[command(
    name = "spanagree",
    version,
    about = "Exact and relaxed span agreement for annotated corpora"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Within-group or cross-group annotator agreement.
    Agree(AgreeArgs),
    /// Evaluate predicted spans against gold annotations.
    Eval(EvalArgs),
    /// Span length statistics per group and label.
    Stats(StatsArgs),
    /// Convert between token-form and span-form corpora.
    Convert(ConvertArgs),
    /// Generate a synthetic corpus with annotator boundary jitter.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Exact,
    Ob,
    To,
    All,
}

impl CriterionArg {
    fn criteria(self) -> Vec<MatchCriterion> {
        match self {
            CriterionArg::Exact => vec![MatchCriterion::Exact],
            CriterionArg::Ob => vec![MatchCriterion::OneSideBoundary],
            CriterionArg::To => vec![MatchCriterion::TokenOverlap],
            CriterionArg::All => MatchCriterion::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelArg {
    #[value(name = "P")]
    P,
    #[value(name = "I")]
    I,
    #[value(name = "O")]
    O,
    All,
}

impl LabelArg {
    fn labels(self) -> Vec<Label> {
        match self {
            LabelArg::P => vec![Label::P],
            LabelArg::I => vec![Label::I],
            LabelArg::O => vec![Label::O],
            LabelArg::All => Label::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupArg {
    Expert,
    Crowd,
    Aggregate,
}

impl From<GroupArg> for Group {
    fn from(g: GroupArg) -> Group {
        match g {
            GroupArg::Expert => Group::Expert,
            GroupArg::Crowd => Group::Crowd,
            GroupArg::Aggregate => Group::Aggregate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmptyPairArg {
    One,
    Zero,
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RecallArg {
    Bounded,
    PredictionCount,
}

/// Flags shared by the report-producing subcommands.
#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub criterion: CriterionArg,
    #[arg(long, value_enum, default_value = "all")]
    pub label: LabelArg,
    /// Report path; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// Score given when neither side has spans for a label.
    #[arg(long, value_enum, default_value = "one")]
    pub empty_pair: EmptyPairArg,
    #[arg(long, value_enum, default_value = "bounded")]
    pub recall: RecallArg,
}

impl ReportArgs {
    fn scoring(&self) -> Scoring {
        Scoring {
            empty_pair: match self.empty_pair {
                EmptyPairArg::One => EmptyPair::One,
                EmptyPairArg::Zero => EmptyPair::Zero,
                EmptyPairArg::Skip => EmptyPair::Skip,
            },
            recall: match self.recall {
                RecallArg::Bounded => RecallMode::Bounded,
                RecallArg::PredictionCount => RecallMode::PredictionCount,
            },
        }
    }

    fn report_format(&self) -> ReportFormat {
        match self.format {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }

    fn stamp(&self, table: &mut ReportTable) {
        let scoring = self.scoring();
        table.set_meta("criterion", value_name(self.criterion));
        table.set_meta("label", value_name(self.label));
        table.set_meta("empty_pair", scoring.empty_pair.as_str());
        table.set_meta("recall", scoring.recall.as_str());
    }
}

fn value_name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value()
        .map(|p| p.get_name().to_string())
        .unwrap_or_default()
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("cohort").required(true).args(["group", "gold_group"])))]
pub struct AgreeArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Within-group agreement among annotators of this group.
    #[arg(long, value_enum)]
    pub group: Option<GroupArg>,
    /// Cross-group agreement: annotators of this group are gold.
    #[arg(long, value_enum, requires = "pred_group")]
    pub gold_group: Option<GroupArg>,
    /// Cross-group agreement: annotators of this group are predictions.
    #[arg(long, value_enum, requires = "gold_group", conflicts_with = "group")]
    pub pred_group: Option<GroupArg>,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    /// Annotator whose set is gold; defaults to each document's aggregated set.
    #[arg(long)]
    pub gold_annotator: Option<String>,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Restrict to one group; every group present otherwise.
    #[arg(long, value_enum)]
    pub group: Option<GroupArg>,
    #[arg(long, value_enum, default_value = "all")]
    pub label: LabelArg,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Args)]
pub struct ConvertArgs {
    /// Token-form input is written as span form, span-form input as token form.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn probability(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub docs: usize,
    #[arg(long, default_value_t = 4)]
    pub annotators: usize,
    /// How many of the annotators are experts; the rest are crowd.
    #[arg(long, default_value_t = 0)]
    pub experts: usize,
    /// Probability that each span boundary is shifted.
    #[arg(long, default_value_t = 0.5, value_parser = probability)]
    pub jitter: f64,
    #[arg(long, default_value_t = 2, value_parser = positive)]
    pub max_shift: usize,
    /// Probability that an annotator misses a span.
    #[arg(long, default_value_t = 0.0, value_parser = probability)]
    pub drop: f64,
    /// Also write the latent spans as an aggregated annotator named `truth`.
    #[arg(long)]
    pub truth: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Ingest {
        path: PathBuf,
        #[source]
        source: Box<IngestError>,
    },
    #[error("{0}")]
    Data(MetricsError),
    #[error("{0}")]
    NoData(String),
    #[error("writing output: {0}")]
    Output(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Ingest { .. } | CliError::Data(_) => 3,
            CliError::NoData(_) => 4,
            CliError::Output(_) => 1,
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Ingest {
        path: path.to_path_buf(),
        source: Box::new(IngestError::Io(e)),
    })
}

fn load_corpus(path: &Path, table: &mut ReportTable) -> Result<Corpus, CliError> {
    let bytes = read_input(path)?;
    table.set_meta("corpus_sha256", sha256(&bytes));
    parse_corpus(bytes.as_slice()).map_err(|source| CliError::Ingest {
        path: path.to_path_buf(),
        source: Box::new(source),
    })
}

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn warn(msg: impl std::fmt::Display) {
    eprintln!("warning: {msg}");
}

fn key(cohort: &str, label: LabelKey, criterion: Option<MatchCriterion>, metric: Metric) -> RowKey {
    RowKey {
        cohort: cohort.to_string(),
        label,
        criterion,
        metric,
    }
}

/// Within-group rows (`f1` per label and criterion) or, with a gold and a
/// predicted group, cross-group precision / recall / f1 rows.
pub fn cmd_agree(args: &AgreeArgs) -> Result<ReportTable, CliError> {
    let mut table = ReportTable::new();
    let corpus = load_corpus(&args.corpus, &mut table)?;
    args.report.stamp(&mut table);
    table.set_meta("command", "agree");
    let scoring = args.report.scoring();
    let mut missing = Vec::new();

    match (args.group, args.gold_group, args.pred_group) {
        (Some(group), None, None) => {
            let group = Group::from(group);
            table.set_meta("group", group.as_str());
            for label in args.report.label.labels() {
                for criterion in args.report.criterion.criteria() {
                    match within_group_agreement(&corpus, group, criterion, label, &scoring) {
                        Ok(stat) => table.insert(
                            key(
                                group.as_str(),
                                LabelKey::Label(label),
                                Some(criterion),
                                Metric::F1,
                            ),
                            stat.into(),
                        ),
                        Err(e) => missing.push(e),
                    }
                }
            }
        }
        (None, Some(gold), Some(pred)) => {
            let (gold, pred) = (Group::from(gold), Group::from(pred));
            let cohort = format!("{gold}>{pred}");
            table.set_meta("gold_group", gold.as_str());
            table.set_meta("pred_group", pred.as_str());
            for label in args.report.label.labels() {
                for criterion in args.report.criterion.criteria() {
                    match cross_group_agreement(&corpus, gold, pred, criterion, label, &scoring) {
                        Ok(stat) => {
                            for (metric, s) in [
                                (Metric::Precision, stat.precision),
                                (Metric::Recall, stat.recall),
                                (Metric::F1, stat.f1),
                            ] {
                                table.insert(
                                    key(&cohort, LabelKey::Label(label), Some(criterion), metric),
                                    s.into(),
                                );
                            }
                        }
                        Err(e) => missing.push(e),
                    }
                }
            }
        }
        _ => {
            return Err(CliError::Usage(
                "agree needs --group, or both --gold-group and --pred-group".into(),
            ))
        }
    }
    finish(table, missing)
}

fn finish(table: ReportTable, missing: Vec<MetricsError>) -> Result<ReportTable, CliError> {
    if table.is_empty() {
        let msg = missing
            .first()
            .map_or_else(|| "nothing to report".to_string(), ToString::to_string);
        return Err(CliError::NoData(msg));
    }
    for e in missing {
        warn(format_args!("row omitted: {e}"));
    }
    Ok(table)
}

/// Per-label and micro-averaged precision / recall / f1 of predictions.
pub fn cmd_eval(args: &EvalArgs) -> Result<ReportTable, CliError> {
    let mut table = ReportTable::new();
    let corpus = load_corpus(&args.corpus, &mut table)?;
    let pred_bytes = read_input(&args.predictions)?;
    table.set_meta("predictions_sha256", sha256(&pred_bytes));
    let predictions =
        parse_predictions(pred_bytes.as_slice()).map_err(|source| CliError::Ingest {
            path: args.predictions.clone(),
            source: Box::new(source),
        })?;
    args.report.stamp(&mut table);
    table.set_meta("command", "eval");
    let gold = match &args.gold_annotator {
        Some(id) => {
            table.set_meta("gold", format!("annotator:{id}"));
            GoldSource::Annotator(id.clone())
        }
        None => {
            table.set_meta("gold", "aggregated");
            GoldSource::Aggregated
        }
    };
    let scoring = args.report.scoring();
    let labels = args.report.label.labels();
    let mut skipped = Vec::new();
    for criterion in args.report.criterion.criteria() {
        let ev = evaluate_predictions(&corpus, &gold, &predictions, criterion, &scoring)
            .map_err(CliError::Data)?;
        let rows = ev
            .per_label
            .iter()
            .filter(|(l, _)| labels.contains(l))
            .map(|&(l, t)| (LabelKey::Label(l), t))
            .chain(std::iter::once((LabelKey::Micro, ev.micro)));
        for (label, triple) in rows {
            match triple {
                Some(t) => table.insert_triple("eval", label, criterion, t, ev.documents),
                None => skipped.push(MetricsError::NoQualifyingDocuments(format!(
                    "{label} ({criterion}): no gold or predicted spans"
                ))),
            }
        }
    }
    finish(table, skipped)
}

/// Span length rows per group and label; combinations without spans are
/// omitted with a warning.
pub fn cmd_stats(args: &StatsArgs) -> Result<ReportTable, CliError> {
    let mut table = ReportTable::new();
    let corpus = load_corpus(&args.corpus, &mut table)?;
    table.set_meta("command", "stats");
    table.set_meta("label", value_name(args.label));
    let groups: Vec<Group> = match args.group {
        Some(g) => vec![g.into()],
        None => corpus.groups().into_iter().collect(),
    };
    let mut missing = Vec::new();
    for group in groups {
        for label in args.label.labels() {
            match span_length_stats(&corpus, group, label) {
                Ok(s) => table.insert(
                    key(group.as_str(), LabelKey::Label(label), None, Metric::Length),
                    s.stat.into(),
                ),
                Err(e) => missing.push(e),
            }
        }
    }
    finish(table, missing)
}

/// Converts token form to span form or span form to token form. Returns
/// the output bytes and the number of merged adjacent span pairs.
pub fn cmd_convert(args: &ConvertArgs) -> Result<(Vec<u8>, usize), CliError> {
    let bytes = read_input(&args.corpus)?;
    let (corpus, format) =
        parse_corpus_with_format(bytes.as_slice()).map_err(|source| CliError::Ingest {
            path: args.corpus.clone(),
            source: Box::new(source),
        })?;
    let mut out = Vec::new();
    let merges = match format {
        Some(CorpusFormat::Token) | None => {
            write_span_form(&corpus, &mut out)?;
            0
        }
        Some(CorpusFormat::Span) => write_token_form(&corpus, &mut out)?,
    };
    Ok((out, merges))
}

pub fn cmd_synth(args: &SynthArgs) -> Result<Vec<u8>, CliError> {
    let params = JitterParams {
        jitter: args.jitter,
        max_shift: args.max_shift,
        drop: args.drop,
        labels: Label::ALL.to_vec(),
        seed: args.seed,
    };
    let groups = GroupAssignment {
        experts: args.experts,
        include_truth: args.truth,
    };
    let corpus = generate(&params, args.docs, args.annotators, &groups)?;
    let mut out = Vec::new();
    write_span_form(&corpus, &mut out)?;
    Ok(out)
}

/// Writes to `path` through a temporary file in the same directory, or to
/// standard output.
pub fn write_output(path: Option<&Path>, bytes: &[u8]) -> io::Result<()> {
    match path {
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(bytes)?;
            tmp.as_file().sync_all()?;
            tmp.persist(path).map_err(|e| e.error)?;
            Ok(())
        }
    }
}

fn emit(table: &ReportTable, report: &ReportArgs) -> Result<(), CliError> {
    let bytes = emit_report(table, report.report_format());
    Ok(write_output(report.output.as_deref(), &bytes)?)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Agree(args) => emit(&cmd_agree(args)?, &args.report),
        Command::Eval(args) => emit(&cmd_eval(args)?, &args.report),
        Command::Stats(args) => {
            let table = cmd_stats(args)?;
            let format = match args.format {
                FormatArg::Json => ReportFormat::Json,
                FormatArg::Csv => ReportFormat::Csv,
            };
            Ok(write_output(
                args.output.as_deref(),
                &emit_report(&table, format),
            )?)
        }
        Command::Convert(args) => {
            let (bytes, merges) = cmd_convert(args)?;
            write_output(args.output.as_deref(), &bytes)?;
            if merges > 0 {
                warn(format_args!(
                    "{merges} pair(s) of adjacent same-label spans merged in token form"
                ));
            } else {
                eprintln!("merged adjacent spans: 0");
            }
            Ok(())
        }
        Command::Synth(args) => {
            let bytes = cmd_synth(args)?;
            Ok(write_output(args.output.as_deref(), &bytes)?)
        }
    }
}

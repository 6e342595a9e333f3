//! Command implementations behind the `punctkit` binary.
//!
//! Every command returns a summary value on success so that the binary and
//! the tests share one code path; the binary only prints and maps errors to
//! exit codes.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use punctkit::eval::{attachment_scores, filter_pairs, EvalReport, SentenceFilter};
use punctkit::parser::{self, ParserMode, ParserModel, TrainingMeta};
use punctkit::perturb::{inject_document, strip_document, PerturbConfig};
use punctkit::{read_conll, validate, write_conll, Document, PunctClass};
use serde::Serialize;

pub mod config;
pub mod experiment;

pub use config::ExperimentConfig;
pub use experiment::{cmd_experiment, run_experiment, ExperimentReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments or configuration.
    #[error("{0}")]
    Usage(String),

    /// Unreadable, malformed or unusable data.
    #[error("{stage}: {source:#}")]
    Data {
        stage: String,
        #[source]
        source: anyhow::Error,
    },

    /// A result broke a guarantee the library makes.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl CliError {
    pub fn data(stage: impl Into<String>, source: impl Into<anyhow::Error>) -> Self {
        CliError::Data {
            stage: stage.into(),
            source: source.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data { .. } => 2,
            CliError::Internal(_) => 3,
        }
    }
}

pub fn read_document(path: &Path) -> Result<Document, CliError> {
    let stage = format!("read {}", path.display());
    let file = File::open(path).map_err(|e| CliError::data(&stage, e))?;
    read_conll(BufReader::new(file), &path.display().to_string()).map_err(|e| CliError::data(&stage, e))
}

pub fn write_document(document: &Document, path: &Path) -> Result<(), CliError> {
    let stage = format!("write {}", path.display());
    let file = File::create(path).map_err(|e| CliError::data(&stage, e))?;
    let mut writer = BufWriter::new(file);
    write_conll(document, &mut writer).map_err(|e| CliError::data(&stage, e))?;
    writer.flush().map_err(|e| CliError::data(&stage, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::data(format!("write {}", path.display()), e))
}

/// Every sentence of a document produced by the library must validate.
pub(crate) fn check_trees(document: &Document, what: &str) -> Result<(), CliError> {
    for (idx, sentence) in document.sentences.iter().enumerate() {
        let report = validate(sentence);
        if !report.is_valid() {
            return Err(CliError::Internal(format!("{} sentence {}: {}", what, idx + 1, report)));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StripSummary {
    pub sentences: usize,
    pub removed: usize,
    pub lifted: usize,
}

impl fmt::Display for StripSummary {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(
            f,
            "{} sentences, {} punctuation tokens removed, {} dependents lifted",
            self.sentences, self.removed, self.lifted
        )
    }
}

pub fn cmd_strip(input: &Path, output: &Path, class: PunctClass) -> Result<StripSummary, CliError> {
    let document = read_document(input)?;
    let (stripped, logs) = strip_document(&document, class).map_err(|e| CliError::data("strip", e))?;
    check_trees(&stripped, "stripped")?;
    write_document(&stripped, output)?;
    Ok(StripSummary {
        sentences: stripped.len(),
        removed: logs.iter().map(|l| l.removed.len()).sum(),
        lifted: logs.iter().map(|l| l.lifted_dependents).sum(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InjectSummary {
    pub sentences: usize,
    pub injected: usize,
    pub made_nonprojective: usize,
}

impl fmt::Display for InjectSummary {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(
            f,
            "{} sentences, {} punctuation tokens injected, {} sentences made non-projective",
            self.sentences, self.injected, self.made_nonprojective
        )
    }
}

pub fn cmd_inject(
    input: &Path,
    output: &Path,
    chi: f64,
    delta: f64,
    seed: u64,
    class: PunctClass,
) -> Result<InjectSummary, CliError> {
    let config = PerturbConfig::new(chi, delta, class, seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let document = read_document(input)?;
    let (injected, logs) = inject_document(&document, &config).map_err(|e| CliError::data("inject", e))?;
    check_trees(&injected, "injected")?;
    write_document(&injected, output)?;
    Ok(InjectSummary {
        sentences: injected.len(),
        injected: logs.iter().map(|l| l.injected.len()).sum(),
        made_nonprojective: logs.iter().filter(|l| l.made_nonprojective).count(),
    })
}

/// Aggregate scores as written to JSON reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scores {
    pub uas: f64,
    pub las: f64,
    pub scored_tokens: usize,
    pub head_correct: usize,
    pub both_correct: usize,
}

impl From<&EvalReport> for Scores {
    fn from(r: &EvalReport) -> Self {
        Scores {
            uas: r.uas,
            las: r.las,
            scored_tokens: r.scored_tokens,
            head_correct: r.head_correct,
            both_correct: r.both_correct,
        }
    }
}

impl fmt::Display for Scores {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(
            f,
            "UAS {:.4}  LAS {:.4}  ({} scored tokens)",
            self.uas, self.las, self.scored_tokens
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalSummary {
    pub sentences: usize,
    #[serde(flatten)]
    pub scores: Scores,
}

/// Score `system` against `gold`. The JSON report goes to `json_out` when
/// given.
pub fn cmd_eval(
    gold: &Path,
    system: &Path,
    class: PunctClass,
    filter: Option<SentenceFilter>,
    json_out: Option<&Path>,
) -> Result<EvalSummary, CliError> {
    let mut gold_doc = read_document(gold)?;
    let mut system_doc = read_document(system)?;
    if let Some(filter) = filter {
        if gold_doc.len() != system_doc.len() {
            return Err(CliError::data(
                "eval",
                anyhow::anyhow!("gold has {} sentences, system has {}", gold_doc.len(), system_doc.len()),
            ));
        }
        (gold_doc, system_doc) = filter_pairs(&gold_doc, &system_doc, filter);
    }
    let report = attachment_scores(&gold_doc, &system_doc, class).map_err(|e| CliError::data("eval", e))?;
    let summary = EvalSummary {
        sentences: gold_doc.len(),
        scores: Scores::from(&report),
    };
    if let Some(path) = json_out {
        write_text(path, &to_json(&summary)?)?;
    }
    Ok(summary)
}

pub fn cmd_train(
    input: &Path,
    output: &Path,
    mode: ParserMode,
    epochs: usize,
    seed: u64,
) -> Result<TrainingMeta, CliError> {
    if epochs == 0 {
        return Err(CliError::Usage("epochs must be at least 1".to_owned()));
    }
    let document = read_document(input)?;
    let model = parser::train(&document, epochs, mode, seed).map_err(|e| CliError::data("train", e))?;
    let stage = format!("write {}", output.display());
    let file = File::create(output).map_err(|e| CliError::data(&stage, e))?;
    model.save(BufWriter::new(file)).map_err(|e| CliError::data(&stage, e))?;
    Ok(model.training)
}

pub fn cmd_parse(model: &Path, input: &Path, output: &Path) -> Result<usize, CliError> {
    let stage = format!("load {}", model.display());
    let file = File::open(model).map_err(|e| CliError::data(&stage, e))?;
    let model = ParserModel::load(BufReader::new(file)).map_err(|e| CliError::data(&stage, e))?;
    let document = read_document(input)?;
    let parsed = model.parse_document(&document);
    check_trees(&parsed, "parsed")?;
    write_document(&parsed, output)?;
    Ok(parsed.len())
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut json = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    json.push('\n');
    Ok(json)
}

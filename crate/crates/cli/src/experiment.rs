//! Train, perturb, parse and score according to an experiment manifest.

use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use log::{info, warn};
use punctkit::eval::{attachment_scores, robustness_report, EvalReport};
use punctkit::parser::{self, ParserModel};
use punctkit::perturb::{inject_document, strip_document, PerturbConfig};
use punctkit::{Document, PunctClass};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Condition, ExperimentConfig};
use crate::{check_trees, read_document, to_json, write_text, CliError, Scores};

pub const TOOLKIT: &str = "punctkit";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageCounts {
    pub train_sentences: usize,
    pub train_tokens: usize,
    pub test_sentences: usize,
    pub test_tokens: usize,
    /// Test sentences dropped by `test_filter`.
    pub test_filtered_out: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PerturbationCounts {
    Strip {
        tokens: usize,
        removed: usize,
        lifted: usize,
    },
    Inject {
        chi: f64,
        delta: f64,
        seeds: Vec<u64>,
        /// Summed over all seeds.
        tokens: usize,
        injected: usize,
        made_nonprojective: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainingCounts {
    pub sentences: usize,
    pub skipped_nonprojective: usize,
    pub skipped_unstrippable: usize,
    pub features: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeReport {
    pub training: TrainingCounts,
    pub baseline: Scores,
    pub conditions: IndexMap<String, Scores>,
    /// `null` when the baseline is perfect and the ratio is undefined.
    pub rel_err_increase: IndexMap<String, Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub toolkit: &'static str,
    pub version: &'static str,
    /// SHA-256 of the manifest bytes.
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub counts: StageCounts,
    pub perturbation: IndexMap<String, PerturbationCounts>,
    pub modes: IndexMap<String, ModeReport>,
}

/// Test sets for one condition: one for stripping, one per seed for
/// injection.
struct Variants {
    documents: Vec<Document>,
    counts: PerturbationCounts,
}

/// Master seed of injection repeat `repeat` for condition `name`. Depends
/// on the name rather than the position so that reordering the manifest
/// does not change any test set.
pub fn injection_seed(seed: u64, name: &str, repeat: usize) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(name.as_bytes());
    hasher.update([0]);
    hasher.update((repeat as u64).to_le_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

fn perturb(config: &ExperimentConfig, name: &str, condition: Condition, test: &Document) -> Result<Variants, CliError> {
    let stage = format!("perturb {}", name);
    match condition {
        Condition::Strip => {
            let (doc, logs) = strip_document(test, config.strip_punct_class).map_err(|e| CliError::data(&stage, e))?;
            check_trees(&doc, &stage)?;
            let counts = PerturbationCounts::Strip {
                tokens: doc.n_tokens(),
                removed: logs.iter().map(|l| l.removed.len()).sum(),
                lifted: logs.iter().map(|l| l.lifted_dependents).sum(),
            };
            Ok(Variants {
                documents: vec![doc],
                counts,
            })
        }
        Condition::Inject { chi, delta } => {
            let seeds: Vec<u64> = (0..config.repeats).map(|r| injection_seed(config.seed, name, r)).collect();
            let mut documents = Vec::with_capacity(seeds.len());
            let (mut injected, mut made_nonprojective) = (0, 0);
            for &seed in &seeds {
                let perturb_config = PerturbConfig::new(chi, delta, PunctClass::DotsAndCommas, seed)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                let (doc, logs) = inject_document(test, &perturb_config).map_err(|e| CliError::data(&stage, e))?;
                check_trees(&doc, &stage)?;
                injected += logs.iter().map(|l| l.injected.len()).sum::<usize>();
                made_nonprojective += logs.iter().filter(|l| l.made_nonprojective).count();
                documents.push(doc);
            }
            let counts = PerturbationCounts::Inject {
                chi,
                delta,
                seeds,
                tokens: documents.iter().map(Document::n_tokens).sum(),
                injected,
                made_nonprojective,
            };
            Ok(Variants { documents, counts })
        }
    }
}

fn score(model: &ParserModel, gold: &Document, class: PunctClass, stage: &str) -> Result<EvalReport, CliError> {
    let parsed = model.parse_document(gold);
    check_trees(&parsed, stage)?;
    attachment_scores(gold, &parsed, class).map_err(|e| CliError::data(stage, e))
}

/// Run a validated manifest whose data paths are already resolved.
pub fn run_experiment(config: &ExperimentConfig, config_hash: String) -> Result<ExperimentReport, CliError> {
    config.check().map_err(CliError::Usage)?;

    let train = read_document(&config.train)?;
    let mut test = read_document(&config.test)?;
    let before = test.len();
    if let Some(filter) = config.test_filter {
        test.sentences.retain(|s| filter.accepts(s));
        if test.is_empty() {
            return Err(CliError::data(
                "filter",
                anyhow::anyhow!("no test sentence passes the {:?} filter", filter),
            ));
        }
    }
    let counts = StageCounts {
        train_sentences: train.len(),
        train_tokens: train.n_tokens(),
        test_sentences: test.len(),
        test_tokens: test.n_tokens(),
        test_filtered_out: before - test.len(),
    };

    let mut variants = IndexMap::new();
    for condition in &config.conditions {
        info!("perturbing test set: {}", condition.name);
        variants.insert(
            condition.name.clone(),
            perturb(config, &condition.name, condition.kind(), &test)?,
        );
    }

    let mut modes = IndexMap::new();
    for &mode in &config.modes {
        info!("training {} model", mode);
        let model = parser::train(&train, config.epochs, mode, config.seed)
            .map_err(|e| CliError::data(format!("train {}", mode), e))?;

        let baseline = score(&model, &test, config.eval_punct_class, &format!("evaluate {} baseline", mode))?;
        let mut conditions = IndexMap::new();
        for (name, variant) in &variants {
            info!("evaluating {} model on {}", mode, name);
            let stage = format!("evaluate {} {}", mode, name);
            let reports = variant
                .documents
                .iter()
                .map(|doc| score(&model, doc, config.eval_punct_class, &stage))
                .collect::<Result<Vec<_>, _>>()?;
            conditions.insert(name.clone(), EvalReport::pooled(&reports));
        }

        let rel_err_increase = match robustness_report(&baseline, &conditions) {
            Ok(r) => r.rel_err_increase.into_iter().map(|(k, v)| (k, Some(v))).collect(),
            Err(e) => {
                warn!("{} mode: {}", mode, e);
                conditions.keys().map(|k| (k.clone(), None)).collect()
            }
        };

        modes.insert(
            mode.to_string(),
            ModeReport {
                training: TrainingCounts {
                    sentences: model.training.sentences,
                    skipped_nonprojective: model.training.skipped_nonprojective,
                    skipped_unstrippable: model.training.skipped_unstrippable,
                    features: model.n_features(),
                },
                baseline: Scores::from(&baseline),
                conditions: conditions.iter().map(|(k, r)| (k.clone(), Scores::from(r))).collect(),
                rel_err_increase,
            },
        );
    }

    Ok(ExperimentReport {
        toolkit: TOOLKIT,
        version: env!("CARGO_PKG_VERSION"),
        config_hash,
        config: config.clone(),
        counts,
        perturbation: variants.into_iter().map(|(k, v)| (k, v.counts)).collect(),
        modes,
    })
}

/// Read the manifest at `config_path`, run it, and write the JSON report to
/// `json_out` and the text table beside it.
pub fn cmd_experiment(config_path: &Path, json_out: &Path) -> Result<ExperimentReport, CliError> {
    let bytes = std::fs::read(config_path).map_err(|e| CliError::data(format!("read {}", config_path.display()), e))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|e| CliError::Usage(format!("{}: {}", config_path.display(), e)))?;
    let config = ExperimentConfig::parse(&text).map_err(|e| CliError::Usage(format!("{}: {}", config_path.display(), e)))?;

    let mut resolved = config.clone();
    resolved.relativize(config_path);
    let mut report = run_experiment(&resolved, hex::encode(Sha256::digest(&bytes)))?;
    // Report paths as written so the output does not depend on where the
    // manifest lives.
    report.config = config;

    write_text(json_out, &to_json(&report)?)?;
    write_text(&table_path(json_out), &report.table())?;
    Ok(report)
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String, CliError> {
        to_json(self)
    }

    /// LAS per mode and condition, each condition followed by its relative
    /// error increase.
    pub fn table(&self) -> String {
        let mut header = vec!["Mode".to_owned(), "Baseline".to_owned()];
        for name in self.perturbation.keys() {
            header.push(name.clone());
            header.push("Rel.err. incr.".to_owned());
        }
        let mut rows = vec![header];
        for (mode, report) in &self.modes {
            let mut row = vec![mode.clone(), format!("{:.4}", report.baseline.las)];
            for (name, scores) in &report.conditions {
                row.push(format!("{:.4}", scores.las));
                row.push(match report.rel_err_increase.get(name).copied().flatten() {
                    Some(v) => format!("{:.3}", v),
                    None => "n/a".to_owned(),
                });
            }
            rows.push(row);
        }

        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &rows {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, &w))| {
                    if c == 0 {
                        format!("{:<w$}", cell)
                    } else {
                        format!("{:>w$}", cell)
                    }
                })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

/// Where `cmd_experiment` puts the text table next to a JSON report.
pub fn table_path(json_out: &Path) -> PathBuf {
    json_out.with_extension("txt")
}

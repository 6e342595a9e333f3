//! Experiment manifests.
//!
//! A manifest is a TOML file:
//!
//! ```toml
//! train = "train.conllu"       # paths are relative to the manifest
//! test = "test.conllu"
//! seed = 42
//! epochs = 10
//! modes = ["standard", "nopunct"]
//! strip_punct_class = "all"    # used by the no_punct condition
//! eval_punct_class = "all"     # tokens excluded from scoring
//! repeats = 5                  # injected test sets per condition
//! # test_filter = "no-punct-min5"
//!
//! [[condition]]
//! name = "no_punct"
//!
//! [[condition]]
//! name = "d0.1_c0.1"
//! chi = 0.1
//! delta = 0.1
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use punctkit::eval::SentenceFilter;
use punctkit::parser::ParserMode;
use punctkit::PunctClass;
use serde::{Deserialize, Serialize};

/// Name of the condition that strips punctuation instead of injecting it.
pub const NO_PUNCT: &str = "no_punct";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Condition {
    Strip,
    Inject { chi: f64, delta: f64 },
}

impl ConditionSpec {
    pub fn kind(&self) -> Condition {
        match (self.chi, self.delta) {
            (Some(chi), Some(delta)) => Condition::Inject { chi, delta },
            _ => Condition::Strip,
        }
    }
}

fn default_punct_class() -> PunctClass {
    PunctClass::AllPunct
}

fn default_repeats() -> usize {
    1
}

fn default_modes() -> Vec<ParserMode> {
    vec![ParserMode::Standard, ParserMode::NoPunct]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub train: PathBuf,
    pub test: PathBuf,
    pub seed: u64,
    pub epochs: usize,
    #[serde(default = "default_modes")]
    pub modes: Vec<ParserMode>,
    #[serde(default = "default_punct_class")]
    pub strip_punct_class: PunctClass,
    #[serde(default = "default_punct_class")]
    pub eval_punct_class: PunctClass,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_filter: Option<SentenceFilter>,
    #[serde(rename = "condition")]
    pub conditions: Vec<ConditionSpec>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        config.check()?;
        Ok(config)
    }

    /// Resolve relative data paths against the manifest's directory.
    pub fn relativize(&mut self, manifest: &Path) {
        let base = manifest.parent().unwrap_or_else(|| Path::new(""));
        for path in [&mut self.train, &mut self.test] {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.conditions.is_empty() {
            return Err("at least one [[condition]] is required".to_owned());
        }
        if self.epochs == 0 {
            return Err("epochs must be at least 1".to_owned());
        }
        if self.repeats == 0 {
            return Err("repeats must be at least 1".to_owned());
        }
        if self.modes.is_empty() {
            return Err("modes must not be empty".to_owned());
        }
        let mut modes = HashSet::new();
        if let Some(mode) = self.modes.iter().find(|m| !modes.insert(**m)) {
            return Err(format!("mode '{}' listed twice", mode));
        }

        let mut names = HashSet::new();
        for c in &self.conditions {
            if !names.insert(c.name.as_str()) {
                return Err(format!("condition name '{}' is not unique", c.name));
            }
            match (c.name.as_str(), c.chi, c.delta) {
                (NO_PUNCT, None, None) => (),
                (NO_PUNCT, _, _) => return Err(format!("condition '{}' takes no chi or delta", NO_PUNCT)),
                (name, Some(chi), Some(delta)) => {
                    for (key, v) in [("chi", chi), ("delta", delta)] {
                        if !(0.0..=1.0).contains(&v) {
                            return Err(format!("condition '{}': {} = {} is not a probability", name, key, v));
                        }
                    }
                }
                (name, _, _) => return Err(format!("condition '{}' needs both chi and delta", name)),
            }
        }
        Ok(())
    }
}

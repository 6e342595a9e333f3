use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conll::Document;
use crate::perturb::{attach_stripped, split_punct, strip_punct};
use crate::tree::{is_projective_unchecked, PunctClass, Sentence, Token};

use super::features::{extract, SentenceView, FEATURE_VERSION};
use super::system::{gold_move, Move, ParserState};
use super::ParserError;

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MODEL_FORMAT: &str = "punctkit-arc-eager";

/// Label given to tokens attached by the decoder fallback.
const FALLBACK_LABEL: &str = "dep";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParserMode {
    Standard,
    NoPunct,
}

impl ParserMode {
    pub fn name(self) -> &'static str {
        match self {
            ParserMode::Standard => "standard",
            ParserMode::NoPunct => "nopunct",
        }
    }
}

impl fmt::Display for ParserMode {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ParserMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(ParserMode::Standard),
            "nopunct" | "no-punct" => Ok(ParserMode::NoPunct),
            other => Err(format!("unknown mode '{}', expected 'standard' or 'nopunct'", other)),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub seed: u64,
    /// Sentences the learner saw.
    pub sentences: usize,
    pub skipped_nonprojective: usize,
    /// NoPunct mode only: sentences whose root token is punctuation.
    pub skipped_unstrippable: usize,
}

/// Class layout: shift, right-arcs by label, left-arcs by label, reduce.
/// This is also the tie-breaking order.
#[derive(Clone, Copy)]
struct Classes {
    n_labels: usize,
}

impl Classes {
    fn len(self) -> usize {
        2 * self.n_labels + 2
    }

    fn index(self, m: Move, label: usize) -> usize {
        match m {
            Move::Shift => 0,
            Move::RightArc => 1 + label,
            Move::LeftArc => 1 + self.n_labels + label,
            Move::Reduce => 1 + 2 * self.n_labels,
        }
    }

    fn decode(self, class: usize) -> (Move, usize) {
        if class == 0 {
            (Move::Shift, 0)
        } else if class <= self.n_labels {
            (Move::RightArc, class - 1)
        } else if class <= 2 * self.n_labels {
            (Move::LeftArc, class - 1 - self.n_labels)
        } else {
            (Move::Reduce, 0)
        }
    }

    /// Highest-scoring permissible class, earliest class on ties.
    fn best(self, scores: &[f64], state: &ParserState) -> usize {
        let mut best: Option<(usize, f64)> = None;
        for (class, &score) in scores.iter().enumerate() {
            let (m, _) = self.decode(class);
            if !state.is_permissible(m) {
                continue;
            }
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((class, score));
            }
        }
        best.expect("some transition is permissible in a non-terminal state").0
    }
}

/// A finalized, averaged linear transition classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct ParserModel {
    pub mode: ParserMode,
    /// Sorted dependency labels.
    pub labels: Vec<String>,
    /// Label for a root chosen by the decoder fallback.
    pub root_label: String,
    pub feature_version: u32,
    pub training: TrainingMeta,
    weights: HashMap<String, Vec<(u32, f64)>>,
}

impl ParserModel {
    fn classes(&self) -> Classes {
        Classes {
            n_labels: self.labels.len(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    /// Weight of `feature` for class `class`, 0 when absent.
    pub fn weight(&self, feature: &str, class: usize) -> f64 {
        self.weights
            .get(feature)
            .and_then(|ws| ws.iter().find(|(c, _)| *c as usize == class))
            .map_or(0.0, |(_, w)| *w)
    }

    fn scores(&self, features: &[String]) -> Vec<f64> {
        let mut scores = vec![0.0; self.classes().len()];
        for feature in features {
            if let Some(ws) = self.weights.get(feature) {
                for &(class, w) in ws {
                    scores[class as usize] += w;
                }
            }
        }
        scores
    }

    /// Greedy decoding of `tokens`; returns `(head, label)` per token.
    fn decode(&self, tokens: &[Token]) -> Vec<(usize, String)> {
        let n = tokens.len();
        let view = SentenceView::new(tokens.iter().map(|t| (t.form.as_str(), t.upos.as_str())));
        let classes = self.classes();
        let mut state = ParserState::new(n);
        while !state.is_terminal() {
            let features = extract(&state, &view);
            let scores = self.scores(&features);
            let (m, label) = classes.decode(classes.best(&scores, &state));
            let label = match m {
                Move::LeftArc | Move::RightArc => self.labels[label].as_str(),
                _ => "",
            };
            state.apply_move(m, label);
        }

        let mut root = (1..=n).find(|&p| state.head(p) == Some(0));
        let mut result = Vec::with_capacity(n);
        for p in 1..=n {
            let attached = match state.head(p) {
                Some(h) => (h, state.label(p).expect("label set with head").to_owned()),
                None => match root {
                    Some(r) => (r, FALLBACK_LABEL.to_owned()),
                    None => {
                        root = Some(p);
                        (0, self.root_label.clone())
                    }
                },
            };
            result.push(attached);
        }
        result
    }

    fn parse_tokens(&self, tokens: &[Token]) -> Vec<Token> {
        self.decode(tokens)
            .into_iter()
            .zip(tokens)
            .enumerate()
            .map(|(idx, ((head, deprel), token))| Token {
                id: idx + 1,
                head,
                deprel,
                ..token.clone()
            })
            .collect()
    }

    /// Parse a sentence. Input heads and labels are ignored.
    pub fn parse(&self, sentence: &Sentence) -> Sentence {
        if sentence.is_empty() {
            return sentence.clone();
        }
        match self.mode {
            ParserMode::Standard => Sentence {
                tokens: self.parse_tokens(&sentence.tokens),
                comments: sentence.comments.clone(),
            },
            ParserMode::NoPunct => {
                let (core_tokens, log) = split_punct(sentence, PunctClass::DotsAndCommas);
                if core_tokens.is_empty() {
                    return punct_only_fallback(sentence, &self.root_label);
                }
                let mut core = Sentence::new(self.parse_tokens(&core_tokens));
                core.comments = sentence.comments.clone();
                attach_stripped(&core, &log).expect("core built from the same log")
            }
        }
    }

    pub fn parse_document(&self, document: &Document) -> Document {
        Document::new(
            document.source_name.clone(),
            document.sentences.par_iter().map(|s| self.parse(s)).collect(),
        )
    }

    pub fn save<W: Write>(&self, writer: W) -> Result<(), ParserError> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_owned(),
            format_version: MODEL_FORMAT_VERSION,
            feature_version: self.feature_version,
            mode: self.mode,
            labels: self.labels.clone(),
            root_label: self.root_label.clone(),
            training: self.training.clone(),
            weights: self.weights.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        };
        serde_json::to_writer(writer, &file)?;
        Ok(())
    }

    pub fn load<R: Read>(reader: R) -> Result<Self, ParserError> {
        let file: ModelFile = serde_json::from_reader(reader)?;
        if file.format != MODEL_FORMAT || file.format_version != MODEL_FORMAT_VERSION {
            return Err(ParserError::Format(format!(
                "unsupported format {} version {}",
                file.format, file.format_version
            )));
        }
        if file.feature_version != FEATURE_VERSION {
            return Err(ParserError::Format(format!(
                "model uses feature version {}, this build extracts version {}",
                file.feature_version, FEATURE_VERSION
            )));
        }
        if file.labels.is_empty() {
            return Err(ParserError::Format("empty label set".to_owned()));
        }
        let n_classes = Classes {
            n_labels: file.labels.len(),
        }
        .len();
        if let Some(feature) = file
            .weights
            .iter()
            .find(|(_, ws)| ws.iter().any(|&(c, _)| c as usize >= n_classes))
            .map(|(f, _)| f)
        {
            return Err(ParserError::Format(format!("feature '{}' has a class index out of range", feature)));
        }
        Ok(ParserModel {
            mode: file.mode,
            labels: file.labels,
            root_label: file.root_label,
            feature_version: file.feature_version,
            training: file.training,
            weights: file.weights.into_iter().collect(),
        })
    }
}

fn punct_only_fallback(sentence: &Sentence, root_label: &str) -> Sentence {
    let mut out = sentence.clone();
    for (idx, token) in out.tokens.iter_mut().enumerate() {
        if idx == 0 {
            token.head = 0;
            token.deprel = root_label.to_owned();
        } else {
            token.head = 1;
            token.deprel = crate::tree::PUNCT_DEPREL.to_owned();
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    format_version: u32,
    feature_version: u32,
    mode: ParserMode,
    labels: Vec<String>,
    root_label: String,
    training: TrainingMeta,
    weights: BTreeMap<String, Vec<(u32, f64)>>,
}

#[derive(Clone, Copy, Default)]
struct Weight {
    current: f64,
    total: f64,
    stamp: u64,
}

/// Perceptron weights with lazy averaging.
struct Averaged {
    weights: HashMap<String, Vec<(u32, Weight)>>,
    n_classes: usize,
    step: u64,
}

impl Averaged {
    fn scores(&self, features: &[String]) -> Vec<f64> {
        let mut scores = vec![0.0; self.n_classes];
        for feature in features {
            if let Some(ws) = self.weights.get(feature) {
                for (class, w) in ws {
                    scores[*class as usize] += w.current;
                }
            }
        }
        scores
    }

    fn update(&mut self, features: &[String], class: usize, delta: f64) {
        for feature in features {
            let entries = self.weights.entry(feature.clone()).or_default();
            let idx = match entries.iter().position(|(c, _)| *c as usize == class) {
                Some(idx) => idx,
                None => {
                    entries.push((class as u32, Weight::default()));
                    entries.len() - 1
                }
            };
            let w = &mut entries[idx].1;
            w.total += (self.step - w.stamp) as f64 * w.current;
            w.stamp = self.step;
            w.current += delta;
        }
    }

    fn finalize(self) -> HashMap<String, Vec<(u32, f64)>> {
        let step = self.step.max(1);
        self.weights
            .into_iter()
            .filter_map(|(feature, mut entries)| {
                entries.sort_by_key(|(c, _)| *c);
                let averaged: Vec<(u32, f64)> = entries
                    .into_iter()
                    .map(|(c, w)| (c, (w.total + (step - w.stamp) as f64 * w.current) / step as f64))
                    .filter(|(_, w)| *w != 0.0)
                    .collect();
                if averaged.is_empty() {
                    None
                } else {
                    Some((feature, averaged))
                }
            })
            .collect()
    }
}

/// Train a model with the averaged perceptron on the static-oracle path.
/// Sentences are visited in a seeded shuffled order each epoch.
pub fn train(document: &Document, epochs: usize, mode: ParserMode, seed: u64) -> Result<ParserModel, ParserError> {
    if epochs == 0 {
        return Err(ParserError::NoEpochs);
    }

    let mut meta = TrainingMeta {
        epochs,
        seed,
        ..Default::default()
    };
    let mut instances = Vec::new();
    for sentence in &document.sentences {
        let instance = match mode {
            ParserMode::Standard => sentence.clone(),
            ParserMode::NoPunct => match strip_punct(sentence, PunctClass::DotsAndCommas) {
                Ok((stripped, _)) => stripped,
                Err(_) => {
                    meta.skipped_unstrippable += 1;
                    continue;
                }
            },
        };
        if !is_projective_unchecked(&instance) {
            meta.skipped_nonprojective += 1;
            continue;
        }
        instances.push(instance);
    }
    if instances.is_empty() {
        return Err(ParserError::NoTrainingData {
            nonprojective: meta.skipped_nonprojective,
            unstrippable: meta.skipped_unstrippable,
        });
    }
    meta.sentences = instances.len();

    let mut labels: Vec<String> = instances
        .iter()
        .flat_map(|s| s.tokens.iter().map(|t| t.deprel.clone()))
        .collect();
    labels.sort();
    labels.dedup();
    let label_index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let classes = Classes { n_labels: labels.len() };

    let mut root_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &instances {
        for t in s.tokens.iter().filter(|t| t.head == 0) {
            *root_counts.entry(t.deprel.as_str()).or_default() += 1;
        }
    }
    let root_label = root_counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(l, _)| (*l).to_owned())
        .expect("every instance has a root");

    let mut perceptron = Averaged {
        weights: HashMap::new(),
        n_classes: classes.len(),
        step: 0,
    };
    let mut order: Vec<usize> = (0..instances.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &idx in &order {
            let sentence = &instances[idx];
            let heads = sentence.heads();
            let view = SentenceView::new(sentence.tokens.iter().map(|t| (t.form.as_str(), t.upos.as_str())));
            let mut state = ParserState::new(sentence.len());
            while !state.is_terminal() {
                let m = gold_move(&state, &heads);
                let dependent = match m {
                    Move::LeftArc => state.stack_at(0),
                    Move::RightArc => state.buffer_at(0),
                    _ => None,
                };
                let label = dependent.map_or("", |d| sentence.tokens[d - 1].deprel.as_str());
                let gold = classes.index(m, dependent.map_or(0, |_| label_index[label]));

                let features = extract(&state, &view);
                let predicted = classes.best(&perceptron.scores(&features), &state);
                perceptron.step += 1;
                if predicted != gold {
                    perceptron.update(&features, gold, 1.0);
                    perceptron.update(&features, predicted, -1.0);
                }
                state.apply_move(m, label);
            }
        }
    }

    Ok(ParserModel {
        mode,
        labels,
        root_label,
        feature_version: FEATURE_VERSION,
        training: meta,
        weights: perceptron.finalize(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::attachment_scores;
    use crate::tree::{john_27, validate};

    fn john_likes_jazz() -> Sentence {
        Sentence::from_parts(vec![
            ("John", "PROPN", 2, "nsubj"),
            ("likes", "VERB", 0, "root"),
            ("jazz", "NOUN", 2, "dobj"),
        ])
    }

    fn tiny_corpus() -> Document {
        Document::new(
            "tiny",
            vec![
                john_27(),
                john_likes_jazz(),
                Sentence::from_parts(vec![
                    ("Mary", "PROPN", 2, "nsubj"),
                    ("hates", "VERB", 0, "root"),
                    ("rock", "NOUN", 2, "dobj"),
                    (".", "PUNCT", 2, "punct"),
                ]),
            ],
        )
    }

    #[test]
    fn zero_epochs() {
        assert!(matches!(
            train(&tiny_corpus(), 0, ParserMode::Standard, 1),
            Err(ParserError::NoEpochs)
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let a = train(&tiny_corpus(), 3, ParserMode::Standard, 9).unwrap();
        let b = train(&tiny_corpus(), 3, ParserMode::Standard, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nopunct_sees_stripped_sentences() {
        let doc = Document::new("f2", vec![john_27()]);
        let model = train(&doc, 1, ParserMode::NoPunct, 0).unwrap();
        // With dots and commas stripped there is no punct label left.
        assert_eq!(model.labels, vec!["amod", "dobj", "nsubj", "root"]);
        assert!(model.weight("s0w=,", 0) == 0.0);
        assert_eq!(model.training.sentences, 1);
    }

    #[test]
    fn nonprojective_only_fails() {
        let doc = Document::new(
            "np",
            vec![Sentence::from_parts(vec![
                ("a", "X", 3, "dep"),
                ("b", "X", 4, "dep"),
                ("c", "X", 0, "root"),
                ("d", "X", 3, "dep"),
            ])],
        );
        assert!(matches!(
            train(&doc, 1, ParserMode::Standard, 0),
            Err(ParserError::NoTrainingData { nonprojective: 1, .. })
        ));
    }

    #[test]
    fn overfits_tiny_corpus() {
        let doc = tiny_corpus();
        let model = train(&doc, 10, ParserMode::Standard, 3).unwrap();
        let parsed = model.parse_document(&doc);
        let report = attachment_scores(&doc, &parsed, PunctClass::DotsAndCommas).unwrap();
        assert_eq!(report.las, 1.0);
    }

    #[test]
    fn untrained_model_yields_valid_tree() {
        let model = ParserModel {
            mode: ParserMode::Standard,
            labels: vec!["dep".to_owned()],
            root_label: "root".to_owned(),
            feature_version: FEATURE_VERSION,
            training: TrainingMeta::default(),
            weights: HashMap::new(),
        };
        let parsed = model.parse(&john_27());
        assert!(validate(&parsed).is_valid());
        assert_eq!(parsed.forms(), john_27().forms());
    }

    #[test]
    fn nopunct_ignores_punct() {
        let model = train(&tiny_corpus(), 5, ParserMode::NoPunct, 2).unwrap();
        let mut with_dot = john_likes_jazz();
        with_dot.tokens.push(Token::punctuation(4, ".", 2));
        let a = model.parse(&with_dot);
        let b = model.parse(&john_likes_jazz());
        for i in 0..3 {
            assert_eq!(a.tokens[i].head, b.tokens[i].head);
            assert_eq!(a.tokens[i].deprel, b.tokens[i].deprel);
        }
        assert!(validate(&a).is_valid());
    }

    #[test]
    fn all_punct_sentence_in_nopunct_mode() {
        let model = train(&tiny_corpus(), 1, ParserMode::NoPunct, 2).unwrap();
        let s = Sentence::from_parts(vec![(".", "PUNCT", 0, "root"), (".", "PUNCT", 1, "punct")]);
        assert!(validate(&model.parse(&s)).is_valid());
    }

    #[test]
    fn save_load_round_trip() {
        let model = train(&tiny_corpus(), 4, ParserMode::Standard, 5).unwrap();
        let mut buf = Vec::new();
        model.save(&mut buf).unwrap();
        let loaded = ParserModel::load(buf.as_slice()).unwrap();
        assert_eq!(loaded, model);
    }

    #[test]
    fn load_rejects_other_feature_versions() {
        let model = train(&tiny_corpus(), 1, ParserMode::Standard, 5).unwrap();
        let mut buf = Vec::new();
        model.save(&mut buf).unwrap();
        let mut json: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        json["feature_version"] = serde_json::json!(FEATURE_VERSION + 1);
        assert!(matches!(
            ParserModel::load(json.to_string().as_bytes()),
            Err(ParserError::Format(_))
        ));
    }
}

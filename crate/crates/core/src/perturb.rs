//! Punctuation removal and injection.
//!
//! Removal drops punctuation tokens and shifts every later token one
//! position to the left per removed token. Injection inserts commas before
//! and dots after original words with independent probabilities. Injected
//! commas attach to their left neighbour (the root token when
//! sentence-initial), injected dots attach to the root token.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conll::Document;
use crate::tree::{is_projective_unchecked, is_punct, validate, PunctClass, Sentence, Token, ValidationReport, PUNCT_DEPREL};

pub const COMMA: &str = ",";
pub const DOT: &str = ".";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbConfig {
    /// Probability of injecting a comma before each word.
    pub chi: f64,
    /// Probability of injecting a dot after each word.
    pub delta: f64,
    pub punct_class: PunctClass,
    pub master_seed: u64,
}

impl PerturbConfig {
    pub fn new(chi: f64, delta: f64, punct_class: PunctClass, master_seed: u64) -> Result<Self, PerturbError> {
        for (name, value) in [("chi", chi), ("delta", delta)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(PerturbError::Probability { name, value });
            }
        }
        Ok(PerturbConfig {
            chi,
            delta,
            punct_class,
            master_seed,
        })
    }
}

#[derive(Debug, Error)]
pub enum PerturbError {
    #[error("{name} must be a probability in [0, 1], got {value}")]
    Probability { name: &'static str, value: f64 },

    #[error("input is not a well-formed tree: {0}")]
    Invalid(ValidationReport),

    #[error("every token is punctuation, no root can survive")]
    AllPunct,

    #[error("root token {id} ('{form}') is punctuation, refusing to strip it")]
    RootIsPunct { id: usize, form: String },

    #[error("core sentence does not match the strip log: {0}")]
    Alignment(String),

    #[error("sentence {sentence}: {source}")]
    InSentence {
        sentence: usize,
        #[source]
        source: Box<PerturbError>,
    },
}

impl PerturbError {
    fn in_sentence(self, ordinal: usize) -> Self {
        PerturbError::InSentence {
            sentence: ordinal,
            source: Box::new(self),
        }
    }
}

/// Record of a punctuation removal.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StripLog {
    /// Removed tokens as they were in the input: `id` is the original
    /// position, `head` the original head position.
    pub removed: Vec<Token>,
    /// Number of surviving tokens whose head was a removed token.
    pub lifted_dependents: usize,
    /// Forms of the surviving tokens, in order.
    pub kept_forms: Vec<String>,
}

impl StripLog {
    pub fn original_len(&self) -> usize {
        self.removed.len() + self.kept_forms.len()
    }
}

/// A single injected token.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Injected {
    pub new_position: usize,
    pub form: String,
    pub head: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectLog {
    pub injected: Vec<Injected>,
    pub made_nonprojective: bool,
}

/// Split off tokens matching `class` without touching heads.
pub(crate) fn split_punct(sentence: &Sentence, class: PunctClass) -> (Vec<Token>, StripLog) {
    let mut kept = Vec::new();
    let mut log = StripLog::default();
    for token in &sentence.tokens {
        if is_punct(token, class) {
            log.removed.push(token.clone());
        } else {
            log.kept_forms.push(token.form.clone());
            kept.push(token.clone());
        }
    }
    (kept, log)
}

/// Remove punctuation, compacting ids and remapping heads. Dependents of a
/// removed token are lifted to its nearest surviving ancestor.
pub fn strip_punct(sentence: &Sentence, class: PunctClass) -> Result<(Sentence, StripLog), PerturbError> {
    let report = validate(sentence);
    if !report.is_valid() {
        return Err(PerturbError::Invalid(report));
    }

    let n = sentence.len();
    let removed: Vec<bool> = std::iter::once(false)
        .chain(sentence.tokens.iter().map(|t| is_punct(t, class)))
        .collect();

    if removed[1..].iter().all(|&r| r) {
        return Err(PerturbError::AllPunct);
    }
    let root = sentence.root().expect("valid sentence has a root");
    if removed[root] {
        return Err(PerturbError::RootIsPunct {
            id: root,
            form: sentence.tokens[root - 1].form.clone(),
        });
    }

    let mut new_position = vec![0; n + 1];
    let mut next = 0;
    for pos in 1..=n {
        if !removed[pos] {
            next += 1;
            new_position[pos] = next;
        }
    }

    let (mut kept, mut log) = split_punct(sentence, class);
    for token in &mut kept {
        let mut head = token.head;
        while head != 0 && removed[head] {
            head = sentence.tokens[head - 1].head;
        }
        if head != token.head {
            log.lifted_dependents += 1;
        }
        token.head = new_position[head];
    }

    let mut stripped = Sentence {
        tokens: kept,
        comments: sentence.comments.clone(),
    };
    stripped.renumber();
    debug_assert!(validate(&stripped).is_valid());

    Ok((stripped, log))
}

/// Reinsert tokens removed by [`strip_punct`] into a (possibly re-parsed)
/// core sentence. Commas attach to their left neighbour, or the root token
/// when sentence-initial. All other reinserted tokens attach to the root
/// token.
pub fn attach_stripped(core: &Sentence, log: &StripLog) -> Result<Sentence, PerturbError> {
    if core.len() != log.kept_forms.len() {
        return Err(PerturbError::Alignment(format!(
            "core has {} tokens, log expects {}",
            core.len(),
            log.kept_forms.len()
        )));
    }
    if let Some((idx, (token, form))) = core
        .tokens
        .iter()
        .zip(&log.kept_forms)
        .enumerate()
        .find(|(_, (t, f))| &t.form != *f)
    {
        return Err(PerturbError::Alignment(format!(
            "token {} is '{}', log expects '{}'",
            idx + 1,
            token.form,
            form
        )));
    }
    if log.removed.is_empty() {
        return Ok(core.clone());
    }

    let total = log.original_len();
    let mut is_removed = vec![false; total + 1];
    let mut last = 0;
    for token in &log.removed {
        if token.id <= last || token.id > total {
            return Err(PerturbError::Alignment(format!(
                "removed position {} out of order or beyond length {}",
                token.id, total
            )));
        }
        is_removed[token.id] = true;
        last = token.id;
    }

    let core_root = core
        .root()
        .ok_or_else(|| PerturbError::Alignment("core sentence has no root".to_owned()))?;

    // Positions of core tokens in the restored sentence.
    let mut core_position = vec![0; core.len() + 1];
    let mut core_idx = 0;
    for (pos, &gone) in is_removed.iter().enumerate().skip(1) {
        if !gone {
            core_idx += 1;
            core_position[core_idx] = pos;
        }
    }
    let root = core_position[core_root];

    let mut removed = log.removed.iter();
    let mut core_tokens = core.tokens.iter();
    let mut tokens = Vec::with_capacity(total);
    for (pos, &gone) in is_removed.iter().enumerate().skip(1) {
        if gone {
            let mut token = removed.next().expect("counted above").clone();
            token.id = pos;
            token.head = if token.form == COMMA && pos > 1 { pos - 1 } else { root };
            token.deprel = PUNCT_DEPREL.to_owned();
            tokens.push(token);
        } else {
            let mut token = core_tokens.next().expect("counted above").clone();
            token.id = pos;
            token.head = core_position[token.head];
            tokens.push(token);
        }
    }

    Ok(Sentence {
        tokens,
        comments: core.comments.clone(),
    })
}

/// Per-word injection decisions, indexed by original position - 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InjectionSites {
    pub comma_before: Vec<bool>,
    pub dot_after: Vec<bool>,
}

impl InjectionSites {
    pub fn none(n: usize) -> Self {
        InjectionSites {
            comma_before: vec![false; n],
            dot_after: vec![false; n],
        }
    }

    /// Two Bernoulli draws per word, comma first.
    pub fn draw<R: Rng>(n: usize, chi: f64, delta: f64, rng: &mut R) -> Self {
        let mut sites = InjectionSites::none(n);
        for i in 0..n {
            sites.comma_before[i] = rng.gen_bool(chi);
            sites.dot_after[i] = rng.gen_bool(delta);
        }
        sites
    }

    pub fn count(&self) -> usize {
        self.comma_before.iter().chain(&self.dot_after).filter(|&&b| b).count()
    }
}

/// Random generator for the sentence at `ordinal` under `master_seed`.
pub fn sentence_rng(master_seed: u64, ordinal: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(ordinal);
    rng
}

enum Slot {
    Word(usize),
    Comma,
    Dot,
}

/// Insert punctuation at the given sites.
pub fn apply_injection(sentence: &Sentence, sites: &InjectionSites) -> Result<(Sentence, InjectLog), PerturbError> {
    let report = validate(sentence);
    if !report.is_valid() {
        return Err(PerturbError::Invalid(report));
    }
    let n = sentence.len();
    assert_eq!(sites.comma_before.len(), n, "one comma decision per word");
    assert_eq!(sites.dot_after.len(), n, "one dot decision per word");

    let mut slots = Vec::with_capacity(n + sites.count());
    for i in 0..n {
        if sites.comma_before[i] {
            slots.push(Slot::Comma);
        }
        slots.push(Slot::Word(i + 1));
        if sites.dot_after[i] {
            slots.push(Slot::Dot);
        }
    }

    let mut new_position = vec![0; n + 1];
    for (idx, slot) in slots.iter().enumerate() {
        if let Slot::Word(old) = slot {
            new_position[*old] = idx + 1;
        }
    }
    let root = new_position[sentence.root().expect("valid sentence has a root")];

    let mut log = InjectLog::default();
    let mut tokens = Vec::with_capacity(slots.len());
    for (idx, slot) in slots.iter().enumerate() {
        let pos = idx + 1;
        let token = match slot {
            Slot::Word(old) => {
                let mut token = sentence.tokens[old - 1].clone();
                token.id = pos;
                token.head = new_position[token.head];
                token
            }
            Slot::Comma | Slot::Dot => {
                let (form, head) = match slot {
                    Slot::Comma if pos > 1 => (COMMA, pos - 1),
                    Slot::Comma => (COMMA, root),
                    _ => (DOT, root),
                };
                log.injected.push(Injected {
                    new_position: pos,
                    form: form.to_owned(),
                    head,
                });
                Token::punctuation(pos, form, head)
            }
        };
        tokens.push(token);
    }

    let injected = Sentence {
        tokens,
        comments: sentence.comments.clone(),
    };
    debug_assert!(validate(&injected).is_valid());

    log.made_nonprojective =
        !log.injected.is_empty() && is_projective_unchecked(sentence) && !is_projective_unchecked(&injected);

    Ok((injected, log))
}

/// Inject punctuation into the sentence at `ordinal` (0-based) of a
/// document, drawing from the generator derived from the master seed.
pub fn inject_punct(
    sentence: &Sentence,
    config: &PerturbConfig,
    ordinal: usize,
) -> Result<(Sentence, InjectLog), PerturbError> {
    let mut rng = sentence_rng(config.master_seed, ordinal as u64);
    let sites = InjectionSites::draw(sentence.len(), config.chi, config.delta, &mut rng);
    apply_injection(sentence, &sites)
}

/// Inject punctuation into every sentence. Output does not depend on thread
/// scheduling.
pub fn inject_document(document: &Document, config: &PerturbConfig) -> Result<(Document, Vec<InjectLog>), PerturbError> {
    let results: Vec<_> = document
        .sentences
        .par_iter()
        .enumerate()
        .map(|(idx, s)| inject_punct(s, config, idx).map_err(|e| e.in_sentence(idx + 1)))
        .collect::<Result<_, _>>()?;
    let (sentences, logs) = results.into_iter().unzip();
    Ok((Document::new(document.source_name.clone(), sentences), logs))
}

pub fn strip_document(document: &Document, class: PunctClass) -> Result<(Document, Vec<StripLog>), PerturbError> {
    let results: Vec<_> = document
        .sentences
        .par_iter()
        .enumerate()
        .map(|(idx, s)| strip_punct(s, class).map_err(|e| e.in_sentence(idx + 1)))
        .collect::<Result<_, _>>()?;
    let (sentences, logs) = results.into_iter().unzip();
    Ok((Document::new(document.source_name.clone(), sentences), logs))
}

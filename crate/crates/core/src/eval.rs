//! Attachment scoring with punctuation excluded, and the relative error
//! increase used to compare a perturbed condition against its baseline.
//!
//! Gold and system sentences may differ in their punctuation tokens. The
//! non-punctuation tokens are aligned in order by surface form and heads
//! are compared through that alignment.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conll::Document;
use crate::tree::{is_punct, PunctClass, Sentence, Token, PUNCT_UPOS};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("non-punctuation tokens diverge at gold token {gold_index}: gold '{gold_form}', system '{system_form}'")]
    Alignment {
        gold_index: usize,
        gold_form: String,
        system_form: String,
    },

    #[error("gold has {gold} sentences, system has {system}")]
    SentenceCount { gold: usize, system: usize },

    #[error("sentence {sentence}: {source}")]
    InSentence {
        sentence: usize,
        #[source]
        source: Box<EvalError>,
    },

    #[error("relative error increase is undefined for a baseline score of {0}")]
    UndefinedMetric(f64),
}

/// Pairs of aligned (gold position, system position), both 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alignment {
    pub pairs: Vec<(usize, usize)>,
    system_to_gold: Vec<Option<usize>>,
}

impl Alignment {
    /// Gold position aligned to a system position.
    pub fn gold_of(&self, system_position: usize) -> Option<usize> {
        self.system_to_gold.get(system_position).copied().flatten()
    }
}

/// Whether an unmatched system token may be skipped during alignment. Only
/// input-derived columns are consulted, never the predicted label.
fn skippable(token: &Token, class: PunctClass) -> bool {
    match class {
        PunctClass::DotsAndCommas => is_punct(token, class),
        PunctClass::AllPunct => {
            token.upos == PUNCT_UPOS || (!token.form.is_empty() && token.form.chars().all(|c| !c.is_alphanumeric()))
        }
    }
}

/// Align the gold tokens that are not punctuation with system tokens of the
/// same form, in order. Which tokens count as punctuation is decided on the
/// gold side; system tokens left over must look like punctuation.
pub fn align_nonpunct(gold: &Sentence, system: &Sentence, class: PunctClass) -> Result<Alignment, EvalError> {
    let mut pairs = Vec::new();
    let mut system_to_gold = vec![None; system.len() + 1];
    let mut system_tokens = system.tokens.iter();

    for g in gold.tokens.iter().filter(|t| !is_punct(t, class)) {
        loop {
            match system_tokens.next() {
                Some(s) if s.form == g.form => {
                    pairs.push((g.id, s.id));
                    system_to_gold[s.id] = Some(g.id);
                    break;
                }
                Some(s) if skippable(s, class) => continue,
                other => {
                    return Err(EvalError::Alignment {
                        gold_index: g.id,
                        gold_form: g.form.clone(),
                        system_form: other.map(|s| s.form.clone()).unwrap_or_else(|| "<end>".to_owned()),
                    })
                }
            }
        }
    }
    if let Some(extra) = system_tokens.find(|s| !skippable(s, class)) {
        return Err(EvalError::Alignment {
            gold_index: gold.len() + 1,
            gold_form: "<end>".to_owned(),
            system_form: extra.form.clone(),
        });
    }

    Ok(Alignment { pairs, system_to_gold })
}

/// Counts for one sentence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceScore {
    pub scored: usize,
    pub head_correct: usize,
    pub both_correct: usize,
}

/// Nearest ancestor-or-self of `position` accepted by `keep`, 0 for the root.
fn lift(sentence: &Sentence, mut position: usize, keep: impl Fn(usize) -> bool) -> usize {
    for _ in 0..=sentence.len() {
        if position == 0 || keep(position) {
            return position;
        }
        position = sentence.tokens[position - 1].head;
    }
    0
}

pub fn score_sentence(gold: &Sentence, system: &Sentence, class: PunctClass) -> Result<SentenceScore, EvalError> {
    let alignment = align_nonpunct(gold, system, class)?;
    let identical = gold.len() == system.len() && gold.tokens.iter().zip(&system.tokens).all(|(g, s)| g.form == s.form);

    let mut score = SentenceScore::default();
    for &(g, s) in &alignment.pairs {
        let gold_token = &gold.tokens[g - 1];
        let system_token = &system.tokens[s - 1];
        let (gold_head, system_head) = (gold_token.head, system_token.head);

        let head_ok = if identical {
            gold_head == system_head
        } else if gold_head == 0 {
            system_head == 0
        } else if !is_punct(&gold.tokens[gold_head - 1], class) {
            alignment.gold_of(system_head) == Some(gold_head)
        } else {
            let gold_lift = lift(gold, gold_head, |p| !is_punct(&gold.tokens[p - 1], class));
            let system_lift = lift(system, system_head, |p| alignment.gold_of(p).is_some());
            if gold_lift == 0 {
                system_lift == 0
            } else {
                alignment.gold_of(system_lift) == Some(gold_lift)
            }
        };

        score.scored += 1;
        if head_ok {
            score.head_correct += 1;
            if gold_token.deprel == system_token.deprel {
                score.both_correct += 1;
            }
        }
    }
    Ok(score)
}

/// Micro-averaged attachment scores over non-punctuation tokens.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scored_tokens: usize,
    pub head_correct: usize,
    pub both_correct: usize,
    pub uas: f64,
    pub las: f64,
    pub per_sentence: Vec<SentenceScore>,
}

impl EvalReport {
    /// Pool sentence counts. With nothing to score both fractions are 1.
    pub fn from_sentences(per_sentence: Vec<SentenceScore>) -> Self {
        let scored_tokens = per_sentence.iter().map(|s| s.scored).sum();
        let head_correct = per_sentence.iter().map(|s| s.head_correct).sum();
        let both_correct = per_sentence.iter().map(|s| s.both_correct).sum();
        let frac = |correct: usize| {
            if scored_tokens == 0 {
                1.0
            } else {
                correct as f64 / scored_tokens as f64
            }
        };
        EvalReport {
            scored_tokens,
            head_correct,
            both_correct,
            uas: frac(head_correct),
            las: frac(both_correct),
            per_sentence,
        }
    }

    /// Pool several reports into one micro-average.
    pub fn pooled<'a, I: IntoIterator<Item = &'a EvalReport>>(reports: I) -> Self {
        EvalReport::from_sentences(
            reports
                .into_iter()
                .flat_map(|r| r.per_sentence.iter().copied())
                .collect(),
        )
    }
}

pub fn attachment_scores(gold: &Document, system: &Document, class: PunctClass) -> Result<EvalReport, EvalError> {
    if gold.len() != system.len() {
        return Err(EvalError::SentenceCount {
            gold: gold.len(),
            system: system.len(),
        });
    }
    let per_sentence = gold
        .sentences
        .iter()
        .zip(&system.sentences)
        .enumerate()
        .map(|(idx, (g, s))| {
            score_sentence(g, s, class).map_err(|e| EvalError::InSentence {
                sentence: idx + 1,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport::from_sentences(per_sentence))
}

/// Proportional growth of the error rate from `baseline` to `system`:
/// `(1 - system) / (1 - baseline) - 1`.
pub fn relative_error_increase(baseline: f64, system: f64) -> Result<f64, EvalError> {
    if baseline.is_nan() || baseline >= 1.0 {
        return Err(EvalError::UndefinedMetric(baseline));
    }
    Ok((1.0 - system) / (1.0 - baseline) - 1.0)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub baseline_las: f64,
    pub condition_las: IndexMap<String, f64>,
    pub rel_err_increase: IndexMap<String, f64>,
}

pub fn robustness_report(
    baseline: &EvalReport,
    conditions: &IndexMap<String, EvalReport>,
) -> Result<RobustnessReport, EvalError> {
    let mut report = RobustnessReport {
        baseline_las: baseline.las,
        ..Default::default()
    };
    for (name, condition) in conditions {
        report.condition_las.insert(name.clone(), condition.las);
        report
            .rel_err_increase
            .insert(name.clone(), relative_error_increase(baseline.las, condition.las)?);
    }
    Ok(report)
}

/// Sentence selection predicates for evaluating on non-standard text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SentenceFilter {
    /// At least five tokens and no punctuation of any kind.
    NoPunctMin5,
    /// More than one token made up only of dots.
    MultiDot,
}

impl SentenceFilter {
    pub fn accepts(self, sentence: &Sentence) -> bool {
        match self {
            SentenceFilter::NoPunctMin5 => {
                sentence.len() >= 5
                    && !sentence
                        .tokens
                        .iter()
                        .any(|t| is_punct(t, PunctClass::AllPunct) || is_punct(t, PunctClass::DotsAndCommas))
            }
            SentenceFilter::MultiDot => {
                sentence
                    .tokens
                    .iter()
                    .filter(|t| !t.form.is_empty() && t.form.chars().all(|c| c == '.'))
                    .count()
                    > 1
            }
        }
    }
}

impl std::str::FromStr for SentenceFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "no-punct-min5" => Ok(SentenceFilter::NoPunctMin5),
            "multi-dot" => Ok(SentenceFilter::MultiDot),
            other => Err(format!(
                "unknown sentence filter '{}', expected 'no-punct-min5' or 'multi-dot'",
                other
            )),
        }
    }
}

/// Keep the sentence pairs whose gold side passes `filter`.
pub fn filter_pairs(gold: &Document, system: &Document, filter: SentenceFilter) -> (Document, Document) {
    let (g, s): (Vec<_>, Vec<_>) = gold
        .sentences
        .iter()
        .zip(&system.sentences)
        .filter(|(g, _)| filter.accepts(g))
        .map(|(g, s)| (g.clone(), s.clone()))
        .unzip();
    (
        Document::new(gold.source_name.clone(), g),
        Document::new(system.source_name.clone(), s),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturb::strip_punct;
    use crate::tree::john_27;

    fn doc(s: Sentence) -> Document {
        Document::new("t", vec![s])
    }

    #[test]
    fn identical_alignment() {
        let s = john_27();
        let a = align_nonpunct(&s, &s, PunctClass::DotsAndCommas).unwrap();
        assert_eq!(a.pairs, vec![(1, 1), (3, 3), (5, 5), (6, 6)]);
    }

    #[test]
    fn stripped_alignment() {
        let gold = john_27();
        let (system, _) = strip_punct(&gold, PunctClass::DotsAndCommas).unwrap();
        let a = align_nonpunct(&gold, &system, PunctClass::DotsAndCommas).unwrap();
        assert_eq!(a.pairs, vec![(1, 1), (3, 2), (5, 3), (6, 4)]);
    }

    #[test]
    fn substituted_form_fails() {
        let gold = john_27();
        let mut system = gold.clone();
        system.tokens[5].form = "blues".to_owned();
        match align_nonpunct(&gold, &system, PunctClass::DotsAndCommas) {
            Err(EvalError::Alignment { gold_index: 6, .. }) => (),
            other => panic!("unexpected {:?}", other),
        }
        let mut shorter = gold.clone();
        shorter.tokens.pop();
        shorter.tokens.pop();
        assert!(align_nonpunct(&gold, &shorter, PunctClass::DotsAndCommas).is_err());
    }

    #[test]
    fn predicted_punct_label_does_not_break_alignment() {
        let gold = john_27();
        let mut system = john_27();
        system.tokens[0].deprel = "punct".to_owned();
        let a = align_nonpunct(&gold, &system, PunctClass::AllPunct).unwrap();
        assert_eq!(a.pairs.len(), 4);
        let r = attachment_scores(&doc(gold), &doc(system), PunctClass::AllPunct).unwrap();
        assert_eq!(r.uas, 1.0);
        assert_eq!(r.las, 0.75);
    }

    #[test]
    fn leftover_words_fail_alignment() {
        let gold = john_27();
        let mut system = john_27();
        system.tokens.push(crate::tree::Token::new(8, "again", "ADV", 5, "advmod"));
        assert!(align_nonpunct(&gold, &system, PunctClass::AllPunct).is_err());
    }

    #[test]
    fn self_score_is_perfect() {
        let r = attachment_scores(&doc(john_27()), &doc(john_27()), PunctClass::AllPunct).unwrap();
        assert_eq!(r.scored_tokens, 4);
        assert_eq!(r.uas, 1.0);
        assert_eq!(r.las, 1.0);
    }

    #[test]
    fn one_head_error() {
        let mut system = john_27();
        system.tokens[2].head = 5;
        let r = attachment_scores(&doc(john_27()), &doc(system), PunctClass::DotsAndCommas).unwrap();
        assert_eq!(r.uas, 0.75);
        assert_eq!(r.las, 0.75);
    }

    #[test]
    fn one_label_error() {
        let mut system = john_27();
        system.tokens[5].deprel = "iobj".to_owned();
        let r = attachment_scores(&doc(john_27()), &doc(system), PunctClass::DotsAndCommas).unwrap();
        assert_eq!(r.uas, 1.0);
        assert_eq!(r.las, 0.75);
    }

    #[test]
    fn stripped_system_is_perfect() {
        let gold = john_27();
        let (system, _) = strip_punct(&gold, PunctClass::DotsAndCommas).unwrap();
        let r = attachment_scores(&doc(gold), &doc(system), PunctClass::DotsAndCommas).unwrap();
        assert_eq!(r.las, 1.0);
    }

    #[test]
    fn lifted_heads_match_through_punct() {
        let gold = Sentence::from_parts(vec![
            ("a", "X", 4, "dep"),
            (",", "PUNCT", 4, "punct"),
            ("b", "X", 2, "dep"),
            ("c", "X", 0, "root"),
        ]);
        let (system, _) = strip_punct(&gold, PunctClass::DotsAndCommas).unwrap();
        let r = attachment_scores(&doc(gold), &doc(system), PunctClass::DotsAndCommas).unwrap();
        assert_eq!(r.las, 1.0);
    }

    #[test]
    fn system_head_on_punct_is_wrong() {
        let gold = john_27();
        let mut system = john_27();
        // attach "jazz" to the final dot
        system.tokens[5].head = 7;
        let mut system_more = system.clone();
        system_more.tokens.push(crate::tree::Token::punctuation(8, ",", 5));
        let r = attachment_scores(&doc(gold), &doc(system_more), PunctClass::DotsAndCommas).unwrap();
        assert_eq!(r.head_correct, 3);
    }

    #[test]
    fn sentence_count_mismatch() {
        let g = Document::new("g", vec![john_27(), john_27()]);
        let s = doc(john_27());
        assert!(matches!(
            attachment_scores(&g, &s, PunctClass::AllPunct),
            Err(EvalError::SentenceCount { gold: 2, system: 1 })
        ));
    }

    #[test]
    fn relative_error_examples() {
        let close = |a: f64, b: f64| (a - b).abs() <= 0.0015;
        assert!(close(relative_error_increase(0.918, 0.869).unwrap(), 0.598));
        assert!(close(relative_error_increase(0.910, 0.865).unwrap(), 0.500));
        assert!(close(relative_error_increase(0.894, 0.802).unwrap(), 0.868));
        assert_eq!(relative_error_increase(0.73, 0.73).unwrap(), 0.0);
        assert!(matches!(relative_error_increase(1.0, 0.9), Err(EvalError::UndefinedMetric(_))));
    }

    fn report_with_las(correct: usize, total: usize) -> EvalReport {
        EvalReport::from_sentences(vec![SentenceScore {
            scored: total,
            head_correct: correct,
            both_correct: correct,
        }])
    }

    #[test]
    fn robustness_examples() {
        let baseline = report_with_las(918, 1000);
        let mut conditions = IndexMap::new();
        conditions.insert("no_punct".to_owned(), report_with_las(869, 1000));
        let r = robustness_report(&baseline, &conditions).unwrap();
        assert!((r.rel_err_increase["no_punct"] - 0.598).abs() <= 0.0015);

        let empty = robustness_report(&baseline, &IndexMap::new()).unwrap();
        assert!(empty.condition_las.is_empty());
        assert!(empty.rel_err_increase.is_empty());

        let baseline = report_with_las(898, 1000);
        let mut conditions = IndexMap::new();
        conditions.insert("a".to_owned(), report_with_las(898, 1000));
        conditions.insert("b".to_owned(), report_with_las(898, 1000));
        let r = robustness_report(&baseline, &conditions).unwrap();
        assert_eq!(r.rel_err_increase["a"], 0.0);
        assert_eq!(r.rel_err_increase["b"], 0.0);

        let perfect = report_with_las(10, 10);
        assert!(robustness_report(&perfect, &conditions).is_err());
    }

    #[test]
    fn filters() {
        let no_punct = Sentence::from_parts(vec![
            ("i", "PRON", 2, "nsubj"),
            ("have", "VERB", 0, "root"),
            ("so", "ADV", 4, "advmod"),
            ("many", "ADJ", 5, "amod"),
            ("questions", "NOUN", 2, "dobj"),
        ]);
        assert!(SentenceFilter::NoPunctMin5.accepts(&no_punct));
        assert!(!SentenceFilter::NoPunctMin5.accepts(&john_27()));
        assert!(!SentenceFilter::MultiDot.accepts(&john_27()));

        let dotty = Sentence::from_parts(vec![
            ("idk", "X", 0, "root"),
            ("...", "PUNCT", 1, "punct"),
            ("man", "X", 1, "dep"),
            (".", "PUNCT", 1, "punct"),
        ]);
        assert!(SentenceFilter::MultiDot.accepts(&dotty));
    }
}

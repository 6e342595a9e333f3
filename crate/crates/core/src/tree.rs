//! Dependency tree data model, well-formedness checks, punctuation
//! classification and projectivity analysis.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Placeholder for columns without a value.
pub const EMPTY: &str = "_";

/// Dependency label used for punctuation attachments.
pub const PUNCT_DEPREL: &str = "punct";

/// Universal POS tag for punctuation.
pub const PUNCT_UPOS: &str = "PUNCT";

/// A single node of a dependency tree.
///
/// Only `id`, `form`, `upos`, `head` and `deprel` are interpreted. The
/// remaining CoNLL columns are carried along verbatim.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: String,
    /// Head position, `0` is the artificial root.
    pub head: usize,
    pub deprel: String,
    pub deps: String,
    pub misc: String,
}

impl Token {
    /// Construct a token with `_` in every uninterpreted column.
    pub fn new(
        id: usize,
        form: impl Into<String>,
        upos: impl Into<String>,
        head: usize,
        deprel: impl Into<String>,
    ) -> Self {
        Token {
            id,
            form: form.into(),
            lemma: EMPTY.to_owned(),
            upos: upos.into(),
            xpos: EMPTY.to_owned(),
            feats: EMPTY.to_owned(),
            head,
            deprel: deprel.into(),
            deps: EMPTY.to_owned(),
            misc: EMPTY.to_owned(),
        }
    }

    /// A punctuation token as created by injection or reattachment.
    pub fn punctuation(id: usize, form: &str, head: usize) -> Self {
        let mut token = Token::new(id, form, PUNCT_UPOS, head, PUNCT_DEPREL);
        token.xpos = form.to_owned();
        token
    }
}

/// An ordered list of tokens forming a dependency tree.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    /// Comment lines, including the leading `#`.
    pub comments: Vec<String>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence {
            tokens,
            comments: Vec::new(),
        }
    }

    /// Build a sentence from `(form, upos, head, deprel)` tuples, assigning
    /// ids 1..n.
    pub fn from_parts<'a, I>(parts: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str, usize, &'a str)>,
    {
        Sentence::new(
            parts
                .into_iter()
                .enumerate()
                .map(|(idx, (form, upos, head, deprel))| Token::new(idx + 1, form, upos, head, deprel))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token at 1-based position `id`.
    pub fn token(&self, id: usize) -> Option<&Token> {
        id.checked_sub(1).and_then(|idx| self.tokens.get(idx))
    }

    /// Head of every token, indexed by position - 1.
    pub fn heads(&self) -> Vec<usize> {
        self.tokens.iter().map(|t| t.head).collect()
    }

    pub fn forms(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.form.as_str()).collect()
    }

    /// Position of the first token attached to the artificial root.
    pub fn root(&self) -> Option<usize> {
        self.tokens.iter().find(|t| t.head == 0).map(|t| t.id)
    }

    /// Dependency arcs, one per token, in token order.
    pub fn arcs(&self) -> Vec<Arc> {
        self.tokens
            .iter()
            .map(|t| Arc {
                head: t.head,
                dependent: t.id,
            })
            .collect()
    }

    /// Reassign ids 1..n in the current token order.
    pub(crate) fn renumber(&mut self) {
        for (idx, token) in self.tokens.iter_mut().enumerate() {
            token.id = idx + 1;
        }
    }
}

/// Which tokens count as punctuation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PunctClass {
    /// Exactly the forms `.` and `,`.
    #[serde(rename = "dots-commas")]
    DotsAndCommas,
    /// Any token labelled `punct` or tagged `PUNCT`.
    #[serde(rename = "all")]
    AllPunct,
}

impl PunctClass {
    pub fn name(self) -> &'static str {
        match self {
            PunctClass::DotsAndCommas => "dots-commas",
            PunctClass::AllPunct => "all",
        }
    }
}

impl fmt::Display for PunctClass {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PunctClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dots-commas" | "dots_commas" | "DotsAndCommas" => Ok(PunctClass::DotsAndCommas),
            "all" | "all-punct" | "AllPunct" => Ok(PunctClass::AllPunct),
            other => Err(format!(
                "unknown punctuation class '{}', expected 'dots-commas' or 'all'",
                other
            )),
        }
    }
}

pub fn is_punct(token: &Token, class: PunctClass) -> bool {
    match class {
        PunctClass::DotsAndCommas => token.form == "." || token.form == ",",
        PunctClass::AllPunct => token.deprel == PUNCT_DEPREL || token.upos == PUNCT_UPOS,
    }
}

/// A single well-formedness violation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Violation {
    /// Token at `position` carries a different id.
    IdMismatch { position: usize, id: usize },
    SelfLoop { id: usize },
    HeadOutOfRange { id: usize, head: usize },
    NoRoot,
    MultipleRoots { ids: Vec<usize> },
    /// The listed ids form a head cycle.
    Cycle { ids: Vec<usize> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            Violation::IdMismatch { position, id } => {
                write!(f, "token at position {} has id {}", position, id)
            }
            Violation::SelfLoop { id } => write!(f, "token {} is its own head", id),
            Violation::HeadOutOfRange { id, head } => {
                write!(f, "token {} has head {} outside the sentence", id, head)
            }
            Violation::NoRoot => f.write_str("no token is attached to the root"),
            Violation::MultipleRoots { ids } => {
                write!(f, "multiple tokens attached to the root: {:?}", ids)
            }
            Violation::Cycle { ids } => write!(f, "head cycle through tokens {:?}", ids),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        for (idx, violation) in self.violations.iter().enumerate() {
            if idx > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}", violation)?;
        }
        Ok(())
    }
}

/// Check single-rootedness, head ranges and acyclicity.
pub fn validate(sentence: &Sentence) -> ValidationReport {
    let n = sentence.len();
    let mut violations = Vec::new();

    for (idx, token) in sentence.tokens.iter().enumerate() {
        if token.id != idx + 1 {
            violations.push(Violation::IdMismatch {
                position: idx + 1,
                id: token.id,
            });
        }
    }

    let mut heads_ok = true;
    for (idx, token) in sentence.tokens.iter().enumerate() {
        let id = idx + 1;
        if token.head == id {
            violations.push(Violation::SelfLoop { id });
            heads_ok = false;
        } else if token.head > n {
            violations.push(Violation::HeadOutOfRange {
                id,
                head: token.head,
            });
            heads_ok = false;
        }
    }

    let roots: Vec<usize> = sentence
        .tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.head == 0)
        .map(|(idx, _)| idx + 1)
        .collect();
    match roots.len() {
        0 => violations.push(Violation::NoRoot),
        1 => (),
        _ => violations.push(Violation::MultipleRoots { ids: roots }),
    }

    if heads_ok {
        violations.extend(find_cycles(&sentence.heads()).into_iter().map(|ids| Violation::Cycle { ids }));
    }

    ValidationReport { violations }
}

/// Cycles in a head vector with in-range heads. Each cycle is reported once,
/// with sorted ids.
fn find_cycles(heads: &[usize]) -> Vec<Vec<usize>> {
    const UNSEEN: u8 = 0;
    const ACTIVE: u8 = 1;
    const DONE: u8 = 2;

    let n = heads.len();
    let mut state = vec![UNSEEN; n + 1];
    state[0] = DONE;
    let mut cycles = Vec::new();

    for start in 1..=n {
        let mut path = Vec::new();
        let mut cur = start;
        while state[cur] == UNSEEN {
            state[cur] = ACTIVE;
            path.push(cur);
            cur = heads[cur - 1];
        }
        if state[cur] == ACTIVE {
            let from = path.iter().position(|&p| p == cur).expect("active node on path");
            let mut cycle = path[from..].to_vec();
            cycle.sort_unstable();
            cycles.push(cycle);
        }
        for p in path {
            state[p] = DONE;
        }
    }

    cycles
}

/// A dependency arc. `head` 0 is the artificial root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Arc {
    pub head: usize,
    pub dependent: usize,
}

impl Arc {
    pub fn span(&self) -> (usize, usize) {
        (self.head.min(self.dependent), self.head.max(self.dependent))
    }

    /// Two arcs cross iff their spans strictly interleave.
    pub fn crosses(&self, other: &Arc) -> bool {
        let (l1, r1) = self.span();
        let (l2, r2) = other.span();
        (l1 < l2 && l2 < r1 && r1 < r2) || (l2 < l1 && l1 < r2 && r2 < r1)
    }
}

impl fmt::Display for Arc {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "({},{})", self.head, self.dependent)
    }
}

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("sentence is not a well-formed dependency tree: {0}")]
    Invalid(ValidationReport),
}

fn ensure_valid(sentence: &Sentence) -> Result<(), TreeError> {
    let report = validate(sentence);
    if report.is_valid() {
        Ok(())
    } else {
        Err(TreeError::Invalid(report))
    }
}

/// All pairs of crossing arcs, root arcs included. Pairs are ordered by the
/// dependent of the first arc, then the dependent of the second.
pub fn crossing_arc_pairs(sentence: &Sentence) -> Result<Vec<(Arc, Arc)>, TreeError> {
    ensure_valid(sentence)?;
    let arcs = sentence.arcs();
    let mut pairs = Vec::new();
    for (i, a) in arcs.iter().enumerate() {
        for b in &arcs[i + 1..] {
            if a.crosses(b) {
                pairs.push((*a, *b));
            }
        }
    }
    Ok(pairs)
}

pub fn is_projective(sentence: &Sentence) -> Result<bool, TreeError> {
    ensure_valid(sentence)?;
    Ok(is_projective_unchecked(sentence))
}

/// Projectivity test for sentences already known to be valid.
pub(crate) fn is_projective_unchecked(sentence: &Sentence) -> bool {
    let arcs = sentence.arcs();
    !arcs
        .iter()
        .enumerate()
        .any(|(i, a)| arcs[i + 1..].iter().any(|b| a.crosses(b)))
}

#[cfg(test)]
pub(crate) use tests::john_27;

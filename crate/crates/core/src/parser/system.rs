//! The arc-eager transition system and its static oracle.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::tree::{is_projective_unchecked, validate, Sentence};

use super::ParserError;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transition {
    Shift,
    Reduce,
    LeftArc(String),
    RightArc(String),
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            Transition::Shift => f.write_str("SH"),
            Transition::Reduce => f.write_str("RE"),
            Transition::LeftArc(l) => write!(f, "LA({})", l),
            Transition::RightArc(l) => write!(f, "RA({})", l),
        }
    }
}

/// Transition kinds, without labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    Shift,
    Reduce,
    LeftArc,
    RightArc,
}

/// Stack, buffer and partial arcs over a sentence of `n` tokens. Position 0
/// is the artificial root, which starts on the stack.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParserState {
    stack: Vec<usize>,
    /// The buffer is `next..=n`.
    next: usize,
    n: usize,
    heads: Vec<Option<usize>>,
    labels: Vec<Option<String>>,
    leftmost: Vec<Option<usize>>,
    rightmost: Vec<Option<usize>>,
    root_attached: bool,
}

impl ParserState {
    pub fn new(n: usize) -> Self {
        ParserState {
            stack: vec![0],
            next: 1,
            n,
            heads: vec![None; n + 1],
            labels: vec![None; n + 1],
            leftmost: vec![None; n + 1],
            rightmost: vec![None; n + 1],
            root_attached: false,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_terminal(&self) -> bool {
        self.next > self.n
    }

    pub fn stack(&self) -> &[usize] {
        &self.stack
    }

    /// Stack element `depth` from the top.
    pub fn stack_at(&self, depth: usize) -> Option<usize> {
        self.stack.len().checked_sub(depth + 1).map(|idx| self.stack[idx])
    }

    /// Buffer element `offset` from the front.
    pub fn buffer_at(&self, offset: usize) -> Option<usize> {
        let pos = self.next + offset;
        if pos <= self.n {
            Some(pos)
        } else {
            None
        }
    }

    pub fn head(&self, position: usize) -> Option<usize> {
        self.heads[position]
    }

    pub fn label(&self, position: usize) -> Option<&str> {
        self.labels[position].as_deref()
    }

    pub fn leftmost_child(&self, position: usize) -> Option<usize> {
        self.leftmost[position]
    }

    pub fn rightmost_child(&self, position: usize) -> Option<usize> {
        self.rightmost[position]
    }

    pub fn is_permissible(&self, m: Move) -> bool {
        let top = *self.stack.last().expect("root never leaves the stack");
        let buffer = !self.is_terminal();
        match m {
            Move::Shift => buffer,
            Move::RightArc => buffer && (top != 0 || !self.root_attached),
            Move::LeftArc => buffer && top != 0 && self.heads[top].is_none(),
            Move::Reduce => top != 0 && self.heads[top].is_some(),
        }
    }

    fn attach(&mut self, head: usize, dependent: usize, label: &str) {
        self.heads[dependent] = Some(head);
        self.labels[dependent] = Some(label.to_owned());
        if head == 0 {
            self.root_attached = true;
        }
        if self.leftmost[head].is_none_or(|l| dependent < l) {
            self.leftmost[head] = Some(dependent);
        }
        if self.rightmost[head].is_none_or(|r| dependent > r) {
            self.rightmost[head] = Some(dependent);
        }
    }

    /// Apply a transition. Panics if it is not permissible.
    pub fn apply(&mut self, transition: &Transition) {
        let (m, label) = match transition {
            Transition::Shift => (Move::Shift, None),
            Transition::Reduce => (Move::Reduce, None),
            Transition::LeftArc(l) => (Move::LeftArc, Some(l.as_str())),
            Transition::RightArc(l) => (Move::RightArc, Some(l.as_str())),
        };
        self.apply_move(m, label.unwrap_or(""));
    }

    pub(crate) fn apply_move(&mut self, m: Move, label: &str) {
        assert!(self.is_permissible(m), "{:?} not permissible", m);
        let top = *self.stack.last().expect("root never leaves the stack");
        match m {
            Move::Shift => {
                self.stack.push(self.next);
                self.next += 1;
            }
            Move::Reduce => {
                self.stack.pop();
            }
            Move::LeftArc => {
                self.attach(self.next, top, label);
                self.stack.pop();
            }
            Move::RightArc => {
                self.attach(top, self.next, label);
                self.stack.push(self.next);
                self.next += 1;
            }
        }
    }

    /// Arcs built so far as `(head, dependent, label)`, by dependent.
    pub fn arcs(&self) -> Vec<(usize, usize, String)> {
        (1..=self.n)
            .filter_map(|d| {
                self.heads[d].map(|h| (h, d, self.labels[d].clone().expect("label set with head")))
            })
            .collect()
    }
}

/// The gold transition in `state` for a projective tree.
pub(crate) fn gold_move(state: &ParserState, gold_heads: &[usize]) -> Move {
    let head_of = |pos: usize| gold_heads[pos - 1];
    let top = state.stack_at(0).expect("root never leaves the stack");
    let Some(front) = state.buffer_at(0) else {
        return Move::Reduce;
    };

    if top != 0 && head_of(top) == front {
        Move::LeftArc
    } else if head_of(front) == top {
        Move::RightArc
    } else if state.stack[..state.stack.len() - 1]
        .iter()
        .any(|&k| head_of(front) == k || (k != 0 && head_of(k) == front))
    {
        Move::Reduce
    } else {
        Move::Shift
    }
}

/// The static arc-eager oracle sequence for a projective tree.
pub fn oracle_transitions(sentence: &Sentence) -> Result<Vec<Transition>, ParserError> {
    let report = validate(sentence);
    if !report.is_valid() {
        return Err(ParserError::Invalid(report));
    }
    if !is_projective_unchecked(sentence) {
        return Err(ParserError::NonProjective);
    }

    let heads = sentence.heads();
    let mut state = ParserState::new(sentence.len());
    let mut transitions = Vec::with_capacity(2 * sentence.len());
    while !state.is_terminal() {
        let transition = match gold_move(&state, &heads) {
            Move::Shift => Transition::Shift,
            Move::Reduce => Transition::Reduce,
            Move::LeftArc => {
                let top = state.stack_at(0).expect("non-empty stack");
                Transition::LeftArc(sentence.tokens[top - 1].deprel.clone())
            }
            Move::RightArc => {
                let front = state.buffer_at(0).expect("non-empty buffer");
                Transition::RightArc(sentence.tokens[front - 1].deprel.clone())
            }
        };
        state.apply(&transition);
        transitions.push(transition);
    }
    Ok(transitions)
}

/// Replay transitions from the initial state.
pub fn replay(n: usize, transitions: &[Transition]) -> ParserState {
    let mut state = ParserState::new(n);
    for t in transitions {
        state.apply(t);
    }
    state
}

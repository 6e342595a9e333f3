//! Reading and writing CoNLL-X / CoNLL-U treebanks.
//!
//! Both formats are handled at the level of their shared 10-column frame.
//! Multiword-token ranges (`3-4`) are dropped with a warning, empty nodes
//! (`3.1`) are rejected.

use std::io::{self, BufRead, Write};

use log::warn;
use thiserror::Error;

use crate::tree::{validate, Sentence, Token, ValidationReport};

pub const N_COLUMNS: usize = 10;

/// One token line, split into its columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawRecord {
    pub line_number: usize,
    pub columns: Vec<String>,
}

/// Interpretation of the ID column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordId {
    Word(usize),
    Range(usize, usize),
    Empty(usize, usize),
}

impl RawRecord {
    pub fn parse(line_number: usize, line: &str) -> Result<Self, ReadError> {
        let columns: Vec<String> = line.split('\t').map(ToOwned::to_owned).collect();
        if columns.len() != N_COLUMNS {
            return Err(ReadError::ColumnCount {
                line: line_number,
                found: columns.len(),
            });
        }
        Ok(RawRecord { line_number, columns })
    }

    pub fn id(&self) -> Result<RecordId, ReadError> {
        let field = &self.columns[0];
        let bad = || ReadError::BadField {
            line: self.line_number,
            column: "ID",
            value: field.clone(),
        };
        let positive = |s: &str| s.parse::<usize>().ok().filter(|&v| v > 0);

        if let Some((from, to)) = field.split_once('-') {
            Ok(RecordId::Range(positive(from).ok_or_else(bad)?, positive(to).ok_or_else(bad)?))
        } else if let Some((word, sub)) = field.split_once('.') {
            let word = word.parse::<usize>().map_err(|_| bad())?;
            Ok(RecordId::Empty(word, positive(sub).ok_or_else(bad)?))
        } else {
            positive(field).map(RecordId::Word).ok_or_else(bad)
        }
    }

    fn into_token(self, id: usize) -> Result<Token, ReadError> {
        let head = self.columns[6].parse::<usize>().map_err(|_| ReadError::BadField {
            line: self.line_number,
            column: "HEAD",
            value: self.columns[6].clone(),
        })?;
        let [_, form, lemma, upos, xpos, feats, _, deprel, deps, misc]: [String; N_COLUMNS] =
            self.columns.try_into().expect("column count checked");
        Ok(Token {
            id,
            form,
            lemma,
            upos,
            xpos,
            feats,
            head,
            deprel,
            deps,
            misc,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Document {
    pub sentences: Vec<Sentence>,
    pub source_name: String,
}

impl Document {
    pub fn new(source_name: impl Into<String>, sentences: Vec<Sentence>) -> Self {
        Document {
            sentences,
            source_name: source_name.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn n_tokens(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error("line {line}: expected 10 tab-separated columns, found {found}")]
    ColumnCount { line: usize, found: usize },

    #[error("line {line}: invalid {column} value '{value}'")]
    BadField {
        line: usize,
        column: &'static str,
        value: String,
    },

    #[error("line {line}: expected token id {expected}, found {found}")]
    IdSequence { line: usize, expected: usize, found: usize },

    #[error("sentence {sentence} (line {line}): empty nodes are not supported")]
    EmptyNode { sentence: usize, line: usize },

    #[error("sentence {sentence} (ending at line {line}) is not a valid tree: {report}")]
    Invalid {
        sentence: usize,
        line: usize,
        report: ValidationReport,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Accumulates the lines of one sentence.
#[derive(Default)]
struct SentenceBuilder {
    comments: Vec<String>,
    tokens: Vec<Token>,
    last_line: usize,
}

/// Read a whole treebank. Sentence ordinals in errors are 1-based.
pub fn read_conll<R: BufRead>(reader: R, source_name: &str) -> Result<Document, ReadError> {
    let mut sentences = Vec::new();
    let mut builder = SentenceBuilder::default();

    let finish = |builder: &mut SentenceBuilder, sentences: &mut Vec<Sentence>| -> Result<(), ReadError> {
        // Comments separated from their sentence by blank lines carry over.
        if builder.tokens.is_empty() {
            return Ok(());
        }
        let b = std::mem::take(builder);
        let sentence = Sentence {
            tokens: b.tokens,
            comments: b.comments,
        };
        let report = validate(&sentence);
        if !report.is_valid() {
            return Err(ReadError::Invalid {
                sentence: sentences.len() + 1,
                line: b.last_line,
                report,
            });
        }
        sentences.push(sentence);
        Ok(())
    };

    for (idx, line) in reader.lines().enumerate() {
        let line_number = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);

        if line.trim().is_empty() {
            finish(&mut builder, &mut sentences)?;
            continue;
        }

        builder.last_line = line_number;

        if line.starts_with('#') {
            if !builder.tokens.is_empty() {
                warn!("{}:{}: comment inside sentence body", source_name, line_number);
            }
            builder.comments.push(line.to_owned());
            continue;
        }

        let record = RawRecord::parse(line_number, line)?;
        match record.id()? {
            RecordId::Word(id) => {
                let expected = builder.tokens.len() + 1;
                if id != expected {
                    return Err(ReadError::IdSequence {
                        line: line_number,
                        expected,
                        found: id,
                    });
                }
                builder.tokens.push(record.into_token(id)?);
            }
            RecordId::Range(from, to) => {
                warn!(
                    "{}:{}: dropping multiword token range {}-{}",
                    source_name, line_number, from, to
                );
            }
            RecordId::Empty(..) => {
                return Err(ReadError::EmptyNode {
                    sentence: sentences.len() + 1,
                    line: line_number,
                });
            }
        }
    }
    finish(&mut builder, &mut sentences)?;
    if !builder.comments.is_empty() {
        warn!("{}: dropping {} trailing comment line(s)", source_name, builder.comments.len());
    }

    Ok(Document::new(source_name, sentences))
}

/// Write one sentence followed by a blank line.
pub fn write_sentence<W: Write>(sentence: &Sentence, writer: &mut W) -> io::Result<()> {
    for comment in &sentence.comments {
        writeln!(writer, "{}", comment)?;
    }
    for (idx, t) in sentence.tokens.iter().enumerate() {
        writeln!(
            writer,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            idx + 1,
            t.form,
            t.lemma,
            t.upos,
            t.xpos,
            t.feats,
            t.head,
            t.deprel,
            t.deps,
            t.misc
        )?;
    }
    writeln!(writer)
}

pub fn write_conll<W: Write>(document: &Document, mut writer: W) -> io::Result<()> {
    for sentence in &document.sentences {
        write_sentence(sentence, &mut writer)?;
    }
    writer.flush()
}

/// Serialize a document to a string.
pub fn to_conll_string(document: &Document) -> String {
    let mut buf = Vec::new();
    write_conll(document, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("tokens are UTF-8")
}

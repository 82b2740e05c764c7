//! Annotated-corpus input/output, dataset statistics, and seeded synthetic
//! corpora.
//!
//! The inline text format, per sentence:
//!
//! ```text
//! #types ADE POB
//! Sever joint , shoulder and upper body pain .
//! 0,0,3,3,7,7 ADE|5,6 POB
//! ```
//!
//! Line 1 holds space-separated tokens, line 2 the annotations separated by
//! `|` (it may be empty). Each annotation is a comma-separated list of
//! inclusive 0-based token index pairs `s0,e0,s1,e1,...`, one single space,
//! then the type name. Sentences are separated by one blank line. The
//! optional `#types` header declares the type inventory; other `#` lines
//! before the first sentence are treated as comments. Sentence ids are
//! positional (`s0`, `s1`, ...).

mod synth;

pub use synth::{generate_synthetic, EntityTemplate, GeneratedCorpus, SynthError, SynthSpec, SynthStats};

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::entity::{Entity, EntityType, Segment, Sentence};

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {kind}")]
    Syntax { line: usize, kind: ParseErrorKind },
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseErrorKind {
    #[error("annotation has an odd number of indices")]
    OddIndexCount,
    #[error("bad index `{0}`")]
    BadIndex(String),
    #[error("segment end {end} precedes start {start}")]
    EndBeforeStart { start: usize, end: usize },
    #[error("segments within an annotation must be ordered and disjoint")]
    SegmentsOverlap,
    #[error("index {index} out of range for a {n}-token sentence")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("unknown type {0} (not in the declared inventory)")]
    UnknownType(String),
    #[error("bad type name `{0}`")]
    BadTypeName(String),
    #[error("annotation `{0}` is missing its type")]
    MissingType(String),
    #[error("empty token line")]
    EmptyTokenLine,
    #[error("bad token: {0}")]
    BadToken(String),
    #[error("expected an annotation line before the sentence ended")]
    MissingAnnotationLine,
}

/// Which partition a corpus belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

/// An annotated corpus: sentences with their gold mentions plus the declared
/// type inventory. Every entity is validated against its sentence on the way
/// in.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    sentences: Vec<(Sentence, Vec<Entity>)>,
    split: Split,
    types: Vec<EntityType>,
}

impl Corpus {
    pub fn new(
        sentences: Vec<(Sentence, Vec<Entity>)>,
        split: Split,
        types: Vec<EntityType>,
    ) -> Self {
        Self {
            sentences,
            split,
            types,
        }
    }

    pub fn sentences(&self) -> &[(Sentence, Vec<Entity>)] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn types(&self) -> &[EntityType] {
        &self.types
    }

    pub fn gold(&self) -> Vec<Vec<Entity>> {
        self.sentences.iter().map(|(_, e)| e.clone()).collect()
    }
}

/// Table-1 style corpus statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorpusStats {
    /// Sentence count.
    pub sentences: usize,
    /// Total mention count.
    pub mentions: usize,
    /// Discontinuous mention count.
    pub discontinuous: usize,
    /// Percentage of discontinuous mentions, `100 * D / M` (0 when M = 0).
    pub percent_discontinuous: f64,
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "S {}", self.sentences)?;
        writeln!(f, "M {}", self.mentions)?;
        writeln!(f, "D {}", self.discontinuous)?;
        writeln!(f, "P {:.1}", self.percent_discontinuous)
    }
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let sentences = corpus.len();
    let mentions: usize = corpus.sentences().iter().map(|(_, e)| e.len()).sum();
    let discontinuous: usize = corpus
        .sentences()
        .iter()
        .map(|(_, e)| e.iter().filter(|x| x.is_discontinuous()).count())
        .sum();
    let percent_discontinuous = if mentions == 0 {
        0.0
    } else {
        100.0 * discontinuous as f64 / mentions as f64
    };
    CorpusStats {
        sentences,
        mentions,
        discontinuous,
        percent_discontinuous,
    }
}

fn syntax(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError::Syntax { line, kind }
}

fn parse_annotation(
    text: &str,
    line: usize,
    n: usize,
    inventory: Option<&BTreeSet<EntityType>>,
) -> Result<Entity, ParseError> {
    let (indices, type_name) = text
        .rsplit_once(' ')
        .ok_or_else(|| syntax(line, ParseErrorKind::MissingType(text.to_string())))?;
    let etype = EntityType::new(type_name)
        .map_err(|_| syntax(line, ParseErrorKind::BadTypeName(type_name.to_string())))?;
    if let Some(inventory) = inventory {
        if !inventory.contains(&etype) {
            return Err(syntax(line, ParseErrorKind::UnknownType(type_name.to_string())));
        }
    }
    let numbers: Vec<usize> = indices
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| syntax(line, ParseErrorKind::BadIndex(part.to_string())))
        })
        .collect::<Result<_, _>>()?;
    if numbers.is_empty() || !numbers.len().is_multiple_of(2) {
        return Err(syntax(line, ParseErrorKind::OddIndexCount));
    }
    let mut segments = Vec::with_capacity(numbers.len() / 2);
    for pair in numbers.chunks(2) {
        let (start, end) = (pair[0], pair[1]);
        if end < start {
            return Err(syntax(line, ParseErrorKind::EndBeforeStart { start, end }));
        }
        if end >= n {
            return Err(syntax(line, ParseErrorKind::IndexOutOfRange { index: end, n }));
        }
        segments.push(Segment::new(start, end).expect("checked above"));
    }
    Entity::new(etype, segments).map_err(|_| syntax(line, ParseErrorKind::SegmentsOverlap))
}

/// Parses the inline format. The type inventory comes from the `#types`
/// header when present and is inferred from the data otherwise.
pub fn parse_inline(text: &str) -> Result<Corpus, ParseError> {
    let mut declared: Option<BTreeSet<EntityType>> = None;
    let mut declared_order: Vec<EntityType> = Vec::new();
    let mut sentences = Vec::new();

    let mut lines = text.lines().enumerate().peekable();

    // Header region: #types plus arbitrary # comments.
    while let Some(&(line_no, line)) = lines.peek() {
        let trimmed = line.trim_end();
        if let Some(rest) = trimmed.strip_prefix("#types") {
            let mut set = BTreeSet::new();
            for name in rest.split_whitespace() {
                let etype = EntityType::new(name).map_err(|_| {
                    syntax(line_no + 1, ParseErrorKind::BadTypeName(name.to_string()))
                })?;
                if set.insert(etype.clone()) {
                    declared_order.push(etype);
                }
            }
            declared = Some(set);
            lines.next();
        } else if trimmed.starts_with('#') || trimmed.is_empty() {
            lines.next();
        } else {
            break;
        }
    }

    while let Some((line_no, token_line)) = lines.next() {
        let token_line = token_line.trim_end();
        if token_line.is_empty() {
            continue;
        }
        let tokens: Vec<String> = token_line.split_whitespace().map(str::to_string).collect();
        if tokens.is_empty() {
            return Err(syntax(line_no + 1, ParseErrorKind::EmptyTokenLine));
        }
        let sentence = Sentence::new(format!("s{}", sentences.len()), tokens)
            .map_err(|e| syntax(line_no + 1, ParseErrorKind::BadToken(e.to_string())))?;

        let (ann_no, ann_line) = lines
            .next()
            .ok_or_else(|| syntax(line_no + 1, ParseErrorKind::MissingAnnotationLine))?;
        let ann_line = ann_line.trim_end();
        let mut entities = Vec::new();
        if !ann_line.is_empty() {
            for piece in ann_line.split('|') {
                entities.push(parse_annotation(
                    piece.trim(),
                    ann_no + 1,
                    sentence.len(),
                    declared.as_ref(),
                )?);
            }
        }
        entities.sort();
        entities.dedup();
        sentences.push((sentence, entities));
    }

    let types = if let Some(_declared) = declared {
        declared_order
    } else {
        let mut inferred: BTreeSet<EntityType> = BTreeSet::new();
        for (_, entities) in &sentences {
            for e in entities {
                inferred.insert(e.etype().clone());
            }
        }
        inferred.into_iter().collect()
    };

    Ok(Corpus::new(sentences, Split::Train, types))
}

/// Writes the canonical inline form: a `#types` header, entities sorted, one
/// blank line between sentences. `parse_inline(write_inline(c)) == c` for
/// corpora with positional sentence ids.
pub fn write_inline(corpus: &Corpus) -> String {
    let mut out = String::new();
    if !corpus.types().is_empty() {
        out.push_str("#types");
        for t in corpus.types() {
            out.push(' ');
            out.push_str(t.name());
        }
        out.push('\n');
    }
    for (k, (sentence, entities)) in corpus.sentences().iter().enumerate() {
        if k > 0 || !corpus.types().is_empty() {
            out.push('\n');
        }
        out.push_str(&sentence.tokens().join(" "));
        out.push('\n');
        let mut sorted: Vec<&Entity> = entities.iter().collect();
        sorted.sort();
        sorted.dedup();
        let ann = sorted
            .iter()
            .map(|e| {
                let indices = e
                    .segments()
                    .iter()
                    .flat_map(|s| [s.start(), s.end()])
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                format!("{} {}", indices, e.etype())
            })
            .collect::<Vec<_>>()
            .join("|");
        out.push_str(&ann);
        out.push('\n');
    }
    out
}

//! Core domain types: sentences, token segments, entity types and (possibly
//! discontinuous) entity mentions.
//!
//! All types are immutable after construction and validated on the way in, so
//! downstream code can rely on their invariants without re-checking.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Validation failures for the core domain types.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum EntityError {
    #[error("sentence must contain at least one token")]
    EmptySentence,
    #[error("token {index} is empty or contains whitespace")]
    BadToken { index: usize },
    #[error("entity type name is empty or contains reserved characters")]
    BadTypeName,
    #[error("segment start {start} exceeds end {end}")]
    SegmentInverted { start: usize, end: usize },
    #[error("entity has no segments")]
    NoSegments,
    #[error("entity segments must be ordered and disjoint (segment {index} starts at {start}, previous ends at {prev_end})")]
    SegmentsNotDisjoint {
        index: usize,
        start: usize,
        prev_end: usize,
    },
}

/// A tokenized sentence with an opaque identifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    id: String,
    tokens: Vec<String>,
}

impl Sentence {
    /// Builds a sentence, rejecting empty token lists and empty or
    /// whitespace-bearing tokens (the inline file format is space-delimited,
    /// so such tokens would be unrepresentable).
    pub fn new(id: impl Into<String>, tokens: Vec<String>) -> Result<Self, EntityError> {
        if tokens.is_empty() {
            return Err(EntityError::EmptySentence);
        }
        for (index, tok) in tokens.iter().enumerate() {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(EntityError::BadToken { index });
            }
        }
        Ok(Self {
            id: id.into(),
            tokens,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Number of tokens.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }
}

/// A contiguous token span with inclusive 0-based endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Segment {
    start: usize,
    end: usize,
}

impl Segment {
    pub fn new(start: usize, end: usize) -> Result<Self, EntityError> {
        if start > end {
            return Err(EntityError::SegmentInverted { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    /// Number of tokens covered.
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// True when the segment lies inside a sentence of `n` tokens.
    pub fn fits(&self, n: usize) -> bool {
        self.end < n
    }

    /// True when the two spans share at least one token.
    pub fn overlaps(&self, other: &Segment) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.start, self.end)
    }
}

/// Total order on segments by (start, end); drives every deterministic
/// iteration over decoded segments and clique members.
pub fn segment_order(a: &Segment, b: &Segment) -> Ordering {
    (a.start, a.end).cmp(&(b.start, b.end))
}

/// A named entity category from the corpus-declared inventory.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityType(String);

impl EntityType {
    /// Type names must be non-empty and free of whitespace and the inline
    /// format's separators.
    pub fn new(name: impl Into<String>) -> Result<Self, EntityError> {
        let name = name.into();
        if name.is_empty()
            || name
                .chars()
                .any(|c| c.is_whitespace() || c == '|' || c == ',')
        {
            return Err(EntityError::BadTypeName);
        }
        Ok(Self(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A typed mention: an ordered list of pairwise-disjoint segments. A
/// continuous mention has exactly one segment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Entity {
    etype: EntityType,
    segments: Vec<Segment>,
}

impl Entity {
    /// Builds an entity, requiring segments to be sorted by start with
    /// `segments[k].end < segments[k+1].start`.
    pub fn new(etype: EntityType, segments: Vec<Segment>) -> Result<Self, EntityError> {
        if segments.is_empty() {
            return Err(EntityError::NoSegments);
        }
        for index in 1..segments.len() {
            let prev_end = segments[index - 1].end();
            if segments[index].start() <= prev_end {
                return Err(EntityError::SegmentsNotDisjoint {
                    index,
                    start: segments[index].start(),
                    prev_end,
                });
            }
        }
        Ok(Self { etype, segments })
    }

    /// Convenience constructor from inclusive (start, end) pairs.
    pub fn from_pairs(etype: EntityType, pairs: &[(usize, usize)]) -> Result<Self, EntityError> {
        let segments = pairs
            .iter()
            .map(|&(s, e)| Segment::new(s, e))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(etype, segments)
    }

    pub fn etype(&self) -> &EntityType {
        &self.etype
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_discontinuous(&self) -> bool {
        self.segments.len() > 1
    }

    /// True when every segment lies inside a sentence of `n` tokens.
    pub fn fits(&self, n: usize) -> bool {
        self.segments.iter().all(|s| s.fits(n))
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, seg) in self.segments.iter().enumerate() {
            if k > 0 {
                f.write_str("+")?;
            }
            write!(f, "{seg}")?;
        }
        write!(f, ":{}", self.etype)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sentence_rejects_empty_and_bad_tokens() {
        assert_eq!(Sentence::new("s", vec![]), Err(EntityError::EmptySentence));
        assert_eq!(
            Sentence::new("s", vec!["a".into(), "".into()]),
            Err(EntityError::BadToken { index: 1 })
        );
        assert_eq!(
            Sentence::new("s", vec!["a b".into()]),
            Err(EntityError::BadToken { index: 0 })
        );
        assert!(Sentence::new("s", vec!["a".into()]).is_ok());
    }

    #[test]
    fn segment_order_examples() {
        let s = |a, b| Segment::new(a, b).unwrap();
        assert_eq!(segment_order(&s(0, 1), &s(0, 2)), Ordering::Less);
        assert_eq!(segment_order(&s(3, 3), &s(3, 3)), Ordering::Equal);
        assert_eq!(segment_order(&s(5, 6), &s(0, 7)), Ordering::Greater);
    }

    #[test]
    fn segment_rejects_inverted() {
        assert_eq!(
            Segment::new(3, 1),
            Err(EntityError::SegmentInverted { start: 3, end: 1 })
        );
    }

    #[test]
    fn entity_requires_ordered_disjoint_segments() {
        let t = EntityType::new("ADE").unwrap();
        assert!(Entity::from_pairs(t.clone(), &[(0, 1), (7, 7)]).is_ok());
        // adjacent but disjoint is allowed
        assert!(Entity::from_pairs(t.clone(), &[(0, 1), (2, 3)]).is_ok());
        assert!(matches!(
            Entity::from_pairs(t.clone(), &[(0, 1), (1, 2)]),
            Err(EntityError::SegmentsNotDisjoint { .. })
        ));
        assert!(matches!(
            Entity::from_pairs(t.clone(), &[(5, 6), (0, 1)]),
            Err(EntityError::SegmentsNotDisjoint { .. })
        ));
        assert_eq!(Entity::new(t, vec![]), Err(EntityError::NoSegments));
    }

    #[test]
    fn type_name_validation() {
        assert!(EntityType::new("ADE").is_ok());
        assert!(EntityType::new("").is_err());
        assert!(EntityType::new("A B").is_err());
        assert!(EntityType::new("A|B").is_err());
        assert!(EntityType::new("A,B").is_err());
    }

    fn arb_segment() -> impl Strategy<Value = Segment> {
        (0usize..30, 0usize..8).prop_map(|(s, l)| Segment::new(s, s + l).unwrap())
    }

    proptest! {
        #[test]
        fn segment_order_is_total(a in arb_segment(), b in arb_segment(), c in arb_segment()) {
            // antisymmetry
            prop_assert_eq!(segment_order(&a, &b), segment_order(&b, &a).reverse());
            // reflexive equality
            prop_assert_eq!(segment_order(&a, &a), Ordering::Equal);
            // transitivity
            if segment_order(&a, &b) != Ordering::Greater
                && segment_order(&b, &c) != Ordering::Greater
            {
                prop_assert_ne!(segment_order(&a, &c), Ordering::Greater);
            }
        }
    }
}

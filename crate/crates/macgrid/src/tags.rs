//! Tag alphabets and the two sparse grid tag tables.
//!
//! Segment tables live on the upper triangle (`i <= j`); edge tables use
//! canonicalized coordinates (`i <= j` after folding). Cells hold tag *sets*:
//! one token pair may carry several tags at once. Dense probability grids
//! (model output) are kept separate in [`ProbGrid`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entity::EntityType;

/// Configuration-level failures: bad alphabets, bad thresholds, shape
/// mismatches between grids and alphabets.
#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("entity type inventory is empty")]
    EmptyTypeInventory,
    #[error("duplicate entity type {0} in inventory")]
    DuplicateType(String),
    #[error("threshold {0} must lie strictly between 0 and 1")]
    InvalidThreshold(f64),
    #[error("probability grid has {got} tag dimensions, alphabet expects {expected}")]
    GridTagMismatch { got: usize, expected: usize },
    #[error("probability grid kind does not match the requested table kind")]
    GridKindMismatch,
}

/// Role of a segment within its mention: first segment of a discontinuous
/// mention, a later segment, or a whole continuous mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SegmentRole {
    Begin,
    Inside,
    Single,
}

impl SegmentRole {
    pub const ALL: [SegmentRole; 3] = [SegmentRole::Begin, SegmentRole::Inside, SegmentRole::Single];

    pub fn as_str(&self) -> &'static str {
        match self {
            SegmentRole::Begin => "B",
            SegmentRole::Inside => "I",
            SegmentRole::Single => "S",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "B" => Some(SegmentRole::Begin),
            "I" => Some(SegmentRole::Inside),
            "S" => Some(SegmentRole::Single),
            _ => None,
        }
    }
}

/// How an edge aligns two segments: by their start tokens or by their end
/// tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeKind {
    HeadToHead,
    TailToTail,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 2] = [EdgeKind::HeadToHead, EdgeKind::TailToTail];

    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeKind::HeadToHead => "H2H",
            EdgeKind::TailToTail => "T2T",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "H2H" => Some(EdgeKind::HeadToHead),
            "T2T" => Some(EdgeKind::TailToTail),
            _ => None,
        }
    }
}

/// A typed segment tag, e.g. `ADE-B`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SegmentTag {
    pub etype: EntityType,
    pub role: SegmentRole,
}

impl fmt::Display for SegmentTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.etype, self.role.as_str())
    }
}

impl SegmentTag {
    pub fn new(etype: EntityType, role: SegmentRole) -> Self {
        Self { etype, role }
    }

    /// Parses `TYPE-ROLE`; the role is the suffix after the last dash.
    pub fn parse(s: &str) -> Option<Self> {
        let (ty, role) = s.rsplit_once('-')?;
        Some(Self {
            etype: EntityType::new(ty).ok()?,
            role: SegmentRole::parse(role)?,
        })
    }
}

/// A typed edge tag, e.g. `ADE-H2H`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeTag {
    pub etype: EntityType,
    pub kind: EdgeKind,
}

impl fmt::Display for EdgeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.etype, self.kind.as_str())
    }
}

impl EdgeTag {
    pub fn new(etype: EntityType, kind: EdgeKind) -> Self {
        Self { etype, kind }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let (ty, kind) = s.rsplit_once('-')?;
        Some(Self {
            etype: EntityType::new(ty).ok()?,
            kind: EdgeKind::parse(kind)?,
        })
    }
}

/// Fixed, documented index orders for both tag alphabets. Segment tags are
/// indexed type-major over `[B, I, S]` (size `3 * |types|`), edge tags
/// type-major over `[H2H, T2T]` (size `2 * |types|`), so serialized grids are
/// bit-stable across runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagAlphabet {
    types: Vec<EntityType>,
}

impl TagAlphabet {
    pub fn new(types: Vec<EntityType>) -> Result<Self, ConfigError> {
        if types.is_empty() {
            return Err(ConfigError::EmptyTypeInventory);
        }
        let mut seen = BTreeSet::new();
        for t in &types {
            if !seen.insert(t.clone()) {
                return Err(ConfigError::DuplicateType(t.name().to_string()));
            }
        }
        Ok(Self { types })
    }

    pub fn types(&self) -> &[EntityType] {
        &self.types
    }

    pub fn segment_size(&self) -> usize {
        3 * self.types.len()
    }

    pub fn edge_size(&self) -> usize {
        2 * self.types.len()
    }

    fn type_pos(&self, etype: &EntityType) -> Option<usize> {
        self.types.iter().position(|t| t == etype)
    }

    pub fn segment_index(&self, tag: &SegmentTag) -> Option<usize> {
        let role = SegmentRole::ALL.iter().position(|r| *r == tag.role)?;
        Some(self.type_pos(&tag.etype)? * 3 + role)
    }

    pub fn segment_tag(&self, index: usize) -> Option<SegmentTag> {
        let ty = self.types.get(index / 3)?;
        Some(SegmentTag::new(ty.clone(), SegmentRole::ALL[index % 3]))
    }

    pub fn edge_index(&self, tag: &EdgeTag) -> Option<usize> {
        let kind = EdgeKind::ALL.iter().position(|k| *k == tag.kind)?;
        Some(self.type_pos(&tag.etype)? * 2 + kind)
    }

    pub fn edge_tag(&self, index: usize) -> Option<EdgeTag> {
        let ty = self.types.get(index / 2)?;
        Some(EdgeTag::new(ty.clone(), EdgeKind::ALL[index % 2]))
    }
}

/// Sparse upper-triangular table of segment tag sets. Cells with empty tag
/// sets are absent.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SegmentTagTable {
    n: usize,
    cells: BTreeMap<(usize, usize), BTreeSet<SegmentTag>>,
}

impl SegmentTagTable {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            cells: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Inserts a tag at `(i, j)`. Panics on lower-triangle or out-of-range
    /// coordinates; encoders validate bounds before calling.
    pub fn insert(&mut self, i: usize, j: usize, tag: SegmentTag) {
        assert!(i <= j && j < self.n, "segment cell ({i},{j}) out of range");
        self.cells.entry((i, j)).or_default().insert(tag);
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&BTreeSet<SegmentTag>> {
        self.cells.get(&(i, j))
    }

    /// Non-empty cells in (i, j) order.
    pub fn cells(&self) -> impl Iterator<Item = (&(usize, usize), &BTreeSet<SegmentTag>)> {
        self.cells.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }
}

/// Sparse edge tag table with canonicalized coordinates (`i <= j`).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeTagTable {
    n: usize,
    cells: BTreeMap<(usize, usize), BTreeSet<EdgeTag>>,
}

impl EdgeTagTable {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            cells: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Inserts a tag, folding `(i, j)` with `i > j` into `(j, i)`.
    pub fn insert(&mut self, i: usize, j: usize, tag: EdgeTag) {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        assert!(b < self.n, "edge cell ({i},{j}) out of range");
        self.cells.entry((a, b)).or_default().insert(tag);
    }

    /// Looks up the canonical cell for an unordered token pair.
    pub fn get(&self, i: usize, j: usize) -> Option<&BTreeSet<EdgeTag>> {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.cells.get(&key)
    }

    pub fn contains(&self, i: usize, j: usize, tag: &EdgeTag) -> bool {
        self.get(i, j).is_some_and(|set| set.contains(tag))
    }

    pub fn cells(&self) -> impl Iterator<Item = (&(usize, usize), &BTreeSet<EdgeTag>)> {
        self.cells.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }
}

/// Which task a dense probability grid belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridKind {
    Segment,
    Edge,
}

/// Dense `n x n x K` grid of per-tag probabilities in `[0, 1]`. For
/// `GridKind::Segment` consumers ignore entries with `j < i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbGrid {
    n: usize,
    tags: usize,
    kind: GridKind,
    values: Vec<f64>,
}

impl ProbGrid {
    pub fn zeros(n: usize, tags: usize, kind: GridKind) -> Self {
        Self {
            n,
            tags,
            kind,
            values: vec![0.0; n * n * tags],
        }
    }

    pub fn filled(n: usize, tags: usize, kind: GridKind, value: f64) -> Self {
        assert!((0.0..=1.0).contains(&value));
        Self {
            n,
            tags,
            kind,
            values: vec![value; n * n * tags],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tags(&self) -> usize {
        self.tags
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.n && j < self.n && k < self.tags);
        (i * self.n + j) * self.tags + k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        debug_assert!((0.0..=1.0).contains(&value), "probability out of range");
        let off = self.offset(i, j, k);
        self.values[off] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

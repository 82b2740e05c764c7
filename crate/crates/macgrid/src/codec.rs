//! Conversion between entity annotations and the two tag tables: gold-target
//! construction for training, thresholding and tag extraction for inference.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::entity::{segment_order, Entity, Segment, Sentence};
use crate::tags::{
    ConfigError, EdgeKind, EdgeTag, EdgeTagTable, GridKind, ProbGrid, SegmentRole, SegmentTag,
    SegmentTagTable, TagAlphabet,
};

#[derive(Debug, Error, PartialEq)]
pub enum EncodeError {
    #[error("entity {entity} does not fit sentence {sentence} of length {n}")]
    EntityOutOfBounds {
        entity: String,
        sentence: String,
        n: usize,
    },
}

/// A decoded segment and every tag its cell carried; a segment may carry tags
/// of several types and roles at once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedSegment {
    pub segment: Segment,
    pub tags: BTreeSet<SegmentTag>,
}

impl TypedSegment {
    pub fn has(&self, etype: &crate::entity::EntityType, role: SegmentRole) -> bool {
        self.tags
            .iter()
            .any(|t| t.role == role && &t.etype == etype)
    }
}

/// Decision threshold for converting probabilities to tags, strictly inside
/// (0, 1). The comparison is inclusive: a probability equal to the threshold
/// fires.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold(f64);

impl Threshold {
    pub fn new(value: f64) -> Result<Self, ConfigError> {
        if !(value > 0.0 && value < 1.0) {
            return Err(ConfigError::InvalidThreshold(value));
        }
        Ok(Self(value))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold(0.5)
    }
}

fn check_bounds(sentence: &Sentence, entities: &[Entity]) -> Result<(), EncodeError> {
    for e in entities {
        if !e.fits(sentence.len()) {
            return Err(EncodeError::EntityOutOfBounds {
                entity: e.to_string(),
                sentence: sentence.id().to_string(),
                n: sentence.len(),
            });
        }
    }
    Ok(())
}

/// Builds the gold segment table: a continuous entity marks its only segment
/// with `S`; a discontinuous entity marks its first segment `B` and every
/// later segment `I`. Cells accumulate tags across entities.
pub fn encode_segment_table(
    sentence: &Sentence,
    entities: &[Entity],
) -> Result<SegmentTagTable, EncodeError> {
    check_bounds(sentence, entities)?;
    let mut table = SegmentTagTable::new(sentence.len());
    for e in entities {
        if e.is_discontinuous() {
            for (k, seg) in e.segments().iter().enumerate() {
                let role = if k == 0 {
                    SegmentRole::Begin
                } else {
                    SegmentRole::Inside
                };
                table.insert(seg.start(), seg.end(), SegmentTag::new(e.etype().clone(), role));
            }
        } else {
            let seg = e.segments()[0];
            table.insert(
                seg.start(),
                seg.end(),
                SegmentTag::new(e.etype().clone(), SegmentRole::Single),
            );
        }
    }
    Ok(table)
}

/// Builds the gold edge table: for every unordered pair of segments of a
/// discontinuous entity, the pair of start tokens gets `H2H` and the pair of
/// end tokens gets `T2T`. Continuous entities contribute nothing.
pub fn encode_edge_table(
    sentence: &Sentence,
    entities: &[Entity],
) -> Result<EdgeTagTable, EncodeError> {
    check_bounds(sentence, entities)?;
    let mut table = EdgeTagTable::new(sentence.len());
    for e in entities {
        if !e.is_discontinuous() {
            continue;
        }
        let segs = e.segments();
        for a in 0..segs.len() {
            for b in a + 1..segs.len() {
                table.insert(
                    segs[a].start(),
                    segs[b].start(),
                    EdgeTag::new(e.etype().clone(), EdgeKind::HeadToHead),
                );
                table.insert(
                    segs[a].end(),
                    segs[b].end(),
                    EdgeTag::new(e.etype().clone(), EdgeKind::TailToTail),
                );
            }
        }
    }
    Ok(table)
}

/// A thresholded grid becomes whichever table kind the grid was produced for.
#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdedTable {
    Segment(SegmentTagTable),
    Edge(EdgeTagTable),
}

/// Converts a dense probability grid into a sparse tag table: tag `k` is
/// present at a cell iff its probability is `>=` the threshold. Segment grids
/// consult only the upper triangle; edge grids fold `(j, i)` activations into
/// the canonical cell `(min, max)` by union.
pub fn apply_threshold(
    grid: &ProbGrid,
    alphabet: &TagAlphabet,
    threshold: Threshold,
) -> Result<ThresholdedTable, ConfigError> {
    let theta = threshold.value();
    let n = grid.n();
    match grid.kind() {
        GridKind::Segment => {
            if grid.tags() != alphabet.segment_size() {
                return Err(ConfigError::GridTagMismatch {
                    got: grid.tags(),
                    expected: alphabet.segment_size(),
                });
            }
            let mut table = SegmentTagTable::new(n);
            for i in 0..n {
                for j in i..n {
                    for k in 0..grid.tags() {
                        if grid.get(i, j, k) >= theta {
                            table.insert(i, j, alphabet.segment_tag(k).expect("index in range"));
                        }
                    }
                }
            }
            Ok(ThresholdedTable::Segment(table))
        }
        GridKind::Edge => {
            if grid.tags() != alphabet.edge_size() {
                return Err(ConfigError::GridTagMismatch {
                    got: grid.tags(),
                    expected: alphabet.edge_size(),
                });
            }
            let mut table = EdgeTagTable::new(n);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..grid.tags() {
                        if grid.get(i, j, k) >= theta {
                            table.insert(i, j, alphabet.edge_tag(k).expect("index in range"));
                        }
                    }
                }
            }
            Ok(ThresholdedTable::Edge(table))
        }
    }
}

/// Extracts one [`TypedSegment`] per non-empty cell, sorted by
/// [`segment_order`], with tags copied verbatim.
pub fn decode_segments(table: &SegmentTagTable) -> Vec<TypedSegment> {
    let mut out: Vec<TypedSegment> = table
        .cells()
        .map(|(&(i, j), tags)| TypedSegment {
            segment: Segment::new(i, j).expect("table coordinates are valid"),
            tags: tags.clone(),
        })
        .collect();
    out.sort_by(|a, b| segment_order(&a.segment, &b.segment));
    out
}

/// Encodes the gold entities, decodes them back through the full clique
/// pipeline, and reports whether the input set was recovered exactly. True
/// exactly when the entity set is clique-representable.
pub fn roundtrip_check(sentence: &Sentence, entities: &[Entity]) -> bool {
    let seg_table = match encode_segment_table(sentence, entities) {
        Ok(t) => t,
        Err(_) => return false,
    };
    let edge_table = match encode_edge_table(sentence, entities) {
        Ok(t) => t,
        Err(_) => return false,
    };
    let decoded = match crate::clique::decode_sentence(sentence, &seg_table, &edge_table) {
        Ok((entities, _)) => entities,
        Err(_) => return false,
    };
    let mut want: Vec<Entity> = entities.to_vec();
    want.sort();
    want.dedup();
    decoded == want
}

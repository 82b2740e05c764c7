//! Discontinuous named-entity recognition as maximal-clique discovery over a
//! segment graph.
//!
//! The pipeline has three independent layers:
//!
//! * a grid tagging scheme that encodes (possibly discontinuous) entity
//!   mentions into two sparse tag tables per sentence — segment tags on the
//!   upper triangle and boundary-alignment edge tags ([`codec`]);
//! * a non-parametric decoder that rebuilds mentions by finding maximal
//!   cliques in per-type segment graphs ([`clique`]);
//! * a small trainable neural scorer that predicts both tag grids jointly
//!   from token context, with exact hand-derived gradients ([`scorer`]).
//!
//! [`metrics`] implements exact-match evaluation with the standard filters
//! and breakdowns, and [`corpus`] handles the inline annotation format,
//! dataset statistics, and seeded synthetic corpora.

pub mod clique;
pub mod codec;
pub mod corpus;
pub mod entity;
pub mod metrics;
pub mod scorer;
pub mod tags;

pub use clique::{decode_sentence, DecodeDiagnostics, DecodeError, DecodeOptions};
pub use codec::{
    apply_threshold, decode_segments, encode_edge_table, encode_segment_table, roundtrip_check,
    Threshold, ThresholdedTable, TypedSegment,
};
pub use entity::{segment_order, Entity, EntityError, EntityType, Segment, Sentence};
pub use tags::{
    ConfigError, EdgeKind, EdgeTag, EdgeTagTable, GridKind, ProbGrid, SegmentRole, SegmentTag,
    SegmentTagTable, TagAlphabet,
};

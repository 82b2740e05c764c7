//! End-to-end decoding: build per-type segment graphs from decoded segments
//! and the edge table, enumerate maximal cliques with Bron-Kerbosch
//! backtracking, and recover entity mentions.
//!
//! One graph is built per entity type. Continuous mentions come from `S`
//! tags; discontinuous mentions from maximal cliques of size >= 2. Cliques
//! whose segments overlap are rejected and counted rather than repaired, and
//! isolated `B`/`I` fragments without an `S` tag are dropped.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::codec::{decode_segments, TypedSegment};
use crate::entity::{segment_order, Entity, EntityType, Segment, Sentence};
use crate::tags::{EdgeKind, EdgeTag, EdgeTagTable, SegmentRole, SegmentTagTable};

#[derive(Debug, Error, PartialEq)]
pub enum DecodeError {
    #[error("tag table length {table_n} does not match sentence {id} length {sentence_n}")]
    LengthMismatch {
        id: String,
        sentence_n: usize,
        table_n: usize,
    },
}

/// Undirected graph over the segments of one entity type. Nodes are sorted by
/// [`segment_order`]; adjacency is symmetric with no self-loops.
#[derive(Debug, Clone)]
pub struct SegmentGraph {
    etype: EntityType,
    nodes: Vec<Segment>,
    adjacency: Vec<bool>, // row-major m x m
}

impl SegmentGraph {
    /// Builds a graph directly from nodes and undirected edges; used by tests
    /// and benchmarks that bypass the tag tables.
    pub fn from_edges(etype: EntityType, nodes: Vec<Segment>, edges: &[(usize, usize)]) -> Self {
        let m = nodes.len();
        let mut adjacency = vec![false; m * m];
        for &(u, v) in edges {
            assert!(u != v && u < m && v < m, "edge ({u},{v}) out of range");
            adjacency[u * m + v] = true;
            adjacency[v * m + u] = true;
        }
        Self {
            etype,
            nodes,
            adjacency,
        }
    }

    pub fn etype(&self) -> &EntityType {
        &self.etype
    }

    pub fn nodes(&self) -> &[Segment] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.adjacency[u * self.nodes.len() + v]
    }

    fn neighbors(&self, v: usize) -> BTreeSet<usize> {
        (0..self.nodes.len()).filter(|&u| self.adjacent(v, u)).collect()
    }
}

/// A set of pairwise-adjacent node indices; maximal when produced by
/// [`maximal_cliques`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Clique {
    pub members: Vec<usize>,
}

/// Nodes are the segments carrying a `B` or `I` tag of `etype`; two nodes are
/// adjacent iff the edge table holds both the type's `H2H` tag at their start
/// pair and its `T2T` tag at their end pair.
pub fn build_segment_graph(
    segments: &[TypedSegment],
    edges: &EdgeTagTable,
    etype: &EntityType,
) -> SegmentGraph {
    let nodes: Vec<Segment> = segments
        .iter()
        .filter(|ts| ts.has(etype, SegmentRole::Begin) || ts.has(etype, SegmentRole::Inside))
        .map(|ts| ts.segment)
        .collect();
    let m = nodes.len();
    let mut adjacency = vec![false; m * m];
    let h2h = EdgeTag::new(etype.clone(), EdgeKind::HeadToHead);
    let t2t = EdgeTag::new(etype.clone(), EdgeKind::TailToTail);
    for u in 0..m {
        for v in u + 1..m {
            let linked = edges.contains(nodes[u].start(), nodes[v].start(), &h2h)
                && edges.contains(nodes[u].end(), nodes[v].end(), &t2t);
            if linked {
                adjacency[u * m + v] = true;
                adjacency[v * m + u] = true;
            }
        }
    }
    SegmentGraph {
        etype: etype.clone(),
        nodes,
        adjacency,
    }
}

/// Enumerates every maximal clique with Bron-Kerbosch backtracking. Isolated
/// nodes appear as size-1 cliques. Members are sorted and the clique list is
/// sorted lexicographically, so output is deterministic.
///
/// The recursion branches only on candidates outside the pivot's
/// neighborhood (Tomita pivoting). This changes neither the clique set nor
/// the final ordering, but it is what keeps dense inputs tractable: a noisy
/// scorer near its decision threshold can tag nearly every cell, and the
/// resulting near-complete graphs blow the unpivoted recursion up
/// exponentially while the pivoted one walks them in polynomial time.
pub fn maximal_cliques(graph: &SegmentGraph) -> Vec<Clique> {
    let mut found: Vec<Vec<usize>> = Vec::new();
    let candidates: BTreeSet<usize> = (0..graph.node_count()).collect();
    bron_kerbosch(
        graph,
        &mut Vec::new(),
        candidates,
        BTreeSet::new(),
        &mut found,
    );
    let mut cliques: Vec<Clique> = found
        .into_iter()
        .map(|mut members| {
            members.sort_unstable();
            Clique { members }
        })
        .collect();
    cliques.sort();
    cliques
}

fn bron_kerbosch(
    graph: &SegmentGraph,
    current: &mut Vec<usize>,
    mut candidates: BTreeSet<usize>,
    mut excluded: BTreeSet<usize>,
    found: &mut Vec<Vec<usize>>,
) {
    if candidates.is_empty() {
        if excluded.is_empty() && !current.is_empty() {
            found.push(current.clone());
        }
        return;
    }
    // Pivot: the vertex of P union X with the most candidate neighbors
    // (lowest index wins ties, keeping the traversal deterministic).
    let pivot = candidates
        .iter()
        .chain(excluded.iter())
        .copied()
        .max_by_key(|&u| {
            (
                candidates.iter().filter(|&&v| graph.adjacent(u, v)).count(),
                std::cmp::Reverse(u),
            )
        })
        .expect("candidates is non-empty");
    let order: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&v| !graph.adjacent(pivot, v))
        .collect();
    for v in order {
        let neighbors = graph.neighbors(v);
        current.push(v);
        bron_kerbosch(
            graph,
            current,
            candidates.intersection(&neighbors).copied().collect(),
            excluded.intersection(&neighbors).copied().collect(),
            found,
        );
        current.pop();
        candidates.remove(&v);
        excluded.insert(v);
    }
}

/// Counters for mentions the decoder refused to emit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecodeDiagnostics {
    /// Size-1 cliques whose node carried no `S` tag of the graph's type.
    pub dropped_fragments: usize,
    /// Cliques rejected because their segments overlap pairwise.
    pub rejected_cliques: usize,
    /// Cliques rejected under the strict option because the earliest segment
    /// carried no `B` tag.
    pub rejected_without_begin: usize,
}

impl DecodeDiagnostics {
    pub fn merge(&mut self, other: &DecodeDiagnostics) {
        self.dropped_fragments += other.dropped_fragments;
        self.rejected_cliques += other.rejected_cliques;
        self.rejected_without_begin += other.rejected_without_begin;
    }

    pub fn is_clean(&self) -> bool {
        *self == DecodeDiagnostics::default()
    }
}

/// Decoder options. `require_begin` additionally demands that a clique's
/// earliest segment carry the `B` role of the clique's type.
#[derive(Debug, Clone, Copy, Default)]
pub struct DecodeOptions {
    pub require_begin: bool,
}

/// Recovers the final mention set from typed segments plus the per-type
/// graphs and their maximal cliques. Output is de-duplicated and sorted.
pub fn recover_entities(
    segments: &[TypedSegment],
    per_type: &[(SegmentGraph, Vec<Clique>)],
    options: DecodeOptions,
) -> (Vec<Entity>, DecodeDiagnostics) {
    let mut out: BTreeSet<Entity> = BTreeSet::new();
    let mut diagnostics = DecodeDiagnostics::default();

    // Continuous mentions come straight from S tags.
    for ts in segments {
        for tag in &ts.tags {
            if tag.role == SegmentRole::Single {
                let entity = Entity::new(tag.etype.clone(), vec![ts.segment])
                    .expect("single segment is always valid");
                out.insert(entity);
            }
        }
    }

    for (graph, cliques) in per_type {
        for clique in cliques {
            if clique.members.len() < 2 {
                let seg = graph.nodes()[clique.members[0]];
                let has_single = segments
                    .iter()
                    .any(|ts| ts.segment == seg && ts.has(graph.etype(), SegmentRole::Single));
                if !has_single {
                    diagnostics.dropped_fragments += 1;
                }
                continue;
            }
            let mut segs: Vec<Segment> =
                clique.members.iter().map(|&v| graph.nodes()[v]).collect();
            segs.sort_by(segment_order);
            if options.require_begin {
                let first = segs[0];
                let begins = segments
                    .iter()
                    .any(|ts| ts.segment == first && ts.has(graph.etype(), SegmentRole::Begin));
                if !begins {
                    diagnostics.rejected_without_begin += 1;
                    continue;
                }
            }
            match Entity::new(graph.etype().clone(), segs) {
                Ok(entity) => {
                    out.insert(entity);
                }
                Err(_) => {
                    diagnostics.rejected_cliques += 1;
                }
            }
        }
    }

    (out.into_iter().collect(), diagnostics)
}

/// Full decoding pipeline for one sentence: decode segments, build one graph
/// per entity type, enumerate cliques, recover mentions.
pub fn decode_sentence(
    sentence: &Sentence,
    seg_table: &SegmentTagTable,
    edge_table: &EdgeTagTable,
) -> Result<(Vec<Entity>, DecodeDiagnostics), DecodeError> {
    decode_sentence_with(sentence, seg_table, edge_table, DecodeOptions::default())
}

pub fn decode_sentence_with(
    sentence: &Sentence,
    seg_table: &SegmentTagTable,
    edge_table: &EdgeTagTable,
    options: DecodeOptions,
) -> Result<(Vec<Entity>, DecodeDiagnostics), DecodeError> {
    for table_n in [seg_table.n(), edge_table.n()] {
        if table_n != sentence.len() {
            return Err(DecodeError::LengthMismatch {
                id: sentence.id().to_string(),
                sentence_n: sentence.len(),
                table_n,
            });
        }
    }
    let segments = decode_segments(seg_table);
    let mut types: BTreeSet<EntityType> = BTreeSet::new();
    for ts in &segments {
        for tag in &ts.tags {
            types.insert(tag.etype.clone());
        }
    }
    let per_type: Vec<(SegmentGraph, Vec<Clique>)> = types
        .into_iter()
        .map(|etype| {
            let graph = build_segment_graph(&segments, edge_table, &etype);
            let cliques = maximal_cliques(&graph);
            (graph, cliques)
        })
        .collect();
    Ok(recover_entities(&segments, &per_type, options))
}

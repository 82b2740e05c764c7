//! Exact-match evaluation: overall scores, the discontinuous-sentence and
//! discontinuous-only filters, overlap-pattern categorization, and
//! interval/span-length breakdowns.
//!
//! Conventions: precision, recall and F1 are all defined as 0 when their
//! denominator is 0, and reports flag filters that matched nothing.
//! Duplicate predictions are de-duplicated before scoring, since exact-match
//! counting is otherwise ill-defined.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::entity::Entity;

/// Stated classification rule for overlap patterns, echoed in report headers
/// so the numbers stay interpretable.
pub const OVERLAP_PATTERN_RULE: &str = "a discontinuous mention sharing tokens only within its \
leftmost segment is 'left', only within its rightmost segment is 'right', anything else \
involving shared tokens is 'multiple', and no shared tokens is 'none'";

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("prediction corpus has {predictions} sentences, gold corpus has {gold}")]
    MisalignedCorpora { predictions: usize, gold: usize },
    #[error("overlap patterns are defined for discontinuous mentions only")]
    NotDiscontinuous,
}

/// Raw exact-match counts; `true_positives <= min(predicted, gold)` holds by
/// construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EvalCounts {
    pub true_positives: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl EvalCounts {
    pub fn merge(&mut self, other: &EvalCounts) {
        self.true_positives += other.true_positives;
        self.predicted += other.predicted;
        self.gold += other.gold;
    }

    pub fn precision(&self) -> f64 {
        ratio(self.true_positives, self.predicted)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.true_positives, self.gold)
    }

    pub fn f1(&self) -> f64 {
        let p = self.precision();
        let r = self.recall();
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision/recall/F1 triple with its underlying counts and an explicit flag
/// for filters that selected nothing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ScoreLine {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: EvalCounts,
    pub empty_filter: bool,
}

impl ScoreLine {
    fn from_counts(counts: EvalCounts) -> Self {
        Self {
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
            counts,
            empty_filter: counts.predicted == 0 && counts.gold == 0,
        }
    }
}

/// True iff the types are equal and the segment lists are identical.
pub fn entity_match(a: &Entity, b: &Entity) -> bool {
    a.etype() == b.etype() && a.segments() == b.segments()
}

/// Exact-match counts for one sentence under set semantics.
pub fn score(predictions: &[Entity], gold: &[Entity]) -> EvalCounts {
    let pred_set: BTreeSet<&Entity> = predictions.iter().collect();
    let gold_set: BTreeSet<&Entity> = gold.iter().collect();
    EvalCounts {
        true_positives: pred_set.intersection(&gold_set).count(),
        predicted: pred_set.len(),
        gold: gold_set.len(),
    }
}

/// The three reporting filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Filter {
    /// Every sentence, every mention.
    All,
    /// Only sentences whose gold annotation contains at least one
    /// discontinuous mention; all mentions there.
    DiscSentence,
    /// Only discontinuous mentions, on both sides, in every sentence.
    DiscOnly,
}

/// Corpus-level score under one filter. The two corpora must be aligned
/// sentence by sentence.
pub fn filtered_score(
    predictions: &[Vec<Entity>],
    gold: &[Vec<Entity>],
    filter: Filter,
) -> Result<ScoreLine, EvalError> {
    if predictions.len() != gold.len() {
        return Err(EvalError::MisalignedCorpora {
            predictions: predictions.len(),
            gold: gold.len(),
        });
    }
    let mut counts = EvalCounts::default();
    for (pred, gold) in predictions.iter().zip(gold.iter()) {
        match filter {
            Filter::All => counts.merge(&score(pred, gold)),
            Filter::DiscSentence => {
                if gold.iter().any(Entity::is_discontinuous) {
                    counts.merge(&score(pred, gold));
                }
            }
            Filter::DiscOnly => {
                let pred_disc: Vec<Entity> = pred
                    .iter()
                    .filter(|e| e.is_discontinuous())
                    .cloned()
                    .collect();
                let gold_disc: Vec<Entity> = gold
                    .iter()
                    .filter(|e| e.is_discontinuous())
                    .cloned()
                    .collect();
                counts.merge(&score(&pred_disc, &gold_disc));
            }
        }
    }
    Ok(ScoreLine::from_counts(counts))
}

/// Total number of tokens strictly between consecutive segments.
pub fn interval_length(entity: &Entity) -> usize {
    entity
        .segments()
        .windows(2)
        .map(|w| w[1].start() - w[0].end() - 1)
        .sum()
}

/// Tokens from the first to the last mention token, inclusive.
pub fn span_length(entity: &Entity) -> usize {
    let segs = entity.segments();
    segs[segs.len() - 1].end() - segs[0].start() + 1
}

/// How a discontinuous mention's tokens are shared with the other mentions of
/// its sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapPattern {
    None,
    Left,
    Right,
    Multiple,
}

impl OverlapPattern {
    pub const ALL: [OverlapPattern; 4] = [
        OverlapPattern::None,
        OverlapPattern::Left,
        OverlapPattern::Right,
        OverlapPattern::Multiple,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            OverlapPattern::None => "none",
            OverlapPattern::Left => "left",
            OverlapPattern::Right => "right",
            OverlapPattern::Multiple => "multiple",
        }
    }
}

/// Classifies a discontinuous mention against the other mentions of its
/// sentence (mentions identical to `entity` are not "other"). See
/// [`OVERLAP_PATTERN_RULE`].
pub fn overlap_pattern(
    entity: &Entity,
    all_in_sentence: &[Entity],
) -> Result<OverlapPattern, EvalError> {
    if !entity.is_discontinuous() {
        return Err(EvalError::NotDiscontinuous);
    }
    let mut shared: BTreeSet<usize> = BTreeSet::new();
    for other in all_in_sentence {
        if entity_match(entity, other) {
            continue;
        }
        for a in entity.segments() {
            for b in other.segments() {
                if a.overlaps(b) {
                    shared.extend(a.start().max(b.start())..=a.end().min(b.end()));
                }
            }
        }
    }
    if shared.is_empty() {
        return Ok(OverlapPattern::None);
    }
    let segs = entity.segments();
    let leftmost = segs[0];
    let rightmost = segs[segs.len() - 1];
    let within = |seg: &crate::entity::Segment| {
        shared.iter().all(|&t| seg.start() <= t && t <= seg.end())
    };
    if within(&leftmost) {
        Ok(OverlapPattern::Left)
    } else if within(&rightmost) {
        Ok(OverlapPattern::Right)
    } else {
        Ok(OverlapPattern::Multiple)
    }
}

/// One histogram bucket with its own exact-match score.
#[derive(Debug, Clone, Serialize)]
pub struct BucketLine {
    pub label: String,
    pub score: ScoreLine,
}

/// Inclusive bucket boundaries `lo..=hi` plus a final open `>= hi + 1`
/// bucket. The reporting defaults are intervals 1..=6 plus `>=7` and spans
/// 3..=8 plus `>=9`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BucketSpec {
    pub lo: usize,
    pub hi: usize,
}

impl BucketSpec {
    pub const INTERVAL_DEFAULT: BucketSpec = BucketSpec { lo: 1, hi: 6 };
    pub const SPAN_DEFAULT: BucketSpec = BucketSpec { lo: 3, hi: 8 };

    fn labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = (self.lo..=self.hi).map(|v| format!("={v}")).collect();
        labels.push(format!(">={}", self.hi + 1));
        labels
    }

    fn bucket_of(&self, value: usize) -> Option<usize> {
        if value < self.lo {
            None
        } else if value <= self.hi {
            Some(value - self.lo)
        } else {
            Some(self.hi - self.lo + 1)
        }
    }
}

/// The full evaluation report: the three filters, per-pattern scores, and
/// interval/span-length breakdowns.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub overall: ScoreLine,
    pub disc_sentence: ScoreLine,
    pub disc_only: ScoreLine,
    pub pattern_rule: &'static str,
    pub patterns: Vec<BucketLine>,
    pub interval_buckets: Vec<BucketLine>,
    pub span_buckets: Vec<BucketLine>,
}

/// Builds the complete report. Pattern and length breakdowns cover
/// discontinuous mentions only; predicted mentions are categorized with the
/// same classifiers, against the gold mentions of their sentence.
pub fn full_report(
    predictions: &[Vec<Entity>],
    gold: &[Vec<Entity>],
    interval_spec: BucketSpec,
    span_spec: BucketSpec,
) -> Result<EvalReport, EvalError> {
    let overall = filtered_score(predictions, gold, Filter::All)?;
    let disc_sentence = filtered_score(predictions, gold, Filter::DiscSentence)?;
    let disc_only = filtered_score(predictions, gold, Filter::DiscOnly)?;

    let mut pattern_counts = vec![EvalCounts::default(); OverlapPattern::ALL.len()];
    let interval_labels = interval_spec.labels();
    let span_labels = span_spec.labels();
    let mut interval_counts = vec![EvalCounts::default(); interval_labels.len()];
    let mut span_counts = vec![EvalCounts::default(); span_labels.len()];

    for (pred, gold) in predictions.iter().zip(gold.iter()) {
        let pred_set: BTreeSet<&Entity> = pred.iter().filter(|e| e.is_discontinuous()).collect();
        let gold_set: BTreeSet<&Entity> = gold.iter().filter(|e| e.is_discontinuous()).collect();
        for (set, side) in [(&gold_set, Side::Gold), (&pred_set, Side::Pred)] {
            for entity in set.iter() {
                let matched = match side {
                    Side::Gold => pred_set.contains(*entity),
                    Side::Pred => gold_set.contains(*entity),
                };
                // Patterns are always classified against the gold context.
                let pattern = overlap_pattern(entity, gold).expect("filtered to discontinuous");
                let pattern_pos = OverlapPattern::ALL
                    .iter()
                    .position(|p| *p == pattern)
                    .expect("pattern is in ALL");
                tally(&mut pattern_counts, Some(pattern_pos), side, matched);
                tally(
                    &mut interval_counts,
                    interval_spec.bucket_of(interval_length(entity)),
                    side,
                    matched,
                );
                tally(
                    &mut span_counts,
                    span_spec.bucket_of(span_length(entity)),
                    side,
                    matched,
                );
            }
        }
    }

    let lines = |labels: Vec<String>, counts: Vec<EvalCounts>| -> Vec<BucketLine> {
        labels
            .into_iter()
            .zip(counts)
            .map(|(label, counts)| BucketLine {
                label,
                score: ScoreLine::from_counts(counts),
            })
            .collect()
    };

    Ok(EvalReport {
        overall,
        disc_sentence,
        disc_only,
        pattern_rule: OVERLAP_PATTERN_RULE,
        patterns: lines(
            OverlapPattern::ALL
                .iter()
                .map(|p| p.as_str().to_string())
                .collect(),
            pattern_counts,
        ),
        interval_buckets: lines(interval_labels, interval_counts),
        span_buckets: lines(span_labels, span_counts),
    })
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Gold,
    Pred,
}

fn tally(counts: &mut [EvalCounts], bucket: Option<usize>, side: Side, matched: bool) {
    let Some(bucket) = bucket else { return };
    match side {
        Side::Gold => {
            counts[bucket].gold += 1;
            if matched {
                // Count each matched pair once, from the gold side.
                counts[bucket].true_positives += 1;
            }
        }
        Side::Pred => counts[bucket].predicted += 1,
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# overlap pattern rule: {}", self.pattern_rule)?;
        let line = |f: &mut fmt::Formatter<'_>, name: &str, s: &ScoreLine| {
            writeln!(
                f,
                "{name:<14} P {:.4}  R {:.4}  F1 {:.4}  (tp {} / pred {} / gold {}){}",
                s.precision,
                s.recall,
                s.f1,
                s.counts.true_positives,
                s.counts.predicted,
                s.counts.gold,
                if s.empty_filter { "  [empty filter]" } else { "" }
            )
        };
        line(f, "overall", &self.overall)?;
        line(f, "disc_sentence", &self.disc_sentence)?;
        line(f, "disc_only", &self.disc_only)?;
        writeln!(f, "patterns:")?;
        for b in &self.patterns {
            line(f, &format!("  {}", b.label), &b.score)?;
        }
        writeln!(f, "interval length:")?;
        for b in &self.interval_buckets {
            line(f, &format!("  {}", b.label), &b.score)?;
        }
        writeln!(f, "span length:")?;
        for b in &self.span_buckets {
            line(f, &format!("  {}", b.label), &b.score)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entity::EntityType;
    use proptest::prelude::*;

    fn ty(name: &str) -> EntityType {
        EntityType::new(name).unwrap()
    }

    fn ent(name: &str, pairs: &[(usize, usize)]) -> Entity {
        Entity::from_pairs(ty(name), pairs).unwrap()
    }

    #[test]
    fn entity_match_requires_type_and_all_offsets() {
        let a = ent("ADE", &[(0, 1), (7, 7)]);
        assert!(entity_match(&a, &a.clone()));
        assert!(!entity_match(&a, &ent("POB", &[(0, 1), (7, 7)])));
        assert!(!entity_match(&a, &ent("ADE", &[(0, 0), (7, 7)])));
    }

    #[test]
    fn score_perfect_prediction() {
        let gold = vec![ent("A", &[(0, 0)]), ent("A", &[(1, 1)]), ent("B", &[(2, 2)])];
        let counts = score(&gold, &gold);
        assert_eq!(
            counts,
            EvalCounts {
                true_positives: 3,
                predicted: 3,
                gold: 3
            }
        );
        assert_eq!(counts.f1(), 1.0);
    }

    #[test]
    fn score_empty_prediction_uses_zero_conventions() {
        let gold = vec![ent("A", &[(0, 0)]), ent("A", &[(1, 1)])];
        let counts = score(&[], &gold);
        assert_eq!(
            counts,
            EvalCounts {
                true_positives: 0,
                predicted: 0,
                gold: 2
            }
        );
        assert_eq!(counts.precision(), 0.0);
        assert_eq!(counts.recall(), 0.0);
        assert_eq!(counts.f1(), 0.0);
    }

    #[test]
    fn score_partial_prediction_hand_arithmetic() {
        // 2 predictions, 1 correct, 4 gold: P=0.5, R=0.25, F1=1/3.
        let gold = vec![
            ent("A", &[(0, 0)]),
            ent("A", &[(1, 1)]),
            ent("A", &[(2, 2)]),
            ent("A", &[(3, 3)]),
        ];
        let pred = vec![ent("A", &[(0, 0)]), ent("A", &[(8, 8)])];
        let counts = score(&pred, &gold);
        assert_eq!(counts.precision(), 0.5);
        assert_eq!(counts.recall(), 0.25);
        assert!((counts.f1() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn score_deduplicates_predictions() {
        let gold = vec![ent("A", &[(0, 0)])];
        let pred = vec![ent("A", &[(0, 0)]), ent("A", &[(0, 0)])];
        let counts = score(&pred, &gold);
        assert_eq!(
            counts,
            EvalCounts {
                true_positives: 1,
                predicted: 1,
                gold: 1
            }
        );
    }

    #[test]
    fn filters_select_the_documented_subsets() {
        // Sentence 0: 1 continuous + 1 discontinuous gold, both predicted.
        // Sentence 1: continuous gold only, predicted.
        let gold = vec![
            vec![ent("A", &[(0, 0)]), ent("A", &[(2, 2), (4, 4)])],
            vec![ent("A", &[(1, 1)])],
        ];
        let pred = gold.clone();
        assert_eq!(filtered_score(&pred, &gold, Filter::All).unwrap().f1, 1.0);
        let ds = filtered_score(&pred, &gold, Filter::DiscSentence).unwrap();
        assert_eq!(ds.counts.gold, 2); // only sentence 0 counted
        assert_eq!(ds.f1, 1.0);
        let donly = filtered_score(&pred, &gold, Filter::DiscOnly).unwrap();
        assert_eq!(donly.counts.gold, 1);
        assert_eq!(donly.f1, 1.0);
    }

    #[test]
    fn disc_only_drops_continuous_predictions() {
        let gold = vec![vec![ent("A", &[(0, 0)]), ent("A", &[(2, 2), (4, 4)])]];
        let pred = vec![vec![ent("A", &[(0, 0)])]];
        let line = filtered_score(&pred, &gold, Filter::DiscOnly).unwrap();
        assert_eq!(line.precision, 0.0);
        assert_eq!(line.recall, 0.0);
        assert_eq!(line.counts.gold, 1);
        assert_eq!(line.counts.predicted, 0);
    }

    #[test]
    fn disc_sentence_on_all_continuous_corpus_is_flagged_empty() {
        let gold = vec![vec![ent("A", &[(0, 0)])]];
        let line = filtered_score(&gold, &gold, Filter::DiscSentence).unwrap();
        assert_eq!((line.precision, line.recall, line.f1), (0.0, 0.0, 0.0));
        assert!(line.empty_filter);
    }

    #[test]
    fn misaligned_corpora_error() {
        let err = filtered_score(&[vec![]], &[], Filter::All).unwrap_err();
        assert_eq!(
            err,
            EvalError::MisalignedCorpora {
                predictions: 1,
                gold: 0
            }
        );
    }

    #[test]
    fn interval_and_span_lengths_of_reference_mention() {
        // Segments (0,0),(3,3),(7,7): interval 5 (tokens 1,2 and 4,5,6), span 8.
        let e = ent("ADE", &[(0, 0), (3, 3), (7, 7)]);
        assert_eq!(interval_length(&e), 5);
        assert_eq!(span_length(&e), 8);

        let two = ent("ADE", &[(0, 1), (7, 7)]);
        assert_eq!(interval_length(&two), 5);
        assert_eq!(span_length(&two), 8);

        let cont = ent("POB", &[(5, 6)]);
        assert_eq!(interval_length(&cont), 0);
        assert_eq!(span_length(&cont), 2);
    }

    #[test]
    fn overlap_pattern_cases() {
        // No overlap at all.
        let lonely = ent("A", &[(0, 0), (2, 2)]);
        assert_eq!(
            overlap_pattern(&lonely, std::slice::from_ref(&lonely)).unwrap(),
            OverlapPattern::None
        );

        // Shared first segment only -> left.
        let a = ent("A", &[(0, 0), (2, 2)]);
        let b = ent("A", &[(0, 0), (4, 4)]);
        let sentence = vec![a.clone(), b.clone()];
        assert_eq!(overlap_pattern(&a, &sentence).unwrap(), OverlapPattern::Left);
        assert_eq!(overlap_pattern(&b, &sentence).unwrap(), OverlapPattern::Left);

        // Shared last segment only -> right.
        let c = ent("A", &[(0, 0), (6, 6)]);
        let d = ent("A", &[(3, 3), (6, 6)]);
        let sentence = vec![c.clone(), d.clone()];
        assert_eq!(overlap_pattern(&c, &sentence).unwrap(), OverlapPattern::Right);

        // Shared at both extremes -> multiple ("Sever joint pain" vs
        // "Sever shoulder pain").
        let e1 = ent("ADE", &[(0, 1), (7, 7)]);
        let e2 = ent("ADE", &[(0, 0), (3, 3), (7, 7)]);
        let sentence = vec![e1.clone(), e2.clone()];
        assert_eq!(
            overlap_pattern(&e1, &sentence).unwrap(),
            OverlapPattern::Multiple
        );

        // Continuous mentions have no pattern.
        let cont = ent("A", &[(0, 0)]);
        assert_eq!(
            overlap_pattern(&cont, &[]).unwrap_err(),
            EvalError::NotDiscontinuous
        );
    }

    #[test]
    fn bucket_edges_follow_the_open_top_bucket() {
        let spec = BucketSpec::INTERVAL_DEFAULT;
        assert_eq!(spec.bucket_of(0), None);
        assert_eq!(spec.bucket_of(1), Some(0));
        assert_eq!(spec.bucket_of(6), Some(5));
        assert_eq!(spec.bucket_of(7), Some(6)); // falls in ">=7"
        assert_eq!(spec.bucket_of(100), Some(6));
        assert_eq!(spec.labels().last().unwrap(), ">=7");
    }

    #[test]
    fn gold_as_prediction_report_is_all_ones() {
        let gold = vec![
            vec![ent("A", &[(0, 0)]), ent("A", &[(2, 2), (4, 4)])],
            vec![ent("B", &[(1, 2), (5, 5)])],
        ];
        let report = full_report(
            &gold,
            &gold,
            BucketSpec::INTERVAL_DEFAULT,
            BucketSpec::SPAN_DEFAULT,
        )
        .unwrap();
        assert_eq!(report.overall.f1, 1.0);
        assert_eq!(report.disc_sentence.f1, 1.0);
        assert_eq!(report.disc_only.f1, 1.0);
        for bucket in report
            .patterns
            .iter()
            .chain(&report.interval_buckets)
            .chain(&report.span_buckets)
        {
            if !bucket.score.empty_filter {
                assert_eq!(bucket.score.f1, 1.0, "bucket {}", bucket.label);
            }
        }
        // Gold counts echo corpus statistics: 2 discontinuous mentions with
        // intervals 1 and 2, spans 3 and 5.
        assert_eq!(report.interval_buckets[0].score.counts.gold, 1);
        assert_eq!(report.interval_buckets[1].score.counts.gold, 1);
        assert_eq!(report.span_buckets[0].score.counts.gold, 1);
        assert_eq!(report.span_buckets[2].score.counts.gold, 1);
    }

    #[test]
    fn report_serializes_with_stable_keys() {
        let gold = vec![vec![ent("A", &[(0, 0)])]];
        let report = full_report(
            &gold,
            &gold,
            BucketSpec::INTERVAL_DEFAULT,
            BucketSpec::SPAN_DEFAULT,
        )
        .unwrap();
        let json = serde_json::to_value(&report).unwrap();
        for key in [
            "overall",
            "disc_sentence",
            "disc_only",
            "patterns",
            "interval_buckets",
            "span_buckets",
        ] {
            assert!(json.get(key).is_some(), "missing key {key}");
        }
        let text = report.to_string();
        assert!(text.contains("overall"));
        assert!(text.contains("# overlap pattern rule"));
    }

    fn arb_entity() -> impl Strategy<Value = Entity> {
        proptest::collection::vec((0usize..5, 1usize..3), 1..4).prop_map(|parts| {
            let mut pairs = Vec::new();
            let mut cursor = 0usize;
            for (gap, len) in parts {
                let start = cursor + gap;
                pairs.push((start, start + len - 1));
                cursor = start + len + 1;
            }
            Entity::from_pairs(ty("A"), &pairs).unwrap()
        })
    }

    proptest! {
        /// interval + sum of segment lengths = span, for every entity.
        #[test]
        fn interval_plus_segments_equals_span(e in arb_entity()) {
            let seg_total: usize = e.segments().iter().map(|s| s.len()).sum();
            prop_assert_eq!(interval_length(&e) + seg_total, span_length(&e));
        }

        /// The pattern classifier is total over discontinuous mentions.
        #[test]
        fn pattern_classifier_is_total(entities in proptest::collection::vec(arb_entity(), 1..5)) {
            for e in &entities {
                if e.is_discontinuous() {
                    prop_assert!(overlap_pattern(e, &entities).is_ok());
                }
            }
        }
    }
}

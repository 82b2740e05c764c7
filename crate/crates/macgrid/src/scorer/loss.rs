//! Binary cross-entropy over the two grids. Segment cells are summed over the
//! upper triangle (`j >= i`), edge cells over the full grid with all-zero
//! targets below the diagonal.

use crate::tags::{EdgeTagTable, GridKind, ProbGrid, SegmentTagTable, TagAlphabet};

/// Probability clamp keeping `log` finite.
pub const BCE_CLAMP: f64 = 1e-7;

/// The two summands of the training objective; the total is their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub segment: f64,
    pub edge: f64,
}

impl LossBreakdown {
    pub fn total(&self) -> f64 {
        self.segment + self.edge
    }
}

/// Dense 0/1 targets for the segment grid, `n * n * K` row-major. Lower
/// triangle stays zero and is never consumed.
pub fn dense_segment_targets(table: &SegmentTagTable, alphabet: &TagAlphabet) -> Vec<f64> {
    let n = table.n();
    let k = alphabet.segment_size();
    let mut targets = vec![0.0; n * n * k];
    for (&(i, j), tags) in table.cells() {
        for tag in tags {
            let idx = alphabet
                .segment_index(tag)
                .expect("table tags come from the same inventory");
            targets[(i * n + j) * k + idx] = 1.0;
        }
    }
    targets
}

/// Dense 0/1 targets for the edge grid. Gold edges live at canonical
/// coordinates `i <= j`; everything below the diagonal is supervised to zero.
pub fn dense_edge_targets(table: &EdgeTagTable, alphabet: &TagAlphabet) -> Vec<f64> {
    let n = table.n();
    let k = alphabet.edge_size();
    let mut targets = vec![0.0; n * n * k];
    for (&(i, j), tags) in table.cells() {
        for tag in tags {
            let idx = alphabet
                .edge_index(tag)
                .expect("table tags come from the same inventory");
            targets[(i * n + j) * k + idx] = 1.0;
        }
    }
    targets
}

fn bce(p: f64, y: f64) -> f64 {
    let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Loss of a pair of predicted grids against dense targets.
pub fn grid_loss_dense(
    seg_probs: &ProbGrid,
    edge_probs: &ProbGrid,
    seg_targets: &[f64],
    edge_targets: &[f64],
) -> LossBreakdown {
    assert_eq!(seg_probs.kind(), GridKind::Segment);
    assert_eq!(edge_probs.kind(), GridKind::Edge);
    let n = seg_probs.n();
    assert_eq!(edge_probs.n(), n);
    assert_eq!(seg_targets.len(), n * n * seg_probs.tags());
    assert_eq!(edge_targets.len(), n * n * edge_probs.tags());

    let mut segment = 0.0;
    let k_seg = seg_probs.tags();
    for i in 0..n {
        for j in i..n {
            for k in 0..k_seg {
                segment += bce(seg_probs.get(i, j, k), seg_targets[(i * n + j) * k_seg + k]);
            }
        }
    }
    let mut edge = 0.0;
    let k_edge = edge_probs.tags();
    for i in 0..n {
        for j in 0..n {
            for k in 0..k_edge {
                edge += bce(edge_probs.get(i, j, k), edge_targets[(i * n + j) * k_edge + k]);
            }
        }
    }
    LossBreakdown { segment, edge }
}

/// Loss of a pair of predicted grids against gold tag tables.
pub fn grid_loss(
    seg_probs: &ProbGrid,
    edge_probs: &ProbGrid,
    seg_table: &SegmentTagTable,
    edge_table: &EdgeTagTable,
    alphabet: &TagAlphabet,
) -> LossBreakdown {
    grid_loss_dense(
        seg_probs,
        edge_probs,
        &dense_segment_targets(seg_table, alphabet),
        &dense_edge_targets(edge_table, alphabet),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entity::EntityType;
    use crate::tags::{EdgeKind, EdgeTag, SegmentRole, SegmentTag};

    fn alphabet() -> TagAlphabet {
        TagAlphabet::new(vec![EntityType::new("ADE").unwrap()]).unwrap()
    }

    #[test]
    fn uniform_half_probabilities_give_the_closed_form_count() {
        // n=2, one type: 3 upper-triangle cells x 3 segment tags and
        // 4 cells x 2 edge tags, every term ln 2.
        let alphabet = alphabet();
        let seg = ProbGrid::filled(2, alphabet.segment_size(), GridKind::Segment, 0.5);
        let edge = ProbGrid::filled(2, alphabet.edge_size(), GridKind::Edge, 0.5);
        let loss = grid_loss(
            &seg,
            &edge,
            &SegmentTagTable::new(2),
            &EdgeTagTable::new(2),
            &alphabet,
        );
        let ln2 = std::f64::consts::LN_2;
        assert!((loss.segment - 9.0 * ln2).abs() < 1e-12);
        assert!((loss.edge - 8.0 * ln2).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictions_cost_almost_nothing() {
        let alphabet = alphabet();
        let mut seg_table = SegmentTagTable::new(2);
        seg_table.insert(
            0,
            1,
            SegmentTag::new(EntityType::new("ADE").unwrap(), SegmentRole::Single),
        );
        let mut edge_table = EdgeTagTable::new(2);
        edge_table.insert(
            0,
            1,
            EdgeTag::new(EntityType::new("ADE").unwrap(), EdgeKind::HeadToHead),
        );
        let mut seg = ProbGrid::zeros(2, alphabet.segment_size(), GridKind::Segment);
        seg.set(0, 1, 2, 1.0); // ADE-S index
        let mut edge = ProbGrid::zeros(2, alphabet.edge_size(), GridKind::Edge);
        edge.set(0, 1, 0, 1.0); // ADE-H2H index
        let loss = grid_loss(&seg, &edge, &seg_table, &edge_table, &alphabet);
        // Bounded by the clamp: every term is at most -ln(1 - 1e-7).
        let bound = -(1.0 - BCE_CLAMP).ln() * (9.0 + 8.0);
        assert!(loss.total() >= 0.0);
        assert!(loss.total() <= bound + 1e-12);
    }

    #[test]
    fn flipping_one_gold_bit_changes_loss_by_the_log_odds() {
        let alphabet = alphabet();
        let p = 0.3;
        let seg = ProbGrid::filled(3, alphabet.segment_size(), GridKind::Segment, p);
        let edge = ProbGrid::filled(3, alphabet.edge_size(), GridKind::Edge, 0.5);
        let empty = grid_loss(
            &seg,
            &edge,
            &SegmentTagTable::new(3),
            &EdgeTagTable::new(3),
            &alphabet,
        );
        let mut with_bit = SegmentTagTable::new(3);
        with_bit.insert(
            0,
            2,
            SegmentTag::new(EntityType::new("ADE").unwrap(), SegmentRole::Begin),
        );
        let flipped = grid_loss(&seg, &edge, &with_bit, &EdgeTagTable::new(3), &alphabet);
        let expected_delta = -p.ln() + (1.0 - p).ln();
        assert!((flipped.total() - empty.total() - expected_delta).abs() < 1e-12);
    }

    #[test]
    fn loss_is_nonnegative_on_random_grids() {
        use rand::{Rng, SeedableRng};
        let alphabet = alphabet();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.gen_range(1..6);
            let mut seg = ProbGrid::zeros(n, alphabet.segment_size(), GridKind::Segment);
            let mut edge = ProbGrid::zeros(n, alphabet.edge_size(), GridKind::Edge);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..seg.tags() {
                        seg.set(i, j, k, rng.gen_range(0.0..=1.0));
                    }
                    for k in 0..edge.tags() {
                        edge.set(i, j, k, rng.gen_range(0.0..=1.0));
                    }
                }
            }
            let loss = grid_loss(
                &seg,
                &edge,
                &SegmentTagTable::new(n),
                &EdgeTagTable::new(n),
                &alphabet,
            );
            assert!(loss.total() >= 0.0);
            assert!(loss.total().is_finite());
        }
    }
}

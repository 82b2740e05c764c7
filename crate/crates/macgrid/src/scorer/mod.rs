//! The trainable grid scorer: a small bidirectional-LSTM encoder, task
//! projections, conditional layer normalization over token pairs, an inner
//! segment LSTM with length embeddings, sigmoid multi-label heads, a BCE
//! objective with exact hand-derived gradients, seeded Adam training, and
//! dev-set threshold tuning.

mod backward;
mod checkpoint;
mod config;
mod forward;
mod loss;
mod math;
mod params;
mod train;

pub use backward::{gradient_check_error, GradientCheckSpec};
pub use checkpoint::CHECKPOINT_VERSION;
pub use config::{ModelConfig, TrainConfig, UNK_TOKEN};
pub use forward::{cln, ForwardTrace, LN_EPS};
pub use loss::{
    dense_edge_targets, dense_segment_targets, grid_loss, grid_loss_dense, LossBreakdown,
    BCE_CLAMP,
};
pub use params::{Cln, Linear, LstmCell, ModelParams, PairFusion};
pub use train::{train, tune_threshold, EpochStats, TrainOutcome};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::clique::{decode_sentence, DecodeDiagnostics};
use crate::codec::{apply_threshold, Threshold, ThresholdedTable};
use crate::entity::{Entity, Sentence};
use crate::tags::{ConfigError, TagAlphabet};

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("sentence {id} has {n} tokens, the model supports at most {max}")]
    InputTooLong { id: String, n: usize, max: usize },
    #[error("non-finite activations while scoring sentence {id}")]
    NonFinite { id: String },
    #[error("model width must be at least 2, got {0}")]
    WidthTooSmall(usize),
    #[error("learning rate must be positive, got {0}")]
    BadLearningRate(f64),
    #[error("epoch count must be at least 1")]
    NoEpochs,
    #[error("training corpus is empty")]
    EmptyTrainCorpus,
    #[error("dev corpus is empty")]
    EmptyDevCorpus,
    #[error("threshold grid is empty")]
    EmptyThresholdGrid,
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A configured model with its parameters and token index.
#[derive(Debug, Clone)]
pub struct Scorer {
    config: ModelConfig,
    params: ModelParams,
    alphabet: TagAlphabet,
    token_ids: BTreeMap<String, usize>,
}

impl Scorer {
    /// Fresh scorer with seeded initialization.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, ScorerError> {
        let params = ModelParams::init(&config, seed);
        Self::from_parts(config, params)
    }

    /// Wraps existing parameters (checkpoint loading, best-epoch snapshots).
    pub fn from_parts(config: ModelConfig, params: ModelParams) -> Result<Self, ScorerError> {
        if config.dim < 2 {
            return Err(ScorerError::WidthTooSmall(config.dim));
        }
        let alphabet = config.alphabet()?;
        let token_ids = config
            .vocab
            .iter()
            .enumerate()
            .map(|(id, token)| (token.clone(), id))
            .collect();
        Ok(Self {
            config,
            params,
            alphabet,
            token_ids,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ModelParams {
        &mut self.params
    }

    pub fn alphabet(&self) -> &TagAlphabet {
        &self.alphabet
    }

    /// Full inference for one sentence: predict both grids, threshold them,
    /// and run the clique decoder.
    pub fn predict_entities(
        &self,
        sentence: &Sentence,
        threshold: Threshold,
    ) -> Result<(Vec<Entity>, DecodeDiagnostics), ScorerError> {
        let (seg_probs, edge_probs) = self.predict_grids(sentence)?;
        let seg_table = match apply_threshold(&seg_probs, &self.alphabet, threshold)? {
            ThresholdedTable::Segment(t) => t,
            ThresholdedTable::Edge(_) => unreachable!("segment grid thresholds to segment table"),
        };
        let edge_table = match apply_threshold(&edge_probs, &self.alphabet, threshold)? {
            ThresholdedTable::Edge(t) => t,
            ThresholdedTable::Segment(_) => unreachable!("edge grid thresholds to edge table"),
        };
        Ok(decode_sentence(sentence, &seg_table, &edge_table)
            .expect("grid dimensions come from the sentence"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_config() -> ModelConfig {
        ModelConfig {
            dim: 6,
            max_len: 6,
            vocab: vec!["<unk>".into(), "a".into(), "b".into(), "c".into()],
            types: vec!["ADE".into()],
            use_cln: true,
            use_inner_lstm: true,
            use_length_embedding: true,
        }
    }

    fn sentence(tokens: &[&str]) -> Sentence {
        Sentence::new("t", tokens.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn forward_is_deterministic_and_shaped() {
        let scorer = Scorer::new(small_config(), 1).unwrap();
        let s = sentence(&["a", "b", "c"]);
        let t1 = scorer.forward(&s).unwrap();
        let t2 = scorer.forward(&s).unwrap();
        assert_eq!(t1.context, t2.context);
        assert_eq!(t1.seg_probs, t2.seg_probs);
        assert_eq!(t1.context.len(), 3);
        assert_eq!(t1.context[0].len(), 6);
    }

    #[test]
    fn single_token_sentence_works() {
        let scorer = Scorer::new(small_config(), 2).unwrap();
        let s = sentence(&["a"]);
        let trace = scorer.forward(&s).unwrap();
        assert_eq!(trace.fwd_steps.len(), 1);
        assert_eq!(trace.bwd_steps.len(), 1);
        assert_eq!(trace.fwd_steps[0].h.len(), trace.bwd_steps[0].h.len());
        assert!(trace.seg_probs.get(0, 0, 0) > 0.0);
    }

    #[test]
    fn sentences_longer_than_max_len_are_rejected() {
        let scorer = Scorer::new(small_config(), 3).unwrap();
        let long = sentence(&["a", "a", "a", "a", "a", "a", "a"]);
        assert!(matches!(
            scorer.forward(&long),
            Err(ScorerError::InputTooLong { n: 7, max: 6, .. })
        ));
        // Exactly max_len succeeds, exercising length index max_len - 1.
        let exact = sentence(&["a", "a", "a", "a", "a", "a"]);
        let trace = scorer.forward(&exact).unwrap();
        assert!(trace.seg_probs.get(0, 5, 0) > 0.0);
    }

    #[test]
    fn unknown_tokens_fall_back_to_unk() {
        let scorer = Scorer::new(small_config(), 4).unwrap();
        let known_unk = sentence(&["<unk>", "b"]);
        let unknown = sentence(&["zzz", "b"]);
        let a = scorer.forward(&known_unk).unwrap();
        let b = scorer.forward(&unknown).unwrap();
        assert_eq!(a.context, b.context);
    }

    #[test]
    fn perturbing_an_embedding_respects_recurrence_reachability() {
        // Forward-direction states may change only at or after the perturbed
        // position; backward-direction states only at or before it.
        let cfg = small_config();
        let base = Scorer::new(cfg.clone(), 5).unwrap();
        let s = sentence(&["a", "b", "c", "a"]);
        let before = base.forward(&s).unwrap();

        let mut perturbed = base.clone();
        // Token "c" sits at position 2; bump one entry of its embedding.
        let c_id = perturbed.token_ids["c"];
        perturbed.params_mut().token_emb[(c_id, 0)] += 0.25;
        let after = perturbed.forward(&s).unwrap();

        let n = s.len();
        let position = 2;
        for i in 0..n {
            let fwd_changed = before.fwd_steps[i].h != after.fwd_steps[i].h;
            assert_eq!(fwd_changed, i >= position, "forward state {i}");
            let bwd_pos = n - 1 - i; // step i covers this position
            let bwd_changed = before.bwd_steps[i].h != after.bwd_steps[i].h;
            assert_eq!(bwd_changed, bwd_pos <= position, "backward state {i}");
        }
    }

    #[test]
    fn projection_matches_scalar_arithmetic() {
        let mut scorer = Scorer::new(small_config(), 6).unwrap();
        let s = sentence(&["a", "b"]);

        // Identity projection passes the context through.
        {
            let params = scorer.params_mut();
            params.seg_proj.w = ndarray::Array2::eye(6);
            params.seg_proj.b = Array1::zeros(6);
        }
        let trace = scorer.forward(&s).unwrap();
        assert_eq!(trace.seg_feat, trace.context);

        // Zero context passes the bias through: with all-zero embeddings and
        // encoder weights the LSTM emits exactly zero.
        {
            let mut zeroed = Scorer::new(small_config(), 6).unwrap();
            let params = zeroed.params_mut();
            params.token_emb.fill(0.0);
            params.pos_emb.fill(0.0);
            params.enc_fwd.w_input.fill(0.0);
            params.enc_fwd.w_hidden.fill(0.0);
            params.enc_fwd.bias.fill(0.0);
            params.enc_bwd.w_input.fill(0.0);
            params.enc_bwd.w_hidden.fill(0.0);
            params.enc_bwd.bias.fill(0.0);
            let bias = params.seg_proj.b.clone();
            let trace = zeroed.forward(&s).unwrap();
            assert!(trace.context[0].iter().all(|&v| v == 0.0));
            assert_eq!(trace.seg_feat[0], bias);
        }

        // Independent matrix-vector oracle on the edge projection.
        for i in 0..2 {
            for r in 0..6 {
                let mut expect = scorer.params().edge_proj.b[r];
                for c in 0..6 {
                    expect += scorer.params().edge_proj.w[(r, c)] * trace.context[i][c];
                }
                assert!((trace.edge_feat[i][r] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cln_identity_affine_reduces_to_plain_layer_norm() {
        let d = 5;
        let cln_params = Cln {
            w_gain: ndarray::Array2::zeros((d, d)),
            b_gain: Array1::ones(d),
            w_bias: ndarray::Array2::zeros((d, d)),
            b_bias: Array1::zeros(d),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let c: Array1<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let x: Array1<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let got = cln(&cln_params, &c, &x);
            // Plain layer norm computed independently.
            let mean = x.sum() / d as f64;
            let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let sigma = (var + LN_EPS).sqrt();
            for k in 0..d {
                let expect = (x[k] - mean) / sigma;
                assert!((got[k] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cln_numeric_example() {
        // x=[1,3] with gain [2,2] and bias [0.5,0.5]: mean 2, sigma 1,
        // output [-1.5, 2.5] up to the variance stabilizer.
        let d = 2;
        let cln_params = Cln {
            w_gain: ndarray::Array2::zeros((d, d)),
            b_gain: ndarray::arr1(&[2.0, 2.0]),
            w_bias: ndarray::Array2::zeros((d, d)),
            b_bias: ndarray::arr1(&[0.5, 0.5]),
        };
        let c = ndarray::arr1(&[0.3, -0.7]);
        let x = ndarray::arr1(&[1.0, 3.0]);
        let out = cln(&cln_params, &c, &x);
        assert!((out[0] - (-1.5)).abs() < 1e-4);
        assert!((out[1] - 2.5).abs() < 1e-4);
    }

    #[test]
    fn cln_normalization_statistics() {
        // Before affine scaling the normalized vector has mean ~0; when the
        // variance dwarfs the stabilizer its standard deviation is within
        // 1e-6 of 1.
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..100 {
            let d = rng.gen_range(2..16);
            let x: Array1<f64> = (0..d).map(|_| rng.gen_range(-20.0..20.0)).collect();
            let cell = forward::normalize(&x);
            let m = d as f64;
            let mean = cell.normalized.sum() / m;
            assert!(mean.abs() < 1e-10, "mean {mean}");
            let var_x = x.iter().map(|v| (v - x.sum() / m) * (v - x.sum() / m)).sum::<f64>() / m;
            if var_x > 10.0 {
                let sd = (cell
                    .normalized
                    .iter()
                    .map(|v| (v - mean) * (v - mean))
                    .sum::<f64>()
                    / m)
                    .sqrt();
                assert!((sd - 1.0).abs() < 1e-6, "sd {sd}");
            }
        }
    }

    #[test]
    fn cln_constant_input_returns_the_conditional_bias() {
        let d = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cln_params = Cln {
            w_gain: ndarray::Array2::from_shape_fn((d, d), |_| rng.gen_range(-0.5..0.5)),
            b_gain: ndarray::Array1::ones(d),
            w_bias: ndarray::Array2::from_shape_fn((d, d), |_| rng.gen_range(-0.5..0.5)),
            b_bias: ndarray::Array1::zeros(d),
        };
        let c = ndarray::arr1(&[1.0, -1.0, 0.5]);
        let x = ndarray::arr1(&[5.0, 5.0, 5.0]);
        let out = cln(&cln_params, &c, &x);
        let expected_bias = cln_params.w_bias.dot(&c) + &cln_params.b_bias;
        for k in 0..d {
            assert!((out[k] - expected_bias[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn inner_row_sweep_matches_per_pair_oracle() {
        let scorer = Scorer::new(small_config(), 11).unwrap();
        let s = sentence(&["a", "b", "c", "a", "b"]);
        let trace = scorer.forward(&s).unwrap();
        let inner = scorer.params().inner.as_ref().unwrap();
        for i in 0..s.len() {
            for j in i..s.len() {
                // Independent sweep from i to j.
                let mut h = Array1::zeros(6);
                let mut c = Array1::zeros(6);
                for feat in &trace.seg_feat[i..=j] {
                    let step = forward::lstm_step(inner, feat, &h, &c);
                    h = step.h.clone();
                    c = step.c.clone();
                }
                let cached = &trace.inner_rows[i][j - i].h;
                for k in 0..6 {
                    assert!((cached[k] - h[k]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn edge_pair_is_asymmetric_but_symmetric_under_identity_affine() {
        let scorer = Scorer::new(small_config(), 12).unwrap();
        let s = sentence(&["a", "b", "c"]);
        let trace = scorer.forward(&s).unwrap();
        let n = s.len();
        // Conditioning asymmetry: (0,1) differs from (1,0) in general.
        let a = &trace.edge_pair[1]; // (0,1)
        let b = &trace.edge_pair[n]; // (1,0)
        assert!(a.iter().zip(b.iter()).any(|(x, y)| (x - y).abs() > 1e-9));

        // With identity-affine CLN the output depends only on the column.
        let mut reduced = scorer.clone();
        match &mut reduced.params_mut().edge_fusion {
            PairFusion::Cln(cln) => {
                cln.w_gain.fill(0.0);
                cln.b_gain.fill(1.0);
                cln.w_bias.fill(0.0);
                cln.b_bias.fill(0.0);
            }
            PairFusion::Concat(_) => unreachable!(),
        }
        let trace = reduced.forward(&s).unwrap();
        for j in 0..n {
            let from_zero = &trace.edge_pair[j];
            for i in 1..n {
                let cell = &trace.edge_pair[i * n + j];
                for k in 0..6 {
                    assert!((from_zero[k] - cell[k]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_heads_give_half_probability_everywhere() {
        let mut scorer = Scorer::new(small_config(), 13).unwrap();
        {
            let params = scorer.params_mut();
            params.seg_head.w.fill(0.0);
            params.seg_head.b.fill(0.0);
            params.edge_head.w.fill(0.0);
            params.edge_head.b.fill(0.0);
        }
        let s = sentence(&["a", "b", "c"]);
        let (seg, edge) = scorer.predict_grids(&s).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..seg.tags() {
                    let expect = if j >= i { 0.5 } else { 0.0 };
                    assert_eq!(seg.get(i, j, k), expect);
                }
                for k in 0..edge.tags() {
                    assert_eq!(edge.get(i, j, k), 0.5);
                }
            }
        }
    }

    #[test]
    fn probabilities_are_finite_and_open_interval_on_random_params() {
        let cfg = ModelConfig {
            dim: 8,
            max_len: 6,
            ..small_config()
        };
        let scorer = Scorer::new(cfg, 99).unwrap();
        let s = sentence(&["a", "b", "c", "a", "b", "c"]);
        let (seg, edge) = scorer.predict_grids(&s).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                for k in 0..seg.tags() {
                    let p = seg.get(i, j, k);
                    assert!(p.is_finite() && (0.0..=1.0).contains(&p));
                    if j >= i {
                        assert!(p > 0.0 && p < 1.0);
                    }
                }
                for k in 0..edge.tags() {
                    let p = edge.get(i, j, k);
                    assert!(p.is_finite() && p > 0.0 && p < 1.0);
                }
            }
        }
    }

    #[test]
    fn probability_order_follows_logit_order() {
        // Sigmoid is monotone, so strictly ordered logits give strictly
        // ordered probabilities; thresholded tag sets are invariant under
        // order-preserving changes that keep values on the same side.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let a: f64 = rng.gen_range(-6.0..6.0);
            let b: f64 = rng.gen_range(-6.0..6.0);
            assert_eq!(a < b, math::sigmoid(a) < math::sigmoid(b));
        }
    }
}

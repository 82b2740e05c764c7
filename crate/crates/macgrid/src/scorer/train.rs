//! Seeded mini-batch Adam training with per-epoch dev evaluation, plus
//! dev-set threshold tuning.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ModelConfig, TrainConfig};
use super::loss::{dense_edge_targets, dense_segment_targets, grid_loss_dense};
use super::params::ModelParams;
use super::{Scorer, ScorerError};
use crate::codec::{encode_edge_table, encode_segment_table, Threshold};
use crate::corpus::Corpus;
use crate::entity::Entity;
use crate::metrics::{filtered_score, Filter};

/// One training-log line.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean per-sentence objective over the epoch's training pass.
    pub loss: f64,
    /// Overall exact-match F1 on the dev corpus at threshold 0.5.
    pub dev_f1: f64,
}

/// Result of a training run: the scorer restored to its best dev-F1 epoch,
/// the full log, and which epoch won.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub scorer: Scorer,
    pub log: Vec<EpochStats>,
    pub best_epoch: usize,
}

struct AdamState {
    first: ModelParams,
    second: ModelParams,
    steps: usize,
}

impl AdamState {
    fn new(config: &ModelConfig) -> Self {
        Self {
            first: ModelParams::zeros(config),
            second: ModelParams::zeros(config),
            steps: 0,
        }
    }

    fn step(&mut self, params: &mut ModelParams, grads: &ModelParams, cfg: &TrainConfig) {
        self.steps += 1;
        let t = self.steps as f64;
        let bias1 = 1.0 - cfg.beta1.powf(t);
        let bias2 = 1.0 - cfg.beta2.powf(t);
        let mut params_view = params.tensors_mut();
        let grads_view = grads.tensors();
        let mut first_view = self.first.tensors_mut();
        let mut second_view = self.second.tensors_mut();
        for idx in 0..params_view.len() {
            let p = &mut params_view[idx].2;
            let g = &grads_view[idx].2;
            let m = &mut first_view[idx].2;
            let v = &mut second_view[idx].2;
            for k in 0..p.len() {
                m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
                v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
                let m_hat = m[k] / bias1;
                let v_hat = v[k] / bias2;
                p[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
            }
        }
    }
}

fn zero_gradients(grads: &mut ModelParams) {
    for (_, _, values) in grads.tensors_mut() {
        for v in values {
            *v = 0.0;
        }
    }
}

fn scale_gradients(grads: &mut ModelParams, factor: f64) {
    for (_, _, values) in grads.tensors_mut() {
        for v in values {
            *v *= factor;
        }
    }
}

/// Overall exact-match F1 of a scorer over a corpus at a fixed threshold.
fn corpus_f1(scorer: &Scorer, corpus: &Corpus, threshold: Threshold) -> Result<f64, ScorerError> {
    let mut predictions: Vec<Vec<Entity>> = Vec::with_capacity(corpus.len());
    for (sentence, _) in corpus.sentences() {
        predictions.push(scorer.predict_entities(sentence, threshold)?.0);
    }
    let gold = corpus.gold();
    Ok(filtered_score(&predictions, &gold, Filter::All)
        .expect("aligned by construction")
        .f1)
}

/// Trains a fresh scorer on `train_corpus`, evaluating on `dev_corpus` after
/// every epoch, and returns the parameters of the best dev-F1 epoch (earliest
/// epoch on ties). Identical inputs and seed give bitwise-identical results.
pub fn train(
    train_corpus: &Corpus,
    dev_corpus: &Corpus,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, ScorerError> {
    if cfg.dim < 2 {
        return Err(ScorerError::WidthTooSmall(cfg.dim));
    }
    if cfg.learning_rate <= 0.0 {
        return Err(ScorerError::BadLearningRate(cfg.learning_rate));
    }
    if cfg.epochs == 0 {
        return Err(ScorerError::NoEpochs);
    }
    if train_corpus.is_empty() {
        return Err(ScorerError::EmptyTrainCorpus);
    }
    if dev_corpus.is_empty() {
        return Err(ScorerError::EmptyDevCorpus);
    }

    let model_config = ModelConfig {
        use_cln: cfg.use_cln,
        use_inner_lstm: cfg.use_inner_lstm,
        use_length_embedding: cfg.use_length_embedding,
        ..ModelConfig::from_corpus(train_corpus, cfg.dim, cfg.max_len)
    };
    let alphabet = model_config.alphabet()?;
    let mut scorer = Scorer::new(model_config.clone(), cfg.seed)?;

    // Gold targets are fixed; build them once.
    let mut targets = Vec::with_capacity(train_corpus.len());
    for (sentence, entities) in train_corpus.sentences() {
        let seg_table = encode_segment_table(sentence, entities)
            .expect("corpus entities are validated against their sentences");
        let edge_table = encode_edge_table(sentence, entities)
            .expect("corpus entities are validated against their sentences");
        targets.push((
            dense_segment_targets(&seg_table, &alphabet),
            dense_edge_targets(&edge_table, &alphabet),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(&model_config);
    let mut grads = ModelParams::zeros(&model_config);
    let mut order: Vec<usize> = (0..train_corpus.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, ModelParams)> = None;

    for epoch in 1..=cfg.epochs {
        // Non-finite activations mean the optimizer blew the parameters up.
        let diverged = |e: ScorerError| match e {
            ScorerError::NonFinite { .. } => ScorerError::Diverged { epoch },
            other => other,
        };
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size.max(1)) {
            zero_gradients(&mut grads);
            for &index in batch {
                let (sentence, _) = &train_corpus.sentences()[index];
                let (seg_t, edge_t) = &targets[index];
                let trace = scorer.forward(sentence).map_err(diverged)?;
                epoch_loss +=
                    grid_loss_dense(&trace.seg_probs, &trace.edge_probs, seg_t, edge_t).total();
                scorer.accumulate_gradients(&trace, seg_t, edge_t, &mut grads);
            }
            scale_gradients(&mut grads, 1.0 / batch.len() as f64);
            adam.step(&mut scorer.params, &grads, cfg);
        }
        let mean_loss = epoch_loss / train_corpus.len() as f64;
        if !mean_loss.is_finite() {
            return Err(ScorerError::Diverged { epoch });
        }
        let dev_f1 = corpus_f1(&scorer, dev_corpus, Threshold::default()).map_err(diverged)?;
        log.push(EpochStats {
            epoch,
            loss: mean_loss,
            dev_f1,
        });
        let improved = match &best {
            None => true,
            Some((best_f1, _, _)) => dev_f1 > *best_f1,
        };
        if improved {
            best = Some((dev_f1, epoch, scorer.params.clone()));
        }
    }

    let (_, best_epoch, best_params) = best.expect("at least one epoch ran");
    let scorer = Scorer::from_parts(model_config, best_params)?;
    Ok(TrainOutcome {
        scorer,
        log,
        best_epoch,
    })
}

/// Picks the grid threshold that maximizes overall dev F1, preferring the
/// smaller value on ties. Grids are predicted once per sentence and then
/// re-thresholded per candidate.
pub fn tune_threshold(
    scorer: &Scorer,
    dev_corpus: &Corpus,
    grid: &[f64],
) -> Result<(Threshold, Vec<(f64, f64)>), ScorerError> {
    if dev_corpus.is_empty() {
        return Err(ScorerError::EmptyDevCorpus);
    }
    if grid.is_empty() {
        return Err(ScorerError::EmptyThresholdGrid);
    }
    let mut candidates: Vec<Threshold> = grid
        .iter()
        .map(|&v| Threshold::new(v))
        .collect::<Result<_, _>>()?;
    candidates.sort_by(|a, b| a.value().total_cmp(&b.value()));

    let mut grids = Vec::with_capacity(dev_corpus.len());
    for (sentence, _) in dev_corpus.sentences() {
        grids.push(scorer.predict_grids(sentence)?);
    }
    let gold = dev_corpus.gold();

    let mut sweep = Vec::with_capacity(candidates.len());
    let mut best: Option<(f64, Threshold)> = None;
    for threshold in candidates {
        let mut predictions = Vec::with_capacity(grids.len());
        for ((seg_probs, edge_probs), (sentence, _)) in
            grids.iter().zip(dev_corpus.sentences())
        {
            use crate::codec::ThresholdedTable;
            let seg_table =
                match crate::codec::apply_threshold(seg_probs, scorer.alphabet(), threshold)? {
                    ThresholdedTable::Segment(t) => t,
                    ThresholdedTable::Edge(_) => unreachable!(),
                };
            let edge_table =
                match crate::codec::apply_threshold(edge_probs, scorer.alphabet(), threshold)? {
                    ThresholdedTable::Edge(t) => t,
                    ThresholdedTable::Segment(_) => unreachable!(),
                };
            let (entities, _) = crate::clique::decode_sentence(sentence, &seg_table, &edge_table)
                .expect("grid dimensions come from the sentence");
            predictions.push(entities);
        }
        let f1 = filtered_score(&predictions, &gold, Filter::All)
            .expect("aligned by construction")
            .f1;
        sweep.push((threshold.value(), f1));
        let improved = match &best {
            None => true,
            Some((best_f1, _)) => f1 > *best_f1,
        };
        if improved {
            best = Some((f1, threshold));
        }
    }
    Ok((best.expect("grid is non-empty").1, sweep))
}

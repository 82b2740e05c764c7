//! Forward pass: toy bidirectional encoder, task projections, pair fusion
//! (CLN or concat), inner-segment LSTM sweeps, length embeddings, and the
//! sigmoid multi-label heads. Every intermediate needed for exact backprop is
//! kept in the [`ForwardTrace`].

use ndarray::{s, Array1};

use super::math::sigmoid;
use super::params::{Cln, LstmCell, PairFusion};
use super::{Scorer, ScorerError};
use crate::entity::Sentence;
use crate::tags::{GridKind, ProbGrid};

/// Stabilizer added to the variance inside the layer-norm square root.
pub const LN_EPS: f64 = 1e-5;

/// Cache of one LSTM step.
#[derive(Debug, Clone)]
pub struct LstmStep {
    pub input: Array1<f64>,
    pub h_prev: Array1<f64>,
    pub c_prev: Array1<f64>,
    pub gate_i: Array1<f64>,
    pub gate_f: Array1<f64>,
    pub gate_g: Array1<f64>,
    pub gate_o: Array1<f64>,
    pub c: Array1<f64>,
    pub h: Array1<f64>,
}

pub(crate) fn lstm_step(
    cell: &LstmCell,
    input: &Array1<f64>,
    h_prev: &Array1<f64>,
    c_prev: &Array1<f64>,
) -> LstmStep {
    let h = cell.hidden();
    let z = cell.w_input.dot(input) + cell.w_hidden.dot(h_prev) + &cell.bias;
    let gate_i = z.slice(s![0..h]).mapv(sigmoid);
    let gate_f = z.slice(s![h..2 * h]).mapv(sigmoid);
    let gate_g = z.slice(s![2 * h..3 * h]).mapv(f64::tanh);
    let gate_o = z.slice(s![3 * h..4 * h]).mapv(sigmoid);
    let c = &gate_f * c_prev + &gate_i * &gate_g;
    let h_out = &gate_o * &c.mapv(f64::tanh);
    LstmStep {
        input: input.clone(),
        h_prev: h_prev.clone(),
        c_prev: c_prev.clone(),
        gate_i,
        gate_f,
        gate_g,
        gate_o,
        c,
        h: h_out,
    }
}

/// Normalization statistics of one cell, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct NormCell {
    pub sigma: f64,
    pub normalized: Array1<f64>,
}

/// Mean/std normalization with the stabilized sigma.
pub(crate) fn normalize(x: &Array1<f64>) -> NormCell {
    let mean = x.mean().expect("non-empty vector");
    let var = x.mapv(|v| (v - mean) * (v - mean)).mean().expect("non-empty");
    let sigma = (var + LN_EPS).sqrt();
    NormCell {
        sigma,
        normalized: x.mapv(|v| (v - mean) / sigma),
    }
}

/// The gain and bias vectors a CLN generates from one conditioning vector.
pub(crate) fn cln_affine(cln: &Cln, condition: &Array1<f64>) -> (Array1<f64>, Array1<f64>) {
    (
        cln.w_gain.dot(condition) + &cln.b_gain,
        cln.w_bias.dot(condition) + &cln.b_bias,
    )
}

/// Conditional layer normalization of `x` under condition `c`.
pub fn cln(params: &Cln, condition: &Array1<f64>, x: &Array1<f64>) -> Array1<f64> {
    let (gain, bias) = cln_affine(params, condition);
    let cell = normalize(x);
    gain * &cell.normalized + bias
}

/// Every activation of one sentence's forward pass. Cell vectors are stored
/// row-major at index `i * n + j`; segment-task entries exist only for
/// `j >= i`.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub n: usize,
    pub token_ids: Vec<usize>,
    pub embedded: Vec<Array1<f64>>,
    pub fwd_steps: Vec<LstmStep>,
    /// Step `t` of the backward encoder covers position `n - 1 - t`.
    pub bwd_steps: Vec<LstmStep>,
    pub context: Vec<Array1<f64>>,
    pub seg_feat: Vec<Array1<f64>>,
    pub edge_feat: Vec<Array1<f64>>,
    pub seg_gain: Vec<Array1<f64>>,
    pub seg_bias: Vec<Array1<f64>>,
    pub edge_gain: Vec<Array1<f64>>,
    pub edge_bias: Vec<Array1<f64>>,
    pub seg_norm: Vec<Option<NormCell>>,
    pub edge_norm: Vec<Option<NormCell>>,
    /// Inner LSTM sweep of row `i`: step `t` covers position `i + t`.
    pub inner_rows: Vec<Vec<LstmStep>>,
    pub seg_pair: Vec<Array1<f64>>,
    pub edge_pair: Vec<Array1<f64>>,
    pub seg_probs: ProbGrid,
    pub edge_probs: ProbGrid,
}

impl Scorer {
    /// Runs the full forward pass for one sentence.
    pub fn forward(&self, sentence: &Sentence) -> Result<ForwardTrace, ScorerError> {
        let n = sentence.len();
        let d = self.config.dim;
        if n > self.config.max_len {
            return Err(ScorerError::InputTooLong {
                id: sentence.id().to_string(),
                n,
                max: self.config.max_len,
            });
        }
        let token_ids: Vec<usize> = sentence
            .tokens()
            .iter()
            .map(|t| self.token_ids.get(t).copied().unwrap_or(0))
            .collect();
        let embedded: Vec<Array1<f64>> = token_ids
            .iter()
            .enumerate()
            .map(|(i, &id)| &self.params.token_emb.row(id) + &self.params.pos_emb.row(i))
            .collect();

        // Bidirectional recurrent mixing: h_i is the sum of the forward and
        // backward hidden states at position i.
        let mut fwd_steps = Vec::with_capacity(n);
        let mut h = Array1::zeros(d);
        let mut c = Array1::zeros(d);
        for x in &embedded {
            let step = lstm_step(&self.params.enc_fwd, x, &h, &c);
            h = step.h.clone();
            c = step.c.clone();
            fwd_steps.push(step);
        }
        let mut bwd_steps = Vec::with_capacity(n);
        let mut h = Array1::zeros(d);
        let mut c = Array1::zeros(d);
        for x in embedded.iter().rev() {
            let step = lstm_step(&self.params.enc_bwd, x, &h, &c);
            h = step.h.clone();
            c = step.c.clone();
            bwd_steps.push(step);
        }
        let context: Vec<Array1<f64>> = (0..n)
            .map(|i| &fwd_steps[i].h + &bwd_steps[n - 1 - i].h)
            .collect();

        let seg_feat: Vec<Array1<f64>> = context
            .iter()
            .map(|h| self.params.seg_proj.w.dot(h) + &self.params.seg_proj.b)
            .collect();
        let edge_feat: Vec<Array1<f64>> = context
            .iter()
            .map(|h| self.params.edge_proj.w.dot(h) + &self.params.edge_proj.b)
            .collect();

        // Per-row CLN affine maps: the gain/bias depend only on the
        // conditioning (row) token, so compute them once per row.
        let row_affine = |fusion: &PairFusion, feats: &[Array1<f64>]| match fusion {
            PairFusion::Cln(cln) => feats.iter().map(|f| cln_affine(cln, f)).unzip(),
            PairFusion::Concat(_) => (Vec::new(), Vec::new()),
        };
        let (seg_gain, seg_bias): (Vec<_>, Vec<_>) =
            row_affine(&self.params.seg_fusion, &seg_feat);
        let (edge_gain, edge_bias): (Vec<_>, Vec<_>) =
            row_affine(&self.params.edge_fusion, &edge_feat);

        let fuse = |fusion: &PairFusion,
                    gain: &[Array1<f64>],
                    bias: &[Array1<f64>],
                    feats: &[Array1<f64>],
                    i: usize,
                    j: usize| {
            match fusion {
                PairFusion::Cln(_) => {
                    let cell = normalize(&feats[j]);
                    let out = &gain[i] * &cell.normalized + &bias[i];
                    (out, Some(cell))
                }
                PairFusion::Concat(fuse) => {
                    let mut cat = Array1::zeros(2 * feats[i].len());
                    cat.slice_mut(s![0..feats[i].len()]).assign(&feats[i]);
                    cat.slice_mut(s![feats[i].len()..]).assign(&feats[j]);
                    (fuse.w.dot(&cat) + &fuse.b, None)
                }
            }
        };

        let k_seg = self.config.segment_tags();
        let k_edge = self.config.edge_tags();
        let mut seg_probs = ProbGrid::zeros(n, k_seg, GridKind::Segment);
        let mut edge_probs = ProbGrid::zeros(n, k_edge, GridKind::Edge);
        let empty = Array1::zeros(0);
        let mut seg_norm: Vec<Option<NormCell>> = vec![None; n * n];
        let mut edge_norm: Vec<Option<NormCell>> = vec![None; n * n];
        let mut seg_pair: Vec<Array1<f64>> = vec![empty.clone(); n * n];
        let mut edge_pair: Vec<Array1<f64>> = vec![empty; n * n];
        let mut inner_rows: Vec<Vec<LstmStep>> = Vec::with_capacity(n);

        for i in 0..n {
            // One left-to-right inner sweep per row, reused for every j >= i.
            let mut row_steps = Vec::with_capacity(n - i);
            if let Some(inner) = &self.params.inner {
                let mut h = Array1::zeros(d);
                let mut c = Array1::zeros(d);
                for x in seg_feat.iter().take(n).skip(i) {
                    let step = lstm_step(inner, x, &h, &c);
                    h = step.h.clone();
                    c = step.c.clone();
                    row_steps.push(step);
                }
            }
            for j in i..n {
                let (boundary, cell) = fuse(
                    &self.params.seg_fusion,
                    &seg_gain,
                    &seg_bias,
                    &seg_feat,
                    i,
                    j,
                );
                let mut pair = boundary;
                if !row_steps.is_empty() {
                    pair += &row_steps[j - i].h;
                }
                if let Some(len_emb) = &self.params.len_emb {
                    pair += &len_emb.row(j - i);
                }
                let logits = self.params.seg_head.w.dot(&pair) + &self.params.seg_head.b;
                for (k, &logit) in logits.iter().enumerate() {
                    let p = sigmoid(logit);
                    if !p.is_finite() {
                        return Err(ScorerError::NonFinite {
                            id: sentence.id().to_string(),
                        });
                    }
                    seg_probs.set(i, j, k, p);
                }
                seg_norm[i * n + j] = cell;
                seg_pair[i * n + j] = pair;
            }
            inner_rows.push(row_steps);

            for j in 0..n {
                let (pair, cell) = fuse(
                    &self.params.edge_fusion,
                    &edge_gain,
                    &edge_bias,
                    &edge_feat,
                    i,
                    j,
                );
                let logits = self.params.edge_head.w.dot(&pair) + &self.params.edge_head.b;
                for (k, &logit) in logits.iter().enumerate() {
                    let p = sigmoid(logit);
                    if !p.is_finite() {
                        return Err(ScorerError::NonFinite {
                            id: sentence.id().to_string(),
                        });
                    }
                    edge_probs.set(i, j, k, p);
                }
                edge_norm[i * n + j] = cell;
                edge_pair[i * n + j] = pair;
            }
        }

        Ok(ForwardTrace {
            n,
            token_ids,
            embedded,
            fwd_steps,
            bwd_steps,
            context,
            seg_feat,
            edge_feat,
            seg_gain,
            seg_bias,
            edge_gain,
            edge_bias,
            seg_norm,
            edge_norm,
            inner_rows,
            seg_pair,
            edge_pair,
            seg_probs,
            edge_probs,
        })
    }

    /// Dense per-tag probability grids for one sentence. The segment grid is
    /// zero below the diagonal.
    pub fn predict_grids(&self, sentence: &Sentence) -> Result<(ProbGrid, ProbGrid), ScorerError> {
        let trace = self.forward(sentence)?;
        Ok((trace.seg_probs, trace.edge_probs))
    }
}

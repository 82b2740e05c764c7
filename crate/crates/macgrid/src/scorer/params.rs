//! All learnable tensors of the scorer, their initialization, and a uniform
//! flat view used by the optimizer, the checkpoint writer, and gradient
//! checking.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;

/// Gate order inside the packed LSTM vectors: input, forget, candidate,
/// output.
pub(crate) const LSTM_GATES: usize = 4;

/// One LSTM cell. `w_input` is `(4h, in)`, `w_hidden` is `(4h, h)`, `bias`
/// is `(4h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    pub w_input: Array2<f64>,
    pub w_hidden: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LstmCell {
    fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_input: Array2::zeros((LSTM_GATES * hidden, input)),
            w_hidden: Array2::zeros((LSTM_GATES * hidden, hidden)),
            bias: Array1::zeros(LSTM_GATES * hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hidden.ncols()
    }
}

/// Conditional layer normalization: the gain and bias of a plain layer norm
/// are affine functions of the conditioning vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Cln {
    pub w_gain: Array2<f64>,
    pub b_gain: Array1<f64>,
    pub w_bias: Array2<f64>,
    pub b_bias: Array1<f64>,
}

impl Cln {
    fn zeros(dim: usize) -> Self {
        Self {
            w_gain: Array2::zeros((dim, dim)),
            b_gain: Array1::zeros(dim),
            w_bias: Array2::zeros((dim, dim)),
            b_bias: Array1::zeros(dim),
        }
    }
}

/// Plain affine map.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Linear {
    fn zeros(out: usize, input: usize) -> Self {
        Self {
            w: Array2::zeros((out, input)),
            b: Array1::zeros(out),
        }
    }
}

/// How the two token features of a cell are fused into one vector: CLN of the
/// second conditioned on the first (the default), or concatenation followed
/// by a linear map (the ablation).
#[derive(Debug, Clone, PartialEq)]
pub enum PairFusion {
    Cln(Cln),
    Concat(Linear),
}

/// Every learnable tensor, shaped by a [`ModelConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub token_emb: Array2<f64>,
    pub pos_emb: Array2<f64>,
    pub enc_fwd: LstmCell,
    pub enc_bwd: LstmCell,
    pub seg_proj: Linear,
    pub edge_proj: Linear,
    pub seg_fusion: PairFusion,
    pub edge_fusion: PairFusion,
    pub inner: Option<LstmCell>,
    pub len_emb: Option<Array2<f64>>,
    pub seg_head: Linear,
    pub edge_head: Linear,
}

impl ModelParams {
    /// All-zero tensors; the shape template for gradients and Adam moments.
    pub fn zeros(config: &ModelConfig) -> Self {
        let d = config.dim;
        let fusion = || {
            if config.use_cln {
                PairFusion::Cln(Cln::zeros(d))
            } else {
                PairFusion::Concat(Linear::zeros(d, 2 * d))
            }
        };
        Self {
            token_emb: Array2::zeros((config.vocab.len(), d)),
            pos_emb: Array2::zeros((config.max_len, d)),
            enc_fwd: LstmCell::zeros(d, d),
            enc_bwd: LstmCell::zeros(d, d),
            seg_proj: Linear::zeros(d, d),
            edge_proj: Linear::zeros(d, d),
            seg_fusion: fusion(),
            edge_fusion: fusion(),
            inner: config.use_inner_lstm.then(|| LstmCell::zeros(d, d)),
            len_emb: config
                .use_length_embedding
                .then(|| Array2::zeros((config.max_len, d))),
            seg_head: Linear::zeros(config.segment_tags(), d),
            edge_head: Linear::zeros(config.edge_tags(), d),
        }
    }

    /// Seeded initialization: weights uniform in (-0.1, 0.1), biases zero,
    /// except the CLN gain bias which starts at 1 so CLN begins as a plain
    /// layer norm.
    pub fn init(config: &ModelConfig, seed: u64) -> Self {
        let mut params = Self::zeros(config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (name, _, values) in params.tensors_mut() {
            let is_weight = !name.ends_with(".b")
                && !name.ends_with(".bias")
                && !name.ends_with(".b_gain")
                && !name.ends_with(".b_bias");
            if is_weight {
                for v in values.iter_mut() {
                    *v = rng.gen_range(-0.1..0.1);
                }
            } else if name.ends_with(".b_gain") {
                for v in values.iter_mut() {
                    *v = 1.0;
                }
            }
        }
        params
    }

    /// Flat named views over every tensor, in a fixed documented order. Keeps
    /// the optimizer, checkpoints and gradient checking structure-agnostic.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out: Vec<(String, Vec<usize>, &[f64])> = Vec::new();
        macro_rules! push2 {
            ($name:expr, $a:expr) => {
                out.push((
                    $name.to_string(),
                    $a.shape().to_vec(),
                    $a.as_slice().expect("standard layout"),
                ));
            };
        }
        macro_rules! push1 {
            ($name:expr, $a:expr) => {
                out.push((
                    $name.to_string(),
                    vec![$a.len()],
                    $a.as_slice().expect("standard layout"),
                ));
            };
        }
        macro_rules! push_lstm {
            ($prefix:expr, $cell:expr) => {
                push2!(format!("{}.w_input", $prefix), $cell.w_input);
                push2!(format!("{}.w_hidden", $prefix), $cell.w_hidden);
                push1!(format!("{}.bias", $prefix), $cell.bias);
            };
        }
        macro_rules! push_fusion {
            ($task:expr, $fusion:expr) => {
                match $fusion {
                    PairFusion::Cln(cln) => {
                        push2!(format!("{}_cln.w_gain", $task), cln.w_gain);
                        push1!(format!("{}_cln.b_gain", $task), cln.b_gain);
                        push2!(format!("{}_cln.w_bias", $task), cln.w_bias);
                        push1!(format!("{}_cln.b_bias", $task), cln.b_bias);
                    }
                    PairFusion::Concat(fuse) => {
                        push2!(format!("{}_fuse.w", $task), fuse.w);
                        push1!(format!("{}_fuse.b", $task), fuse.b);
                    }
                }
            };
        }

        push2!("token_emb", self.token_emb);
        push2!("pos_emb", self.pos_emb);
        push_lstm!("enc_fwd", self.enc_fwd);
        push_lstm!("enc_bwd", self.enc_bwd);
        push2!("seg_proj.w", self.seg_proj.w);
        push1!("seg_proj.b", self.seg_proj.b);
        push2!("edge_proj.w", self.edge_proj.w);
        push1!("edge_proj.b", self.edge_proj.b);
        push_fusion!("seg", &self.seg_fusion);
        push_fusion!("edge", &self.edge_fusion);
        if let Some(inner) = &self.inner {
            push_lstm!("inner", inner);
        }
        if let Some(len_emb) = &self.len_emb {
            push2!("len_emb", len_emb);
        }
        push2!("seg_head.w", self.seg_head.w);
        push1!("seg_head.b", self.seg_head.b);
        push2!("edge_head.w", self.edge_head.w);
        push1!("edge_head.b", self.edge_head.b);
        out
    }

    /// Mutable counterpart of [`tensors`](Self::tensors); identical order.
    pub fn tensors_mut(&mut self) -> Vec<(String, Vec<usize>, &mut [f64])> {
        let mut out: Vec<(String, Vec<usize>, &mut [f64])> = Vec::new();
        macro_rules! push2 {
            ($name:expr, $a:expr) => {{
                let shape = $a.shape().to_vec();
                out.push((
                    $name.to_string(),
                    shape,
                    $a.as_slice_mut().expect("standard layout"),
                ));
            }};
        }
        macro_rules! push1 {
            ($name:expr, $a:expr) => {{
                let len = $a.len();
                out.push((
                    $name.to_string(),
                    vec![len],
                    $a.as_slice_mut().expect("standard layout"),
                ));
            }};
        }
        macro_rules! push_lstm {
            ($prefix:expr, $cell:expr) => {{
                push2!(format!("{}.w_input", $prefix), $cell.w_input);
                push2!(format!("{}.w_hidden", $prefix), $cell.w_hidden);
                push1!(format!("{}.bias", $prefix), $cell.bias);
            }};
        }
        macro_rules! push_fusion {
            ($task:expr, $fusion:expr) => {{
                match $fusion {
                    PairFusion::Cln(cln) => {
                        push2!(format!("{}_cln.w_gain", $task), cln.w_gain);
                        push1!(format!("{}_cln.b_gain", $task), cln.b_gain);
                        push2!(format!("{}_cln.w_bias", $task), cln.w_bias);
                        push1!(format!("{}_cln.b_bias", $task), cln.b_bias);
                    }
                    PairFusion::Concat(fuse) => {
                        push2!(format!("{}_fuse.w", $task), fuse.w);
                        push1!(format!("{}_fuse.b", $task), fuse.b);
                    }
                }
            }};
        }

        push2!("token_emb", self.token_emb);
        push2!("pos_emb", self.pos_emb);
        push_lstm!("enc_fwd", self.enc_fwd);
        push_lstm!("enc_bwd", self.enc_bwd);
        push2!("seg_proj.w", self.seg_proj.w);
        push1!("seg_proj.b", self.seg_proj.b);
        push2!("edge_proj.w", self.edge_proj.w);
        push1!("edge_proj.b", self.edge_proj.b);
        push_fusion!("seg", &mut self.seg_fusion);
        push_fusion!("edge", &mut self.edge_fusion);
        if let Some(inner) = &mut self.inner {
            push_lstm!("inner", inner);
        }
        if let Some(len_emb) = &mut self.len_emb {
            push2!("len_emb", len_emb);
        }
        push2!("seg_head.w", self.seg_head.w);
        push1!("seg_head.b", self.seg_head.b);
        push2!("edge_head.w", self.edge_head.w);
        push1!("edge_head.b", self.edge_head.b);
        out
    }

    /// True when every value in every tensor is finite.
    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, _, values)| values.iter().all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ModelConfig {
        ModelConfig {
            dim: 4,
            max_len: 8,
            vocab: vec!["<unk>".into(), "a".into(), "b".into()],
            types: vec!["ADE".into()],
            use_cln: true,
            use_inner_lstm: true,
            use_length_embedding: true,
        }
    }

    #[test]
    fn init_is_seeded_and_deterministic() {
        let cfg = config();
        let a = ModelParams::init(&cfg, 42);
        let b = ModelParams::init(&cfg, 42);
        assert_eq!(a, b);
        let c = ModelParams::init(&cfg, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn init_biases_zero_and_gain_bias_one() {
        let params = ModelParams::init(&config(), 1);
        assert!(params.seg_proj.b.iter().all(|&v| v == 0.0));
        match &params.seg_fusion {
            PairFusion::Cln(cln) => {
                assert!(cln.b_gain.iter().all(|&v| v == 1.0));
                assert!(cln.b_bias.iter().all(|&v| v == 0.0));
            }
            PairFusion::Concat(_) => panic!("default config uses CLN"),
        }
        assert!(params
            .tensors()
            .iter()
            .all(|(_, _, values)| values.iter().all(|v| v.abs() <= 1.0)));
    }

    #[test]
    fn tensor_views_cover_all_parameters_in_stable_order() {
        let mut params = ModelParams::init(&config(), 7);
        let names: Vec<String> = params.tensors().iter().map(|(n, _, _)| n.clone()).collect();
        let names_mut: Vec<String> = params
            .tensors_mut()
            .iter()
            .map(|(n, _, _)| n.clone())
            .collect();
        assert_eq!(names, names_mut);
        assert!(names.contains(&"token_emb".to_string()));
        assert!(names.contains(&"inner.w_hidden".to_string()));
        assert!(names.contains(&"len_emb".to_string()));
        assert!(names.contains(&"seg_cln.w_gain".to_string()));

        // Shapes: the flat length must match the product of dims.
        for (name, shape, values) in params.tensors() {
            assert_eq!(
                shape.iter().product::<usize>(),
                values.len(),
                "tensor {name}"
            );
        }
    }

    #[test]
    fn ablation_flags_change_the_parameter_set() {
        let mut cfg = config();
        cfg.use_cln = false;
        cfg.use_inner_lstm = false;
        cfg.use_length_embedding = false;
        let params = ModelParams::zeros(&cfg);
        let names: Vec<String> = params.tensors().iter().map(|(n, _, _)| n.clone()).collect();
        assert!(names.contains(&"seg_fuse.w".to_string()));
        assert!(!names.iter().any(|n| n.starts_with("inner")));
        assert!(!names.contains(&"len_emb".to_string()));
        assert!(!names.iter().any(|n| n.contains("cln")));
    }
}

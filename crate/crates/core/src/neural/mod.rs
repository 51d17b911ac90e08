//! Convolutional coherence scorer over linearized entity grids.
//!
//! Architecture: embedding lookup (L x d) -> N filters of width w with ReLU
//! -> max-pooling over consecutive chunks of `pool` positions -> dropout ->
//! linear layer to a scalar coherence score.

mod gradcheck;
mod model_io;
mod optim;
mod train;

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{GridSequence, GridToken, DEFAULT_SEQ_LEN};
use crate::seed;

pub use gradcheck::{compare_gradients, gradient_check, GRADCHECK_EPSILON};
pub use model_io::{load_model, load_model_file, save_model, save_model_file, MAGIC};
pub use optim::{rmsprop_update, RmsProp};
pub use train::{
    make_training_pairs, pairwise_accuracy, ranking_loss, train, train_with, training_pairs,
    EpochStats, StopReason, TrainReport,
};

/// Vocabulary size: S, O, X, absent, padding.
pub const VOCAB_SIZE: usize = 5;
const PAD: usize = GridToken::Pad as usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pooling {
    /// Max over consecutive non-overlapping windows of `pool` positions.
    Chunked,
    /// One max over the whole feature map.
    Global,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HyperParams {
    pub batch: usize,
    pub emb_dim: usize,
    pub dropout: f64,
    pub filters: usize,
    pub window: usize,
    pub pool: usize,
    pub pooling: Pooling,
    pub seq_len: usize,
    pub learning_rate: f64,
    pub rmsprop_decay: f64,
    pub rmsprop_eps: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// False trees sampled per gold tree.
    pub negatives: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            batch: 64,
            emb_dim: 100,
            dropout: 0.5,
            filters: 150,
            window: 6,
            pool: 6,
            pooling: Pooling::Chunked,
            seq_len: DEFAULT_SEQ_LEN,
            learning_rate: 0.001,
            rmsprop_decay: 0.9,
            rmsprop_eps: 1e-8,
            max_epochs: 25,
            patience: 10,
            negatives: 20,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::validation(format!("hyperparameters: {m}")));
        for (name, v) in [
            ("batch", self.batch),
            ("emb_dim", self.emb_dim),
            ("filters", self.filters),
            ("window", self.window),
            ("pool", self.pool),
            ("seq_len", self.seq_len),
            ("negatives", self.negatives),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.window > self.seq_len {
            return bad(format!(
                "window {} is longer than the sequence length {}",
                self.window, self.seq_len
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive".into());
        }
        if !(0.0..1.0).contains(&self.rmsprop_decay)
            || self.rmsprop_eps.is_nan()
            || self.rmsprop_eps <= 0.0
        {
            return bad("rmsprop decay must lie in [0, 1) and epsilon be positive".into());
        }
        Ok(())
    }

    /// Number of positions of a valid convolution.
    pub fn conv_len(&self) -> usize {
        self.seq_len - self.window + 1
    }

    pub fn chunks(&self) -> usize {
        match self.pooling {
            Pooling::Chunked => self.conv_len().div_ceil(self.pool),
            Pooling::Global => 1,
        }
    }

    /// Width of the pooled feature vector entering the score layer.
    pub fn feature_width(&self) -> usize {
        self.filters * self.chunks()
    }
}

/// Trainable parameters, grouped. Also used for gradients and optimizer state.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    /// `[VOCAB_SIZE x d]`, row-major.
    pub embedding: Vec<f64>,
    /// `[N x w x d]`.
    pub filters: Vec<f64>,
    pub filter_bias: Vec<f64>,
    /// `[N x chunks]`.
    pub score_weights: Vec<f64>,
    /// Length 1.
    pub score_bias: Vec<f64>,
}

impl Params {
    pub const GROUP_NAMES: [&'static str; 5] = [
        "embedding",
        "filters",
        "filter_bias",
        "score_weights",
        "score_bias",
    ];

    pub fn zeros(hp: &HyperParams) -> Self {
        Params {
            embedding: vec![0.0; VOCAB_SIZE * hp.emb_dim],
            filters: vec![0.0; hp.filters * hp.window * hp.emb_dim],
            filter_bias: vec![0.0; hp.filters],
            score_weights: vec![0.0; hp.feature_width()],
            score_bias: vec![0.0],
        }
    }

    pub fn groups(&self) -> [&[f64]; 5] {
        [
            &self.embedding,
            &self.filters,
            &self.filter_bias,
            &self.score_weights,
            &self.score_bias,
        ]
    }

    pub fn groups_mut(&mut self) -> [&mut [f64]; 5] {
        [
            &mut self.embedding,
            &mut self.filters,
            &mut self.filter_bias,
            &mut self.score_weights,
            &mut self.score_bias,
        ]
    }

    pub fn fill(&mut self, value: f64) {
        for g in self.groups_mut() {
            g.fill(value);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.groups()
            .iter()
            .all(|g| g.iter().all(|v| v.is_finite()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoherenceModel {
    pub hp: HyperParams,
    pub params: Params,
    pub seed: u64,
}

/// Per-sequence forward state needed for backpropagation.
#[derive(Clone, Debug)]
pub(crate) struct ForwardCache {
    /// Winning position per pooled feature.
    argmax: Vec<u32>,
    /// Whether the winner's pre-activation was positive.
    active: Vec<bool>,
    /// Pooled features after dropout.
    features: Vec<f64>,
}

/// Inverted-dropout mask: each entry is 0 or `1 / (1 - rate)`.
pub(crate) fn dropout_mask<R: Rng>(width: usize, rate: f64, rng: &mut R) -> Vec<f64> {
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    (0..width)
        .map(|_| if rng.gen::<f64>() < keep { scale } else { 0.0 })
        .collect()
}

/// Sum of `gradient wrt projection table` terms for one batch.
pub(crate) type ProjectionGrad = Vec<f64>;

pub fn init_model(hp: HyperParams, seed: u64) -> Result<CoherenceModel> {
    hp.validate()?;
    let mut rng = seed::rng(seed::derive(seed, "init"));
    let mut params = Params::zeros(&hp);
    for (v, row) in params.embedding.chunks_mut(hp.emb_dim).enumerate() {
        if v != PAD {
            row.iter_mut()
                .for_each(|x| *x = rng.gen_range(-0.05..=0.05));
        }
    }
    params
        .filters
        .iter_mut()
        .for_each(|x| *x = rng.gen_range(-0.05..=0.05));
    Ok(CoherenceModel { hp, params, seed })
}

impl CoherenceModel {
    /// Filter responses per (filter, offset, token): `sum_j W[f,k,j] * E[v,j]`.
    ///
    /// Since the vocabulary has five symbols, convolving embeddings reduces to
    /// table lookups. Padding rows stay exactly zero.
    pub(crate) fn projection(&self) -> Vec<f64> {
        let (n, w, d) = (self.hp.filters, self.hp.window, self.hp.emb_dim);
        let mut table = vec![0.0; n * w * VOCAB_SIZE];
        for fk in 0..n * w {
            let filt = &self.params.filters[fk * d..(fk + 1) * d];
            for v in 0..VOCAB_SIZE {
                if v == PAD {
                    continue;
                }
                let emb = &self.params.embedding[v * d..(v + 1) * d];
                table[fk * VOCAB_SIZE + v] = filt.iter().zip(emb).map(|(a, b)| a * b).sum();
            }
        }
        table
    }

    fn check_len(&self, seq: &GridSequence) -> Result<()> {
        if seq.len() != self.hp.seq_len {
            return Err(Error::validation(format!(
                "sequence length {} does not match the model's {}",
                seq.len(),
                self.hp.seq_len
            )));
        }
        Ok(())
    }

    pub(crate) fn forward(
        &self,
        seq: &GridSequence,
        table: &[f64],
        mask: Option<&[f64]>,
    ) -> (f64, ForwardCache) {
        let hp = &self.hp;
        let (w, t_len) = (hp.window, hp.conv_len());
        let chunks = hp.chunks();
        let width = match hp.pooling {
            Pooling::Chunked => hp.pool,
            Pooling::Global => t_len,
        };
        let tokens: Vec<usize> = seq.tokens().iter().map(|t| t.index()).collect();
        // windows starting at or after `content` see only padding
        let content = seq.content_len().min(t_len);

        let feat_len = hp.feature_width();
        let mut argmax = vec![0u32; feat_len];
        let mut active = vec![false; feat_len];
        let mut features = vec![0.0; feat_len];
        let mut conv = vec![0.0; content];

        for f in 0..hp.filters {
            let bias = self.params.filter_bias[f];
            let rows = &table[f * w * VOCAB_SIZE..(f + 1) * w * VOCAB_SIZE];
            for (t, out) in conv.iter_mut().enumerate() {
                let mut s = bias;
                for k in 0..w {
                    s += rows[k * VOCAB_SIZE + tokens[t + k]];
                }
                *out = s;
            }
            for c in 0..chunks {
                let start = c * width;
                let end = (start + width).min(t_len);
                let mut best_t = start;
                let mut best = f64::NEG_INFINITY;
                for t in start..end {
                    let v = if t < content { conv[t] } else { bias };
                    if v > best {
                        best = v;
                        best_t = t;
                    }
                    if t >= content {
                        // the rest of the chunk is the same constant
                        break;
                    }
                }
                let i = f * chunks + c;
                argmax[i] = best_t as u32;
                active[i] = best > 0.0;
                let pooled = best.max(0.0);
                features[i] = match mask {
                    Some(m) => pooled * m[i],
                    None => pooled,
                };
            }
        }

        let phi = self.params.score_bias[0]
            + self
                .params
                .score_weights
                .iter()
                .zip(&features)
                .map(|(a, b)| a * b)
                .sum::<f64>();
        (
            phi,
            ForwardCache {
                argmax,
                active,
                features,
            },
        )
    }

    /// Accumulate `dphi * d(phi)/d(params)` into `grad` (score layer and
    /// biases) and `proj_grad` (filter/embedding terms, resolved later by
    /// [`CoherenceModel::resolve_projection_grad`]).
    pub(crate) fn backward(
        &self,
        seq: &GridSequence,
        cache: &ForwardCache,
        mask: Option<&[f64]>,
        dphi: f64,
        grad: &mut Params,
        proj_grad: &mut ProjectionGrad,
    ) {
        let w = self.hp.window;
        let tokens = seq.tokens();
        grad.score_bias[0] += dphi;
        for (g, x) in grad.score_weights.iter_mut().zip(&cache.features) {
            *g += dphi * x;
        }
        let chunks = self.hp.chunks();
        for (i, &a) in cache.argmax.iter().enumerate() {
            if !cache.active[i] {
                continue;
            }
            let m = mask.map_or(1.0, |m| m[i]);
            let g = dphi * self.params.score_weights[i] * m;
            if g == 0.0 {
                continue;
            }
            let f = i / chunks;
            grad.filter_bias[f] += g;
            let base = f * w * VOCAB_SIZE;
            for k in 0..w {
                proj_grad[base + k * VOCAB_SIZE + tokens[a as usize + k].index()] += g;
            }
        }
    }

    /// Chain projection-table gradients back to filters and embeddings.
    /// The padding row receives nothing.
    pub(crate) fn resolve_projection_grad(&self, proj_grad: &ProjectionGrad, grad: &mut Params) {
        let (n, w, d) = (self.hp.filters, self.hp.window, self.hp.emb_dim);
        for fk in 0..n * w {
            let filt = &self.params.filters[fk * d..(fk + 1) * d];
            for v in 0..VOCAB_SIZE {
                let g = proj_grad[fk * VOCAB_SIZE + v];
                if v == PAD || g == 0.0 {
                    continue;
                }
                let emb = &self.params.embedding[v * d..(v + 1) * d];
                for j in 0..d {
                    grad.filters[fk * d + j] += g * emb[j];
                    grad.embedding[v * d + j] += g * filt[j];
                }
            }
        }
    }

    pub(crate) fn empty_projection_grad(&self) -> ProjectionGrad {
        vec![0.0; self.hp.filters * self.hp.window * VOCAB_SIZE]
    }

    /// Score one sequence. In training mode an inverted-dropout mask drawn from
    /// `seed` is applied to the pooled features; evaluation mode is
    /// deterministic and ignores `seed`.
    pub fn score(&self, seq: &GridSequence, train_mode: bool, seed: u64) -> Result<f64> {
        self.check_len(seq)?;
        let table = self.projection();
        let mask = train_mode.then(|| {
            dropout_mask(
                self.hp.feature_width(),
                self.hp.dropout,
                &mut seed::rng(seed),
            )
        });
        Ok(self.forward(seq, &table, mask.as_deref()).0)
    }

    /// Evaluation-mode scores for many sequences, sharing one projection table.
    pub fn score_batch(&self, seqs: &[GridSequence]) -> Result<Vec<f64>> {
        let table = self.projection();
        seqs.iter()
            .map(|s| {
                self.check_len(s)?;
                Ok(self.forward(s, &table, None).0)
            })
            .collect()
    }
}

pub fn score(
    model: &CoherenceModel,
    seq: &GridSequence,
    train_mode: bool,
    seed: u64,
) -> Result<f64> {
    model.score(seq, train_mode, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use GridToken::*;

    #[test]
    fn default_feature_width() {
        let m = init_model(HyperParams::default(), 7).unwrap();
        assert_eq!(m.hp.conv_len(), 763);
        assert_eq!(m.hp.chunks(), 128);
        assert_eq!(m.params.score_weights.len(), 19200);
        assert_eq!(m.params.filters.len(), 150 * 6 * 100);
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_model(HyperParams::default(), 7).unwrap();
        let b = init_model(HyperParams::default(), 7).unwrap();
        assert_eq!(a, b);
        let c = init_model(HyperParams::default(), 8).unwrap();
        assert_ne!(a.params.filters, c.params.filters);
        let d = a.hp.emb_dim;
        assert!(a.params.embedding[PAD * d..(PAD + 1) * d]
            .iter()
            .all(|&x| x == 0.0));
        assert!(a.params.filters.iter().all(|x| x.abs() <= 0.05));
        assert!(a.params.score_weights.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn zero_dimension_rejected() {
        let hp = HyperParams {
            emb_dim: 0,
            ..Default::default()
        };
        assert!(init_model(hp, 1).is_err());
        let hp = HyperParams {
            window: 9,
            seq_len: 8,
            ..Default::default()
        };
        assert!(init_model(hp, 1).is_err());
    }

    #[test]
    fn fresh_model_scores_zero() {
        let m = init_model(HyperParams::default(), 3).unwrap();
        let pad = GridSequence::all_pad(768);
        assert_eq!(m.score(&pad, false, 0).unwrap(), 0.0);
        let mut toks = vec![Pad; 768];
        toks[..4].copy_from_slice(&[S, O, Absent, X]);
        assert_eq!(m.score(&GridSequence::new(toks), true, 5).unwrap(), 0.0);
    }

    #[test]
    fn wrong_length_is_an_error() {
        let m = init_model(HyperParams::default(), 3).unwrap();
        assert!(m.score(&GridSequence::all_pad(10), false, 0).is_err());
    }

    /// Tiny model with hand-set weights: L=8, d=2, N=1, w=2, pool=2.
    fn tiny() -> CoherenceModel {
        let hp = HyperParams {
            emb_dim: 2,
            filters: 1,
            window: 2,
            pool: 2,
            seq_len: 8,
            dropout: 0.5,
            ..Default::default()
        };
        let mut m = init_model(hp, 0).unwrap();
        // rows S, O, X, -, PAD
        m.params.embedding = vec![0.5, -0.25, 0.25, 0.5, -0.5, 0.125, 0.125, 0.0, 0.0, 0.0];
        // offset 0: (1, 2); offset 1: (-1, 0.5)
        m.params.filters = vec![1.0, 2.0, -1.0, 0.5];
        m.params.filter_bias = vec![0.125];
        m.params.score_weights = vec![1.0, -0.5, 0.25, 2.0];
        m.params.score_bias = vec![0.5];
        m
    }

    #[test]
    fn hand_computed_forward_pass() {
        // Oracle worked by hand, position by position.
        //   tokens: S O X - PAD PAD PAD PAD
        //   offset-0 response r0(v) = e_v . (1, 2):   S 0, O 1.25, X -0.25, - 0.125, PAD 0
        //   offset-1 response r1(v) = e_v . (-1, .5): S -0.625, O 0, X 0.5625, - -0.125, PAD 0
        //   conv[t] = 0.125 + r0(tok t) + r1(tok t+1), t = 0..6:
        //     t0 S,O    0.125 + 0     + 0      = 0.125
        //     t1 O,X    0.125 + 1.25  + 0.5625 = 1.9375
        //     t2 X,-    0.125 - 0.25  - 0.125  = -0.25
        //     t3 -,PAD  0.125 + 0.125 + 0      = 0.25
        //     t4..t6    0.125
        //   pooled (chunks {0,1},{2,3},{4,5},{6}) after ReLU: 1.9375, 0.25, 0.125, 0.125
        //   phi = 0.5 + 1.9375 - 0.125 + 0.03125 + 0.25 = 2.59375
        let m = tiny();
        let seq = GridSequence::new(vec![S, O, X, Absent, Pad, Pad, Pad, Pad]);
        assert_eq!(m.score(&seq, false, 0).unwrap(), 2.59375);
    }

    #[test]
    fn eval_mode_repeatable_and_pad_noop() {
        let m = tiny();
        let seq = GridSequence::new(vec![S, O, X, Absent, Pad, Pad, Pad, Pad]);
        let a = m.score(&seq, false, 1).unwrap();
        let b = m.score(&seq, false, 2).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        // dropout draws differ with the seed; the mean of many draws stays near eval
        let mean: f64 = (0..4000)
            .map(|s| m.score(&seq, true, s).unwrap())
            .sum::<f64>()
            / 4000.0;
        assert!((mean - a).abs() < 0.1, "{mean} vs {a}");
    }

    #[test]
    fn global_pooling_width() {
        let hp = HyperParams {
            pooling: Pooling::Global,
            ..Default::default()
        };
        let m = init_model(hp, 1).unwrap();
        assert_eq!(m.params.score_weights.len(), 150);
    }
}

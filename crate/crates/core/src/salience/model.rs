//! The masked salience network: strided conv feature extractor, GRU mask
//! generator, and a conv + max-pool salience head.

use std::path::Path;

use super::gumbel::{binary_concrete, noise_sequence};
use super::mask::energy_keep;
use super::prior::{prior_kl_chain_graph, sparsity_loss_graph, MarkovPrior, CLAMP};
use crate::emotion::{EmotionDistribution, NUM_EMOTIONS};
use crate::error::{Error, Result};
use crate::grad::nn::{Conv1d, Gru, Linear};
use crate::grad::{load_tensors, save_tensors, Graph, ParamStore, Real, Tensor, Var};
use crate::seed::rng_from;
use crate::signal::{frame_energy, AudioBuffer};

/// Samples per feature frame (20 ms at 16 kHz).
pub const FRAME_HOP: usize = 320;
/// Receptive field of one extractor output frame.
pub const RECEPTIVE_FIELD: usize = 596;
/// Zero padding before the waveform; centers frame `t` on `t * 320 + 160`.
pub const LEFT_PAD: usize = (RECEPTIVE_FIELD - FRAME_HOP) / 2;

const EXTRACTOR_CHANNELS: [usize; 5] = [1, 32, 32, 64, 64];
const EXTRACTOR_STRIDES: [usize; 4] = [4, 4, 4, 5];
const EXTRACTOR_KERNEL: usize = 8;
const MASK_HIDDEN: usize = 64;
const HEAD_CHANNELS: usize = 64;
const HEAD_KERNEL: usize = 3;
/// Initial mask-logit bias. Starting with most frames switched on lets the
/// head learn from the cue before the KL terms prune the mask.
const MASK_BIAS_INIT: f64 = 2.0;

/// Knobs for the saliency loss, sampling and training.
#[derive(Debug, Clone, PartialEq)]
pub struct SalienceConfig {
    pub lambda_prior: f64,
    pub lambda_sparse: f64,
    pub sparsity_target: f64,
    pub prior: MarkovPrior,
    pub temperature_start: f64,
    pub temperature_end: f64,
    pub energy_gate_db: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Global gradient-norm ceiling applied before each Adam step.
    pub grad_clip: Option<f64>,
    /// Epochs over which both KL weights ramp linearly from 0 to their
    /// configured values.
    pub kl_warmup_epochs: f64,
}

impl Default for SalienceConfig {
    fn default() -> Self {
        Self {
            lambda_prior: 5e-4,
            lambda_sparse: 3e-4,
            sparsity_target: 0.01,
            prior: MarkovPrior::default(),
            temperature_start: 1.0,
            temperature_end: 0.3,
            energy_gate_db: -40.0,
            epochs: 30,
            learning_rate: 1e-3,
            grad_clip: None,
            kl_warmup_epochs: 3.0,
        }
    }
}

impl SalienceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_prior < 0.0 || self.lambda_sparse < 0.0 {
            return Err(Error::Config("loss weights must be nonnegative".into()));
        }
        if !(self.temperature_start > 0.0 && self.temperature_end > 0.0) {
            return Err(Error::Config("temperatures must be positive".into()));
        }
        if !(self.sparsity_target > 0.0 && self.sparsity_target < 1.0) {
            return Err(Error::Config("sparsity target must lie in (0, 1)".into()));
        }
        self.prior.validate()
    }

    /// KL weight multiplier after `step` updates with `per_epoch` steps each.
    pub fn kl_ramp(&self, step: usize, per_epoch: usize) -> f64 {
        if self.kl_warmup_epochs <= 0.0 {
            return 1.0;
        }
        (step as f64 / (self.kl_warmup_epochs * per_epoch as f64)).min(1.0)
    }

    /// Linear anneal from start to end over `total` steps.
    pub fn temperature_at(&self, step: usize, total: usize) -> f64 {
        if total <= 1 {
            return self.temperature_end;
        }
        let w = step.min(total - 1) as f64 / (total - 1) as f64;
        self.temperature_start + (self.temperature_end - self.temperature_start) * w
    }
}

/// How the per-frame mask is produced inside the graph.
#[derive(Debug, Clone)]
pub enum MaskMode {
    /// Hard binary-concrete sample forward, soft gradient backward.
    StraightThrough { temperature: f64, noise: Vec<f64> },
    /// Soft binary-concrete sample in both directions.
    Relaxed { temperature: f64, noise: Vec<f64> },
    /// A given mask, treated as a constant.
    Fixed(Vec<f64>),
}

/// Parameter layout of the network; the weights live in a [`ParamStore`].
#[derive(Debug, Clone)]
pub struct SalienceNet {
    extractor: Vec<Conv1d>,
    gru: Gru,
    mask_out: Linear,
    head_conv: Conv1d,
    head_out: Linear,
}

/// Graph handles produced by one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct SalienceVars {
    /// Gated, clamped posterior `[T, 1]`.
    pub posterior: Var,
    /// Mask applied to the features `[T]`.
    pub mask: Var,
    /// Softmax output `[1, 5]`.
    pub prediction: Var,
}

/// Per-frame inputs derived from the waveform.
#[derive(Debug, Clone)]
pub struct PreparedInput {
    /// Zero-padded waveform, length `320 T + 276`.
    pub padded: Vec<f32>,
    /// Energy-gate keep flags, length `T`.
    pub keep: Vec<bool>,
}

impl PreparedInput {
    pub fn frames(&self) -> usize {
        self.keep.len()
    }
}

/// Frame count for a waveform of `len` samples.
pub fn frame_count(len: usize) -> usize {
    len.div_ceil(FRAME_HOP)
}

pub fn prepare_input(y: &AudioBuffer, energy_gate_db: f64) -> Result<PreparedInput> {
    if y.len() < RECEPTIVE_FIELD {
        return Err(Error::SignalTooShort { len: y.len(), needed: RECEPTIVE_FIELD });
    }
    let frames = frame_count(y.len());
    let mut padded = vec![0.0f32; FRAME_HOP * frames + RECEPTIVE_FIELD - FRAME_HOP];
    padded[LEFT_PAD..LEFT_PAD + y.len()].copy_from_slice(&y.samples);
    let energies = frame_energy(y, FRAME_HOP, FRAME_HOP)?;
    let keep = energy_keep(&energies, energy_gate_db);
    debug_assert_eq!(keep.len(), frames);
    Ok(PreparedInput { padded, keep })
}

impl SalienceNet {
    pub fn new<T: Real>(store: &mut ParamStore<T>, seed: u64) -> Result<Self> {
        let mut rng = rng_from(seed);
        let mut extractor = Vec::new();
        for (i, &stride) in EXTRACTOR_STRIDES.iter().enumerate() {
            let (c_in, c_out) = (EXTRACTOR_CHANNELS[i], EXTRACTOR_CHANNELS[i + 1]);
            extractor.push(Conv1d::new(store, &format!("extractor.{i}"), c_in, c_out, EXTRACTOR_KERNEL, stride, &mut rng)?);
        }
        let feat = EXTRACTOR_CHANNELS[4];
        let gru = Gru::new(store, "mask.gru", feat, MASK_HIDDEN, &mut rng)?;
        let mask_out = Linear::new(store, "mask.out", MASK_HIDDEN, 1, &mut rng)?;
        store.value_mut(mask_out.bias_index()).data_mut()[0] = T::of(MASK_BIAS_INIT);
        let head_conv = Conv1d::new(store, "head.conv", feat, HEAD_CHANNELS, HEAD_KERNEL, 1, &mut rng)?;
        let head_out = Linear::new(store, "head.out", HEAD_CHANNELS, NUM_EMOTIONS, &mut rng)?;
        Ok(Self { extractor, gru, mask_out, head_conv, head_out })
    }

    /// Features `[C, T]` from a prepared waveform.
    pub fn features<T: Real>(&self, g: &mut Graph<T>, store: &ParamStore<T>, input: &PreparedInput) -> Result<Var> {
        let wave = Tensor::new(vec![1, input.padded.len()], input.padded.iter().map(|&s| T::of(s as f64)).collect())?;
        let mut x = g.constant(wave)?;
        for conv in &self.extractor {
            let y = conv.forward(g, store, x)?;
            x = g.relu(y)?;
        }
        Ok(x)
    }

    /// Gated and clamped posterior `[T, 1]` from features `[C, T]`.
    pub fn posterior<T: Real>(&self, g: &mut Graph<T>, store: &ParamStore<T>, features: Var, keep: &[bool]) -> Result<Var> {
        let seq = g.transpose(features)?;
        let h = self.gru.forward(g, store, seq)?;
        let logit = self.mask_out.forward(g, store, h)?;
        let q = g.sigmoid(logit)?;
        let frames = keep.len();
        let gate = g.constant(Tensor::new(vec![frames, 1], keep.iter().map(|&k| if k { T::one() } else { T::zero() }).collect())?)?;
        let floor = g.constant(Tensor::new(
            vec![frames, 1],
            keep.iter().map(|&k| if k { T::zero() } else { T::of(CLAMP) }).collect(),
        )?)?;
        let q = g.mul(q, gate)?;
        let q = g.add(q, floor)?;
        g.clamp(q, CLAMP, 1.0 - CLAMP)
    }

    /// Mask `[T]` drawn from a posterior `[T, 1]`.
    pub fn mask<T: Real>(&self, g: &mut Graph<T>, posterior: Var, mode: &MaskMode) -> Result<Var> {
        let frames = g.shape(posterior)[0];
        let check = |n: usize| {
            if n == frames {
                Ok(())
            } else {
                Err(Error::LengthMismatch { expected: frames, got: n })
            }
        };
        match mode {
            MaskMode::Fixed(m) => {
                check(m.len())?;
                g.constant(Tensor::new(vec![frames], m.iter().map(|&v| T::of(v)).collect())?)
            }
            MaskMode::StraightThrough { temperature, noise } | MaskMode::Relaxed { temperature, noise } => {
                check(noise.len())?;
                let one_minus = g.affine(posterior, -1.0, 1.0)?;
                let lq = g.log(posterior)?;
                let l1q = g.log(one_minus)?;
                let logit = g.sub(lq, l1q)?;
                let n = g.constant(Tensor::new(vec![frames, 1], noise.iter().map(|&v| T::of(v)).collect())?)?;
                let z = g.add(logit, n)?;
                let z = g.scale(z, 1.0 / temperature)?;
                let soft = g.sigmoid(z)?;
                let mask = if matches!(mode, MaskMode::StraightThrough { .. }) {
                    let hard = g.value(soft).data().iter().map(|v| v.round()).collect();
                    g.straight_through(soft, Tensor::new(vec![frames, 1], hard)?)?
                } else {
                    soft
                };
                g.reshape(mask, &[frames])
            }
        }
    }

    /// Salience distribution `[1, 5]` from features `[C, T]` and mask `[T]`.
    pub fn head<T: Real>(&self, g: &mut Graph<T>, store: &ParamStore<T>, features: Var, mask: Var) -> Result<Var> {
        let masked = g.mul(features, mask)?;
        // same-length convolution: pad one zero frame on each side
        let rows = g.transpose(masked)?;
        let channels = g.shape(rows)[1];
        let pad = g.constant(Tensor::zeros(&[HEAD_KERNEL / 2, channels]))?;
        let rows = g.concat(&[pad, rows, pad])?;
        let padded = g.transpose(rows)?;
        let h = self.head_conv.forward(g, store, padded)?;
        let h = g.relu(h)?;
        let pooled = g.maxpool_time(h)?;
        let pooled = g.reshape(pooled, &[1, HEAD_CHANNELS])?;
        let logits = self.head_out.forward(g, store, pooled)?;
        g.softmax(logits)
    }

    pub fn forward<T: Real>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        input: &PreparedInput,
        mode: &MaskMode,
    ) -> Result<SalienceVars> {
        let features = self.features(g, store, input)?;
        let posterior = self.posterior(g, store, features, &input.keep)?;
        let mask = self.mask(g, posterior, mode)?;
        let prediction = self.head(g, store, features, mask)?;
        Ok(SalienceVars { posterior, mask, prediction })
    }
}

/// Handles of the loss and its three terms.
#[derive(Debug, Clone, Copy)]
pub struct LossVars {
    pub total: Var,
    pub l1: Var,
    pub prior_kl: Var,
    pub sparsity: Var,
}

/// `||Y - Y_hat||_1 + lambda_prior KL_prior + lambda_sparse KL_sparse`.
pub fn saliency_loss_graph<T: Real>(
    g: &mut Graph<T>,
    vars: &SalienceVars,
    target: &EmotionDistribution,
    cfg: &SalienceConfig,
) -> Result<LossVars> {
    let y = g.constant(Tensor::new(vec![1, NUM_EMOTIONS], target.probs().iter().map(|&p| T::of(p)).collect())?)?;
    let diff = g.sub(y, vars.prediction)?;
    let diff = g.abs(diff)?;
    let l1 = g.sum(diff)?;
    let prior_kl = prior_kl_chain_graph(g, vars.posterior, &cfg.prior)?;
    let sparsity = sparsity_loss_graph(g, vars.posterior, cfg.sparsity_target)?;
    let a = g.scale(prior_kl, cfg.lambda_prior)?;
    let b = g.scale(sparsity, cfg.lambda_sparse)?;
    let total = g.add(l1, a)?;
    let total = g.add(total, b)?;
    Ok(LossVars { total, l1, prior_kl, sparsity })
}

/// Scalar form of the loss on already-computed quantities.
pub fn saliency_loss(y: &EmotionDistribution, y_hat: &EmotionDistribution, q: &[f64], cfg: &SalienceConfig) -> f64 {
    y.l1_distance(y_hat)
        + cfg.lambda_prior * super::prior::prior_kl_chain(q, &cfg.prior)
        + cfg.lambda_sparse * super::prior::sparsity_loss(q, cfg.sparsity_target)
}

/// Result of [`salience_forward`].
#[derive(Debug, Clone, PartialEq)]
pub struct SalienceOutput {
    pub posterior: Vec<f64>,
    pub mask: Vec<bool>,
    pub prediction: EmotionDistribution,
}

/// Trained network plus weights.
#[derive(Debug, Clone)]
pub struct SalienceModel {
    pub net: SalienceNet,
    pub params: ParamStore<f32>,
}

impl SalienceModel {
    pub fn new(seed: u64) -> Result<Self> {
        let mut params = ParamStore::new();
        let net = SalienceNet::new(&mut params, seed)?;
        Ok(Self { net, params })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let named: Vec<(&str, &Tensor<f32>)> = (0..self.params.len()).map(|i| (self.params.name(i), self.params.value(i))).collect();
        save_tensors(path, &named)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut model = Self::new(0)?;
        let tensors = load_tensors(path)?;
        if tensors.len() != model.params.len() {
            return Err(Error::ModelFormat(format!("expected {} tensors, found {}", model.params.len(), tensors.len())));
        }
        for (name, t) in tensors {
            model.params.set(&name, t)?;
        }
        Ok(model)
    }

    /// Posterior, mask and prediction for one utterance; the mask is a
    /// straight-through sample at `temperature_end` drawn from `seed`.
    pub fn forward(&self, y: &AudioBuffer, cfg: &SalienceConfig, seed: u64) -> Result<SalienceOutput> {
        let input = prepare_input(y, cfg.energy_gate_db)?;
        let mode = MaskMode::StraightThrough {
            temperature: cfg.temperature_end,
            noise: noise_sequence(input.frames(), seed),
        };
        self.run(&input, &mode)
    }

    /// Prediction under an externally supplied mask.
    pub fn predict_with_mask(&self, y: &AudioBuffer, mask: &[bool], cfg: &SalienceConfig) -> Result<EmotionDistribution> {
        let input = prepare_input(y, cfg.energy_gate_db)?;
        let mode = MaskMode::Fixed(mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect());
        Ok(self.run(&input, &mode)?.prediction)
    }

    /// Deterministic scoring: the mask is the posterior thresholded at 0.5.
    pub fn score_thresholded(&self, y: &AudioBuffer, cfg: &SalienceConfig) -> Result<SalienceOutput> {
        let input = prepare_input(y, cfg.energy_gate_db)?;
        let mut g = Graph::new();
        let features = self.net.features(&mut g, &self.params, &input)?;
        let posterior = self.net.posterior(&mut g, &self.params, features, &input.keep)?;
        let q = g.value(posterior).to_f64();
        let mask: Vec<f64> = q.iter().map(|&v| if v > 0.5 { 1.0 } else { 0.0 }).collect();
        let m = self.net.mask(&mut g, posterior, &MaskMode::Fixed(mask))?;
        let prediction = self.net.head(&mut g, &self.params, features, m)?;
        self.collect(&g, SalienceVars { posterior, mask: m, prediction })
    }

    pub fn run(&self, input: &PreparedInput, mode: &MaskMode) -> Result<SalienceOutput> {
        let mut g = Graph::new();
        let vars = self.net.forward(&mut g, &self.params, input, mode)?;
        self.collect(&g, vars)
    }

    fn collect(&self, g: &Graph<f32>, vars: SalienceVars) -> Result<SalienceOutput> {
        let posterior = g.value(vars.posterior).to_f64();
        let mask = g.value(vars.mask).data().iter().map(|&m| m > 0.5).collect();
        let pred = g.value(vars.prediction).to_f64();
        let mut w = [0.0; NUM_EMOTIONS];
        w.copy_from_slice(&pred);
        Ok(SalienceOutput { posterior, mask, prediction: EmotionDistribution::from_weights(w)? })
    }
}

/// One-call form: posterior, sampled mask and prediction.
pub fn salience_forward(model: &SalienceModel, y: &AudioBuffer, cfg: &SalienceConfig, seed: u64) -> Result<SalienceOutput> {
    model.forward(y, cfg, seed)
}

/// Deterministic binary-concrete mask for inspection (no graph).
pub fn sample_mask(posterior: &[f64], temperature: f64, seed: u64) -> Vec<bool> {
    noise_sequence(posterior.len(), seed)
        .iter()
        .zip(posterior)
        .map(|(&n, &q)| binary_concrete(q, temperature, n) >= 0.5)
        .collect()
}

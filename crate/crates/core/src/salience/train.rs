//! Training loop for the salience network.

use std::path::Path;

use rand::seq::SliceRandom;

use super::gumbel::noise_sequence;
use super::model::{prepare_input, saliency_loss_graph, MaskMode, PreparedInput, SalienceConfig, SalienceModel};
use crate::emotion::EmotionDistribution;
use crate::error::{Error, Result};
use crate::grad::{Adam, AdamConfig, Graph};
use crate::seed::SeedStream;
use crate::signal::{read_wav, AudioBuffer, CorpusEntry};

/// An utterance held in memory with its labels.
#[derive(Debug, Clone)]
pub struct LabeledAudio {
    pub id: String,
    pub audio: AudioBuffer,
    pub saliency: EmotionDistribution,
    pub cue_span: Option<(usize, usize)>,
}

/// Reads every manifest entry's audio.
pub fn load_items(entries: &[CorpusEntry]) -> Result<Vec<LabeledAudio>> {
    entries
        .iter()
        .map(|e| {
            Ok(LabeledAudio {
                id: e.id.clone(),
                audio: read_wav(&e.audio_path)?,
                saliency: e.saliency,
                cue_span: e.cue_span,
            })
        })
        .collect()
}

/// Mean loss terms over one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub steps: usize,
    pub temperature: f64,
    pub loss: f64,
    pub l1: f64,
    pub prior_kl: f64,
    pub sparsity: f64,
    /// Mean fraction of frames switched on by the sampled mask.
    pub mask_rate: f64,
}

/// Per-step hook, called after every optimizer update with
/// `(epoch, step_in_epoch, loss)`.
pub type StepHook<'a> = &'a mut dyn FnMut(usize, usize, f64);

/// Adam on the saliency loss, batch size 1, shuffled epochs, temperature
/// annealed linearly over all steps. Writes `salience_epoch_NNN.prsm` per
/// epoch when `checkpoint_dir` is given.
pub fn train_salience(
    items: &[LabeledAudio],
    cfg: &SalienceConfig,
    seed: u64,
    checkpoint_dir: Option<&Path>,
    mut hook: Option<StepHook<'_>>,
) -> Result<(SalienceModel, Vec<EpochLog>)> {
    if items.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    cfg.validate()?;
    let seeds = SeedStream::new(seed).child("salience");
    let mut model = SalienceModel::new(seeds.seed("init"))?;
    let inputs: Vec<PreparedInput> = items.iter().map(|it| prepare_input(&it.audio, cfg.energy_gate_db)).collect::<Result<_>>()?;
    let mut adam = Adam::new(AdamConfig { lr: cfg.learning_rate, ..Default::default() });
    let total = cfg.epochs * items.len();
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut shuffle_rng = seeds.rng("shuffle");
    let mut logs = Vec::with_capacity(cfg.epochs);
    let mut step = 0usize;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut sums = [0.0f64; 5];
        let mut temperature = cfg.temperature_start;
        for (k, &i) in order.iter().enumerate() {
            temperature = cfg.temperature_at(step, total);
            let noise = noise_sequence(inputs[i].frames(), seeds.indexed("gumbel", step as u64));
            let mode = MaskMode::StraightThrough { temperature, noise };
            let mut g = Graph::<f32>::new();
            let vars = model.net.forward(&mut g, &model.params, &inputs[i], &mode)?;
            let ramp = cfg.kl_ramp(step, items.len());
            let step_cfg = SalienceConfig { lambda_prior: cfg.lambda_prior * ramp, lambda_sparse: cfg.lambda_sparse * ramp, ..cfg.clone() };
            let loss = saliency_loss_graph(&mut g, &vars, &items[i].saliency, &step_cfg)?;
            let mut grads = g.backward(loss.total)?.params(&model.params);
            let norm = match cfg.grad_clip {
                Some(c) => grads.clip_global_norm(c),
                None => grads.global_norm(),
            };
            adam.step(&mut model.params, &grads)?;

            let total_loss = g.value(loss.total).item() as f64;
            let mask = g.value(vars.mask).data();
            sums[0] += total_loss;
            sums[1] += g.value(loss.l1).item() as f64;
            sums[2] += g.value(loss.prior_kl).item() as f64;
            sums[3] += g.value(loss.sparsity).item() as f64;
            sums[4] += mask.iter().map(|&m| m as f64).sum::<f64>() / mask.len() as f64;
            log::debug!(
                "step {step} item {i} loss {total_loss:.4} l1 {:.4} mask {:.3} grad norm {norm:.3e}",
                g.value(loss.l1).item(),
                mask.iter().map(|&m| m as f64).sum::<f64>() / mask.len() as f64,
            );
            if let Some(h) = hook.as_mut() {
                h(epoch, k, total_loss);
            }
            step += 1;
        }
        let n = items.len() as f64;
        let entry = EpochLog {
            epoch: epoch + 1,
            steps: items.len(),
            temperature,
            loss: sums[0] / n,
            l1: sums[1] / n,
            prior_kl: sums[2] / n,
            sparsity: sums[3] / n,
            mask_rate: sums[4] / n,
        };
        log::info!(
            "epoch {:>3} loss {:.4} l1 {:.4} prior_kl {:.3} sparsity {:.3} mask {:.3} temp {:.3}",
            entry.epoch,
            entry.loss,
            entry.l1,
            entry.prior_kl,
            entry.sparsity,
            entry.mask_rate,
            entry.temperature
        );
        logs.push(entry);
        if let Some(dir) = checkpoint_dir {
            std::fs::create_dir_all(dir)?;
            model.save(dir.join(format!("salience_epoch_{:03}.prsm", epoch + 1)))?;
        }
    }
    Ok((model, logs))
}

/// Writes the per-epoch log as CSV.
pub fn write_training_log(path: impl AsRef<Path>, logs: &[EpochLog]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "steps", "temperature", "loss", "l1", "prior_kl", "sparsity", "mask_rate"])?;
    for l in logs {
        w.write_record([
            l.epoch.to_string(),
            l.steps.to_string(),
            format!("{:.6}", l.temperature),
            format!("{:.6}", l.loss),
            format!("{:.6}", l.l1),
            format!("{:.6}", l.prior_kl),
            format!("{:.6}", l.sparsity),
            format!("{:.6}", l.mask_rate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

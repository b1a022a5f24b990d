//! Recognition metrics and salience evaluation.

use std::path::Path;

use super::mask::{mask_segments, span_iou};
use super::model::{SalienceConfig, SalienceModel};
use super::train::LabeledAudio;
use crate::emotion::{Emotion, EmotionDistribution, NUM_EMOTIONS};
use crate::error::{Error, Result};
use crate::seed::SeedStream;

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub count: usize,
    pub top1: f64,
    pub top2: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    /// Row = true class, column = predicted class.
    pub confusion: [[usize; NUM_EMOTIONS]; NUM_EMOTIONS],
}

/// Top-k accuracy and F1 over argmax labels. Argmax ties go to the lowest
/// class index. Classes absent from both truth and predictions are left
/// out of the F1 averages.
pub fn classification_metrics(truth: &[EmotionDistribution], pred: &[EmotionDistribution]) -> Result<Metrics> {
    if truth.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if truth.len() != pred.len() {
        return Err(Error::LengthMismatch { expected: truth.len(), got: pred.len() });
    }
    let mut confusion = [[0usize; NUM_EMOTIONS]; NUM_EMOTIONS];
    let mut top2 = 0usize;
    for (y, p) in truth.iter().zip(pred) {
        let t = y.argmax().index();
        let ranking = p.ranking();
        confusion[t][ranking[0]] += 1;
        if ranking[..2].contains(&t) {
            top2 += 1;
        }
    }
    let n = truth.len();
    let correct: usize = (0..NUM_EMOTIONS).map(|c| confusion[c][c]).sum();
    let mut f1_sum = 0.0;
    let mut weighted = 0.0;
    let mut present = 0usize;
    for c in 0..NUM_EMOTIONS {
        let tp = confusion[c][c] as f64;
        let support: usize = confusion[c].iter().sum();
        let predicted: usize = (0..NUM_EMOTIONS).map(|r| confusion[r][c]).sum();
        if support == 0 && predicted == 0 {
            continue;
        }
        present += 1;
        let precision = if predicted > 0 { tp / predicted as f64 } else { 0.0 };
        let recall = if support > 0 { tp / support as f64 } else { 0.0 };
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        f1_sum += f1;
        weighted += f1 * support as f64;
    }
    Ok(Metrics {
        count: n,
        top1: correct as f64 / n as f64,
        top2: top2 as f64 / n as f64,
        macro_f1: f1_sum / present as f64,
        weighted_f1: weighted / n as f64,
        confusion,
    })
}

/// Median of a nonempty slice (mean of the middle pair for even length).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

#[derive(Debug, Clone)]
pub struct ItemEval {
    pub id: String,
    pub truth: EmotionDistribution,
    pub prediction: EmotionDistribution,
    pub segments: Vec<(usize, usize)>,
    /// IoU against the planted cue, when the item has one.
    pub iou: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub metrics: Metrics,
    /// Median IoU over items with a cue span.
    pub median_iou: Option<f64>,
    pub items: Vec<ItemEval>,
}

/// Evaluates with masks sampled from a fixed evaluation stream.
pub fn eval_salience(model: &SalienceModel, items: &[LabeledAudio], cfg: &SalienceConfig, seed: u64) -> Result<EvalReport> {
    if items.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let seeds = SeedStream::new(seed).child("eval");
    let mut evals = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let out = model.forward(&item.audio, cfg, seeds.indexed("gumbel", i as u64))?;
        let segments = mask_segments(&out.mask, item.audio.len());
        let iou = item.cue_span.map(|cue| span_iou(&segments, cue));
        evals.push(ItemEval { id: item.id.clone(), truth: item.saliency, prediction: out.prediction, segments, iou });
    }
    let truth: Vec<_> = evals.iter().map(|e| e.truth).collect();
    let pred: Vec<_> = evals.iter().map(|e| e.prediction).collect();
    let metrics = classification_metrics(&truth, &pred)?;
    let ious: Vec<f64> = evals.iter().filter_map(|e| e.iou).collect();
    Ok(EvalReport { metrics, median_iou: median(&ious), items: evals })
}

/// `metric,value` rows.
pub fn write_metrics_csv(path: impl AsRef<Path>, rows: &[(String, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["metric", "value"])?;
    for (k, v) in rows {
        w.write_record([k.as_str(), &format!("{v:.6}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Confusion matrix with a header row of predicted classes; row = truth.
pub fn write_confusion_csv(path: impl AsRef<Path>, confusion: &[[usize; NUM_EMOTIONS]; NUM_EMOTIONS]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["truth".to_string()];
    header.extend(Emotion::ALL.iter().map(|e| e.name().to_string()));
    w.write_record(&header)?;
    for (e, row) in Emotion::ALL.iter().zip(confusion) {
        let mut rec = vec![e.name().to_string()];
        rec.extend(row.iter().map(|c| c.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

impl EvalReport {
    pub fn metric_rows(&self) -> Vec<(String, f64)> {
        let m = &self.metrics;
        let mut rows = vec![
            ("count".to_string(), m.count as f64),
            ("top1_accuracy".to_string(), m.top1),
            ("top2_accuracy".to_string(), m.top2),
            ("macro_f1".to_string(), m.macro_f1),
            ("weighted_f1".to_string(), m.weighted_f1),
        ];
        if let Some(iou) = self.median_iou {
            rows.push(("median_iou".to_string(), iou));
        }
        rows
    }
}

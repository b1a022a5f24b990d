//! Emotional salience prediction with a Markov-regularized binary mask.

mod gumbel;
mod mask;
mod metrics;
mod model;
mod prior;
mod train;

pub use gumbel::{binary_concrete, gumbel_softmax_sample, logistic_noise, noise_sequence};
pub use mask::{clip_spans, energy_gate, energy_keep, extract_segments, mask_runs, mask_segments, span_iou};
pub use metrics::{
    classification_metrics, eval_salience, median, write_confusion_csv, write_metrics_csv, EvalReport, ItemEval, Metrics,
};
pub use model::{
    frame_count, prepare_input, saliency_loss, saliency_loss_graph, salience_forward, sample_mask, LossVars, MaskMode,
    PreparedInput, SalienceConfig, SalienceModel, SalienceNet, SalienceOutput, SalienceVars, FRAME_HOP, LEFT_PAD,
    RECEPTIVE_FIELD,
};
pub use prior::{
    clamp_prob, kl_bernoulli, kl_bernoulli_graph, prior_kl_bruteforce, prior_kl_chain, prior_kl_chain_graph,
    sparsity_loss, sparsity_loss_graph, MarkovPrior, BRUTEFORCE_MAX_LEN, CLAMP,
};
pub use train::{load_items, train_salience, write_training_log, EpochLog, LabeledAudio, StepHook};

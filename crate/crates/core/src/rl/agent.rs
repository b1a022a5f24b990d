//! Reward, actor-critic update, training loop and conversion.

use std::collections::VecDeque;
use std::path::Path;

use rand::Rng as _;

use super::grid::{Action, ActionGrid};
use super::policy::{greedy_action, read_output, sample_action, Agent, AgentState, PolicyOutput, PolicyVars};
use crate::dsp::{apply_edits, SegmentEdit, WsolaParams};
use crate::emotion::{Emotion, EmotionDistribution, NUM_EMOTIONS};
use crate::error::{Error, Result};
use crate::grad::{Adam, AdamConfig, Graph, Tensor, Var};
use crate::salience::{mask_segments, LabeledAudio, SalienceConfig, SalienceModel};
use crate::seed::{rng_from, SeedStream};
use crate::signal::AudioBuffer;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub entropy_coef: f64,
    /// Window for the logged moving-average reward.
    pub reward_window: usize,
    pub grid: ActionGrid,
    pub wsola: WsolaParams,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            steps: 5000,
            learning_rate: 1e-3,
            entropy_coef: 0.01,
            reward_window: 200,
            grid: ActionGrid::default(),
            wsola: WsolaParams::default(),
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.entropy_coef < 0.0 || self.reward_window == 0 {
            return Err(Error::Config("agent learning rate, entropy weight or reward window out of range".into()));
        }
        self.grid.validate()?;
        self.wsola.validate()
    }
}

/// Increase of the target score from `original` to `modified`, both scored
/// with the thresholded mask.
pub fn compute_reward(
    salience: &SalienceModel,
    cfg: &SalienceConfig,
    original: &AudioBuffer,
    modified: &AudioBuffer,
    target: Emotion,
) -> Result<f64> {
    let before = salience.score_thresholded(original, cfg)?.prediction.get(target);
    let after = salience.score_thresholded(modified, cfg)?.prediction.get(target);
    Ok(after - before)
}

/// Losses and critic value from one update, measured before the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub value: f64,
    pub entropy: f64,
}

/// Combined loss on an already-built policy graph. The advantage enters as
/// a constant so the actor term sends no gradient into the critic.
fn update_loss(
    g: &mut Graph<f32>,
    vars: &PolicyVars,
    action: Action,
    reward: f64,
    entropy_coef: f64,
) -> Result<(Var, UpdateStats)> {
    let value = g.value(vars.value).item() as f64;
    let advantage = reward - value;
    let mut log_pi = None;
    let mut neg_h = None;
    for (lp, idx) in vars.log_probs.into_iter().zip(action.indices()) {
        let n = g.shape(lp)[1];
        let mut pick = vec![0.0f32; n];
        pick[idx] = 1.0;
        let pick = g.constant(Tensor::new(vec![1, n], pick)?)?;
        let chosen = g.mul(lp, pick)?;
        let chosen = g.sum(chosen)?;
        let p = g.softmax(lp)?;
        let plogp = g.mul(p, lp)?;
        let plogp = g.sum(plogp)?;
        log_pi = Some(match log_pi {
            Some(acc) => g.add(acc, chosen)?,
            None => chosen,
        });
        neg_h = Some(match neg_h {
            Some(acc) => g.add(acc, plogp)?,
            None => plogp,
        });
    }
    let (Some(log_pi), Some(neg_h)) = (log_pi, neg_h) else { unreachable!("three heads") };
    let actor = g.scale(log_pi, -advantage)?;
    let bonus = g.scale(neg_h, entropy_coef)?;
    let actor = g.add(actor, bonus)?;
    let err = g.affine(vars.value, -1.0, reward)?;
    let sq = g.mul(err, err)?;
    let critic = g.sum(sq)?;
    let total = g.add(actor, critic)?;
    let stats = UpdateStats {
        actor_loss: g.value(actor).item() as f64,
        critic_loss: g.value(critic).item() as f64,
        value,
        entropy: -(g.value(neg_h).item() as f64),
    };
    Ok((total, stats))
}

/// Backward pass and Adam step for a policy graph already holding `vars`.
fn finish_update(
    agent: &mut Agent,
    g: &mut Graph<f32>,
    vars: &PolicyVars,
    action: Action,
    reward: f64,
    entropy_coef: f64,
    optimizer: &mut Adam,
) -> Result<UpdateStats> {
    let (loss, stats) = update_loss(g, vars, action, reward, entropy_coef)?;
    let grads = g.backward(loss)?.params(&agent.params);
    optimizer.step(&mut agent.params, &grads)?;
    Ok(stats)
}

/// One Adam step on `-A * sum log pi(a) - c_H * H + (r - V)^2`.
pub fn actor_critic_update(
    agent: &mut Agent,
    state: &AgentState,
    action: Action,
    reward: f64,
    entropy_coef: f64,
    optimizer: &mut Adam,
) -> Result<UpdateStats> {
    let mut g = Graph::new();
    let vars = agent.net.forward(&mut g, &agent.params, state)?;
    finish_update(agent, &mut g, &vars, action, reward, entropy_coef, optimizer)
}

/// One training step's record.
#[derive(Debug, Clone, PartialEq)]
pub struct StepLog {
    pub step: usize,
    pub item: usize,
    pub target: Emotion,
    pub segment: (usize, usize),
    pub action: Action,
    pub reward: f64,
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub value: f64,
    pub entropy: f64,
    /// Mean reward over the last `reward_window` steps.
    pub reward_avg: f64,
}

#[derive(Debug, Clone)]
pub struct AgentTraining {
    pub agent: Agent,
    pub log: Vec<StepLog>,
    /// Items with no salient segment, never used for training.
    pub skipped: usize,
}

struct Prepared<'a> {
    item: &'a LabeledAudio,
    index: usize,
    segments: Vec<(usize, usize)>,
    before: EmotionDistribution,
}

/// Thresholded-mask segments and scores of a signal.
pub fn salient_segments(
    salience: &SalienceModel,
    cfg: &SalienceConfig,
    y: &AudioBuffer,
) -> Result<(Vec<(usize, usize)>, EmotionDistribution)> {
    let out = salience.score_thresholded(y, cfg)?;
    Ok((mask_segments(&out.mask, y.len()), out.prediction))
}

/// Uniform over the classes other than `exclude`.
pub fn random_target(rng: &mut crate::seed::Rng, exclude: Emotion) -> Emotion {
    let k = rng.gen_range(0..NUM_EMOTIONS - 1);
    let k = if k >= exclude.index() { k + 1 } else { k };
    Emotion::ALL[k]
}

fn edit_for(grid: &ActionGrid, span: (usize, usize), action: Action) -> SegmentEdit {
    let (duration_factor, pitch_factor, gain) = grid.factors(action);
    SegmentEdit { span, duration_factor, pitch_factor, gain }
}

/// Single-step actor-critic training against the frozen salience model.
///
/// Seeds: `SeedStream(seed).child("agent")` gives "init", "item", "target",
/// "segment" and "action" streams.
pub fn train_agent(
    items: &[LabeledAudio],
    salience: &SalienceModel,
    salience_cfg: &SalienceConfig,
    cfg: &AgentConfig,
    seed: u64,
) -> Result<AgentTraining> {
    cfg.validate()?;
    let seeds = SeedStream::new(seed).child("agent");
    let mut agent = Agent::new(cfg.grid.clone(), seeds.seed("init"))?;
    let mut prepared = Vec::new();
    let mut skipped = 0;
    for (index, item) in items.iter().enumerate() {
        let (segments, before) = salient_segments(salience, salience_cfg, &item.audio)?;
        if segments.is_empty() {
            skipped += 1;
        } else {
            prepared.push(Prepared { item, index, segments, before });
        }
    }
    if prepared.is_empty() {
        return Err(Error::NoSegments);
    }
    log::info!("agent training on {} items, {} skipped without segments", prepared.len(), skipped);

    let mut optimizer = Adam::new(AdamConfig { lr: cfg.learning_rate, ..AdamConfig::default() });
    let mut item_rng = seeds.rng("item");
    let mut target_rng = seeds.rng("target");
    let mut segment_rng = seeds.rng("segment");
    let mut action_rng = seeds.rng("action");
    let mut window = VecDeque::with_capacity(cfg.reward_window);
    let mut window_sum = 0.0;
    let mut log = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let p = &prepared[item_rng.gen_range(0..prepared.len())];
        let target = random_target(&mut target_rng, p.item.saliency.argmax());
        let span = p.segments[segment_rng.gen_range(0..p.segments.len())];
        let state = AgentState::new(p.item.audio.clone(), span, target)?;

        let mut g = Graph::new();
        let vars = agent.net.forward(&mut g, &agent.params, &state)?;
        let action = sample_action(&read_output(&g, &vars), &mut action_rng);

        let modified = apply_edits(&state.y, &[edit_for(&agent.grid, span, action)], &cfg.wsola)?;
        let after = salience.score_thresholded(&modified, salience_cfg)?.prediction.get(target);
        let reward = after - p.before.get(target);

        let stats = finish_update(&mut agent, &mut g, &vars, action, reward, cfg.entropy_coef, &mut optimizer)?;

        window.push_back(reward);
        window_sum += reward;
        if window.len() > cfg.reward_window {
            window_sum -= window.pop_front().unwrap_or(0.0);
        }
        let reward_avg = window_sum / window.len() as f64;
        log::debug!(
            "agent step {step} item {} target {} r {reward:.4} avg {reward_avg:.4} V {:.4}",
            p.index,
            target.name(),
            stats.value
        );
        log.push(StepLog {
            step,
            item: p.index,
            target,
            segment: span,
            action,
            reward,
            actor_loss: stats.actor_loss,
            critic_loss: stats.critic_loss,
            value: stats.value,
            entropy: stats.entropy,
            reward_avg,
        });
        if (step + 1) % 500 == 0 {
            log::info!("agent step {} mean reward (last {}) {reward_avg:.4}", step + 1, window.len());
        }
    }
    Ok(AgentTraining { agent, log, skipped })
}

pub fn write_agent_log(path: impl AsRef<Path>, log: &[StepLog]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "step", "item", "target", "segment_start", "segment_end", "alpha", "beta", "gain_index", "reward", "actor_loss",
        "critic_loss", "value", "entropy", "reward_avg",
    ])?;
    for s in log {
        w.write_record([
            s.step.to_string(),
            s.item.to_string(),
            s.target.name().to_string(),
            s.segment.0.to_string(),
            s.segment.1.to_string(),
            s.action.duration.to_string(),
            s.action.pitch.to_string(),
            s.action.gain.to_string(),
            format!("{:.6}", s.reward),
            format!("{:.6}", s.actor_loss),
            format!("{:.6}", s.critic_loss),
            format!("{:.6}", s.value),
            format!("{:.6}", s.entropy),
            format!("{:.6}", s.reward_avg),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// How conversion picks each segment's action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvertMode {
    /// Argmax per head.
    Greedy,
    /// Draw from the policy.
    Sample(u64),
    /// Uniform over the grid, ignoring the policy.
    Random(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentReport {
    pub span: (usize, usize),
    pub action: Action,
    pub duration_factor: f64,
    pub pitch_factor: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConversionReport {
    pub target: Emotion,
    pub segments: Vec<SegmentReport>,
    pub before: EmotionDistribution,
    pub after: EmotionDistribution,
    /// `after[target] - before[target]`.
    pub reward: f64,
    /// No salient segment was found; the output is the input.
    pub no_segments: bool,
}

/// Edits every salient segment with its own action and scores the result.
pub fn convert(
    y: &AudioBuffer,
    target: Emotion,
    agent: &Agent,
    salience: &SalienceModel,
    salience_cfg: &SalienceConfig,
    mode: ConvertMode,
    wsola: &WsolaParams,
) -> Result<(AudioBuffer, ConversionReport)> {
    let (spans, before) = salient_segments(salience, salience_cfg, y)?;
    if spans.is_empty() {
        let report = ConversionReport { target, segments: Vec::new(), before, after: before, reward: 0.0, no_segments: true };
        return Ok((y.clone(), report));
    }
    let mut rng = rng_from(match mode {
        ConvertMode::Sample(s) | ConvertMode::Random(s) => s,
        ConvertMode::Greedy => 0,
    });
    let mut segments = Vec::new();
    for &span in &spans {
        let action = match mode {
            ConvertMode::Random(_) => {
                let [a, b, c] = agent.grid.sizes();
                Action::from_indices([rng.gen_range(0..a), rng.gen_range(0..b), rng.gen_range(0..c)])
            }
            _ => {
                let out: PolicyOutput = agent.policy_forward(&AgentState::new(y.clone(), span, target)?)?;
                if mode == ConvertMode::Greedy {
                    greedy_action(&out)
                } else {
                    sample_action(&out, &mut rng)
                }
            }
        };
        let (duration_factor, pitch_factor, gain) = agent.grid.factors(action);
        segments.push(SegmentReport { span, action, duration_factor, pitch_factor, gain });
    }
    let edits: Vec<SegmentEdit> = segments.iter().map(|s| edit_for(&agent.grid, s.span, s.action)).collect();
    let out = apply_edits(y, &edits, wsola)?;
    let after = salience.score_thresholded(&out, salience_cfg)?.prediction;
    let reward = after.get(target) - before.get(target);
    Ok((out, ConversionReport { target, segments, before, after, reward, no_segments: false }))
}

/// One utterance of a conversion study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConversionRow {
    pub id: String,
    pub target: Emotion,
    pub before: f64,
    pub after: f64,
    pub change: f64,
    pub segments: usize,
}

/// Which actions a conversion study applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyPolicy {
    Greedy,
    /// Uniform random grid actions, the no-learning baseline.
    Random,
}

/// Converts every item toward a target drawn uniformly from the classes
/// other than its current prediction. Targets come from
/// `SeedStream(seed).child("convert")` and do not depend on `policy`, so
/// studies with the same seed share their targets.
pub fn conversion_study(
    items: &[LabeledAudio],
    agent: &Agent,
    salience: &SalienceModel,
    salience_cfg: &SalienceConfig,
    wsola: &WsolaParams,
    policy: StudyPolicy,
    seed: u64,
) -> Result<Vec<ConversionRow>> {
    let seeds = SeedStream::new(seed).child("convert");
    let mut target_rng = seeds.rng("target");
    let mut rows = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let current = salience.score_thresholded(&item.audio, salience_cfg)?.prediction.argmax();
        let target = random_target(&mut target_rng, current);
        let mode = match policy {
            StudyPolicy::Greedy => ConvertMode::Greedy,
            StudyPolicy::Random => ConvertMode::Random(seeds.indexed("random", i as u64)),
        };
        let (_, report) = convert(&item.audio, target, agent, salience, salience_cfg, mode, wsola)?;
        rows.push(ConversionRow {
            id: item.id.clone(),
            target,
            before: report.before.get(target),
            after: report.after.get(target),
            change: report.reward,
            segments: report.segments.len(),
        });
    }
    Ok(rows)
}

/// Mean target-score change over a study.
pub fn mean_change(rows: &[ConversionRow]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    rows.iter().map(|r| r.change).sum::<f64>() / rows.len() as f64
}

pub fn write_score_changes(path: impl AsRef<Path>, rows: &[ConversionRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["id", "target", "before", "after", "change", "segments"])?;
    for r in rows {
        w.write_record([
            r.id.clone(),
            r.target.name().to_string(),
            format!("{:.6}", r.before),
            format!("{:.6}", r.after),
            format!("{:.6}", r.change),
            r.segments.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

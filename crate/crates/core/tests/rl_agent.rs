use prosody_core::dsp::WsolaParams;
use prosody_core::grad::{Adam, AdamConfig};
use prosody_core::rl::{
    actor_critic_update, compute_reward, convert, train_agent, Action, ActionGrid, Agent, AgentConfig, AgentState,
    ConvertMode,
};
use prosody_core::salience::{load_items, LabeledAudio, SalienceConfig, SalienceModel};
use prosody_core::signal::{gen_corpus, gen_synthetic_utterance, read_manifest, AudioBuffer, SyntheticSpec};
use prosody_core::{Emotion, Error};

fn state() -> AgentState {
    let u = gen_synthetic_utterance(&SyntheticSpec::default(), 1, 4).unwrap();
    AgentState::new(u.audio, u.cue_span, Emotion::Happy).unwrap()
}

fn corpus(per_class: usize) -> (tempfile::TempDir, Vec<LabeledAudio>) {
    let dir = tempfile::tempdir().unwrap();
    let manifest = gen_corpus(&SyntheticSpec::default(), per_class, dir.path(), 2).unwrap();
    let items = load_items(&read_manifest(&manifest).unwrap()).unwrap();
    (dir, items)
}

fn adam(lr: f64) -> Adam {
    Adam::new(AdamConfig { lr, ..Default::default() })
}

#[test]
fn zero_advantage_without_entropy_leaves_weights() {
    let mut agent = Agent::new(ActionGrid::default(), 1).unwrap();
    let s = state();
    let v = agent.policy_forward(&s).unwrap().value;
    let before = agent.params.clone();
    // r = V exactly: zero advantage and zero critic error
    let stats = actor_critic_update(&mut agent, &s, Action::from_indices([3, 4, 5]), v, 0.0, &mut adam(1e-2)).unwrap();
    assert!(stats.critic_loss < 1e-12);
    for i in 0..before.len() {
        assert_eq!(before.value(i), agent.params.value(i), "{}", before.name(i));
    }
}

#[test]
fn positive_advantage_raises_taken_action() {
    let mut agent = Agent::new(ActionGrid::default(), 2).unwrap();
    let s = state();
    let action = Action::from_indices([7, 2, 9]);
    let before = agent.policy_forward(&s).unwrap();
    let log_pi = |p: &prosody_core::rl::PolicyOutput| -> f64 {
        action.indices().iter().enumerate().map(|(h, &i)| p.probs[h][i].ln()).sum()
    };
    actor_critic_update(&mut agent, &s, action, before.value + 1.0, 0.0, &mut adam(1e-4)).unwrap();
    let after = agent.policy_forward(&s).unwrap();
    assert!(log_pi(&after) > log_pi(&before), "{} -> {}", log_pi(&before), log_pi(&after));
}

#[test]
fn critic_regresses_to_fixed_reward() {
    let mut agent = Agent::new(ActionGrid::default(), 3).unwrap();
    let s = state();
    let mut opt = adam(1e-3);
    for _ in 0..300 {
        actor_critic_update(&mut agent, &s, Action::from_indices([5, 5, 5]), 0.37, 0.01, &mut opt).unwrap();
    }
    let v = agent.policy_forward(&s).unwrap().value;
    assert!((v - 0.37).abs() < 1e-2, "V = {v}");
}

#[test]
fn reward_is_score_difference() {
    let model = SalienceModel::new(5).unwrap();
    let cfg = SalienceConfig::default();
    let s = state();
    assert_eq!(compute_reward(&model, &cfg, &s.y, &s.y, Emotion::Sad).unwrap(), 0.0);
    let quiet = AudioBuffer::new(s.y.samples.iter().map(|v| v * 0.3).collect(), s.y.sample_rate).unwrap();
    let r = compute_reward(&model, &cfg, &s.y, &quiet, Emotion::Sad).unwrap();
    let want = model.score_thresholded(&quiet, &cfg).unwrap().prediction.get(Emotion::Sad)
        - model.score_thresholded(&s.y, &cfg).unwrap().prediction.get(Emotion::Sad);
    assert_eq!(r, want);
    assert!((-1.0..=1.0).contains(&r));
}

#[test]
fn identity_grid_earns_no_reward() {
    let (_dir, items) = corpus(2);
    let model = SalienceModel::new(6).unwrap();
    let cfg = AgentConfig { steps: 40, grid: ActionGrid::identity(), ..Default::default() };
    let run = train_agent(&items, &model, &SalienceConfig::default(), &cfg, 6).unwrap();
    assert_eq!(run.log.len(), 40);
    for s in &run.log {
        assert!(s.reward.abs() <= 0.02, "step {} reward {}", s.step, s.reward);
    }
}

#[test]
fn training_log_repeats_with_seed() {
    let (_dir, items) = corpus(1);
    let model = SalienceModel::new(7).unwrap();
    let cfg = AgentConfig { steps: 12, ..Default::default() };
    let a = train_agent(&items, &model, &SalienceConfig::default(), &cfg, 9).unwrap();
    let b = train_agent(&items, &model, &SalienceConfig::default(), &cfg, 9).unwrap();
    assert_eq!(a.log, b.log);
    let c = train_agent(&items, &model, &SalienceConfig::default(), &cfg, 10).unwrap();
    assert_ne!(a.log, c.log);
}

#[test]
fn duration_only_grid_pins_pitch_and_gain() {
    let (_dir, items) = corpus(1);
    let model = SalienceModel::new(8).unwrap();
    let cfg = AgentConfig { steps: 10, grid: ActionGrid::duration_only(), ..Default::default() };
    let run = train_agent(&items, &model, &SalienceConfig::default(), &cfg, 1).unwrap();
    for s in &run.log {
        assert_eq!(run.agent.grid.factors(s.action).1, 1.0);
        assert_eq!(run.agent.grid.factors(s.action).2, 1.0);
    }
}

#[test]
fn convert_is_deterministic_and_on_grid() {
    let agent = Agent::new(ActionGrid::default(), 4).unwrap();
    let model = SalienceModel::new(4).unwrap();
    let cfg = SalienceConfig::default();
    let y = state().y;
    let wsola = WsolaParams::default();
    let (z1, r1) = convert(&y, Emotion::Angry, &agent, &model, &cfg, ConvertMode::Greedy, &wsola).unwrap();
    let (z2, r2) = convert(&y, Emotion::Angry, &agent, &model, &cfg, ConvertMode::Greedy, &wsola).unwrap();
    assert_eq!(z1, z2);
    assert_eq!(r1, r2);
    assert!(!r1.no_segments);
    let grid = ActionGrid::default();
    let mut covered = 0usize;
    let mut stretched = 0.0;
    for s in &r1.segments {
        assert!(grid.duration.contains(&s.duration_factor));
        assert!(grid.pitch.contains(&s.pitch_factor));
        assert!(grid.gain.contains(&s.gain));
        covered += s.span.1 - s.span.0;
        stretched += (s.span.1 - s.span.0) as f64 * s.duration_factor;
    }
    // duration ratio bounded by the grid over the edited coverage
    let expected = (y.len() - covered) as f64 + stretched;
    assert!((z1.len() as f64 - expected).abs() <= (wsola.window_len * r1.segments.len()) as f64);
    let ratio = z1.len() as f64 / y.len() as f64;
    assert!((0.25..=1.9).contains(&ratio));
    assert!((r1.reward - (r1.after.get(Emotion::Angry) - r1.before.get(Emotion::Angry))).abs() < 1e-12);
}

#[test]
fn silent_input_has_no_segments() {
    let agent = Agent::new(ActionGrid::default(), 4).unwrap();
    let model = SalienceModel::new(4).unwrap();
    let y = AudioBuffer::new(vec![0.0; 16_000], 16_000).unwrap();
    let (z, report) =
        convert(&y, Emotion::Sad, &agent, &model, &SalienceConfig::default(), ConvertMode::Greedy, &WsolaParams::default())
            .unwrap();
    assert!(report.no_segments);
    assert_eq!(z, y);
    assert_eq!(report.reward, 0.0);
}

#[test]
fn corpus_without_segments_is_an_error() {
    let model = SalienceModel::new(4).unwrap();
    let silent = LabeledAudio {
        id: "s".into(),
        audio: AudioBuffer::new(vec![0.0; 16_000], 16_000).unwrap(),
        saliency: prosody_core::EmotionDistribution::one_hot(Emotion::Neutral),
        cue_span: None,
    };
    let err = train_agent(&[silent], &model, &SalienceConfig::default(), &AgentConfig::default(), 0).unwrap_err();
    assert!(matches!(err, Error::NoSegments));
}

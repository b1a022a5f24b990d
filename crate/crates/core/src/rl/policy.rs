//! Policy/critic network over (waveform, segment mask, target code).

use std::path::Path;

use rand::Rng as _;

use super::grid::{Action, ActionGrid};
use crate::emotion::{Emotion, NUM_EMOTIONS};
use crate::error::{Error, Result};
use crate::grad::nn::{Conv1d, Linear, SelfAttention};
use crate::grad::{load_tensors, save_tensors, Graph, ParamStore, Real, Tensor, Var};
use crate::salience::{frame_count, FRAME_HOP, LEFT_PAD, RECEPTIVE_FIELD};
use crate::seed::{rng_from, Rng};
use crate::signal::AudioBuffer;

const CHANNELS: [usize; 5] = [2, 16, 16, 32, 32];
const STRIDES: [usize; 4] = [4, 4, 4, 5];
const KERNEL: usize = 8;
const HIDDEN: usize = 64;
const GRID_NAMES: [&str; 3] = ["grid.duration", "grid.pitch", "grid.gain"];

/// Utterance, the one segment being edited, and the target emotion.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub y: AudioBuffer,
    /// Sample span `[start, end)` of the selected segment.
    pub segment: (usize, usize),
    pub target: Emotion,
}

impl AgentState {
    pub fn new(y: AudioBuffer, segment: (usize, usize), target: Emotion) -> Result<Self> {
        if segment.0 >= segment.1 || segment.1 > y.len() {
            return Err(Error::SpanOutOfBounds { start: segment.0, end: segment.1, len: y.len() });
        }
        Ok(Self { y, segment, target })
    }

    /// Per-sample indicator of the segment.
    pub fn mask(&self) -> Vec<f32> {
        (0..self.y.len()).map(|i| if i >= self.segment.0 && i < self.segment.1 { 1.0 } else { 0.0 }).collect()
    }
}

/// Graph handles for one policy evaluation.
#[derive(Debug, Clone, Copy)]
pub struct PolicyVars {
    /// Log-probabilities `[1, n]` per head: duration, pitch, gain.
    pub log_probs: [Var; 3],
    /// Critic value `[1, 1]`.
    pub value: Var,
}

/// Probabilities per head and the critic value.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    pub probs: [Vec<f64>; 3],
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct PolicyNet {
    convs: Vec<Conv1d>,
    attention: SelfAttention,
    hidden: Linear,
    heads: [Linear; 3],
    critic: Linear,
}

impl PolicyNet {
    pub fn new<T: Real>(store: &mut ParamStore<T>, grid: &ActionGrid, seed: u64) -> Result<Self> {
        let mut rng = rng_from(seed);
        let mut convs = Vec::new();
        for (i, &stride) in STRIDES.iter().enumerate() {
            convs.push(Conv1d::new(store, &format!("policy.conv.{i}"), CHANNELS[i], CHANNELS[i + 1], KERNEL, stride, &mut rng)?);
        }
        let d = CHANNELS[4];
        let attention = SelfAttention::new(store, "policy.attention", d, &mut rng)?;
        let hidden = Linear::new(store, "policy.hidden", d + NUM_EMOTIONS, HIDDEN, &mut rng)?;
        let [nd, np, ng] = grid.sizes();
        let heads = [
            Linear::new(store, "policy.head.duration", HIDDEN, nd, &mut rng)?,
            Linear::new(store, "policy.head.pitch", HIDDEN, np, &mut rng)?,
            Linear::new(store, "policy.head.gain", HIDDEN, ng, &mut rng)?,
        ];
        let critic = Linear::new(store, "policy.critic", HIDDEN, 1, &mut rng)?;
        Ok(Self { convs, attention, hidden, heads, critic })
    }

    pub fn forward<T: Real>(&self, g: &mut Graph<T>, store: &ParamStore<T>, state: &AgentState) -> Result<PolicyVars> {
        let n = state.y.len();
        if n < RECEPTIVE_FIELD {
            return Err(Error::SignalTooShort { len: n, needed: RECEPTIVE_FIELD });
        }
        let frames = frame_count(n);
        let width = FRAME_HOP * frames + RECEPTIVE_FIELD - FRAME_HOP;
        let mut x = vec![T::zero(); 2 * width];
        let mask = state.mask();
        for i in 0..n {
            x[LEFT_PAD + i] = T::of(state.y.samples[i] as f64);
            x[width + LEFT_PAD + i] = T::of(mask[i] as f64);
        }
        let mut h = g.constant(Tensor::new(vec![2, width], x)?)?;
        for conv in &self.convs {
            let c = conv.forward(g, store, h)?;
            h = g.relu(c)?;
        }
        let seq = g.transpose(h)?;
        let seq = self.attention.forward(g, store, seq)?;
        let chans = g.transpose(seq)?;
        let pooled = g.maxpool_time(chans)?;
        let code = g.constant(Tensor::new(vec![NUM_EMOTIONS], state.target.one_hot().iter().map(|&v| T::of(v)).collect())?)?;
        let joined = g.concat(&[pooled, code])?;
        let joined = g.reshape(joined, &[1, CHANNELS[4] + NUM_EMOTIONS])?;
        let hid = self.hidden.forward(g, store, joined)?;
        let hid = g.relu(hid)?;
        let mut log_probs = [hid; 3];
        for (k, head) in self.heads.iter().enumerate() {
            let logits = head.forward(g, store, hid)?;
            log_probs[k] = g.log_softmax(logits)?;
        }
        let value = self.critic.forward(g, store, hid)?;
        Ok(PolicyVars { log_probs, value })
    }
}

/// Trained policy with its grid.
#[derive(Debug, Clone)]
pub struct Agent {
    pub net: PolicyNet,
    pub params: ParamStore<f32>,
    pub grid: ActionGrid,
}

impl Agent {
    pub fn new(grid: ActionGrid, seed: u64) -> Result<Self> {
        grid.validate()?;
        let mut params = ParamStore::new();
        let net = PolicyNet::new(&mut params, &grid, seed)?;
        Ok(Self { net, params, grid })
    }

    /// Weights plus the grid, stored as `grid.duration`, `grid.pitch`, `grid.gain`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let grids: Vec<(String, Tensor<f32>)> = GRID_NAMES
            .iter()
            .zip([&self.grid.duration, &self.grid.pitch, &self.grid.gain])
            .map(|(n, g)| (n.to_string(), Tensor::vector(g.iter().map(|&v| v as f32).collect())))
            .collect();
        let mut named: Vec<(&str, &Tensor<f32>)> = grids.iter().map(|(n, t)| (n.as_str(), t)).collect();
        named.extend((0..self.params.len()).map(|i| (self.params.name(i), self.params.value(i))));
        save_tensors(path, &named)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut tensors = load_tensors(path)?;
        let mut grid = Vec::new();
        for name in GRID_NAMES {
            let i = tensors
                .iter()
                .position(|(n, _)| n == name)
                .ok_or_else(|| Error::ModelFormat(format!("missing {name}")))?;
            // stored as f32; snap back to the decimal grid values
            let values = tensors.remove(i).1.data().iter().map(|&v| (v as f64 * 1e6).round() / 1e6).collect();
            grid.push(values);
        }
        let gain = grid.pop().unwrap_or_default();
        let pitch = grid.pop().unwrap_or_default();
        let duration = grid.pop().unwrap_or_default();
        let mut agent = Self::new(ActionGrid { duration, pitch, gain }, 0)?;
        if tensors.len() != agent.params.len() {
            return Err(Error::ModelFormat(format!("expected {} tensors, found {}", agent.params.len(), tensors.len())));
        }
        for (name, t) in tensors {
            agent.params.set(&name, t)?;
        }
        Ok(agent)
    }

    pub fn policy_forward(&self, state: &AgentState) -> Result<PolicyOutput> {
        let mut g = Graph::new();
        let vars = self.net.forward(&mut g, &self.params, state)?;
        Ok(read_output(&g, &vars))
    }
}

pub fn read_output<T: Real>(g: &Graph<T>, vars: &PolicyVars) -> PolicyOutput {
    let probs = vars.log_probs.map(|lp| g.value(lp).data().iter().map(|v| v.f64().exp()).collect());
    PolicyOutput { probs, value: g.value(vars.value).item().f64() }
}

/// Inverse-CDF draw from a categorical distribution.
pub fn sample_categorical(probs: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the total; take the last nonzero entry
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Independent draws per head.
pub fn sample_action(out: &PolicyOutput, rng: &mut Rng) -> Action {
    Action::from_indices([
        sample_categorical(&out.probs[0], rng),
        sample_categorical(&out.probs[1], rng),
        sample_categorical(&out.probs[2], rng),
    ])
}

/// Argmax per head, ties to the lowest index.
pub fn greedy_action(out: &PolicyOutput) -> Action {
    let argmax = |p: &[f64]| p.iter().enumerate().fold(0, |b, (i, &v)| if v > p[b] { i } else { b });
    Action::from_indices([argmax(&out.probs[0]), argmax(&out.probs[1]), argmax(&out.probs[2])])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{gen_synthetic_utterance, SyntheticSpec};

    fn state(seed: u64) -> AgentState {
        let u = gen_synthetic_utterance(&SyntheticSpec::default(), 2, seed).unwrap();
        AgentState::new(u.audio, u.cue_span, Emotion::Sad).unwrap()
    }

    #[test]
    fn outputs_are_simplices() {
        let agent = Agent::new(ActionGrid::default(), 3).unwrap();
        let out = agent.policy_forward(&state(1)).unwrap();
        for p in &out.probs {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!(p.iter().all(|&v| v >= 0.0));
        }
        assert!(out.value.is_finite());
        assert_eq!(out.probs[0].len(), 12);
        assert_eq!(agent.policy_forward(&state(1)).unwrap(), out);
    }

    #[test]
    fn audio_outside_segment_matters() {
        let agent = Agent::new(ActionGrid::default(), 3).unwrap();
        let s = state(1);
        let mut t = s.clone();
        for v in &mut t.y.samples[..s.segment.0] {
            *v *= -0.5;
        }
        assert_ne!(agent.policy_forward(&s).unwrap(), agent.policy_forward(&t).unwrap());
    }

    #[test]
    fn sampler_calibration() {
        let mut rng = rng_from(5);
        let p = vec![1.0 / 12.0; 12];
        let n = 100_000;
        let mut counts = [0usize; 12];
        for _ in 0..n {
            counts[sample_categorical(&p, &mut rng)] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 12.0).abs() < 0.01);
        }
        let one_hot = [0.0, 0.0, 1.0, 0.0];
        assert!((0..1000).all(|_| sample_categorical(&one_hot, &mut rng) == 2));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.prsm");
        let agent = Agent::new(ActionGrid::default(), 9).unwrap();
        agent.save(&path).unwrap();
        let back = Agent::load(&path).unwrap();
        assert_eq!(back.grid, agent.grid);
        assert_eq!(agent.policy_forward(&state(2)).unwrap(), back.policy_forward(&state(2)).unwrap());
    }
}

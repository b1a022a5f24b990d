//! Single-step actor-critic agent choosing duration, pitch and gain factors
//! for salient segments, rewarded by the frozen salience model.

mod agent;
mod bandit;
mod grid;
mod policy;

pub use agent::{
    actor_critic_update, compute_reward, conversion_study, convert, mean_change, random_target, salient_segments,
    train_agent, write_agent_log, write_score_changes, AgentConfig, AgentTraining, ConversionReport, ConversionRow,
    ConvertMode, SegmentReport, StepLog, StudyPolicy, UpdateStats,
};
pub use bandit::{bandit_exact_gradient, bandit_sample_gradients, reinforce_bandit_check, train_bandit, BanditReport, BANDIT_REWARDS};
pub use grid::{Action, ActionGrid};
pub use policy::{
    greedy_action, read_output, sample_action, sample_categorical, Agent, AgentState, PolicyNet, PolicyOutput, PolicyVars,
};

//! Trains the salience network and the prosody agent on a synthetic corpus,
//! then compares greedy agent conversions against uniformly random edits on
//! held-out utterances.
//!
//! cargo run --release --example emotion_conversion -- [n_per_class] [epochs] [steps] [seed]

use prosody_core::rl::{conversion_study, mean_change, train_agent, AgentConfig, StudyPolicy};
use prosody_core::salience::{eval_salience, load_items, train_salience, SalienceConfig};
use prosody_core::signal::{gen_corpus, read_manifest, split_holdout, SyntheticSpec};

fn main() -> prosody_core::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: u64| args.get(i).map_or(default, |s| s.parse().expect("integer argument"));
    let (n_per_class, epochs, steps, seed) = (arg(0, 100) as usize, arg(1, 30) as usize, arg(2, 5000) as usize, arg(3, 7));

    let dir = tempfile::tempdir()?;
    let manifest = gen_corpus(&SyntheticSpec::default(), n_per_class, dir.path(), seed)?;
    let (train, test) = split_holdout(&read_manifest(&manifest)?, 0.2, seed);
    let (train, test) = (load_items(&train)?, load_items(&test)?);

    let cfg = SalienceConfig { epochs, ..Default::default() };
    let (salience, _) = train_salience(&train, &cfg, seed, None, None)?;
    let eval = eval_salience(&salience, &test, &cfg, seed)?;
    println!("salience top1 {:.3} median iou {:.3}", eval.metrics.top1, eval.median_iou.unwrap_or(0.0));

    let agent_cfg = AgentConfig { steps, ..Default::default() };
    let run = train_agent(&train, &salience, &cfg, &agent_cfg, seed)?;
    println!("agent: {} steps, {} items skipped", run.log.len(), run.skipped);

    let greedy = conversion_study(&test, &run.agent, &salience, &cfg, &agent_cfg.wsola, StudyPolicy::Greedy, seed)?;
    let random = conversion_study(&test, &run.agent, &salience, &cfg, &agent_cfg.wsola, StudyPolicy::Random, seed)?;
    for r in greedy.iter().take(8) {
        println!("{:<14} -> {:<9} {:.3} -> {:.3}", r.id, r.target.name(), r.before, r.after);
    }
    println!("mean target-score change: greedy {:+.4}, random {:+.4}", mean_change(&greedy), mean_change(&random));
    Ok(())
}

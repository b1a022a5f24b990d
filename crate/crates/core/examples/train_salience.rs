//! Generates a synthetic corpus, trains the salience network and reports
//! held-out metrics.
//!
//! cargo run --release --example train_salience -- [n_per_class] [epochs] [seed]

use prosody_core::salience::{eval_salience, load_items, train_salience, SalienceConfig};
use prosody_core::signal::{gen_corpus, read_manifest, split_holdout, SyntheticSpec};

fn main() -> prosody_core::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n_per_class: usize = args.first().map_or(100, |s| s.parse().expect("n_per_class"));
    let epochs: usize = args.get(1).map_or(30, |s| s.parse().expect("epochs"));
    let seed: u64 = args.get(2).map_or(7, |s| s.parse().expect("seed"));
    let cfg = SalienceConfig { epochs, ..Default::default() };

    let dir = tempfile::tempdir()?;
    let manifest = gen_corpus(&SyntheticSpec::default(), n_per_class, dir.path(), seed)?;
    let (train, test) = split_holdout(&read_manifest(&manifest)?, 0.2, seed);
    let (train, test) = (load_items(&train)?, load_items(&test)?);
    println!("{} training items, {} held out", train.len(), test.len());

    let (model, logs) = train_salience(&train, &cfg, seed, None, None)?;
    for l in &logs {
        println!("epoch {:>2}  loss {:.4}  mask_rate {:.3}", l.epoch, l.loss, l.mask_rate);
    }
    let report = eval_salience(&model, &test, &cfg, seed)?;
    for (k, v) in report.metric_rows() {
        println!("{k:>14}: {v:.4}");
    }
    Ok(())
}

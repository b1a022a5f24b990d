//! The `prosody` command-line front end.
//!
//! Exit codes: 0 on success, 1 on a runtime failure, 2 on bad usage.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::dsp::{cola_deviation, time_stretch, TimeStretchMap, WsolaParams};
use crate::emotion::Emotion;
use crate::error::{Error, Result};
use crate::rl::{
    convert, reinforce_bandit_check, train_agent, write_agent_log, ActionGrid, Agent, AgentConfig, ConversionReport,
    ConvertMode,
};
use crate::salience::{
    eval_salience, load_items, prior_kl_bruteforce, prior_kl_chain, train_salience, write_confusion_csv,
    write_metrics_csv, write_training_log, SalienceConfig, SalienceModel,
};
use crate::seed::SeedStream;
use crate::signal::{gen_corpus, read_manifest, read_wav, split_holdout, write_manifest, write_wav, SyntheticSpec};

#[derive(Parser, Debug)]
#[command(name = "prosody", version, about = "Emotion-targeted prosody modification")]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Hyperparameter override, repeatable: `--set salience.epochs=10`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic labeled corpus and manifest.
    GenCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        per_class: usize,
        /// Also write train/test manifests with this held-out fraction.
        #[arg(long)]
        holdout: Option<f64>,
    },
    /// Train the salience network on a manifest.
    TrainSalience {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Held-out metrics and confusion matrix of a salience model.
    EvalSalience {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the prosody agent against a frozen salience model.
    TrainAgent {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        salience: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert one file, or every manifest entry with `--manifest`.
    Convert {
        #[arg(long = "in", conflicts_with = "manifest", required_unless_present = "manifest")]
        input: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Target emotion; in manifest mode a random class other than the
        /// current prediction when omitted.
        #[arg(long)]
        target: Option<Emotion>,
        #[arg(long)]
        agent: PathBuf,
        #[arg(long)]
        salience: PathBuf,
        /// Output WAV, or output directory in manifest mode.
        #[arg(long)]
        out: PathBuf,
        /// Argmax actions instead of sampling.
        #[arg(long)]
        greedy: bool,
    },
    /// Uniform WSOLA time stretch.
    Stretch {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        factor: f64,
        #[arg(long, default_value_t = 512)]
        window: usize,
        #[arg(long, default_value_t = 128)]
        search: usize,
    },
    /// Bandit suite, COLA check and KL oracle.
    Selfcheck,
}

/// Resolved hyperparameters after `--set` overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub salience: SalienceConfig,
    pub agent: AgentConfig,
    pub grid_name: String,
}

impl Default for Settings {
    fn default() -> Self {
        Self { salience: SalienceConfig::default(), agent: AgentConfig::default(), grid_name: "full".into() }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

impl Settings {
    pub fn apply(&mut self, pair: &str) -> Result<()> {
        let (key, value) = pair.split_once('=').ok_or_else(|| Error::Config(format!("expected KEY=VALUE, got {pair:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let s = &mut self.salience;
        let a = &mut self.agent;
        match key {
            "salience.lambda_prior" => s.lambda_prior = parse_num(key, value)?,
            "salience.lambda_sparse" => s.lambda_sparse = parse_num(key, value)?,
            "salience.sparsity_target" => s.sparsity_target = parse_num(key, value)?,
            "salience.p_stay" => s.prior.p_stay = parse_num(key, value)?,
            "salience.p_init" => s.prior.p_init = parse_num(key, value)?,
            "salience.temperature_start" => s.temperature_start = parse_num(key, value)?,
            "salience.temperature_end" => s.temperature_end = parse_num(key, value)?,
            "salience.energy_gate_db" => s.energy_gate_db = parse_num(key, value)?,
            "salience.epochs" => s.epochs = parse_num(key, value)?,
            "salience.learning_rate" => s.learning_rate = parse_num(key, value)?,
            "salience.kl_warmup_epochs" => s.kl_warmup_epochs = parse_num(key, value)?,
            "salience.grad_clip" => {
                s.grad_clip = if value == "none" { None } else { Some(parse_num(key, value)?) };
            }
            "agent.steps" => a.steps = parse_num(key, value)?,
            "agent.learning_rate" => a.learning_rate = parse_num(key, value)?,
            "agent.entropy_coef" => a.entropy_coef = parse_num(key, value)?,
            "agent.reward_window" => a.reward_window = parse_num(key, value)?,
            "agent.grid" => {
                a.grid = match value {
                    "full" => ActionGrid::default(),
                    "duration-only" => ActionGrid::duration_only(),
                    "identity" => ActionGrid::identity(),
                    _ => return Err(Error::Config(format!("agent.grid must be full, duration-only or identity, got {value:?}"))),
                };
                self.grid_name = value.to_string();
            }
            "wsola.window" => a.wsola = WsolaParams::new(parse_num(key, value)?, a.wsola.search_radius)?,
            "wsola.search" => a.wsola = WsolaParams::new(a.wsola.window_len, parse_num(key, value)?)?,
            _ => return Err(Error::Config(format!("unknown setting {key:?}"))),
        }
        Ok(())
    }

    /// `key=value` lines covering every setting.
    pub fn render(&self, seed: u64) -> String {
        let s = &self.salience;
        let a = &self.agent;
        let mut out = String::new();
        let clip = s.grad_clip.map_or("none".to_string(), |c| c.to_string());
        for (k, v) in [
            ("seed", seed.to_string()),
            ("salience.lambda_prior", s.lambda_prior.to_string()),
            ("salience.lambda_sparse", s.lambda_sparse.to_string()),
            ("salience.sparsity_target", s.sparsity_target.to_string()),
            ("salience.p_stay", s.prior.p_stay.to_string()),
            ("salience.p_init", s.prior.p_init.to_string()),
            ("salience.temperature_start", s.temperature_start.to_string()),
            ("salience.temperature_end", s.temperature_end.to_string()),
            ("salience.energy_gate_db", s.energy_gate_db.to_string()),
            ("salience.epochs", s.epochs.to_string()),
            ("salience.learning_rate", s.learning_rate.to_string()),
            ("salience.kl_warmup_epochs", s.kl_warmup_epochs.to_string()),
            ("salience.grad_clip", clip),
            ("agent.steps", a.steps.to_string()),
            ("agent.learning_rate", a.learning_rate.to_string()),
            ("agent.entropy_coef", a.entropy_coef.to_string()),
            ("agent.reward_window", a.reward_window.to_string()),
            ("agent.grid", self.grid_name.clone()),
            ("wsola.window", a.wsola.window_len.to_string()),
            ("wsola.search", a.wsola.search_radius.to_string()),
        ] {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

const README_COLUMNS: &str = "\
Files in this directory

config.txt          resolved settings, one key=value per line
metrics.csv         metric,value: count, top1_accuracy, top2_accuracy, macro_f1,
                    weighted_f1, median_iou (items with a planted cue only)
confusion.csv       rows = true class, columns = predicted class, counts
training_log.csv    salience: epoch, steps, temperature, loss, l1, prior_kl,
                    sparsity, mask_rate (per-epoch means)
                    agent: step, item, target, segment_start, segment_end,
                    duration/pitch/gain action indices, reward, actor_loss,
                    critic_loss, value, entropy, reward_avg
score_changes.csv   id, target, before, after, change, segments: target-class
                    score before and after conversion
";

fn write_run_files(out: &Path, settings: &Settings, seed: u64) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("config.txt"), settings.render(seed))?;
    fs::write(out.join("README.txt"), README_COLUMNS)?;
    Ok(())
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut settings = Settings::default();
    for pair in &cli.overrides {
        if let Err(e) = settings.apply(pair) {
            eprintln!("error: {e}");
            return 2;
        }
    }
    match dispatch(&cli, &settings) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: &Cli, settings: &Settings) -> Result<i32> {
    let seed = cli.seed;
    match &cli.command {
        Command::GenCorpus { out, per_class, holdout } => {
            let manifest = gen_corpus(&SyntheticSpec::default(), *per_class, out, seed)?;
            println!("wrote {}", manifest.display());
            if let Some(frac) = holdout {
                let (train, test) = split_holdout(&read_manifest(&manifest)?, *frac, seed);
                write_manifest(out.join("train.csv"), &train)?;
                write_manifest(out.join("test.csv"), &test)?;
                println!("{} train, {} test", train.len(), test.len());
            }
        }
        Command::TrainSalience { manifest, out } => {
            let items = load_items(&read_manifest(manifest)?)?;
            write_run_files(out, settings, seed)?;
            let (model, logs) = train_salience(&items, &settings.salience, seed, Some(&out.join("checkpoints")), None)?;
            model.save(out.join("salience.prsm"))?;
            write_training_log(out.join("training_log.csv"), &logs)?;
            if let Some(last) = logs.last() {
                println!("epoch {} loss {:.4} l1 {:.4} mask_rate {:.3}", last.epoch, last.loss, last.l1, last.mask_rate);
            }
        }
        Command::EvalSalience { manifest, model, out } => {
            let items = load_items(&read_manifest(manifest)?)?;
            let model = SalienceModel::load(model)?;
            write_run_files(out, settings, seed)?;
            let report = eval_salience(&model, &items, &settings.salience, seed)?;
            let rows = report.metric_rows();
            write_metrics_csv(out.join("metrics.csv"), &rows)?;
            write_confusion_csv(out.join("confusion.csv"), &report.metrics.confusion)?;
            for (k, v) in rows {
                println!("{k},{v:.6}");
            }
        }
        Command::TrainAgent { manifest, salience, out } => {
            let items = load_items(&read_manifest(manifest)?)?;
            let salience = SalienceModel::load(salience)?;
            write_run_files(out, settings, seed)?;
            let run = train_agent(&items, &salience, &settings.salience, &settings.agent, seed)?;
            run.agent.save(out.join("agent.prsm"))?;
            write_agent_log(out.join("training_log.csv"), &run.log)?;
            let last = run.log.last().map_or(0.0, |s| s.reward_avg);
            println!("{} steps, {} items skipped, final mean reward {last:.4}", run.log.len(), run.skipped);
        }
        Command::Convert { input, manifest, target, agent, salience, out, greedy } => {
            let agent = Agent::load(agent)?;
            let salience = SalienceModel::load(salience)?;
            let seeds = SeedStream::new(seed).child("convert");
            let mode = |i: u64| if *greedy { ConvertMode::Greedy } else { ConvertMode::Sample(seeds.indexed("action", i)) };
            if let Some(input) = input {
                let target = target.ok_or_else(|| Error::Config("--target is required with --in".into()))?;
                let y = read_wav(input)?;
                let (z, report) = convert(&y, target, &agent, &salience, &settings.salience, mode(0), &settings.agent.wsola)?;
                write_wav(out, &z)?;
                print!("{}", render_report(&report));
            } else if let Some(manifest) = manifest {
                convert_manifest(manifest, *target, &agent, &salience, settings, out, &mode, &seeds)?;
            }
        }
        Command::Stretch { input, out, factor, window, search } => {
            let params = WsolaParams::new(*window, *search)?;
            let y = read_wav(input)?;
            let z = time_stretch(&y, &TimeStretchMap::uniform(y.len(), *factor)?, &params)?;
            write_wav(out, &z)?;
            println!("{} -> {} samples", y.len(), z.len());
        }
        Command::Selfcheck => return selfcheck(seed),
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn convert_manifest(
    manifest: &Path,
    target: Option<Emotion>,
    agent: &Agent,
    salience: &SalienceModel,
    settings: &Settings,
    out: &Path,
    mode: &dyn Fn(u64) -> ConvertMode,
    seeds: &SeedStream,
) -> Result<()> {
    let entries = read_manifest(manifest)?;
    write_run_files(out, settings, seeds.master())?;
    let mut w = csv::Writer::from_path(out.join("score_changes.csv"))?;
    w.write_record(["id", "target", "before", "after", "change", "segments"])?;
    let mut target_rng = seeds.rng("target");
    for (i, e) in entries.iter().enumerate() {
        let y = read_wav(&e.audio_path)?;
        let current = salience.score_thresholded(&y, &settings.salience)?.prediction.argmax();
        let t = target.unwrap_or_else(|| crate::rl::random_target(&mut target_rng, current));
        let (z, report) = convert(&y, t, agent, salience, &settings.salience, mode(i as u64), &settings.agent.wsola)?;
        write_wav(out.join(format!("{}.wav", e.id)), &z)?;
        w.write_record([
            e.id.clone(),
            t.name().to_string(),
            format!("{:.6}", report.before.get(t)),
            format!("{:.6}", report.after.get(t)),
            format!("{:.6}", report.reward),
            report.segments.len().to_string(),
        ])?;
    }
    w.flush()?;
    println!("converted {} utterances", entries.len());
    Ok(())
}

/// Segment CSV block followed by before/after score lines.
pub fn render_report(report: &ConversionReport) -> String {
    let mut s = String::from("segment_start,segment_end,alpha,beta,gain\n");
    for seg in &report.segments {
        let _ = writeln!(s, "{},{},{},{},{}", seg.span.0, seg.span.1, seg.duration_factor, seg.pitch_factor, seg.gain);
    }
    if report.no_segments {
        s.push_str("no salient segments; output equals input\n");
    }
    let scores = |d: &crate::emotion::EmotionDistribution| {
        Emotion::ALL.iter().map(|e| format!("{}={:.4}", e.name(), d.get(*e))).collect::<Vec<_>>().join(" ")
    };
    let _ = writeln!(s, "before {}", scores(&report.before));
    let _ = writeln!(s, "after {}", scores(&report.after));
    let _ = writeln!(s, "target {} change {:+.4}", report.target.name(), report.reward);
    s
}

fn selfcheck(seed: u64) -> Result<i32> {
    let mut ok = true;
    let mut line = |name: &str, pass: bool, detail: String| {
        println!("{name}: {} ({detail})", if pass { "pass" } else { "FAIL" });
        ok &= pass;
    };

    let bandit = reinforce_bandit_check(seed)?;
    line("bandit estimator", bandit.estimator_ok(), format!("estimate {:?} exact {:?}", bandit.estimate, bandit.exact));
    line(
        "bandit baseline",
        bandit.baseline_ok(),
        format!("variance {:.4} -> {:.4}", bandit.variance_plain, bandit.variance_baseline),
    );
    line("bandit training", bandit.training_ok(), format!("best arm {:.4}", bandit.best_arm_prob));

    let worst = [64, 256, 512, 1024].into_iter().map(cola_deviation).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
    line("cola", worst <= 1e-6, format!("max deviation {worst:.2e}"));

    let prior = Default::default();
    let mut rng = crate::seed::rng_from(SeedStream::new(seed).seed("kl"));
    let mut err: f64 = 0.0;
    for len in 1..=8 {
        let q: Vec<f64> = (0..len).map(|_| rand::Rng::gen_range(&mut rng, 0.0..1.0)).collect();
        err = err.max((prior_kl_chain(&q, &prior) - prior_kl_bruteforce(&q, &prior)?).abs());
    }
    line("kl oracle", err <= 1e-8, format!("max error {err:.2e}"));
    Ok(if ok { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["prosody"]), 2);
        assert_eq!(run(["prosody", "frobnicate"]), 2);
        assert_eq!(run(["prosody", "--set", "nope=1", "selfcheck"]), 2);
        assert_eq!(run(["prosody", "--help"]), 0);
    }

    #[test]
    fn settings_round_trip() {
        let mut s = Settings::default();
        s.apply("salience.epochs=3").unwrap();
        s.apply("agent.grid=identity").unwrap();
        assert_eq!(s.salience.epochs, 3);
        assert_eq!(s.agent.grid, ActionGrid::identity());
        let text = s.render(9);
        assert!(text.contains("salience.epochs=3\n"));
        assert!(text.contains("agent.grid=identity\n"));
        assert!(s.apply("salience.epochs=x").is_err());
        assert!(s.apply("salience.epochs").is_err());
    }

    #[test]
    fn selfcheck_passes() {
        assert_eq!(run(["prosody", "selfcheck"]), 0);
    }
}

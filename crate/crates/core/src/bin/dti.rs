use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dti_core::data::{SynthConfig, SynthMode};
use dti_core::experiment::{self, ExperimentConfig, CACHE_DIR_ENV};
use dti_core::Error;

/// Drug-target binding affinity experiments.
#[derive(Parser)]
#[command(name = "dti", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Featurize compounds and targets into the feature cache.
    Featurize(ExpArgs),
    /// Write cross-validation fold assignments.
    Split(ExpArgs),
    /// Train one model per (scheme, seed, fold) cell.
    Train(ExpArgs),
    /// Score trained cells and aggregate the metrics.
    Evaluate(ExpArgs),
    /// Generate a synthetic interaction table.
    SynthData(SynthArgs),
}

#[derive(Args)]
struct ExpArgs {
    /// TOML experiment configuration.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set train.lambda=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Input table (data.path).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory (output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Feature cache directory (output.cache_dir).
    #[arg(long, env = CACHE_DIR_ENV)]
    cache_dir: Option<PathBuf>,
    /// Model variant: ecfp_psc, graphconv_psc or ivpgan.
    #[arg(long)]
    variant: Option<String>,
    /// Comma-separated split schemes.
    #[arg(long, value_delimiter = ',')]
    schemes: Vec<String>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Drop records that fail featurization instead of aborting.
    #[arg(long)]
    skip_bad: bool,
    /// Apply the filter threshold once instead of to a fixpoint.
    #[arg(long)]
    single_pass: bool,
    /// Also report unsquared Pearson r (evaluate).
    #[arg(long)]
    report_r: bool,
}

impl ExpArgs {
    fn resolve(&self) -> dti_core::Result<ExperimentConfig> {
        let quote = |p: &PathBuf| format!("{:?}", p.to_string_lossy());
        let mut o = Vec::new();
        if let Some(p) = &self.data {
            o.push(format!("data.path={}", quote(p)));
        }
        if let Some(p) = &self.out {
            o.push(format!("output.dir={}", quote(p)));
        }
        if let Some(p) = &self.cache_dir {
            o.push(format!("output.cache_dir={}", quote(p)));
        }
        if let Some(v) = &self.variant {
            o.push(format!("model.variant={v:?}"));
        }
        if !self.schemes.is_empty() {
            o.push(format!("split.schemes={:?}", self.schemes));
        }
        if !self.seeds.is_empty() {
            o.push(format!("split.seeds={:?}", self.seeds));
        }
        if let Some(l) = self.lambda {
            o.push(format!("train.lambda={l:?}"));
        }
        if let Some(e) = self.epochs {
            o.push(format!("train.epochs={e}"));
        }
        if self.skip_bad {
            o.push("data.skip_bad=true".into());
        }
        if self.single_pass {
            o.push("data.single_pass=true".into());
        }
        if self.report_r {
            o.push("output.report_r=true".into());
        }
        // explicit --set flags apply last
        o.extend(self.overrides.iter().cloned());
        ExperimentConfig::load(self.config.as_deref(), &o)
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Output CSV path.
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, default_value_t = 25)]
    compounds: usize,
    #[arg(long, default_value_t = 20)]
    targets: usize,
    #[arg(long, default_value_t = 500)]
    records: usize,
    /// `latent` (hidden entity effects) or `linear` (function of features).
    #[arg(long, default_value = "latent")]
    mode: String,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 40)]
    min_len: usize,
    #[arg(long, default_value_t = 80)]
    max_len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn run(cli: Cli) -> dti_core::Result<()> {
    match cli.command {
        Command::Featurize(a) => {
            let s = experiment::cmd_featurize(&a.resolve()?)?;
            let f = &s.featurize;
            println!(
                "records kept: {} (filter removed {} compounds, {} targets; {} bad records)",
                f.kept_records,
                s.removal.removed_compounds.len(),
                s.removal.removed_targets.len(),
                f.bad_records.len()
            );
            println!(
                "compounds: {} ({} computed), targets: {} ({} computed), cache {} at {}",
                f.compounds,
                f.computed_compounds,
                f.targets,
                f.computed_targets,
                if f.cache_hit { "hit" } else { "updated" },
                s.cache_dir.display()
            );
        }
        Command::Split(a) => {
            for p in experiment::cmd_split(&a.resolve()?)? {
                println!("{}", p.display());
            }
        }
        Command::Train(a) => {
            let s = experiment::cmd_train(&a.resolve()?)?;
            println!("trained {} cells, {} failed", s.trained.len(), s.failures.len());
            for f in &s.failures {
                println!("failed: {} seed {} fold {}: {}", f.scheme, f.seed, f.fold, f.error);
            }
        }
        Command::Evaluate(a) => {
            let r = experiment::cmd_evaluate(&a.resolve()?)?;
            println!("{:<12} {:<6} {:>10} {:>10}", "split", "metric", "mean", "std");
            for m in &r.reports {
                println!("{:<12} {:<6} {:>10.4} {:>10.4}", m.scheme, m.metric, m.mean, m.std);
            }
        }
        Command::SynthData(a) => {
            let mode = match a.mode.as_str() {
                "latent" => SynthMode::Latent,
                "linear" => SynthMode::Linear,
                other => return Err(Error::Config(format!("unknown synthetic mode {other:?}"))),
            };
            let cfg = SynthConfig {
                n_compounds: a.compounds,
                n_targets: a.targets,
                n_records: a.records,
                mode,
                noise: a.noise,
                min_sequence_len: a.min_len,
                max_sequence_len: a.max_len,
                seed: a.seed,
            };
            let t = experiment::cmd_synth_data(&cfg, &a.out)?;
            println!("wrote {} records to {}", t.len(), a.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_user_error() { 1 } else { 2 })
        }
        Err(_) => ExitCode::from(2),
    }
}

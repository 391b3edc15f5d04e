//! `iml` — benchmark and imbalance-sweep runner.
//!
//! `iml benchmark` reproduces the repeated-split protocol (stratified
//! splits, per-split cross-validated hyperparameter search, 3NN test
//! evaluation) and writes per-split CSVs plus a summary table. `iml sweep`
//! evaluates the same methods on synthetic imbalance variants of each
//! dataset and writes a long-format table for plotting.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use iml_core::harness::{run_benchmark, run_sweep};
use iml_core::{ExperimentConfig, Method, Preprocessing};

#[derive(Parser)]
#[command(name = "iml", version, about = "Imbalance-aware metric learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repeated stratified splits with cross-validated tuning per split.
    Benchmark(RunArgs),
    /// Synthetic imbalance sweep over minority fractions.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Dataset registry JSON.
    #[arg(long)]
    registry: Option<PathBuf>,

    /// Comma-separated dataset names (default: all registry entries).
    #[arg(long, value_delimiter = ',')]
    datasets: Vec<String>,

    /// Comma-separated methods: euclidean, iml, ml2, ml1.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,

    /// Training-split preprocessing: none, smote, or rus.
    #[arg(long)]
    preprocess: Option<String>,

    /// Master seed; every randomized stage derives from it.
    #[arg(long)]
    seed: Option<u64>,

    /// Number of repeated splits.
    #[arg(long)]
    splits: Option<u32>,

    /// Hyperparameter combinations sampled per split.
    #[arg(long)]
    hp_samples: Option<usize>,

    /// Cross-validation folds.
    #[arg(long)]
    folds: Option<usize>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,

    /// Emit per-fit telemetry as JSON lines on stderr.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,

    /// Comma-separated minority fractions to sweep.
    #[arg(long, value_delimiter = ',')]
    fractions: Vec<f64>,
}

impl RunArgs {
    fn into_config(self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)
                .with_context(|| format!("loading config {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(registry) = self.registry {
            config.registry = registry;
        }
        if !self.datasets.is_empty() {
            config.datasets = self.datasets;
        }
        if !self.methods.is_empty() {
            config.methods = self
                .methods
                .iter()
                .map(|m| m.parse::<Method>())
                .collect::<iml_core::Result<Vec<_>>>()?;
        }
        if let Some(preprocess) = self.preprocess {
            config.preprocess = preprocess.parse::<Preprocessing>()?;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(splits) = self.splits {
            config.splits = splits;
        }
        if let Some(hp_samples) = self.hp_samples {
            config.hp_samples = hp_samples;
        }
        if let Some(folds) = self.folds {
            config.cv_folds = folds;
        }
        if let Some(out) = self.out {
            config.out_dir = out;
        }
        if self.jobs.is_some() {
            config.jobs = self.jobs;
        }
        config.verbose |= self.verbose;
        config.validate()?;
        Ok(config)
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    match Cli::parse().command {
        Command::Benchmark(args) => {
            let config = args.into_config()?;
            let methods = config.methods.clone();
            let summary = run_benchmark(&config).context("benchmark failed")?;
            print_failures(&summary.failures);
            println!(
                "{:<14} {}",
                "dataset",
                methods
                    .iter()
                    .map(|m| format!("{:<18}", m.name()))
                    .collect::<String>()
            );
            let mut datasets: Vec<&str> = Vec::new();
            for report in &summary.reports {
                if !datasets.contains(&report.dataset.as_str()) {
                    datasets.push(&report.dataset);
                }
            }
            for dataset in datasets {
                let cells: String = methods
                    .iter()
                    .map(|m| match summary.report(dataset, *m) {
                        Some(r) => format!(
                            "{:>5.1} ± {:<9.1}",
                            100.0 * r.mean_f1(),
                            100.0 * r.std_f1()
                        ),
                        None => format!("{:<18}", "-"),
                    })
                    .collect();
                println!("{dataset:<14} {cells}");
            }
            println!(
                "wrote {} reports to {}",
                summary.reports.len(),
                config.out_dir.display()
            );
        }
        Command::Sweep(args) => {
            let fractions = args.fractions.clone();
            let mut config = args.run.into_config()?;
            if !fractions.is_empty() {
                config.sweep_fractions = fractions;
                config.validate()?;
            }
            let summary = run_sweep(&config).context("sweep failed")?;
            print_failures(&summary.failures);
            for (dataset, fraction) in &summary.skipped {
                eprintln!("skipped {dataset} at {:.0}% (minority floor)", 100.0 * fraction);
            }
            for cell in &summary.cells {
                println!(
                    "{:<14} {:>4.0}% {:<10} f1 {:>5.1} ± {:<5.1} acc {:>5.1} ± {:<5.1}",
                    cell.dataset,
                    100.0 * cell.fraction,
                    cell.method.name(),
                    100.0 * cell.mean_f1,
                    100.0 * cell.std_f1,
                    100.0 * cell.mean_accuracy,
                    100.0 * cell.std_accuracy,
                );
            }
            println!("wrote sweep.csv to {}", config.out_dir.display());
        }
    }
    Ok(())
}

fn print_failures(failures: &[(String, String)]) {
    for (dataset, error) in failures {
        eprintln!("FAILED {dataset}: {error}");
    }
}

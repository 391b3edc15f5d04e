//! Experiment orchestration: dataset registry, benchmark runs over repeated
//! stratified splits, and imbalance sweeps. Results land as CSV/JSON files;
//! plotting is left to external tools.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    load_csv, normalize_zscore, stratified_split, LabelColumn, LabeledDataset, SplitSpec,
};
use crate::error::{Error, Result};
use crate::eval::{
    confusion, cross_validate, f1, sample_hp_combinations, EvalReport, HyperGrid, SplitOutcome,
};
use crate::knn::KnnModel;
use crate::metric::ProjectionMatrix;
use crate::objective::{PairStrategy, WeightingMode};
use crate::resample::{make_imbalance_variant, random_under_sample, smote, ImbalanceTarget};
use crate::seeding;
use crate::solver::{fit_iml, SolverOptions};

// Seed stream tags; every randomized stage owns one.
const TAG_SPLIT: u64 = 1;
const TAG_HP: u64 = 2;
const TAG_CV: u64 = 3;
const TAG_FIT: u64 = 4;
const TAG_RESAMPLE: u64 = 5;
const TAG_VARIANT: u64 = 6;

/// The metrics competing in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Plain Euclidean 3NN; no learning, no hyperparameters.
    Euclidean,
    /// Balanced four-set weighting with nearest-neighbor pairs.
    Iml,
    /// Unweighted sums, nearest-neighbor pairs.
    Ml2,
    /// Unweighted sums, random pairs.
    Ml1,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Euclidean => "euclidean",
            Method::Iml => "iml",
            Method::Ml2 => "ml2",
            Method::Ml1 => "ml1",
        }
    }

    pub fn learns_metric(&self) -> bool {
        !matches!(self, Method::Euclidean)
    }

    pub fn weighting(&self) -> WeightingMode {
        match self {
            Method::Iml => WeightingMode::Balanced,
            _ => WeightingMode::Unweighted,
        }
    }

    pub fn pair_strategy(&self) -> PairStrategy {
        match self {
            Method::Ml1 => PairStrategy::Random,
            _ => PairStrategy::Knn,
        }
    }

    fn seed_tag(&self) -> u64 {
        match self {
            Method::Euclidean => 0,
            Method::Iml => 1,
            Method::Ml2 => 2,
            Method::Ml1 => 3,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(Method::Euclidean),
            "iml" => Ok(Method::Iml),
            "ml2" => Ok(Method::Ml2),
            "ml1" => Ok(Method::Ml1),
            other => Err(Error::Config(format!(
                "unknown method {other:?} (expected euclidean, iml, ml2, or ml1)"
            ))),
        }
    }
}

/// Training-split preprocessing applied after the split, never to test data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preprocessing {
    None,
    Smote,
    Rus,
}

impl Preprocessing {
    pub fn name(&self) -> &'static str {
        match self {
            Preprocessing::None => "none",
            Preprocessing::Smote => "smote",
            Preprocessing::Rus => "rus",
        }
    }
}

impl fmt::Display for Preprocessing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preprocessing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Preprocessing::None),
            "smote" => Ok(Preprocessing::Smote),
            "rus" => Ok(Preprocessing::Rus),
            other => Err(Error::Config(format!(
                "unknown preprocessing {other:?} (expected none, smote, or rus)"
            ))),
        }
    }
}

/// One dataset the registry knows how to load and binarize.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub name: String,
    pub path: PathBuf,
    #[serde(default)]
    pub label_column: LabelColumn,
    pub positive_labels: Vec<String>,
    /// Expected sizes, checked with a warning when present.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub d: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RegistryFile {
    datasets: Vec<RegistryEntry>,
}

/// A JSON file mapping dataset names to their CSV location, label column,
/// and the raw labels that form the positive (minority) class.
#[derive(Debug, Clone)]
pub struct DatasetRegistry {
    entries: Vec<RegistryEntry>,
    base_dir: PathBuf,
}

impl DatasetRegistry {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: RegistryFile =
            serde_json::from_str(&text).map_err(|source| Error::Json {
                context: format!("parsing registry {}", path.display()),
                source,
            })?;
        Ok(Self {
            entries: file.datasets,
            base_dir: path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf(),
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.name.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&RegistryEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Loads, binarizes, and sanity-checks one dataset.
    pub fn load_dataset(&self, name: &str) -> Result<LabeledDataset> {
        let entry = self.get(name).ok_or_else(|| Error::UnknownDataset {
            name: name.to_string(),
            known: self.names(),
        })?;
        let path = if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base_dir.join(&entry.path)
        };
        let raw = load_csv(&path, &entry.label_column)?;
        let ds = raw.binarize_labels(&entry.positive_labels)?;
        if let Some(n) = entry.n {
            if n != ds.n() {
                log::warn!("{name}: expected {n} rows, loaded {}", ds.n());
            }
        }
        if let Some(d) = entry.d {
            if d != ds.dim() {
                log::warn!("{name}: expected {d} features, loaded {}", ds.dim());
            }
        }
        Ok(ds)
    }
}

fn default_registry() -> PathBuf {
    PathBuf::from("data/registry.json")
}

fn default_methods() -> Vec<Method> {
    vec![Method::Euclidean, Method::Iml]
}

fn default_preprocess() -> Preprocessing {
    Preprocessing::None
}

fn default_train_fraction() -> f64 {
    0.3
}

fn default_splits() -> u32 {
    20
}

fn default_cv_folds() -> usize {
    5
}

fn default_hp_samples() -> usize {
    100
}

fn default_classifier_k() -> usize {
    3
}

/// The sweep's allowed minority percentages.
pub const SWEEP_FRACTIONS: [f64; 10] = [
    0.50, 0.40, 0.30, 0.20, 0.10, 0.05, 0.04, 0.03, 0.02, 0.01,
];

fn default_sweep_fractions() -> Vec<f64> {
    SWEEP_FRACTIONS.to_vec()
}

fn default_min_minority() -> usize {
    20
}

fn default_sweep_train_fraction() -> f64 {
    0.5
}

fn default_seed() -> u64 {
    42
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("results")
}

/// Everything a benchmark or sweep run needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_registry")]
    pub registry: PathBuf,
    /// Dataset names to run; empty means every registry entry.
    #[serde(default)]
    pub datasets: Vec<String>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_preprocess")]
    pub preprocess: Preprocessing,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_splits")]
    pub splits: u32,
    #[serde(default = "default_cv_folds")]
    pub cv_folds: usize,
    #[serde(default = "default_hp_samples")]
    pub hp_samples: usize,
    #[serde(default = "default_classifier_k")]
    pub classifier_k: usize,
    #[serde(default = "default_sweep_fractions")]
    pub sweep_fractions: Vec<f64>,
    #[serde(default = "default_min_minority")]
    pub min_minority: usize,
    #[serde(default = "default_sweep_train_fraction")]
    pub sweep_train_fraction: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub verbose: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config: Self = serde_json::from_str(&text).map_err(|source| Error::Json {
            context: format!("parsing config {}", path.display()),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must lie strictly between 0 and 1, got {}",
                self.train_fraction
            )));
        }
        if !(self.sweep_train_fraction > 0.0 && self.sweep_train_fraction < 1.0) {
            return Err(Error::Config(
                "sweep_train_fraction must lie strictly between 0 and 1".into(),
            ));
        }
        if self.splits == 0 {
            return Err(Error::Config("splits must be positive".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::Config("cv_folds must be at least 2".into()));
        }
        if self.hp_samples == 0 {
            return Err(Error::Config("hp_samples must be positive".into()));
        }
        if self.classifier_k == 0 {
            return Err(Error::Config("classifier_k must be positive".into()));
        }
        for fraction in &self.sweep_fractions {
            if !SWEEP_FRACTIONS
                .iter()
                .any(|allowed| (allowed - fraction).abs() < 1e-12)
            {
                return Err(Error::Config(format!(
                    "sweep fraction {fraction} is not one of {SWEEP_FRACTIONS:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Benchmark products: one report per (dataset, method), plus isolated
/// per-dataset failures.
#[derive(Debug)]
pub struct BenchmarkSummary {
    pub reports: Vec<EvalReport>,
    pub failures: Vec<(String, String)>,
}

impl BenchmarkSummary {
    pub fn report(&self, dataset: &str, method: Method) -> Option<&EvalReport> {
        self.reports
            .iter()
            .find(|r| r.dataset == dataset && r.method == method.name())
    }

    /// One row per dataset, mean/std F1 columns per method, and a final
    /// row of per-method means over the datasets.
    pub fn summary_csv(&self, methods: &[Method]) -> String {
        let mut out = String::from("dataset");
        for method in methods {
            out.push_str(&format!(",{m}_f1_mean,{m}_f1_std", m = method.name()));
        }
        out.push('\n');
        let datasets: Vec<String> = {
            let mut seen = BTreeSet::new();
            self.reports
                .iter()
                .filter(|r| seen.insert(r.dataset.clone()))
                .map(|r| r.dataset.clone())
                .collect()
        };
        let mut method_totals = vec![0.0f64; methods.len()];
        for dataset in &datasets {
            out.push_str(dataset);
            for (i, method) in methods.iter().enumerate() {
                match self.report(dataset, *method) {
                    Some(report) => {
                        method_totals[i] += report.mean_f1();
                        out.push_str(&format!(",{},{}", report.mean_f1(), report.std_f1()));
                    }
                    None => out.push_str(",,"),
                }
            }
            out.push('\n');
        }
        if !datasets.is_empty() {
            out.push_str("MEAN");
            for total in method_totals {
                out.push_str(&format!(",{},", total / datasets.len() as f64));
            }
            out.push('\n');
        }
        out
    }
}

fn build_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = jobs {
        builder = builder.num_threads(jobs);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn apply_preprocessing(
    train: LabeledDataset,
    preprocess: Preprocessing,
    seed: u64,
) -> Result<LabeledDataset> {
    match preprocess {
        Preprocessing::None => Ok(train),
        Preprocessing::Smote => smote(&train, seed),
        Preprocessing::Rus => random_under_sample(&train, seed),
    }
}

struct SplitJob<'a> {
    config: &'a ExperimentConfig,
    dataset_tag: u64,
    /// Extra tags distinguishing sweep cells from benchmark splits.
    stream: Vec<u64>,
    repeat: u32,
}

impl SplitJob<'_> {
    fn seed(&self, tag: u64, extra: &[u64]) -> u64 {
        let mut stream = vec![tag, self.dataset_tag];
        stream.extend_from_slice(&self.stream);
        stream.push(u64::from(self.repeat));
        stream.extend_from_slice(extra);
        seeding::mix(self.config.seed, &stream)
    }

    /// Splits, normalizes, preprocesses, then evaluates every method on the
    /// shared train/test pair.
    fn run(&self, ds: &LabeledDataset, train_fraction: f64) -> Result<Vec<(Method, SplitOutcome)>> {
        let config = self.config;
        let split_seed = {
            // The split depends only on (dataset, master seed, repeat).
            let mut stream = vec![TAG_SPLIT, self.dataset_tag];
            stream.extend_from_slice(&self.stream);
            seeding::mix(config.seed, &stream)
        };
        let spec = SplitSpec::new(train_fraction, config.splits, split_seed)?;
        let (train, test) = stratified_split(ds, &spec, self.repeat)?;
        let (train, scaler) = normalize_zscore(&train);
        let test = scaler.transform_dataset(&test);
        let train =
            apply_preprocessing(train, config.preprocess, self.seed(TAG_RESAMPLE, &[]))?;

        let opts = SolverOptions::default();
        let mut outcomes = Vec::with_capacity(config.methods.len());
        for &method in &config.methods {
            let started = std::time::Instant::now();
            let (projection, chosen) = if method.learns_metric() {
                let grid = HyperGrid::with_variant(method.weighting(), method.pair_strategy());
                let candidates = sample_hp_combinations(
                    &grid,
                    config.hp_samples.min(grid.len()),
                    self.seed(TAG_HP, &[]),
                )?;
                let best = if candidates.len() == 1 {
                    candidates[0]
                } else {
                    cross_validate(
                        &train,
                        &candidates,
                        config.cv_folds,
                        config.classifier_k,
                        self.seed(TAG_CV, &[]),
                        &opts,
                    )?
                    .best
                };
                let fitted = fit_iml(
                    &train,
                    &best,
                    &opts,
                    self.seed(TAG_FIT, &[method.seed_tag()]),
                )?;
                if config.verbose {
                    eprintln!(
                        "{}",
                        fitted.telemetry_json(&format!(
                            "{}:{}:repeat{}",
                            ds.name(),
                            method,
                            self.repeat
                        ))
                    );
                }
                (fitted.projection, Some(best))
            } else {
                (ProjectionMatrix::identity(train.dim()), None)
            };

            let model = KnnModel::fit(projection, &train, config.classifier_k)?;
            let predictions = model.predict(test.features());
            let counts = confusion(test.labels(), &predictions)?;
            outcomes.push((
                method,
                SplitOutcome {
                    split_index: self.repeat,
                    seed: split_seed,
                    hp: chosen,
                    f1: f1(&counts),
                    accuracy: counts.accuracy(),
                    confusion: counts,
                    fit_seconds: started.elapsed().as_secs_f64(),
                },
            ));
        }
        Ok(outcomes)
    }
}

/// Runs every configured dataset × method over repeated stratified splits
/// with per-split hyperparameter tuning, writes one CSV/JSON pair per
/// (dataset, method) plus `summary.csv`, and returns the reports.
pub fn run_benchmark(config: &ExperimentConfig) -> Result<BenchmarkSummary> {
    config.validate()?;
    let registry = DatasetRegistry::load(&config.registry)?;
    let names = if config.datasets.is_empty() {
        registry.names()
    } else {
        config.datasets.clone()
    };
    std::fs::create_dir_all(&config.out_dir).map_err(|source| Error::Io {
        path: config.out_dir.clone(),
        source,
    })?;
    let pool = build_pool(config.jobs)?;

    let mut summary = BenchmarkSummary {
        reports: Vec::new(),
        failures: Vec::new(),
    };
    for name in &names {
        let outcome = registry.load_dataset(name).and_then(|ds| {
            let dataset_tag = seeding::hash_name(name);
            pool.install(|| {
                (0..config.splits)
                    .into_par_iter()
                    .map(|repeat| {
                        SplitJob {
                            config,
                            dataset_tag,
                            stream: Vec::new(),
                            repeat,
                        }
                        .run(&ds, config.train_fraction)
                    })
                    .collect::<Result<Vec<_>>>()
            })
        });
        let per_repeat = match outcome {
            Ok(rows) => rows,
            Err(e) => {
                log::error!("{name}: {e}");
                summary.failures.push((name.clone(), e.to_string()));
                continue;
            }
        };
        for &method in &config.methods {
            let splits: Vec<SplitOutcome> = per_repeat
                .iter()
                .flat_map(|row| {
                    row.iter()
                        .filter(|(m, _)| *m == method)
                        .map(|(_, outcome)| outcome.clone())
                })
                .collect();
            let report = EvalReport {
                dataset: name.clone(),
                method: method.name().to_string(),
                preprocess: config.preprocess.name().to_string(),
                splits,
            };
            write_report(&config.out_dir, &report)?;
            summary.reports.push(report);
        }
    }

    let table = summary.summary_csv(&config.methods);
    let summary_path = config.out_dir.join("summary.csv");
    std::fs::write(&summary_path, table).map_err(|source| Error::Io {
        path: summary_path,
        source,
    })?;
    Ok(summary)
}

fn write_report(out_dir: &Path, report: &EvalReport) -> Result<()> {
    let stem = format!(
        "{}_{}_{}",
        report.dataset, report.method, report.preprocess
    );
    let csv_path = out_dir.join(format!("{stem}.csv"));
    std::fs::write(&csv_path, report.to_csv()).map_err(|source| Error::Io {
        path: csv_path,
        source,
    })?;
    let json_path = out_dir.join(format!("{stem}.json"));
    std::fs::write(&json_path, report.to_json().to_string()).map_err(|source| Error::Io {
        path: json_path,
        source,
    })?;
    Ok(())
}

/// One aggregated sweep cell.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub dataset: String,
    pub fraction: f64,
    pub method: Method,
    pub mean_f1: f64,
    pub std_f1: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub iterations: usize,
}

#[derive(Debug)]
pub struct SweepSummary {
    pub cells: Vec<SweepCell>,
    /// (dataset, fraction) pairs rejected for falling under the minority
    /// floor.
    pub skipped: Vec<(String, f64)>,
    pub failures: Vec<(String, String)>,
}

impl SweepSummary {
    pub fn cell(&self, dataset: &str, fraction: f64, method: Method) -> Option<&SweepCell> {
        self.cells.iter().find(|c| {
            c.dataset == dataset && (c.fraction - fraction).abs() < 1e-12 && c.method == method
        })
    }

    /// Long-format table: dataset, fraction, method, metric, mean, std.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,fraction,method,metric,mean,std\n");
        for cell in &self.cells {
            out.push_str(&format!(
                "{},{},{},f1,{},{}\n",
                cell.dataset, cell.fraction, cell.method, cell.mean_f1, cell.std_f1
            ));
            out.push_str(&format!(
                "{},{},{},accuracy,{},{}\n",
                cell.dataset, cell.fraction, cell.method, cell.mean_accuracy, cell.std_accuracy
            ));
        }
        out
    }
}

/// For each dataset and sweep fraction, regenerates an imbalance variant
/// per repeat, evaluates every method on a 50/50-style split of it, and
/// aggregates means and standard deviations. Variants that would drop the
/// minority class below the floor are skipped. Writes `sweep.csv`.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepSummary> {
    config.validate()?;
    let registry = DatasetRegistry::load(&config.registry)?;
    let names = if config.datasets.is_empty() {
        registry.names()
    } else {
        config.datasets.clone()
    };
    std::fs::create_dir_all(&config.out_dir).map_err(|source| Error::Io {
        path: config.out_dir.clone(),
        source,
    })?;
    let pool = build_pool(config.jobs)?;

    let mut summary = SweepSummary {
        cells: Vec::new(),
        skipped: Vec::new(),
        failures: Vec::new(),
    };
    for name in &names {
        let ds = match registry.load_dataset(name) {
            Ok(ds) => ds,
            Err(e) => {
                log::error!("{name}: {e}");
                summary.failures.push((name.clone(), e.to_string()));
                continue;
            }
        };
        let dataset_tag = seeding::hash_name(name);
        for (fraction_index, &fraction) in config.sweep_fractions.iter().enumerate() {
            let target = ImbalanceTarget {
                minority_fraction: fraction,
                min_minority: config.min_minority,
            };
            // Rejection depends only on class counts, so probe once.
            let probe = make_imbalance_variant(
                &ds,
                &target,
                seeding::mix(config.seed, &[TAG_VARIANT, dataset_tag, fraction_index as u64, 0]),
            );
            match probe {
                Ok(Some(_)) => {}
                Ok(None) => {
                    summary.skipped.push((name.clone(), fraction));
                    continue;
                }
                Err(e) => {
                    summary.failures.push((name.clone(), e.to_string()));
                    continue;
                }
            }

            let runs: Result<Vec<Vec<(Method, SplitOutcome)>>> = pool.install(|| {
                (0..config.splits)
                    .into_par_iter()
                    .map(|repeat| {
                        let variant_seed = seeding::mix(
                            config.seed,
                            &[
                                TAG_VARIANT,
                                dataset_tag,
                                fraction_index as u64,
                                u64::from(repeat),
                            ],
                        );
                        let variant = make_imbalance_variant(&ds, &target, variant_seed)?
                            .expect("rejection is count-deterministic and was probed");
                        SplitJob {
                            config,
                            dataset_tag,
                            stream: vec![fraction_index as u64],
                            repeat,
                        }
                        .run(&variant, config.sweep_train_fraction)
                    })
                    .collect()
            });
            let runs = match runs {
                Ok(runs) => runs,
                Err(e) => {
                    log::error!("{name} at fraction {fraction}: {e}");
                    summary.failures.push((name.clone(), e.to_string()));
                    continue;
                }
            };
            for &method in &config.methods {
                let f1_values: Vec<f64> = runs
                    .iter()
                    .flat_map(|row| {
                        row.iter()
                            .filter(|(m, _)| *m == method)
                            .map(|(_, o)| o.f1)
                    })
                    .collect();
                let acc_values: Vec<f64> = runs
                    .iter()
                    .flat_map(|row| {
                        row.iter()
                            .filter(|(m, _)| *m == method)
                            .map(|(_, o)| o.accuracy)
                    })
                    .collect();
                summary.cells.push(SweepCell {
                    dataset: name.clone(),
                    fraction,
                    method,
                    mean_f1: mean(&f1_values),
                    std_f1: population_std(&f1_values),
                    mean_accuracy: mean(&acc_values),
                    std_accuracy: population_std(&acc_values),
                    iterations: f1_values.len(),
                });
            }
        }
    }

    let sweep_path = config.out_dir.join("sweep.csv");
    std::fs::write(&sweep_path, summary.to_csv()).map_err(|source| Error::Io {
        path: sweep_path,
        source,
    })?;
    Ok(summary)
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

fn population_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let center = mean(values);
    (values.iter().map(|v| (v - center) * (v - center)).sum::<f64>() / values.len() as f64).sqrt()
}

//! Metrics, stratified cross-validation, and random hyperparameter search.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, NEGATIVE, POSITIVE};
use crate::error::{Error, Result};
use crate::knn::KnnModel;
use crate::objective::{HyperParams, PairStrategy, WeightingMode};
use crate::seeding;
use crate::solver::{fit_iml, SolverOptions};

/// Binary confusion counts with +1 as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub true_neg: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }

    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            return 0.0;
        }
        (self.true_pos + self.true_neg) as f64 / self.total() as f64
    }

    pub fn precision(&self) -> f64 {
        if self.true_pos == 0 {
            return 0.0;
        }
        self.true_pos as f64 / (self.true_pos + self.false_pos) as f64
    }

    pub fn recall(&self) -> f64 {
        if self.true_pos == 0 {
            return 0.0;
        }
        self.true_pos as f64 / (self.true_pos + self.false_neg) as f64
    }
}

/// Counts agreement between true and predicted labels.
pub fn confusion(y_true: &[i8], y_pred: &[i8]) -> Result<ConfusionCounts> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    let mut counts = ConfusionCounts {
        true_pos: 0,
        false_pos: 0,
        false_neg: 0,
        true_neg: 0,
    };
    for (&t, &p) in y_true.iter().zip(y_pred.iter()) {
        if t != POSITIVE && t != NEGATIVE {
            return Err(Error::InvalidLabel { value: t });
        }
        if p != POSITIVE && p != NEGATIVE {
            return Err(Error::InvalidLabel { value: p });
        }
        match (t, p) {
            (POSITIVE, POSITIVE) => counts.true_pos += 1,
            (NEGATIVE, POSITIVE) => counts.false_pos += 1,
            (POSITIVE, NEGATIVE) => counts.false_neg += 1,
            _ => counts.true_neg += 1,
        }
    }
    Ok(counts)
}

/// F1-measure: harmonic mean of precision and recall, 0 when there are no
/// true positives. Ignores true negatives, which is what makes it usable
/// under heavy imbalance.
pub fn f1(counts: &ConfusionCounts) -> f64 {
    if counts.true_pos == 0 {
        return 0.0;
    }
    let precision = counts.precision();
    let recall = counts.recall();
    2.0 * precision * recall / (precision + recall)
}

/// Cartesian hyperparameter grid. The default ranges are margin
/// {1, 10, 10², 10³, 10⁴}, lambda {0, 0.01, 0.1, 1, 10} and tradeoff
/// {0, 0.05, ..., 1}, with k, weighting, and pair strategy held fixed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HyperGrid {
    pub margins: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub tradeoffs: Vec<f64>,
    pub k: usize,
    pub weighting: WeightingMode,
    pub pair_strategy: PairStrategy,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            margins: vec![1.0, 10.0, 100.0, 1000.0, 10000.0],
            lambdas: vec![0.0, 0.01, 0.1, 1.0, 10.0],
            tradeoffs: (0..=20).map(|i| f64::from(i) / 20.0).collect(),
            k: 3,
            weighting: WeightingMode::Balanced,
            pair_strategy: PairStrategy::Knn,
        }
    }
}

impl HyperGrid {
    /// Same parameter ranges, different loss variant.
    pub fn with_variant(weighting: WeightingMode, pair_strategy: PairStrategy) -> Self {
        Self {
            weighting,
            pair_strategy,
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.margins.len() * self.lambdas.len() * self.tradeoffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All combinations, margin-major.
    pub fn enumerate(&self) -> Vec<HyperParams> {
        let mut out = Vec::with_capacity(self.len());
        for &margin in &self.margins {
            for &lambda in &self.lambdas {
                for &tradeoff in &self.tradeoffs {
                    out.push(HyperParams {
                        margin,
                        lambda,
                        tradeoff,
                        k: self.k,
                        weighting: self.weighting,
                        pair_strategy: self.pair_strategy,
                    });
                }
            }
        }
        out
    }
}

/// Draws `count` distinct combinations from the grid, uniformly without
/// replacement.
pub fn sample_hp_combinations(
    grid: &HyperGrid,
    count: usize,
    seed: u64,
) -> Result<Vec<HyperParams>> {
    let all = grid.enumerate();
    if count > all.len() || all.is_empty() {
        return Err(Error::GridExhausted {
            requested: count,
            available: all.len(),
        });
    }
    let mut rng = seeding::rng(seed, &[]);
    let mut indices: Vec<usize> = (0..all.len()).collect();
    indices.shuffle(&mut rng);
    Ok(indices[..count].iter().map(|&i| all[i]).collect())
}

/// Stratified fold id per example: within each class, examples are shuffled
/// and dealt round-robin, so every fold's class mix tracks the full set to
/// within one example.
pub fn stratified_fold_assignments(labels: &[i8], folds: usize, seed: u64) -> Result<Vec<usize>> {
    assert!(folds >= 2, "need at least two folds");
    let mut assignment = vec![0usize; labels.len()];
    let mut rng = seeding::rng(seed, &[]);
    for class in [POSITIVE, NEGATIVE] {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        if members.len() < folds {
            return Err(Error::ClassTooSmall {
                label: class,
                count: members.len(),
                required: folds,
            });
        }
        members.shuffle(&mut rng);
        for (position, &index) in members.iter().enumerate() {
            assignment[index] = position % folds;
        }
    }
    Ok(assignment)
}

/// Result of a cross-validated hyperparameter search.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub best: HyperParams,
    pub best_index: usize,
    /// Mean validation F1 per candidate, in candidate order.
    pub mean_scores: Vec<f64>,
}

/// Picks the candidate with the best mean validation F1 over stratified
/// folds (fit on the other folds, score on the held-out one). Ties keep the
/// earliest candidate.
pub fn cross_validate(
    train: &LabeledDataset,
    candidates: &[HyperParams],
    folds: usize,
    classifier_k: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<CvOutcome> {
    if candidates.is_empty() {
        return Err(Error::Config("cross-validation needs candidates".into()));
    }
    let assignment = stratified_fold_assignments(train.labels(), folds, seed)?;
    let fold_splits: Vec<(LabeledDataset, LabeledDataset)> = (0..folds)
        .map(|fold| {
            let fit_idx: Vec<usize> = (0..train.n()).filter(|&i| assignment[i] != fold).collect();
            let val_idx: Vec<usize> = (0..train.n()).filter(|&i| assignment[i] == fold).collect();
            (train.select(&fit_idx), train.select(&val_idx))
        })
        .collect();

    let mean_scores: Vec<f64> = candidates
        .par_iter()
        .enumerate()
        .map(|(candidate_index, hp)| {
            let mut total = 0.0;
            for (fold, (fit_set, val_set)) in fold_splits.iter().enumerate() {
                let fit_seed = seeding::mix(seed, &[candidate_index as u64, fold as u64]);
                let outcome = fit_iml(fit_set, hp, opts, fit_seed)?;
                let model = KnnModel::fit(outcome.projection, fit_set, classifier_k)?;
                let predictions = model.predict(val_set.features());
                total += f1(&confusion(val_set.labels(), &predictions)?);
            }
            Ok(total / folds as f64)
        })
        .collect::<Result<Vec<f64>>>()?;

    let best_index = mean_scores
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("candidates are nonempty");
    Ok(CvOutcome {
        best: candidates[best_index],
        best_index,
        mean_scores,
    })
}

/// One test-set evaluation row.
#[derive(Debug, Clone, Serialize)]
pub struct SplitOutcome {
    pub split_index: u32,
    pub seed: u64,
    pub hp: Option<HyperParams>,
    pub f1: f64,
    pub accuracy: f64,
    pub confusion: ConfusionCounts,
    pub fit_seconds: f64,
}

/// Per-split rows plus recomputable aggregates for one
/// (dataset, method, preprocessing) cell.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub dataset: String,
    pub method: String,
    pub preprocess: String,
    pub splits: Vec<SplitOutcome>,
}

fn mean(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let count = values.clone().count();
    if count == 0 {
        return 0.0;
    }
    values.sum::<f64>() / count as f64
}

fn population_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let count = values.clone().count();
    if count == 0 {
        return 0.0;
    }
    let center = mean(values.clone());
    (values.map(|v| (v - center) * (v - center)).sum::<f64>() / count as f64).sqrt()
}

impl EvalReport {
    pub fn mean_f1(&self) -> f64 {
        mean(self.splits.iter().map(|s| s.f1))
    }

    pub fn std_f1(&self) -> f64 {
        population_std(self.splits.iter().map(|s| s.f1))
    }

    pub fn mean_accuracy(&self) -> f64 {
        mean(self.splits.iter().map(|s| s.accuracy))
    }

    pub fn std_accuracy(&self) -> f64 {
        population_std(self.splits.iter().map(|s| s.accuracy))
    }

    pub fn csv_header() -> &'static str {
        "split_index,seed,margin,lambda,tradeoff,k,weighting,pair_strategy,\
         tp,fp,fn,tn,f1,accuracy,fit_seconds"
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::csv_header());
        out.push('\n');
        for s in &self.splits {
            let hp_cells = match &s.hp {
                Some(hp) => format!(
                    "{},{},{},{},{:?},{:?}",
                    hp.margin, hp.lambda, hp.tradeoff, hp.k, hp.weighting, hp.pair_strategy
                )
                .to_lowercase(),
                None => ",,,,,".into(),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                s.split_index,
                s.seed,
                hp_cells,
                s.confusion.true_pos,
                s.confusion.false_pos,
                s.confusion.false_neg,
                s.confusion.true_neg,
                s.f1,
                s.accuracy,
                s.fit_seconds,
            ));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "dataset": self.dataset,
            "method": self.method,
            "preprocess": self.preprocess,
            "aggregate": {
                "mean_f1": self.mean_f1(),
                "std_f1": self.std_f1(),
                "mean_accuracy": self.mean_accuracy(),
                "std_accuracy": self.std_accuracy(),
                "splits": self.splits.len(),
            },
            "splits": self.splits,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    #[test]
    fn confusion_counts_directly() {
        let counts = confusion(&[1, 1, -1, -1], &[1, -1, 1, -1]).unwrap();
        assert_eq!(
            counts,
            ConfusionCounts {
                true_pos: 1,
                false_pos: 1,
                false_neg: 1,
                true_neg: 1
            }
        );
    }

    #[test]
    fn all_correct_has_no_errors() {
        let counts = confusion(&[1, -1, -1], &[1, -1, -1]).unwrap();
        assert_eq!(counts.false_pos, 0);
        assert_eq!(counts.false_neg, 0);
        assert_abs_diff_eq!(f1(&counts), 1.0);
    }

    #[test]
    fn length_mismatch_and_bad_labels_are_rejected() {
        assert!(confusion(&[1, -1], &[1]).is_err());
        assert!(confusion(&[1, 0], &[1, 1]).is_err());
    }

    #[test]
    fn always_negative_predictor_on_rare_positives() {
        // 4.22% positives, everything predicted negative: accuracy looks
        // excellent while F1 collapses to 0.
        let n = 10_000;
        let positives = 422;
        let mut y_true = vec![POSITIVE; positives];
        y_true.extend(vec![NEGATIVE; n - positives]);
        let y_pred = vec![NEGATIVE; n];
        let counts = confusion(&y_true, &y_pred).unwrap();
        assert_eq!(counts.true_pos, 0);
        assert_abs_diff_eq!(counts.accuracy(), 0.9578, epsilon = 1e-12);
        assert_abs_diff_eq!(f1(&counts), 0.0);
    }

    #[test]
    fn f1_hand_computed() {
        let counts = ConfusionCounts {
            true_pos: 3,
            false_pos: 1,
            false_neg: 2,
            true_neg: 0,
        };
        assert_abs_diff_eq!(f1(&counts), 0.6667, epsilon = 1e-4);
        let perfect = ConfusionCounts {
            true_pos: 5,
            false_pos: 0,
            false_neg: 0,
            true_neg: 0,
        };
        assert_abs_diff_eq!(f1(&perfect), 1.0);
        let degenerate = ConfusionCounts {
            true_pos: 0,
            false_pos: 3,
            false_neg: 2,
            true_neg: 0,
        };
        assert_abs_diff_eq!(f1(&degenerate), 0.0);
    }

    #[test]
    fn f1_matches_closed_form_oracle_on_small_counts() {
        // Independent route: F1 = 2tp / (2tp + fp + fn).
        let limit = 20;
        for total in 0..=limit {
            for tp in 0..=total {
                for fp in 0..=(total - tp) {
                    for fn_ in 0..=(total - tp - fp) {
                        let counts = ConfusionCounts {
                            true_pos: tp,
                            false_pos: fp,
                            false_neg: fn_,
                            true_neg: total - tp - fp - fn_,
                        };
                        let oracle = if tp == 0 {
                            0.0
                        } else {
                            2.0 * tp as f64 / (2.0 * tp as f64 + fp as f64 + fn_ as f64)
                        };
                        assert_abs_diff_eq!(f1(&counts), oracle, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn accuracy_plus_error_rate_is_one() {
        let counts = ConfusionCounts {
            true_pos: 3,
            false_pos: 4,
            false_neg: 5,
            true_neg: 8,
        };
        let error_rate = (counts.false_pos + counts.false_neg) as f64 / counts.total() as f64;
        assert_abs_diff_eq!(counts.accuracy() + error_rate, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_has_expected_size() {
        let grid = HyperGrid::default();
        assert_eq!(grid.len(), 525);
        assert_eq!(grid.enumerate().len(), 525);
    }

    #[test]
    fn sampling_whole_grid_is_a_shuffle() {
        let grid = HyperGrid::default();
        let sample = sample_hp_combinations(&grid, 525, 3).unwrap();
        assert_eq!(sample.len(), 525);
        let mut seen: Vec<String> = sample
            .iter()
            .map(|hp| format!("{},{},{}", hp.margin, hp.lambda, hp.tradeoff))
            .collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 525);
    }

    #[test]
    fn sampling_is_distinct_and_reproducible() {
        let grid = HyperGrid::default();
        let a = sample_hp_combinations(&grid, 100, 9).unwrap();
        let b = sample_hp_combinations(&grid, 100, 9).unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(a, b);
        let mut keys: Vec<String> = a
            .iter()
            .map(|hp| format!("{},{},{}", hp.margin, hp.lambda, hp.tradeoff))
            .collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 100);
    }

    #[test]
    fn single_sample_is_valid() {
        let grid = HyperGrid::default();
        let sample = sample_hp_combinations(&grid, 1, 0).unwrap();
        assert_eq!(sample.len(), 1);
        assert!(sample[0].validate().is_ok());
    }

    #[test]
    fn oversampling_the_grid_fails() {
        let grid = HyperGrid::default();
        assert!(sample_hp_combinations(&grid, 526, 0).is_err());
    }

    #[test]
    fn folds_are_stratified_within_one_example() {
        let mut labels = vec![POSITIVE; 23];
        labels.extend(vec![NEGATIVE; 52]);
        let assignment = stratified_fold_assignments(&labels, 5, 77).unwrap();
        for fold in 0..5 {
            let pos = labels
                .iter()
                .enumerate()
                .filter(|(i, &l)| assignment[*i] == fold && l == POSITIVE)
                .count();
            let neg = labels
                .iter()
                .enumerate()
                .filter(|(i, &l)| assignment[*i] == fold && l == NEGATIVE)
                .count();
            assert!((4..=5).contains(&pos), "fold {fold} has {pos} positives");
            assert!((10..=11).contains(&neg), "fold {fold} has {neg} negatives");
        }
    }

    #[test]
    fn tiny_class_cannot_be_folded() {
        let mut labels = vec![POSITIVE; 3];
        labels.extend(vec![NEGATIVE; 40]);
        assert!(stratified_fold_assignments(&labels, 5, 0).is_err());
    }

    /// Two stripes offset along the first coordinate, spread along the
    /// second: similar-pair shrinking is required before neighbors become
    /// same-class, so it separates good from bad hyperparameters.
    fn striped_dataset() -> LabeledDataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            rows.push(0.0);
            rows.push(4.0 * i as f64);
            labels.push(POSITIVE);
            rows.push(2.0);
            rows.push(4.0 * i as f64 + 2.0);
            labels.push(NEGATIVE);
        }
        let features = Array2::from_shape_vec((40, 2), rows).unwrap();
        LabeledDataset::new(features, labels, None, "stripes".into()).unwrap()
    }

    #[test]
    fn single_candidate_is_returned_unconditionally() {
        let ds = striped_dataset();
        let only = HyperParams::default();
        let outcome =
            cross_validate(&ds, &[only], 5, 3, 5, &SolverOptions::default()).unwrap();
        assert_eq!(outcome.best_index, 0);
        assert_eq!(outcome.best, only);
    }

    #[test]
    fn cv_prefers_the_candidate_that_fixes_the_neighborhoods() {
        let ds = striped_dataset();
        let good = HyperParams {
            margin: 1.0,
            lambda: 0.01,
            tradeoff: 0.5,
            ..HyperParams::default()
        };
        // Pure-dissimilar, unregularized: the dissimilar hinges are already
        // inactive on the stripes, so nothing changes and neighborhoods stay
        // wrong.
        let bad = HyperParams {
            margin: 1.0,
            lambda: 0.0,
            tradeoff: 0.0,
            ..HyperParams::default()
        };
        let outcome = cross_validate(
            &ds,
            &[bad, good],
            5,
            3,
            5,
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(outcome.best_index, 1, "scores: {:?}", outcome.mean_scores);
        assert!(outcome.mean_scores[1] > outcome.mean_scores[0]);
        assert_abs_diff_eq!(outcome.mean_scores[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn cv_ties_keep_candidate_order() {
        let ds = striped_dataset();
        let hp = HyperParams::default();
        let outcome =
            cross_validate(&ds, &[hp, hp], 5, 3, 5, &SolverOptions::default()).unwrap();
        assert_eq!(outcome.best_index, 0);
    }

    #[test]
    fn report_aggregates_match_rows() {
        let rows = vec![
            SplitOutcome {
                split_index: 0,
                seed: 1,
                hp: None,
                f1: 0.5,
                accuracy: 0.8,
                confusion: ConfusionCounts {
                    true_pos: 1,
                    false_pos: 1,
                    false_neg: 1,
                    true_neg: 7,
                },
                fit_seconds: 0.0,
            },
            SplitOutcome {
                split_index: 1,
                seed: 2,
                hp: None,
                f1: 0.7,
                accuracy: 0.9,
                confusion: ConfusionCounts {
                    true_pos: 2,
                    false_pos: 1,
                    false_neg: 0,
                    true_neg: 7,
                },
                fit_seconds: 0.0,
            },
        ];
        let report = EvalReport {
            dataset: "toy".into(),
            method: "euclidean".into(),
            preprocess: "none".into(),
            splits: rows,
        };
        assert_abs_diff_eq!(report.mean_f1(), 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(report.std_f1(), 0.1, epsilon = 1e-12);
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().starts_with("0,1,,,,,,"));
    }
}

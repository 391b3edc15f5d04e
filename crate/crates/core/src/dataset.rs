//! Dataset loading, binarization, normalization, and stratified splitting.
//!
//! All randomized operations are pure functions of their inputs plus a seed
//! and repeat index, so experiment stages can be re-run or parallelized
//! without changing results.

use std::collections::BTreeSet;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;

pub const POSITIVE: i8 = 1;
pub const NEGATIVE: i8 = -1;

/// Which CSV column carries the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    First,
    Last,
    Index(usize),
    Name(String),
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Last
    }
}

impl Serialize for LabelColumn {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LabelColumn::First => ser.serialize_str("first"),
            LabelColumn::Last => ser.serialize_str("last"),
            LabelColumn::Index(i) => ser.serialize_u64(*i as u64),
            LabelColumn::Name(name) => ser.serialize_str(name),
        }
    }
}

impl<'de> Deserialize<'de> for LabelColumn {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Index(usize),
            Text(String),
        }
        Ok(match Repr::deserialize(de)? {
            Repr::Index(i) => LabelColumn::Index(i),
            Repr::Text(s) if s.eq_ignore_ascii_case("first") => LabelColumn::First,
            Repr::Text(s) if s.eq_ignore_ascii_case("last") => LabelColumn::Last,
            Repr::Text(s) => LabelColumn::Name(s),
        })
    }
}

/// A parsed dataset whose labels are still raw strings.
#[derive(Debug, Clone)]
pub struct RawDataset {
    pub features: Array2<f64>,
    pub labels: Vec<String>,
    pub feature_names: Option<Vec<String>>,
    pub name: String,
}

impl RawDataset {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Distinct raw labels in first-appearance order.
    pub fn observed_labels(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for label in &self.labels {
            if seen.insert(label.clone()) {
                out.push(label.clone());
            }
        }
        out
    }

    /// Maps labels in `positive_labels` to +1 and every other label to -1.
    ///
    /// The positive set must cover some but not all of the observed labels;
    /// by convention the positive class is the minority of interest.
    pub fn binarize_labels(&self, positive_labels: &[String]) -> Result<LabeledDataset> {
        let observed = self.observed_labels();
        let is_positive =
            |label: &String| positive_labels.iter().any(|p| p == label);
        let covered = observed.iter().filter(|l| is_positive(l)).count();
        if covered == 0 || covered == observed.len() {
            return Err(Error::InvalidPositiveLabels {
                positive: positive_labels.to_vec(),
                observed,
            });
        }
        let labels = self
            .labels
            .iter()
            .map(|l| if is_positive(l) { POSITIVE } else { NEGATIVE })
            .collect();
        LabeledDataset::new(
            self.features.clone(),
            labels,
            self.feature_names.clone(),
            self.name.clone(),
        )
    }
}

/// Feature matrix with labels in {-1, +1}. Immutable after construction.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    features: Array2<f64>,
    labels: Vec<i8>,
    feature_names: Option<Vec<String>>,
    name: String,
}

impl LabeledDataset {
    pub fn new(
        features: Array2<f64>,
        labels: Vec<i8>,
        feature_names: Option<Vec<String>>,
        name: String,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::RowLabelMismatch {
                rows: features.nrows(),
                labels: labels.len(),
            });
        }
        if labels.is_empty() {
            return Err(Error::EmptyDataset { name });
        }
        for ((row, column), v) in features.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature { row, column });
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l != POSITIVE && l != NEGATIVE) {
            return Err(Error::InvalidLabel { value: bad });
        }
        Ok(Self {
            features,
            labels,
            feature_names,
            name,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_positive(&self) -> usize {
        self.labels.iter().filter(|&&l| l == POSITIVE).count()
    }

    pub fn num_negative(&self) -> usize {
        self.n() - self.num_positive()
    }

    pub fn minority_fraction(&self) -> f64 {
        self.num_positive() as f64 / self.n() as f64
    }

    /// Indices of all examples with the given label, ascending.
    pub fn class_indices(&self, label: i8) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| i)
            .collect()
    }

    /// Row subset, in the order given.
    pub fn select(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            name: self.name.clone(),
        }
    }

    /// Same rows, different feature matrix (e.g. after rescaling).
    pub fn with_features(&self, features: Array2<f64>) -> LabeledDataset {
        assert_eq!(features.nrows(), self.n());
        LabeledDataset {
            features,
            labels: self.labels.clone(),
            feature_names: self.feature_names.clone(),
            name: self.name.clone(),
        }
    }

    /// Appends rows with the given label (used by over-sampling).
    pub fn append_rows(&self, rows: Array2<f64>, label: i8) -> LabeledDataset {
        assert_eq!(rows.ncols(), self.dim());
        let mut features = self.features.clone();
        features.append(Axis(0), rows.view()).expect("same width");
        let mut labels = self.labels.clone();
        labels.extend(std::iter::repeat_n(label, rows.nrows()));
        LabeledDataset {
            features,
            labels,
            feature_names: self.feature_names.clone(),
            name: self.name.clone(),
        }
    }
}

/// Parameters of a repeated stratified train/test split.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub repeats: u32,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, repeats: u32, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must lie strictly between 0 and 1, got {train_fraction}"
            )));
        }
        Ok(Self {
            train_fraction,
            repeats,
            seed,
        })
    }
}

/// Loads a CSV file, keeping labels as raw strings.
///
/// Accepts headered or headerless files; a first row whose feature cells do
/// not all parse as numbers is treated as the header. Feature cells must be
/// finite reals.
pub fn load_csv(path: &Path, label_column: &LabelColumn) -> Result<RawDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;

    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        // Skip blank lines.
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        rows.push(record);
    }

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let Some(first) = rows.first() else {
        return Err(Error::EmptyDataset { name });
    };
    let columns = first.len();
    for (i, record) in rows.iter().enumerate() {
        if record.len() != columns {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                row: i,
                found: record.len(),
                expected: columns,
            });
        }
    }

    let label_index = match label_column {
        LabelColumn::First => 0,
        LabelColumn::Last => columns - 1,
        LabelColumn::Index(i) => {
            if *i >= columns {
                return Err(Error::LabelColumnOutOfRange {
                    index: *i,
                    columns,
                });
            }
            *i
        }
        LabelColumn::Name(name) => {
            let header: Vec<String> = first.iter().map(str::to_string).collect();
            header
                .iter()
                .position(|h| h == name)
                .ok_or(Error::LabelColumnNotFound {
                    column: name.clone(),
                    header,
                })?
        }
    };

    // A named label column implies a header; otherwise the first row is a
    // header exactly when some feature cell of it is not numeric.
    let has_header = match label_column {
        LabelColumn::Name(_) => true,
        _ => first
            .iter()
            .enumerate()
            .any(|(j, cell)| j != label_index && cell.parse::<f64>().is_err()),
    };

    let feature_names = if has_header {
        Some(
            first
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != label_index)
                .map(|(_, cell)| cell.to_string())
                .collect::<Vec<_>>(),
        )
    } else {
        None
    };

    let data_rows = &rows[usize::from(has_header)..];
    if data_rows.is_empty() {
        return Err(Error::EmptyDataset { name });
    }

    let n = data_rows.len();
    let d = columns - 1;
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for (i, record) in data_rows.iter().enumerate() {
        for (j, cell) in record.iter().enumerate() {
            if j == label_index {
                labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                path: path.to_path_buf(),
                row: i,
                column: j,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature { row: i, column: j });
            }
            features.push(v);
        }
    }

    let features =
        Array2::from_shape_vec((n, d), features).expect("uniform rows reshape cannot fail");
    Ok(RawDataset {
        features,
        labels,
        feature_names,
        name,
    })
}

/// Per-feature statistics fitted on a training split.
///
/// Standard deviation is the population (biased) one; zero-variance columns
/// are stored with std 1 so they transform to all-zeros instead of NaN.
#[derive(Debug, Clone)]
pub struct Scaler {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

impl Scaler {
    pub fn fit(features: ArrayView2<f64>) -> Self {
        let n = features.nrows() as f64;
        let mean = features.sum_axis(Axis(0)) / n;
        let mut var = Array1::zeros(features.ncols());
        for row in features.rows() {
            for (j, &v) in row.iter().enumerate() {
                let centered = v - mean[j];
                var[j] += centered * centered;
            }
        }
        var /= n;
        let std = var.mapv(|v| {
            let s = v.sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        });
        Self { mean, std }
    }

    pub fn transform(&self, features: ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(features.ncols(), self.mean.len());
        let mut out = features.to_owned();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        out
    }

    pub fn transform_dataset(&self, ds: &LabeledDataset) -> LabeledDataset {
        ds.with_features(self.transform(ds.features()))
    }
}

/// Standardizes every column to mean 0 and variance 1 on this data, and
/// returns the fitted statistics so held-out data can reuse them.
pub fn normalize_zscore(ds: &LabeledDataset) -> (LabeledDataset, Scaler) {
    assert!(ds.n() >= 2, "need at least two rows to standardize");
    let scaler = Scaler::fit(ds.features());
    (scaler.transform_dataset(ds), scaler)
}

/// Per-class train sizes: floor of the proportional share, with the
/// remaining slots (so the train total equals `round(fraction * n)`) going
/// to the classes with the largest fractional part, positives first on ties.
fn train_counts(fraction: f64, n_pos: usize, n_neg: usize) -> (usize, usize) {
    let total_train = (fraction * (n_pos + n_neg) as f64).round() as usize;
    let exact_pos = fraction * n_pos as f64;
    let exact_neg = fraction * n_neg as f64;
    let mut take_pos = exact_pos.floor() as usize;
    let mut take_neg = exact_neg.floor() as usize;
    let mut remainder = total_train.saturating_sub(take_pos + take_neg);
    let mut order = [
        (exact_pos - exact_pos.floor(), POSITIVE),
        (exact_neg - exact_neg.floor(), NEGATIVE),
    ];
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    for (_, label) in order {
        if remainder == 0 {
            break;
        }
        let (take, cap) = if label == POSITIVE {
            (&mut take_pos, n_pos)
        } else {
            (&mut take_neg, n_neg)
        };
        if *take < cap {
            *take += 1;
            remainder -= 1;
        }
    }
    (take_pos, take_neg)
}

/// Stratified train/test split, fully determined by `(spec.seed, repeat_index)`.
///
/// Each class is shuffled independently and contributes its proportional
/// share of training examples; train and test partition the input rows.
pub fn stratified_split(
    ds: &LabeledDataset,
    spec: &SplitSpec,
    repeat_index: u32,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let mut rng = seeding::rng(spec.seed, &[u64::from(repeat_index)]);
    let mut pos = ds.class_indices(POSITIVE);
    let mut neg = ds.class_indices(NEGATIVE);
    let (take_pos, take_neg) = train_counts(spec.train_fraction, pos.len(), neg.len());
    for (label, count, take) in [
        (POSITIVE, pos.len(), take_pos),
        (NEGATIVE, neg.len(), take_neg),
    ] {
        if take == 0 || take == count {
            return Err(Error::ClassTooSmall {
                label,
                count,
                required: 2,
            });
        }
    }
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let mut train_idx: Vec<usize> = pos[..take_pos]
        .iter()
        .chain(neg[..take_neg].iter())
        .copied()
        .collect();
    let mut test_idx: Vec<usize> = pos[take_pos..]
        .iter()
        .chain(neg[take_neg..].iter())
        .copied()
        .collect();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((ds.select(&train_idx), ds.select(&test_idx)))
}

//! k-nearest-neighbor classification in the projected space.

use ndarray::{Array2, ArrayView2};

use crate::dataset::{LabeledDataset, NEGATIVE, POSITIVE};
use crate::error::{Error, Result};
use crate::metric::ProjectionMatrix;

/// A 3NN-style classifier over training data projected through a learned
/// metric. With the identity projection this is plain Euclidean kNN.
#[derive(Debug, Clone)]
pub struct KnnModel {
    projection: ProjectionMatrix,
    projected_train: Array2<f64>,
    labels: Vec<i8>,
    k: usize,
}

impl KnnModel {
    pub fn fit(projection: ProjectionMatrix, train: &LabeledDataset, k: usize) -> Result<Self> {
        if k == 0 || k > train.n() {
            return Err(Error::KTooLarge { k, n: train.n() });
        }
        let projected_train = projection.project(train.features());
        Ok(Self {
            projection,
            projected_train,
            labels: train.labels().to_vec(),
            k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Majority label among the k nearest projected training points, for
    /// each row of `test_features` (given in the original input space).
    ///
    /// Distance ties break toward the lower training index; a tied vote
    /// (possible only for even k or duplicated points) predicts the
    /// majority class -1.
    pub fn predict(&self, test_features: ArrayView2<f64>) -> Vec<i8> {
        let projected = self.projection.project(test_features);
        projected
            .rows()
            .into_iter()
            .map(|row| self.predict_projected(row.as_slice().expect("contiguous row")))
            .collect()
    }

    fn predict_projected(&self, query: &[f64]) -> i8 {
        let mut scored: Vec<(f64, usize)> = self
            .projected_train
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                let sq: f64 = row
                    .iter()
                    .zip(query.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (sq, i)
            })
            .collect();
        let key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < scored.len() {
            scored.select_nth_unstable_by(self.k - 1, key);
            scored.truncate(self.k);
        }
        scored.sort_unstable_by(key);
        let vote: i32 = scored
            .iter()
            .map(|&(_, i)| i32::from(self.labels[i]))
            .sum();
        if vote > 0 {
            POSITIVE
        } else {
            NEGATIVE
        }
    }
}

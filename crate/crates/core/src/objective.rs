//! The pairwise hinge objective and its analytic gradient.
//!
//! Similar pairs pay `[d² - 1]₊` (they should sit within distance 1) and
//! dissimilar pairs pay `[1 + m - d²]₊` (they should sit beyond `1 + m`).
//! In balanced mode each of the four pair sets contributes its *mean* loss
//! times `a/4` or `(1-a)/4`, so replicating pairs inside a set changes
//! nothing and scarce positive pairs carry as much weight as abundant
//! negative ones. Unweighted mode keeps the raw sums. A Frobenius
//! regularizer `λ‖LᵀL - I‖²` pulls the metric toward the Euclidean one.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::metric::ProjectionMatrix;
use crate::pairs::PairSets;

/// How the four pair sets are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightingMode {
    /// Each set contributes its mean loss: weights `a/(4|set|)` and
    /// `(1-a)/(4|set|)`.
    Balanced,
    /// Raw sums weighted by `a` and `(1-a)`.
    Unweighted,
}

/// How pairs are selected before optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairStrategy {
    /// Nearest-neighbor rule: k similar and k dissimilar pairs per example.
    Knn,
    /// Uniformly random ordered pairs (2nk of them, for parity with Knn).
    Random,
}

/// Loss hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Extra separation required of dissimilar pairs beyond distance 1.
    pub margin: f64,
    /// Weight of the pull toward the identity metric.
    pub lambda: f64,
    /// Trade-off `a` between similar (a) and dissimilar (1-a) terms.
    pub tradeoff: f64,
    /// Neighborhood size for pair selection.
    pub k: usize,
    pub weighting: WeightingMode,
    pub pair_strategy: PairStrategy,
}

impl HyperParams {
    pub fn new(
        margin: f64,
        lambda: f64,
        tradeoff: f64,
        k: usize,
        weighting: WeightingMode,
        pair_strategy: PairStrategy,
    ) -> Result<Self> {
        let hp = Self {
            margin,
            lambda,
            tradeoff,
            k,
            weighting,
            pair_strategy,
        };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return Err(Error::InvalidHyperParam(format!(
                "margin must be a finite nonnegative real, got {}",
                self.margin
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidHyperParam(format!(
                "lambda must be a finite nonnegative real, got {}",
                self.lambda
            )));
        }
        if !(0.0..=1.0).contains(&self.tradeoff) {
            return Err(Error::InvalidHyperParam(format!(
                "tradeoff must lie in [0, 1], got {}",
                self.tradeoff
            )));
        }
        if self.k == 0 {
            return Err(Error::InvalidHyperParam("k must be positive".into()));
        }
        Ok(())
    }
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            margin: 1.0,
            lambda: 0.1,
            tradeoff: 0.5,
            k: 3,
            weighting: WeightingMode::Balanced,
            pair_strategy: PairStrategy::Knn,
        }
    }
}

/// Hinge loss of a similar pair: `[d²(x, x') - 1]₊`.
pub fn loss_sim(l: &ProjectionMatrix, x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
    (l.sq_distance(x, y) - 1.0).max(0.0)
}

/// Hinge loss of a dissimilar pair: `[1 + m - d²(x, x')]₊`.
pub fn loss_dis(l: &ProjectionMatrix, x: ArrayView1<f64>, y: ArrayView1<f64>, margin: f64) -> f64 {
    debug_assert!(margin >= 0.0);
    (1.0 + margin - l.sq_distance(x, y)).max(0.0)
}

/// Per-set weights `[sim_pos, sim_neg, dis_pos, dis_neg]`; empty sets get 0.
fn set_weights(pairs: &PairSets, hp: &HyperParams) -> [f64; 4] {
    let a = hp.tradeoff;
    let sizes = [
        pairs.sim_pos.len(),
        pairs.sim_neg.len(),
        pairs.dis_pos.len(),
        pairs.dis_neg.len(),
    ];
    let raw = [a, a, 1.0 - a, 1.0 - a];
    let mut weights = [0.0; 4];
    for (w, (&size, &coefficient)) in weights.iter_mut().zip(sizes.iter().zip(raw.iter())) {
        if size == 0 {
            continue;
        }
        *w = match hp.weighting {
            WeightingMode::Balanced => coefficient / (4.0 * size as f64),
            WeightingMode::Unweighted => coefficient,
        };
    }
    weights
}

fn sq_distance_projected(projected: &Array2<f64>, i: usize, j: usize) -> f64 {
    projected
        .row(i)
        .iter()
        .zip(projected.row(j).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// `‖LᵀL - I‖²_F`.
fn identity_deviation(l: &ProjectionMatrix) -> f64 {
    let mut gram = l.gram();
    for i in 0..gram.ncols() {
        gram[[i, i]] -= 1.0;
    }
    gram.iter().map(|v| v * v).sum()
}

/// Full objective value at `L` for the given pairs and hyperparameters.
pub fn objective(
    l: &ProjectionMatrix,
    pairs: &PairSets,
    train: &LabeledDataset,
    hp: &HyperParams,
) -> f64 {
    let projected = l.project(train.features());
    let [w_sim_pos, w_sim_neg, w_dis_pos, w_dis_neg] = set_weights(pairs, hp);

    let sim_term = |set: &[(usize, usize)], weight: f64| -> f64 {
        if weight == 0.0 {
            return 0.0;
        }
        let total: f64 = set
            .iter()
            .map(|&(i, j)| (sq_distance_projected(&projected, i, j) - 1.0).max(0.0))
            .sum();
        weight * total
    };
    let dis_term = |set: &[(usize, usize)], weight: f64| -> f64 {
        if weight == 0.0 {
            return 0.0;
        }
        let total: f64 = set
            .iter()
            .map(|&(i, j)| (1.0 + hp.margin - sq_distance_projected(&projected, i, j)).max(0.0))
            .sum();
        weight * total
    };

    sim_term(&pairs.sim_pos, w_sim_pos)
        + sim_term(&pairs.sim_neg, w_sim_neg)
        + dis_term(&pairs.dis_pos, w_dis_pos)
        + dis_term(&pairs.dis_neg, w_dis_neg)
        + hp.lambda * identity_deviation(l)
}

/// Analytic gradient of [`objective`] with respect to `L`.
///
/// An active similar pair contributes `+2w·Lδδᵀ`, an active dissimilar pair
/// `-2w·Lδδᵀ` (δ the feature difference, w its set weight); pairs exactly on
/// the hinge boundary are treated as inactive. The regularizer adds
/// `4λ·L(LᵀL - I)`.
pub fn gradient(
    l: &ProjectionMatrix,
    pairs: &PairSets,
    train: &LabeledDataset,
    hp: &HyperParams,
) -> Array2<f64> {
    let features = train.features();
    let projected = l.project(features);
    let [w_sim_pos, w_sim_neg, w_dis_pos, w_dis_neg] = set_weights(pairs, hp);
    let d = l.dim();

    // Accumulate C = Σ c·δδᵀ over active pairs, then the pair part is 2·L·C.
    let mut coefficient_matrix = Array2::<f64>::zeros((d, d));
    let mut delta = vec![0.0; d];
    let mut accumulate = |set: &[(usize, usize)], weight: f64, similar: bool| {
        if weight == 0.0 {
            return;
        }
        let signed = if similar { weight } else { -weight };
        for &(i, j) in set {
            let sq = sq_distance_projected(&projected, i, j);
            let active = if similar {
                sq > 1.0
            } else {
                sq < 1.0 + hp.margin
            };
            if !active {
                continue;
            }
            for (col, value) in delta.iter_mut().enumerate() {
                *value = features[[i, col]] - features[[j, col]];
            }
            for (r, &dr) in delta.iter().enumerate() {
                let scaled = signed * dr;
                if scaled == 0.0 {
                    continue;
                }
                for (c, &dc) in delta.iter().enumerate() {
                    coefficient_matrix[[r, c]] += scaled * dc;
                }
            }
        }
    };
    accumulate(&pairs.sim_pos, w_sim_pos, true);
    accumulate(&pairs.sim_neg, w_sim_neg, true);
    accumulate(&pairs.dis_pos, w_dis_pos, false);
    accumulate(&pairs.dis_neg, w_dis_neg, false);

    let entries = l.entries();
    let mut grad = entries.dot(&coefficient_matrix) * 2.0;

    if hp.lambda > 0.0 {
        let mut gram = l.gram();
        for i in 0..d {
            gram[[i, i]] -= 1.0;
        }
        grad += &(entries.dot(&gram) * (4.0 * hp.lambda));
    }
    grad
}

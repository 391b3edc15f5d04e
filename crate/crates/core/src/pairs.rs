//! Construction of the four label-typed pair sets over a training set.
//!
//! Pairs are anchored: `(i, j)` means example `i` picked partner `j`.
//! Similar pairs join two examples of one class (split into positive- and
//! negative-anchored sets), dissimilar pairs join the two classes (split by
//! the anchor's label). Keeping the four sets apart is what lets the loss
//! weight them independently of how imbalanced the sample is.

use ndarray::ArrayView2;
use rand::Rng;

use crate::dataset::{LabeledDataset, NEGATIVE, POSITIVE};
use crate::seeding;

/// The four pair sets; each entry is `(anchor index, partner index)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairSets {
    /// Both examples positive.
    pub sim_pos: Vec<(usize, usize)>,
    /// Both examples negative.
    pub sim_neg: Vec<(usize, usize)>,
    /// Positive anchor, negative partner.
    pub dis_pos: Vec<(usize, usize)>,
    /// Negative anchor, positive partner.
    pub dis_neg: Vec<(usize, usize)>,
}

impl PairSets {
    pub fn total(&self) -> usize {
        self.sim_pos.len() + self.sim_neg.len() + self.dis_pos.len() + self.dis_neg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Routes a pair into the set matching its labels.
    pub fn push(&mut self, anchor: usize, partner: usize, anchor_label: i8, partner_label: i8) {
        debug_assert_ne!(anchor, partner, "a pair may not join an example to itself");
        match (anchor_label, partner_label) {
            (POSITIVE, POSITIVE) => self.sim_pos.push((anchor, partner)),
            (NEGATIVE, NEGATIVE) => self.sim_neg.push((anchor, partner)),
            (POSITIVE, NEGATIVE) => self.dis_pos.push((anchor, partner)),
            _ => self.dis_neg.push((anchor, partner)),
        }
    }

    /// True when every pair's labels match its set's definition and no pair
    /// is degenerate.
    pub fn routing_is_sound(&self, labels: &[i8]) -> bool {
        let ok = |pairs: &[(usize, usize)], a: i8, p: i8| {
            pairs
                .iter()
                .all(|&(i, j)| i != j && labels[i] == a && labels[j] == p)
        };
        ok(&self.sim_pos, POSITIVE, POSITIVE)
            && ok(&self.sim_neg, NEGATIVE, NEGATIVE)
            && ok(&self.dis_pos, POSITIVE, NEGATIVE)
            && ok(&self.dis_neg, NEGATIVE, POSITIVE)
    }
}

fn sq_euclidean(features: &ArrayView2<f64>, i: usize, j: usize) -> f64 {
    features
        .row(i)
        .iter()
        .zip(features.row(j).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// The `count` candidates nearest to `anchor`, ties broken by lower index.
fn nearest(
    features: &ArrayView2<f64>,
    anchor: usize,
    candidates: &[usize],
    count: usize,
) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = candidates
        .iter()
        .map(|&j| (sq_euclidean(features, anchor, j), j))
        .collect();
    scored.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.truncate(count);
    scored.into_iter().map(|(_, j)| j).collect()
}

/// Builds pairs by the nearest-neighbor rule: every training example
/// contributes up to `k` similar pairs (nearest same-class neighbors) and up
/// to `k` dissimilar pairs (nearest other-class neighbors), measured with
/// the Euclidean distance on the given (already normalized) features.
///
/// A class with a single member yields no similar pairs; that example still
/// contributes dissimilar ones.
pub fn build_pairs_knn(train: &LabeledDataset, k: usize) -> PairSets {
    assert!(k >= 1, "k must be at least 1");
    let features = train.features();
    let labels = train.labels();
    let pos = train.class_indices(POSITIVE);
    let neg = train.class_indices(NEGATIVE);
    for (class, members) in [(POSITIVE, &pos), (NEGATIVE, &neg)] {
        if members.len() == 1 {
            log::warn!(
                "class {class:+} has a single member; it contributes dissimilar pairs only"
            );
        }
    }

    let mut sets = PairSets::default();
    let mut same_buf: Vec<usize> = Vec::new();
    for anchor in 0..train.n() {
        let label = labels[anchor];
        let (same, other) = if label == POSITIVE {
            (&pos, &neg)
        } else {
            (&neg, &pos)
        };
        same_buf.clear();
        same_buf.extend(same.iter().copied().filter(|&j| j != anchor));
        for j in nearest(&features, anchor, &same_buf, k) {
            sets.push(anchor, j, label, label);
        }
        for j in nearest(&features, anchor, other, k) {
            sets.push(anchor, j, label, -label);
        }
    }
    sets
}

/// Draws `count` ordered pairs with distinct indices uniformly at random and
/// routes them by label. Under heavy imbalance the similar-positive set may
/// well come out empty.
pub fn build_pairs_random(train: &LabeledDataset, count: usize, seed: u64) -> PairSets {
    let n = train.n();
    assert!(n >= 2, "need at least two examples to form a pair");
    let labels = train.labels();
    let mut rng = seeding::rng(seed, &[]);
    let mut sets = PairSets::default();
    for _ in 0..count {
        let anchor = rng.random_range(0..n);
        let mut partner = rng.random_range(0..n - 1);
        if partner >= anchor {
            partner += 1;
        }
        sets.push(anchor, partner, labels[anchor], labels[partner]);
    }
    sets
}

//! Dataset-level rebalancing: SMOTE over-sampling, random under-sampling,
//! and synthetic imbalance variants for sweep experiments.

use ndarray::Array2;
use rand::Rng;

use crate::dataset::{LabeledDataset, NEGATIVE, POSITIVE};
use crate::error::{Error, Result};
use crate::seeding;

/// SMOTE neighborhood size (clamped to the number of other minority
/// examples when the class is small).
const SMOTE_NEIGHBORS: usize = 5;

/// Desired minority share for a synthetic imbalance variant.
#[derive(Debug, Clone, Copy)]
pub struct ImbalanceTarget {
    pub minority_fraction: f64,
    /// Variants that would keep fewer minority examples than this are
    /// rejected rather than produced.
    pub min_minority: usize,
}

impl ImbalanceTarget {
    pub fn new(minority_fraction: f64) -> Self {
        Self {
            minority_fraction,
            min_minority: 20,
        }
    }
}

/// Interpolates synthetic minority points until the classes have equal
/// size. Each synthetic point is `x + u·(x' - x)` for a minority example
/// `x`, one of its nearest minority neighbors `x'`, and uniform `u` in
/// [0, 1]; parents are visited round-robin so coverage stays even.
pub fn smote(train: &LabeledDataset, seed: u64) -> Result<LabeledDataset> {
    let pos = train.class_indices(POSITIVE);
    let neg = train.class_indices(NEGATIVE);
    if pos.len() >= neg.len() {
        return Ok(train.clone());
    }
    if pos.len() < 2 {
        return Err(Error::ClassTooSmall {
            label: POSITIVE,
            count: pos.len(),
            required: 2,
        });
    }

    let features = train.features();
    let k = SMOTE_NEIGHBORS.min(pos.len() - 1);
    // Nearest minority neighbors of each minority example.
    let neighbors: Vec<Vec<usize>> = pos
        .iter()
        .map(|&i| {
            let mut scored: Vec<(f64, usize)> = pos
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| {
                    let sq: f64 = features
                        .row(i)
                        .iter()
                        .zip(features.row(j).iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    (sq, j)
                })
                .collect();
            scored.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            scored.truncate(k);
            scored.into_iter().map(|(_, j)| j).collect()
        })
        .collect();

    let missing = neg.len() - pos.len();
    let mut rng = seeding::rng(seed, &[]);
    let dim = train.dim();
    let mut synthetic = Array2::zeros((missing, dim));
    for row in 0..missing {
        let parent_slot = row % pos.len();
        let parent = pos[parent_slot];
        let neighbor = neighbors[parent_slot][rng.random_range(0..k)];
        let u: f64 = rng.random();
        for col in 0..dim {
            let a = features[[parent, col]];
            let b = features[[neighbor, col]];
            synthetic[[row, col]] = a + u * (b - a);
        }
    }
    Ok(train.append_rows(synthetic, POSITIVE))
}

/// Keeps every positive and a uniform subset of the negatives so the
/// classes end up equal; retained rows keep their original order.
pub fn random_under_sample(train: &LabeledDataset, seed: u64) -> Result<LabeledDataset> {
    let pos = train.class_indices(POSITIVE);
    let neg = train.class_indices(NEGATIVE);
    if neg.len() <= pos.len() {
        return Ok(train.clone());
    }
    let keep_neg = sample_subset(&neg, pos.len(), seed);
    let mut keep: Vec<usize> = pos.into_iter().chain(keep_neg).collect();
    keep.sort_unstable();
    Ok(train.select(&keep))
}

fn sample_subset(indices: &[usize], amount: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut shuffled = indices.to_vec();
    let mut rng = seeding::rng(seed, &[]);
    shuffled.shuffle(&mut rng);
    shuffled.truncate(amount);
    shuffled
}

/// Under-samples one class so the minority share matches `target` as
/// closely as an integer count allows. Returns `None` (an explicit
/// rejection, not an error) when the variant would keep fewer than
/// `target.min_minority` minority examples.
pub fn make_imbalance_variant(
    ds: &LabeledDataset,
    target: &ImbalanceTarget,
    seed: u64,
) -> Result<Option<LabeledDataset>> {
    let fraction = target.minority_fraction;
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::UnreachableImbalanceTarget { target: fraction });
    }
    let pos = ds.class_indices(POSITIVE);
    let neg = ds.class_indices(NEGATIVE);
    let current = pos.len() as f64 / ds.n() as f64;

    let (keep_pos, keep_neg) = if fraction > current {
        // Raise the minority share by dropping negatives.
        let keep = nearest_count(|m| pos.len() as f64 / (pos.len() + m) as f64, fraction, neg.len());
        (pos.len(), keep)
    } else if fraction < current {
        // Lower the minority share by dropping positives.
        let keep = nearest_count(|p| p as f64 / (p + neg.len()) as f64, fraction, pos.len());
        (keep, neg.len())
    } else {
        (pos.len(), neg.len())
    };

    if keep_pos == 0 || (keep_neg == 0 && fraction < 1.0) {
        return Err(Error::UnreachableImbalanceTarget { target: fraction });
    }
    if keep_pos < target.min_minority {
        return Ok(None);
    }
    if keep_pos == pos.len() && keep_neg == neg.len() {
        return Ok(Some(ds.clone()));
    }

    let kept_pos = if keep_pos == pos.len() {
        pos
    } else {
        sample_subset(&pos, keep_pos, seeding::mix(seed, &[0]))
    };
    let kept_neg = if keep_neg == neg.len() {
        neg
    } else {
        sample_subset(&neg, keep_neg, seeding::mix(seed, &[1]))
    };
    let mut keep: Vec<usize> = kept_pos.into_iter().chain(kept_neg).collect();
    keep.sort_unstable();
    Ok(Some(ds.select(&keep)))
}

/// The count in [1, cap] whose resulting fraction sits closest to the
/// target; ties prefer the smaller count.
fn nearest_count(fraction_of: impl Fn(usize) -> f64, target: f64, cap: usize) -> usize {
    let mut best = 1;
    let mut best_gap = f64::INFINITY;
    for count in 1..=cap {
        let gap = (fraction_of(count) - target).abs();
        if gap < best_gap {
            best = count;
            best_gap = gap;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn blob_dataset(n_pos: usize, n_neg: usize, seed: u64) -> LabeledDataset {
        let mut rng = seeding::rng(seed, &[]);
        let n = n_pos + n_neg;
        let mut rows = Vec::with_capacity(n * 2);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let (center, label) = if i < n_pos { (0.0, 1) } else { (5.0, -1) };
            rows.push(center + rng.random_range(-1.0..1.0));
            rows.push(rng.random_range(-1.0..1.0));
            labels.push(label);
        }
        let features = Array2::from_shape_vec((n, 2), rows).unwrap();
        LabeledDataset::new(features, labels, None, "blob".into()).unwrap()
    }

    #[test]
    fn smote_balances_class_counts() {
        let ds = blob_dataset(65, 150, 1);
        let balanced = smote(&ds, 2).unwrap();
        assert_eq!(balanced.num_positive(), 150);
        assert_eq!(balanced.num_negative(), 150);
        // Originals preserved as a prefix.
        for (a, b) in ds
            .features()
            .iter()
            .zip(balanced.features().iter())
        {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn smote_on_balanced_input_is_identity() {
        let ds = blob_dataset(40, 40, 3);
        let out = smote(&ds, 4).unwrap();
        assert_eq!(out.n(), ds.n());
        assert_eq!(out.features(), ds.features());
    }

    #[test]
    fn smote_needs_two_minority_points() {
        let ds = blob_dataset(1, 10, 5);
        assert!(smote(&ds, 0).is_err());
    }

    #[test]
    fn smote_with_single_pair_stays_on_the_segment() {
        let features = Array2::from_shape_vec(
            (6, 2),
            vec![
                0.0, 0.0, // minority
                2.0, 0.0, // minority
                9.0, 9.0,
                9.1, 9.0,
                9.2, 9.0,
                9.3, 9.0,
            ],
        )
        .unwrap();
        let ds =
            LabeledDataset::new(features, vec![1, 1, -1, -1, -1, -1], None, "seg".into()).unwrap();
        let out = smote(&ds, 11).unwrap();
        assert_eq!(out.num_positive(), 4);
        for row in out.features().rows().into_iter().skip(6) {
            assert!((0.0..=2.0).contains(&row[0]), "x = {}", row[0]);
            assert_eq!(row[1], 0.0);
        }
    }

    #[test]
    fn rus_keeps_positives_and_subsets_negatives() {
        let ds = blob_dataset(65, 150, 7);
        let out = random_under_sample(&ds, 9).unwrap();
        assert_eq!(out.num_positive(), 65);
        assert_eq!(out.num_negative(), 65);
        // Every retained row appears verbatim in the input.
        let originals: Vec<Vec<u64>> = ds
            .features()
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|v| v.to_bits()).collect())
            .collect();
        for row in out.features().rows() {
            let key: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
            assert!(originals.contains(&key));
        }
    }

    #[test]
    fn rus_on_balanced_input_is_identity() {
        let ds = blob_dataset(30, 30, 2);
        let out = random_under_sample(&ds, 1).unwrap();
        assert_eq!(out.features(), ds.features());
    }

    #[test]
    fn variant_matches_published_spectfheart_arithmetic() {
        // 55 positives, 212 negatives (20.6% minority). Lowering to 10%
        // keeps all negatives and the positive count whose fraction is
        // nearest the target: 24/236 = 10.17% beats 23/235 = 9.79%.
        let ds = blob_dataset(55, 212, 13);
        let out = make_imbalance_variant(&ds, &ImbalanceTarget::new(0.10), 3)
            .unwrap()
            .unwrap();
        assert_eq!(out.num_positive(), 24);
        assert_eq!(out.num_negative(), 212);
    }

    #[test]
    fn variant_below_minimum_minority_is_rejected() {
        // At 5% the best count is 11 positives, under the minimum of 20.
        let ds = blob_dataset(55, 212, 13);
        let out = make_imbalance_variant(&ds, &ImbalanceTarget::new(0.05), 3).unwrap();
        assert!(out.is_none());
    }

    #[test]
    fn variant_at_current_fraction_is_identity() {
        let ds = blob_dataset(100, 100, 17);
        let out = make_imbalance_variant(&ds, &ImbalanceTarget::new(0.5), 1)
            .unwrap()
            .unwrap();
        assert_eq!(out.features(), ds.features());
    }

    #[test]
    fn variant_raises_fraction_by_dropping_negatives() {
        let ds = blob_dataset(50, 150, 19);
        let out = make_imbalance_variant(&ds, &ImbalanceTarget::new(0.5), 1)
            .unwrap()
            .unwrap();
        assert_eq!(out.num_positive(), 50);
        assert_eq!(out.num_negative(), 50);
    }

    #[test]
    fn lower_targets_never_keep_more_minority() {
        let ds = blob_dataset(80, 320, 23);
        let fractions = [0.5, 0.4, 0.3, 0.2, 0.1, 0.05];
        let mut previous = usize::MAX;
        for fraction in fractions {
            let target = ImbalanceTarget {
                minority_fraction: fraction,
                min_minority: 1,
            };
            let out = make_imbalance_variant(&ds, &target, 29)
                .unwrap()
                .unwrap();
            assert!(
                out.num_positive() <= previous,
                "fraction {fraction} kept {} positives after {previous}",
                out.num_positive()
            );
            previous = out.num_positive();
        }
    }
}

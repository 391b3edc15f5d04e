//! Minimization of the pairwise objective over the projection factor.
//!
//! The optimizer is a limited-memory quasi-Newton method (two-loop
//! recursion) with a strong-Wolfe line search, run on `L` flattened to a
//! vector and started from the identity. Because the variable is `L` and
//! not `M = LᵀL`, no projection onto the PSD cone is ever needed: every
//! iterate induces a PSD metric by construction.

use std::collections::VecDeque;
use std::time::Instant;

use ndarray::Array2;
use serde::Serialize;

use crate::dataset::{LabeledDataset, NEGATIVE, POSITIVE};
use crate::error::{Error, Result};
use crate::metric::ProjectionMatrix;
use crate::objective::{gradient, objective, HyperParams, PairStrategy};
use crate::pairs::{build_pairs_knn, build_pairs_random, PairSets};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Stop when the largest absolute gradient entry falls below this.
    pub gradient_tolerance: f64,
    /// Number of curvature pairs kept for the quasi-Newton direction.
    pub history_size: usize,
    /// Stop when an accepted step improves the objective by less than this
    /// relative amount.
    pub relative_objective_tolerance: f64,
    /// Sufficient-decrease constant of the line search.
    pub sufficient_decrease: f64,
    /// Curvature constant of the line search.
    pub curvature: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tolerance: 1e-5,
            history_size: 10,
            relative_objective_tolerance: 1e-9,
            sufficient_decrease: 1e-4,
            curvature: 0.9,
        }
    }
}

/// Why the optimizer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradientTolerance,
    MaxIterations,
    ObjectiveStalled,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub matrix: ProjectionMatrix,
    pub objective: f64,
    pub gradient_max_abs: f64,
    pub iterations: usize,
    pub stop: StopReason,
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Two-loop recursion: returns the quasi-Newton descent direction `-H·g`.
fn two_loop(history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, grad: &[f64]) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let alpha = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y.iter()) {
            *qi -= alpha * yi;
        }
        alphas.push(alpha);
    }
    if let Some((s, y, _)) = history.back() {
        let yy = dot(y, y);
        if yy > 0.0 {
            let gamma = dot(s, y) / yy;
            for qi in q.iter_mut() {
                *qi *= gamma;
            }
        }
    }
    for ((s, y, rho), alpha) in history.iter().zip(alphas.into_iter().rev()) {
        let beta = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s.iter()) {
            *qi += (alpha - beta) * si;
        }
    }
    for qi in q.iter_mut() {
        *qi = -*qi;
    }
    q
}

struct Probe {
    step: f64,
    value: f64,
    grad: Vec<f64>,
    slope: f64,
}

/// Strong-Wolfe line search (bracket then bisection zoom). Returns a step
/// satisfying both conditions when it can, falls back to any
/// sufficient-decrease step, and reports `None` only when no decrease at
/// all was found.
fn line_search<E>(
    mut eval: E,
    value0: f64,
    slope0: f64,
    opts: &SolverOptions,
) -> Option<Probe>
where
    E: FnMut(f64) -> (f64, Vec<f64>, f64),
{
    debug_assert!(slope0 < 0.0);
    let c1 = opts.sufficient_decrease;
    let c2 = opts.curvature;
    let armijo = |step: f64, value: f64| value <= value0 + c1 * step * slope0;
    let max_step = 1e10;

    let probe = |eval: &mut E, step: f64| -> Probe {
        let (value, grad, slope) = eval(step);
        Probe {
            step,
            value,
            grad,
            slope,
        }
    };

    let zoom = |eval: &mut E, mut lo: Probe, mut hi_step: f64, mut hi_value: f64| -> Option<Probe> {
        for _ in 0..40 {
            let mid = 0.5 * (lo.step + hi_step);
            let trial = probe(eval, mid);
            if !trial.value.is_finite() || !armijo(trial.step, trial.value) || trial.value >= lo.value
            {
                hi_step = trial.step;
                hi_value = trial.value;
            } else {
                if trial.slope.abs() <= -c2 * slope0 {
                    return Some(trial);
                }
                if trial.slope * (hi_step - lo.step) >= 0.0 {
                    hi_step = lo.step;
                    hi_value = lo.value;
                }
                lo = trial;
            }
            if (hi_step - lo.step).abs() <= 1e-16 * lo.step.abs().max(1.0) {
                break;
            }
        }
        let _ = hi_value;
        // Curvature never verified: settle for the sufficient-decrease point.
        if lo.step > 0.0 && lo.value < value0 {
            Some(lo)
        } else {
            None
        }
    };

    let mut previous: Option<Probe> = None;
    let mut step = 1.0;
    for round in 0..30 {
        let trial = probe(&mut eval, step);
        let prev_value = previous.as_ref().map_or(value0, |p| p.value);
        if !trial.value.is_finite()
            || !armijo(trial.step, trial.value)
            || (round > 0 && trial.value >= prev_value)
        {
            let lo = previous.unwrap_or(Probe {
                step: 0.0,
                value: value0,
                grad: Vec::new(),
                slope: slope0,
            });
            return zoom(&mut eval, lo, trial.step, trial.value);
        }
        if trial.slope.abs() <= -c2 * slope0 {
            return Some(trial);
        }
        if trial.slope >= 0.0 {
            let hi = previous.map_or(0.0, |p| p.step);
            let hi_value = if hi == 0.0 { value0 } else { prev_value };
            return zoom(&mut eval, trial, hi, hi_value);
        }
        step = (2.0 * trial.step).min(max_step);
        previous = Some(trial);
        if step >= max_step {
            return previous.filter(|p| p.value < value0);
        }
    }
    previous.filter(|p| p.value < value0)
}

/// Minimizes `f` (with gradient `g`) over matrices shaped like `start`.
///
/// Accepted iterates never increase the objective; the best iterate seen is
/// returned even when the line search gives out.
pub fn minimize<F, G>(
    f: F,
    g: G,
    start: &ProjectionMatrix,
    opts: &SolverOptions,
) -> Result<MinimizeOutcome>
where
    F: Fn(&ProjectionMatrix) -> f64,
    G: Fn(&ProjectionMatrix) -> Array2<f64>,
{
    let shape = (start.rank(), start.dim());
    let as_matrix = |flat: &[f64]| -> ProjectionMatrix {
        ProjectionMatrix::new(
            Array2::from_shape_vec(shape, flat.to_vec()).expect("shape is fixed"),
        )
        .expect("iterates are finite by construction")
    };

    let mut x: Vec<f64> = start.entries().iter().copied().collect();
    let mut value = f(&as_matrix(&x));
    if !value.is_finite() {
        return Err(Error::NonFinite { iteration: 0 });
    }
    let mut grad: Vec<f64> = g(&as_matrix(&x)).into_iter().collect();
    if grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { iteration: 0 });
    }

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;

    for iteration in 0..opts.max_iterations {
        if max_abs(&grad) < opts.gradient_tolerance {
            stop = StopReason::GradientTolerance;
            break;
        }
        iterations = iteration + 1;

        let mut direction = two_loop(&history, &grad);
        let mut slope = dot(&direction, &grad);
        if slope >= 0.0 {
            // Not a descent direction; restart from steepest descent.
            history.clear();
            direction = grad.iter().map(|v| -v).collect();
            slope = dot(&direction, &grad);
        }

        let eval = |step: f64| {
            let trial: Vec<f64> = x
                .iter()
                .zip(direction.iter())
                .map(|(xi, di)| xi + step * di)
                .collect();
            let m = as_matrix(&trial);
            let v = f(&m);
            let gr: Vec<f64> = g(&m).into_iter().collect();
            let sl = dot(&gr, &direction);
            (v, gr, sl)
        };

        let Some(accepted) = line_search(eval, value, slope, opts) else {
            stop = StopReason::LineSearchFailed;
            break;
        };
        if !accepted.value.is_finite() || accepted.grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { iteration });
        }

        let new_x: Vec<f64> = x
            .iter()
            .zip(direction.iter())
            .map(|(xi, di)| xi + accepted.step * di)
            .collect();
        let s: Vec<f64> = new_x.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = accepted
            .grad
            .iter()
            .zip(grad.iter())
            .map(|(a, b)| a - b)
            .collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if history.len() == opts.history_size {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        let improvement = value - accepted.value;
        x = new_x;
        value = accepted.value;
        grad = accepted.grad;

        if improvement <= opts.relative_objective_tolerance * value.abs().max(1.0) {
            stop = StopReason::ObjectiveStalled;
            break;
        }
    }

    Ok(MinimizeOutcome {
        matrix: as_matrix(&x),
        objective: value,
        gradient_max_abs: max_abs(&grad),
        iterations,
        stop,
    })
}

/// A fitted metric plus solver telemetry.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub projection: ProjectionMatrix,
    pub objective: f64,
    pub gradient_max_abs: f64,
    pub iterations: usize,
    pub stop: StopReason,
    pub pair_count: usize,
    pub wall_seconds: f64,
}

impl FitOutcome {
    /// One JSON line of telemetry, for verbose experiment logs.
    pub fn telemetry_json(&self, context: &str) -> String {
        serde_json::json!({
            "context": context,
            "iterations": self.iterations,
            "objective": self.objective,
            "gradient_max_abs": self.gradient_max_abs,
            "stop": self.stop,
            "pairs": self.pair_count,
            "wall_seconds": self.wall_seconds,
        })
        .to_string()
    }
}

/// Builds pair sets per the strategy in `hp`, then minimizes the objective
/// from the identity. The seed only matters for the random pair strategy.
pub fn fit_iml(
    train: &LabeledDataset,
    hp: &HyperParams,
    opts: &SolverOptions,
    seed: u64,
) -> Result<FitOutcome> {
    hp.validate()?;
    for (label, count) in [
        (POSITIVE, train.num_positive()),
        (NEGATIVE, train.num_negative()),
    ] {
        if count == 0 {
            return Err(Error::ClassTooSmall {
                label,
                count,
                required: 1,
            });
        }
    }
    let pairs = match hp.pair_strategy {
        PairStrategy::Knn => build_pairs_knn(train, hp.k),
        PairStrategy::Random => build_pairs_random(train, 2 * train.n() * hp.k, seed),
    };
    fit_with_pairs(train, &pairs, hp, opts)
}

/// Minimizes the objective for an already-built pair collection.
pub fn fit_with_pairs(
    train: &LabeledDataset,
    pairs: &PairSets,
    hp: &HyperParams,
    opts: &SolverOptions,
) -> Result<FitOutcome> {
    let started = Instant::now();
    let start = ProjectionMatrix::identity(train.dim());
    let outcome = minimize(
        |l| objective(l, pairs, train, hp),
        |l| gradient(l, pairs, train, hp),
        &start,
        opts,
    )?;
    Ok(FitOutcome {
        projection: outcome.matrix,
        objective: outcome.objective,
        gradient_max_abs: outcome.gradient_max_abs,
        iterations: outcome.iterations,
        stop: outcome.stop,
        pair_count: pairs.total(),
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::WeightingMode;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn quadratic_converges_to_target() {
        let target = array![[3.0, -1.0], [0.5, 2.0]];
        let f = |l: &ProjectionMatrix| {
            l.entries()
                .iter()
                .zip(target.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        };
        let g = |l: &ProjectionMatrix| (&l.entries() - &target) * 2.0;
        let start = ProjectionMatrix::identity(2);
        let outcome = minimize(f, g, &start, &SolverOptions::default()).unwrap();
        assert_eq!(outcome.stop, StopReason::GradientTolerance);
        for (a, b) in outcome.matrix.entries().iter().zip(target.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-5);
        }
    }

    fn two_class_toy(seed: u64, n: usize) -> LabeledDataset {
        // Two Gaussian-ish blobs, one per class.
        let mut rng = crate::seeding::rng(seed, &[]);
        use rand::Rng;
        let mut rows = Vec::with_capacity(n * 2);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let (center, label) = if i % 2 == 0 { (0.0, 1) } else { (3.0, -1) };
            rows.push(center + rng.random_range(-1.0..1.0));
            rows.push(rng.random_range(-1.0..1.0));
            labels.push(label);
        }
        let features = Array2::from_shape_vec((n, 2), rows).unwrap();
        LabeledDataset::new(features, labels, None, "toy".into()).unwrap()
    }

    use ndarray::Array2;

    #[test]
    fn stationary_start_returns_identity_immediately() {
        let ds = two_class_toy(1, 20);
        let pairs = PairSets::default();
        let hp = HyperParams {
            lambda: 1.0,
            ..HyperParams::default()
        };
        let outcome = fit_with_pairs(&ds, &pairs, &hp, &SolverOptions::default()).unwrap();
        assert_eq!(outcome.iterations, 0);
        assert_eq!(outcome.stop, StopReason::GradientTolerance);
        assert_eq!(
            outcome.projection.entries(),
            ProjectionMatrix::identity(2).entries()
        );
    }

    #[test]
    fn objective_decreases_on_toy_problem() {
        let ds = two_class_toy(7, 40);
        let hp = HyperParams {
            margin: 1.0,
            lambda: 0.1,
            tradeoff: 0.5,
            ..HyperParams::default()
        };
        let pairs = build_pairs_knn(&ds, hp.k);
        let initial = objective(&ProjectionMatrix::identity(2), &pairs, &ds, &hp);
        let outcome = fit_with_pairs(&ds, &pairs, &hp, &SolverOptions::default()).unwrap();
        assert!(
            outcome.objective < initial,
            "final {} vs initial {initial}",
            outcome.objective
        );
    }

    #[test]
    fn huge_regularizer_pins_l_to_identity() {
        let ds = two_class_toy(3, 30);
        let hp = HyperParams {
            lambda: 1e6,
            ..HyperParams::default()
        };
        let outcome = fit_iml(&ds, &hp, &SolverOptions::default(), 0).unwrap();
        let deviation: f64 = outcome
            .projection
            .entries()
            .iter()
            .zip(ProjectionMatrix::identity(2).entries().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(deviation < 1e-2, "max deviation {deviation}");
    }

    #[test]
    fn pure_similar_tradeoff_ignores_dissimilar_pairs() {
        let ds = two_class_toy(11, 30);
        let hp = HyperParams {
            tradeoff: 1.0,
            lambda: 0.05,
            ..HyperParams::default()
        };
        let pairs = build_pairs_knn(&ds, hp.k);
        let mut corrupted = pairs.clone();
        corrupted.dis_pos.truncate(2);
        corrupted.dis_neg.clear();
        let a = fit_with_pairs(&ds, &pairs, &hp, &SolverOptions::default()).unwrap();
        let b = fit_with_pairs(&ds, &corrupted, &hp, &SolverOptions::default()).unwrap();
        assert_eq!(a.projection.entries(), b.projection.entries());
    }

    #[test]
    fn fits_are_bit_deterministic() {
        let ds = two_class_toy(5, 30);
        let hp = HyperParams {
            pair_strategy: PairStrategy::Random,
            ..HyperParams::default()
        };
        let a = fit_iml(&ds, &hp, &SolverOptions::default(), 9).unwrap();
        let b = fit_iml(&ds, &hp, &SolverOptions::default(), 9).unwrap();
        assert_eq!(a.projection.entries(), b.projection.entries());
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }

    #[test]
    fn separable_classes_keep_or_improve_f1() {
        use crate::dataset::{normalize_zscore, stratified_split, SplitSpec};
        use crate::eval::{confusion, f1};
        use crate::knn::KnnModel;

        let ds = two_class_toy(13, 80);
        let spec = SplitSpec::new(0.5, 1, 21).unwrap();
        let (train, test) = stratified_split(&ds, &spec, 0).unwrap();
        let (train, scaler) = normalize_zscore(&train);
        let test = scaler.transform_dataset(&test);

        let hp = HyperParams {
            margin: 1.0,
            lambda: 0.1,
            tradeoff: 0.5,
            ..HyperParams::default()
        };
        let fitted = fit_iml(&train, &hp, &SolverOptions::default(), 0).unwrap();

        let score = |l: ProjectionMatrix| {
            let model = KnnModel::fit(l, &train, 3).unwrap();
            let predictions = model.predict(test.features());
            f1(&confusion(test.labels(), &predictions).unwrap())
        };
        let identity_f1 = score(ProjectionMatrix::identity(2));
        let learned_f1 = score(fitted.projection);
        assert!(
            learned_f1 >= identity_f1 - 1e-12,
            "learned {learned_f1} vs identity {identity_f1}"
        );
    }

    #[test]
    fn weighting_modes_reach_different_optima() {
        let ds = two_class_toy(17, 24);
        let base = HyperParams {
            lambda: 0.01,
            ..HyperParams::default()
        };
        let unweighted = HyperParams {
            weighting: WeightingMode::Unweighted,
            ..base
        };
        let a = fit_iml(&ds, &base, &SolverOptions::default(), 0).unwrap();
        let b = fit_iml(&ds, &unweighted, &SolverOptions::default(), 0).unwrap();
        assert_ne!(a.projection.entries(), b.projection.entries());
    }
}

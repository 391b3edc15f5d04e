//! Shared test fixtures: synthetic Gaussian classification tasks.

use iml_core::dataset::LabeledDataset;
use iml_core::seeding;
use ndarray::Array2;
use rand_distr::{Distribution, Normal};

/// Principal-axis standard deviations of one class, plus the rotation of
/// those axes into feature space.
#[derive(Debug, Clone, Copy)]
pub struct ClassShape {
    pub std_signal: f64,
    pub std_noise: f64,
    pub angle: f64,
}

/// A two-class Gaussian task in 2-d. Classes sit `separation` apart along
/// the signal axis; each class has its own elliptical shape, rotated so
/// per-coordinate standardization cannot undo it. With a large shared or
/// minority-specific noise axis this reproduces the imbalance pathology:
/// sparse positives lose their neighborhoods in the noise direction.
#[derive(Debug, Clone, Copy)]
pub struct GaussianTask {
    pub n: usize,
    pub minority_fraction: f64,
    pub separation: f64,
    pub minority: ClassShape,
    pub majority: ClassShape,
}

impl GaussianTask {
    /// Shared-shape task: both classes carry the same rotated noise axis.
    pub fn shared_noise(
        n: usize,
        minority_fraction: f64,
        separation: f64,
        noise_scale: f64,
        angle: f64,
    ) -> Self {
        let shape = ClassShape {
            std_signal: 1.0,
            std_noise: noise_scale,
            angle,
        };
        Self {
            n,
            minority_fraction,
            separation,
            minority: shape,
            majority: shape,
        }
    }

    pub fn sample(&self, seed: u64) -> LabeledDataset {
        let mut rng = seeding::rng(seed, &[]);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let minority = ((self.n as f64) * self.minority_fraction).round() as usize;
        let mut rows = Vec::with_capacity(self.n * 2);
        let mut labels = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let label: i8 = if i < minority { 1 } else { -1 };
            let (shape, center) = if label == 1 {
                (&self.minority, self.separation)
            } else {
                (&self.majority, 0.0)
            };
            let along: f64 = center + shape.std_signal * normal.sample(&mut rng);
            let across: f64 = shape.std_noise * normal.sample(&mut rng);
            let (sin, cos) = shape.angle.sin_cos();
            rows.push(along * cos - across * sin);
            rows.push(along * sin + across * cos);
            labels.push(label);
        }
        let features = Array2::from_shape_vec((self.n, 2), rows).unwrap();
        LabeledDataset::new(features, labels, None, "gaussian".into()).unwrap()
    }
}

/// Axis-aligned Gaussian task in any dimension with class-conditional
/// spreads. Standardization rescales each axis globally, so a class-specific
/// large-variance axis survives it and only a learned metric can put the
/// sparse class back together.
#[derive(Debug, Clone)]
pub struct AxisTask {
    pub n: usize,
    pub minority_fraction: f64,
    pub minority_center: Vec<f64>,
    pub minority_stds: Vec<f64>,
    pub majority_stds: Vec<f64>,
}

impl AxisTask {
    pub fn sample(&self, seed: u64) -> LabeledDataset {
        let dim = self.minority_stds.len();
        assert_eq!(self.majority_stds.len(), dim);
        assert_eq!(self.minority_center.len(), dim);
        let mut rng = seeding::rng(seed, &[]);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let minority = ((self.n as f64) * self.minority_fraction).round() as usize;
        let mut rows = Vec::with_capacity(self.n * dim);
        let mut labels = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let label: i8 = if i < minority { 1 } else { -1 };
            for axis in 0..dim {
                let (center, std) = if label == 1 {
                    (self.minority_center[axis], self.minority_stds[axis])
                } else {
                    (0.0, self.majority_stds[axis])
                };
                rows.push(center + std * normal.sample(&mut rng));
            }
            labels.push(label);
        }
        let features = Array2::from_shape_vec((self.n, dim), rows).unwrap();
        LabeledDataset::new(features, labels, None, "axis-gaussian".into()).unwrap()
    }
}

/// A cluster: center plus per-axis stds.
#[derive(Debug, Clone)]
pub struct Cluster {
    pub center: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Mixture-of-clusters task: each class is a union of Gaussian clusters
/// visited round-robin. Captures the heterogeneous, multimodal structure of
/// real tabular data that single-blob tasks miss.
#[derive(Debug, Clone)]
pub struct MixtureTask {
    pub n: usize,
    pub minority_fraction: f64,
    pub minority: Vec<Cluster>,
    pub majority: Vec<Cluster>,
}

impl MixtureTask {
    pub fn sample(&self, seed: u64) -> LabeledDataset {
        let dim = self.minority[0].center.len();
        let mut rng = seeding::rng(seed, &[]);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let minority = ((self.n as f64) * self.minority_fraction).round() as usize;
        let mut rows = Vec::with_capacity(self.n * dim);
        let mut labels = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let (label, clusters, index): (i8, &[Cluster], usize) = if i < minority {
                (1, &self.minority, i)
            } else {
                (-1, &self.majority, i - minority)
            };
            let cluster = &clusters[index % clusters.len()];
            for axis in 0..dim {
                rows.push(cluster.center[axis] + cluster.stds[axis] * normal.sample(&mut rng));
            }
            labels.push(label);
        }
        let features = Array2::from_shape_vec((self.n, dim), rows).unwrap();
        LabeledDataset::new(features, labels, None, "mixture".into()).unwrap()
    }
}

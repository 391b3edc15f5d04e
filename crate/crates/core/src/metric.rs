//! The learned metric, represented by its projection factor.
//!
//! A Mahalanobis distance `d²(x, x') = (x-x')ᵀ M (x-x')` with `M` positive
//! semidefinite is stored here through the factorization `M = LᵀL`. Working
//! with `L` directly keeps `M` PSD at every step without ever projecting
//! onto the PSD cone: distances are plain squared Euclidean distances after
//! mapping `x ↦ Lx`.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// The `r×d` factor `L` of `M = LᵀL`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    entries: Array2<f64>,
}

impl ProjectionMatrix {
    /// Wraps an `r×d` matrix. All entries must be finite.
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        for ((row, column), v) in entries.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature { row, column });
            }
        }
        Ok(Self { entries })
    }

    /// The identity factor: distances reduce to plain Euclidean.
    pub fn identity(dim: usize) -> Self {
        Self {
            entries: Array2::eye(dim),
        }
    }

    /// Rank bound `r` (number of rows).
    pub fn rank(&self) -> usize {
        self.entries.nrows()
    }

    /// Input dimension `d` (number of columns).
    pub fn dim(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> ArrayView2<'_, f64> {
        self.entries.view()
    }

    /// The induced PSD matrix `M = LᵀL`.
    pub fn gram(&self) -> Array2<f64> {
        self.entries.t().dot(&self.entries)
    }

    /// Squared learned distance `‖L(x - x')‖²`.
    ///
    /// Panics if either vector's length differs from `d`.
    pub fn sq_distance(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
        assert_eq!(x.len(), self.dim(), "x has wrong dimension");
        assert_eq!(y.len(), self.dim(), "x' has wrong dimension");
        let mut total = 0.0;
        for row in self.entries.rows() {
            let mut coord = 0.0;
            for ((&l, &a), &b) in row.iter().zip(x.iter()).zip(y.iter()) {
                coord += l * (a - b);
            }
            total += coord * coord;
        }
        total
    }

    /// Maps every row of `xs` through `L`, returning an `n×r` matrix.
    ///
    /// Squared Euclidean distances between projected rows equal
    /// [`sq_distance`](Self::sq_distance) on the original rows.
    ///
    /// Panics if `xs` has a column count other than `d`.
    pub fn project(&self, xs: ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(xs.ncols(), self.dim(), "input has wrong dimension");
        xs.dot(&self.entries.t())
    }

    /// Writes the matrix as row-major CSV with round-trip float formatting.
    pub fn to_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for row in self.entries.rows() {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                let _ = write!(out, "{v}");
                first = false;
            }
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Reads a matrix previously written by [`to_csv`](Self::to_csv).
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut row = Vec::new();
            for (j, cell) in line.split(',').enumerate() {
                let v: f64 = cell.trim().parse().map_err(|_| Error::NonNumericCell {
                    path: path.to_path_buf(),
                    row: i,
                    column: j,
                    value: cell.to_string(),
                })?;
                row.push(v);
            }
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(Error::RaggedRow {
                        path: path.to_path_buf(),
                        row: i,
                        found: row.len(),
                        expected: first.len(),
                    });
                }
            }
            rows.push(row);
        }
        let r = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let entries = Array2::from_shape_vec((r, d), flat)
            .expect("row-major reshape of uniform rows cannot fail");
        Self::new(entries)
    }
}

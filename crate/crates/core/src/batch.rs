//! Dense batch representation and the geometric metrics shared by every
//! experiment: column means, pairwise angles, numerical rank and random 2-D
//! projections.
//!
//! A batch is a `d x n` matrix whose columns are datapoint representations and
//! whose rows are neurons. Storage is column-major so that a datapoint is a
//! contiguous slice.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::seed::SeedSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    data: DMatrix<f64>,
}

/// Threshold rule for [`numerical_rank`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RankTol {
    /// `max(d, n) * eps * sigma_max`.
    #[default]
    Auto,
    Absolute(f64),
}

impl RankTol {
    pub fn resolve(self, rows: usize, cols: usize, sigma_max: f64) -> f64 {
        match self {
            RankTol::Auto => rows.max(cols) as f64 * f64::EPSILON * sigma_max,
            RankTol::Absolute(t) => t,
        }
    }
}

impl Batch {
    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidParameter(format!(
                "batch must be non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("batch contains non-finite entries".into()));
        }
        Ok(Self { data })
    }

    /// Builds a `rows x cols` batch from row-major values.
    pub fn from_row_major(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values for a {rows}x{cols} batch",
                values.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(rows, cols, values))
    }

    /// Builds a batch whose columns are the given datapoints.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(Error::InvalidParameter("no columns".into()));
        };
        let d = first.len();
        if columns.iter().any(|c| c.len() != d) {
            return Err(Error::Shape("columns have differing lengths".into()));
        }
        let flat: Vec<f64> = columns.iter().flatten().copied().collect();
        Self::from_matrix(DMatrix::from_vec(d, columns.len(), flat))
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::from_matrix(DMatrix::zeros(rows, cols))
    }

    /// Number of neurons `d`.
    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    /// Batch size `n`.
    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[(row, col)]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let d = self.rows();
        &self.data.as_slice()[j * d..(j + 1) * d]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.data.row(i).iter().copied().collect()
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        self.column(j).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn column_norms(&self) -> Vec<f64> {
        (0..self.cols()).map(|j| self.column_norm(j)).collect()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_matrix(&self.data * factor)
    }

    /// `self * rhs` as batches (`self` acting as a weight matrix).
    pub fn matmul(&self, rhs: &Batch) -> Result<Self> {
        if self.cols() != rhs.rows() {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Self::from_matrix(&self.data * &rhs.data)
    }

    /// Gram matrix `X^T X` of the columns.
    pub fn gram(&self) -> DMatrix<f64> {
        self.data.transpose() * &self.data
    }

    /// Sum of the columns.
    pub fn column_sum(&self) -> Vec<f64> {
        (0..self.rows()).map(|i| self.data.row(i).sum()).collect()
    }
}

/// `rows x cols` matrix of i.i.d. `N(0, variance)` entries.
pub fn gaussian_matrix(rows: usize, cols: usize, variance: f64, seed: SeedSpec) -> Result<Batch> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::InvalidParameter(format!("variance must be positive, got {variance}")));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter(format!("shape {rows}x{cols} is empty")));
    }
    let sd = variance.sqrt();
    let mut rng = seed.rng();
    // Filled row by row so a prefix of rows is independent of the total count.
    let mut values = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let z: f64 = rng.sample(StandardNormal);
        values.push(sd * z);
    }
    Batch::from_row_major(rows, cols, &values)
}

/// Per-row mean across the `n` columns.
pub fn column_mean(b: &Batch) -> Vec<f64> {
    let n = b.cols() as f64;
    b.column_sum().into_iter().map(|s| s / n).collect()
}

/// Angle in `[0, pi]` between columns `i` and `j`.
pub fn pairwise_angle(b: &Batch, i: usize, j: usize) -> Result<f64> {
    for idx in [i, j] {
        if idx >= b.cols() {
            return Err(Error::InvalidParameter(format!("column {idx} out of range")));
        }
    }
    angle_between(b.column(i), b.column(j)).map_err(|bad| Error::DegenerateColumn {
        index: if bad == 0 { i } else { j },
    })
}

/// Angle between two vectors; `Err(0)` / `Err(1)` names the zero-norm argument.
pub(crate) fn angle_between(x: &[f64], y: &[f64]) -> std::result::Result<f64, usize> {
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nx == 0.0 {
        return Err(0);
    }
    if ny == 0.0 {
        return Err(1);
    }
    if std::ptr::eq(x, y) || x == y {
        return Ok(0.0);
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok(clamped_acos(dot / (nx * ny)))
}

pub(crate) fn clamped_acos(cosine: f64) -> f64 {
    cosine.clamp(-1.0, 1.0).acos()
}

/// Singular values in descending order.
pub fn singular_values(b: &Batch) -> Vec<f64> {
    let mut sv: Vec<f64> = b.matrix().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values strictly above the tolerance.
pub fn numerical_rank(b: &Batch, tol: RankTol) -> usize {
    numerical_rank_with_tol(b, tol).0
}

/// Rank together with the resolved tolerance.
pub fn numerical_rank_with_tol(b: &Batch, tol: RankTol) -> (usize, f64) {
    let sv = singular_values(b);
    let smax = sv.first().copied().unwrap_or(0.0);
    let t = tol.resolve(b.rows(), b.cols(), smax);
    (sv.iter().filter(|&&s| s > t).count(), t)
}

/// Projects every column onto a random plane: `G b` with `G` a `2 x d`
/// matrix of `N(0, 1/d)` entries.
pub fn random_projection_2d(b: &Batch, seed: SeedSpec) -> Result<Batch> {
    let d = b.rows();
    if d < 2 {
        return Err(Error::InvalidParameter(format!("projection needs d >= 2, got {d}")));
    }
    let g = gaussian_matrix(2, d, 1.0 / d as f64, seed)?;
    g.matmul(b)
}

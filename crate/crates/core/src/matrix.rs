//! Validated interaction matrices.
//!
//! Matrices are stored in the transposed form `W^T`, the form that acts on
//! inclination vectors: row `l` of `W^T` holds the weights `w_{l1,l}` of every
//! vertex `l1` influencing `l`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on row sums of `W^T` during validation. Input data may be
/// decimal-rounded, so this is looser than the spectral tolerances.
pub const VALIDATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `W^T 1 = 1`.
    Stochastic,
    /// `W^T 1 = d` with `0 <= d_l <= 1` and at least one `d_l < 1`.
    Generalized,
}

/// On-disk matrix description: rows are rows of `W^T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub w_transpose: Vec<Vec<f64>>,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    wt: DMatrix<f64>,
    mode: Mode,
    d: Vec<f64>,
    // nonzero (column, weight) pairs of each row of W^T
    rows: Vec<Vec<(usize, f64)>>,
}

impl InteractionMatrix {
    /// Validates `rows` as the rows of `W^T`.
    pub fn from_transpose_rows(rows: &[Vec<f64>], mode: Mode) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::TooSmall(n));
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NotSquare { row, len: r.len(), expected: n });
            }
            for (col, &value) in r.iter().enumerate() {
                if !value.is_finite() {
                    return Err(Error::NotFinite { row, col });
                }
                if value < 0.0 {
                    return Err(Error::NegativeEntry { row, col, value });
                }
            }
        }
        let d: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
        match mode {
            Mode::Stochastic => {
                if let Some((row, &sum)) =
                    d.iter().enumerate().find(|(_, s)| (**s - 1.0).abs() > VALIDATION_TOL)
                {
                    return Err(Error::NotStochastic { row, sum });
                }
            }
            Mode::Generalized => {
                if let Some((row, &sum)) =
                    d.iter().enumerate().find(|(_, s)| **s > 1.0 + VALIDATION_TOL)
                {
                    return Err(Error::RowSumExceedsOne { row, sum });
                }
                if d.iter().all(|s| *s >= 1.0 - VALIDATION_TOL) {
                    return Err(Error::NoForcingInput);
                }
            }
        }
        let wt = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let sparse = rows
            .iter()
            .map(|r| r.iter().copied().enumerate().filter(|(_, w)| *w > 0.0).collect())
            .collect();
        Ok(Self { wt, mode, d, rows: sparse })
    }

    pub fn from_file(file: &MatrixFile) -> Result<Self> {
        if file.n != file.w_transpose.len() {
            return Err(Error::SizeMismatch { declared: file.n, actual: file.w_transpose.len() });
        }
        Self::from_transpose_rows(&file.w_transpose, file.mode)
    }

    pub fn to_file(&self) -> MatrixFile {
        MatrixFile { n: self.n(), w_transpose: self.transpose_rows(), mode: self.mode }
    }

    /// Mean-field interaction `W = (1/N) 1 1^T`.
    pub fn mean_field(n: usize) -> Result<Self> {
        let rows = vec![vec![1.0 / n as f64; n]; n];
        Self::from_transpose_rows(&rows, Mode::Stochastic)
    }

    /// Directed cycle: every vertex `l` listens only to `l + 1 (mod n)`.
    pub fn directed_cycle(n: usize) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|l| {
                let mut r = vec![0.0; n];
                r[(l + 1) % n] = 1.0;
                r
            })
            .collect();
        Self::from_transpose_rows(&rows, Mode::Stochastic)
    }

    pub fn n(&self) -> usize {
        self.wt.nrows()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Row sums of `W^T` (all one in stochastic mode).
    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// The matrix `W^T`.
    pub fn wt(&self) -> &DMatrix<f64> {
        &self.wt
    }

    /// Influence weight `w_{l1,l2}` of `l1` on `l2`.
    pub fn weight(&self, l1: usize, l2: usize) -> f64 {
        self.wt[(l2, l1)]
    }

    pub fn transpose_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.wt.row(i).iter().copied().collect()).collect()
    }

    /// Nonzero entries `(l2, [W^T]_{l1,l2})` of row `l1` of `W^T`.
    pub fn row_support(&self, l1: usize) -> &[(usize, f64)] {
        &self.rows[l1]
    }

    /// Out-neighbours along `W^T` edges: `l1 -> l2` whenever `[W^T]_{l1,l2} > 0`.
    pub fn successors(&self, l1: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows[l1].iter().map(|(l2, _)| *l2)
    }

    /// Writes `W^T z` into `out`.
    pub fn apply_into(&self, z: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|(j, w)| w * z[*j]).sum();
        }
    }

    /// `W^T z`.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.apply_into(z, &mut out);
        out
    }

    /// `x^T W^T`.
    pub fn apply_left(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (i, row) in self.rows.iter().enumerate() {
            for (j, w) in row {
                out[*j] += x[i] * w;
            }
        }
        out
    }

    /// Block of `W^T` with the given row and column vertices, in order.
    pub fn sub_transpose(&self, rows: &[usize], cols: &[usize]) -> Vec<Vec<f64>> {
        rows.iter().map(|&i| cols.iter().map(|&j| self.wt[(i, j)]).collect()).collect()
    }
}

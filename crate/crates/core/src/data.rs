//! Row-major sample container shared by every module.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An `n x d` table of real-valued examples, stored row-major.
///
/// All entries are validated to be finite on construction, so downstream
/// numeric code never has to re-check.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix<S> {
    data: Vec<S>,
    n: usize,
    d: usize,
}

impl<S: Scalar> DataMatrix<S> {
    /// Builds a matrix from a flat row-major buffer.
    pub fn new(n: usize, d: usize, data: Vec<S>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if data.len() != n * d {
            return Err(Error::InvalidParameter(format!(
                "buffer length {} does not match {n} x {d}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteData);
        }
        Ok(Self { data, n, d })
    }

    /// Builds a matrix from row slices, which must all have equal length.
    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let d = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), d.max(1), data)
    }

    /// Number of rows (examples).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of columns (input dimension).
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.d + j]
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[S]> {
        self.data.chunks_exact(self.d)
    }

    /// New matrix holding the given rows, in the given order.
    pub fn rows_subset(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self { data, n: idx.len(), d: self.d }
    }

    /// Vertically stacks two matrices of equal dimension.
    pub fn concat_rows(&self, other: &Self) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: other.d });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self { data, n: self.n + other.n, d: self.d })
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }
}

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Dense row-major feature matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    names: Option<Vec<String>>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid!("feature matrix must be at least 1x1, got {rows}x{cols}"));
        }
        if values.len() != rows * cols {
            return Err(invalid!("feature matrix {rows}x{cols} needs {} values, got {}", rows * cols, values.len()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid!("non-finite feature at row {}, column {}", pos / cols, pos % cols));
        }
        Ok(Self { rows, cols, values, names: None })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(invalid!("row {bad} has {} values, expected {cols}", rows[bad].len()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.cols {
            return Err(invalid!("{} column names for {} columns", names.len(), self.cols));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.rows) {
            return Err(invalid!("row index {bad} out of range for {} rows", self.rows));
        }
        let mut values = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        let mut out = Self::new(rows.len(), self.cols, values)?;
        out.names = self.names.clone();
        Ok(out)
    }
}

/// Regression targets with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetVector(Vec<f64>);

impl TargetVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid!("non-finite target at index {pos}"));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_bad_shapes_and_nan() {
        assert!(FeatureMatrix::new(0, 1, vec![]).is_err());
        assert!(FeatureMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(FeatureMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(TargetVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn select_rows_keeps_order() {
        let x = FeatureMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 5.0]]).unwrap();
        let s = x.select_rows(&[2, 0]).unwrap();
        assert_eq!(s.values(), &[4.0, 5.0, 0.0, 1.0]);
        assert!(x.select_rows(&[3]).is_err());
    }
}

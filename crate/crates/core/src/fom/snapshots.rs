use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{norm2, DenseMatrix};

const FLUSH_BELOW: f64 = 1.4916681462400413e-154;

/// Snapshots of one field, one column per sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    field: String,
    n_dofs: usize,
    columns: Vec<Vec<f64>>,
    times: Vec<f64>,
}

impl SnapshotSet {
    pub fn new(field: impl Into<String>, n_dofs: usize) -> Self {
        Self {
            field: field.into(),
            n_dofs,
            columns: Vec::new(),
            times: Vec::new(),
        }
    }

    /// Appends a sample; times must increase strictly. Entries below
    /// `sqrt(f64::MIN_POSITIVE)` in magnitude are stored as zero so that
    /// products of two entries never underflow into subnormals.
    pub fn push(&mut self, time: f64, mut values: Vec<f64>) -> Result<()> {
        if values.len() != self.n_dofs {
            return Err(Error::DimensionMismatch {
                context: "snapshot length",
                expected: self.n_dofs,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("snapshot"));
        }
        if let Some(&last) = self.times.last() {
            if !(time > last) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "snapshot time {time} does not follow {last}"
                )));
            }
        }
        for v in &mut values {
            if v.abs() < FLUSH_BELOW {
                *v = 0.0;
            }
        }
        self.times.push(time);
        self.columns.push(values);
        Ok(())
    }

    pub fn field(&self) -> &str {
        &self.field
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.columns.last().map(Vec::as_slice)
    }

    /// Keeps every `stride`-th column, starting with the first.
    pub fn subsample(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        Self {
            field: self.field.clone(),
            n_dofs: self.n_dofs,
            columns: self.columns.iter().step_by(stride).cloned().collect(),
            times: self.times.iter().step_by(stride).copied().collect(),
        }
    }

    /// `N_h x N_s` matrix.
    pub fn to_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_columns(self.n_dofs, &self.columns).expect("columns have snapshot length")
    }

    pub fn max_column_norm(&self) -> f64 {
        self.columns.iter().map(|c| norm2(c)).fold(0.0, f64::max)
    }
}

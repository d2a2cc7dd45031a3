use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Read access to per-cell values, either on the full mesh or on a local
/// subset of cells.
pub trait CellData {
    fn components(&self) -> usize;
    /// `None` when the cell is not stored.
    fn try_value(&self, cell: usize, comp: usize) -> Option<f64>;

    #[inline]
    fn value(&self, cell: usize, comp: usize) -> Result<f64> {
        self.try_value(cell, comp).ok_or(Error::MissingValue(cell))
    }
}

/// Cell-centred field over the whole mesh, component-blocked: all x values,
/// then all y values.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    components: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn new(components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 || values.len() % components != 0 {
            return Err(Error::DimensionMismatch {
                context: "field storage",
                expected: components,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field construction"));
        }
        Ok(Self { components, values })
    }

    pub fn zeros(n_cells: usize, components: usize) -> Self {
        Self {
            components,
            values: vec![0.0; n_cells * components],
        }
    }

    pub fn uniform(n_cells: usize, value: &[f64]) -> Self {
        let mut values = Vec::with_capacity(n_cells * value.len());
        for &v in value {
            values.extend(core::iter::repeat_n(v, n_cells));
        }
        Self {
            components: value.len(),
            values,
        }
    }

    pub fn scalar(values: Vec<f64>) -> Self {
        Self {
            components: 1,
            values,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.values.len() / self.components
    }

    pub fn n_components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.n_cells();
        &self.values[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn get(&self, cell: usize, comp: usize) -> f64 {
        self.values[comp * self.n_cells() + cell]
    }

    #[inline]
    pub fn set(&mut self, cell: usize, comp: usize, v: f64) {
        let n = self.n_cells();
        self.values[comp * n + cell] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl CellData for Field {
    fn components(&self) -> usize {
        self.components
    }

    #[inline]
    fn try_value(&self, cell: usize, comp: usize) -> Option<f64> {
        let n = self.n_cells();
        if cell < n && comp < self.components {
            Some(self.values[comp * n + cell])
        } else {
            None
        }
    }
}

/// Values on a sorted subset of cells, component-blocked over the local
/// ordering. This is what the online stage reconstructs on stencil closures.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalField {
    cells: Vec<usize>,
    components: usize,
    values: Vec<f64>,
}

impl LocalField {
    /// Zero values on `cells`, which must be sorted and unique.
    pub fn zeros(cells: Vec<usize>, components: usize) -> Result<Self> {
        if cells.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "local field cells must be sorted and unique".into(),
            ));
        }
        let values = vec![0.0; cells.len() * components];
        Ok(Self {
            cells,
            components,
            values,
        })
    }

    /// Copies the values of `field` on `cells` (sorted, unique).
    pub fn restrict(field: &(impl CellData + ?Sized), cells: Vec<usize>) -> Result<Self> {
        let mut out = Self::zeros(cells, field.components())?;
        let n = out.cells.len();
        for c in 0..out.components {
            for k in 0..n {
                out.values[c * n + k] = field.value(out.cells[k], c)?;
            }
        }
        Ok(out)
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn local_index(&self, cell: usize) -> Option<usize> {
        self.cells.binary_search(&cell).ok()
    }

    #[inline]
    pub fn set_local(&mut self, k: usize, comp: usize, v: f64) {
        let n = self.cells.len();
        self.values[comp * n + k] = v;
    }

    #[inline]
    pub fn get_local(&self, k: usize, comp: usize) -> f64 {
        self.values[comp * self.cells.len() + k]
    }
}

impl CellData for LocalField {
    fn components(&self) -> usize {
        self.components
    }

    #[inline]
    fn try_value(&self, cell: usize, comp: usize) -> Option<f64> {
        if comp >= self.components {
            return None;
        }
        self.local_index(cell).map(|k| self.get_local(k, comp))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn component_blocked_layout() {
        let f = Field::uniform(3, &[1.0, 2.0]);
        assert_eq!(f.values(), &[1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
        assert_eq!(f.try_value(2, 1), Some(2.0));
        assert_eq!(f.try_value(3, 0), None);
        assert!(Field::new(2, vec![1.0; 3]).is_err());
        assert!(Field::new(1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn local_field_lookup() {
        let full = Field::new(2, (0..10).map(|v| v as f64).collect()).unwrap();
        let local = LocalField::restrict(&full, vec![1, 4]).unwrap();
        assert_eq!(local.try_value(4, 1), Some(9.0));
        assert_eq!(local.try_value(2, 0), None);
        assert!(matches!(local.value(2, 0), Err(Error::MissingValue(2))));
        assert!(LocalField::zeros(vec![3, 1], 1).is_err());
    }
}

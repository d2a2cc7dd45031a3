//! Magic points: DEIM samples, obligatory boundary cells and their stencil
//! closure.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mesh::{stencil_closure, Mesh};

#[derive(Debug, Clone, PartialEq)]
pub struct MagicPointSet {
    pub field: String,
    pub components: usize,
    pub n_cells: usize,
    /// DEIM indices (DOFs) in selection order.
    pub deim: Vec<usize>,
    /// DOFs of cells next to the obligatory patches, sorted.
    pub obligatory: Vec<usize>,
    /// Sorted union of `deim` and `obligatory`: the sampled rows.
    pub union: Vec<usize>,
    /// Cells owning at least one sampled DOF, sorted.
    pub union_cells: Vec<usize>,
    /// `union_cells` grown by `layers` face-neighbour layers, sorted.
    pub closure: Vec<usize>,
    pub layers: usize,
}

impl MagicPointSet {
    /// Number of sampled rows `s`.
    pub fn len(&self) -> usize {
        self.union.len()
    }

    pub fn is_empty(&self) -> bool {
        self.union.is_empty()
    }

    #[inline]
    pub fn cell_of(&self, dof: usize) -> usize {
        dof % self.n_cells
    }

    /// Closure cells that are not sampled cells.
    pub fn halo(&self) -> Vec<usize> {
        self.closure
            .iter()
            .copied()
            .filter(|c| self.union_cells.binary_search(c).is_err())
            .collect()
    }
}

/// Combines DEIM indices with the owner cells of `obligatory_patches` (every
/// component of those cells is sampled) and computes the stencil closure.
pub fn build_magic_points(
    mesh: &Mesh,
    field: &str,
    components: usize,
    deim: &[usize],
    obligatory_patches: &[impl AsRef<str>],
    layers: usize,
) -> Result<MagicPointSet> {
    let n = mesh.n_cells();
    let n_dofs = n * components;
    if let Some(&bad) = deim.iter().find(|&&d| d >= n_dofs) {
        return Err(Error::IndexOutOfRange {
            row: bad,
            col: 0,
            n_rows: n_dofs,
            n_cols: 1,
        });
    }
    let unique: BTreeSet<usize> = deim.iter().copied().collect();
    if unique.len() != deim.len() {
        return Err(Error::InvalidArgument("DEIM indices contain duplicates".into()));
    }
    let owner_cells = mesh.patch_owner_cells(obligatory_patches)?;
    let obligatory: Vec<usize> = (0..components)
        .flat_map(|c| owner_cells.iter().map(move |&cell| c * n + cell))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let union: Vec<usize> = unique.iter().chain(&obligatory).copied().collect::<BTreeSet<_>>().into_iter().collect();
    let union_cells: Vec<usize> = union.iter().map(|d| d % n).collect::<BTreeSet<_>>().into_iter().collect();
    let closure = stencil_closure(mesh, &union_cells, layers)?;
    Ok(MagicPointSet {
        field: field.into(),
        components,
        n_cells: n,
        deim: deim.to_vec(),
        obligatory,
        union,
        union_cells,
        closure,
        layers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{ObstacleChannelGeometry, build_obstacle_channel_mesh, build_channel_mesh};

    #[test]
    fn no_obligatory_patches() {
        let m = build_channel_mesh(4.0, 2.0, 8, 4).unwrap();
        let none: [&str; 0] = [];
        let p = build_magic_points(&m, "T", 1, &[9, 3, 20], &none, 1).unwrap();
        assert_eq!(p.union, vec![3, 9, 20]);
        assert_eq!(p.deim, vec![9, 3, 20]);
        assert_eq!(p.closure, stencil_closure(&m, &[3, 9, 20], 1).unwrap());
        assert!(p.closure.len() > p.union.len());
    }

    #[test]
    fn obstacle_cells_are_obligatory() {
        let m = build_obstacle_channel_mesh(&ObstacleChannelGeometry::default()).unwrap();
        let p = build_magic_points(&m, "p", 1, &[0], &["obstacle"], 1).unwrap();
        assert_eq!(p.obligatory.len(), 12);
        assert_eq!(p.union.len(), 13);
        let u = build_magic_points(&m, "U", 2, &[0, m.n_cells() + 5], &["obstacle"], 1).unwrap();
        assert_eq!(u.obligatory.len(), 24);
        assert_eq!(u.union_cells.len(), 14);
        assert!(build_magic_points(&m, "p", 1, &[0], &["cylinder"], 1).is_err());
        assert!(build_magic_points(&m, "p", 1, &[0, 0], &["obstacle"], 1).is_err());
    }
}

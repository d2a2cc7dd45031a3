use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Boundary condition kind for one patch of one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bc {
    /// Dirichlet value; scalar fields read component 0.
    FixedValue([f64; 2]),
    ZeroGradient,
}

impl Bc {
    pub fn fixed_scalar(v: f64) -> Self {
        Bc::FixedValue([v, 0.0])
    }

    pub fn fixed_vector(x: f64, y: f64) -> Self {
        Bc::FixedValue([x, y])
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, Bc::FixedValue(_))
    }
}

/// A named boundary condition as it appears in case configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCondition {
    pub patch: String,
    pub bc: Bc,
}

impl BoundaryCondition {
    pub fn new(patch: impl Into<String>, bc: Bc) -> Self {
        Self {
            patch: patch.into(),
            bc,
        }
    }
}

/// Boundary conditions of one field resolved against a mesh: exactly one
/// entry per patch, indexed by patch id.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldBcs {
    per_patch: Vec<Bc>,
}

impl FieldBcs {
    pub fn resolve(mesh: &Mesh, list: &[BoundaryCondition]) -> Result<Self> {
        let mut per_patch: Vec<Option<Bc>> = vec![None; mesh.patches().len()];
        for entry in list {
            let p = mesh
                .patch_id(&entry.patch)
                .ok_or_else(|| Error::UnknownPatch(entry.patch.clone()))?;
            if per_patch[p].is_some() {
                return Err(Error::InvalidArgument(alloc::format!(
                    "patch `{}` has more than one boundary condition",
                    entry.patch
                )));
            }
            per_patch[p] = Some(entry.bc);
        }
        let per_patch = per_patch
            .into_iter()
            .enumerate()
            .map(|(p, bc)| bc.ok_or_else(|| Error::MissingBoundaryCondition(mesh.patches()[p].name.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { per_patch })
    }

    /// Convenience for tests and defaults: `(patch name, bc)` pairs.
    pub fn from_pairs(mesh: &Mesh, pairs: &[(&str, Bc)]) -> Result<Self> {
        let list: Vec<BoundaryCondition> = pairs
            .iter()
            .map(|(n, bc)| BoundaryCondition::new(n.to_string(), *bc))
            .collect();
        Self::resolve(mesh, &list)
    }

    #[inline]
    pub fn get(&self, patch: usize) -> Bc {
        self.per_patch[patch]
    }

    pub fn has_fixed_value(&self) -> bool {
        self.per_patch.iter().any(Bc::is_fixed)
    }

    /// Homogeneous version used for corrections: fixed values become zero.
    pub fn homogeneous(&self) -> Self {
        Self {
            per_patch: self
                .per_patch
                .iter()
                .map(|bc| match bc {
                    Bc::FixedValue(_) => Bc::FixedValue([0.0, 0.0]),
                    Bc::ZeroGradient => Bc::ZeroGradient,
                })
                .collect(),
        }
    }

    pub fn max_fixed_magnitude(&self) -> f64 {
        self.per_patch
            .iter()
            .map(|bc| match bc {
                Bc::FixedValue(v) => libm::hypot(v[0], v[1]),
                Bc::ZeroGradient => 0.0,
            })
            .fold(0.0, f64::max)
    }
}

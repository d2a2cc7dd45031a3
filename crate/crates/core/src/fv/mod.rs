//! Cell-centred finite-volume fields, boundary conditions and operators.

pub mod assemble;
pub mod bc;
pub mod field;

pub use assemble::{
    assemble_momentum, assemble_pressure_correction, assemble_transport, corrected_face_flux,
    face_flux, face_flux_at, gauss_gradient, gauss_gradient_at, gauss_gradient_local, relax,
    ConvectionDiffusion, LinearSystem, PressureCorrectionInputs, RowSubset,
};
pub use bc::{Bc, BoundaryCondition, FieldBcs};
pub use field::{CellData, Field, LocalField};

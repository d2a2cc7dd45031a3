pub mod binary;
pub mod export;

pub use binary::{read_dense, read_dense_columns, read_mesh, read_sparse, write_dense, write_dense_columns, write_mesh, write_sparse};
pub use export::{fields_csv, fields_vtk, points_csv, NamedField};

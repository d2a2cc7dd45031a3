//! Offline stage: POD bases and DEIM magic points.

pub mod deim;
pub mod pod;
pub mod points;

pub use deim::deim_select;
pub use pod::{gram_matrix, pod, pod_from_gram, projection_error, PodBasis};
pub use points::{build_magic_points, MagicPointSet};

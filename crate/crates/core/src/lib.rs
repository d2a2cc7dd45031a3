//! Finite-volume hyper-reduced order modelling.
//!
//! The crate is `no_std` (with `alloc`) and carries the numerical core:
//! sparse/dense linear algebra, structured finite-volume meshes and operator
//! assembly, full-order time marching, the POD/DEIM offline stage and the
//! masked weighted least-squares online stage. File formats, timing and the
//! command-line driver live in the `hrom` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod fom;
pub mod fv;
pub mod hrom;
pub mod linalg;
pub mod mesh;
pub mod metrics;
pub mod rom;

pub use error::{Error, Result};

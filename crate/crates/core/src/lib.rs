//! Finite-element workbench for the 2-D Helmholtz equation with impedance
//! boundary conditions: uniform triangular meshes, Lagrange spaces of degree
//! 1 to 4, overlapping strip and checkerboard decompositions, the ORAS
//! preconditioner with Richardson and GMRES drivers, and discrete
//! impedance-to-impedance maps with their operator norms.

pub mod assembly;
pub mod decomp;
pub mod error;
pub mod experiments;
pub mod fespace;
pub mod impmaps;
pub mod linalg;
pub mod mesh;
pub mod oras;
pub mod quadrature;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

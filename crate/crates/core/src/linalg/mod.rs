//! Numerical back end: sparse matrices, sparse LU, Krylov solvers and dense
//! Hermitian eigenvalue kernels.

pub mod dense;
pub mod krylov;
pub mod lu;
pub mod ordering;
pub mod sparse;

pub use dense::{cholesky, herm_gen_eig_max};
pub use krylov::{gmres, richardson, FnOperator, Identity, IterativeResult, LinearOperator};
pub use lu::{lu_factor, lu_factor_with, LuOptions, Ordering, SparseLu};
pub use sparse::{dot_c, norm2, CsrComplex, CsrMatrix, CsrReal, Scalar, TripletBuilder};

//! Space-time Trefftz discontinuous Galerkin solver for the first-order
//! acoustic wave system `A^{1/2}∇v + ∂σ/∂t = 0`, `∇·(A^{1/2}σ) + c⁻²∂v/∂t = f`
//! in homogeneous anisotropic media, with a combined Trefftz + local DG
//! scheme for nonhomogeneous sources.

// kernels iterate 0..d over fixed-size padded arrays; iterator adapters
// would obscure the dimension handling, and `!(x > 0)` guards NaN inputs
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod anisotropy;
pub mod assembly;
pub mod cases;
pub mod driver;
pub mod fields;
pub mod linalg;
pub mod mesh;
pub mod polynomial;
pub mod properties;
pub mod quadrature;
pub mod solver;
pub mod trefftz_basis;

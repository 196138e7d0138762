//! Small numerical kernels shared by the physics modules.

pub mod quadrature;
pub mod tridiagonal;

//! Finite element solver for the parabolic-parabolic Keller-Segel system
//!
//!   u_t = div(grad u - lambda u grad c)
//!   c_t = div(grad c) - c + u
//!
//! on the unit square with homogeneous Neumann boundary conditions,
//! discretized with P1 elements and backward Euler in time. Three schemes
//! are provided: standard Galerkin, a positivity-preserving low-order
//! scheme (mass lumping + algebraic upwinding), and the low-order scheme
//! plus limited antidiffusion (algebraic flux correction). The stabilized
//! schemes keep nodal values nonnegative and conserve the discrete mass
//! of u exactly.

pub mod assembly;
pub mod harness;
pub mod limiter;
pub mod mesh;
pub mod sparse;
pub mod stepper;

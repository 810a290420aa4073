//! Numerical laboratory for two-dimensional Ginzburg-Landau states:
//! grids and discrete calculus, energies, gauge fixing, gradient descent,
//! vorticity, domain flows and pulled-back states, first and second
//! variations, limiting quadratic forms, and the obstacle problem for the
//! limiting induced field.

pub mod descent;
pub mod energy;
pub mod field_io;
pub mod gauge;
pub mod grid;
pub mod stencil;
pub mod vorticity;

pub use energy::{apply_gauge, covariant_gradient, e_energy, gl_energy, Params, State};
pub use grid::{Grid, GridError, ScalarField, VectorField};

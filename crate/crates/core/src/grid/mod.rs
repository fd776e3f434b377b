//! Uniform Cartesian grids, fields, finite-difference stencils and quadrature.

mod field;
mod quadrature;
mod spec;
mod stencil;
pub mod wfn;

pub use field::{ComplexField, Field, GridValue, RealField, VectorField};
pub use quadrature::{gauss_legendre, quadrature_3d, QuadValue, SphericalRule};
pub use spec::GridSpec;
pub use stencil::{
    derivative_taps, gradient, gradient_axis, integrate, integrate_values, second_derivative_taps,
    Stencil, Taps,
};

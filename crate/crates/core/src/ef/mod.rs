//! Exact factorization `Ψ(R, r) = χ(R) Φ_R(r)` and its geometric objects.
//!
//! Conditional wavefunctions are accessed through [`ConditionalSource`], which
//! can be a dense table or an analytic model evaluated on demand. Quantities
//! that need `∇_R` stream over electronic columns; quantities that need
//! operators in `r` work slice by slice.

mod conditional;
mod constancy;
mod geometry;
mod hamiltonian;
mod observables;
mod pair;

pub use conditional::{
    ConditionalSource, DenseConditional, LinearCombination, UniformConditional, ZeroConditional,
};
pub use constancy::{constancy, Constancy};
pub use geometry::{
    berry_connection, compute_geometry, curl, scalar_potential, total_vector_potential,
    ConnectionMoments, Curvature, EfGeometry, GeometryOptions, ScalarPotential,
};
pub use hamiltonian::{BoHamiltonian, BoModel, BoOperator, BoPotential, PeierlsKinetic};
pub use observables::{momentum_expectation, nuclear_current, nuclear_density};
pub use pair::{gauge_transform, split, split_flagging_nodes, EfPair, FullWavefunction};

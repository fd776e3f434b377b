//! Exact factorization of electron–nuclear wavefunctions in a uniform magnetic field.
//!
//! The crate is organised bottom-up: [`units`] and [`grid`] are the numerical
//! substrate, [`ef`] performs the factorization and computes the geometric
//! objects, and [`atom`], [`harmonium`], [`hydrogen`] and [`eom`] build the
//! model systems and checks on top of them.

pub mod atom;
pub mod ef;
pub mod eom;
pub mod error;
pub mod grid;
pub mod harmonium;
pub mod hydrogen;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use units::Vec3;

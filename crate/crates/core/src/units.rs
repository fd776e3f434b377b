//! Unit system, particles and the uniform external field.
//!
//! All formulas carry explicit `hbar`, `e`, `c` and `m` factors so any
//! consistent unit system works. The default is `hbar = e = m = 1`, `c = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub hbar: f64,
    pub e: f64,
    pub c: f64,
    pub m: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self { hbar: 1.0, e: 1.0, c: 1.0, m: 1.0 }
    }
}

impl UnitSystem {
    pub fn new(hbar: f64, e: f64, c: f64, m: f64) -> Result<Self> {
        let u = Self { hbar, e, c, m };
        u.validate()?;
        Ok(u)
    }

    /// Natural units with a chosen speed of light.
    pub fn with_c(c: f64) -> Result<Self> {
        Self::new(1.0, 1.0, c, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("hbar", self.hbar), ("e", self.e), ("c", self.c), ("m", self.m)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleSpec {
    pub mass: f64,
    /// Signed charge number; the physical charge is `charge_number * e`.
    pub charge_number: i32,
}

impl ParticleSpec {
    pub fn new(mass: f64, charge_number: i32) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Config(format!("particle mass must be positive, got {mass}")));
        }
        Ok(Self { mass, charge_number })
    }

    pub fn electron(units: &UnitSystem) -> Self {
        Self { mass: units.m, charge_number: -1 }
    }

    pub fn charge(&self, units: &UnitSystem) -> f64 {
        self.charge_number as f64 * units.e
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformField {
    pub b: Vec3,
}

impl UniformField {
    pub fn new(b: Vec3) -> Result<Self> {
        if !b.iter().all(|x| x.is_finite()) {
            return Err(Error::Config("field components must be finite".into()));
        }
        Ok(Self { b })
    }

    pub fn along_z(bz: f64) -> Self {
        Self { b: Vec3::new(0.0, 0.0, bz) }
    }

    pub fn zero() -> Self {
        Self { b: Vec3::zeros() }
    }

    pub fn is_zero(&self) -> bool {
        self.b.iter().all(|&x| x == 0.0)
    }
}

/// `A(r) = B × r / 2`.
pub fn symmetric_gauge_a(r: &Vec3, field: &UniformField) -> Vec3 {
    0.5 * field.b.cross(r)
}

/// Splits `k` into the parts along and normal to the field. For a zero field the
/// whole vector counts as parallel.
pub fn decompose_k(k: &Vec3, field: &UniformField) -> (Vec3, Vec3) {
    let b2 = field.b.norm_squared();
    if b2 == 0.0 {
        return (*k, Vec3::zeros());
    }
    let par = field.b * (k.dot(&field.b) / b2);
    (par, k - par)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoMomentum {
    pub k: Vec3,
}

impl PseudoMomentum {
    pub fn new(k: Vec3) -> Self {
        Self { k }
    }

    pub fn parallel(&self, field: &UniformField) -> Vec3 {
        decompose_k(&self.k, field).0
    }

    pub fn perp(&self, field: &UniformField) -> Vec3 {
        decompose_k(&self.k, field).1
    }
}

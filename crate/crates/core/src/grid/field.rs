use std::ops::{Add, AddAssign, Mul, Sub};

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::GridSpec;
use crate::error::{Error, Result};
use crate::units::Vec3;

/// Scalar types that can live on a grid and pass through linear stencils.
pub trait GridValue:
    Copy
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
    + std::fmt::Debug
{
    fn zero() -> Self;
    fn abs(self) -> f64;
}

impl GridValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
}

impl GridValue for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn abs(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Field<T> {
    pub spec: GridSpec,
    pub values: Vec<T>,
}

pub type ComplexField = Field<C64>;
pub type RealField = Field<f64>;

impl<T: GridValue> Field<T> {
    pub fn new(spec: GridSpec, values: Vec<T>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::Config(format!(
                "field has {} values but the grid has {} points",
                values.len(),
                spec.len()
            )));
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: &GridSpec) -> Self {
        Self { spec: spec.clone(), values: vec![T::zero(); spec.len()] }
    }

    pub fn from_fn(spec: &GridSpec, f: impl Fn(&Vec3) -> T) -> Self {
        let values = (0..spec.len()).map(|i| f(&spec.point(i))).collect();
        Self { spec: spec.clone(), values }
    }

    pub fn map<U: GridValue>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field { spec: self.spec.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

impl ComplexField {
    pub fn re(&self) -> RealField {
        self.map(|v| v.re)
    }

    pub fn im(&self) -> RealField {
        self.map(|v| v.im)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn norm_sqr(&self) -> RealField {
        self.map(|v| v.norm_sqr())
    }
}

impl RealField {
    pub fn to_complex(&self) -> ComplexField {
        self.map(|v| C64::new(v, 0.0))
    }
}

/// One component per grid axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VectorField<T> {
    pub spec: GridSpec,
    pub components: Vec<Vec<T>>,
}

impl<T: GridValue> VectorField<T> {
    pub fn new(spec: GridSpec, components: Vec<Vec<T>>) -> Result<Self> {
        if components.len() != spec.dim() || components.iter().any(|c| c.len() != spec.len()) {
            return Err(Error::Config("vector field components do not match the grid".into()));
        }
        Ok(Self { spec, components })
    }

    pub fn zeros(spec: &GridSpec) -> Self {
        Self { spec: spec.clone(), components: vec![vec![T::zero(); spec.len()]; spec.dim()] }
    }

    pub fn from_fn(spec: &GridSpec, f: impl Fn(&Vec3) -> [T; 3]) -> Self {
        let mut out = Self::zeros(spec);
        for i in 0..spec.len() {
            let v = f(&spec.point(i));
            for (a, c) in out.components.iter_mut().enumerate() {
                c[i] = v[a];
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, axis: usize) -> Field<T> {
        Field { spec: self.spec.clone(), values: self.components[axis].clone() }
    }

    pub fn at(&self, idx: usize) -> Vec<T> {
        self.components.iter().map(|c| c[idx]).collect()
    }

    pub fn map<U: GridValue>(&self, f: impl Fn(T) -> U) -> VectorField<U> {
        VectorField {
            spec: self.spec.clone(),
            components: self.components.iter().map(|c| c.iter().map(|&v| f(v)).collect()).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

impl VectorField<f64> {
    /// Components padded to three Cartesian entries.
    pub fn vec3_at(&self, idx: usize) -> Vec3 {
        let mut v = Vec3::zeros();
        for (a, c) in self.components.iter().enumerate() {
            v[a] = c[idx];
        }
        v
    }
}

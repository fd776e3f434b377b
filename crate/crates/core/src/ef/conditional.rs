use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec};

/// Read access to a conditional wavefunction `Φ_R(r)` on a nuclear × electronic grid.
pub trait ConditionalSource: Send + Sync {
    fn nuclear(&self) -> &GridSpec;
    fn electronic(&self) -> &GridSpec;

    fn value(&self, ir: usize, ie: usize) -> C64;

    /// `Φ_R` over the electronic grid at nuclear index `ir`.
    fn fill_slice(&self, ir: usize, out: &mut [C64]) {
        for (ie, o) in out.iter_mut().enumerate() {
            *o = self.value(ir, ie);
        }
    }

    /// `Φ_R(r)` over the nuclear grid at electronic index `ie`.
    fn fill_column(&self, ie: usize, out: &mut [C64]) {
        for (ir, o) in out.iter_mut().enumerate() {
            *o = self.value(ir, ie);
        }
    }

    fn slice(&self, ir: usize) -> ComplexField {
        let mut v = vec![C64::new(0.0, 0.0); self.electronic().len()];
        self.fill_slice(ir, &mut v);
        ComplexField { spec: self.electronic().clone(), values: v }
    }
}

/// Fully tabulated `Φ`, nuclear index major.
#[derive(Debug, Clone)]
pub struct DenseConditional {
    nuclear: GridSpec,
    electronic: GridSpec,
    values: Vec<C64>,
}

impl DenseConditional {
    pub fn new(nuclear: GridSpec, electronic: GridSpec, values: Vec<C64>) -> Result<Self> {
        if values.len() != nuclear.len() * electronic.len() {
            return Err(Error::Config("conditional table size does not match the grids".into()));
        }
        Ok(Self { nuclear, electronic, values })
    }

    pub fn from_source(src: &dyn ConditionalSource) -> Self {
        let ne = src.electronic().len();
        let mut values = vec![C64::new(0.0, 0.0); src.nuclear().len() * ne];
        for (ir, chunk) in values.chunks_mut(ne).enumerate() {
            src.fill_slice(ir, chunk);
        }
        Self { nuclear: src.nuclear().clone(), electronic: src.electronic().clone(), values }
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }
}

impl ConditionalSource for DenseConditional {
    fn nuclear(&self) -> &GridSpec {
        &self.nuclear
    }
    fn electronic(&self) -> &GridSpec {
        &self.electronic
    }
    fn value(&self, ir: usize, ie: usize) -> C64 {
        self.values[ir * self.electronic.len() + ie]
    }
    fn fill_slice(&self, ir: usize, out: &mut [C64]) {
        let ne = self.electronic.len();
        out.copy_from_slice(&self.values[ir * ne..(ir + 1) * ne]);
    }
}

/// `Φ_R(r) = φ(r)` for every `R`.
#[derive(Debug, Clone)]
pub struct UniformConditional {
    nuclear: GridSpec,
    slice: ComplexField,
}

impl UniformConditional {
    pub fn new(nuclear: GridSpec, slice: ComplexField) -> Self {
        Self { nuclear, slice }
    }
}

impl ConditionalSource for UniformConditional {
    fn nuclear(&self) -> &GridSpec {
        &self.nuclear
    }
    fn electronic(&self) -> &GridSpec {
        &self.slice.spec
    }
    fn value(&self, _ir: usize, ie: usize) -> C64 {
        self.slice.values[ie]
    }
    fn fill_slice(&self, _ir: usize, out: &mut [C64]) {
        out.copy_from_slice(&self.slice.values);
    }
    fn fill_column(&self, ie: usize, out: &mut [C64]) {
        out.fill(self.slice.values[ie]);
    }
}

/// Identically zero, used as the time derivative of stationary conditionals.
#[derive(Debug, Clone)]
pub struct ZeroConditional {
    nuclear: GridSpec,
    electronic: GridSpec,
}

impl ZeroConditional {
    pub fn new(nuclear: GridSpec, electronic: GridSpec) -> Self {
        Self { nuclear, electronic }
    }
}

impl ConditionalSource for ZeroConditional {
    fn nuclear(&self) -> &GridSpec {
        &self.nuclear
    }
    fn electronic(&self) -> &GridSpec {
        &self.electronic
    }
    fn value(&self, _ir: usize, _ie: usize) -> C64 {
        C64::new(0.0, 0.0)
    }
    fn fill_slice(&self, _ir: usize, out: &mut [C64]) {
        out.fill(C64::new(0.0, 0.0));
    }
    fn fill_column(&self, _ie: usize, out: &mut [C64]) {
        out.fill(C64::new(0.0, 0.0));
    }
}

/// `Σ_k c_k(R) Φ^(k)_R(r)` with per-nuclear-point coefficients.
pub struct LinearCombination {
    terms: Vec<(Arc<dyn ConditionalSource>, Vec<C64>)>,
}

impl LinearCombination {
    pub fn new(terms: Vec<(Arc<dyn ConditionalSource>, Vec<C64>)>) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::Config("empty combination".into()))?;
        let (nuc, el) = (first.0.nuclear().clone(), first.0.electronic().clone());
        for (s, c) in &terms {
            if s.nuclear() != &nuc || s.electronic() != &el || c.len() != nuc.len() {
                return Err(Error::Config("combined conditionals live on different grids".into()));
            }
        }
        Ok(Self { terms })
    }
}

impl ConditionalSource for LinearCombination {
    fn nuclear(&self) -> &GridSpec {
        self.terms[0].0.nuclear()
    }
    fn electronic(&self) -> &GridSpec {
        self.terms[0].0.electronic()
    }
    fn value(&self, ir: usize, ie: usize) -> C64 {
        self.terms.iter().map(|(s, c)| c[ir] * s.value(ir, ie)).sum()
    }
    fn fill_slice(&self, ir: usize, out: &mut [C64]) {
        let mut tmp = vec![C64::new(0.0, 0.0); out.len()];
        out.fill(C64::new(0.0, 0.0));
        for (s, c) in &self.terms {
            s.fill_slice(ir, &mut tmp);
            for (o, t) in out.iter_mut().zip(&tmp) {
                *o += c[ir] * t;
            }
        }
    }
    fn fill_column(&self, ie: usize, out: &mut [C64]) {
        let mut tmp = vec![C64::new(0.0, 0.0); out.len()];
        out.fill(C64::new(0.0, 0.0));
        for (s, c) in &self.terms {
            s.fill_column(ie, &mut tmp);
            for ((o, t), ci) in out.iter_mut().zip(&tmp).zip(c) {
                *o += ci * t;
            }
        }
    }
}

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{gradient, integrate, ComplexField, RealField, Stencil, VectorField};
use crate::units::{ParticleSpec, UnitSystem, Vec3};

/// `|χ(R)|²`.
pub fn nuclear_density(chi: &ComplexField) -> RealField {
    chi.norm_sqr()
}

/// `J = (ħ/M) Im[χ* ∇χ] - (Z e / M c) |χ|² A_tot`.
pub fn nuclear_current(
    chi: &ComplexField,
    a_total: &VectorField<f64>,
    nucleus: &ParticleSpec,
    units: &UnitSystem,
    stencil: Stencil,
) -> Result<VectorField<f64>> {
    if a_total.spec != chi.spec {
        return Err(Error::Config("χ and A_tot use different grids".into()));
    }
    let grad = gradient(chi, stencil)?;
    let m = nucleus.mass;
    let q = nucleus.charge(units) / (m * units.c);
    let components = grad
        .components
        .iter()
        .zip(&a_total.components)
        .map(|(g, a)| {
            (0..chi.values.len())
                .map(|i| {
                    let c: C64 = chi.values[i];
                    units.hbar / m * (c.conj() * g[i]).im - q * c.norm_sqr() * a[i]
                })
                .collect()
        })
        .collect();
    Ok(VectorField { spec: chi.spec.clone(), components })
}

/// `M ∫J dR / ∫|χ|² dR`, i.e. the momentum per unit nuclear norm.
pub fn momentum_expectation(
    chi: &ComplexField,
    a_total: &VectorField<f64>,
    nucleus: &ParticleSpec,
    units: &UnitSystem,
    stencil: Stencil,
) -> Result<Vec3> {
    let j = nuclear_current(chi, a_total, nucleus, units, stencil)?;
    let norm = integrate(&nuclear_density(chi));
    if !(norm > 0.0) {
        return Err(Error::Precondition("χ has zero norm".into()));
    }
    let mut p = Vec3::zeros();
    for a in 0..j.dim() {
        p[a] = nucleus.mass * integrate(&j.component(a)) / norm;
    }
    Ok(p)
}

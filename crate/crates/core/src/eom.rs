//! Residuals of the coupled equations of motion for `χ` and `Φ`, and the force
//! fields acting on the nucleus.
//!
//! ```text
//! iħ∂_tχ = (1/2M)[-iħ∇ - (Ze/c)A_tot]²χ + εχ
//! iħ∂_tΦ = (H_BO - ε)Φ + (1/2M)[iħ∇ + A]²Φ + (1/M)[iħ∇χ/χ + (Ze/c)A_tot]·[iħ∇ + A]Φ
//! ```
//!
//! with `A` the Berry connection. Derivatives are taken with the geometry's stencil.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::ef::{curl, BoHamiltonian, Curvature, EfGeometry, EfPair};
use crate::error::{Error, Result};
use crate::grid::{derivative_taps, gradient, second_derivative_taps, GridSpec, Stencil, VectorField};
use crate::units::{ParticleSpec, UnitSystem};

#[derive(Debug, Clone, Serialize)]
pub struct EomResidualReport {
    pub nuclear_spacing: Vec<f64>,
    pub electronic_spacing: Vec<f64>,
    pub stencil: Stencil,
    pub nuclear_residual: f64,
    /// `|χ|²`-weighted RMS of the per-slice residuals.
    pub electronic_residual: f64,
    /// `‖residual‖_r` per nuclear point; `None` where the slice was skipped.
    #[serde(skip)]
    pub electronic_per_point: Vec<Option<f64>>,
    /// Nuclear grid indices of skipped slices (nodes of `χ`).
    pub skipped: Vec<Vec<usize>>,
}

fn divergence(v: &VectorField<f64>, stencil: Stencil) -> Result<Vec<f64>> {
    let mut div = vec![0.0; v.spec.len()];
    for a in 0..v.dim() {
        let g = gradient(&v.component(a), stencil)?;
        div.iter_mut().zip(&g.components[a]).for_each(|(d, x)| *d += x);
    }
    Ok(div)
}

/// Relative L² defect of the nuclear equation over the valid interior.
pub fn nuclear_eom_residual(pair: &EfPair, geo: &EfGeometry, nucleus: &ParticleSpec, units: &UnitSystem) -> Result<f64> {
    let dchi = pair
        .dchi_dt
        .as_ref()
        .ok_or_else(|| Error::Contract("the nuclear residual needs ∂χ/∂t".into()))?;
    let stencil = geo.stencil;
    let spec = pair.nuclear();
    let chi = &pair.chi;
    let hbar = units.hbar;
    let q = nucleus.charge(units) / units.c;
    let grad = gradient(chi, stencil)?;
    let a = &geo.a_total;
    let div = divergence(a, stencil)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in geo.interior() {
        let m = spec.unravel(i);
        let mut lap = C64::new(0.0, 0.0);
        for ax in 0..spec.dim() {
            let s = spec.stride(ax);
            let base = i - m[ax] * s;
            lap += second_derivative_taps(m[ax], spec.n()[ax], spec.spacing()[ax], stencil)
                .apply(|k| chi.values[base + k * s]);
        }
        let c = chi.values[i];
        let mut a_dot_grad = C64::new(0.0, 0.0);
        let mut a2 = 0.0;
        for ax in 0..spec.dim() {
            a_dot_grad += grad.components[ax][i] * a.components[ax][i];
            a2 += a.components[ax][i].powi(2);
        }
        let ih = C64::new(0.0, hbar);
        let kinetic = -lap * (hbar * hbar) + ih * q * div[i] * c + ih * 2.0 * q * a_dot_grad + c * (q * q * a2);
        let rhs = kinetic / (2.0 * nucleus.mass) + c * geo.epsilon.values[i];
        num += (ih * dchi.values[i] - rhs).norm_sqr();
        den += c.norm_sqr();
    }
    if den == 0.0 {
        return Err(Error::Precondition("no valid interior nuclear points".into()));
    }
    Ok((num / den).sqrt())
}

/// Per-slice defect of the electronic equation, `|χ|²`-weighted aggregate.
pub fn electronic_eom_residual(
    pair: &EfPair,
    geo: &EfGeometry,
    ham: &dyn BoHamiltonian,
    nucleus: &ParticleSpec,
    units: &UnitSystem,
) -> Result<(f64, Vec<Option<f64>>, Vec<Vec<usize>>)> {
    let dphi = pair
        .dphi_dt
        .as_ref()
        .ok_or_else(|| Error::Contract("the electronic residual needs ∂Φ/∂t".into()))?;
    if ham.electronic() != pair.electronic() {
        return Err(Error::Config("Hamiltonian and Φ use different electronic grids".into()));
    }
    let stencil = geo.stencil;
    let spec = pair.nuclear().clone();
    let el = pair.electronic().clone();
    let w = el.trapezoid_weights();
    let hbar = units.hbar;
    let ih = C64::new(0.0, hbar);
    let zq = nucleus.charge(units) / units.c;
    let mass = nucleus.mass;
    let chi = &pair.chi;
    let grad_chi = gradient(chi, stencil)?;
    let berry = &geo.a_berry;
    let div_berry = divergence(berry, stencil)?;
    let points = geo.interior();
    let ne = el.len();
    let per: Vec<(usize, f64)> = points
        .par_iter()
        .map(|&i| {
            let m = spec.unravel(i);
            let big_r = spec.point(i);
            let mut phi = vec![C64::new(0.0, 0.0); ne];
            let mut tmp = vec![C64::new(0.0, 0.0); ne];
            let mut res = vec![C64::new(0.0, 0.0); ne];
            pair.phi.fill_slice(i, &mut phi);
            // (H_BO - ε)Φ - iħ∂_tΦ
            ham.apply(&big_r, &phi, &mut res);
            dphi.fill_slice(i, &mut tmp);
            let eps = geo.epsilon.values[i];
            for k in 0..ne {
                res[k] -= phi[k] * eps + ih * tmp[k];
            }
            let c = chi.values[i];
            let mut a2 = 0.0;
            for ax in 0..spec.dim() {
                a2 += berry.components[ax][i].powi(2);
            }
            // (1/2M)[iħ(∇·A) + A²]Φ
            let diag = (ih * div_berry[i] + a2) / (2.0 * mass);
            for k in 0..ne {
                res[k] += phi[k] * diag;
            }
            for ax in 0..spec.dim() {
                let s = spec.stride(ax);
                let base = i - m[ax] * s;
                let n = spec.n()[ax];
                let h = spec.spacing()[ax];
                let mut d1 = vec![C64::new(0.0, 0.0); ne];
                let mut d2 = vec![C64::new(0.0, 0.0); ne];
                let t1 = derivative_taps(m[ax], n, h, stencil);
                let t2 = second_derivative_taps(m[ax], n, h, stencil);
                let mut needed: Vec<usize> = t1.iter().chain(t2.iter()).map(|(k, _)| k).collect();
                needed.sort_unstable();
                needed.dedup();
                for k in needed {
                    let w1: f64 = t1.iter().filter(|(j, _)| *j == k).map(|(_, w)| w).sum();
                    let w2: f64 = t2.iter().filter(|(j, _)| *j == k).map(|(_, w)| w).sum();
                    if k == m[ax] {
                        for e in 0..ne {
                            d1[e] += phi[e] * w1;
                            d2[e] += phi[e] * w2;
                        }
                    } else {
                        pair.phi.fill_slice(base + k * s, &mut tmp);
                        for e in 0..ne {
                            d1[e] += tmp[e] * w1;
                            d2[e] += tmp[e] * w2;
                        }
                    }
                }
                let a_ax = berry.components[ax][i];
                // coupling prefactor iħ∂χ/χ + (Ze/c)A_tot
                let coup = ih * grad_chi.components[ax][i] / c + zq * geo.a_total.components[ax][i];
                for e in 0..ne {
                    let cov = ih * d1[e] + phi[e] * a_ax;
                    res[e] += (-d2[e] * (hbar * hbar) + ih * 2.0 * a_ax * d1[e]) / (2.0 * mass) + coup * cov / mass;
                }
            }
            let norm: f64 = res.iter().zip(&w).map(|(r, w)| r.norm_sqr() * w).sum();
            (i, norm.sqrt())
        })
        .collect();
    let mut per_point = vec![None; spec.len()];
    let (mut num, mut den) = (0.0, 0.0);
    for &(i, r) in &per {
        per_point[i] = Some(r);
        let rho = chi.values[i].norm_sqr();
        num += rho * r * r;
        den += rho;
    }
    let skipped = (0..spec.len())
        .filter(|&i| !pair.valid[i] && spec.is_interior(i, 2))
        .map(|i| spec.unravel(i)[..spec.dim()].to_vec())
        .collect();
    if den == 0.0 {
        return Err(Error::Precondition("no valid interior nuclear points".into()));
    }
    Ok(((num / den).sqrt(), per_point, skipped))
}

pub fn eom_residuals(
    pair: &EfPair,
    geo: &EfGeometry,
    ham: &dyn BoHamiltonian,
    nucleus: &ParticleSpec,
    units: &UnitSystem,
) -> Result<EomResidualReport> {
    let nuclear_residual = nuclear_eom_residual(pair, geo, nucleus, units)?;
    let (electronic_residual, electronic_per_point, skipped) =
        electronic_eom_residual(pair, geo, ham, nucleus, units)?;
    Ok(EomResidualReport {
        nuclear_spacing: pair.nuclear().spacing().to_vec(),
        electronic_spacing: pair.electronic().spacing().to_vec(),
        stencil: geo.stencil,
        nuclear_residual,
        electronic_residual,
        electronic_per_point,
        skipped,
    })
}

/// Adds `δ·R_axis` to `ε`, a deliberate defect for negative controls.
pub fn corrupt_epsilon(geo: &mut EfGeometry, delta: f64, axis: usize) {
    let spec = geo.epsilon.spec.clone();
    for (i, e) in geo.epsilon.values.iter_mut().enumerate() {
        *e += delta * spec.point(i)[axis];
    }
}

/// Refinement ratio of two residuals whose spacings differ by a factor of two.
pub fn convergence_ratio(coarse: f64, fine: f64) -> f64 {
    coarse / fine
}

#[derive(Debug, Clone, Serialize)]
pub struct ForceFields {
    /// `∂_tÂ - ∇ε`
    pub e_like: VectorField<f64>,
    /// `∇ × Â`
    pub b_like: Curvature,
    pub epsilon_gradient: VectorField<f64>,
}

impl ForceFields {
    pub fn e_like_max(&self, idx: &[usize]) -> f64 {
        idx.iter().map(|&i| self.e_like.vec3_at(i).norm()).fold(0.0, f64::max)
    }
}

/// Force fields with `Â = -(Ze/c) A_tot`; `da_dt` is `∂_t A_tot` (zero when absent).
pub fn force_fields(
    geo: &EfGeometry,
    da_dt: Option<&VectorField<f64>>,
    nucleus: &ParticleSpec,
    units: &UnitSystem,
) -> Result<ForceFields> {
    let s = -nucleus.charge(units) / units.c;
    let a_hat = geo.a_total.map(|v| v * s);
    let grad_eps = gradient(&geo.epsilon, geo.stencil)?;
    let mut e_like = grad_eps.map(|v| -v);
    if let Some(d) = da_dt {
        if d.spec != geo.a_total.spec {
            return Err(Error::Config("∂A/∂t uses a different grid".into()));
        }
        for (e, dd) in e_like.components.iter_mut().zip(&d.components) {
            e.iter_mut().zip(dd).for_each(|(x, y)| *x += s * y);
        }
    }
    Ok(ForceFields { e_like, b_like: curl(&a_hat, geo.stencil)?, epsilon_gradient: grad_eps })
}

/// Nuclear coordinates grouped by nucleus on a joint configuration grid.
#[derive(Debug, Clone)]
pub struct NucleusAxes(pub Vec<Vec<usize>>);

/// Internuclear Lorentz-like force on nucleus `k` at configuration point `idx`:
/// `D_G = Σ_{J≠k, G'∈J} (∂_{G'} A_G - ∂_G A_{G'}) v_{G'}`.
///
/// `a` has one component per configuration axis; `velocities[j]` lists the
/// velocity components of nucleus `j` in the order of its axes.
pub fn d_term(
    a: &VectorField<f64>,
    axes: &NucleusAxes,
    velocities: &[Vec<f64>],
    k: usize,
    idx: usize,
    stencil: Stencil,
) -> Result<Vec<f64>> {
    let groups = &axes.0;
    if k >= groups.len() || velocities.len() != groups.len() {
        return Err(Error::Config("nucleus index or velocity list does not match the axis groups".into()));
    }
    for (g, v) in groups.iter().zip(velocities) {
        if g.len() != v.len() {
            return Err(Error::Config("velocity components do not match the nucleus axes".into()));
        }
    }
    let mine = &groups[k];
    if groups.len() == 1 {
        return Ok(vec![0.0; mine.len()]);
    }
    let spec: &GridSpec = &a.spec;
    let d = |comp: usize, axis: usize| -> f64 {
        let m = spec.unravel(idx);
        let s = spec.stride(axis);
        let base = idx - m[axis] * s;
        derivative_taps(m[axis], spec.n()[axis], spec.spacing()[axis], stencil)
            .apply(|j| a.components[comp][base + j * s])
    };
    Ok(mine
        .iter()
        .map(|&g| {
            groups
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .flat_map(|(j, gj)| gj.iter().zip(&velocities[j]).map(move |(&gp, &v)| (gp, v)))
                .map(|(gp, v)| (d(g, gp) - d(gp, g)) * v)
                .sum()
        })
        .collect())
}

/// Field-free product of decoupled oscillator eigenstates, the reference case
/// with an `R`-independent `Φ`.
pub mod decoupled {
    use std::sync::Arc;

    use num_complex::Complex64 as C64;

    use crate::atom::GaussianState;
    use crate::ef::{
        BoModel, BoPotential, ConditionalSource, EfPair, UniformConditional, ZeroConditional,
    };
    use crate::error::Result;
    use crate::grid::{ComplexField, GridSpec, Stencil};
    use crate::units::{UniformField, UnitSystem, Vec3};

    #[derive(Debug, Clone, Copy)]
    pub struct DecoupledOscillators {
        pub nuclear_mass: f64,
        pub electron_mass: f64,
        pub k_nuclear: f64,
        pub k_electron: f64,
        pub units: UnitSystem,
    }

    impl DecoupledOscillators {
        fn lambda(&self, mass: f64, k: f64) -> f64 {
            (mass * k).sqrt() / self.units.hbar
        }

        fn omega(mass: f64, k: f64) -> f64 {
            (k / mass).sqrt()
        }

        pub fn energy(&self, dim_n: usize, dim_e: usize) -> f64 {
            let h = self.units.hbar;
            0.5 * h * (dim_n as f64 * Self::omega(self.nuclear_mass, self.k_nuclear)
                + dim_e as f64 * Self::omega(self.electron_mass, self.k_electron))
        }

        pub fn model(&self, stencil: Stencil) -> BoModel {
            BoModel {
                units: self.units,
                field: UniformField::zero(),
                electron_mass: self.electron_mass,
                potential: BoPotential::Decoupled { k_e: self.k_electron, k_n: self.k_nuclear },
                stencil,
            }
        }

        pub fn pair(&self, nuclear: &GridSpec, electronic: &GridSpec) -> Result<EfPair> {
            let ln = self.lambda(self.nuclear_mass, self.k_nuclear);
            let le = self.lambda(self.electron_mass, self.k_electron);
            let gn = GaussianState::new(nuclear.dim(), Vec3::zeros(), Vec3::zeros(), [ln; 3])?;
            let ge = GaussianState::new(electronic.dim(), Vec3::zeros(), Vec3::zeros(), [le; 3])?;
            let chi = ComplexField::from_fn(nuclear, |p| gn.value(p));
            let phi: Arc<dyn ConditionalSource> =
                Arc::new(UniformConditional::new(nuclear.clone(), ComplexField::from_fn(electronic, |p| ge.value(p))));
            let w = -self.energy(nuclear.dim(), electronic.dim()) / self.units.hbar;
            let dchi = chi.map(|c| c * C64::new(0.0, w));
            let zero: Arc<dyn ConditionalSource> = Arc::new(ZeroConditional::new(nuclear.clone(), electronic.clone()));
            Ok(EfPair::new(chi, phi, "decoupled")?.with_time_derivatives(Some(dchi), Some(zero)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::decoupled::DecoupledOscillators;
    use super::*;
    use crate::ef::{compute_geometry, GeometryOptions};
    use crate::grid::GridSpec;

    #[test]
    fn d_term_single_nucleus_is_zero() {
        let g = GridSpec::cube(2, 9, -1.0, 1.0).unwrap();
        let a = VectorField::from_fn(&g, |p| [p[0] * p[1], p[1], 0.0]);
        let d = d_term(&a, &NucleusAxes(vec![vec![0, 1]]), &[vec![1.0, 2.0]], 0, 40, Stencil::Central2).unwrap();
        assert_eq!(d, vec![0.0, 0.0]);
    }

    #[test]
    fn d_term_linear_fields() {
        // two nuclei in 1D: A_0 = a x1, A_1 = b x0 → D_0 = (∂_1 A_0 - ∂_0 A_1) v1 = (a - b) v1
        let g = GridSpec::cube(2, 9, -1.0, 1.0).unwrap();
        let (a, b) = (0.7, -1.3);
        let f = VectorField::from_fn(&g, |p| [a * p[1], b * p[0], 0.0]);
        let axes = NucleusAxes(vec![vec![0], vec![1]]);
        let v = [vec![0.4], vec![2.5]];
        let d0 = d_term(&f, &axes, &v, 0, 31, Stencil::Central2).unwrap();
        let d1 = d_term(&f, &axes, &v, 1, 31, Stencil::Central2).unwrap();
        assert!((d0[0] - (a - b) * 2.5).abs() < 1e-13);
        assert!((d1[0] - (b - a) * 0.4).abs() < 1e-13);
    }

    #[test]
    fn decoupled_residuals_at_floor() {
        let m = DecoupledOscillators {
            nuclear_mass: 1.0,
            electron_mass: 1.0,
            k_nuclear: 1.0,
            k_electron: 1.0,
            units: UnitSystem::default(),
        };
        let gn = GridSpec::cube(1, 2049, -10.0, 10.0).unwrap();
        let ge = GridSpec::cube(1, 2049, -10.0, 10.0).unwrap();
        let pair = m.pair(&gn, &ge).unwrap();
        let op = m.model(Stencil::Richardson).on_grid(&ge);
        let nucleus = ParticleSpec::new(1.0, 1).unwrap();
        let units = UnitSystem::default();
        let geo = compute_geometry(
            &pair,
            &op,
            &nucleus,
            &crate::units::UniformField::zero(),
            &units,
            GeometryOptions { stencil: Stencil::Richardson },
        )
        .unwrap();
        let r = eom_residuals(&pair, &geo, &op, &nucleus, &units).unwrap();
        assert!(r.nuclear_residual < 1e-8, "{}", r.nuclear_residual);
        assert!(r.electronic_residual < 1e-8, "{}", r.electronic_residual);
    }

    #[test]
    fn quadratic_bowl_force() {
        let g = GridSpec::cube(2, 17, -1.0, 1.0).unwrap();
        let field = crate::units::UniformField::zero();
        let units = UnitSystem::default();
        let nucleus = ParticleSpec::new(1.0, 1).unwrap();
        let m = DecoupledOscillators {
            nuclear_mass: 1.0,
            electron_mass: 1.0,
            k_nuclear: 2.0,
            k_electron: 1.0,
            units,
        };
        let ge = GridSpec::cube(1, 41, -8.0, 8.0).unwrap();
        let pair = m.pair(&g, &ge).unwrap();
        let op = m.model(Stencil::Central2).on_grid(&ge);
        let geo = compute_geometry(&pair, &op, &nucleus, &field, &units, GeometryOptions { stencil: Stencil::Central2 })
            .unwrap();
        let f = force_fields(&geo, None, &nucleus, &units).unwrap();
        // ε = const + R², so E = -∇ε = -2R
        for i in g.interior_indices(1) {
            let p = g.point(i);
            assert!((f.e_like.components[0][i] + 2.0 * p[0]).abs() < 1e-12);
            assert!((f.e_like.components[1][i] + 2.0 * p[1]).abs() < 1e-12);
        }
        assert!(f.b_like.max_abs_over(&g.interior_indices(1)) < 1e-14);
    }
}

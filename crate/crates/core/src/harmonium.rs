//! Harmonium in a uniform magnetic field: a nucleus of mass `M` bound to one
//! electron of mass `m` by `V(r) = μω₀²r²/2`.
//!
//! With `M_c = M + m`, `μ = Mm/M_c`, `B ∥ z` and pseudo-momentum `K`:
//!
//! ```text
//! α   = (1 + M m c² ω₀² / (e² B²))⁻¹
//! r₀  = -c K×B / (e B²)
//! φ_K = exp(i (M-m)/(2ħM_c) α K_⊥·r) φ₀(r - α r₀)
//! ```
//!
//! where `φ₀` is a Gaussian with transverse frequency `Ω_⊥ = √(ω₀² + e²B²/(4μ²c²))`
//! and longitudinal frequency `ω₀`.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::atom::{
    build_ef_pair, compensation_check, AtomSeparation, CompensationReport, GaussianState, MagneticGaussianConditional,
    RelativeState,
};
use crate::ef::{
    compute_geometry, BoModel, BoPotential, ConditionalSource, EfGeometry, EfPair, GeometryOptions, PeierlsKinetic,
    ZeroConditional,
};
use crate::error::{Error, Result};
use crate::grid::{derivative_taps, second_derivative_taps, wfn::fmt17, ComplexField, GridSpec, Stencil};
use crate::units::{decompose_k, ParticleSpec, PseudoMomentum, UniformField, UnitSystem, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmoniumParams {
    pub nuclear_mass: f64,
    pub electron_mass: f64,
    pub omega0: f64,
    pub field: UniformField,
    pub k: PseudoMomentum,
    pub units: UnitSystem,
}

impl HarmoniumParams {
    pub fn new(
        nuclear_mass: f64,
        electron_mass: f64,
        omega0: f64,
        field: UniformField,
        k: Vec3,
        units: UnitSystem,
    ) -> Result<Self> {
        let p = Self { nuclear_mass, electron_mass, omega0, field, k: PseudoMomentum::new(k), units };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.units.validate()?;
        if !(self.nuclear_mass > 0.0 && self.electron_mass > 0.0) {
            return Err(Error::Config("masses must be positive".into()));
        }
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return Err(Error::Config("ω₀ must be positive".into()));
        }
        let b = self.field.b;
        if b[0] != 0.0 || b[1] != 0.0 {
            return Err(Error::Precondition("the analytic solution needs B along z".into()));
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.nuclear_mass + self.electron_mass
    }

    pub fn reduced_mass(&self) -> f64 {
        self.nuclear_mass * self.electron_mass / self.total_mass()
    }

    /// `B` in units of `m c ω₀ / e`.
    pub fn reduced_field(&self) -> f64 {
        let u = &self.units;
        self.field.b.norm() * u.e / (self.electron_mass * u.c * self.omega0)
    }

    pub fn nucleus(&self) -> ParticleSpec {
        ParticleSpec { mass: self.nuclear_mass, charge_number: 1 }
    }

    /// `μω₀²`, the spring constant of the binding potential.
    pub fn spring(&self) -> f64 {
        self.reduced_mass() * self.omega0 * self.omega0
    }
}

/// Constant terms of the relative eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyTerms {
    /// `K_z² / 2M_c`
    pub cm_parallel: f64,
    /// `(1-α) K_⊥² / 2M_c`
    pub cm_perp: f64,
    /// `ħΩ_⊥`
    pub transverse: f64,
    /// `ħω₀/2`
    pub longitudinal: f64,
}

impl EnergyTerms {
    /// Total energy for the full (3) or planar (2) model.
    pub fn total(&self, dim: usize) -> f64 {
        if dim == 3 {
            self.cm_parallel + self.cm_perp + self.transverse + self.longitudinal
        } else {
            self.cm_perp + self.transverse
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HarmoniumSolution {
    pub params: HarmoniumParams,
    pub alpha: f64,
    pub r0: Vec3,
    pub k_parallel: Vec3,
    pub k_perp: Vec3,
    pub omega_perp: f64,
    /// Phase wavevector `(M-m) α K_⊥ / (2ħM_c)`.
    pub phase_k: Vec3,
    pub energy: EnergyTerms,
}

pub fn alpha_from_reduced(b: f64, mass_ratio: f64) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    let b2 = b * b;
    b2 / (b2 + mass_ratio)
}

pub fn solve(params: &HarmoniumParams) -> Result<HarmoniumSolution> {
    params.validate()?;
    let u = &params.units;
    let (big_m, m) = (params.nuclear_mass, params.electron_mass);
    let mc = params.total_mass();
    let mu = params.reduced_mass();
    let b = params.field.b;
    let b2 = b.norm_squared();
    let (k_par, k_perp) = decompose_k(&params.k.k, &params.field);
    let (alpha, r0) = if b2 == 0.0 {
        (0.0, Vec3::zeros())
    } else {
        let alpha = 1.0 / (1.0 + big_m * m * u.c * u.c * params.omega0 * params.omega0 / (u.e * u.e * b2));
        (alpha, -u.c * params.k.k.cross(&b) / (u.e * b2))
    };
    let wc = u.e * b2.sqrt() / (2.0 * mu * u.c);
    let omega_perp = (params.omega0 * params.omega0 + wc * wc).sqrt();
    Ok(HarmoniumSolution {
        params: *params,
        alpha,
        r0,
        k_parallel: k_par,
        k_perp,
        omega_perp,
        phase_k: k_perp * ((big_m - m) * alpha / (2.0 * u.hbar * mc)),
        energy: EnergyTerms {
            cm_parallel: k_par.norm_squared() / (2.0 * mc),
            cm_perp: (1.0 - alpha) * k_perp.norm_squared() / (2.0 * mc),
            transverse: u.hbar * omega_perp,
            longitudinal: 0.5 * u.hbar * params.omega0,
        },
    })
}

impl HarmoniumSolution {
    /// The relative ground state, in three dimensions or in the plane normal to `B`.
    pub fn ground_state(&self, dim: usize) -> Result<GaussianState> {
        if dim != 2 && dim != 3 {
            return Err(Error::Config(format!("harmonium runs in 2 or 3 dimensions, not {dim}")));
        }
        if dim == 2 && self.params.k.k[2] != 0.0 {
            return Err(Error::Config("the planar model needs K_z = 0".into()));
        }
        let u = &self.params.units;
        let mu = self.params.reduced_mass();
        let lt = mu * self.omega_perp / u.hbar;
        let lz = mu * self.params.omega0 / u.hbar;
        GaussianState::new(dim, self.phase_k, self.r0 * self.alpha, [lt, lt, lz])
    }

    pub fn total_energy(&self, dim: usize) -> f64 {
        self.energy.total(dim)
    }

    pub fn separation(&self, dim: usize) -> Result<AtomSeparation> {
        let p = &self.params;
        Ok(AtomSeparation {
            k: p.k,
            n_electrons: 1,
            nucleus: p.nucleus(),
            electron_mass: p.electron_mass,
            field: p.field,
            units: p.units,
            phi_k: RelativeState::Gaussian(self.ground_state(dim)?),
            interaction: BoPotential::Relative { k: p.spring() },
        })
    }

    /// EF pair of the eigenstate with `∂_tχ = -iEχ/ħ` and a static `Φ`.
    pub fn ef_pair(&self, nuclear: &GridSpec, electronic: &GridSpec) -> Result<EfPair> {
        let dim = electronic.dim();
        let pair = build_ef_pair(&self.separation(dim)?, nuclear, electronic)?;
        let w = -self.total_energy(dim) / self.params.units.hbar;
        let dchi = pair.chi.map(|c| c * C64::new(0.0, w));
        let dphi = pair.dphi_dt.clone();
        Ok(pair.with_time_derivatives(Some(dchi), dphi))
    }
}

/// `A₀ = -α M/(M+m) K_⊥`.
pub fn residual_connection(params: &HarmoniumParams) -> Result<Vec3> {
    let s = solve(params)?;
    Ok(-s.k_perp * (s.alpha * params.nuclear_mass / params.total_mass()))
}

/// `J = [K_∥ + (1-α) K_⊥] / (M+m)` for unit nuclear density.
pub fn nuclear_current_closed_form(params: &HarmoniumParams) -> Result<Vec3> {
    let s = solve(params)?;
    Ok((s.k_parallel + s.k_perp * (1.0 - s.alpha)) / params.total_mass())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub mass_ratio: f64,
    pub b: f64,
    pub alpha: f64,
    pub coefficient: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScanMode {
    /// One block per field value, mass ratio varying fastest.
    MassRatio,
    /// One block per mass ratio, field varying fastest.
    Field,
}

/// Coefficient `-α M/(M+m)` of `A₀ = coefficient · K_⊥`, with `B` in units of `m c ω₀ / e`.
pub fn coefficient_scan(mass_ratios: &[f64], b_values: &[f64], mode: ScanMode) -> Result<Vec<ScanRow>> {
    if mass_ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::Config("mass ratios must be positive".into()));
    }
    if b_values.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
        return Err(Error::Config("field values must be non-negative".into()));
    }
    let row = |rho: f64, b: f64| {
        let alpha = alpha_from_reduced(b, rho);
        // + 0.0 turns the B = 0 coefficient into +0
        ScanRow { mass_ratio: rho, b, alpha, coefficient: -alpha * rho / (1.0 + rho) + 0.0 }
    };
    Ok(match mode {
        ScanMode::MassRatio => b_values.iter().flat_map(|&b| mass_ratios.iter().map(move |&r| row(r, b))).collect(),
        ScanMode::Field => mass_ratios.iter().flat_map(|&r| b_values.iter().map(move |&b| row(r, b))).collect(),
    })
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut s = String::from("mass_ratio,B_over_mcw0_e,alpha,coefficient\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{}\n", fmt17(r.mass_ratio), fmt17(r.b), fmt17(r.alpha), fmt17(r.coefficient)));
    }
    s
}

/// Clamped-nucleus electronic ground state `Π` for `H_BO = T_e + μω₀²|r-R|²/2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoState {
    pub params: HarmoniumParams,
    /// `ω₀ √(μ/m)`
    pub omega_e: f64,
    /// `√(ω_e² + (eB/2mc)²)`
    pub omega_e_perp: f64,
}

pub fn bo_state(params: &HarmoniumParams) -> Result<BoState> {
    params.validate()?;
    let u = &params.units;
    let omega_e = params.omega0 * (params.reduced_mass() / params.electron_mass).sqrt();
    let wl = u.e * params.field.b.norm() / (2.0 * params.electron_mass * u.c);
    Ok(BoState { params: *params, omega_e, omega_e_perp: (omega_e * omega_e + wl * wl).sqrt() })
}

impl BoState {
    pub fn pi(&self, dim: usize) -> Result<GaussianState> {
        let p = &self.params;
        let lt = p.electron_mass * self.omega_e_perp / p.units.hbar;
        let lz = p.electron_mass * self.omega_e / p.units.hbar;
        GaussianState::new(dim, Vec3::zeros(), Vec3::zeros(), [lt, lt, lz])
    }

    pub fn energy(&self, dim: usize) -> f64 {
        let h = self.params.units.hbar;
        if dim == 3 {
            h * self.omega_e_perp + 0.5 * h * self.omega_e
        } else {
            h * self.omega_e_perp
        }
    }

    /// `Φ^BO_R(r) = e^{(ie/2ħc)(B×r)·R} Π(r - R)`.
    pub fn value(&self, dim: usize, r: &Vec3, big_r: &Vec3) -> Result<C64> {
        let u = &self.params.units;
        let g = u.e / (2.0 * u.hbar * u.c);
        let phase = g * self.params.field.b.cross(r).dot(big_r);
        Ok(C64::from_polar(1.0, phase) * self.pi(dim)?.value(&(r - big_r)))
    }

    pub fn conditional(&self, nuclear: &GridSpec, electronic: &GridSpec) -> Result<MagneticGaussianConditional> {
        let p = &self.params;
        let src = MagneticGaussianConditional::new(
            nuclear,
            electronic,
            &p.units,
            &p.field,
            Vec3::zeros(),
            self.pi(electronic.dim())?,
        )?;
        src.check_coverage()?;
        Ok(src)
    }

    /// BO conditional with the plane-wave nuclear factor of the exact eigenstate.
    pub fn pair(&self, nuclear: &GridSpec, electronic: &GridSpec) -> Result<EfPair> {
        let p = &self.params;
        let kn = p.k.k * (p.nuclear_mass / (p.total_mass() * p.units.hbar));
        let chi = ComplexField::from_fn(nuclear, |r| C64::from_polar(1.0, kn.dot(r)));
        let phi: Arc<dyn ConditionalSource> = Arc::new(self.conditional(nuclear, electronic)?);
        let zero: Arc<dyn ConditionalSource> = Arc::new(ZeroConditional::new(nuclear.clone(), electronic.clone()));
        Ok(EfPair::new(chi, phi, "born-oppenheimer")?.with_time_derivatives(None, Some(zero)))
    }
}

/// `Φ^BO_R` over an electronic grid at one nuclear position.
pub fn bo_conditional_state(params: &HarmoniumParams, big_r: &Vec3, grid: &GridSpec) -> Result<ComplexField> {
    let st = bo_state(params)?;
    let pi = st.pi(grid.dim())?;
    let u = &params.units;
    let g = u.e / (2.0 * u.hbar * u.c);
    let b = params.field.b;
    Ok(ComplexField::from_fn(grid, |r| C64::from_polar(1.0, g * b.cross(r).dot(big_r)) * pi.value(&(r - big_r))))
}

fn bo_model(params: &HarmoniumParams, stencil: Stencil) -> BoModel {
    BoModel {
        units: params.units,
        field: params.field,
        electron_mass: params.electron_mass,
        potential: BoPotential::Relative { k: params.spring() },
        stencil,
    }
}

pub fn harmonium_compensation(
    params: &HarmoniumParams,
    nuclear: &GridSpec,
    electronic: &GridSpec,
    stencil: Stencil,
    tolerance: f64,
) -> Result<(CompensationReport, EfGeometry)> {
    let sol = solve(params)?;
    let sep = sol.separation(electronic.dim())?;
    let (mut report, geo) = compensation_check(&sep, nuclear, electronic, stencil, tolerance)?;
    report.model = "harmonium".into();
    Ok((report, geo))
}

pub fn bo_compensation(
    params: &HarmoniumParams,
    nuclear: &GridSpec,
    electronic: &GridSpec,
    stencil: Stencil,
    tolerance: f64,
) -> Result<(CompensationReport, EfGeometry)> {
    let st = bo_state(params)?;
    let pair = st.pair(nuclear, electronic)?;
    let op = bo_model(params, stencil).on_grid(electronic);
    let geo = compute_geometry(&pair, &op, &params.nucleus(), &params.field, &params.units, GeometryOptions { stencil })?;
    let report = CompensationReport::from_geometry("harmonium-bo", &geo, &params.field, electronic, None, tolerance);
    Ok((report, geo))
}

/// Applies the planar relative operator (without its constant terms):
/// `-ħ²∇²/2μ - (ieħB/2c)(1/m - 1/M)(x∂_y - y∂_x) + μΩ_⊥²(x²+y²)/2`.
fn apply_relative(sol: &HarmoniumSolution, grid: &GridSpec, stencil: Stencil, psi: &[C64], out: &mut [C64]) {
    let p = &sol.params;
    let u = &p.units;
    let mu = p.reduced_mass();
    let kin = u.hbar * u.hbar / (2.0 * mu);
    let ang = C64::new(0.0, -u.e * u.hbar * p.field.b[2] / (2.0 * u.c) * (1.0 / p.electron_mass - 1.0 / p.nuclear_mass));
    let spring = 0.5 * mu * sol.omega_perp * sol.omega_perp;
    let (nx, ny) = (grid.n()[0], grid.n()[1]);
    let (hx, hy) = (grid.spacing()[0], grid.spacing()[1]);
    for i in 0..nx {
        for j in 0..ny {
            let idx = i * ny + j;
            let (x, y) = (grid.coord(0, i), grid.coord(1, j));
            let dxx = second_derivative_taps(i, nx, hx, stencil).apply(|k| psi[k * ny + j]);
            let dyy = second_derivative_taps(j, ny, hy, stencil).apply(|k| psi[i * ny + k]);
            let dx = derivative_taps(i, nx, hx, stencil).apply(|k| psi[k * ny + j]);
            let dy = derivative_taps(j, ny, hy, stencil).apply(|k| psi[i * ny + k]);
            out[idx] = -(dxx + dyy) * kin + ang * (dy * x - dx * y) + psi[idx] * (spring * (x * x + y * y));
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridEigenstate {
    pub state: ComplexField,
    pub eigenvalue: f64,
    pub iterations: usize,
}

/// Ground state of the planar relative problem by shifted power iteration
/// (explicit imaginary-time steps). The grid is centered on the guiding center.
pub fn relative_ground_state_on_grid(
    params: &HarmoniumParams,
    grid: &GridSpec,
    stencil: Stencil,
    tolerance: f64,
    max_iter: usize,
) -> Result<GridEigenstate> {
    if grid.dim() != 2 {
        return Err(Error::Config("the relative eigensolve runs on a planar grid".into()));
    }
    let sol = solve(params)?;
    let p = &sol.params;
    let u = &p.units;
    let mu = p.reduced_mass();
    let taps = match stencil {
        Stencil::Central2 => 4.0,
        Stencil::Richardson => 16.0 / 3.0,
    };
    let r2max = (0..2).map(|a| grid.origin()[a].abs().max(grid.upper(a).abs()).powi(2)).sum::<f64>();
    let wb = u.e * p.field.b[2].abs() / (2.0 * u.c) * (1.0 / p.electron_mass - 1.0 / p.nuclear_mass).abs();
    let bound = u.hbar * u.hbar / (2.0 * mu) * taps * grid.spacing().iter().map(|h| 1.0 / (h * h)).sum::<f64>()
        + 0.5 * mu * sol.omega_perp * sol.omega_perp * r2max
        + 2.0 * u.hbar * wb * r2max.sqrt() * grid.spacing().iter().map(|h| 1.5 / h).sum::<f64>();
    let dt = 1.0 / bound;
    let interior: Vec<bool> = (0..grid.len()).map(|i| grid.is_interior(i, 2)).collect();
    let w = grid.trapezoid_weights();
    let norm = |v: &mut [C64]| {
        let n: f64 = v.iter().zip(&w).map(|(a, w)| a.norm_sqr() * w).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= n);
    };
    let mut psi: Vec<C64> = (0..grid.len())
        .map(|i| {
            let q = grid.point(i);
            if interior[i] { C64::new((-0.5 * (q[0] * q[0] + q[1] * q[1])).exp() * (1.0 + 0.1 * q[0]), 0.0) } else { C64::new(0.0, 0.0) }
        })
        .collect();
    norm(&mut psi);
    let mut hpsi = vec![C64::new(0.0, 0.0); psi.len()];
    let mut prev = f64::INFINITY;
    for it in 0..max_iter {
        apply_relative(&sol, grid, stencil, &psi, &mut hpsi);
        let e: f64 = psi.iter().zip(&hpsi).zip(&w).map(|((a, b), w)| (a.conj() * b).re * w).sum();
        let resid: f64 =
            (0..psi.len()).filter(|&i| interior[i]).map(|i| (hpsi[i] - psi[i] * e).norm_sqr() * w[i]).sum::<f64>().sqrt();
        if resid < tolerance && (e - prev).abs() < tolerance * tolerance {
            return Ok(GridEigenstate {
                state: ComplexField { spec: grid.clone(), values: psi },
                eigenvalue: e,
                iterations: it,
            });
        }
        prev = e;
        for i in 0..psi.len() {
            psi[i] = if interior[i] { psi[i] - (hpsi[i] - psi[i] * e) * dt } else { C64::new(0.0, 0.0) };
        }
        norm(&mut psi);
    }
    Err(Error::Contract(format!("relative eigensolve did not converge in {max_iter} iterations")))
}

/// `‖(H - E)Ψ‖ / ‖Ψ‖` for the full two-body Hamiltonian on the interior of the
/// product grid, with `Ψ = χΦ` from the EF pair of the eigenstate.
pub fn full_hamiltonian_residual(
    sol: &HarmoniumSolution,
    nuclear: &GridSpec,
    electronic: &GridSpec,
    stencil: Stencil,
) -> Result<f64> {
    let p = &sol.params;
    let u = &p.units;
    let pair = sol.ef_pair(nuclear, electronic)?;
    let (nn, ne) = (nuclear.len(), electronic.len());
    let mut psi = vec![C64::new(0.0, 0.0); nn * ne];
    for ir in 0..nn {
        pair.phi.fill_slice(ir, &mut psi[ir * ne..(ir + 1) * ne]);
        let c = pair.chi.values[ir];
        psi[ir * ne..(ir + 1) * ne].iter_mut().for_each(|v| *v *= c);
    }
    let tn = PeierlsKinetic::new(nuclear, p.nuclear_mass, u.e, u, &p.field, stencil);
    let te = PeierlsKinetic::new(electronic, p.electron_mass, -u.e, u, &p.field, stencil);
    let mut hpsi = vec![C64::new(0.0, 0.0); nn * ne];
    let mut tmp = vec![C64::new(0.0, 0.0); ne.max(nn)];
    for ir in 0..nn {
        te.apply(&psi[ir * ne..(ir + 1) * ne], &mut tmp[..ne]);
        let big_r = nuclear.point(ir);
        for ie in 0..ne {
            let v = 0.5 * p.spring() * (electronic.point(ie) - big_r).norm_squared();
            hpsi[ir * ne + ie] = tmp[ie] + psi[ir * ne + ie] * v;
        }
    }
    let mut col = vec![C64::new(0.0, 0.0); nn];
    for ie in 0..ne {
        for ir in 0..nn {
            col[ir] = psi[ir * ne + ie];
        }
        tn.apply(&col, &mut tmp[..nn]);
        for ir in 0..nn {
            hpsi[ir * ne + ie] += tmp[ir];
        }
    }
    let e = sol.total_energy(electronic.dim());
    let (mut num, mut den) = (0.0, 0.0);
    for ir in (0..nn).filter(|&i| nuclear.is_interior(i, 2)) {
        for ie in 0..ne {
            let k = ir * ne + ie;
            num += (hpsi[k] - psi[k] * e).norm_sqr();
            den += psi[k].norm_sqr();
        }
    }
    Ok((num / den).sqrt())
}

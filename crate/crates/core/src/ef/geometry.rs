//! Berry connection, total vector potential, scalar potential and curvature.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use super::conditional::ConditionalSource;
use super::hamiltonian::BoHamiltonian;
use super::pair::EfPair;
use crate::error::{Error, Result};
use crate::grid::{gradient, gradient_axis, GridSpec, RealField, Stencil, VectorField};
use crate::units::{symmetric_gauge_a, ParticleSpec, UniformField, UnitSystem};

const COLUMN_CHUNK: usize = 64;

#[derive(Debug, Clone, Copy)]
pub struct GeometryOptions {
    pub stencil: Stencil,
}

impl Default for GeometryOptions {
    fn default() -> Self {
        Self { stencil: Stencil::Richardson }
    }
}

/// Per-nuclear-point integrals over `r` that involve `∇_R Φ`.
#[derive(Debug, Clone)]
pub struct ConnectionMoments {
    pub spec: GridSpec,
    /// `∫|Φ_R|² dr`
    pub norm: Vec<f64>,
    /// `∫Φ* ∂_a Φ dr`, one vector per nuclear axis
    pub overlap: Vec<Vec<C64>>,
    /// `∫|∂_a Φ|² dr`
    pub grad_sq: Vec<Vec<f64>>,
}

impl ConnectionMoments {
    fn zeros(spec: &GridSpec) -> Self {
        let (n, d) = (spec.len(), spec.dim());
        Self {
            spec: spec.clone(),
            norm: vec![0.0; n],
            overlap: vec![vec![C64::new(0.0, 0.0); n]; d],
            grad_sq: vec![vec![0.0; n]; d],
        }
    }

    fn add(&mut self, o: &Self) {
        self.norm.iter_mut().zip(&o.norm).for_each(|(a, b)| *a += b);
        for (x, y) in self.overlap.iter_mut().zip(&o.overlap) {
            x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
        }
        for (x, y) in self.grad_sq.iter_mut().zip(&o.grad_sq) {
            x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
        }
    }

    /// Streams over electronic columns; chunk partial sums are added in a fixed
    /// order so the result does not depend on the thread count.
    pub fn compute(phi: &dyn ConditionalSource, stencil: Stencil) -> Self {
        let nuc = phi.nuclear();
        let el = phi.electronic();
        let w = el.trapezoid_weights();
        let (nr, d) = (nuc.len(), nuc.dim());
        let chunks: Vec<(usize, usize)> =
            (0..el.len()).step_by(COLUMN_CHUNK).map(|s| (s, (s + COLUMN_CHUNK).min(el.len()))).collect();
        let batch = 2 * rayon::current_num_threads().max(1);
        let mut total = Self::zeros(nuc);
        for group in chunks.chunks(batch) {
            let parts: Vec<Self> = group
                .par_iter()
                .map(|&(lo, hi)| {
                    let mut acc = Self::zeros(nuc);
                    let mut col = vec![C64::new(0.0, 0.0); nr];
                    let mut der = vec![C64::new(0.0, 0.0); nr];
                    for ie in lo..hi {
                        let wi = w[ie];
                        phi.fill_column(ie, &mut col);
                        for (n, c) in acc.norm.iter_mut().zip(&col) {
                            *n += wi * c.norm_sqr();
                        }
                        for a in 0..d {
                            gradient_axis(nuc, &col, a, stencil, &mut der);
                            for ir in 0..nr {
                                acc.overlap[a][ir] += col[ir].conj() * der[ir] * wi;
                                acc.grad_sq[a][ir] += der[ir].norm_sqr() * wi;
                            }
                        }
                    }
                    acc
                })
                .collect();
            for p in &parts {
                total.add(p);
            }
        }
        total
    }
}

/// Antisymmetric derivative `F_ab = ∂_a V_b - ∂_b V_a` for `a < b`.
#[derive(Debug, Clone, Serialize)]
pub struct Curvature {
    pub spec: GridSpec,
    pub pairs: Vec<(usize, usize)>,
    pub values: Vec<Vec<f64>>,
}

impl Curvature {
    /// `F_ab` for any ordered pair; zero on the diagonal.
    pub fn component(&self, a: usize, b: usize, idx: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let k = self.pairs.iter().position(|&p| p == (lo, hi)).expect("axis pair");
        sign * self.values[k][idx]
    }

    pub fn max_abs_over(&self, idx: &[usize]) -> f64 {
        self.values.iter().flat_map(|v| idx.iter().map(move |&i| v[i].abs())).fold(0.0, f64::max)
    }
}

pub fn curl(v: &VectorField<f64>, stencil: Stencil) -> Result<Curvature> {
    let d = v.dim();
    let grads: Vec<VectorField<f64>> =
        (0..d).map(|b| gradient(&v.component(b), stencil)).collect::<Result<_>>()?;
    let mut pairs = Vec::new();
    let mut values = Vec::new();
    for a in 0..d {
        for b in a + 1..d {
            pairs.push((a, b));
            // ∂_a V_b - ∂_b V_a
            values.push(
                grads[b].components[a].iter().zip(&grads[a].components[b]).map(|(x, y)| x - y).collect(),
            );
        }
    }
    Ok(Curvature { spec: v.spec.clone(), pairs, values })
}

/// `Re ⟨Φ|-iħ∇_R|Φ⟩` and the largest imaginary residue over the valid interior.
pub fn berry_connection(
    pair: &EfPair,
    stencil: Stencil,
    units: &UnitSystem,
) -> Result<(VectorField<f64>, f64)> {
    let m = ConnectionMoments::compute(pair.phi.as_ref(), stencil);
    let (a, im) = connection_from_moments(&m, units.hbar);
    let g = pair.nuclear();
    let valid = dilate_invalid(g, &pair.valid, 3);
    let residue = (0..g.len())
        .filter(|&i| valid[i] && g.is_interior(i, 2))
        .flat_map(|i| im.components.iter().map(move |c| c[i].abs()))
        .fold(0.0, f64::max);
    Ok((a, residue))
}

pub(crate) fn connection_from_moments(m: &ConnectionMoments, hbar: f64) -> (VectorField<f64>, VectorField<f64>) {
    let a = VectorField {
        spec: m.spec.clone(),
        components: m.overlap.iter().map(|c| c.iter().map(|s| hbar * s.im).collect()).collect(),
    };
    let residue = VectorField {
        spec: m.spec.clone(),
        components: m.overlap.iter().map(|c| c.iter().map(|s| -hbar * s.re).collect()).collect(),
    };
    (a, residue)
}

/// `A_tot = A_ext(R) - (c / (Z e)) A_berry`.
pub fn total_vector_potential(
    a_berry: &VectorField<f64>,
    field: &UniformField,
    z: i32,
    units: &UnitSystem,
) -> Result<VectorField<f64>> {
    if z == 0 {
        return Err(Error::Division("total vector potential needs a nonzero nuclear charge".into()));
    }
    let s = units.c / (z as f64 * units.e);
    let g = &a_berry.spec;
    let mut out = a_berry.clone();
    for i in 0..g.len() {
        let ext = symmetric_gauge_a(&g.point(i), field);
        for (ax, comp) in out.components.iter_mut().enumerate() {
            comp[i] = ext[ax] - s * a_berry.components[ax][i];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ScalarPotential {
    pub epsilon: RealField,
    pub q: RealField,
    /// `Re ⟨Φ|H_BO|Φ⟩`
    pub h_bo: RealField,
    /// Largest `|Im ⟨Φ|H_BO - iħ∂_t|Φ⟩|`.
    pub imag_residue: f64,
}

/// `ε = Re⟨Φ|H_BO - iħ∂_t|Φ⟩ + Q` with `Q = (1/2M)[ħ²⟨∇Φ|∇Φ⟩ - A²]`.
pub fn scalar_potential(
    pair: &EfPair,
    ham: &dyn BoHamiltonian,
    nuclear_mass: f64,
    dphi_dt: Option<&dyn ConditionalSource>,
    moments: &ConnectionMoments,
    units: &UnitSystem,
) -> Result<ScalarPotential> {
    let dphi_dt = dphi_dt.ok_or_else(|| {
        Error::Contract("the scalar potential needs ∂Φ/∂t (pass a zero source for stationary states)".into())
    })?;
    if ham.electronic() != pair.electronic() {
        return Err(Error::Config("Hamiltonian and Φ use different electronic grids".into()));
    }
    let nuc = pair.nuclear();
    let el = pair.electronic();
    let w = el.trapezoid_weights();
    let hbar = units.hbar;
    let vals: Vec<(f64, f64, f64)> = (0..nuc.len())
        .into_par_iter()
        .map(|ir| {
            if !pair.valid[ir] {
                return (0.0, 0.0, 0.0);
            }
            let big_r = nuc.point(ir);
            let mut phi = vec![C64::new(0.0, 0.0); el.len()];
            let mut hphi = vec![C64::new(0.0, 0.0); el.len()];
            let mut dt = vec![C64::new(0.0, 0.0); el.len()];
            pair.phi.fill_slice(ir, &mut phi);
            ham.apply(&big_r, &phi, &mut hphi);
            dphi_dt.fill_slice(ir, &mut dt);
            let mut h = C64::new(0.0, 0.0);
            let mut t = C64::new(0.0, 0.0);
            for k in 0..phi.len() {
                h += phi[k].conj() * hphi[k] * w[k];
                t += phi[k].conj() * dt[k] * w[k];
            }
            let total = h - C64::i() * hbar * t;
            (h.re, total.re, total.im)
        })
        .collect();
    let (a, _) = connection_from_moments(moments, hbar);
    let q: Vec<f64> = (0..nuc.len())
        .map(|ir| {
            let mut s = 0.0;
            for ax in 0..nuc.dim() {
                s += hbar * hbar * moments.grad_sq[ax][ir] - a.components[ax][ir].powi(2);
            }
            s / (2.0 * nuclear_mass)
        })
        .collect();
    let eps: Vec<f64> = vals.iter().zip(&q).map(|(v, q)| v.1 + q).collect();
    let imag_residue = vals
        .iter()
        .zip(&pair.valid)
        .filter(|(_, &ok)| ok)
        .map(|(v, _)| v.2.abs())
        .fold(0.0, f64::max);
    Ok(ScalarPotential {
        epsilon: RealField { spec: nuc.clone(), values: eps },
        q: RealField { spec: nuc.clone(), values: q },
        h_bo: RealField { spec: nuc.clone(), values: vals.iter().map(|v| v.0).collect() },
        imag_residue,
    })
}

/// Every geometric object of a pair in one pass.
#[derive(Debug, Clone)]
pub struct EfGeometry {
    pub a_berry: VectorField<f64>,
    /// Imaginary part of `⟨Φ|-iħ∇_R|Φ⟩`.
    pub a_berry_imag: VectorField<f64>,
    pub a_total: VectorField<f64>,
    pub epsilon: RealField,
    pub q: RealField,
    pub h_bo: RealField,
    pub epsilon_imag_residue: f64,
    /// Curl of `A_tot`.
    pub curvature: Curvature,
    /// Curl of `A_berry`.
    pub berry_curvature: Curvature,
    pub partial_norm: RealField,
    /// False where a stencil touches an invalid nuclear point.
    pub valid: Vec<bool>,
    pub stencil: Stencil,
}

impl EfGeometry {
    /// Interior (two layers deep) points where the geometry is valid.
    pub fn interior(&self) -> Vec<usize> {
        let g = &self.a_berry.spec;
        (0..g.len()).filter(|&i| self.valid[i] && g.is_interior(i, 2)).collect()
    }

    pub fn a_berry_imag_max(&self) -> f64 {
        let idx = self.interior();
        self.a_berry_imag.components.iter().flat_map(|c| idx.iter().map(move |&i| c[i].abs())).fold(0.0, f64::max)
    }
}

fn dilate_invalid(spec: &GridSpec, valid: &[bool], reach: usize) -> Vec<bool> {
    let mut out = valid.to_vec();
    for i in (0..valid.len()).filter(|&i| !valid[i]) {
        let m = spec.unravel(i);
        for a in 0..spec.dim() {
            let s = spec.stride(a);
            for k in 1..=reach {
                if m[a] >= k {
                    out[i - k * s] = false;
                }
                if m[a] + k < spec.n()[a] {
                    out[i + k * s] = false;
                }
            }
        }
    }
    out
}

pub fn compute_geometry(
    pair: &EfPair,
    ham: &dyn BoHamiltonian,
    nucleus: &ParticleSpec,
    field: &UniformField,
    units: &UnitSystem,
    options: GeometryOptions,
) -> Result<EfGeometry> {
    let moments = ConnectionMoments::compute(pair.phi.as_ref(), options.stencil);
    let (a_berry, a_berry_imag) = connection_from_moments(&moments, units.hbar);
    let a_total = total_vector_potential(&a_berry, field, nucleus.charge_number, units)?;
    let sp = scalar_potential(pair, ham, nucleus.mass, pair.dphi_dt.as_deref(), &moments, units)?;
    let curvature = curl(&a_total, options.stencil)?;
    let berry_curvature = curl(&a_berry, options.stencil)?;
    let valid = dilate_invalid(pair.nuclear(), &pair.valid, 3);
    Ok(EfGeometry {
        partial_norm: RealField { spec: pair.nuclear().clone(), values: moments.norm.clone() },
        a_berry,
        a_berry_imag,
        a_total,
        epsilon: sp.epsilon,
        q: sp.q,
        h_bo: sp.h_bo,
        epsilon_imag_residue: sp.imag_residue,
        curvature,
        berry_curvature,
        valid,
        stencil: options.stencil,
    })
}

//! Superposition of two hydrogen eigenstates (1s and 2p_z) with different
//! centre-of-mass momenta, at zero field:
//!
//! ```text
//! Ψ(R, r, t) = 2^{-1/2} Σ_j exp[(i/ħ) P_j·X] exp(-iE_j t/ħ) φ_j(r - R),   X = (MR + mr)/(M+m)
//! ```
//!
//! Its Berry curvature is finite even though `B = 0`, so the compensation that
//! holds for eigenstates does not extend to wave-packets.
//!
//! Two orbital normalizations appear below. `f_overlap` and `g_vector` use
//! `φ₁ = e^{-r̃}/√(2π)`, whose norm is 1/2; they are the tabulated closed forms.
//! The norm, connection and curvature of the packet need unit-normalized
//! orbitals, for which both overlaps are larger by `√2`.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::atom::CompensationReport;
use crate::ef::{constancy, curl, ConditionalSource, ConnectionMoments};
use crate::error::{Error, Result};
use crate::grid::{quadrature_3d, GridSpec, Stencil, VectorField};
use crate::units::{UnitSystem, Vec3};

/// Bohr radius `ħ²/(m_r e²)`.
pub fn bohr_radius(reduced_mass: f64, units: &UnitSystem) -> f64 {
    units.hbar * units.hbar / (reduced_mass * units.e * units.e)
}

/// `f(q) = 384 i q̃_z / (9 + 4q̃²)³`, `q̃ = a q`.
pub fn f_overlap(q: &Vec3, reduced_mass: f64, units: &UnitSystem) -> C64 {
    let qt = q * bohr_radius(reduced_mass, units);
    C64::new(0.0, 384.0 * qt[2] / (9.0 + 4.0 * qt.norm_squared()).powi(3))
}

/// `G(q) = (i/3) f(q) q + (32/a) / (9 + 4q̃²)² ẑ`.
pub fn g_vector(q: &Vec3, reduced_mass: f64, units: &UnitSystem) -> [C64; 3] {
    let a = bohr_radius(reduced_mass, units);
    let qt2 = (q * a).norm_squared();
    let f = f_overlap(q, reduced_mass, units);
    let pre = C64::new(0.0, 1.0 / 3.0) * f;
    let mut g = [pre * q[0], pre * q[1], pre * q[2]];
    g[2] += 32.0 / (a * (9.0 + 4.0 * qt2).powi(2));
    g
}

/// Orbital prefactor convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OrbitalNorm {
    /// `φ₁ = e^{-r̃}/√(2π a³)`.
    Tabulated,
    /// `φ₁ = e^{-r̃}/√(π a³)`.
    Unit,
}

/// The 1s and 2p_z orbitals with Bohr radius `a`.
#[derive(Debug, Clone, Copy)]
pub struct Orbitals {
    pub a: f64,
    pub norm: OrbitalNorm,
}

impl Orbitals {
    fn c1(&self) -> f64 {
        let s = match self.norm {
            OrbitalNorm::Tabulated => 2.0,
            OrbitalNorm::Unit => 1.0,
        };
        1.0 / (s * std::f64::consts::PI * self.a.powi(3)).sqrt()
    }

    fn c2(&self) -> f64 {
        1.0 / (4.0 * (2.0 * std::f64::consts::PI * self.a.powi(3)).sqrt())
    }

    pub fn phi1(&self, r: &Vec3) -> f64 {
        self.c1() * (-r.norm() / self.a).exp()
    }

    /// `r̃ e^{-r̃/2} cos θ = (z/a) e^{-r̃/2}`
    pub fn phi2(&self, r: &Vec3) -> f64 {
        self.c2() * (r[2] / self.a) * (-0.5 * r.norm() / self.a).exp()
    }

    pub fn grad_phi1(&self, r: &Vec3) -> Vec3 {
        let rn = r.norm();
        if rn == 0.0 {
            return Vec3::zeros();
        }
        -r * (self.phi1(r) / (self.a * rn))
    }

    pub fn grad_phi2(&self, r: &Vec3) -> Vec3 {
        let rn = r.norm();
        let e = self.c2() * (-0.5 * rn / self.a).exp() / self.a;
        let mut g = if rn == 0.0 { Vec3::zeros() } else { -r * (r[2] * e / (2.0 * self.a * rn)) };
        g[2] += e;
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HydrogenPacket {
    pub p1: Vec3,
    pub p2: Vec3,
    pub e1: f64,
    pub e2: f64,
    pub nuclear_mass: f64,
    pub electron_mass: f64,
    pub units: UnitSystem,
}

/// Which constant sits in the `q̃²` term of the reduced curvature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MassReading {
    /// `q̃ = ħ ΔP / (M e²)`, what `q = mΔP/(ħ(M+m))` gives.
    Nuclear,
    /// `q̃ = ħ ΔP / (m_r e²)`.
    Reduced,
}

impl HydrogenPacket {
    pub fn new(p1: Vec3, p2: Vec3, e1: f64, e2: f64, nuclear_mass: f64, electron_mass: f64, units: UnitSystem) -> Result<Self> {
        units.validate()?;
        if !(nuclear_mass > 0.0 && electron_mass > 0.0) {
            return Err(Error::Config("masses must be positive".into()));
        }
        if e1 == e2 {
            return Err(Error::Config("the two states need distinct energies".into()));
        }
        let s = Self { p1, p2, e1, e2, nuclear_mass, electron_mass, units };
        if s.f_unit().norm() >= 1.0 {
            return Err(Error::Precondition("packet norm would vanish".into()));
        }
        Ok(s)
    }

    /// Hydrogen-like 1s/2p pair with `E_n = -m_r e⁴/(2ħ²n²)`.
    pub fn hydrogenic(p1: Vec3, p2: Vec3, nuclear_mass: f64, electron_mass: f64, units: UnitSystem) -> Result<Self> {
        let mr = nuclear_mass * electron_mass / (nuclear_mass + electron_mass);
        let ry = mr * units.e.powi(4) / (2.0 * units.hbar * units.hbar);
        Self::new(p1, p2, -ry, -ry / 4.0, nuclear_mass, electron_mass, units)
    }

    pub fn reduced_mass(&self) -> f64 {
        self.nuclear_mass * self.electron_mass / (self.nuclear_mass + self.electron_mass)
    }

    pub fn total_mass(&self) -> f64 {
        self.nuclear_mass + self.electron_mass
    }

    pub fn bohr_radius(&self) -> f64 {
        bohr_radius(self.reduced_mass(), &self.units)
    }

    pub fn delta_p(&self) -> Vec3 {
        self.p1 - self.p2
    }

    /// `q = m (P₁ - P₂) / (ħ (M+m))`
    pub fn q(&self) -> Vec3 {
        self.delta_p() * (self.electron_mass / (self.units.hbar * self.total_mass()))
    }

    /// `θ = [(E₂ - E₁)t + (P₁ - P₂)·R] / ħ`
    pub fn phase(&self, big_r: &Vec3, t: f64) -> f64 {
        ((self.e2 - self.e1) * t + self.delta_p().dot(big_r)) / self.units.hbar
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.units.hbar / (self.e2 - self.e1).abs()
    }

    fn f_unit(&self) -> C64 {
        f_overlap(&self.q(), self.reduced_mass(), &self.units) * std::f64::consts::SQRT_2
    }

    fn g_unit(&self) -> [C64; 3] {
        let g = g_vector(&self.q(), self.reduced_mass(), &self.units);
        g.map(|c| c * std::f64::consts::SQRT_2)
    }

    /// `∫|Ψ|² dr = 1 + Re[e^{iθ} f(q)]`.
    pub fn norm_factor(&self, big_r: &Vec3, t: f64) -> f64 {
        1.0 + (C64::from_polar(1.0, self.phase(big_r, t)) * self.f_unit()).re
    }

    /// `A = M(P₁+P₂)/(2(M+m)) + (ħ/2n) Im[e^{iθ} G(q)]`.
    pub fn berry_connection(&self, big_r: &Vec3, t: f64) -> Vec3 {
        let n = self.norm_factor(big_r, t);
        let e = C64::from_polar(1.0, self.phase(big_r, t));
        let g = self.g_unit();
        let base = (self.p1 + self.p2) * (self.nuclear_mass / (2.0 * self.total_mass()));
        base + Vec3::new((e * g[0]).im, (e * g[1]).im, (e * g[2]).im) * (0.5 * self.units.hbar / n)
    }

    /// `H = (1/2n²) ΔP × Re{[e^{iθ} + f*] G}`, valid for any `ΔP`.
    pub fn berry_curvature(&self, big_r: &Vec3, t: f64) -> Vec3 {
        let n = self.norm_factor(big_r, t);
        let w = C64::from_polar(1.0, self.phase(big_r, t)) + self.f_unit().conj();
        let g = self.g_unit();
        let re = Vec3::new((w * g[0]).re, (w * g[1]).re, (w * g[2]).re);
        self.delta_p().cross(&re) / (2.0 * n * n)
    }

    fn check_x_aligned(&self) -> Result<()> {
        let d = self.delta_p();
        if d[1].abs() > 1e-14 * d.norm() || d[2].abs() > 1e-14 * d.norm() {
            return Err(Error::Precondition(
                "P1 - P2 must lie along x for the reduced curvature; use the general curl".into(),
            ));
        }
        Ok(())
    }

    /// `H_y = -16√2 (m_r e²/ħ²) ΔP_x cos θ / (9 + 4q̃²)²` for `P₁ - P₂ ∥ x`.
    pub fn berry_curvature_hy(&self, big_r: &Vec3, t: f64) -> Result<f64> {
        self.berry_curvature_hy_reading(big_r, t, MassReading::Nuclear)
    }

    pub fn berry_curvature_hy_reading(&self, big_r: &Vec3, t: f64, reading: MassReading) -> Result<f64> {
        self.check_x_aligned()?;
        let u = &self.units;
        let dp = self.delta_p()[0];
        let mass = match reading {
            MassReading::Nuclear => self.nuclear_mass,
            MassReading::Reduced => self.reduced_mass(),
        };
        let qt = u.hbar * dp / (mass * u.e * u.e);
        let amp = 16.0 * std::f64::consts::SQRT_2 / self.bohr_radius();
        Ok(-amp * dp * self.phase(big_r, t).cos() / (9.0 + 4.0 * qt * qt).powi(2))
    }

    /// Curl of [`Self::berry_connection`] by fourth-order central differences.
    pub fn numeric_curl(&self, big_r: &Vec3, t: f64, h: f64) -> Vec3 {
        let d = |a: usize, b: usize| {
            let at = |s: f64| {
                let mut p = *big_r;
                p[a] += s;
                self.berry_connection(&p, t)[b]
            };
            (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
        };
        Vec3::new(d(1, 2) - d(2, 1), d(2, 0) - d(0, 2), d(0, 1) - d(1, 0))
    }

    /// `Ψ(R, R + s, t)` and `∇_R Ψ` at fixed `r`, in relative coordinates.
    fn psi_and_grad(&self, orb: &Orbitals, big_r: &Vec3, s: &Vec3, t: f64) -> (C64, [C64; 3]) {
        let u = &self.units;
        let mc = self.total_mass();
        let x = big_r + s * (self.electron_mass / mc);
        let mut psi = C64::new(0.0, 0.0);
        let mut grad = [C64::new(0.0, 0.0); 3];
        for (p, e, phi, gphi) in [
            (self.p1, self.e1, orb.phi1(s), orb.grad_phi1(s)),
            (self.p2, self.e2, orb.phi2(s), orb.grad_phi2(s)),
        ] {
            let w = C64::from_polar(std::f64::consts::FRAC_1_SQRT_2, (p.dot(&x) - e * t) / u.hbar);
            psi += w * phi;
            for a in 0..3 {
                grad[a] += w * (C64::new(0.0, p[a] * self.nuclear_mass / (mc * u.hbar)) * phi - gphi[a]);
            }
        }
        (psi, grad)
    }

    /// `ħ Im⟨Ψ|∇_RΨ⟩ / ⟨Ψ|Ψ⟩` by spherical quadrature over `s = r - R`.
    pub fn berry_connection_quadrature(&self, big_r: &Vec3, t: f64, radial_extent: f64, tolerance: f64) -> Result<Vec3> {
        let orb = Orbitals { a: self.bohr_radius(), norm: OrbitalNorm::Unit };
        let v: [C64; 4] = quadrature_3d(
            |s| {
                let (p, g) = self.psi_and_grad(&orb, big_r, s, t);
                [C64::new(p.norm_sqr(), 0.0), p.conj() * g[0], p.conj() * g[1], p.conj() * g[2]]
            },
            radial_extent,
            tolerance,
        )?;
        let n = v[0].re;
        Ok(Vec3::new(v[1].im, v[2].im, v[3].im) * (self.units.hbar / n))
    }
}

/// `Φ_R(r) = Ψ(R, r, t) / √n(R, t)` on grids, evaluated on demand.
pub struct PacketConditional {
    packet: HydrogenPacket,
    orbitals: Orbitals,
    t: f64,
    nuclear: GridSpec,
    electronic: GridSpec,
}

impl PacketConditional {
    pub fn new(packet: &HydrogenPacket, t: f64, nuclear: &GridSpec, electronic: &GridSpec) -> Result<Self> {
        if nuclear.dim() != 3 || electronic.dim() != 3 {
            return Err(Error::Config("the packet lives on three-dimensional grids".into()));
        }
        Ok(Self {
            packet: *packet,
            orbitals: Orbitals { a: packet.bohr_radius(), norm: OrbitalNorm::Unit },
            t,
            nuclear: nuclear.clone(),
            electronic: electronic.clone(),
        })
    }
}

impl ConditionalSource for PacketConditional {
    fn nuclear(&self) -> &GridSpec {
        &self.nuclear
    }
    fn electronic(&self) -> &GridSpec {
        &self.electronic
    }
    fn value(&self, ir: usize, ie: usize) -> C64 {
        let big_r = self.nuclear.point(ir);
        let s = self.electronic.point(ie) - big_r;
        let (psi, _) = self.packet.psi_and_grad(&self.orbitals, &big_r, &s, self.t);
        psi / self.packet.norm_factor(&big_r, self.t).sqrt()
    }
}

/// Runs the compensation metrics on the packet at zero field: the gridded
/// connection, its constancy and its curvature. `ε` is not evaluated.
pub fn packet_compensation(
    packet: &HydrogenPacket,
    t: f64,
    nuclear: &GridSpec,
    electronic: &GridSpec,
    stencil: Stencil,
    tolerance: f64,
) -> Result<CompensationReport> {
    let src: Arc<dyn ConditionalSource> = Arc::new(PacketConditional::new(packet, t, nuclear, electronic)?);
    let m = ConnectionMoments::compute(src.as_ref(), stencil);
    let u = &packet.units;
    let a_berry = VectorField {
        spec: nuclear.clone(),
        components: m.overlap.iter().map(|c| c.iter().map(|s| u.hbar * s.im).collect()).collect(),
    };
    let imag = m.overlap.iter().flat_map(|c| c.iter().map(|s| (u.hbar * s.re).abs())).fold(0.0, f64::max);
    // B = 0, Z = 1: A_tot = -(c/e) A
    let scale = -u.c / u.e;
    let a_total = a_berry.map(|v| v * scale);
    let idx = nuclear.interior_indices(2);
    let comps: Vec<&[f64]> = a_total.components.iter().map(|c| c.as_slice()).collect();
    let c = constancy(&comps, &idx, 0.0);
    let curv = curl(&a_total, stencil)?;
    let curvature_max = curv.max_abs_over(&idx);
    Ok(CompensationReport {
        model: "hydrogen-packet".into(),
        a0: None,
        a_tot_mean: c.mean.clone(),
        pass: c.metric < tolerance,
        a_tot_constancy: c,
        epsilon_mean: None,
        epsilon_constancy: None,
        q_mean: None,
        q_constancy: None,
        curvature_max,
        partial_norm_max_deviation: idx.iter().map(|&i| (m.norm[i] - 1.0).abs()).fold(0.0, f64::max),
        a_berry_imag_max: imag,
        epsilon_imag_max: None,
        tolerance,
        nuclear_grid: nuclear.clone(),
        electronic_grid: Some(electronic.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn units() -> UnitSystem {
        UnitSystem::default()
    }

    #[test]
    fn f_examples() {
        assert_eq!(f_overlap(&Vec3::zeros(), 1.0, &units()), C64::new(0.0, 0.0));
        let f = f_overlap(&Vec3::new(0.0, 0.0, 1.0), 1.0, &units());
        assert!((f.im - 384.0 / 2197.0).abs() < 1e-16);
        let q = Vec3::new(0.3, -0.7, 0.45);
        assert_eq!(f_overlap(&-q, 1.0, &units()), -f_overlap(&q, 1.0, &units()));
    }

    #[test]
    fn g_at_zero() {
        let g = g_vector(&Vec3::zeros(), 1.0, &units());
        assert!((g[2].re - 32.0 / 81.0).abs() < 1e-16);
        assert_eq!(g[0], C64::new(0.0, 0.0));
    }

    #[test]
    fn unit_orbitals_normalized() {
        let orb = Orbitals { a: 1.0, norm: OrbitalNorm::Unit };
        let n1: f64 = quadrature_3d(|r| orb.phi1(r).powi(2), 40.0, 1e-11).unwrap();
        let n2: f64 = quadrature_3d(|r| orb.phi2(r).powi(2), 60.0, 1e-11).unwrap();
        assert!((n1 - 1.0).abs() < 1e-10 && (n2 - 1.0).abs() < 1e-10, "{n1} {n2}");
        let tab = Orbitals { a: 1.0, norm: OrbitalNorm::Tabulated };
        let nt: f64 = quadrature_3d(|r| tab.phi1(r).powi(2), 40.0, 1e-11).unwrap();
        assert!((nt - 0.5).abs() < 1e-10);
    }

    #[test]
    fn connection_reduces_at_equal_momenta() {
        let p = Vec3::new(0.3, 0.1, -0.2);
        let pk = HydrogenPacket::hydrogenic(p, p, 5.0, 1.0, units()).unwrap();
        let a = pk.berry_connection(&Vec3::new(0.2, 0.0, 0.1), 0.0);
        assert!((a - p * (5.0 / 6.0)).norm() < 1e-15);
        assert_eq!(pk.berry_curvature_hy(&Vec3::zeros(), 0.3).unwrap(), 0.0);
    }

    #[test]
    fn general_curvature_matches_numeric_curl() {
        let pk = HydrogenPacket::hydrogenic(Vec3::new(1.1, -0.4, 0.9), Vec3::new(-0.2, 0.3, -1.3), 3.0, 1.0, units())
            .unwrap();
        for (r, t) in [(Vec3::new(0.1, 0.2, -0.3), 0.7), (Vec3::new(-1.0, 0.4, 0.8), 2.5)] {
            let d = pk.berry_curvature(&r, t) - pk.numeric_curl(&r, t, 1e-3);
            assert!(d.norm() < 1e-9, "{}", d.norm());
        }
    }

    #[test]
    fn reduced_hy_matches_general() {
        let pk = HydrogenPacket::hydrogenic(Vec3::new(1.5, 0.0, 0.0), Vec3::new(-0.5, 0.0, 0.0), 4.0, 1.0, units())
            .unwrap();
        let r = Vec3::new(0.3, -0.1, 0.2);
        let h = pk.berry_curvature(&r, 1.2);
        assert!((h[1] - pk.berry_curvature_hy(&r, 1.2).unwrap()).abs() < 1e-14);
        assert!(h[0].abs() < 1e-15 && h[2].abs() < 1e-15);
        let bad = HydrogenPacket::hydrogenic(Vec3::new(1.0, 0.2, 0.0), Vec3::zeros(), 4.0, 1.0, units()).unwrap();
        assert!(matches!(bad.berry_curvature_hy(&r, 0.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn quadrature_connection_matches_closed_form() {
        let pk = HydrogenPacket::hydrogenic(Vec3::new(0.8, 0.3, 1.6), Vec3::new(-0.4, 0.0, -1.1), 2.0, 1.0, units())
            .unwrap();
        let r = Vec3::new(0.2, -0.3, 0.5);
        let a = pk.berry_connection_quadrature(&r, 0.9, 60.0, 1e-10).unwrap();
        assert!((a - pk.berry_connection(&r, 0.9)).norm() < 1e-8);
    }
}

//! Clamped-nucleus Hamiltonians `H_BO(R)` acting on electronic slices.
//!
//! The magnetic kinetic term uses Peierls link phases, so the discrete operator
//! is exactly covariant under gauge changes that are linear in `r`, in
//! particular under the magnetic translations of the symmetric gauge.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::grid::{GridSpec, Stencil};
use crate::units::{UniformField, UnitSystem, Vec3};

pub trait BoHamiltonian: Send + Sync {
    fn electronic(&self) -> &GridSpec;
    /// `out = H_BO(R) φ` on the electronic grid.
    fn apply(&self, nuclear_point: &Vec3, phi: &[C64], out: &mut [C64]);
}

/// `(1/2m)(-iħ∇ - (q/c)A)²` on a grid, with `A = B × r / 2`.
#[derive(Debug, Clone)]
pub struct PeierlsKinetic {
    grid: GridSpec,
    coeff: f64,
    stencil: Stencil,
    /// `e^{iβ}` for the hop `r → r + s h e_a`, indexed `[axis][step-1][point]`.
    links: Vec<Vec<Vec<C64>>>,
}

impl PeierlsKinetic {
    pub fn new(
        grid: &GridSpec,
        mass: f64,
        charge: f64,
        units: &UnitSystem,
        field: &UniformField,
        stencil: Stencil,
    ) -> Self {
        let steps = stencil.reach();
        let links = (0..grid.dim())
            .map(|a| {
                let h = grid.spacing()[a];
                (1..=steps)
                    .map(|s| {
                        (0..grid.len())
                            .map(|i| {
                                let bxr = field.b.cross(&grid.point(i));
                                let beta = -(charge / (units.hbar * units.c)) * 0.5 * s as f64 * h * bxr[a];
                                C64::from_polar(1.0, beta)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self { grid: grid.clone(), coeff: units.hbar * units.hbar / (2.0 * mass), stencil, links }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn apply(&self, psi: &[C64], out: &mut [C64]) {
        let g = &self.grid;
        let zero = C64::new(0.0, 0.0);
        out.fill(zero);
        for a in 0..g.dim() {
            let n = g.n()[a];
            let stride = g.stride(a);
            let h = g.spacing()[a];
            let weights: &[(usize, f64)] = match self.stencil {
                Stencil::Central2 => &[(1, 1.0)],
                Stencil::Richardson => &[(1, 4.0 / 3.0), (2, -1.0 / 3.0)],
            };
            for i in 0..psi.len() {
                let k = (i / stride) % n;
                let mut acc = zero;
                for &(s, w) in weights {
                    let link = self.links[a][s - 1][i];
                    let fwd = if k + s < n { link * psi[i + s * stride] } else { zero };
                    let bwd = if k >= s { link.conj() * psi[i - s * stride] } else { zero };
                    let hs = s as f64 * h;
                    acc += (fwd + bwd - 2.0 * psi[i]) * (w / (hs * hs));
                }
                out[i] -= acc * self.coeff;
            }
        }
    }
}

/// Potential energy terms of `H_BO`; every term is a function of `(r, R)`.
#[derive(Clone)]
pub enum BoPotential {
    /// `k |r - R|² / 2`.
    Relative { k: f64 },
    /// `k_e |r|² / 2 + k_n |R|² / 2`.
    Decoupled { k_e: f64, k_n: f64 },
    Custom(Arc<dyn Fn(&Vec3, &Vec3) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for BoPotential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoPotential::Relative { k } => write!(f, "Relative {{ k: {k} }}"),
            BoPotential::Decoupled { k_e, k_n } => write!(f, "Decoupled {{ k_e: {k_e}, k_n: {k_n} }}"),
            BoPotential::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl BoPotential {
    pub fn eval(&self, r: &Vec3, big_r: &Vec3) -> f64 {
        match self {
            BoPotential::Relative { k } => 0.5 * k * (r - big_r).norm_squared(),
            BoPotential::Decoupled { k_e, k_n } => 0.5 * k_e * r.norm_squared() + 0.5 * k_n * big_r.norm_squared(),
            BoPotential::Custom(f) => f(r, big_r),
        }
    }
}

/// One electron in the uniform field plus a potential.
#[derive(Debug, Clone)]
pub struct BoModel {
    pub units: UnitSystem,
    pub field: UniformField,
    pub electron_mass: f64,
    pub potential: BoPotential,
    pub stencil: Stencil,
}

impl BoModel {
    pub fn on_grid(&self, grid: &GridSpec) -> BoOperator {
        BoOperator {
            kinetic: PeierlsKinetic::new(
                grid,
                self.electron_mass,
                -self.units.e,
                &self.units,
                &self.field,
                self.stencil,
            ),
            points: grid.points(),
            potential: self.potential.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoOperator {
    kinetic: PeierlsKinetic,
    points: Vec<Vec3>,
    potential: BoPotential,
}

impl BoHamiltonian for BoOperator {
    fn electronic(&self) -> &GridSpec {
        self.kinetic.grid()
    }

    fn apply(&self, nuclear_point: &Vec3, phi: &[C64], out: &mut [C64]) {
        self.kinetic.apply(phi, out);
        for ((o, p), r) in out.iter_mut().zip(phi).zip(&self.points) {
            *o += p * self.potential.eval(r, nuclear_point);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::integrate_values;

    fn energy(op: &BoOperator, grid: &GridSpec, big_r: &Vec3, phi: &[C64]) -> C64 {
        let mut out = vec![C64::new(0.0, 0.0); phi.len()];
        op.apply(big_r, phi, &mut out);
        let w = grid.trapezoid_weights();
        let prod: Vec<C64> = phi.iter().zip(&out).map(|(a, b)| a.conj() * b).collect();
        integrate_values(&w, &prod)
    }

    #[test]
    fn oscillator_ground_energy_converges() {
        // 1D oscillator, ħ = m = ω = 1: E0 = 1/2
        let units = UnitSystem::default();
        for (stencil, order) in [(Stencil::Central2, 4.0), (Stencil::Richardson, 16.0)] {
            let model = BoModel {
                units,
                field: UniformField::zero(),
                electron_mass: 1.0,
                potential: BoPotential::Relative { k: 1.0 },
                stencil,
            };
            let err = |n: usize| {
                let g = GridSpec::cube(1, n, -10.0, 10.0).unwrap();
                let phi: Vec<C64> = g
                    .points()
                    .iter()
                    .map(|p| C64::new((-p[0] * p[0] / 2.0).exp() / std::f64::consts::PI.powf(0.25), 0.0))
                    .collect();
                (energy(&model.on_grid(&g), &g, &Vec3::zeros(), &phi).re - 0.5).abs()
            };
            let r = err(101) / err(201);
            assert!((r - order).abs() < 0.15 * order, "{stencil:?}: {r}");
        }
    }

    #[test]
    fn magnetic_translation_covariance() {
        // ⟨Φ_R|H|Φ_R⟩ is independent of R for Φ_R = e^{(ie/2ħc)(B×r)·R} g(r-R)
        let units = UnitSystem::default();
        let field = UniformField::along_z(1.3);
        let model = BoModel {
            units,
            field,
            electron_mass: 1.0,
            potential: BoPotential::Relative { k: 0.8 },
            stencil: Stencil::Central2,
        };
        let g = GridSpec::cube(2, 81, -10.0, 10.0).unwrap();
        let op = model.on_grid(&g);
        let e_at = |big_r: Vec3| {
            let phi: Vec<C64> = g
                .points()
                .iter()
                .map(|r| {
                    let s = r - big_r;
                    let ph = 0.5 * field.b.cross(r).dot(&big_r);
                    C64::from_polar((-0.7 * s.norm_squared() / 2.0).exp(), ph + 0.3 * s[0])
                })
                .collect();
            energy(&op, &g, &big_r, &phi)
        };
        let e0 = e_at(Vec3::zeros());
        for r in [Vec3::new(0.25, 0.0, 0.0), Vec3::new(-0.5, 0.375, 0.0), Vec3::new(0.1234, -0.77, 0.0)] {
            assert!((e_at(r) - e0).norm() < 1e-11 * e0.norm(), "{}", (e_at(r) - e0).norm());
        }
    }
}

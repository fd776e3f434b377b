use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::conditional::{ConditionalSource, DenseConditional, LinearCombination};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec, RealField};
use crate::units::Vec3;

/// `Ψ(R, r)` on a nuclear × electronic product grid, nuclear index major.
#[derive(Debug, Clone, PartialEq)]
pub struct FullWavefunction {
    pub nuclear: GridSpec,
    pub electronic: GridSpec,
    pub values: Vec<C64>,
}

impl FullWavefunction {
    pub fn new(nuclear: GridSpec, electronic: GridSpec, values: Vec<C64>) -> Result<Self> {
        if values.len() != nuclear.len() * electronic.len() {
            return Err(Error::Config("wavefunction size does not match the product grid".into()));
        }
        Ok(Self { nuclear, electronic, values })
    }

    pub fn from_fn(nuclear: &GridSpec, electronic: &GridSpec, f: impl Fn(&Vec3, &Vec3) -> C64) -> Self {
        let rs = electronic.points();
        let mut values = Vec::with_capacity(nuclear.len() * rs.len());
        for ir in 0..nuclear.len() {
            let big_r = nuclear.point(ir);
            values.extend(rs.iter().map(|r| f(&big_r, r)));
        }
        Self { nuclear: nuclear.clone(), electronic: electronic.clone(), values }
    }

    /// `χ(R) Φ_R(r)` tabulated from a pair.
    pub fn from_pair(pair: &EfPair) -> Self {
        let ne = pair.phi.electronic().len();
        let mut values = vec![C64::new(0.0, 0.0); pair.chi.values.len() * ne];
        for (ir, chunk) in values.chunks_mut(ne).enumerate() {
            pair.phi.fill_slice(ir, chunk);
            let c = pair.chi.values[ir];
            chunk.iter_mut().for_each(|v| *v *= c);
        }
        Self { nuclear: pair.chi.spec.clone(), electronic: pair.phi.electronic().clone(), values }
    }

    pub fn value(&self, ir: usize, ie: usize) -> C64 {
        self.values[ir * self.electronic.len() + ie]
    }

    pub fn slice(&self, ir: usize) -> &[C64] {
        let ne = self.electronic.len();
        &self.values[ir * ne..(ir + 1) * ne]
    }
}

/// Marginal `χ(R)` and conditional `Φ_R(r)`, with optional time derivatives.
#[derive(Clone)]
pub struct EfPair {
    pub chi: ComplexField,
    pub phi: Arc<dyn ConditionalSource>,
    /// False at nuclear points where `Φ` is undefined (nodes of `χ`).
    pub valid: Vec<bool>,
    pub gauge_tag: String,
    pub dchi_dt: Option<ComplexField>,
    pub dphi_dt: Option<Arc<dyn ConditionalSource>>,
}

impl std::fmt::Debug for EfPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EfPair")
            .field("nuclear", &self.chi.spec)
            .field("electronic", self.phi.electronic())
            .field("gauge_tag", &self.gauge_tag)
            .finish()
    }
}

impl EfPair {
    pub fn new(chi: ComplexField, phi: Arc<dyn ConditionalSource>, gauge_tag: impl Into<String>) -> Result<Self> {
        if phi.nuclear() != &chi.spec {
            return Err(Error::Config("χ and Φ use different nuclear grids".into()));
        }
        let valid = vec![true; chi.values.len()];
        Ok(Self { chi, phi, valid, gauge_tag: gauge_tag.into(), dchi_dt: None, dphi_dt: None })
    }

    pub fn with_time_derivatives(
        mut self,
        dchi_dt: Option<ComplexField>,
        dphi_dt: Option<Arc<dyn ConditionalSource>>,
    ) -> Self {
        self.dchi_dt = dchi_dt;
        self.dphi_dt = dphi_dt;
        self
    }

    pub fn nuclear(&self) -> &GridSpec {
        &self.chi.spec
    }

    pub fn electronic(&self) -> &GridSpec {
        self.phi.electronic()
    }

    /// `∫|Φ_R|² dr` at every nuclear point.
    pub fn partial_norms(&self) -> Vec<f64> {
        use rayon::prelude::*;
        let w = self.electronic().trapezoid_weights();
        (0..self.chi.values.len())
            .into_par_iter()
            .map(|ir| {
                let mut s = vec![C64::new(0.0, 0.0); w.len()];
                self.phi.fill_slice(ir, &mut s);
                s.iter().zip(&w).map(|(v, w)| v.norm_sqr() * w).sum()
            })
            .collect()
    }

    pub fn invalid_points(&self) -> Vec<Vec<usize>> {
        let g = self.nuclear();
        (0..self.valid.len())
            .filter(|&i| !self.valid[i])
            .map(|i| g.unravel(i)[..g.dim()].to_vec())
            .collect()
    }
}

fn factorize(psi: &FullWavefunction, r_ref: &Vec3, chi_floor: f64, allow_nodes: bool) -> Result<EfPair> {
    if !(chi_floor >= 0.0) {
        return Err(Error::Config("chi_floor must be non-negative".into()));
    }
    let ne = psi.electronic.len();
    let w = psi.electronic.trapezoid_weights();
    let ie_ref = psi.electronic.nearest(r_ref);
    let mods: Vec<f64> = (0..psi.nuclear.len())
        .map(|ir| psi.slice(ir).iter().zip(&w).map(|(v, w)| v.norm_sqr() * w).sum::<f64>().sqrt())
        .collect();
    let max = mods.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::Precondition("wavefunction has zero norm".into()));
    }
    let floor = chi_floor * max;
    let node = |ir: usize| mods[ir] <= floor;
    let bad: Vec<usize> = (0..mods.len())
        .filter(|&ir| {
            if node(ir) {
                !allow_nodes
            } else {
                psi.value(ir, ie_ref).norm() <= chi_floor * mods[ir]
            }
        })
        .collect();
    if !bad.is_empty() {
        let d = psi.nuclear.dim();
        return Err(Error::GaugeReference {
            points: bad.iter().map(|&i| psi.nuclear.unravel(i)[..d].to_vec()).collect(),
        });
    }
    let mut chi = vec![C64::new(0.0, 0.0); mods.len()];
    let mut valid = vec![true; mods.len()];
    let mut phi = vec![C64::new(0.0, 0.0); psi.values.len()];
    for ir in 0..mods.len() {
        if node(ir) {
            valid[ir] = false;
            continue;
        }
        let p = psi.value(ir, ie_ref);
        chi[ir] = p / p.norm() * mods[ir];
        let inv = 1.0 / chi[ir];
        for (o, v) in phi[ir * ne..(ir + 1) * ne].iter_mut().zip(psi.slice(ir)) {
            *o = v * inv;
        }
    }
    let r = psi.electronic.point(ie_ref);
    let phi = DenseConditional::new(psi.nuclear.clone(), psi.electronic.clone(), phi)?;
    Ok(EfPair {
        chi: ComplexField::new(psi.nuclear.clone(), chi)?,
        phi: Arc::new(phi),
        valid,
        gauge_tag: format!("reference-point r_ref=({}, {}, {})", r[0], r[1], r[2]),
        dchi_dt: None,
        dphi_dt: None,
    })
}

/// Factorizes `Ψ` in the reference-point gauge: `|χ(R)|² = ∫|Ψ(R, r)|² dr` and the
/// phase of `χ(R)` is that of `Ψ(R, r_ref)` (nearest grid point). `chi_floor` is
/// relative to `max|χ|`. Any nuclear point where the phase cannot be fixed,
/// including nodes of `χ`, is reported as a gauge-reference error.
pub fn split(psi: &FullWavefunction, r_ref: &Vec3, chi_floor: Option<f64>) -> Result<EfPair> {
    factorize(psi, r_ref, chi_floor.unwrap_or(1e-12), false)
}

/// Like [`split`], but nodes of `χ` are flagged invalid instead of rejected.
pub fn split_flagging_nodes(psi: &FullWavefunction, r_ref: &Vec3, chi_floor: Option<f64>) -> Result<EfPair> {
    factorize(psi, r_ref, chi_floor.unwrap_or(1e-12), true)
}

/// `χ → e^{iθ} χ`, `Φ → e^{-iθ} Φ`. Time derivatives are carried along when present.
pub fn gauge_transform(pair: &EfPair, theta: &RealField, dtheta_dt: Option<&RealField>) -> Result<EfPair> {
    if theta.spec != pair.chi.spec {
        return Err(Error::Config("θ must live on the nuclear grid".into()));
    }
    let ph: Vec<C64> = theta.values.iter().map(|&t| C64::from_polar(1.0, t)).collect();
    let ph_conj: Vec<C64> = ph.iter().map(|p| p.conj()).collect();
    let zero = vec![0.0; ph.len()];
    let thdot = dtheta_dt.map(|f| f.values.as_slice()).unwrap_or(&zero);

    let chi = ComplexField {
        spec: pair.chi.spec.clone(),
        values: pair.chi.values.iter().zip(&ph).map(|(c, p)| c * p).collect(),
    };
    let phi: Arc<dyn ConditionalSource> =
        Arc::new(LinearCombination::new(vec![(pair.phi.clone(), ph_conj.clone())])?);
    let dchi_dt = pair.dchi_dt.as_ref().map(|d| ComplexField {
        spec: d.spec.clone(),
        values: (0..ph.len())
            .map(|i| ph[i] * (d.values[i] + C64::i() * thdot[i] * pair.chi.values[i]))
            .collect(),
    });
    let dphi_dt = match &pair.dphi_dt {
        Some(d) => {
            let c2: Vec<C64> = (0..ph.len()).map(|i| -C64::i() * thdot[i] * ph_conj[i]).collect();
            let lc = LinearCombination::new(vec![(d.clone(), ph_conj), (pair.phi.clone(), c2)])?;
            Some(Arc::new(lc) as Arc<dyn ConditionalSource>)
        }
        None => None,
    };
    Ok(EfPair {
        chi,
        phi,
        valid: pair.valid.clone(),
        gauge_tag: format!("{} + gauge transform", pair.gauge_tag),
        dchi_dt,
        dphi_dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(x: &Vec3, w: f64) -> f64 {
        (-(x.norm_squared()) / (2.0 * w)).exp()
    }

    #[test]
    fn product_state_roundtrip() {
        let gn = GridSpec::cube(1, 41, -6.0, 6.0).unwrap();
        let ge = GridSpec::cube(1, 61, -8.0, 8.0).unwrap();
        let psi = FullWavefunction::from_fn(&gn, &ge, |rr, r| {
            C64::from_polar(gauss(rr, 1.0) * gauss(r, 0.7), 0.3 * rr[0] + 0.2)
        });
        let pair = split(&psi, &Vec3::zeros(), None).unwrap();
        let norms = pair.partial_norms();
        assert!(norms.iter().all(|n| (n - 1.0).abs() < 1e-12));
        let back = FullWavefunction::from_pair(&pair);
        for (a, b) in back.values.iter().zip(&psi.values) {
            assert!((a - b).norm() < 1e-12);
        }
        // Φ does not depend on R
        let s0 = pair.phi.slice(3);
        let s1 = pair.phi.slice(30);
        for (a, b) in s0.values.iter().zip(&s1.values) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn node_line_is_reported() {
        let gn = GridSpec::cube(2, 9, -2.0, 2.0).unwrap();
        let ge = GridSpec::cube(1, 21, -6.0, 6.0).unwrap();
        let psi = FullWavefunction::from_fn(&gn, &ge, |rr, r| C64::new(rr[0] * gauss(r, 1.0), 0.0));
        match split(&psi, &Vec3::zeros(), None).unwrap_err() {
            Error::GaugeReference { points } => {
                assert_eq!(points.len(), 9);
                assert!(points.iter().all(|p| p[0] == 4));
            }
            e => panic!("{e}"),
        }
        let pair = split_flagging_nodes(&psi, &Vec3::zeros(), None).unwrap();
        assert_eq!(pair.invalid_points().len(), 9);
    }

    #[test]
    fn gauge_transform_preserves_product() {
        let gn = GridSpec::cube(1, 21, -2.0, 2.0).unwrap();
        let ge = GridSpec::cube(1, 31, -6.0, 6.0).unwrap();
        let psi = FullWavefunction::from_fn(&gn, &ge, |rr, r| {
            C64::from_polar(gauss(&(r - rr), 1.0), rr[0] * r[0])
        });
        let pair = split(&psi, &Vec3::new(0.5, 0.0, 0.0), None).unwrap();
        let theta = RealField::from_fn(&gn, |p| 0.7 * p[0] * p[0] - 0.1);
        let tr = gauge_transform(&pair, &theta, None).unwrap();
        let a = FullWavefunction::from_pair(&pair);
        let b = FullWavefunction::from_pair(&tr);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).norm() < 1e-14);
        }
        let id = gauge_transform(&pair, &RealField::zeros(&gn), None).unwrap();
        assert_eq!(FullWavefunction::from_pair(&id).values, a.values);
    }
}

//! Finite-difference stencils and trapezoid integration.
//!
//! `Stencil::Central2` is second order everywhere (one-sided at the ends).
//! `Stencil::Richardson` combines the `h` and `2h` central differences,
//! `(4 D_h - D_2h) / 3`, which is fourth order where both fit and falls back to
//! the second-order stencil in the two outermost layers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Field, GridSpec, GridValue, VectorField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stencil {
    #[default]
    Central2,
    Richardson,
}

impl Stencil {
    /// Formal order of accuracy in the interior.
    pub fn order(&self) -> u32 {
        match self {
            Stencil::Central2 => 2,
            Stencil::Richardson => 4,
        }
    }

    /// Number of points on either side a stencil reaches in the interior.
    pub fn reach(&self) -> usize {
        match self {
            Stencil::Central2 => 1,
            Stencil::Richardson => 2,
        }
    }
}

/// Indices along one axis and weights (already divided by the spacing).
#[derive(Debug, Clone, Copy)]
pub struct Taps {
    pub idx: [usize; 5],
    pub w: [f64; 5],
    pub len: usize,
}

impl Taps {
    fn from(pairs: &[(usize, f64)], scale: f64) -> Self {
        let mut t = Taps { idx: [0; 5], w: [0.0; 5], len: pairs.len() };
        for (k, &(i, w)) in pairs.iter().enumerate() {
            t.idx[k] = i;
            t.w[k] = w * scale;
        }
        t
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len).map(|k| (self.idx[k], self.w[k]))
    }

    pub fn apply<T: GridValue>(&self, f: impl Fn(usize) -> T) -> T {
        let mut acc = T::zero();
        for (i, w) in self.iter() {
            acc += f(i) * w;
        }
        acc
    }
}

/// First-derivative taps at point `i` of an axis with `n` points.
pub fn derivative_taps(i: usize, n: usize, h: f64, stencil: Stencil) -> Taps {
    debug_assert!(n >= 5 && i < n);
    let s = 1.0 / h;
    if stencil == Stencil::Richardson && i >= 2 && i + 2 < n {
        let q = 1.0 / 12.0;
        return Taps::from(
            &[(i - 2, q), (i - 1, -8.0 * q), (i + 1, 8.0 * q), (i + 2, -q)],
            s,
        );
    }
    if i == 0 {
        Taps::from(&[(0, -1.5), (1, 2.0), (2, -0.5)], s)
    } else if i == n - 1 {
        Taps::from(&[(n - 1, 1.5), (n - 2, -2.0), (n - 3, 0.5)], s)
    } else {
        Taps::from(&[(i - 1, -0.5), (i + 1, 0.5)], s)
    }
}

/// Second-derivative taps at point `i`, with the same order rules as [`derivative_taps`].
pub fn second_derivative_taps(i: usize, n: usize, h: f64, stencil: Stencil) -> Taps {
    debug_assert!(n >= 5 && i < n);
    let s = 1.0 / (h * h);
    if stencil == Stencil::Richardson && i >= 2 && i + 2 < n {
        let q = 1.0 / 12.0;
        return Taps::from(
            &[(i - 2, -q), (i - 1, 16.0 * q), (i, -30.0 * q), (i + 1, 16.0 * q), (i + 2, -q)],
            s,
        );
    }
    if i == 0 {
        Taps::from(&[(0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)], s)
    } else if i == n - 1 {
        Taps::from(&[(n - 1, 2.0), (n - 2, -5.0), (n - 3, 4.0), (n - 4, -1.0)], s)
    } else {
        Taps::from(&[(i - 1, 1.0), (i, -2.0), (i + 1, 1.0)], s)
    }
}

/// Derivative of `values` along `axis`, written into `out`.
pub fn gradient_axis<T: GridValue>(
    spec: &GridSpec,
    values: &[T],
    axis: usize,
    stencil: Stencil,
    out: &mut [T],
) {
    let n = spec.n()[axis];
    let h = spec.spacing()[axis];
    let stride = spec.stride(axis);
    let taps: Vec<Taps> = (0..n).map(|i| derivative_taps(i, n, h, stencil)).collect();
    let block = n * stride;
    out.par_chunks_mut(block).zip(values.par_chunks(block)).for_each(|(o, v)| {
        for inner in 0..stride {
            for (i, t) in taps.iter().enumerate() {
                o[i * stride + inner] = t.apply(|j| v[j * stride + inner]);
            }
        }
    });
}

/// Gradient of a field, one component per axis.
pub fn gradient<T: GridValue>(f: &Field<T>, stencil: Stencil) -> Result<VectorField<T>> {
    if f.values.len() != f.spec.len() {
        return Err(Error::Config("field size does not match its grid".into()));
    }
    let mut out = VectorField::zeros(&f.spec);
    for (axis, comp) in out.components.iter_mut().enumerate() {
        gradient_axis(&f.spec, &f.values, axis, stencil, comp);
    }
    Ok(out)
}

/// Trapezoid rule over the whole grid.
pub fn integrate<T: GridValue>(f: &Field<T>) -> T {
    integrate_values(&f.spec.trapezoid_weights(), &f.values)
}

/// Weighted sum with precomputed weights.
pub fn integrate_values<T: GridValue>(weights: &[f64], values: &[T]) -> T {
    let mut acc = T::zero();
    for (&w, &v) in weights.iter().zip(values) {
        acc += v * w;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;
    use std::f64::consts::PI;

    fn line(n: usize, lo: f64, hi: f64) -> GridSpec {
        GridSpec::cube(1, n, lo, hi).unwrap()
    }

    #[test]
    fn constant_and_linear() {
        let g = line(11, 0.0, 1.0);
        let c = Field::from_fn(&g, |_| 3.0);
        assert!(gradient(&c, Stencil::Central2).unwrap().max_abs() == 0.0);
        let x = Field::from_fn(&g, |p| p[0]);
        for s in [Stencil::Central2, Stencil::Richardson] {
            let d = gradient(&x, s).unwrap();
            assert!(d.components[0].iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn sine_convergence() {
        let err = |n: usize| {
            let g = line(n, 0.0, 2.0 * PI);
            let f = Field::from_fn(&g, |p| p[0].sin());
            let d = gradient(&f, Stencil::Central2).unwrap();
            g.interior_indices(2)
                .iter()
                .map(|&i| (d.components[0][i] - g.point(i)[0].cos()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(201), err(401));
        assert!(e1 < 3e-4, "{e1}");
        assert!((e1 / e2 - 4.0).abs() < 0.1, "{}", e1 / e2);
    }

    #[test]
    fn richardson_is_fourth_order() {
        let err = |n: usize| {
            let g = line(n, 0.0, 2.0 * PI);
            let f = Field::from_fn(&g, |p| p[0].sin());
            let d = gradient(&f, Stencil::Richardson).unwrap();
            g.interior_indices(2)
                .iter()
                .map(|&i| (d.components[0][i] - g.point(i)[0].cos()).abs())
                .fold(0.0, f64::max)
        };
        let r = err(101) / err(201);
        assert!((r - 16.0).abs() < 1.0, "{r}");
    }

    #[test]
    fn second_derivative_orders() {
        for (s, expect) in [(Stencil::Central2, 4.0), (Stencil::Richardson, 16.0)] {
            let err = |n: usize| {
                let g = line(n, 0.0, 2.0 * PI);
                let h = g.spacing()[0];
                let v: Vec<f64> = g.axis_coords(0).iter().map(|x| x.sin()).collect();
                (2..n - 2)
                    .map(|i| {
                        let d = second_derivative_taps(i, n, h, s).apply(|j| v[j]);
                        (d + v[i]).abs()
                    })
                    .fold(0.0, f64::max)
            };
            let r = err(101) / err(201);
            assert!((r - expect).abs() < 0.1 * expect, "{s:?} {r}");
        }
    }

    #[test]
    fn one_sided_boundaries_are_second_order() {
        let g = line(101, 0.0, 1.0);
        let f = Field::from_fn(&g, |p| p[0] * p[0]);
        let d = gradient(&f, Stencil::Central2).unwrap();
        assert!((d.components[0][0] - 0.0).abs() < 1e-12);
        assert!((d.components[0][100] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn integrate_examples() {
        let g = line(11, 0.0, 1.0);
        assert!((integrate(&Field::from_fn(&g, |_| 1.0)) - 1.0).abs() < 1e-15);
        assert!((integrate(&Field::from_fn(&g, |p| p[0])) - 0.5).abs() < 1e-15);
        let g = line(401, -8.0, 8.0);
        let v = integrate(&Field::from_fn(&g, |p| (-p[0] * p[0]).exp()));
        assert!((v - PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn integrate_conjugation() {
        let g = GridSpec::cube(2, 9, -1.0, 1.0).unwrap();
        let f = Field::from_fn(&g, |p| C64::new(p[0].sin(), p[1] * p[0] + 0.3));
        assert_eq!(integrate(&f.conj()), integrate(&f).conj());
    }

    #[test]
    fn gradient_3d_axes() {
        let g = GridSpec::new(vec![7, 8, 9], vec![0.0; 3], vec![0.1, 0.2, 0.3]).unwrap();
        let f = Field::from_fn(&g, |p| 2.0 * p[0] - 3.0 * p[1] + 0.5 * p[2]);
        let d = gradient(&f, Stencil::Richardson).unwrap();
        for (a, want) in [2.0, -3.0, 0.5].iter().enumerate() {
            assert!(d.components[a].iter().all(|v| (v - want).abs() < 1e-12));
        }
    }
}

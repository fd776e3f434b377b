//! Spherical quadrature: Gauss–Legendre in `r` and `cos θ`, uniform in `φ`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::units::Vec3;

/// Values a quadrature can accumulate.
pub trait QuadValue: Copy + Send + Sync {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    fn distance(&self, other: &Self) -> f64;
    fn to_components(&self) -> Vec<C64>;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn distance(&self, o: &Self) -> f64 {
        (self - o).abs()
    }
    fn to_components(&self) -> Vec<C64> {
        vec![C64::new(*self, 0.0)]
    }
}

impl QuadValue for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn distance(&self, o: &Self) -> f64 {
        (self - o).norm()
    }
    fn to_components(&self) -> Vec<C64> {
        vec![*self]
    }
}

impl<const K: usize> QuadValue for [C64; K] {
    fn zero() -> Self {
        [C64::new(0.0, 0.0); K]
    }
    fn add(mut self, o: Self) -> Self {
        for (a, b) in self.iter_mut().zip(o) {
            *a += b;
        }
        self
    }
    fn scale(mut self, s: f64) -> Self {
        for a in self.iter_mut() {
            *a *= s;
        }
        self
    }
    fn distance(&self, o: &Self) -> f64 {
        self.iter().zip(o).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
    fn to_components(&self) -> Vec<C64> {
        self.to_vec()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// A fixed product rule over the ball of radius `r_max`.
#[derive(Debug, Clone)]
pub struct SphericalRule {
    r: Vec<f64>,
    wr: Vec<f64>,
    mu: Vec<f64>,
    wmu: Vec<f64>,
    nphi: usize,
}

impl SphericalRule {
    pub fn new(r_max: f64, nr: usize, ntheta: usize, nphi: usize) -> Self {
        let (xr, wr0) = gauss_legendre(nr);
        let r: Vec<f64> = xr.iter().map(|x| 0.5 * r_max * (x + 1.0)).collect();
        let wr = wr0.iter().zip(&r).map(|(w, r)| 0.5 * r_max * w * r * r).collect();
        let (mu, wmu) = gauss_legendre(ntheta);
        Self { r, wr, mu, wmu, nphi }
    }

    pub fn node_count(&self) -> usize {
        self.r.len() * self.mu.len() * self.nphi
    }

    /// Partial sums per radial node are computed in parallel and added in a fixed order.
    pub fn integrate<T: QuadValue>(&self, f: impl Fn(&Vec3) -> T + Sync) -> T {
        let dphi = 2.0 * PI / self.nphi as f64;
        let trig: Vec<(f64, f64)> =
            (0..self.nphi).map(|k| (k as f64 * dphi).sin_cos()).map(|(s, c)| (c, s)).collect();
        let partial: Vec<T> = (0..self.r.len())
            .into_par_iter()
            .map(|ir| {
                let r = self.r[ir];
                let mut acc_r = T::zero();
                for (&mu, &wmu) in self.mu.iter().zip(&self.wmu) {
                    let st = (1.0 - mu * mu).max(0.0).sqrt();
                    let mut acc = T::zero();
                    for &(c, s) in &trig {
                        acc = acc.add(f(&Vec3::new(r * st * c, r * st * s, r * mu)));
                    }
                    acc_r = acc_r.add(acc.scale(wmu));
                }
                acc_r.scale(self.wr[ir] * dphi)
            })
            .collect();
        partial.into_iter().fold(T::zero(), |a, b| a.add(b))
    }
}

const BASE_ORDERS: (usize, usize, usize) = (32, 16, 16);
const MAX_LEVELS: u32 = 4;

/// Refines the rule (doubling every order) until two successive estimates differ
/// by less than `tolerance`.
pub fn quadrature_3d<T: QuadValue>(
    integrand: impl Fn(&Vec3) -> T + Sync,
    radial_extent: f64,
    tolerance: f64,
) -> Result<T> {
    if !(radial_extent > 0.0 && tolerance > 0.0) {
        return Err(Error::Config("radial extent and tolerance must be positive".into()));
    }
    let (a, b, c) = BASE_ORDERS;
    let mut prev = SphericalRule::new(radial_extent, a, b, c).integrate(&integrand);
    for level in 1..MAX_LEVELS {
        let k = 1 << level;
        let est = SphericalRule::new(radial_extent, a * k, b * k, c * k).integrate(&integrand);
        if est.distance(&prev) < tolerance {
            return Ok(est);
        }
        if level + 1 == MAX_LEVELS {
            return Err(Error::NonConvergence {
                last: est.to_components(),
                previous: prev.to_components(),
            });
        }
        prev = est;
    }
    unreachable!()
}

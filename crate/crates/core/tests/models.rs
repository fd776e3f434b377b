use exfact_core::atom::{residual_a0, A0Method};
use exfact_core::ef::{compute_geometry, gauge_transform, nuclear_current, GeometryOptions};
use exfact_core::eom::eom_residuals;
use exfact_core::grid::{quadrature_3d, GridSpec, RealField, Stencil};
use exfact_core::harmonium::{
    bo_compensation, bo_conditional_state, bo_state, harmonium_compensation, nuclear_current_closed_form,
    residual_connection, solve, HarmoniumParams,
};
use exfact_core::hydrogen::{f_overlap, g_vector, packet_compensation, HydrogenPacket};
use exfact_core::units::{UniformField, UnitSystem};
use exfact_core::{Vec3, C64};

fn params(big_m: f64, b: f64, k: Vec3) -> HarmoniumParams {
    HarmoniumParams::new(big_m, 1.0, 1.0, UniformField::along_z(b), k, UnitSystem::default()).unwrap()
}

#[test]
fn residual_connection_matches_quadrature() {
    for (big_m, b, k) in [(1.0, 1.0, Vec3::new(0.3, -0.2, 0.4)), (7.5, 0.4, Vec3::new(-1.1, 0.5, 0.0))] {
        let p = params(big_m, b, k);
        let sol = solve(&p).unwrap();
        let sep = sol.separation(3).unwrap();
        let quad = residual_a0(&sep, &A0Method::Quadrature { radial_extent: 14.0, tolerance: 1e-11 }).unwrap();
        let closed = residual_connection(&p).unwrap();
        assert!((quad - closed).norm() < 1e-8, "{quad} vs {closed}");
    }
}

#[test]
fn fixed_r_connection_matches_relative_a0() {
    let p = params(2.0, 1.5, Vec3::new(0.4, 0.3, 0.0));
    let gn = GridSpec::cube(2, 33, -0.25, 0.25).unwrap();
    let ge = GridSpec::cube(2, 97, -9.0, 9.0).unwrap();
    let (report, _) = harmonium_compensation(&p, &gn, &ge, Stencil::Richardson, 1e-6).unwrap();
    assert!(report.pass, "{report:?}");
    let a0 = report.a0.unwrap();
    let u = UnitSystem::default();
    // A_tot = -(c/e) A₀ for one electron
    for ax in 0..2 {
        assert!((report.a_tot_mean[ax] + u.c / u.e * a0[ax]).abs() < 1e-6);
    }
    let closed = residual_connection(&p).unwrap();
    assert!((Vec3::from(a0) - closed).norm() < 1e-8);
}

#[test]
fn grid_current_matches_closed_form() {
    let p = params(3.0, 0.8, Vec3::new(0.5, -0.7, 0.0));
    let sol = solve(&p).unwrap();
    let gn = GridSpec::cube(2, 33, -0.25, 0.25).unwrap();
    let ge = GridSpec::cube(2, 97, -9.0, 9.0).unwrap();
    let pair = sol.ef_pair(&gn, &ge).unwrap();
    let op = sol.separation(2).unwrap().bo_model(Stencil::Richardson).on_grid(&ge);
    let geo = compute_geometry(&pair, &op, &p.nucleus(), &p.field, &p.units, GeometryOptions { stencil: Stencil::Richardson })
        .unwrap();
    let j = nuclear_current(&pair.chi, &geo.a_total, &p.nucleus(), &p.units, Stencil::Richardson).unwrap();
    let closed = nuclear_current_closed_form(&p).unwrap();
    for i in geo.interior() {
        assert!((j.vec3_at(i) - closed).norm() < 1e-6);
    }
    let free = params(3.0, 0.0, Vec3::new(0.5, -0.7, 0.2));
    assert_eq!(nuclear_current_closed_form(&free).unwrap(), Vec3::new(0.5, -0.7, 0.2) / 4.0);
}

#[test]
fn bo_state_covariance_and_compensation() {
    let p = params(4.0, 1.2, Vec3::zeros());
    let st = bo_state(&p).unwrap();
    let ge = GridSpec::cube(2, 81, -8.0, 8.0).unwrap();
    let u = p.units;
    for big_r in [Vec3::new(0.3, -0.4, 0.0), Vec3::new(-0.7, 0.1, 0.0)] {
        let f = bo_conditional_state(&p, &big_r, &ge).unwrap();
        let pi = st.pi(2).unwrap();
        for (i, v) in f.values.iter().enumerate() {
            let r = ge.point(i);
            let phase = u.e / (2.0 * u.hbar * u.c) * p.field.b.cross(&r).dot(&big_r);
            let expect = C64::from_polar(1.0, phase) * pi.value(&(r - big_r));
            assert!((v - expect).norm() < 1e-10);
        }
    }
    let gn = GridSpec::cube(2, 33, -0.25, 0.25).unwrap();
    let (report, _) = bo_compensation(&p, &gn, &ge, Stencil::Richardson, 1e-6).unwrap();
    assert!(report.pass, "{report:?}");
    for ax in 0..2 {
        assert!(report.a_tot_mean[ax].abs() < 1e-6);
    }
}

/// `∫ e^{iq·r} φ₁φ₂ dr` and `∫ e^{iq·r} (φ₁∇φ₂ - φ₂∇φ₁) dr` with `φ₁ = e^{-r}/√(2π)`,
/// `φ₂ = z e^{-r/2}/(4√(2π))` (Bohr radius 1).
fn overlap_oracle(q: &Vec3) -> (C64, [C64; 3]) {
    let c1 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let c2 = c1 / 4.0;
    let v: [C64; 4] = quadrature_3d(
        |p| {
            let r = p.norm();
            let e = C64::from_polar(1.0, q.dot(p));
            let (p1, p2) = (c1 * (-r).exp(), c2 * p[2] * (-0.5 * r).exp());
            let mut out = [e * (p1 * p2), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
            if r > 0.0 {
                for a in 0..3 {
                    let d1 = -p[a] / r * p1;
                    let kron = if a == 2 { 1.0 } else { 0.0 };
                    let d2 = c2 * (kron - p[2] * p[a] / (2.0 * r)) * (-0.5 * r).exp();
                    out[a + 1] = e * (p1 * d2 - p2 * d1);
                }
            }
            out
        },
        60.0,
        1e-11,
    )
    .unwrap();
    (v[0], [v[1], v[2], v[3]])
}

#[test]
fn overlaps_match_quadrature() {
    let u = UnitSystem::default();
    for q in [Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.3, -0.5, 0.7), Vec3::new(-1.2, 0.4, -0.9)] {
        let (f, g) = overlap_oracle(&q);
        assert!((f - f_overlap(&q, 1.0, &u)).norm() < 1e-8);
        let gc = g_vector(&q, 1.0, &u);
        for a in 0..3 {
            assert!((g[a] - gc[a]).norm() < 1e-8, "{a}: {} vs {}", g[a], gc[a]);
        }
    }
}

#[test]
fn packet_fails_compensation() {
    let pk =
        HydrogenPacket::hydrogenic(Vec3::new(1.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0), 1836.0, 1.0, UnitSystem::default())
            .unwrap();
    let gn = GridSpec::cube(3, 9, -1.0, 1.0).unwrap();
    let ge = GridSpec::cube(3, 41, -12.0, 12.0).unwrap();
    let report = packet_compensation(&pk, 0.0, &gn, &ge, Stencil::Richardson, 1e-6).unwrap();
    assert!(!report.pass);
    assert!(report.curvature_max > 1e-2, "{}", report.curvature_max);
}

#[test]
fn eom_residuals_converge_and_are_gauge_stable() {
    let p = params(1.0, 1.0, Vec3::new(0.3, -0.2, 0.0));
    let sol = solve(&p).unwrap();
    let mut res = Vec::new();
    for n in [17, 33] {
        let gn = GridSpec::cube(2, n, -1.0, 1.0).unwrap();
        let ge = GridSpec::cube(2, 2 * n - 1, -10.0, 10.0).unwrap();
        let pair = sol.ef_pair(&gn, &ge).unwrap();
        let op = sol.separation(2).unwrap().bo_model(Stencil::Central2).on_grid(&ge);
        let opts = GeometryOptions { stencil: Stencil::Central2 };
        let geo = compute_geometry(&pair, &op, &p.nucleus(), &p.field, &p.units, opts).unwrap();
        let r = eom_residuals(&pair, &geo, &op, &p.nucleus(), &p.units).unwrap();
        let theta = RealField::from_fn(&gn, |x| 0.3 * x[0] * x[0] - 0.2 * x[0] * x[1] + 0.1 * x[1]);
        let moved = gauge_transform(&pair, &theta, None).unwrap();
        let geo_m = compute_geometry(&moved, &op, &p.nucleus(), &p.field, &p.units, opts).unwrap();
        let rm = eom_residuals(&moved, &geo_m, &op, &p.nucleus(), &p.units).unwrap();
        assert!(rm.nuclear_residual <= 2.0 * r.nuclear_residual, "{} {}", rm.nuclear_residual, r.nuclear_residual);
        assert!(rm.electronic_residual <= 2.0 * r.electronic_residual);
        res.push(r);
    }
    let ratio_n = res[0].nuclear_residual / res[1].nuclear_residual;
    let ratio_e = res[0].electronic_residual / res[1].electronic_residual;
    assert!((3.0..=5.0).contains(&ratio_n), "{ratio_n}");
    assert!((3.0..=5.0).contains(&ratio_e), "{ratio_e}");
}

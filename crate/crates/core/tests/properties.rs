use exfact_core::atom::{residual_a0, A0Method, AtomSeparation, GaussianState, RelativeState};
use exfact_core::ef::{
    berry_connection, curl, gauge_transform, nuclear_current, nuclear_density, split, BoPotential,
    FullWavefunction,
};
use exfact_core::grid::{gradient, integrate, quadrature_3d, ComplexField, GridSpec, RealField, Stencil};
use exfact_core::harmonium::alpha_from_reduced;
use exfact_core::hydrogen::{f_overlap, g_vector, HydrogenPacket};
use exfact_core::units::{decompose_k, symmetric_gauge_a, ParticleSpec, PseudoMomentum, UniformField, UnitSystem};
use exfact_core::{Vec3, C64};
use proptest::prelude::*;

fn vec3(lo: f64, hi: f64) -> impl Strategy<Value = Vec3> {
    (lo..hi, lo..hi, lo..hi).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decompose_k_recomposes(k in vec3(-5.0, 5.0), b in vec3(-3.0, 3.0)) {
        let f = UniformField::new(b).unwrap();
        let (par, perp) = decompose_k(&k, &f);
        prop_assert!((par + perp - k).norm() <= 1e-15 * k.norm().max(1.0));
        if !f.is_zero() {
            prop_assert!(perp.dot(&b).abs() <= 1e-14 * k.norm() * b.norm());
            prop_assert!(par.cross(&b).norm() <= 1e-14 * k.norm() * b.norm());
        }
    }

    #[test]
    fn gauge_potential_linear_with_curl_b(r1 in vec3(-4.0, 4.0), r2 in vec3(-4.0, 4.0), b in vec3(-2.0, 2.0), s in -3.0..3.0f64) {
        let f = UniformField::new(b).unwrap();
        let lin = symmetric_gauge_a(&(r1 + r2 * s), &f) - symmetric_gauge_a(&r1, &f) - symmetric_gauge_a(&r2, &f) * s;
        prop_assert!(lin.norm() < 1e-13);
        let f2 = UniformField::new(b * s).unwrap();
        prop_assert!((symmetric_gauge_a(&r1, &f2) - symmetric_gauge_a(&r1, &f) * s).norm() < 1e-13);
        // A is linear, so a centred difference gives the exact curl
        let h = 0.5;
        let d = |i: usize, j: usize| {
            let mut e = Vec3::zeros();
            e[j] = h;
            (symmetric_gauge_a(&(r1 + e), &f)[i] - symmetric_gauge_a(&(r1 - e), &f)[i]) / (2.0 * h)
        };
        let c = Vec3::new(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
        prop_assert!((c - b).norm() < 1e-13);
    }

    #[test]
    fn integrate_is_linear_and_conjugation_equivariant(
        seed in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 21 * 17),
        a in (-2.0..2.0f64, -2.0..2.0f64),
        b in (-2.0..2.0f64, -2.0..2.0f64),
    ) {
        let g = GridSpec::new(vec![21, 17], vec![-1.0, 0.5], vec![0.1, 0.07]).unwrap();
        let f = ComplexField::new(g.clone(), seed.iter().map(|&(x, y)| C64::new(x, y)).collect()).unwrap();
        let h = ComplexField::from_fn(&g, |p| C64::new(p[0].sin(), p[1] * p[0]));
        prop_assert_eq!(integrate(&f.conj()), integrate(&f).conj());
        let (ca, cb) = (C64::new(a.0, a.1), C64::new(b.0, b.1));
        let comb = ComplexField::new(g, f.values.iter().zip(&h.values).map(|(x, y)| ca * x + cb * y).collect()).unwrap();
        let lhs = integrate(&comb);
        let rhs = ca * integrate(&f) + cb * integrate(&h);
        prop_assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn odd_integrands_vanish(c in vec3(-2.0, 2.0), k in 0.5..2.0f64) {
        let tol = 1e-10;
        let v: f64 = quadrature_3d(
            |p| (c[0] * p[0] + c[1] * p[1].powi(3) + c[2] * p[0] * p[1] * p[2]) * (-k * p.norm_squared()).exp(),
            12.0,
            tol,
        )
        .unwrap();
        prop_assert!(v.abs() < tol, "{}", v);
    }

    #[test]
    fn alpha_in_unit_interval_and_increasing(b in 0.0..50.0f64, db in 1e-3..5.0f64, ratio in 1e-2..1e4f64) {
        let a = alpha_from_reduced(b, ratio);
        prop_assert!((0.0..=1.0).contains(&a));
        if b > 0.0 {
            prop_assert!(alpha_from_reduced(b + db, ratio) > a);
        }
    }

    #[test]
    fn f_is_imaginary_and_odd_and_g_is_real(q in vec3(-3.0, 3.0), mr in 0.3..1.0f64) {
        let u = UnitSystem::default();
        let f = f_overlap(&q, mr, &u);
        prop_assert_eq!(f.re, 0.0);
        let qm = Vec3::new(q[0], q[1], -q[2]);
        prop_assert_eq!(f_overlap(&qm, mr, &u), -f);
        for c in g_vector(&q, mr, &u) {
            prop_assert_eq!(c.im, 0.0);
        }
    }

    #[test]
    fn hy_periodic_and_bounded(
        p1x in -2.0..2.0f64,
        p2x in -2.0..2.0f64,
        big_m in 1.0..50.0f64,
        r in vec3(-3.0, 3.0),
        t in 0.0..20.0f64,
    ) {
        prop_assume!((p1x - p2x).abs() > 1e-2);
        let pk = HydrogenPacket::hydrogenic(Vec3::new(p1x, 0.0, 0.0), Vec3::new(p2x, 0.0, 0.0), big_m, 1.0, UnitSystem::default()).unwrap();
        let h = pk.berry_curvature_hy(&r, t).unwrap();
        let dp = p1x - p2x;
        let qt = dp / big_m;
        let amp = 16.0 * 2f64.sqrt() / pk.bohr_radius() * dp.abs() / (9.0 + 4.0 * qt * qt).powi(2);
        let scale = amp.max(1e-300);
        prop_assert!(h.abs() <= amp * (1.0 + 1e-14));
        prop_assert!((pk.berry_curvature_hy(&r, t + pk.period()).unwrap() - h).abs() < 1e-10 * scale);
        let shift = Vec3::new(2.0 * std::f64::consts::PI / dp.abs(), 0.0, 0.0);
        prop_assert!((pk.berry_curvature_hy(&(r + shift), t).unwrap() - h).abs() < 1e-10 * scale);
        // at a crest the cosine envelope reaches the prefactor
        let t0 = -dp * r[0] / (pk.e2 - pk.e1);
        prop_assert!((pk.berry_curvature_hy(&r, t0).unwrap().abs() - amp).abs() < 1e-8 * scale);
    }
}

fn atom_with(state: GaussianState, field: UniformField) -> AtomSeparation {
    AtomSeparation {
        k: PseudoMomentum::new(Vec3::zeros()),
        n_electrons: 1,
        nucleus: ParticleSpec::new(3.0, 1).unwrap(),
        electron_mass: 1.0,
        field,
        units: UnitSystem::default(),
        phi_k: RelativeState::Gaussian(state),
        interaction: BoPotential::Relative { k: 1.0 },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn residual_a0_translation_covariance(
        c in vec3(-0.5, 0.5),
        d in vec3(-0.5, 0.5),
        k in vec3(-0.5, 0.5),
        bz in -2.0..2.0f64,
    ) {
        let field = UniformField::along_z(bz);
        let g = GridSpec::cube(2, 121, -12.0, 12.0).unwrap();
        let planar = |v: Vec3| Vec3::new(v[0], v[1], 0.0);
        let (c, d, k) = (planar(c), planar(d), planar(k));
        let s0 = GaussianState::new(2, k, c, [1.0, 1.4, 1.0]).unwrap();
        let s1 = GaussianState::new(2, k, c + d, [1.0, 1.4, 1.0]).unwrap();
        let a0 = residual_a0(&atom_with(s0, field), &A0Method::Grid(g.clone())).unwrap();
        let a1 = residual_a0(&atom_with(s1, field), &A0Method::Grid(g)).unwrap();
        // the shift of φ_K is undone by moving R by d, which changes (e/2c)B×R by (e/2c)B×d
        let u = UnitSystem::default();
        let comp = field.b.cross(&d) * (u.e / (2.0 * u.c));
        prop_assert!((a1 - a0 - comp).norm() < 1e-10, "{}", (a1 - a0 - comp).norm());
    }

    #[test]
    fn leibniz_rule_second_order(a in 0.5..2.0f64, b in -1.0..1.0f64, w in 0.5..2.0f64) {
        let defect = |n: usize| {
            let g = GridSpec::cube(1, n, -2.0, 2.0).unwrap();
            let f = RealField::from_fn(&g, |p| (a * p[0]).sin() + b);
            let h = RealField::from_fn(&g, |p| (-w * p[0] * p[0]).exp());
            let fh = RealField::from_fn(&g, |p| ((a * p[0]).sin() + b) * (-w * p[0] * p[0]).exp());
            let (df, dh, dfh) = (
                gradient(&f, Stencil::Central2).unwrap(),
                gradient(&h, Stencil::Central2).unwrap(),
                gradient(&fh, Stencil::Central2).unwrap(),
            );
            g.interior_indices(2)
                .into_iter()
                .map(|i| (dfh.components[0][i] - f.values[i] * dh.components[0][i] - h.values[i] * df.components[0][i]).abs())
                .fold(0.0, f64::max)
        };
        let (coarse, fine) = (defect(101), defect(201));
        prop_assert!(coarse < 1e-2);
        let ratio = coarse / fine;
        prop_assert!((3.5..=4.5).contains(&ratio), "{}", ratio);
    }
}

/// `Ψ = χ(R) Φ_R(r)` with `χ = e^{-R²/2 + ik·R}` and
/// `Φ_R(r) = π^{-1/4} e^{-(r - b·R)²/2 + i(a·R) r}`, whose connection is `ħ a (b·R)`.
struct Packet {
    a: [f64; 2],
    b: [f64; 2],
    k: [f64; 2],
}

impl Packet {
    fn psi(&self, nuclear: &GridSpec, electronic: &GridSpec) -> FullWavefunction {
        FullWavefunction::from_fn(nuclear, electronic, |big_r, r| {
            let ar = self.a[0] * big_r[0] + self.a[1] * big_r[1];
            let br = self.b[0] * big_r[0] + self.b[1] * big_r[1];
            let kr = self.k[0] * big_r[0] + self.k[1] * big_r[1];
            let chi = C64::from_polar((-0.5 * big_r.norm_squared()).exp(), kr);
            let phi = C64::from_polar(
                std::f64::consts::PI.powf(-0.25) * (-0.5 * (r[0] - br).powi(2)).exp(),
                ar * r[0],
            );
            chi * phi
        })
    }

    fn connection(&self, big_r: &Vec3) -> [f64; 2] {
        let br = self.b[0] * big_r[0] + self.b[1] * big_r[1];
        [self.a[0] * br, self.a[1] * br]
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn split_and_gauge_covariance(
        a in (-0.6..0.6f64, -0.6..0.6f64),
        b in (-0.6..0.6f64, -0.6..0.6f64),
        k in (-1.0..1.0f64, -1.0..1.0f64),
        th in (-0.5..0.5f64, -0.5..0.5f64, -0.3..0.3f64, -0.3..0.3f64, -0.3..0.3f64),
    ) {
        let units = UnitSystem::default();
        let nuclear = GridSpec::cube(2, 41, -2.0, 2.0).unwrap();
        let electronic = GridSpec::cube(1, 161, -10.0, 10.0).unwrap();
        let model = Packet { a: [a.0, a.1], b: [b.0, b.1], k: [k.0, k.1] };
        let psi = model.psi(&nuclear, &electronic);
        let pair = split(&psi, &Vec3::zeros(), None).unwrap();

        for (i, n) in pair.partial_norms().iter().enumerate() {
            prop_assert!((n - 1.0).abs() < 1e-10, "norm {} at {}", n, i);
        }
        let mut slice = vec![C64::new(0.0, 0.0); electronic.len()];
        for ir in 0..nuclear.len() {
            pair.phi.fill_slice(ir, &mut slice);
            for (ie, v) in slice.iter().enumerate() {
                prop_assert!((pair.chi.values[ir] * v - psi.value(ir, ie)).norm() < 1e-10);
            }
        }

        let theta = RealField::from_fn(&nuclear, theta_fn(th));
        let moved = gauge_transform(&pair, &theta, None).unwrap();
        let grad_theta = |p: &Vec3| [th.0 + 2.0 * th.2 * p[0] + th.3 * p[1], th.1 + th.3 * p[0] + 2.0 * th.4 * p[1]];

        // stencil error of each connection, estimated from the h → h/2 change
        let (a_orig, a_moved) = connections(&model, &theta_fn(th), 41);
        let (a_orig_f, a_moved_f) = connections(&model, &theta_fn(th), 81);
        let fine = GridSpec::cube(2, 81, -2.0, 2.0).unwrap();
        let (mut err, mut defect, mut exact_dev) = (0.0f64, 0.0f64, 0.0f64);
        for i in nuclear.interior_indices(2) {
            let m = nuclear.unravel(i);
            let j = fine.ravel(&[2 * m[0], 2 * m[1]]);
            let gt = grad_theta(&nuclear.point(i));
            let exact = model.connection(&nuclear.point(i));
            for ax in 0..2 {
                err = err.max((a_orig.components[ax][i] - a_orig_f.components[ax][j]).abs() * 4.0 / 3.0);
                err = err.max((a_moved.components[ax][i] - a_moved_f.components[ax][j]).abs() * 4.0 / 3.0);
                defect = defect.max((a_moved.components[ax][i] - (a_orig.components[ax][i] - units.hbar * gt[ax])).abs());
                exact_dev = exact_dev.max((a_orig.components[ax][i] - units.hbar * exact[ax]).abs());
            }
        }
        prop_assert!(exact_dev <= 2.0 * err + 1e-12, "{} vs {}", exact_dev, err);
        prop_assert!(defect <= 2.0 * err + 1e-12, "defect {} vs stencil error {}", defect, err);

        // curvature and current: the defect is pure discretization error, so it falls as h²
        let (curv_coarse, j_coarse) = gauge_defects(&model, &theta_fn(th), 41);
        let (curv_fine, j_fine) = gauge_defects(&model, &theta_fn(th), 81);
        prop_assert!(curv_coarse < 1e-2 && j_coarse < 1e-2, "{} {}", curv_coarse, j_coarse);
        prop_assert!(curv_fine < 1e-13 || curv_coarse / curv_fine > 3.5, "{} -> {}", curv_coarse, curv_fine);
        prop_assert!(j_fine < 1e-13 || j_coarse / j_fine > 3.5, "{} -> {}", j_coarse, j_fine);

        // density exactly
        let rho = nuclear_density(&pair.chi);
        let rho_moved = nuclear_density(&moved.chi);
        for (x, y) in rho.values.iter().zip(&rho_moved.values) {
            prop_assert!((x - y).abs() <= 1e-15 * x.max(1e-300));
        }
    }
}

fn theta_fn(th: (f64, f64, f64, f64, f64)) -> impl Fn(&Vec3) -> f64 {
    move |p| th.0 * p[0] + th.1 * p[1] + th.2 * p[0] * p[0] + th.3 * p[0] * p[1] + th.4 * p[1] * p[1]
}

fn gauge_defects(model: &Packet, theta: &impl Fn(&Vec3) -> f64, n: usize) -> (f64, f64) {
    let units = UnitSystem::default();
    let stencil = Stencil::Central2;
    let nuclear = GridSpec::cube(2, n, -2.0, 2.0).unwrap();
    let electronic = GridSpec::cube(1, 161, -10.0, 10.0).unwrap();
    let pair = split(&model.psi(&nuclear, &electronic), &Vec3::zeros(), None).unwrap();
    let moved = gauge_transform(&pair, &RealField::from_fn(&nuclear, theta), None).unwrap();
    let nucleus = ParticleSpec::new(2.0, 1).unwrap();
    let field = UniformField::zero();
    let current = |p: &exfact_core::ef::EfPair| {
        let (a, _) = berry_connection(p, stencil, &units).unwrap();
        let at = exfact_core::ef::total_vector_potential(&a, &field, 1, &units).unwrap();
        (curl(&a, stencil).unwrap(), nuclear_current(&p.chi, &at, &nucleus, &units, stencil).unwrap())
    };
    let ((c0, j0), (c1, j1)) = (current(&pair), current(&moved));
    let (mut dc, mut dj) = (0.0f64, 0.0f64);
    for i in nuclear.interior_indices(2) {
        dc = dc.max((c0.component(0, 1, i) - c1.component(0, 1, i)).abs());
        for ax in 0..2 {
            dj = dj.max((j0.components[ax][i] - j1.components[ax][i]).abs());
        }
    }
    (dc, dj)
}

fn connections(
    model: &Packet,
    theta: &impl Fn(&Vec3) -> f64,
    n: usize,
) -> (exfact_core::grid::VectorField<f64>, exfact_core::grid::VectorField<f64>) {
    let units = UnitSystem::default();
    let nuclear = GridSpec::cube(2, n, -2.0, 2.0).unwrap();
    let electronic = GridSpec::cube(1, 161, -10.0, 10.0).unwrap();
    let pair = split(&model.psi(&nuclear, &electronic), &Vec3::zeros(), None).unwrap();
    let moved = gauge_transform(&pair, &RealField::from_fn(&nuclear, theta), None).unwrap();
    let (a0, _) = berry_connection(&pair, Stencil::Central2, &units).unwrap();
    let (a1, _) = berry_connection(&moved, Stencil::Central2, &units).unwrap();
    (a0, a1)
}

use num_complex::Complex64;
use proptest::prelude::*;

use maxwell_morawetz::background::{BackgroundModel, Schwarzschild};
use maxwell_morawetz::certifier::{frac, int, r, rat, RatInterval};
use maxwell_morawetz::config::parse_config;
use maxwell_morawetz::evolution::{
    constraint_residual, data_norm, make_initial_data, reduced_rhs, Evolver, Family, InitialDataSpec, ModeState,
    PulseMode,
};
use maxwell_morawetz::modes::{hardy_ratio, ladder_factor, sphere_l2, SphereCoefficients, SphereQuadrature};
use maxwell_morawetz::sbp::Sbp42;
use maxwell_morawetz::superenergy::{e1_form, QuadraticFormCoeffs};

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn morawetz_a_changes_sign_only_at_photon_sphere(m in 0.1..10.0f64, x in 1.0001..50.0f64) {
        let bh = Schwarzschild::new(m).unwrap();
        let rr = 2.0 * m * x;
        let a = bh.morawetz_a(rr).unwrap();
        let d = rr - 3.0 * m;
        if d.abs() > 1e-9 * m {
            prop_assert_eq!(a > 0.0, d > 0.0);
        }
    }

    #[test]
    fn radial_functions_scale_with_mass(m in 0.2..5.0f64, x in 1.01..40.0f64, s in prop::sample::select(vec![0.5, 2.0, 10.0])) {
        let a = Schwarzschild::new(m).unwrap();
        let b = Schwarzschild::new(s * m).unwrap();
        let rr = 2.0 * m * x;
        let rel = |u: f64, v: f64| (u - v).abs() <= 1e-12 * (u.abs() + v.abs() + 1e-300);
        prop_assert!(rel(a.lapse(rr).unwrap(), b.lapse(s * rr).unwrap()));
        // f_A is dimensionless, q and g scale as 1/length.
        prop_assert!(rel(a.morawetz_a(rr).unwrap(), b.morawetz_a(s * rr).unwrap()));
        prop_assert!(rel(a.morawetz_q(rr).unwrap(), s * b.morawetz_q(s * rr).unwrap()));
        prop_assert!(rel(a.morawetz_g(rr).unwrap(), s * b.morawetz_g(s * rr).unwrap()));
        prop_assert!(rel(a.tortoise(rr).unwrap(), b.tortoise(s * rr).unwrap() / s));
    }

    #[test]
    fn tortoise_inversion_round_trips(m in 0.5..4.0f64, rs in -80.0..300.0f64) {
        let bh = Schwarzschild::new(m).unwrap();
        // Near the horizon `r` alone cannot resolve `r - 2M`; the point keeps both.
        let p = bh.invert_tortoise_point(rs * m).unwrap();
        prop_assert!(p.excess > 0.0 && p.r >= 2.0 * m);
        let back = bh.tortoise_at(p);
        prop_assert!((back - rs * m).abs() <= 1e-10 * (1.0 + rs.abs()) * m);
    }

    #[test]
    fn sbp_summation_by_parts(n in 16usize..80, h in 0.01..2.0f64, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let op = Sbp42::new(n, h);
        let (mut du, mut dv) = (vec![0.0; n], vec![0.0; n]);
        op.apply(&u, &mut du);
        op.apply(&v, &mut dv);
        let lhs: f64 = (0..n).map(|i| op.norm_weight(i) * (u[i] * dv[i] + du[i] * v[i])).sum();
        let rhs = u[n - 1] * v[n - 1] - u[0] * v[0];
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + n as f64));
    }

    #[test]
    fn e1_form_is_nonnegative_when_criterion_holds(
        b in (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64),
        nu in prop::array::uniform4(complex()),
    ) {
        let c = QuadraticFormCoeffs::new(b.0, b.1, b.2);
        let value = e1_form(&c, &nu);
        let ev = c.eigenvalues();
        let norm: f64 = nu.iter().map(|z| z.norm_sqr()).sum();
        let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(value >= lo * norm - 1e-12 && value <= hi * norm + 1e-12);
        if c.is_nonnegative() {
            prop_assert!(value >= -1e-12);
        }
        prop_assert_eq!(c.is_nonnegative(), lo >= 0.0);
    }

    #[test]
    fn hardy_ratio_never_exceeds_one(l in 1u32..40, rr in 2.1..500.0f64) {
        let h = hardy_ratio(l).unwrap();
        prop_assert!(h <= 1.0 && (h - 2.0 / f64::from(l * (l + 1))).abs() < 1e-15);
        let lad = ladder_factor(l, rr).unwrap();
        // The sphere-wise Hardy bound reduces to r^2 lad^2 >= 1.
        prop_assert!(rr * rr * lad * lad >= 1.0 - 1e-14);
    }

    #[test]
    fn parseval_on_random_band_limited_fields(l_max in 1u32..=8, spin in -1i32..=1, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut c = SphereCoefficients::new(spin).unwrap();
        for l in (spin.unsigned_abs())..=l_max {
            for m in -(l as i32)..=l as i32 {
                c.insert(l, m, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).unwrap();
            }
        }
        let quad = SphereQuadrature::for_band_limit(l_max);
        let direct = quad.integrate(|t, p| Complex64::new(c.synthesize(t, p).norm_sqr(), 0.0)).re;
        let expect = sphere_l2(&c);
        prop_assert!((direct - expect).abs() <= 1e-10 * expect.abs().max(1e-300));
    }

    #[test]
    fn interval_operations_enclose_point_values(
        a in (-50i64..50, 1i64..20), b in (-50i64..50, 1i64..20),
        c in (-50i64..50, 1i64..20), d in (-50i64..50, 1i64..20),
        s in 0u32..=16, t in 0u32..=16,
    ) {
        let (x0, x1) = (rat(a.0, a.1), rat(b.0, b.1));
        let (y0, y1) = (rat(c.0, c.1), rat(d.0, d.1));
        let xi = RatInterval::new(x0.clone().min(x1.clone()), x0.clone().max(x1.clone()));
        let yi = RatInterval::new(y0.clone().min(y1.clone()), y0.clone().max(y1.clone()));
        let x = &xi.lo + (&xi.hi - &xi.lo) * rat(i64::from(s), 16);
        let y = &yi.lo + (&yi.hi - &yi.lo) * rat(i64::from(t), 16);
        prop_assert!(xi.add(&yi).contains(&(&x + &y)));
        prop_assert!(xi.sub(&yi).contains(&(&x - &y)));
        prop_assert!(xi.mul(&yi).contains(&(&x * &y)));
        prop_assert!(xi.powi(3).contains(&(&x * &x * &x)));
        prop_assert!(xi.abs().contains(&num_traits::Signed::abs(&x)));
        if !yi.contains_zero() {
            prop_assert!(xi.div(&yi).unwrap().contains(&(&x / &y)));
        }
    }

    #[test]
    fn expression_enclosures_are_monotone(lo in 2i64..40, w in 1i64..40, k in 0i64..=8) {
        let e = (r() - 3).abs() * (3 * r() - 5) / r().pow(4) + frac(9, 8) * (int(6) - 13 * r()) / r().pow(3);
        let outer = RatInterval::new(rat(lo, 1), rat(lo + w, 1));
        let inner = RatInterval::new(rat(lo * 8 + k * w / 2, 8), rat(lo * 8 + k * w / 2 + w, 8));
        let eo = e.eval_interval(&outer).unwrap();
        let ei = e.eval_interval(&inner).unwrap();
        prop_assert!(eo.lo <= ei.lo && ei.hi <= eo.hi);
        let x = inner.mid();
        prop_assert!(ei.contains(&e.eval_exact(&x, &rat(0, 1)).unwrap()));
    }

    #[test]
    fn config_values_survive_parsing(n in 64usize..10000, m in 0.1..100.0f64, l in 1u32..6, q in -3.0..3.0f64) {
        let text = format!("# generated\nn_points = {n}\nmass = {m:?}\nl_max = {l}\n\nq_e = {q:?}\nfamily = mixed\n");
        let cfg = parse_config(&text).unwrap();
        prop_assert_eq!(cfg.n_points, n);
        prop_assert_eq!(cfg.mass, m);
        prop_assert_eq!(cfg.l_max, l);
        prop_assert_eq!(cfg.q_e, q);
        prop_assert_eq!(cfg.family, Family::Mixed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn coulomb_fields_are_fixed_points(qe in -5.0..5.0f64, qb in -5.0..5.0f64) {
        let bg = BackgroundModel::new(1.0, -60.0, 140.0, 401).unwrap();
        let s = ModeState::coulomb(qe, qb, &bg);
        let d = reduced_rhs(&s, &bg).unwrap();
        prop_assert!(d.phi0.iter().chain(&d.phi1).chain(&d.phi2).all(|z| z.norm() == 0.0));
    }

    #[test]
    fn evolution_preserves_the_discrete_constraint(
        l in 1u32..=3, a0 in complex(), a2 in complex(), center in 0.0..40.0f64,
    ) {
        let bg = BackgroundModel::new(1.0, -60.0, 140.0, 801).unwrap();
        let spec = InitialDataSpec {
            family: Family::Pulse,
            q_e: 0.0,
            q_b: 0.0,
            center,
            width: 3.0,
            modes: vec![PulseMode { l, m: 0, amplitude_phi0: a0, amplitude_phi2: a2 }],
        };
        let mut s = make_initial_data(&spec, &bg).unwrap().remove(0);
        let scale = data_norm(&s, &bg).unwrap();
        let ev = Evolver::new(&bg, l).unwrap();
        for _ in 0..200 {
            s = ev.step(&s, ev.max_dt()).unwrap();
        }
        prop_assert!(constraint_residual(&s, &bg).unwrap() <= 1e-10 * scale.max(1e-300));
    }
}

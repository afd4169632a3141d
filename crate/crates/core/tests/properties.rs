use num_complex::Complex64;
use pointreg::bethe::solve_ground;
use pointreg::manybody::{closed_form_e2, exact_diag, fraction_identity, DensityProfile, LatticeSpec, Sector, ThermoOptions};
use pointreg::perturb::kernel_j;
use pointreg::pointlike::InteractionMatrix;
use pointreg::profiles::{make_profile, PointPotential, PROFILE_NAMES};
use proptest::prelude::*;

fn profile_name() -> impl Strategy<Value = &'static str> {
    prop::sample::select(PROFILE_NAMES.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn profiles_are_odd_bounded_monotone(name in profile_name(), t in -60.0f64..60.0) {
        let p = make_profile(name).unwrap();
        prop_assert!((p.sigma(t) + p.sigma(-t)).abs() < 1e-14);
        prop_assert!(p.sigma(t).abs() <= 1.0);
        prop_assert!(p.sigma1(t) >= 0.0);
    }

    #[test]
    fn potential_is_even(name in profile_name(), a in 1e-3f64..0.3, beta in 0.0f64..3.0, x in 0.0f64..1.0) {
        let p = PointPotential::duality_preserving(make_profile(name).unwrap(), a, beta).unwrap();
        let (l, r) = (p.eval(x).unwrap(), p.eval(-x).unwrap());
        prop_assert!(l.is_finite());
        prop_assert!((l - r).abs() <= 1e-12 * l.abs().max(1.0));
    }

    #[test]
    fn symmetric_matrices_round_trip(gamma in -5.0f64..5.0, beta in -5.0f64..5.0) {
        prop_assume!((1.0 - beta * gamma).abs() > 1e-3);
        let m = InteractionMatrix::symmetric(gamma, beta).unwrap();
        prop_assert!((m.det() - 1.0).abs() < 1e-9);
        let j = m.jump_parameters();
        let scale = 1.0 + gamma.abs() + beta.abs();
        prop_assert!((j.gamma - gamma).abs() < 1e-9 * scale, "{:?}", j);
        prop_assert!((j.beta - beta).abs() < 1e-9 * scale, "{:?}", j);
    }

    #[test]
    fn inverse_undoes_apply(gamma in -3.0f64..3.0, beta in -3.0f64..3.0, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        prop_assume!((1.0 - beta * gamma).abs() > 1e-2);
        let m = InteractionMatrix::symmetric(gamma, beta).unwrap();
        let (p, dp) = (Complex64::new(re, im), Complex64::new(im, -re));
        let (q, dq) = m.apply(p, dp);
        let (p2, dp2) = m.inverse().apply(q, dq);
        prop_assert!((p2 - p).norm() < 1e-9 * (1.0 + q.norm()));
        prop_assert!((dp2 - dp).norm() < 1e-9 * (1.0 + dq.norm()));
    }

    #[test]
    fn odd_data_jumps_by_two_beta(beta in -3.0f64..3.0, s in -2.0f64..2.0) {
        let m = InteractionMatrix::free_fermion(beta);
        let s = Complex64::new(s, 0.0);
        let (p, dp) = m.apply(-beta * s, s);
        prop_assert!((p - beta * s).norm() < 1e-12);
        prop_assert!((dp - s).norm() < 1e-12);
    }

    #[test]
    fn kernel_is_continuous_at_the_diagonal(x in 0.01f64..0.99, k in 0.2f64..2.5) {
        let below = kernel_j(x, x * (1.0 - 1e-12), k, 1.0).unwrap();
        let above = kernel_j(x, x, k, 1.0).unwrap();
        prop_assert!((below - above).abs() < 1e-9);
        prop_assert!(kernel_j(x, 1.0, k, 1.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn closed_form_without_coupling_is_second_moment(q in 0.1f64..5.0) {
        let rho = DensityProfile::fermi_sea(q).unwrap();
        prop_assert!((closed_form_e2(&rho, 0.0) - rho.moment(2)).abs() < 1e-14 * rho.moment(2));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fraction_identity_for_tent_densities(w in 0.5f64..3.0, h in 0.02f64..0.15, skew in -0.4f64..0.4) {
        // piecewise linear bump, not symmetric in general
        let top = skew * w;
        let rho = DensityProfile::tabulated(vec![-w, top, w], vec![0.0, h, 0.0]).unwrap();
        let (lhs, rhs) = fraction_identity(&rho, &ThermoOptions::default()).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-8 * rhs, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn bethe_ground_state_is_symmetric(n in 2usize..12, c in 0.5f64..200.0) {
        let s = solve_ground(n, n as f64, c).unwrap();
        let k = &s.rapidities;
        prop_assert!(k.windows(2).all(|w| w[1] > w[0]));
        for i in 0..n {
            prop_assert!((k[i] + k[n - 1 - i]).abs() < 1e-10);
        }
        prop_assert!(s.momentum().abs() < 1e-10);
        prop_assert!(s.residual < 1e-10);
    }

    #[test]
    fn spectrum_is_reflection_symmetric(kk in 1i64..6, beta in 0.01f64..0.3) {
        let spec = LatticeSpec::new(12, 6.0, 2).unwrap();
        let p = PointPotential::duality_preserving(make_profile("tanh").unwrap(), 0.5, beta).unwrap();
        let plus = exact_diag(&spec, &p, 3, Sector::Momentum(kk)).unwrap();
        let minus = exact_diag(&spec, &p, 3, Sector::Momentum(-kk)).unwrap();
        for (a, b) in plus.iter().zip(&minus) {
            prop_assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "{:?} vs {:?}", plus, minus);
        }
    }
}

//! Fixed values and independent reference computations.

use std::f64::consts::PI;

use num_complex::Complex64;
use pointreg::bethe::{log_couplings, solve_ground, strong_coupling_fit};
use pointreg::manybody::{closed_form_e2, divergence_audit, DensityProfile, ThermoOptions};
use pointreg::perturb::kernel_j;
use pointreg::pointlike::{Classification, InteractionMatrix};
use pointreg::profiles::{make_profile, Mollifier, MollifierProfile, PointPotential};
use pointreg::solver::{
    i_a, lorentzian_toy, solve_even_zero_mode, solve_odd, sweep_a, GridSpec, PotentialTemplate, SolverOptions,
};
use pointreg::Error;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1e-300)
}

// ---- profiles and potentials ----

#[test]
fn tanh_profile_values() {
    let p = make_profile("tanh").unwrap();
    assert!(close(p.sigma(1.0), 0.7615941559557649, 1e-15));
    assert_eq!(p.sigma1(0.0), 1.0);
    assert!(close(p.sigma(40.0), 1.0, 1e-15));
}

struct Flat;

impl Mollifier for Flat {
    fn sigma(&self, t: f64) -> f64 {
        t.powi(3).tanh()
    }
    fn sigma1(&self, t: f64) -> f64 {
        3.0 * t * t / t.powi(3).cosh().powi(2)
    }
    fn sigma2(&self, t: f64) -> f64 {
        let s = 1.0 / t.powi(3).cosh().powi(2);
        6.0 * t * s - 18.0 * t.powi(4) * s * t.powi(3).tanh()
    }
    fn sigma3_at_0(&self) -> f64 {
        6.0
    }
    fn sigma5_at_0(&self) -> f64 {
        0.0
    }
    fn t_far(&self) -> f64 {
        5.0
    }
}

#[test]
fn profile_with_flat_origin_is_rejected() {
    match MollifierProfile::custom("flat", Flat) {
        Err(Error::AdmissibilityViolation { condition, .. }) => assert_eq!(condition, "sigma'(0) > 0"),
        other => panic!("expected admissibility error, got {other:?}"),
    }
}

#[test]
fn zero_coupling_potential_vanishes() {
    let p = PointPotential::duality_preserving(MollifierProfile::tanh(), 0.01, 0.0).unwrap();
    for x in [0.0, 1e-3, 0.02, 0.5, -0.3] {
        assert_eq!(p.eval(x).unwrap(), 0.0);
    }
}

#[test]
fn potential_matches_formula_away_from_origin() {
    // beta sigma_a''(x) / (x + beta sigma_a(x)) with sigma_a = sigma(x/a)
    let (a, beta, x) = (0.01, 0.5, 0.02);
    let p = PointPotential::duality_preserving(MollifierProfile::tanh(), a, beta).unwrap();
    let t: f64 = x / a;
    let s2 = -2.0 * t.tanh() / t.cosh().powi(2) / (a * a);
    let expected = beta * s2 / (x + beta * t.tanh());
    assert!(close(p.eval(x).unwrap(), expected, 1e-13));
}

// ---- connection conditions ----

#[test]
fn named_matrices_classify_into_their_families() {
    assert_eq!(
        InteractionMatrix::pure_boson(3.0).classify().unwrap(),
        Classification::PureBoson { gamma: 3.0 }
    );
    assert_eq!(
        InteractionMatrix::free_fermion(0.5).classify().unwrap(),
        Classification::FermionTransparentForBosons { beta: 0.5 }
    );
    assert_eq!(
        InteractionMatrix::hardcore_boson(0.5).classify().unwrap(),
        Classification::FermionHardcoreBoson { beta: 0.5 }
    );
    assert_eq!(
        InteractionMatrix::identity().classify().unwrap(),
        Classification::GeneralSymmetric { gamma: 0.0, beta: 0.0 }
    );
}

#[test]
fn free_and_hardcore_matrices_act_alike_on_odd_data() {
    let (beta, s) = (0.5, Complex64::new(0.7, 0.0));
    for m in [InteractionMatrix::free_fermion(beta), InteractionMatrix::hardcore_boson(beta)] {
        let (p, dp) = m.apply(-beta * s, s);
        assert!((p - beta * s).norm() < 1e-15);
        assert!((dp - s).norm() < 1e-15);
    }
}

// ---- two-body solutions ----

/// psi'' = (V - k^2) psi by classical RK4 at fixed step, psi(0) = 0, psi'(0) = 1.
fn rk4(p: &PointPotential, k: f64, x_end: f64, steps: usize, every: usize) -> Vec<f64> {
    let h = x_end / steps as f64;
    let f = |x: f64, y: [f64; 2]| [y[1], (p.eval(x).unwrap() - k * k) * y[0]];
    let mut y = [0.0, 1.0];
    let mut out = vec![0.0];
    for i in 0..steps {
        let x = i as f64 * h;
        let k1 = f(x, y);
        let k2 = f(x + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = f(x + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = f(x + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for j in 0..2 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if (i + 1) % every == 0 {
            out.push(y[0]);
        }
    }
    out
}

#[test]
fn odd_solution_agrees_with_fixed_step_integration() {
    let p = PointPotential::duality_preserving(MollifierProfile::tanh(), 1e-2, 0.5).unwrap();
    let sol = solve_odd(&p, 1.0, 1.0, &GridSpec::default(), &SolverOptions::default()).unwrap();
    // samples every 0.01 from two step sizes, Richardson-combined
    let coarse = rk4(&p, 1.0, 1.0, 40_000, 400);
    let fine = rk4(&p, 1.0, 1.0, 80_000, 800);
    let oracle: Vec<f64> = coarse.iter().zip(&fine).map(|(c, f)| (16.0 * f - c) / 15.0).collect();
    let end = oracle[100];
    let mut compared = 0;
    for (i, o) in oracle.iter().enumerate().skip(1) {
        let x = i as f64 * 0.01;
        let j = sol.grid.partition_point(|g| *g < x - 1e-12);
        if (sol.grid[j] - x).abs() > 1e-12 {
            continue;
        }
        assert!(close(sol.psi[j], o / end, 1e-8), "x = {x}: {} vs {}", sol.psi[j], o / end);
        compared += 1;
    }
    assert!(compared >= 5, "only {compared} common points");
}

#[test]
fn free_odd_solution_is_a_sine() {
    let p = PointPotential::duality_preserving(MollifierProfile::tanh(), 1e-2, 0.0).unwrap();
    let sol = solve_odd(&p, 1.3, 1.0, &GridSpec::default(), &SolverOptions::default()).unwrap();
    for (x, v) in sol.grid.iter().zip(&sol.psi) {
        assert!((v - (1.3 * x).sin() / 1.3f64.sin()).abs() < 1e-9);
    }
}

#[test]
fn zero_mode_at_origin() {
    let (a, beta) = (1e-2, 0.5);
    let p = PointPotential::duality_preserving(MollifierProfile::tanh(), a, beta).unwrap();
    assert_eq!(i_a(&p, 0.0).unwrap(), 0.0);
    let e = solve_even_zero_mode(&p, 0.5, &GridSpec::default()).unwrap();
    assert!(close(e.psi[0], 1.0 / (1.0 + beta / a), 1e-10), "{}", e.psi[0]);
}

#[test]
fn zero_coupling_sweep_has_no_jump() {
    let tpl = PotentialTemplate::DualityPreserving {
        profile: MollifierProfile::tanh(),
        beta: 0.0,
    };
    let t = sweep_a(&tpl, 1.0, 1.0, &[1e-1, 1e-2], &GridSpec::default(), &SolverOptions::default()).unwrap();
    for r in &t.rows {
        assert!(r.beta_eff.unwrap().abs() < 1e-9, "{:?}", r);
    }
}

#[test]
fn jump_error_shrinks_with_range() {
    let tpl = PotentialTemplate::DualityPreserving {
        profile: MollifierProfile::tanh(),
        beta: 0.5,
    };
    let t = sweep_a(&tpl, 1.0, 2.0, &[1e-1, 1e-2, 1e-3], &GridSpec::default(), &SolverOptions::default()).unwrap();
    assert!(t.monotone());
    let order = t.fitted_order.unwrap();
    assert!((order - 1.0).abs() < 0.2, "fitted order {order}");
}

#[test]
fn naive_delta_prime_without_coupling_has_no_jump() {
    let tpl = PotentialTemplate::NaiveDeltaPrime {
        profile: MollifierProfile::tanh(),
        beta: 0.0,
    };
    let t = sweep_a(&tpl, 1.0, 1.0, &[1e-2], &GridSpec::default(), &SolverOptions::default()).unwrap();
    assert!(t.rows[0].beta_eff.unwrap().abs() < 1e-9);
}

#[test]
fn lorentzian_toy_free_and_jumpless() {
    let xs = [-0.5, -0.1, 0.2, 0.9];
    for (x, f) in xs.iter().zip(lorentzian_toy(0.01, 0.0, &xs).unwrap()) {
        assert!((f - (x + 1.0)).abs() < 1e-12);
    }
    let jump = |a: f64| {
        let h = 20.0 * a;
        let v = lorentzian_toy(a, 0.5, &[-h, h]).unwrap();
        (v[1] - v[0] - 2.0 * h).abs()
    };
    assert!(jump(1e-4) < jump(1e-3));
    assert!(jump(1e-4) < 0.01);
}

// ---- recursion kernel ----

#[test]
fn kernel_direct_formula() {
    // y < x branch: sin(k(x-y)) sin(k x0) - sin(kx) sin(k(x0 - y)), over k y sin(k x0);
    // the constant is a 50-digit evaluation of the same expression
    let (x, y, k, x0): (f64, f64, f64, f64) = (0.7, 0.2, 1.0, 1.0);
    let direct = ((k * (x - y)).sin() * (k * x0).sin() - (k * x).sin() * (k * (x0 - y)).sin()) / (k * y * (k * x0).sin());
    assert!(close(kernel_j(x, y, k, x0).unwrap(), direct, 1e-13));
    assert!(close(kernel_j(x, y, k, x0).unwrap(), -0.34885814694626636, 1e-12));
    assert_eq!(kernel_j(0.3, x0, k, x0).unwrap(), 0.0);
}

// ---- thermodynamic limit ----

#[test]
fn closed_form_in_density_units() {
    // (pi^2 n^3/3)(1 - 4n/c + 12 n^2/c^2) at beta = 2/c
    for (n, c) in [(1.0, 100.0), (0.7, 50.0), (2.0, 400.0)] {
        let rho = DensityProfile::fermi_sea(PI * n).unwrap();
        let expected = PI * PI * n * n * n / 3.0 * (1.0 - 4.0 * n / c + 12.0 * n * n / (c * c));
        assert!(close(closed_form_e2(&rho, 2.0 / c), expected, 1e-13));
    }
    let rho = DensityProfile::fermi_sea(2.0).unwrap();
    assert!(close(closed_form_e2(&rho, 0.0), 8.0 / (3.0 * PI), 1e-14));
}

#[test]
fn divergent_coefficients_scale_as_beta_squared() {
    let rho = DensityProfile::fermi_sea(PI).unwrap();
    let tanh = MollifierProfile::tanh();
    let a_list = [0.02, 0.01, 0.005];
    let opts = ThermoOptions::default();
    let full = divergence_audit(&rho, &tanh, 0.05, &a_list, &opts).unwrap();
    let half = divergence_audit(&rho, &tanh, 0.025, &a_list, &opts).unwrap();
    assert!(close(half.c1 * 4.0, full.c1, 1e-6), "{} {}", half.c1, full.c1);
    assert!(close(half.c2 * 4.0, full.c2, 1e-6), "{} {}", half.c2, full.c2);
    assert!(full.cancellation < 0.01);
    assert!(close(full.c1_analytic, full.c1, 5e-3));
}

// ---- Bethe ansatz ----

#[test]
fn free_fermion_energy_is_reached_as_n_grows() {
    let errors: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| {
            let f = strong_coupling_fit(n, n as f64, &log_couplings(1e2, 1e4, 13)).unwrap();
            assert!(close(f.e0, f.e0_expected, 1e-7), "N = {n}: {} vs {}", f.e0, f.e0_expected);
            (f.e0 - PI * PI / 3.0).abs()
        })
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0] / 3.5), "{errors:?}");
}

#[test]
fn ground_energy_grows_with_coupling() {
    let energies: Vec<f64> = [1.0, 3.0, 10.0, 30.0, 100.0, 1e3]
        .iter()
        .map(|&c| solve_ground(8, 8.0, c).unwrap().energy())
        .collect();
    assert!(energies.windows(2).all(|w| w[1] > w[0]), "{energies:?}");
}

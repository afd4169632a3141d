use std::f64::consts::PI;
use std::time::Instant;

use pointreg::acceptance::{self as acc, Check, Thresholds};
use pointreg::bethe::{log_couplings, strong_coupling_fit};
use pointreg::manybody::{
    closed_form_e2, divergence_audit, exact_diag, lattice_pt, thermo_extrapolate, DensityProfile, FreeState,
    LatticeSpec, Sector, ThermoOptions,
};
use pointreg::perturb::{conjecture_check, conjecture_curves, series_check, PerturbGrid};
use pointreg::profiles::PointPotential;
use pointreg::solver::{lorentzian_toy, sweep_a, GridSpec, PotentialTemplate, SolverOptions};

use crate::config::*;
use crate::error::CliError;
use crate::output::{num, opt, Output};

pub fn theorem1_sweep(p: &SweepParams, th: &Thresholds, out: &mut Output) -> Result<Vec<Check>, CliError> {
    decreasing("a_list", &p.a_list)?;
    all_positive("betas", &p.betas)?;
    positive("k", p.k)?;
    positive("tol", p.tol)?;
    positive("eps_v", p.eps_v)?;
    if let Some(x0) = p.x0 {
        positive("x0", x0)?;
    }
    if let Some(r) = p.a_inner_ratio {
        positive("a_inner_ratio", r)?;
    }
    let opts = SolverOptions {
        tol: p.tol,
        eps_v: p.eps_v,
    };
    let profiles: Vec<String> = match p.regularization {
        Regularization::CheonShigehara => vec!["cheon-shigehara".into()],
        _ => p.profiles.clone(),
    };
    let mut jobs = Vec::new();
    for name in &profiles {
        for &beta in &p.betas {
            let tpl = match p.regularization {
                Regularization::DualityPreserving => PotentialTemplate::DualityPreserving {
                    profile: profile("profiles", name)?,
                    beta,
                },
                Regularization::NaiveDeltaPrime => PotentialTemplate::NaiveDeltaPrime {
                    profile: profile("profiles", name)?,
                    beta,
                },
                Regularization::CheonShigehara => PotentialTemplate::CheonShigehara {
                    beta,
                    a_inner_ratio: p.a_inner_ratio,
                },
            };
            let x0 = p.x0.unwrap_or_else(|| acc::sweep_x0(name));
            jobs.push((name.clone(), tpl, x0));
        }
    }
    let start = Instant::now();
    let mut tables = Vec::new();
    for (name, tpl, x0) in &jobs {
        tables.push((name.clone(), sweep_a(tpl, p.k, *x0, &p.a_list, &GridSpec::default(), &opts)?));
    }
    let secs = start.elapsed().as_secs_f64();
    let mut rows = Vec::new();
    for (name, t) in &tables {
        for r in &t.rows {
            let rep = r.report.as_ref();
            rows.push(vec![
                name.clone(),
                num(t.beta),
                num(r.a),
                num(t.x0),
                opt(r.beta_eff),
                opt(r.abs_error),
                opt(r.abs_error.map(|e| e / t.beta)),
                opt(rep.map(|x| x.p)),
                opt(rep.map(|x| x.q)),
                opt(rep.map(|x| x.fit_window.0)),
                opt(rep.map(|x| x.fit_window.1)),
                opt(rep.map(|x| x.fit_residual)),
                opt(t.fitted_order),
                r.error.clone().unwrap_or_default(),
            ]);
        }
    }
    let name = match p.regularization {
        Regularization::DualityPreserving => "theorem1_sweep.csv",
        Regularization::CheonShigehara => "theorem1_sweep_cheon_shigehara.csv",
        Regularization::NaiveDeltaPrime => "theorem1_sweep_naive.csv",
    };
    out.csv(name, SWEEP_COLUMNS, &rows)?;
    let per_point = secs / (tables.len() * p.a_list.len()) as f64;
    Ok(match p.regularization {
        Regularization::DualityPreserving => vec![acc::judge_jump_tables(3, &tables, per_point, th)],
        Regularization::CheonShigehara => vec![acc::judge_jump_tables(4, &tables, per_point, th)],
        Regularization::NaiveDeltaPrime => Vec::new(),
    })
}

pub const SWEEP_COLUMNS: &[&str] = &[
    "profile",
    "beta",
    "a",
    "x0",
    "beta_eff",
    "abs_error",
    "rel_error",
    "P",
    "Q",
    "fit_lo",
    "fit_hi",
    "fit_residual",
    "fitted_order",
    "error",
];

pub fn phi0_limit(p: &LimitParams, th: &Thresholds, out: &mut Output) -> Result<Vec<Check>, CliError> {
    let prof = profile("profile", &p.profile)?;
    positive("beta", p.beta)?;
    positive("x", p.x)?;
    decreasing("a_list", &p.a_list)?;
    positive("k0_a", p.k0_a)?;
    positive("k0_x0", p.k0_x0)?;

    let start = Instant::now();
    let k0 = acc::compute_k0(&prof, p.k0_a, p.beta, p.k0_x0)?;
    let k0_secs = start.elapsed().as_secs_f64();
    let pot = PointPotential::duality_preserving(prof.clone(), p.k0_a, p.beta)?;
    let sol = pointreg::solver::solve_odd(&pot, 0.0, p.k0_x0, &GridSpec::default(), &SolverOptions::default())?;
    let norm = p.k0_x0 + p.beta * pot.sigma_a(p.k0_x0);
    let rows: Vec<Vec<String>> = sol
        .grid
        .iter()
        .zip(&sol.psi)
        .map(|(x, v)| vec![num(*x), num(*v), num((x + p.beta * pot.sigma_a(*x)) / norm)])
        .collect();
    out.csv("k0_solution.csv", &["x", "psi", "exact"], &rows)?;

    let start = Instant::now();
    let limits = acc::compute_limits(&prof, p.beta, p.x, &p.a_list)?;
    let secs = start.elapsed().as_secs_f64();
    let rows: Vec<Vec<String>> = limits
        .iter()
        .map(|r| vec![num(r.a), num(r.i_a), num(-1.0 / p.beta), num(r.phi0), num(-1.0)])
        .collect();
    out.csv("phi0_limit.csv", &["a", "I_a", "I_a_limit", "phi0", "phi0_limit"], &rows)?;
    let mut c2 = acc::judge_limits(&limits, p.beta, th);
    c2.seconds = secs;
    Ok(vec![acc::judge_k0(&k0, k0_secs, th), c2])
}

pub fn conjecture1(p: &ConjectureParams, th: &Thresholds, out: &mut Output) -> Result<Vec<Check>, CliError> {
    let prof = profile("profile", &p.profile)?;
    all_positive("a_list", &p.a_list)?;
    positive("k", p.k)?;
    positive("x0", p.x0)?;
    positive("series_a", p.series_a)?;
    all_positive("series_betas", &p.series_betas)?;
    let grid = PerturbGrid {
        min_points: p.min_points,
        ..PerturbGrid::default()
    };
    let start = Instant::now();
    let rows = conjecture_check(&prof, &p.a_list, p.k, p.x0, p.n_max, &grid)?;
    let secs = start.elapsed().as_secs_f64();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                num(r.a),
                num(r.psi_next_at_0),
                num(r.dpsi_at_0),
                num(r.mismatch),
                num(r.window_shift),
            ]
        })
        .collect();
    out.csv(
        "conjecture1.csv",
        &["n", "a", "psi_next_at_0", "dpsi_at_0", "mismatch", "window_shift"],
        &table,
    )?;
    let mut curves = Vec::new();
    for &a in &p.a_list {
        for c in conjecture_curves(&prof, a, p.k, p.x0, p.n_max, p.x0, p.curve_samples, &grid)? {
            curves.push(vec![num(c.a), c.n.to_string(), num(c.x), num(c.psi_next), num(c.dpsi)]);
        }
    }
    out.csv("conjecture1_curves.csv", &["a", "n", "x", "psi_next", "dpsi"], &curves)?;

    let series = series_check(
        &prof,
        p.series_a,
        p.k,
        p.x0,
        &p.series_betas,
        p.series_order,
        &PerturbGrid::default(),
        &SolverOptions::default(),
    )?;
    let srows: Vec<Vec<String>> = series
        .rows
        .iter()
        .map(|r| vec![num(r.beta), num(r.l2), num(r.max_abs)])
        .collect();
    out.csv("beta_series.csv", &["beta", "l2", "max_abs"], &srows)?;
    Ok(vec![
        acc::judge_conjecture(&rows, grid.min_points, secs, th),
        acc::judge_series(&series, th),
    ])
}

pub fn naive_delta_prime(p: &NaiveParams, th: &Thresholds, out: &mut Output) -> Result<Vec<Check>, CliError> {
    let prof = profile("profile", &p.profile)?;
    positive("a", p.a)?;
    nonnegative("beta", p.beta)?;
    all_positive("first_order_a_list", &p.first_order_a_list)?;
    let d = acc::compute_naive(&prof, p.a, p.beta, &p.first_order_a_list)?;
    let rows: Vec<Vec<String>> = d.first_order.iter().map(|(a, r)| vec![num(*a), num(*r)]).collect();
    out.csv("naive_first_order.csv", &["a", "jump_ratio"], &rows)?;
    out.json(
        "naive_delta_prime.json",
        &serde_json::json!({
            "a": p.a,
            "beta": p.beta,
            "beta_eff": d.beta_eff,
            "first_order_ratio_at_a0": d.extrapolated,
        }),
    )?;
    Ok(vec![acc::judge_naive(&d, th)])
}

pub fn lorentzian(p: &LorentzianParams, out: &mut Output) -> Result<Vec<Check>, CliError> {
    nonnegative("beta", p.beta)?;
    all_positive("a_list", &p.a_list)?;
    let sigma = |a: f64, x: f64| (2.0 / PI) * (x / a).atan();
    let first = |a: f64, x: f64| x + 1.0 + p.beta * (sigma(a, x) - sigma(a, -1.0));
    let mut rows = Vec::new();
    let mut jumps = Vec::new();
    for &a in &p.a_list {
        let f = lorentzian_toy(a, p.beta, &p.x_list)?;
        for (x, v) in p.x_list.iter().zip(&f) {
            rows.push(vec![num(a), num(*x), num(*v), num(first(a, *x))]);
        }
        // change across the core, well outside the range a but inside [-1, 1]
        let probe = (50.0 * a).min(0.5);
        let g = lorentzian_toy(a, p.beta, &[-probe, probe])?;
        jumps.push(vec![
            num(a),
            num(probe),
            num(g[1] - g[0] - 2.0 * probe),
            num(first(a, probe) - first(a, -probe) - 2.0 * probe),
        ]);
    }
    out.csv("lorentzian_toy.csv", &["a", "x", "f", "f_first_order"], &rows)?;
    out.csv(
        "lorentzian_jump.csv",
        &["a", "probe", "core_jump", "first_order_core_jump"],
        &jumps,
    )?;
    Ok(Vec::new())
}

fn lattice_setup(m: usize, l: f64, n: usize) -> Result<LatticeSpec, CliError> {
    positive("l", l)?;
    LatticeSpec::new(m, l, n).map_err(|e| CliError::Config {
        field: "m/l/n".into(),
        reason: e.to_string(),
    })
}

pub fn lattice(p: &LatticeParams, out: &mut Output) -> Result<Vec<Check>, CliError> {
    let spec = lattice_setup(p.m, p.l, p.n)?;
    let prof = profile("profile", &p.profile)?;
    positive("a", p.a)?;
    all_positive("betas", &p.betas)?;
    let state = match &p.state {
        Some(s) => FreeState::new(&spec, s.clone()).map_err(|e| CliError::Config {
            field: "state".into(),
            reason: e.to_string(),
        })?,
        None => FreeState::ground(&spec)?,
    };
    let mut rows = Vec::new();
    let mut all = Vec::new();
    for &beta in &p.betas {
        let pot = PointPotential::duality_preserving(prof.clone(), p.a, beta)?;
        let e = lattice_pt(&spec, &state, &pot)?;
        for w in &e.warnings {
            eprintln!("warning: {w}");
        }
        rows.push(vec![num(beta), num(e.e0), num(e.e1), num(e.e2), num(e.total())]);
        all.push(e);
    }
    out.csv("lattice_pt.csv", &["beta", "E0", "E1", "E2", "total"], &rows)?;
    out.json("lattice_pt.json", &all)?;
    Ok(Vec::new())
}

pub fn ed(p: &EdParams, th: &Thresholds, out: &mut Output) -> Result<Vec<Check>, CliError> {
    let spec = lattice_setup(p.m, p.l, p.n)?;
    let prof = profile("profile", &p.profile)?;
    positive("a", p.a)?;
    all_positive("betas", &p.betas)?;
    if p.n_levels == 0 {
        return Err(CliError::Config {
            field: "n_levels".into(),
            reason: "must be at least 1".into(),
        });
    }
    let start = Instant::now();
    let (cmp, warnings) = acc::compute_ed_rows(&spec, &prof, p.a, &p.betas)?;
    let secs = start.elapsed().as_secs_f64();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let sector = match p.sector {
        SectorChoice::ZeroMomentum => Sector::Momentum(0),
        SectorChoice::RealSpace => Sector::RealSpace,
    };
    let mut levels = Vec::new();
    for &beta in &p.betas {
        let pot = PointPotential::duality_preserving(prof.clone(), p.a, beta)?;
        for (i, e) in exact_diag(&spec, &pot, p.n_levels, sector)?.iter().enumerate() {
            levels.push(vec![num(beta), i.to_string(), num(*e)]);
        }
    }
    out.csv("exact_diag.csv", &["beta", "level", "energy"], &levels)?;
    let rows: Vec<Vec<String>> = cmp
        .iter()
        .map(|r| vec![num(r.beta), num(r.e_ed), num(r.e0), num(r.e1), num(r.e2), num(r.residual)])
        .collect();
    out.csv("ed_vs_pt.csv", &["beta", "E_ed", "E0", "E1", "E2", "residual"], &rows)?;
    Ok(vec![acc::judge_ed(&cmp, secs, th)])
}

fn thermo_inputs(p: &ThermoParams) -> Result<(DensityProfile, pointreg::profiles::MollifierProfile), CliError> {
    positive("beta", p.beta)?;
    all_positive("a_list", &p.a_list)?;
    positive("rel_tol", p.rel_tol)?;
    Ok((p.density.build()?, profile("profile", &p.profile)?))
}

pub fn thermo(p: &ThermoParams, th: &Thresholds, out: &mut Output) -> Result<Vec<Check>, CliError> {
    let (rho, prof) = thermo_inputs(p)?;
    let e = thermo_extrapolate(&rho, &prof, p.beta, &p.a_list, &ThermoOptions { rel_tol: p.rel_tol })?;
    let rows: Vec<Vec<String>> = e
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.a),
                num(r.e0),
                num(r.e1),
                num(r.e2),
                opt(r.e2_reg),
                opt(r.e2_sing),
                opt(r.e1_beta2),
                opt(r.e2_four_rho),
                num(r.total()),
            ]
        })
        .collect();
    out.csv(
        "thermo_pt.csv",
        &["a", "E0", "E1", "E2", "E2_reg", "E2_sing", "E1_beta2", "E2_four_rho", "total"],
        &rows,
    )?;
    out.json("thermo_pt.json", &e)?;
    Ok(vec![acc::judge_extrapolation(&e, th)])
}

pub fn audit(p: &AuditParams, th: &Thresholds, out: &mut Output) -> Result<Vec<Check>, CliError> {
    let (rho, prof) = thermo_inputs(p)?;
    let d = divergence_audit(&rho, &prof, p.beta, &p.a_list, &ThermoOptions { rel_tol: p.rel_tol })?;
    let rows: Vec<Vec<String>> = d
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.a),
                num(r.e1_beta2),
                num(r.e2_sing),
                num(r.e1_fit_residual),
                num(r.e2_fit_residual),
            ]
        })
        .collect();
    out.csv(
        "divergence_audit.csv",
        &["a", "E1_beta2", "E2_sing", "E1_fit_residual", "E2_sing_fit_residual"],
        &rows,
    )?;
    out.json("divergence_audit.json", &d)?;
    Ok(vec![acc::judge_audit(&d, th)])
}

pub fn closed_form(p: &ClosedFormParams, out: &mut Output) -> Result<Vec<Check>, CliError> {
    p.betas.iter().try_for_each(|b| nonnegative("betas", *b))?;
    let rho = p.density.build()?;
    let rows: Vec<Vec<String>> = p
        .betas
        .iter()
        .map(|&b| vec![num(b), num(closed_form_e2(&rho, b))])
        .collect();
    out.csv("closed_form.csv", &["beta", "energy_density"], &rows)?;
    Ok(Vec::new())
}

pub fn bethe(p: &BetheParams, th: &Thresholds, out: &mut Output) -> Result<Vec<Check>, CliError> {
    if p.n == 0 {
        return Err(CliError::Config {
            field: "n".into(),
            reason: "need at least one particle".into(),
        });
    }
    positive("l", p.l)?;
    positive("c_min", p.c_min)?;
    positive("c_max", p.c_max)?;
    if p.c_max <= p.c_min || p.count < 7 {
        return Err(CliError::Config {
            field: "c_min/c_max/count".into(),
            reason: "need c_max > c_min and at least seven couplings".into(),
        });
    }
    let f = strong_coupling_fit(p.n, p.l, &log_couplings(p.c_min, p.c_max, p.count))?;
    let rho = DensityProfile::fermi_sea(PI * f.density)?;
    let rows: Vec<Vec<String>> = f
        .rows
        .iter()
        .map(|(c, e, r)| vec![num(*c), num(*e), num(*r), num(closed_form_e2(&rho, 2.0 / c))])
        .collect();
    out.csv("bethe.csv", &["c", "E_over_L", "residual", "closed_form"], &rows)?;
    out.json("bethe_fit.json", &f)?;
    Ok(vec![acc::judge_bethe(&f, th)])
}

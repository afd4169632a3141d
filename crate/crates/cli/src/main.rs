mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use pointreg::acceptance::{Check, Thresholds};
use serde::Serialize;

use config::*;
use error::CliError;
use output::Output;

#[derive(Parser)]
#[command(
    name = "pointreg",
    version,
    about = "Numerical checks for regularized point interactions of 1D fermions",
    after_help = "Exit codes: 0 ok, 2 configuration error, 3 numerical or I/O failure, 4 acceptance failure.\n\
                  Every output file gets a <file>.meta.json sidecar with the resolved configuration."
)]
struct Cli {
    /// TOML or JSON file with per-command blocks; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads [default: all cores].
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Effective jump strength beta_eff as the range a shrinks.
    #[command(after_help = "theorem1_sweep[_cheon_shigehara|_naive].csv: profile, beta, a, x0, beta_eff, abs_error, \
        rel_error, P, Q, fit_lo, fit_hi, fit_residual, fitted_order, error")]
    Theorem1Sweep(SweepArgs),
    /// Zero-energy solutions: odd k = 0 solution and the even mode limit.
    #[command(after_help = "k0_solution.csv: x, psi, exact\n\
        phi0_limit.csv: a, I_a, I_a_limit, phi0, phi0_limit")]
    Phi0Limit(LimitArgs),
    /// Perturbative orders in beta and the derivative-continuity check.
    #[command(after_help = "conjecture1.csv: n, a, psi_next_at_0, dpsi_at_0, mismatch, window_shift\n\
        conjecture1_curves.csv: a, n, x, psi_next, dpsi\n\
        beta_series.csv: beta, l2, max_abs (distance of the exact solution from the partial sum)")]
    Conjecture1(ConjectureArgs),
    /// Naive scaled delta-prime: no jump survives, first order does.
    #[command(after_help = "naive_first_order.csv: a, jump_ratio\nnaive_delta_prime.json")]
    NaiveDeltaPrime(NaiveArgs),
    /// Lorentzian toy integral f_a(x) and its first-order approximation.
    #[command(after_help = "lorentzian_toy.csv: a, x, f, f_first_order\n\
        lorentzian_jump.csv: a, probe, core_jump, first_order_core_jump")]
    LorentzianToy(LorentzianArgs),
    /// Second-order lattice perturbation theory for N fermions on a ring.
    #[command(after_help = "lattice_pt.csv: beta, E0, E1, E2, total\nlattice_pt.json")]
    LatticePt(LatticeArgs),
    /// Exact diagonalization compared with perturbation theory.
    #[command(after_help = "exact_diag.csv: beta, level, energy\n\
        ed_vs_pt.csv: beta, E_ed, E0, E1, E2, residual")]
    ExactDiag(EdArgs),
    /// Thermodynamic-limit energy density, extrapolated to a = 0.
    #[command(after_help = "thermo_pt.csv: a, E0, E1, E2, E2_reg, E2_sing, E1_beta2, E2_four_rho, total\nthermo_pt.json")]
    ThermoPt(ThermoArgs),
    /// Cancellation of the 1/a pieces between E1 and E2.
    #[command(after_help = "divergence_audit.csv: a, E1_beta2, E2_sing, E1_fit_residual, E2_sing_fit_residual\n\
        divergence_audit.json")]
    DivergenceAudit(ThermoArgs),
    /// Strong-coupling closed form of the energy density.
    #[command(after_help = "closed_form.csv: beta, energy_density")]
    ClosedForm(ClosedFormArgs),
    /// Lieb-Liniger ground state and the 1/c expansion fit.
    #[command(after_help = "bethe.csv: c, E_over_L, residual, closed_form (beta = 2/c)\nbethe_fit.json")]
    BetheFit(BetheArgs),
    /// Every command with its configured parameters, plus acceptance.json.
    ReproduceAll,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SweepArgs {
    #[arg(long, value_enum)]
    regularization: Option<Regularization>,
    #[arg(long, value_delimiter = ',')]
    profiles: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    a_list: Option<Vec<f64>>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    a_inner_ratio: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    eps_v: Option<f64>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct LimitArgs {
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    x: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    a_list: Option<Vec<f64>>,
    #[arg(long)]
    k0_a: Option<f64>,
    #[arg(long)]
    k0_x0: Option<f64>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct ConjectureArgs {
    #[arg(long)]
    profile: Option<String>,
    #[arg(long, value_delimiter = ',')]
    a_list: Option<Vec<f64>>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    min_points: Option<usize>,
    #[arg(long)]
    curve_samples: Option<usize>,
    #[arg(long)]
    series_a: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    series_betas: Option<Vec<f64>>,
    #[arg(long)]
    series_order: Option<usize>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct NaiveArgs {
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    first_order_a_list: Option<Vec<f64>>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct LorentzianArgs {
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    a_list: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x_list: Option<Vec<f64>>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct LatticeArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    l: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    /// Occupied momentum indices, e.g. -1,0
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    state: Option<Vec<i64>>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct EdArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    l: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    #[arg(long)]
    n_levels: Option<usize>,
    #[arg(long, value_enum)]
    sector: Option<SectorChoice>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct ThermoArgs {
    /// Fermi momentum of a flat density (replaces any configured density).
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    a_list: Option<Vec<f64>>,
    #[arg(long)]
    rel_tol: Option<f64>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct ClosedFormArgs {
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct BetheArgs {
    /// Particle number.
    #[arg(long)]
    n: Option<usize>,
    /// Ring length.
    #[arg(long)]
    l: Option<f64>,
    #[arg(long)]
    c_min: Option<f64>,
    #[arg(long)]
    c_max: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
}

macro_rules! merge {
    ($dst:expr, $src:expr; $($f:ident),+) => {
        $(if let Some(v) = $src.$f.clone() { $dst.$f = v; })+
    };
}

macro_rules! merge_opt {
    ($dst:expr, $src:expr; $($f:ident),+) => {
        $(if $src.$f.is_some() { $dst.$f = $src.$f.clone(); })+
    };
}

fn run_one<P: Serialize>(
    dir: &Path,
    name: &'static str,
    params: &P,
    f: impl FnOnce(&P, &mut Output) -> Result<Vec<Check>, CliError>,
) -> Result<Vec<Check>, CliError> {
    let mut out = Output::new(dir, name, params)?;
    let start = Instant::now();
    let mut checks = f(params, &mut out)?;
    let secs = start.elapsed().as_secs_f64();
    for c in &mut checks {
        if c.seconds == 0.0 {
            c.seconds = secs;
        }
        println!("{c}");
    }
    for p in &out.written {
        eprintln!("wrote {}", p.display());
    }
    Ok(checks)
}

fn reproduce_all(cfg: &FileConfig, dir: &Path) -> Result<Vec<Check>, CliError> {
    let th = &cfg.thresholds;
    let mut all = Vec::new();
    let cs = SweepParams {
        regularization: Regularization::CheonShigehara,
        betas: vec![0.5],
        ..cfg.theorem1_sweep.clone()
    };
    all.extend(run_one(dir, "phi0-limit", &cfg.phi0_limit, |p, o| commands::phi0_limit(p, th, o))?);
    all.extend(run_one(dir, "theorem1-sweep", &cfg.theorem1_sweep, |p, o| {
        commands::theorem1_sweep(p, th, o)
    })?);
    all.extend(run_one(dir, "theorem1-sweep", &cs, |p, o| commands::theorem1_sweep(p, th, o))?);
    all.extend(run_one(dir, "naive-delta-prime", &cfg.naive_delta_prime, |p, o| {
        commands::naive_delta_prime(p, th, o)
    })?);
    all.extend(run_one(dir, "conjecture1", &cfg.conjecture1, |p, o| commands::conjecture1(p, th, o))?);
    all.extend(run_one(dir, "divergence-audit", &cfg.divergence_audit, |p, o| commands::audit(p, th, o))?);
    all.extend(run_one(dir, "thermo-pt", &cfg.thermo_pt, |p, o| commands::thermo(p, th, o))?);
    all.extend(run_one(dir, "exact-diag", &cfg.exact_diag, |p, o| commands::ed(p, th, o))?);
    all.extend(run_one(dir, "bethe-fit", &cfg.bethe_fit, |p, o| commands::bethe(p, th, o))?);
    run_one(dir, "lorentzian-toy", &cfg.lorentzian_toy, commands::lorentzian)?;
    run_one(dir, "lattice-pt", &cfg.lattice_pt, commands::lattice)?;
    run_one(dir, "closed-form", &cfg.closed_form, commands::closed_form)?;
    all.sort_by_key(|c| c.id);

    let report: Vec<_> = all
        .iter()
        .map(|c| {
            serde_json::json!({
                "id": c.id,
                "title": c.title,
                "passed": c.passed,
                "detail": c.detail,
                "seconds": c.seconds,
            })
        })
        .collect();
    let mut out = Output::new(dir, "reproduce-all", cfg)?;
    out.json("acceptance.json", &report)?;
    let failed = all.iter().filter(|c| !c.passed).count();
    println!("{} of {} acceptance checks passed", all.len() - failed, all.len());
    Ok(all)
}

fn run(cli: Cli) -> Result<Vec<Check>, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    if let Some(t) = cli.threads.or(cfg.threads) {
        if t == 0 {
            return Err(CliError::Config {
                field: "threads".into(),
                reason: "must be at least 1".into(),
            });
        }
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let dir = cli.out.clone().or(cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let th: Thresholds = cfg.thresholds.clone();
    let th = &th;

    match cli.command {
        Command::Theorem1Sweep(a) => {
            let p = &mut cfg.theorem1_sweep;
            merge!(p, a; regularization, profiles, betas, a_list, k, tol, eps_v);
            merge_opt!(p, a; x0, a_inner_ratio);
            run_one(&dir, "theorem1-sweep", p, |p, o| commands::theorem1_sweep(p, th, o))
        }
        Command::Phi0Limit(a) => {
            let p = &mut cfg.phi0_limit;
            merge!(p, a; profile, beta, x, a_list, k0_a, k0_x0);
            run_one(&dir, "phi0-limit", p, |p, o| commands::phi0_limit(p, th, o))
        }
        Command::Conjecture1(a) => {
            let p = &mut cfg.conjecture1;
            merge!(p, a; profile, a_list, k, x0, n_max, min_points, curve_samples, series_a, series_betas, series_order);
            run_one(&dir, "conjecture1", p, |p, o| commands::conjecture1(p, th, o))
        }
        Command::NaiveDeltaPrime(a) => {
            let p = &mut cfg.naive_delta_prime;
            merge!(p, a; profile, a, beta, first_order_a_list);
            run_one(&dir, "naive-delta-prime", p, |p, o| commands::naive_delta_prime(p, th, o))
        }
        Command::LorentzianToy(a) => {
            let p = &mut cfg.lorentzian_toy;
            merge!(p, a; beta, a_list, x_list);
            run_one(&dir, "lorentzian-toy", p, commands::lorentzian)
        }
        Command::LatticePt(a) => {
            let p = &mut cfg.lattice_pt;
            merge!(p, a; m, l, n, profile, a, betas);
            merge_opt!(p, a; state);
            run_one(&dir, "lattice-pt", p, commands::lattice)
        }
        Command::ExactDiag(a) => {
            let p = &mut cfg.exact_diag;
            merge!(p, a; m, l, n, profile, a, betas, n_levels, sector);
            run_one(&dir, "exact-diag", p, |p, o| commands::ed(p, th, o))
        }
        Command::ThermoPt(a) => {
            let p = &mut cfg.thermo_pt;
            merge_thermo(p, a);
            run_one(&dir, "thermo-pt", p, |p, o| commands::thermo(p, th, o))
        }
        Command::DivergenceAudit(a) => {
            let p = &mut cfg.divergence_audit;
            merge_thermo(p, a);
            run_one(&dir, "divergence-audit", p, |p, o| commands::audit(p, th, o))
        }
        Command::ClosedForm(a) => {
            let p = &mut cfg.closed_form;
            if let Some(q) = a.q {
                p.density = DensityConfig::FermiSea { q };
            }
            merge!(p, a; betas);
            run_one(&dir, "closed-form", p, commands::closed_form)
        }
        Command::BetheFit(a) => {
            let p = &mut cfg.bethe_fit;
            merge!(p, a; n, l, c_min, c_max, count);
            run_one(&dir, "bethe-fit", p, |p, o| commands::bethe(p, th, o))
        }
        Command::ReproduceAll => reproduce_all(&cfg, &dir),
    }
}

fn merge_thermo(p: &mut ThermoParams, a: ThermoArgs) {
    if let Some(q) = a.q {
        p.density = DensityConfig::FermiSea { q };
    }
    merge!(p, a; profile, beta, a_list, rel_tol);
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli).and_then(|checks| {
        let failed = checks.iter().filter(|c| !c.passed).count();
        if failed > 0 {
            Err(CliError::Acceptance { failed })
        } else {
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

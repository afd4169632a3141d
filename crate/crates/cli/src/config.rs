//! Experiment configuration: one block per command, loaded from TOML or JSON
//! and then overridden by flags. Defaults reproduce the acceptance runs.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use pointreg::acceptance::Thresholds;
use pointreg::manybody::DensityProfile;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub thresholds: Thresholds,
    #[serde(rename = "theorem1-sweep")]
    pub theorem1_sweep: SweepParams,
    #[serde(rename = "phi0-limit")]
    pub phi0_limit: LimitParams,
    pub conjecture1: ConjectureParams,
    #[serde(rename = "naive-delta-prime")]
    pub naive_delta_prime: NaiveParams,
    #[serde(rename = "lorentzian-toy")]
    pub lorentzian_toy: LorentzianParams,
    #[serde(rename = "lattice-pt")]
    pub lattice_pt: LatticeParams,
    #[serde(rename = "exact-diag")]
    pub exact_diag: EdParams,
    #[serde(rename = "thermo-pt")]
    pub thermo_pt: ThermoParams,
    #[serde(rename = "divergence-audit")]
    pub divergence_audit: AuditParams,
    #[serde(rename = "closed-form")]
    pub closed_form: ClosedFormParams,
    #[serde(rename = "bethe-fit")]
    pub bethe_fit: BetheParams,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            field: "--config".into(),
            reason: format!("cannot read {}: {e}", path.display()),
        })?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            serde_json::from_str(&text).map_err(|e| CliError::Config {
                field: path.display().to_string(),
                reason: e.to_string(),
            })
        } else {
            toml::from_str(&text).map_err(|e| CliError::Config {
                field: path.display().to_string(),
                reason: e.message().to_string(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Regularization {
    DualityPreserving,
    CheonShigehara,
    NaiveDeltaPrime,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    pub regularization: Regularization,
    pub profiles: Vec<String>,
    pub betas: Vec<f64>,
    /// Strictly decreasing.
    pub a_list: Vec<f64>,
    pub k: f64,
    /// Outer radius; per-profile default when absent.
    pub x0: Option<f64>,
    /// Cheon-Shigehara inner scale as a fraction of a.
    pub a_inner_ratio: Option<f64>,
    pub tol: f64,
    pub eps_v: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            regularization: Regularization::DualityPreserving,
            profiles: vec!["tanh".into(), "algebraic".into(), "smoothstep".into()],
            betas: vec![0.1, 0.5, 2.0],
            a_list: vec![1e-1, 1e-2, 1e-3],
            k: 1.0,
            x0: None,
            a_inner_ratio: None,
            tol: 1e-10,
            eps_v: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitParams {
    pub profile: String,
    pub beta: f64,
    /// Evaluation point of I_a and phi0.
    pub x: f64,
    pub a_list: Vec<f64>,
    /// Range and box of the k = 0 odd-solution check.
    pub k0_a: f64,
    pub k0_x0: f64,
}

impl Default for LimitParams {
    fn default() -> Self {
        Self {
            profile: "tanh".into(),
            beta: 0.5,
            x: 0.5,
            a_list: vec![1e-1, 1e-2, 1e-3],
            k0_a: 1e-2,
            k0_x0: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConjectureParams {
    pub profile: String,
    pub a_list: Vec<f64>,
    pub k: f64,
    pub x0: f64,
    pub n_max: usize,
    pub min_points: usize,
    /// Points per exported curve.
    pub curve_samples: usize,
    pub series_a: f64,
    pub series_betas: Vec<f64>,
    pub series_order: usize,
}

impl Default for ConjectureParams {
    fn default() -> Self {
        Self {
            profile: "tanh".into(),
            a_list: vec![1e-2, 1e-3],
            k: 1.0,
            x0: 1.0,
            n_max: 3,
            min_points: 100_000,
            curve_samples: 2000,
            series_a: 1e-2,
            series_betas: vec![0.04, 0.02, 0.01],
            series_order: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NaiveParams {
    pub profile: String,
    pub a: f64,
    pub beta: f64,
    /// Ranges of the first-order-in-beta solution, extrapolated to a = 0.
    pub first_order_a_list: Vec<f64>,
}

impl Default for NaiveParams {
    fn default() -> Self {
        Self {
            profile: "tanh".into(),
            a: 1e-3,
            beta: 0.1,
            first_order_a_list: vec![1e-2, 1e-3, 1e-4],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LorentzianParams {
    pub beta: f64,
    pub a_list: Vec<f64>,
    pub x_list: Vec<f64>,
}

impl Default for LorentzianParams {
    fn default() -> Self {
        Self {
            beta: 0.5,
            a_list: vec![1e-1, 1e-2, 1e-3],
            x_list: (0..=40).map(|i| -0.5 + 0.025 * i as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeParams {
    pub m: usize,
    pub l: f64,
    pub n: usize,
    pub profile: String,
    pub a: f64,
    pub betas: Vec<f64>,
    /// Occupied momentum indices; the zero-momentum ground state when absent.
    pub state: Option<Vec<i64>>,
}

impl Default for LatticeParams {
    fn default() -> Self {
        Self {
            m: 64,
            l: 8.0,
            n: 2,
            profile: "tanh".into(),
            a: 0.05,
            betas: vec![0.1, 0.05, 0.025],
            state: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SectorChoice {
    ZeroMomentum,
    RealSpace,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdParams {
    pub m: usize,
    pub l: f64,
    pub n: usize,
    pub profile: String,
    pub a: f64,
    pub betas: Vec<f64>,
    pub n_levels: usize,
    pub sector: SectorChoice,
}

impl Default for EdParams {
    fn default() -> Self {
        let l = LatticeParams::default();
        Self {
            m: l.m,
            l: l.l,
            n: l.n,
            profile: l.profile,
            a: l.a,
            betas: l.betas,
            n_levels: 4,
            sector: SectorChoice::ZeroMomentum,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DensityConfig {
    FermiSea { q: f64 },
    Tabulated { lambdas: Vec<f64>, rho: Vec<f64> },
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self::FermiSea { q: PI }
    }
}

impl DensityConfig {
    pub fn build(&self) -> Result<DensityProfile, CliError> {
        let r = match self {
            Self::FermiSea { q } => DensityProfile::fermi_sea(*q),
            Self::Tabulated { lambdas, rho } => DensityProfile::tabulated(lambdas.clone(), rho.clone()),
        };
        r.map_err(|e| CliError::Config {
            field: "density".into(),
            reason: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermoParams {
    pub density: DensityConfig,
    pub profile: String,
    pub beta: f64,
    pub a_list: Vec<f64>,
    pub rel_tol: f64,
}

impl Default for ThermoParams {
    fn default() -> Self {
        Self {
            density: DensityConfig::default(),
            profile: "tanh".into(),
            beta: 0.05,
            a_list: vec![0.02, 0.01, 0.005],
            rel_tol: 1e-11,
        }
    }
}

pub type AuditParams = ThermoParams;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClosedFormParams {
    pub density: DensityConfig,
    pub betas: Vec<f64>,
}

impl Default for ClosedFormParams {
    fn default() -> Self {
        Self {
            density: DensityConfig::default(),
            betas: vec![0.0, 0.01, 0.02, 0.05, 0.1],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BetheParams {
    pub n: usize,
    pub l: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub count: usize,
}

impl Default for BetheParams {
    fn default() -> Self {
        Self {
            n: 64,
            l: 64.0,
            c_min: 1e2,
            c_max: 1e4,
            count: 25,
        }
    }
}

// ---- validation ----

pub fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config {
            field: field.into(),
            reason: format!("must be positive, got {v}"),
        })
    }
}

pub fn nonnegative(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(CliError::Config {
            field: field.into(),
            reason: format!("must be non-negative, got {v}"),
        })
    }
}

pub fn all_positive(field: &str, v: &[f64]) -> Result<(), CliError> {
    if v.is_empty() {
        return Err(CliError::Config {
            field: field.into(),
            reason: "must not be empty".into(),
        });
    }
    v.iter().try_for_each(|x| positive(field, *x))
}

pub fn decreasing(field: &str, v: &[f64]) -> Result<(), CliError> {
    all_positive(field, v)?;
    if v.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError::Config {
            field: field.into(),
            reason: "must be strictly decreasing".into(),
        });
    }
    Ok(())
}

pub fn profile(field: &str, name: &str) -> Result<pointreg::profiles::MollifierProfile, CliError> {
    pointreg::profiles::make_profile(name).map_err(|e| CliError::Config {
        field: field.into(),
        reason: e.to_string(),
    })
}

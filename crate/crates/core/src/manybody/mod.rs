//! Energy of the fermion gas with the duality-preserving potential, to
//! second order in beta: lattice sums, exact diagonalization and the
//! thermodynamic integrals.

mod ed;
mod lattice;
mod thermo;

pub use ed::{exact_diag, Sector};
pub use lattice::{lattice_pt, lattice_transform};
pub use thermo::{
    closed_form_e2, divergence_audit, e2_direct_fermi_sea, four_rho_term, fraction_identity, thermo_extrapolate,
    thermo_pt, AuditRow, DivergenceAudit, Extrapolation, ThermoOptions,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ring of M sites, spacing kappa = L/M, holding N fermions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub m: usize,
    pub l: f64,
    pub kappa: f64,
    pub n: usize,
}

impl LatticeSpec {
    pub fn new(m: usize, l: f64, n: usize) -> Result<Self> {
        if m < 2 || m % 2 != 0 {
            return Err(Error::InvalidParameter {
                name: "M",
                value: m as f64,
                reason: "site count must be even and at least 2",
            });
        }
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidParameter {
                name: "L",
                value: l,
                reason: "ring length must be positive",
            });
        }
        if n == 0 || n >= m {
            return Err(Error::InvalidParameter {
                name: "N",
                value: n as f64,
                reason: "need 0 < N < M",
            });
        }
        Ok(Self {
            m,
            l,
            kappa: l / m as f64,
            n,
        })
    }

    /// Momentum 2 pi j / M of an index taken modulo M.
    pub fn momentum(&self, j: i64) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.m as f64
    }

    /// Index folded into [0, M).
    pub fn fold(&self, j: i64) -> usize {
        j.rem_euclid(self.m as i64) as usize
    }

    /// Single-particle energy 4 sin^2(lambda/2)/(L kappa^2).
    pub fn band(&self, j: i64) -> f64 {
        let s = (std::f64::consts::PI * j as f64 / self.m as f64).sin();
        4.0 * s * s / (self.l * self.kappa * self.kappa)
    }
}

/// Free eigenstate: N distinct momentum indices j (lambda = 2 pi j / M) in
/// [-M/2, M/2) with zero total momentum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeState {
    pub indices: Vec<i64>,
}

impl FreeState {
    pub fn new(spec: &LatticeSpec, mut indices: Vec<i64>) -> Result<Self> {
        let half = spec.m as i64 / 2;
        indices.sort_unstable();
        if indices.len() != spec.n {
            return Err(Error::InvalidParameter {
                name: "state",
                value: indices.len() as f64,
                reason: "number of momenta differs from N",
            });
        }
        if indices.iter().any(|j| *j < -half || *j >= half) {
            return Err(Error::InvalidParameter {
                name: "state",
                value: f64::NAN,
                reason: "momentum index outside [-M/2, M/2)",
            });
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter {
                name: "state",
                value: f64::NAN,
                reason: "momenta must be distinct",
            });
        }
        let total: i64 = indices.iter().sum();
        if total.rem_euclid(spec.m as i64) != 0 {
            return Err(Error::InvalidParameter {
                name: "state",
                value: total as f64,
                reason: "total momentum must vanish",
            });
        }
        Ok(Self { indices })
    }

    /// Lowest zero-momentum state: +-1..+-N/2 for even N, a symmetric block
    /// around 0 for odd N.
    pub fn ground(spec: &LatticeSpec) -> Result<Self> {
        let n = spec.n as i64;
        let idx = if n % 2 == 0 {
            (1..=n / 2).flat_map(|j| [-j, j]).collect()
        } else {
            (-(n - 1) / 2..=(n - 1) / 2).collect()
        };
        Self::new(spec, idx)
    }

    pub fn lambdas(&self, spec: &LatticeSpec) -> Vec<f64> {
        self.indices.iter().map(|j| spec.momentum(*j)).collect()
    }
}

/// Particle density in momentum space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DensityProfile {
    /// 1/(2 pi) on [-q, q].
    FermiSea { q: f64 },
    /// Piecewise linear through (lambda_i, rho_i), zero outside.
    Tabulated { lambdas: Vec<f64>, rho: Vec<f64> },
}

impl DensityProfile {
    pub fn fermi_sea(q: f64) -> Result<Self> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::InvalidParameter {
                name: "q",
                value: q,
                reason: "Fermi momentum must be positive",
            });
        }
        Ok(Self::FermiSea { q })
    }

    pub fn tabulated(lambdas: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        if lambdas.len() != rho.len() || lambdas.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "rho",
                value: rho.len() as f64,
                reason: "need matching abscissae and values, at least two",
            });
        }
        if lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter {
                name: "lambdas",
                value: f64::NAN,
                reason: "abscissae must increase",
            });
        }
        let cap = 1.0 / (2.0 * std::f64::consts::PI);
        if let Some(v) = rho.iter().find(|v| !(**v >= 0.0 && **v <= cap * (1.0 + 1e-12))) {
            return Err(Error::InvalidParameter {
                name: "rho",
                value: *v,
                reason: "density must lie in [0, 1/(2 pi)]",
            });
        }
        Ok(Self::Tabulated { lambdas, rho })
    }

    pub fn rho(&self, x: f64) -> f64 {
        match self {
            Self::FermiSea { q } => {
                if x.abs() <= *q {
                    1.0 / (2.0 * std::f64::consts::PI)
                } else {
                    0.0
                }
            }
            Self::Tabulated { lambdas, rho } => {
                let n = lambdas.len();
                if x < lambdas[0] || x > lambdas[n - 1] {
                    return 0.0;
                }
                let i = lambdas.partition_point(|l| *l <= x).clamp(1, n - 1);
                let t = (x - lambdas[i - 1]) / (lambdas[i] - lambdas[i - 1]);
                rho[i - 1] + t * (rho[i] - rho[i - 1])
            }
        }
    }

    pub fn hole(&self, x: f64) -> f64 {
        1.0 / (2.0 * std::f64::consts::PI) - self.rho(x)
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::FermiSea { q } => (-q, *q),
            Self::Tabulated { lambdas, .. } => (lambdas[0], *lambdas.last().unwrap()),
        }
    }

    /// Points where rho has kinks or jumps, including the support ends.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::FermiSea { q } => vec![-q, *q],
            Self::Tabulated { lambdas, .. } => lambdas.clone(),
        }
    }

    /// Integral of lambda^p rho.
    pub fn moment(&self, p: i32) -> f64 {
        match self {
            Self::FermiSea { q } => {
                if p % 2 == 1 {
                    0.0
                } else {
                    2.0 * q.powi(p + 1) / ((p + 1) as f64 * 2.0 * std::f64::consts::PI)
                }
            }
            Self::Tabulated { lambdas, rho } => {
                // exact for piecewise linear rho: two-point Gauss is not enough
                // for high p, so integrate each segment with GK21
                let mut s = 0.0;
                for i in 1..lambdas.len() {
                    let (x0, x1) = (lambdas[i - 1], lambdas[i]);
                    let (r0, r1) = (rho[i - 1], rho[i]);
                    let f = |x: f64| x.powi(p) * (r0 + (x - x0) / (x1 - x0) * (r1 - r0));
                    s += crate::numerics::quad::gk21(&f, x0, x1).0;
                }
                s
            }
        }
    }

    /// D = integral of rho.
    pub fn density(&self) -> f64 {
        self.moment(0)
    }

    /// Autocorrelation w(k) = integral of rho(l) rho(l - k) dl.
    pub fn autocorrelation(&self, k: f64) -> f64 {
        match self {
            Self::FermiSea { q } => {
                let c = 1.0 / (4.0 * std::f64::consts::PI * std::f64::consts::PI);
                (2.0 * q - k.abs()).max(0.0) * c
            }
            Self::Tabulated { lambdas, .. } => {
                let (lo, hi) = self.support();
                let (a, b) = (lo.max(lo + k), hi.min(hi + k));
                if b <= a {
                    return 0.0;
                }
                let mut pts: Vec<f64> = lambdas
                    .iter()
                    .flat_map(|l| [*l, *l + k])
                    .filter(|x| *x > a && *x < b)
                    .collect();
                pts.push(a);
                pts.push(b);
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                let f = |x: f64| self.rho(x) * self.rho(x - k);
                pts.windows(2)
                    .map(|w| crate::numerics::quad::gk21(&f, w[0], w[1]).0)
                    .sum()
            }
        }
    }
}

/// Perturbative energy (density) to order beta^2.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub e0: f64,
    pub e1: f64,
    pub e2: f64,
    /// Thermodynamic mode: the parts of E2 and the beta^2 part of E1.
    pub e2_reg: Option<f64>,
    pub e2_sing: Option<f64>,
    pub e1_beta2: Option<f64>,
    /// Four-density part of E2_reg, evaluated directly (vanishes by symmetry).
    pub e2_four_rho: Option<f64>,
    pub order: usize,
    pub a: f64,
    pub beta: f64,
    pub warnings: Vec<String>,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.e0 + self.e1 + self.e2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_states_have_zero_momentum() {
        let s = LatticeSpec::new(64, 8.0, 2).unwrap();
        assert_eq!(FreeState::ground(&s).unwrap().indices, vec![-1, 1]);
        let s = LatticeSpec::new(64, 8.0, 3).unwrap();
        assert_eq!(FreeState::ground(&s).unwrap().indices, vec![-1, 0, 1]);
    }

    #[test]
    fn tabulated_moments() {
        let d = DensityProfile::tabulated(vec![-1.0, 0.0, 1.0], vec![0.0, 0.1, 0.0]).unwrap();
        assert!((d.density() - 0.1).abs() < 1e-15);
        assert!((d.moment(2) - 0.1 / 6.0).abs() < 1e-15);
        // triangle autocorrelation at 0 is the integral of rho^2
        assert!((d.autocorrelation(0.0) - 0.01 * 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn density_bounds_enforced() {
        assert!(DensityProfile::tabulated(vec![0.0, 1.0], vec![0.0, 0.5]).is_err());
        assert!(LatticeSpec::new(63, 1.0, 2).is_err());
    }
}

//! Lieb-Liniger ground state from the Bethe equations
//! k_j L = 2 pi I_j - sum_l 2 arctan((k_j - k_l)/c), energy sum_j k_j^2.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_positive, Error, Result};
use crate::numerics::polyfit;

const RESIDUAL_TARGET: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct BetheState {
    pub n: usize,
    pub l: f64,
    pub c: f64,
    pub rapidities: Vec<f64>,
    /// Ground-state quantum numbers -(N-1)/2, ..., (N-1)/2.
    pub quantum_numbers: Vec<f64>,
    /// Largest violation of the Bethe equations.
    pub residual: f64,
}

impl BetheState {
    pub fn energy(&self) -> f64 {
        self.rapidities.iter().map(|k| k * k).sum()
    }

    pub fn energy_density(&self) -> f64 {
        self.energy() / self.l
    }

    pub fn momentum(&self) -> f64 {
        self.rapidities.iter().sum()
    }
}

pub fn ground_quantum_numbers(n: usize) -> Vec<f64> {
    (0..n).map(|j| j as f64 - 0.5 * (n as f64 - 1.0)).collect()
}

fn bethe_residual(k: &[f64], qn: &[f64], l: f64, c: f64) -> Vec<f64> {
    k.iter()
        .zip(qn)
        .map(|(&kj, &ij)| {
            let s: f64 = k.iter().map(|&kl| 2.0 * ((kj - kl) / c).atan()).sum();
            kj * l + s - 2.0 * PI * ij
        })
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn jacobian(k: &[f64], l: f64, c: f64) -> DMatrix<f64> {
    let n = k.len();
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        jac[(j, j)] = l;
        for m in 0..n {
            if m == j {
                continue;
            }
            let d = k[j] - k[m];
            let w = 2.0 * c / (c * c + d * d);
            jac[(j, j)] += w;
            jac[(j, m)] -= w;
        }
    }
    jac
}

/// Damped Newton from `start`; the step is halved until the residual drops.
fn newton(start: Vec<f64>, qn: &[f64], l: f64, c: f64) -> Result<(Vec<f64>, f64)> {
    let mut k = start;
    let mut f = bethe_residual(&k, qn, l, c);
    let mut r = max_abs(&f);
    for _ in 0..100 {
        if r < RESIDUAL_TARGET {
            return Ok((k, r));
        }
        // the Jacobian is symmetric positive definite (L plus a Laplacian)
        let jac = jacobian(&k, l, c);
        let step = jac
            .cholesky()
            .map(|ch| ch.solve(&DVector::from_column_slice(&f)))
            .ok_or(Error::NoConvergence {
                what: "Bethe Newton (singular Jacobian)",
                residual: r,
            })?;
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = k.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            let ft = bethe_residual(&trial, qn, l, c);
            let rt = max_abs(&ft);
            if rt < r || t < 1e-6 {
                if rt >= r {
                    // no decrease at any damping: rounding floor reached
                    return if r < 10.0 * RESIDUAL_TARGET {
                        Ok((k, r))
                    } else {
                        Err(Error::NoConvergence {
                            what: "Bethe Newton (damping exhausted)",
                            residual: r,
                        })
                    };
                }
                k = trial;
                f = ft;
                r = rt;
                break;
            }
            t *= 0.5;
        }
    }
    if r < RESIDUAL_TARGET {
        Ok((k, r))
    } else {
        Err(Error::NoConvergence {
            what: "Bethe Newton",
            residual: r,
        })
    }
}

/// Ground state by damped Newton, started from the free-fermion momenta at a
/// coupling far above c and continued down to c.
pub fn solve_ground(n: usize, l: f64, c: f64) -> Result<BetheState> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "N",
            value: 0.0,
            reason: "need at least one particle",
        });
    }
    check_positive("L", l)?;
    check_positive("c", c)?;
    let qn = ground_quantum_numbers(n);
    let density = n as f64 / l;
    // continuation path: factors of 4 from >= 100 n down to c
    let mut path = vec![c];
    while *path.last().unwrap() < 100.0 * density {
        let next = path.last().unwrap() * 4.0;
        path.push(next);
    }
    path.reverse();
    let mut k: Vec<f64> = qn.iter().map(|i| 2.0 * PI * i / l).collect();
    let mut r = f64::NAN;
    for &ci in &path {
        let (kn, rn) = newton(k, &qn, l, ci)?;
        k = kn;
        r = rn;
    }
    Ok(BetheState {
        n,
        l,
        c,
        rapidities: k,
        quantum_numbers: qn,
        residual: r,
    })
}

/// Slow cross-check: plain fixed-point iteration of the Bethe equations,
/// a contraction for c > 2 N / L.
pub fn solve_ground_fixed_point(n: usize, l: f64, c: f64, tol: f64) -> Result<BetheState> {
    check_positive("L", l)?;
    check_positive("c", c)?;
    if c <= 2.0 * n as f64 / l {
        return Err(Error::InvalidParameter {
            name: "c",
            value: c,
            reason: "fixed-point iteration needs c > 2 N / L",
        });
    }
    let qn = ground_quantum_numbers(n);
    let mut k: Vec<f64> = qn.iter().map(|i| 2.0 * PI * i / l).collect();
    for _ in 0..100_000 {
        let next: Vec<f64> = k
            .iter()
            .zip(&qn)
            .map(|(&kj, &ij)| {
                let s: f64 = k.iter().map(|&kl| 2.0 * ((kj - kl) / c).atan()).sum();
                (2.0 * PI * ij - s) / l
            })
            .collect();
        let change = next.iter().zip(&k).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        k = next;
        if change < tol {
            let residual = max_abs(&bethe_residual(&k, &qn, l, c));
            return Ok(BetheState {
                n,
                l,
                c,
                rapidities: k,
                quantum_numbers: qn,
                residual,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "Bethe fixed-point iteration",
        residual: f64::NAN,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StrongCouplingFit {
    pub n: usize,
    pub l: f64,
    pub density: f64,
    /// E/L = e0 (1 + p/c + q/c^2 + ...).
    pub e0: f64,
    pub p: f64,
    pub q: f64,
    pub e0_stderr: f64,
    pub p_stderr: f64,
    pub q_stderr: f64,
    /// Free-fermion value pi^2 n^3/3 (1 - 1/N^2) that e0 should reproduce.
    pub e0_expected: f64,
    pub rows: Vec<(f64, f64, f64)>,
}

/// Fits E/L over `c_list` by a polynomial of degree 4 in 1/c and reads off
/// e0, p, q from the first three coefficients. The two extra terms absorb the
/// 1/c^3 and 1/c^4 parts that would otherwise bias q.
pub fn strong_coupling_fit(n: usize, l: f64, c_list: &[f64]) -> Result<StrongCouplingFit> {
    const DEGREE: usize = 4;
    if c_list.len() < DEGREE + 3 {
        return Err(Error::InvalidParameter {
            name: "c_list",
            value: c_list.len() as f64,
            reason: "need at least seven couplings",
        });
    }
    let states: Vec<BetheState> = c_list
        .par_iter()
        .map(|&c| solve_ground(n, l, c))
        .collect::<Result<_>>()?;
    let x: Vec<f64> = c_list.iter().map(|c| 1.0 / c).collect();
    let y: Vec<f64> = states.iter().map(|s| s.energy_density()).collect();
    let fit = polyfit(&x, &y, DEGREE).ok_or_else(|| Error::FitPoor {
        reason: "singular polynomial fit in 1/c".into(),
    })?;
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if fit.max_residual > 1e-9 * scale {
        return Err(Error::FitPoor {
            reason: format!("residual {:.3e} against E/L up to {scale:.3e}", fit.max_residual),
        });
    }
    let e0 = fit.coeffs[0];
    let (c1, c2) = (fit.coeffs[1], fit.coeffs[2]);
    let (s0, s1, s2) = (fit.stderr[0], fit.stderr[1], fit.stderr[2]);
    let density = n as f64 / l;
    let nn = n as f64;
    Ok(StrongCouplingFit {
        n,
        l,
        density,
        e0,
        p: c1 / e0,
        q: c2 / e0,
        e0_stderr: s0,
        p_stderr: ((s1 / e0).powi(2) + (c1 * s0 / (e0 * e0)).powi(2)).sqrt(),
        q_stderr: ((s2 / e0).powi(2) + (c2 * s0 / (e0 * e0)).powi(2)).sqrt(),
        e0_expected: PI * PI * density.powi(3) / 3.0 * (1.0 - 1.0 / (nn * nn)),
        rows: states.iter().map(|s| (s.c, s.energy_density(), s.residual)).collect(),
    })
}

/// Log-spaced couplings between lo and hi inclusive.
pub fn log_couplings(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_particle_sits_at_rest() {
        let s = solve_ground(1, 3.0, 2.0).unwrap();
        assert_eq!(s.rapidities, vec![0.0]);
        assert_eq!(s.energy(), 0.0);
    }

    #[test]
    fn newton_matches_fixed_point() {
        let a = solve_ground(8, 8.0, 100.0).unwrap();
        let b = solve_ground_fixed_point(8, 8.0, 100.0, 1e-15).unwrap();
        assert!((a.energy() - b.energy()).abs() < 1e-13 * b.energy());
        assert!(a.residual < 1e-12);
    }

    #[test]
    fn ground_state_is_symmetric_and_ordered() {
        let s = solve_ground(7, 5.0, 0.7).unwrap();
        assert!(s.rapidities.windows(2).all(|w| w[1] > w[0]));
        for (a, b) in s.rapidities.iter().zip(s.rapidities.iter().rev()) {
            assert!((a + b).abs() < 1e-12);
        }
        assert!(s.momentum().abs() < 1e-12);
    }

    #[test]
    fn tonks_limit() {
        let s = solve_ground(6, 6.0, 1e9).unwrap();
        let free: f64 = ground_quantum_numbers(6).iter().map(|i| (2.0 * PI * i / 6.0).powi(2)).sum();
        assert!((s.energy() - free).abs() < 1e-7 * free);
    }
}

//! Regularizations that do not produce the jump: the naive mollified
//! derivative-delta and the Lorentzian toy model.

use serde::Serialize;

use super::{fit_free_wave, integrate_on_grid, rescale, JumpReport, Parity, SolverOptions, WaveSolution};
use crate::error::{check_positive, Error, Result};
use crate::numerics::{cumulative, graded_grid, quad, Tolerance};
use crate::profiles::{MollifierProfile, PointPotential};

/// Zeros of D(x) = 1 - beta sigma_a'(x) on x > 0, with D'(x*) at each.
fn coefficient_zeros(profile: &MollifierProfile, a: f64, beta: f64) -> Result<Vec<(f64, f64)>> {
    let d = |x: f64| 1.0 - beta * profile.sigma1(x / a) / a;
    let dd = |x: f64| -beta * profile.sigma2(x / a) / (a * a);
    let scale = 1.0 + beta * profile.sigma1_at_0() / a;
    if d(0.0).abs() <= 1e-12 * scale {
        return Err(Error::SingularCoefficient { x: 0.0 });
    }
    let end = profile.support().unwrap_or(profile.t_far()) * a;
    let n = 20_000;
    let mut zeros = Vec::new();
    let mut prev = d(0.0);
    for i in 1..=n {
        let x = end * i as f64 / n as f64;
        let cur = d(x);
        if cur == 0.0 || cur.signum() != prev.signum() {
            let (mut lo, mut hi) = (end * (i - 1) as f64 / n as f64, x);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if d(mid).signum() == d(lo).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let z = 0.5 * (lo + hi);
            let slope = dd(z);
            if slope.abs() * a < 1e-6 * scale {
                return Err(Error::SingularCoefficient { x: z });
            }
            zeros.push((z, slope));
        }
        prev = cur;
    }
    Ok(zeros)
}

/// Grid with uniform spacing h in the core, each zero at a cell midpoint.
fn core_grid(zeros: &[(f64, f64)], core: f64, h: f64, x0: f64, outer_points: usize) -> Vec<f64> {
    let mut anchors = vec![0.0];
    for &(z, _) in zeros {
        anchors.push(z - 0.5 * h);
        anchors.push(z + 0.5 * h);
    }
    anchors.push(core.min(x0));
    let mut grid = vec![0.0];
    for w in anchors.windows(2) {
        let n = ((w[1] - w[0]) / h).ceil().max(1.0) as usize;
        for i in 1..=n {
            grid.push(w[0] + (w[1] - w[0]) * i as f64 / n as f64);
        }
    }
    let last = *grid.last().unwrap();
    if last < x0 {
        let tail = graded_grid(x0 - last, 0.0, h, 1.05, x0 / outer_points as f64);
        grid.extend(tail.iter().skip(1).map(|t| last + t));
    }
    grid
}

/// Odd solution of (1 - beta sigma_a') psi'' - beta sigma_a'' psi' = -k^2 psi,
/// i.e. u = (1 - beta sigma_a') psi', u' = -k^2 psi. Where the coefficient
/// vanishes, psi = PV integral of u/D (Picard iteration with the poles
/// subtracted analytically).
pub fn solve_naive_delta_prime(
    profile: &MollifierProfile,
    a: f64,
    beta: f64,
    k: f64,
    x0: f64,
    opts: &SolverOptions,
) -> Result<(WaveSolution, JumpReport)> {
    check_positive("a", a)?;
    check_positive("k", k)?;
    check_positive("x0", x0)?;
    let potential = PointPotential::naive_delta_prime(profile.clone(), a, beta)?;
    let zeros = coefficient_zeros(profile, a, beta)?;
    let far = profile.support().unwrap_or(profile.t_far()) * a;
    let h = a / 400.0;
    let grid = core_grid(&zeros, far * 1.2, h, x0, 4000);
    let n = grid.len();
    let dcoef: Vec<f64> = grid.iter().map(|x| 1.0 - beta * profile.sigma1(x / a) / a).collect();
    let k2 = k * k;
    let mut u = vec![1.0; n];
    let mut psi = vec![0.0; n];
    let logs: Vec<Vec<f64>> = zeros
        .iter()
        .map(|&(z, _)| grid.iter().map(|x| ((x - z).abs() / z).ln()).collect())
        .collect();
    let mut converged = false;
    for _ in 0..200 {
        // residues u(x*)/D'(x*) by linear interpolation between the cell ends
        let residues: Vec<f64> = zeros
            .iter()
            .map(|&(z, slope)| {
                let i = grid.partition_point(|x| *x < z);
                let t = (z - grid[i - 1]) / (grid[i] - grid[i - 1]);
                ((1.0 - t) * u[i - 1] + t * u[i]) / slope
            })
            .collect();
        let regular: Vec<f64> = (0..n)
            .map(|i| {
                let mut r = u[i] / dcoef[i];
                for (j, &(z, _)) in zeros.iter().enumerate() {
                    r -= residues[j] / (grid[i] - z);
                }
                r
            })
            .collect();
        let mut new_psi = cumulative(&grid, &regular);
        for (j, c) in residues.iter().enumerate() {
            for i in 1..n {
                new_psi[i] += c * logs[j][i];
            }
            // the log term vanishes at the origin by construction
        }
        let ipsi = cumulative(&grid, &new_psi);
        let new_u: Vec<f64> = ipsi.iter().map(|v| 1.0 - k2 * v).collect();
        let change = new_u
            .iter()
            .zip(&u)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        u = new_u;
        psi = new_psi;
        if change < 1e-14 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "principal-value Picard iteration",
            residual: f64::NAN,
        });
    }
    let dpsi: Vec<f64> = (0..n).map(|i| u[i] / dcoef[i]).collect();
    let sol = rescale(WaveSolution {
        grid,
        psi,
        dpsi,
        k,
        parity: Parity::Odd,
        potential,
    })?;
    let x_fit = naive_free_radius(profile, a, beta, k, opts.eps_v);
    let report = fit_free_wave(&sol, x_fit)?;
    Ok((sol, report))
}

fn naive_free_radius(profile: &MollifierProfile, a: f64, beta: f64, k: f64, eps: f64) -> f64 {
    let g = |x: f64| {
        (beta * profile.sigma1(x / a) / a).abs() + (beta * profile.sigma2(x / a) / (a * a * k)).abs()
    };
    let end = profile.support().unwrap_or(profile.t_far() * 20.0) * a;
    let n = 4000;
    let mut last = 0.0;
    for i in 0..=n {
        let x = end * i as f64 / n as f64;
        if g(x) >= eps {
            last = x;
        }
    }
    last + end / n as f64
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FirstOrderJump {
    pub a: f64,
    /// First-order cosine amplitude over k times the zeroth-order sine amplitude.
    pub ratio: f64,
    pub p1: f64,
    pub q1: f64,
}

/// Order-beta correction psi1 of the naive model around psi0 = sin(kx):
/// psi1'' + k^2 psi1 = sigma_a'' psi0' + sigma_a' psi0'', psi1(0) = psi1'(0) = 0.
pub fn naive_first_order_jump(
    profile: &MollifierProfile,
    a: f64,
    k: f64,
    x0: f64,
    opts: &SolverOptions,
) -> Result<FirstOrderJump> {
    check_positive("a", a)?;
    check_positive("k", k)?;
    let s1 = |x: f64| profile.sigma1(x / a) / a;
    let s2 = |x: f64| profile.sigma2(x / a) / (a * a);
    let f = |x: f64, y: &[f64; 2]| {
        let src = s2(x) * k * (k * x).cos() - s1(x) * k * k * (k * x).sin();
        [y[1], src - k * k * y[0]]
    };
    let potential = PointPotential::naive_delta_prime(profile.clone(), a, 1.0)?;
    let core = profile.support().unwrap_or(profile.t_far()) * a * 1.2;
    let grid = graded_grid(x0, core.min(x0), a / 50.0, 1.05, x0 / 2000.0);
    let ys = integrate_on_grid(&f, &grid, [0.0, 0.0], &[(0.0, a)], opts.tol.min(1e-11))?;
    let sol = WaveSolution {
        psi: ys.iter().map(|y| y[0]).collect(),
        dpsi: ys.iter().map(|y| y[1]).collect(),
        grid,
        k,
        parity: Parity::Odd,
        potential,
    };
    let x_fit = naive_free_radius(profile, a, 1.0, k, opts.eps_v);
    if x_fit >= x0 {
        return Err(Error::NoFreeRegion { x_fit, x0 });
    }
    // fit_free_wave divides by P; here P1 may vanish, so fit directly
    let idx: Vec<usize> = (0..sol.grid.len()).filter(|&i| sol.grid[i] >= x_fit).collect();
    let design = nalgebra::DMatrix::from_fn(idx.len(), 2, |r, c| {
        let x = sol.grid[idx[r]];
        if c == 0 {
            (k * x).sin()
        } else {
            (k * x).cos()
        }
    });
    let y: Vec<f64> = idx.iter().map(|&i| sol.psi[i]).collect();
    let fit = crate::numerics::least_squares(&design, &y).ok_or_else(|| Error::IllConditionedFit {
        reason: "singular design".into(),
    })?;
    let (p1, q1) = (fit.coeffs[0], fit.coeffs[1]);
    Ok(FirstOrderJump {
        a,
        ratio: q1 / k,
        p1,
        q1,
    })
}

/// f_a(x) = PV integral over [-1, x] of dy/(1 - beta sigma_a'(y)) with the
/// Lorentzian sigma_a'(y) = (2/pi) a/(a^2 + y^2). Each simple pole p is
/// subtracted as res/(y - p) and its principal value added back as a log.
pub fn lorentzian_toy(a: f64, beta: f64, x_list: &[f64]) -> Result<Vec<f64>> {
    check_positive("a", a)?;
    let c = 2.0 * a * beta / std::f64::consts::PI;
    let inv_d = move |y: f64| {
        let r = a * a + y * y;
        r / (r - c)
    };
    let s2 = c - a * a;
    if s2 == 0.0 {
        return Ok(vec![f64::NAN; x_list.len()]);
    }
    // 1/D has residue c/(2p) at each root p of y^2 = c - a^2
    let poles: Vec<(f64, f64)> = if s2 > 0.0 {
        let s = s2.sqrt();
        vec![(-s, -c / (2.0 * s)), (s, c / (2.0 * s))]
    } else {
        Vec::new()
    };
    let tol = Tolerance::new(1e-15, 1e-13);
    let mut out = Vec::with_capacity(x_list.len());
    for &x in x_list {
        let inside: Vec<(f64, f64)> = poles.iter().copied().filter(|(p, _)| *p > -1.0 && *p <= x).collect();
        if inside.iter().any(|(p, _)| *p == x) {
            out.push(f64::INFINITY);
            continue;
        }
        // with real poles 1/D = 1 + sum res/(y - p); dropping the inside ones
        // exactly avoids the cancellation of r - c next to them
        let regular = |y: f64| {
            if poles.is_empty() {
                return inv_d(y);
            }
            1.0 + poles
                .iter()
                .filter(|(p, _)| !inside.iter().any(|(q, _)| q == p))
                .map(|(p, res)| res / (y - p))
                .sum::<f64>()
        };
        let mut pts = vec![-1.0];
        for b in [-a, 0.0, a] {
            if b > -1.0 && b < x {
                pts.push(b);
            }
        }
        pts.push(x);
        // the regular part is finite but cancels near the poles: keep them
        // off the quadrature nodes by splitting there
        for &(p, _) in &inside {
            pts.push(p);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let mut v = quad("lorentzian", regular, &pts, tol)?;
        for &(p, res) in &inside {
            v += res * ((x - p) / (-1.0 - p)).abs().ln();
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form(a: f64, beta: f64, x: f64) -> f64 {
        let c = 2.0 * a * beta / std::f64::consts::PI;
        let s = (c - a * a).sqrt();
        let g = |y: f64| y + c / (2.0 * s) * ((y - s) / (y + s)).abs().ln();
        g(x) - g(-1.0)
    }

    #[test]
    fn lorentzian_matches_closed_form_principal_value() {
        let (a, beta) = (0.01, 0.5);
        let xs = [-0.5, -0.05, 0.05, 0.3];
        let v = lorentzian_toy(a, beta, &xs).unwrap();
        for (x, f) in xs.iter().zip(v) {
            assert!((f - closed_form(a, beta, *x)).abs() < 1e-8, "{x}: {f}");
        }
    }

    #[test]
    fn lorentzian_upper_limit_next_to_pole() {
        let (a, beta) = (0.1, 0.5);
        let s = (2.0 * a * beta / std::f64::consts::PI - a * a).sqrt();
        for x in [0.15, s + 1e-9, s - 1e-9] {
            let f = lorentzian_toy(a, beta, &[x]).unwrap()[0];
            assert!((f - closed_form(a, beta, x)).abs() < 1e-8, "{x}: {f}");
        }
    }

    #[test]
    fn lorentzian_free_case() {
        let v = lorentzian_toy(0.1, 0.0, &[0.25]).unwrap();
        assert!((v[0] - 1.25).abs() < 1e-12);
    }
}

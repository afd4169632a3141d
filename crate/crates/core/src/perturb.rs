//! Small-beta expansion of the odd two-body solution.
//!
//! With s(x) = sigma_a(x)/x the solution is written as
//! psi = (1 + beta s) sum_n beta^n g_n, normalized by g_0(x0) = 1 and
//! g_n(x0) = 0 for n > 0. The order-n part psi_(n) = g_n + s g_{n-1}
//! obeys psi_(n)'' + k^2 psi_(n) = (sigma_a''/x) g_{n-1}.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_positive, Error, Result};
use crate::numerics::{cumulative, derivatives_with_parity, graded_grid, loglog_slope, polyfit};
use crate::profiles::{MollifierProfile, PointPotential};
use crate::solver::{solve_odd_raw, SolverOptions};

/// Kernel of the recursion in real form.
pub fn kernel_j(x: f64, y: f64, k: f64, x0: f64) -> Result<f64> {
    let sk = (k * x0).sin();
    if sk.abs() < 1e-12 {
        return Err(Error::ResonantBox { value: sk });
    }
    if y < x {
        // sin(k(x-y)) sin(kx0) - sin(kx) sin(k(x0-y)) = sin(ky) sin(k(x-x0))
        Ok(sinc(k * y) * (k * (x - x0)).sin() / sk)
    } else {
        Ok(-(k * x).sin() * (k * (x0 - y)).sin() / (k * y * sk))
    }
}

fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        1.0 - z * z / 6.0 + z.powi(4) / 120.0
    } else {
        z.sin() / z
    }
}

/// First and second z-derivatives of sin(z)/z.
fn sinc_derivs(z: f64) -> (f64, f64) {
    if z.abs() < 1e-2 {
        let z2 = z * z;
        (
            -z / 3.0 + z * z2 / 30.0 - z * z2 * z2 / 840.0,
            -1.0 / 3.0 + z2 / 10.0 - z2 * z2 / 168.0,
        )
    } else {
        let (s, c) = z.sin_cos();
        (
            (z * c - s) / (z * z),
            -s / z - 2.0 * c / (z * z) + 2.0 * s / (z * z * z),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbGrid {
    /// Uniform region [0, core_ranges * a].
    pub core_ranges: f64,
    pub points_per_a: usize,
    pub growth: f64,
    /// Outer spacing is x0 / outer_points.
    pub outer_points: usize,
    /// Both spacings shrink together until the grid has at least this many points.
    pub min_points: usize,
}

impl Default for PerturbGrid {
    fn default() -> Self {
        Self {
            core_ranges: 45.0,
            points_per_a: 200,
            growth: 1.01,
            outer_points: 100_000,
            min_points: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PerturbSetup {
    pub profile: MollifierProfile,
    pub a: f64,
    pub k: f64,
    pub x0: f64,
    pub grid: Arc<Vec<f64>>,
    /// sigma_a(x)/x on the grid.
    s: Vec<f64>,
    /// sigma_a''(x)/x on the grid.
    v1: Vec<f64>,
}

impl PerturbSetup {
    pub fn new(profile: &MollifierProfile, a: f64, k: f64, x0: f64, spec: &PerturbGrid) -> Result<Self> {
        check_positive("a", a)?;
        check_positive("k", k)?;
        check_positive("x0", x0)?;
        let sk = (k * x0).sin();
        if sk.abs() < 1e-12 {
            return Err(Error::ResonantBox { value: sk });
        }
        let core = (spec.core_ranges * a).min(x0);
        let build = |refine: f64| {
            graded_grid(
                x0,
                core,
                a / (spec.points_per_a as f64 * refine),
                spec.growth,
                x0 / (spec.outer_points as f64 * refine),
            )
        };
        let mut grid = build(1.0);
        if grid.len() < spec.min_points {
            grid = build(1.05 * spec.min_points as f64 / grid.len() as f64);
        }
        let s = grid.iter().map(|x| profile.sigma_over_t(x / a) / a).collect();
        let v1 = grid
            .iter()
            .map(|x| profile.sigma2_over_t(x / a) / (a * a * a))
            .collect();
        Ok(Self {
            profile: profile.clone(),
            a,
            k,
            x0,
            grid: Arc::new(grid),
            s,
            v1,
        })
    }

    pub fn sigma_over_x(&self) -> &[f64] {
        &self.s
    }
}

#[derive(Debug, Clone)]
pub struct PerturbOrder {
    pub n: usize,
    pub grid: Arc<Vec<f64>>,
    pub g: Vec<f64>,
    /// g_n'(0).
    pub dg0: f64,
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
    pub a: f64,
    pub k: f64,
    pub x0: f64,
}

pub fn zeroth_order(setup: &PerturbSetup) -> PerturbOrder {
    let (k, x0) = (setup.k, setup.x0);
    let sk = (k * x0).sin();
    let g: Vec<f64> = setup.grid.iter().map(|x| (k * x).sin() / sk).collect();
    let dpsi = setup.grid.iter().map(|x| k * (k * x).cos() / sk).collect();
    PerturbOrder {
        n: 0,
        grid: setup.grid.clone(),
        psi: g.clone(),
        g,
        dg0: k / sk,
        dpsi,
        a: setup.a,
        k,
        x0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecursionForm {
    /// Variation of parameters on the smooth source (sigma_a''/y) g_n.
    SmoothKernel,
    /// The kernel form split at the kink of j(x, y) at y = x.
    KinkSplit,
}

fn q_of(prev: &PerturbOrder) -> Vec<f64> {
    prev.grid
        .iter()
        .zip(&prev.g)
        .map(|(y, g)| if *y == 0.0 { prev.dg0 } else { g / y })
        .collect()
}

pub fn recursion_step(setup: &PerturbSetup, prev: &PerturbOrder, form: RecursionForm) -> Result<PerturbOrder> {
    if !Arc::ptr_eq(&setup.grid, &prev.grid) {
        return Err(Error::GridTooCoarse {
            reason: "order computed on a different grid".into(),
        });
    }
    let x = &setup.grid;
    let n = x.len();
    let (k, x0) = (setup.k, setup.x0);
    let sk = (k * x0).sin();
    let q = q_of(prev);
    let f: Vec<f64> = (0..n).map(|i| setup.v1[i] * prev.g[i]).collect();
    // smooth-form pieces (also give psi' analytically)
    let fc: Vec<f64> = (0..n).map(|i| f[i] * (k * x[i]).cos()).collect();
    let fs: Vec<f64> = (0..n).map(|i| f[i] * (k * x[i]).sin()).collect();
    let cc = cumulative(x, &fc);
    let cs = cumulative(x, &fs);
    let hp_end = ((k * x0).sin() * cc[n - 1] - (k * x0).cos() * cs[n - 1]) / k;
    let amp = (setup.s[n - 1] * prev.g[n - 1] - hp_end) / sk;
    let mut psi = vec![0.0; n];
    let mut dpsi = vec![0.0; n];
    for i in 0..n {
        let (s, c) = (k * x[i]).sin_cos();
        psi[i] = (s * cc[i] - c * cs[i]) / k + amp * s;
        dpsi[i] = c * cc[i] + s * cs[i] + k * amp * c;
    }
    let g: Vec<f64> = match form {
        RecursionForm::SmoothKernel => (0..n).map(|i| psi[i] - setup.s[i] * prev.g[i]).collect(),
        RecursionForm::KinkSplit => kink_split(setup, prev, &q)?,
    };
    let dg0 = dpsi[0] - setup.s[0] * prev.dg0;
    Ok(PerturbOrder {
        n: prev.n + 1,
        grid: setup.grid.clone(),
        g,
        dg0,
        psi,
        dpsi,
        a: setup.a,
        k,
        x0,
    })
}

/// g_{n+1}(x) = A(x) int_0^x sigma_a (u g)'' dy + sin(kx) int_x^x0 sigma_a (w g)'' dy
/// with j = A(x) u(y) below the kink and sin(kx) w(y) above it.
fn kink_split(setup: &PerturbSetup, prev: &PerturbOrder, q: &[f64]) -> Result<Vec<f64>> {
    let x = &setup.grid;
    let n = x.len();
    let (k, x0, a) = (setup.k, setup.x0, setup.a);
    let cot = (k * x0).cos() / (k * x0).sin();
    let (g1, g2) = derivatives_with_parity(x, &prev.g, 5, true);
    let (q1, q2) = derivatives_with_parity(x, q, 5, false);
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n {
        let y = x[i];
        let z = k * y;
        let u = sinc(z);
        let (du, ddu) = sinc_derivs(z);
        let ug2 = k * k * ddu * prev.g[i] + 2.0 * k * du * g1[i] + u * g2[i];
        let (sz, cz) = z.sin_cos();
        let cq2 = -k * k * cz * q[i] - 2.0 * k * sz * q1[i] + cz * q2[i];
        let wg2 = cot * ug2 - cq2 / k;
        let sig = setup.profile.sigma(y / a);
        lower[i] = sig * ug2;
        upper[i] = sig * wg2;
    }
    let c_low = cumulative(x, &lower);
    let c_up = cumulative(x, &upper);
    let total_up = c_up[n - 1];
    let sk = (k * x0).sin();
    Ok((0..n)
        .map(|i| {
            let amp = (k * (x[i] - x0)).sin() / sk;
            amp * c_low[i] + (k * x[i]).sin() * (total_up - c_up[i])
        })
        .collect())
}

/// Orders 0..=n_max on one setup.
pub fn orders(setup: &PerturbSetup, n_max: usize, form: RecursionForm) -> Result<Vec<PerturbOrder>> {
    let mut out = vec![zeroth_order(setup)];
    for _ in 0..n_max {
        let next = recursion_step(setup, out.last().unwrap(), form)?;
        out.push(next);
    }
    Ok(out)
}

/// Partial sum sum_{n<=m} beta^n psi_(n) on the grid.
pub fn partial_sum(orders: &[PerturbOrder], beta: f64, m: usize) -> Vec<f64> {
    let n = orders[0].psi.len();
    let mut out = vec![0.0; n];
    let mut w = 1.0;
    for o in orders.iter().take(m + 1) {
        for i in 0..n {
            out[i] += w * o.psi[i];
        }
        w *= beta;
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjectureRow {
    pub n: usize,
    pub a: f64,
    pub psi_next_at_0: f64,
    pub dpsi_at_0: f64,
    pub mismatch: f64,
    /// Change of the mismatch when the fit window is doubled.
    pub window_shift: f64,
}

fn extrapolate(x: &[f64], y: &[f64], lo: f64, hi: f64) -> Result<f64> {
    let idx: Vec<usize> = (0..x.len()).filter(|&i| x[i] >= lo && x[i] <= hi).collect();
    if idx.len() < 5 {
        return Err(Error::ExtrapolationUnstable {
            reason: format!("only {} grid points in [{lo:e}, {hi:e}]", idx.len()),
        });
    }
    let xs: Vec<f64> = idx.iter().map(|&i| x[i] / hi).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let fit = polyfit(&xs, &ys, 2).ok_or_else(|| Error::ExtrapolationUnstable {
        reason: "singular fit".into(),
    })?;
    Ok(fit.coeffs[0])
}

/// Start of the fit window in units of a: the first t >= 5 where the profile
/// has settled to sign(x) well enough that 1/a times its deviation is
/// negligible (derivatives of psi_(n) pick up sigma_a'/x ~ (1 - sigma)/a).
pub fn fit_window_start(profile: &MollifierProfile, a: f64) -> f64 {
    let end = profile.support().unwrap_or(profile.t_far());
    let mut t = 5.0;
    while t < end {
        let dev = (1.0 - profile.sigma(t)).abs() + profile.sigma1(t).abs();
        if dev < 1e-9 * a {
            break;
        }
        t += 0.25;
    }
    t.min(end)
}

/// Compares psi_(n+1)(0+) with psi_(n)'(0+) by quadratic fits on
/// [t a, 3 t a], t from `fit_window_start`; the shift uses [t a, 6 t a].
pub fn conjecture_check(
    profile: &MollifierProfile,
    a_list: &[f64],
    k: f64,
    x0: f64,
    n_max: usize,
    spec: &PerturbGrid,
) -> Result<Vec<ConjectureRow>> {
    if n_max > 4 {
        return Err(Error::InvalidParameter {
            name: "n_max",
            value: n_max as f64,
            reason: "at most 4",
        });
    }
    let per_a: Vec<Result<Vec<ConjectureRow>>> = a_list
        .par_iter()
        .map(|&a| {
            let lo = fit_window_start(profile, a) * a;
            if 6.0 * lo >= x0 {
                return Err(Error::ExtrapolationUnstable {
                    reason: format!("fit window [{lo:e}, {:e}] exceeds x0 for a = {a}", 6.0 * lo),
                });
            }
            let setup = PerturbSetup::new(profile, a, k, x0, spec)?;
            let ords = orders(&setup, n_max + 1, RecursionForm::SmoothKernel)?;
            let x = &setup.grid;
            let mut rows = Vec::new();
            for n in 0..=n_max {
                let lhs = extrapolate(x, &ords[n + 1].psi, lo, 3.0 * lo)?;
                let rhs = extrapolate(x, &ords[n].dpsi, lo, 3.0 * lo)?;
                let lhs2 = extrapolate(x, &ords[n + 1].psi, lo, 6.0 * lo)?;
                let rhs2 = extrapolate(x, &ords[n].dpsi, lo, 6.0 * lo)?;
                let mismatch = (lhs - rhs).abs();
                rows.push(ConjectureRow {
                    n,
                    a,
                    psi_next_at_0: lhs,
                    dpsi_at_0: rhs,
                    mismatch,
                    window_shift: ((lhs2 - rhs2).abs() - mismatch).abs(),
                });
            }
            Ok(rows)
        })
        .collect();
    let mut out = Vec::new();
    for r in per_a {
        out.extend(r?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub a: f64,
    pub n: usize,
    pub x: f64,
    /// psi_(n+1)(x).
    pub psi_next: f64,
    /// psi_(n)'(x).
    pub dpsi: f64,
}

/// psi_(n+1) and psi_(n)' on [0, x_max] for n = 0..=n_max, thinned to about
/// `samples` points per curve (for plotting).
pub fn conjecture_curves(
    profile: &MollifierProfile,
    a: f64,
    k: f64,
    x0: f64,
    n_max: usize,
    x_max: f64,
    samples: usize,
    spec: &PerturbGrid,
) -> Result<Vec<CurvePoint>> {
    let setup = PerturbSetup::new(profile, a, k, x0, spec)?;
    let ords = orders(&setup, n_max + 1, RecursionForm::SmoothKernel)?;
    let x = &setup.grid;
    let end = x.partition_point(|v| *v <= x_max.min(x0));
    let stride = (end / samples.max(1)).max(1);
    let mut out = Vec::new();
    for n in 0..=n_max {
        for i in (1..end).step_by(stride) {
            out.push(CurvePoint {
                a,
                n,
                x: x[i],
                psi_next: ords[n + 1].psi[i],
                dpsi: ords[n].dpsi[i],
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesRow {
    pub beta: f64,
    /// L2 norm over [0, x0] of the full solution minus the partial sum.
    pub l2: f64,
    pub max_abs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesCheck {
    pub a: f64,
    pub order: usize,
    pub rows: Vec<SeriesRow>,
    /// Log-log slope of l2 against beta.
    pub slope: f64,
}

/// Full odd solution normalized to psi(x0) = 1 + beta sigma_a(x0)/x0 against
/// sum_{n<=order} beta^n psi_(n) on the same grid.
pub fn series_check(
    profile: &MollifierProfile,
    a: f64,
    k: f64,
    x0: f64,
    betas: &[f64],
    order: usize,
    spec: &PerturbGrid,
    opts: &SolverOptions,
) -> Result<SeriesCheck> {
    if betas.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "betas",
            value: betas.len() as f64,
            reason: "need at least two couplings for a slope",
        });
    }
    let setup = PerturbSetup::new(profile, a, k, x0, spec)?;
    let ords = orders(&setup, order, RecursionForm::SmoothKernel)?;
    let x = setup.grid.as_slice();
    let n = x.len();
    let rows = betas
        .par_iter()
        .map(|&beta| {
            let p = PointPotential::duality_preserving(profile.clone(), a, beta)?;
            let raw = solve_odd_raw(&p, k, x, opts)?;
            let end = raw.psi[n - 1];
            if end.abs() < 1e-300 {
                return Err(Error::RescaleImpossible { value: end });
            }
            let target = 1.0 + beta * profile.sigma(x0 / a) / x0;
            let sum = partial_sum(&ords, beta, order);
            let diff: Vec<f64> = (0..n).map(|i| raw.psi[i] * target / end - sum[i]).collect();
            let sq: Vec<f64> = diff.iter().map(|d| d * d).collect();
            let l2 = cumulative(x, &sq)[n - 1].sqrt();
            let max_abs = diff.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            Ok(SeriesRow { beta, l2, max_abs })
        })
        .collect::<Result<Vec<_>>>()?;
    let bs: Vec<f64> = rows.iter().map(|r| r.beta).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.l2).collect();
    let slope = loglog_slope(&bs, &ys).ok_or_else(|| Error::FitPoor {
        reason: "degenerate log-log data".into(),
    })?;
    Ok(SeriesCheck { a, order, rows, slope })
}

/// a -> 0 limit of psi_(1): sin(kx)(1/x0 - k cot(k x0))/sin(k x0) + k cos(kx)/sin(k x0).
pub fn limit_psi1(x: f64, k: f64, x0: f64) -> f64 {
    let sk = (k * x0).sin();
    let cot = (k * x0).cos() / sk;
    (k * x).sin() * (1.0 / x0 - k * cot) / sk + k * (k * x).cos() / sk
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_branches_agree_at_kink() {
        let l = kernel_j(0.4, 0.4 - 1e-13, 1.0, 1.0).unwrap();
        let r = kernel_j(0.4, 0.4, 1.0, 1.0).unwrap();
        assert!((l - r).abs() < 1e-12);
    }

    #[test]
    fn kernel_vanishes_at_box_edge() {
        assert!(kernel_j(0.3, 1.0, 1.0, 1.0).unwrap().abs() < 1e-16);
    }

    #[test]
    fn resonant_box() {
        assert!(matches!(
            kernel_j(0.3, 0.5, 1.0, std::f64::consts::PI),
            Err(Error::ResonantBox { .. })
        ));
    }

    #[test]
    fn sinc_derivative_branches_are_continuous() {
        let (a1, a2) = sinc_derivs(0.01 - 1e-12);
        let (b1, b2) = sinc_derivs(0.01 + 1e-12);
        assert!((a1 - b1).abs() < 1e-12);
        assert!((a2 - b2).abs() < 1e-9);
    }
}

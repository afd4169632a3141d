//! Two-body Schrödinger solutions for regularized point interactions and
//! extraction of the emerging wave-function jump.

mod appendix;

pub use appendix::{
    lorentzian_toy, naive_first_order_jump, solve_naive_delta_prime, FirstOrderJump,
};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_nonnegative, check_positive, Error, Result};
use crate::numerics::{
    derivatives, graded_grid, least_squares, loglog_slope, quad, Dopri5, OdeOptions, Tolerance,
};
use crate::profiles::{MollifierProfile, PointPotential, PotentialKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

#[derive(Debug, Clone)]
pub struct WaveSolution {
    pub grid: Vec<f64>,
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
    pub k: f64,
    pub parity: Parity,
    pub potential: PointPotential,
}

/// Output grid: uniform with `points_per_a` points per range unit out to
/// `core_ranges * a`, then geometrically coarsened by `growth` up to
/// `outer_points` points over [0, x0].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub points_per_a: usize,
    pub core_ranges: f64,
    pub growth: f64,
    pub outer_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points_per_a: 50,
            core_ranges: 10.0,
            growth: 1.05,
            outer_points: 2000,
        }
    }
}

impl GridSpec {
    pub fn build(&self, p: &PointPotential, x0: f64) -> Vec<f64> {
        let scale = match p.kind {
            PotentialKind::CheonShigehara => p.a + 10.0 * p.a_inner,
            _ => p.a,
        };
        let core = (self.core_ranges * scale).min(x0);
        let h_core = p.a / self.points_per_a as f64;
        graded_grid(x0, core, h_core, self.growth, x0 / self.outer_points as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Local error tolerance of the integrator (relative and absolute).
    pub tol: f64,
    /// Free region: |V| < eps_v k^2.
    pub eps_v: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            eps_v: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpReport {
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub beta_eff: f64,
    pub fit_window: (f64, f64),
    pub fit_residual: f64,
}

impl JumpReport {
    pub fn is_valid(&self) -> bool {
        self.fit_residual < 1e-6 * self.p.abs().max(self.q.abs())
    }
}

/// Integrates y' = f(x, y) through the grid, refining steps inside the
/// narrow features of the potential, and records y at every grid point.
pub(crate) fn integrate_on_grid<F>(
    f: &F,
    grid: &[f64],
    y0: [f64; 2],
    features: &[(f64, f64)],
    tol: f64,
) -> Result<Vec<[f64; 2]>>
where
    F: Fn(f64, &[f64; 2]) -> [f64; 2],
{
    let windows: Vec<(f64, f64, f64)> = features
        .iter()
        .map(|&(c, w)| ((c - 14.0 * w).max(0.0), c + 14.0 * w, 0.5 * w))
        .collect();
    let mut nodes: Vec<f64> = grid.to_vec();
    let end = *grid.last().unwrap();
    for &(lo, hi, _) in &windows {
        for x in [lo, hi] {
            if x > grid[0] && x < end {
                nodes.push(x);
            }
        }
    }
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let mut stepper = Dopri5::new(OdeOptions {
        rtol: tol,
        atol: tol,
        ..OdeOptions::default()
    });
    let mut out = Vec::with_capacity(grid.len());
    out.push(y0);
    let mut y = y0;
    let mut gi = 1;
    for w in nodes.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let max_step = windows
            .iter()
            .filter(|(lo, hi, _)| mid > *lo && mid < *hi)
            .map(|(_, _, h)| *h)
            .fold(f64::INFINITY, f64::min);
        y = stepper.advance(f, w[0], y, w[1], max_step)?;
        if gi < grid.len() && w[1] == grid[gi] {
            out.push(y);
            gi += 1;
        }
    }
    Ok(out)
}

fn potential_fn(p: &PointPotential) -> Result<impl Fn(f64) -> f64 + '_> {
    p.eval(0.0)?;
    Ok(move |x: f64| p.eval(x).unwrap_or(f64::NAN))
}

/// Odd solution of -psi'' + V psi = k^2 psi with psi(0) = 0, psi'(0) = 1,
/// rescaled so that psi(x0) = 1.
pub fn solve_odd(
    p: &PointPotential,
    k: f64,
    x0: f64,
    grid_spec: &GridSpec,
    opts: &SolverOptions,
) -> Result<WaveSolution> {
    let grid = grid_spec.build(p, x0);
    let raw = solve_odd_raw(p, k, &grid, opts)?;
    rescale(raw)
}

/// Unnormalized odd solution on a caller-supplied grid starting at 0.
pub fn solve_odd_raw(p: &PointPotential, k: f64, grid: &[f64], opts: &SolverOptions) -> Result<WaveSolution> {
    check_nonnegative("k", k)?;
    check_positive("x0", *grid.last().unwrap_or(&0.0))?;
    let v = potential_fn(p)?;
    let k2 = k * k;
    let f = |x: f64, y: &[f64; 2]| [y[1], (v(x) - k2) * y[0]];
    let ys = integrate_on_grid(&f, grid, [0.0, 1.0], &p.features(), opts.tol)?;
    if ys.iter().any(|y| !y[0].is_finite()) {
        return Err(Error::DomainError {
            x: f64::NAN,
            denominator: f64::NAN,
        });
    }
    Ok(WaveSolution {
        grid: grid.to_vec(),
        psi: ys.iter().map(|y| y[0]).collect(),
        dpsi: ys.iter().map(|y| y[1]).collect(),
        k,
        parity: Parity::Odd,
        potential: p.clone(),
    })
}

pub(crate) fn rescale(mut sol: WaveSolution) -> Result<WaveSolution> {
    let end = *sol.psi.last().unwrap();
    let max = sol.psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if end.abs() <= 1e-12 * max {
        return Err(Error::RescaleImpossible { value: end });
    }
    for v in sol.psi.iter_mut().chain(sol.dpsi.iter_mut()) {
        *v /= end;
    }
    Ok(sol)
}

/// Integral from 0 to x of V(y)/(1 + beta sigma_a'(y))^2.
pub fn i_a(p: &PointPotential, x: f64) -> Result<f64> {
    let v = potential_fn(p)?;
    let f = |y: f64| {
        let d = 1.0 + p.beta * p.sigma1_a(y);
        v(y) / (d * d)
    };
    let mut pts = vec![0.0];
    let mut t = p.a;
    while t < x {
        pts.push(t);
        t *= 2.0;
    }
    pts.push(x);
    quad("I_a", f, &pts, Tolerance::new(1e-14, 1e-12))
}

/// Even k = 0 solution phi0 = 1/(1 + beta sigma_a') + psi0 I_a with
/// psi0 = x + beta sigma_a; phi0' = psi0' I_a.
pub fn solve_even_zero_mode(p: &PointPotential, x0: f64, grid_spec: &GridSpec) -> Result<WaveSolution> {
    if p.kind != PotentialKind::DualityPreserving {
        return Err(Error::NotMultiplicative { kind: p.kind.label() });
    }
    check_positive("x0", x0)?;
    let grid = grid_spec.build(p, x0);
    let v = potential_fn(p)?;
    let f = |y: f64| {
        let d = 1.0 + p.beta * p.sigma1_a(y);
        v(y) / (d * d)
    };
    let tol = Tolerance::new(1e-15, 1e-13);
    let mut ia = vec![0.0; grid.len()];
    for i in 1..grid.len() {
        ia[i] = ia[i - 1] + quad("I_a", f, &[grid[i - 1], grid[i]], tol)?;
    }
    let mut psi = Vec::with_capacity(grid.len());
    let mut dpsi = Vec::with_capacity(grid.len());
    for (x, i) in grid.iter().zip(&ia) {
        let d = 1.0 + p.beta * p.sigma1_a(*x);
        let psi0 = x + p.beta * p.sigma_a(*x);
        psi.push(1.0 / d + psi0 * i);
        dpsi.push(d * i);
    }
    let sol = WaveSolution {
        grid,
        psi,
        dpsi,
        k: 0.0,
        parity: Parity::Even,
        potential: p.clone(),
    };
    let r = energy_residual(&sol)?;
    if r > 1e-5 {
        return Err(Error::QuadratureFailure {
            context: "even zero mode residual".into(),
            estimate: r,
        });
    }
    Ok(sol)
}

/// Residual of -psi'' + V psi - k^2 psi with psi'' from the derivative
/// samples, relative to max|psi''| + k^2 max|psi| over the grid; ends excluded.
pub fn energy_residual(sol: &WaveSolution) -> Result<f64> {
    let v = potential_fn(&sol.potential)?;
    let (d2, _) = derivatives(&sol.grid, &sol.dpsi, 5);
    let max = sol.psi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let k2 = sol.k * sol.k;
    let n = sol.grid.len();
    let inner = 2..n.saturating_sub(2);
    let curvature = d2[inner.clone()].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let scale = (curvature + k2 * max).max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for i in inner {
        let r = (-d2[i] + (v(sol.grid[i]) - k2) * sol.psi[i]).abs();
        worst = worst.max(r / scale);
    }
    Ok(worst)
}

/// Relative spread of W = f' g - f g' along the common grid.
pub fn wronskian_spread(f: &WaveSolution, g: &WaveSolution) -> f64 {
    let w: Vec<f64> = (0..f.grid.len())
        .map(|i| f.dpsi[i] * g.psi[i] - f.psi[i] * g.dpsi[i])
        .collect();
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    let (lo, hi) = w
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    (hi - lo) / mean.abs()
}

/// Plugs an odd solution into the integral equation built on the k = 0
/// pair and returns the maximum deviation relative to max|psi|.
pub fn self_consistent_residual(sol: &WaveSolution, grid_spec: &GridSpec) -> Result<f64> {
    let p = &sol.potential;
    let x0 = *sol.grid.last().unwrap();
    let even = solve_even_zero_mode(p, x0, grid_spec)?;
    if even.grid != sol.grid {
        return Err(Error::GridTooCoarse {
            reason: "solution grid differs from the grid spec".into(),
        });
    }
    let psi0: Vec<f64> = sol.grid.iter().map(|x| x + p.beta * p.sigma_a(*x)).collect();
    let phi0 = &even.psi;
    let k2 = sol.k * sol.k;
    let a_coef = sol.dpsi[0] / (1.0 + p.beta * p.sigma1_a(0.0));
    let f1: Vec<f64> = (0..sol.grid.len()).map(|i| sol.psi[i] * phi0[i]).collect();
    let f2: Vec<f64> = (0..sol.grid.len()).map(|i| sol.psi[i] * psi0[i]).collect();
    let c1 = crate::numerics::cumulative(&sol.grid, &f1);
    let c2 = crate::numerics::cumulative(&sol.grid, &f2);
    let max = sol.psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for i in 0..sol.grid.len() {
        let rhs = -k2 * psi0[i] * c1[i] + k2 * phi0[i] * c2[i] + a_coef * psi0[i];
        worst = worst.max((rhs - sol.psi[i]).abs() / max);
    }
    Ok(worst)
}

/// Least-squares fit of psi to P sin(kx) + Q cos(kx) on [x_fit, x0].
pub(crate) fn fit_free_wave(sol: &WaveSolution, x_fit: f64) -> Result<JumpReport> {
    let x0 = *sol.grid.last().unwrap();
    let k = sol.k;
    if !(k > 0.0) {
        return Err(Error::InvalidParameter {
            name: "k",
            value: k,
            reason: "jump extraction needs k > 0",
        });
    }
    let idx: Vec<usize> = (0..sol.grid.len()).filter(|&i| sol.grid[i] >= x_fit).collect();
    if x_fit >= x0 || idx.len() < 8 {
        return Err(Error::NoFreeRegion { x_fit, x0 });
    }
    let design = DMatrix::from_fn(idx.len(), 2, |r, c| {
        let x = sol.grid[idx[r]];
        if c == 0 {
            (k * x).sin()
        } else {
            (k * x).cos()
        }
    });
    let y: Vec<f64> = idx.iter().map(|&i| sol.psi[i]).collect();
    let fit = least_squares(&design, &y).ok_or_else(|| Error::IllConditionedFit {
        reason: "singular design".into(),
    })?;
    if fit.condition > 1e8 {
        return Err(Error::IllConditionedFit {
            reason: format!("condition number {:.3e} of the window [{x_fit}, {x0}]", fit.condition),
        });
    }
    let (p, q) = (fit.coeffs[0], fit.coeffs[1]);
    if p.abs() < 1e-10 * q.abs() {
        return Err(Error::IllConditionedFit {
            reason: "sine amplitude vanishes".into(),
        });
    }
    Ok(JumpReport {
        p,
        q,
        beta_eff: q / (k * p),
        fit_window: (x_fit, x0),
        fit_residual: fit.max_residual,
    })
}

pub fn extract_jump(sol: &WaveSolution, opts: &SolverOptions) -> Result<JumpReport> {
    let k = sol.k;
    if !(k > 0.0) {
        return Err(Error::InvalidParameter {
            name: "k",
            value: k,
            reason: "jump extraction needs k > 0",
        });
    }
    let p = &sol.potential;
    let x_fit = if p.beta == 0.0 {
        0.0
    } else {
        p.free_radius(opts.eps_v * k * k)?
    };
    fit_free_wave(sol, x_fit)
}

/// Wave number near `k_hint` keeping k x0 at least 0.1 away from multiples of pi.
pub fn safe_wavenumber(x0: f64, k_hint: f64) -> f64 {
    let mut k = k_hint;
    for _ in 0..1000 {
        let r = (k * x0 / std::f64::consts::PI).fract();
        let dist = r.min(1.0 - r) * std::f64::consts::PI;
        if dist >= 0.1 {
            return k;
        }
        k += 0.01 / x0;
    }
    k
}

/// Regularization family with fixed strength, instantiated per range a.
#[derive(Debug, Clone)]
pub enum PotentialTemplate {
    DualityPreserving { profile: MollifierProfile, beta: f64 },
    CheonShigehara { beta: f64, a_inner_ratio: Option<f64> },
    NaiveDeltaPrime { profile: MollifierProfile, beta: f64 },
}

impl PotentialTemplate {
    pub fn beta(&self) -> f64 {
        match self {
            Self::DualityPreserving { beta, .. }
            | Self::CheonShigehara { beta, .. }
            | Self::NaiveDeltaPrime { beta, .. } => *beta,
        }
    }

    pub fn at(&self, a: f64) -> Result<PointPotential> {
        match self {
            Self::DualityPreserving { profile, beta } => {
                PointPotential::duality_preserving(profile.clone(), a, *beta)
            }
            Self::CheonShigehara { beta, a_inner_ratio } => match a_inner_ratio {
                Some(r) => PointPotential::cheon_shigehara_with_inner(a, *beta, r * a),
                None => PointPotential::cheon_shigehara(a, *beta),
            },
            Self::NaiveDeltaPrime { profile, beta } => {
                PointPotential::naive_delta_prime(profile.clone(), a, *beta)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub a: f64,
    pub beta_eff: Option<f64>,
    pub abs_error: Option<f64>,
    pub report: Option<JumpReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub beta: f64,
    pub k: f64,
    pub x0: f64,
    pub rows: Vec<SweepRow>,
    /// Slope of log|beta_eff/beta - 1| against log a.
    pub fitted_order: Option<f64>,
}

impl SweepTable {
    /// True when every row succeeded and the error shrinks with a.
    pub fn monotone(&self) -> bool {
        let errs: Option<Vec<f64>> = self.rows.iter().map(|r| r.abs_error).collect();
        match errs {
            Some(e) => e.windows(2).all(|w| w[1] < w[0]),
            None => false,
        }
    }
}

pub fn jump_at(
    template: &PotentialTemplate,
    a: f64,
    k: f64,
    x0: f64,
    grid: &GridSpec,
    opts: &SolverOptions,
) -> Result<JumpReport> {
    let p = template.at(a)?;
    match template {
        PotentialTemplate::NaiveDeltaPrime { profile, beta } => {
            solve_naive_delta_prime(profile, a, *beta, k, x0, opts).map(|(_, r)| r)
        }
        _ => {
            let sol = solve_odd(&p, k, x0, grid, opts)?;
            extract_jump(&sol, opts)
        }
    }
}

/// Runs the jump extraction for each a (rows in parallel, order kept).
pub fn sweep_a(
    template: &PotentialTemplate,
    k: f64,
    x0: f64,
    a_list: &[f64],
    grid: &GridSpec,
    opts: &SolverOptions,
) -> Result<SweepTable> {
    if a_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter {
            name: "a_list",
            value: f64::NAN,
            reason: "must be strictly decreasing",
        });
    }
    let beta = template.beta();
    let rows: Vec<SweepRow> = a_list
        .par_iter()
        .map(|&a| match jump_at(template, a, k, x0, grid, opts) {
            Ok(r) => SweepRow {
                a,
                beta_eff: Some(r.beta_eff),
                abs_error: Some((r.beta_eff - beta).abs()),
                report: Some(r),
                error: None,
            },
            Err(e) => SweepRow {
                a,
                beta_eff: None,
                abs_error: None,
                report: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let fitted_order = if beta > 0.0 && !matches!(template, PotentialTemplate::NaiveDeltaPrime { .. }) {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| r.beta_eff.map(|b| (r.a, b / beta - 1.0)))
            .collect();
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        loglog_slope(&x, &y)
    } else {
        None
    };
    Ok(SweepTable {
        beta,
        k,
        x0,
        rows,
        fitted_order,
    })
}

/// sgn(x) [sin(k|x|) + beta k cos(k|x|)]: the a -> 0 limit of the odd solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedJumpSolution {
    pub k: f64,
    pub beta: f64,
}

impl ClosedJumpSolution {
    pub fn eval(&self, x: f64) -> f64 {
        let s = x.signum();
        let y = self.k * x.abs();
        s * (y.sin() + self.beta * self.k * y.cos())
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let y = self.k * x.abs();
        self.k * (y.cos() - self.beta * self.k * y.sin())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_solution_conditions() {
        let c = ClosedJumpSolution { k: 1.3, beta: 0.4 };
        let e = 1e-9;
        let jump = c.eval(e) - c.eval(-e);
        assert!((jump - 2.0 * c.beta * c.deriv(0.0)).abs() < 1e-8);
        assert!((c.deriv(e) - c.deriv(-e)).abs() < 1e-8);
        let x = 0.37;
        let h = 1e-4;
        let d2 = (c.eval(x + h) - 2.0 * c.eval(x) + c.eval(x - h)) / (h * h);
        assert!((d2 + c.k * c.k * c.eval(x)).abs() < 1e-6);
    }

    #[test]
    fn safe_wavenumber_avoids_nodes() {
        let k = safe_wavenumber(1.0, std::f64::consts::PI);
        assert!((k - std::f64::consts::PI).abs() >= 0.1 - 1e-12);
    }
}

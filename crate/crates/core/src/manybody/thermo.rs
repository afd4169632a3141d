use std::cell::RefCell;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::{DensityProfile, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::numerics::{least_squares, quad, Tolerance};
use crate::profiles::{FFunction, MollifierProfile, PointPotential, PotentialKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermoOptions {
    /// Relative tolerance of the innermost integrals; outer levels use
    /// tenfold looser ones.
    pub rel_tol: f64,
}

impl Default for ThermoOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-11 }
    }
}

impl ThermoOptions {
    fn level(&self, depth: i32) -> Tolerance {
        self.scaled(depth, 0.0)
    }

    /// Same, with an absolute floor rel * scale for integrals that may vanish.
    fn scaled(&self, depth: i32, scale: f64) -> Tolerance {
        let rel = self.rel_tol * 10f64.powi(depth);
        Tolerance {
            abs: (rel * scale).max(1e-15),
            rel,
            max_intervals: 20_000,
        }
    }
}

/// Adaptive quadrature of a fallible integrand; the first inner error wins.
fn nested<F: Fn(f64) -> Result<f64>>(context: &str, f: F, points: &[f64], tol: Tolerance) -> Result<f64> {
    let err = RefCell::new(None);
    let g = |x: f64| match f(x) {
        Ok(v) => v,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let v = quad(context, g, points, tol);
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    v
}

/// Principal value of the integral of g(y)/(y - pole) over [points[0],
/// points[last]] by subtraction of g(pole).
fn pv<F: Fn(f64) -> f64>(context: &str, g: F, points: &[f64], pole: f64, tol: Tolerance) -> Result<f64> {
    let (lo, hi) = (points[0], *points.last().unwrap());
    if !(pole > lo && pole < hi) {
        let h = |y: f64| g(y) / (y - pole);
        return quad(context, h, points, tol);
    }
    let g0 = g(pole);
    let h = |y: f64| {
        let d = y - pole;
        if d == 0.0 {
            0.0
        } else {
            (g(y) - g0) / d
        }
    };
    let mut pts = points.to_vec();
    pts.push(pole);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    Ok(quad(context, h, &pts, tol)? + g0 * ((hi - pole) / (pole - lo)).ln())
}

fn with_breaks(lo: f64, hi: f64, breaks: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut pts: Vec<f64> = breaks.into_iter().filter(|x| *x > lo && *x < hi).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Order-beta Fourier data of the potential at range a, per unit beta:
/// V1-hat(k) - V1-hat(0) = F(a k)/a^2.
struct Context<'a> {
    profile: &'a MollifierProfile,
    f: &'a FFunction,
    a: f64,
    rho: &'a DensityProfile,
    opts: ThermoOptions,
}

impl Context<'_> {
    fn dv1(&self, k: f64) -> f64 {
        self.f.eval(self.a * k) / (self.a * self.a)
    }

    /// V2-hat(k) - V2-hat(0) per unit beta^2, with V2 = -sigma_a'' sigma_a / x^2.
    fn dv2(&self, k: f64) -> Result<f64> {
        let p = self.profile;
        let b = self.a * k;
        let g = |t: f64| {
            if t == 0.0 {
                return 0.0;
            }
            let s = (0.5 * b * t).sin();
            p.sigma2(t) * p.sigma(t) / (t * t) * 2.0 * s * s
        };
        let end = p.support().unwrap_or(p.t_far());
        let mut pts = vec![0.0];
        let mut t = 0.25;
        while t < end {
            pts.push(t);
            t *= 2.0;
        }
        pts.push(end);
        let v = quad("V2-hat", g, &pts, self.opts.level(0))?;
        Ok(2.0 * v / self.a.powi(3))
    }

    fn width(&self) -> f64 {
        let (lo, hi) = self.rho.support();
        hi - lo
    }

    fn k_points(&self) -> Vec<f64> {
        let w = self.width();
        let mut pts = vec![0.0, w];
        if let DensityProfile::Tabulated { lambdas, .. } = self.rho {
            for x in lambdas {
                for y in lambdas {
                    let d = (x - y).abs();
                    if d > 0.0 && d < w {
                        pts.push(d);
                    }
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        pts
    }

    /// First-order energy per unit beta and per unit beta^2.
    fn e1(&self) -> Result<(f64, f64)> {
        let pts = self.k_points();
        let w = |k: f64| self.rho.autocorrelation(k);
        let e11 = -2.0 * quad("E1 order beta", |k| w(k) * self.dv1(k), &pts, self.opts.level(1))?;
        let e12 = -2.0 * nested("E1 order beta^2", |k| Ok(w(k) * self.dv2(k)?), &pts, self.opts.level(1))?;
        Ok((e11, e12))
    }

    /// PV integral over nu of [F(u + b) - F(u)]^2 / a^4 / (nu (nu + k)),
    /// with u = a nu and b = a k, reduced to a regular integral on u > 0.
    fn sing_kernel(&self, k: f64) -> Result<f64> {
        let a = self.a;
        let b = a * k;
        let f = |x: f64| self.f.eval(x);
        let h = |u: f64| {
            if u == 0.0 {
                return 0.0;
            }
            let second = f(u + b) - 2.0 * f(u) + f(u - b);
            let wide = f(u + b) - f(u - b);
            second * wide / u
        };
        let end = self.f.extent() + b.abs();
        let mut pts = vec![0.0, b.abs()];
        let mut t = 0.5;
        while t < end {
            pts.push(t);
            t *= 1.5;
        }
        pts.push(end);
        let pts = with_breaks(0.0, end, pts);
        let v = quad("E2 singular kernel", h, &pts, self.opts.level(0))?;
        Ok(2.0 * v / (k * a.powi(4)))
    }

    fn e2_sing(&self) -> Result<f64> {
        let pts = self.k_points();
        let v = nested(
            "E2 singular",
            |k| {
                if k == 0.0 {
                    return Ok(0.0);
                }
                Ok(self.rho.autocorrelation(k) * self.sing_kernel(k)?)
            },
            &pts,
            self.opts.level(1),
        )?;
        Ok(-v / (2.0 * PI))
    }

    fn lambda_points(&self) -> Vec<f64> {
        let (lo, hi) = self.rho.support();
        with_breaks(lo, hi, self.rho.breakpoints())
    }

    /// 2 int int rho rho/(l - m) PV int rho(n) N/(n - l), with
    /// N = [dV1(n - m) - dV1(n - l)]^2.
    fn e2_three_rho(&self) -> Result<f64> {
        let pts = self.lambda_points();
        let inner = |l: f64, m: f64| -> Result<f64> {
            if l == m {
                return Ok(0.0);
            }
            let g = |n: f64| {
                let d = self.dv1(n - m) - self.dv1(n - l);
                self.rho.rho(n) * d * d
            };
            let p = pv("E2 three-density PV", g, &pts, l, self.opts.level(0))?;
            Ok(p / (l - m))
        };
        let v = nested(
            "E2 three-density",
            |l| {
                let rl = self.rho.rho(l);
                if rl == 0.0 {
                    return Ok(0.0);
                }
                let mp = with_breaks(pts[0], *pts.last().unwrap(), pts.iter().copied().chain([l]));
                Ok(rl * nested("E2 three-density mid", |m| Ok(self.rho.rho(m) * inner(l, m)?), &mp, self.opts.level(1))?)
            },
            &pts,
            self.opts.level(2),
        )?;
        Ok(2.0 * v)
    }

    /// -pi int int int N/(nu (k + nu)) rho(l) rho(m) rho(l + nu) rho(m - nu).
    fn e2_four_rho(&self) -> Result<f64> {
        let pts = self.lambda_points();
        let (lo, hi) = self.rho.support();
        let breaks = self.rho.breakpoints();
        // the total vanishes for symmetric densities, so relative accuracy
        // alone is unreachable; bound the integrand magnitude instead
        let w = hi - lo;
        let rmax = pts.iter().fold(0.0f64, |s, x| s.max(self.rho.rho(*x)));
        let dmax = (0..=64).fold(0.0f64, |s, i| s.max(self.dv1(2.0 * w * i as f64 / 64.0).abs()));
        let unit = 4.0 * dmax * dmax * rmax * rmax;
        let inner = |l: f64, m: f64| -> Result<f64> {
            let k = l - m;
            if k == 0.0 {
                return Ok(0.0);
            }
            let (a0, b0) = ((lo - l).max(m - hi), (hi - l).min(m - lo));
            if b0 <= a0 {
                return Ok(0.0);
            }
            let g = |n: f64| {
                let d = self.dv1(k + n) - self.dv1(n);
                d * d * self.rho.rho(l + n) * self.rho.rho(m - n)
            };
            let np = with_breaks(
                a0,
                b0,
                breaks.iter().flat_map(|x| [x - l, m - x]).chain([0.0, -k]),
            );
            let first = pv("E2 four-density PV", g, &np, 0.0, self.opts.scaled(0, unit))?;
            let second = pv("E2 four-density PV", g, &np, -k, self.opts.scaled(0, unit))?;
            Ok((first - second) / k)
        };
        let v = nested(
            "E2 four-density",
            |l| {
                let rl = self.rho.rho(l);
                if rl == 0.0 {
                    return Ok(0.0);
                }
                let mp = with_breaks(pts[0], *pts.last().unwrap(), pts.iter().copied().chain([l]));
                Ok(rl * nested("E2 four-density mid", |m| Ok(self.rho.rho(m) * inner(l, m)?), &mp, self.opts.scaled(1, unit * rmax * w))?)
            },
            &pts,
            self.opts.scaled(2, unit * rmax * rmax * w * w),
        )?;
        Ok(-PI * v)
    }
}

fn check_potential(p: &PointPotential) -> Result<&MollifierProfile> {
    if p.kind != PotentialKind::DualityPreserving {
        return Err(Error::NotMultiplicative { kind: p.kind.label() });
    }
    Ok(p.profile.as_ref().expect("duality-preserving potentials carry a profile"))
}

/// Energy density to order beta^2 in the thermodynamic, low-momentum limit,
/// with the beta expansion done before any a -> 0 limit.
pub fn thermo_pt(rho: &DensityProfile, p: &PointPotential, opts: &ThermoOptions) -> Result<EnergyBreakdown> {
    let profile = check_potential(p)?;
    let f = FFunction::new(profile)?;
    thermo_with(rho, profile, &f, p.a, p.beta, opts)
}

fn thermo_with(
    rho: &DensityProfile,
    profile: &MollifierProfile,
    f: &FFunction,
    a: f64,
    beta: f64,
    opts: &ThermoOptions,
) -> Result<EnergyBreakdown> {
    let ctx = Context {
        profile,
        f,
        a,
        rho,
        opts: *opts,
    };
    let e0 = rho.moment(2);
    let ((e11, e12), (sing, (three, four))) = rayon::join(
        || ctx.e1(),
        || {
            let s = ctx.e2_sing();
            let r = rayon::join(|| ctx.e2_three_rho(), || ctx.e2_four_rho());
            (s, r)
        },
    )
    .pipe(|(e1, (s, (t, q)))| -> Result<_> { Ok((e1?, (s?, (t?, q?)))) })?;
    let b2 = beta * beta;
    Ok(EnergyBreakdown {
        e0,
        e1: beta * e11 + b2 * e12,
        e2: b2 * (sing + three + four),
        e2_reg: Some(b2 * (three + four)),
        e2_sing: Some(b2 * sing),
        e1_beta2: Some(b2 * e12),
        e2_four_rho: Some(b2 * four),
        order: 2,
        a,
        beta,
        warnings: Vec::new(),
    })
}

trait Pipe: Sized {
    fn pipe<R>(self, f: impl FnOnce(Self) -> R) -> R {
        f(self)
    }
}
impl<T> Pipe for T {}

/// E2 for a Fermi sea straight from the hole-density form (no principal
/// values needed: the hole constraints keep nu away from both poles).
pub fn e2_direct_fermi_sea(q: f64, p: &PointPotential, opts: &ThermoOptions) -> Result<f64> {
    let profile = check_potential(p)?;
    let f = FFunction::new(profile)?;
    let a = p.a;
    let dv1 = |k: f64| f.eval(a * k) / (a * a);
    let reach = (f.extent() + 2.0 * a * q) / a + 4.0 * q;
    let tail = |l: f64, m: f64| -> Result<f64> {
        let k = l - m;
        let g = |n: f64| {
            let d = dv1(k + n) - dv1(n);
            d * d / (n * (k + n))
        };
        let up = (q - l).max(m + q);
        let down = (-q - l).min(m - q);
        let grid = |from: f64, to: f64| {
            let mut pts = vec![from];
            let mut t = from.abs().max(q) * 1.5;
            while t < to {
                pts.push(t);
                t *= 1.5;
            }
            pts.push(to);
            pts
        };
        let right = quad("E2 direct right tail", g, &grid(up, reach), opts.level(0))?;
        let left = quad("E2 direct left tail", |n| g(-n), &grid(-down, reach), opts.level(0))?;
        Ok(right + left)
    };
    let pts = [-q, q];
    let v = nested(
        "E2 direct",
        |l| nested("E2 direct mid", |m| tail(l, m), &[-q, l, q], opts.level(1)),
        &pts,
        opts.level(2),
    )?;
    let r = 1.0 / (2.0 * PI);
    Ok(-p.beta * p.beta / (4.0 * PI) * v * r * r)
}

/// Four-density part alone, per unit beta^2 (vanishes by symmetry).
pub fn four_rho_term(rho: &DensityProfile, p: &PointPotential, opts: &ThermoOptions) -> Result<f64> {
    let profile = check_potential(p)?;
    let f = FFunction::new(profile)?;
    let ctx = Context {
        profile,
        f: &f,
        a: p.a,
        rho,
        opts: *opts,
    };
    ctx.e2_four_rho()
}

/// Both sides of int int mu/(mu - nu) rho rho = (1/2) int int rho rho, the
/// left one as a principal value in nu.
pub fn fraction_identity(rho: &DensityProfile, opts: &ThermoOptions) -> Result<(f64, f64)> {
    let (lo, hi) = rho.support();
    let pts = with_breaks(lo, hi, rho.breakpoints());
    let lhs = nested(
        "fraction identity",
        |m| {
            let rm = rho.rho(m);
            if rm == 0.0 {
                return Ok(0.0);
            }
            // mu/(mu - nu) = -mu/(nu - mu)
            let p = pv("fraction identity PV", |n| rho.rho(n), &pts, m, opts.level(0))?;
            Ok(-m * rm * p)
        },
        &pts,
        opts.level(1),
    )?;
    let d = rho.density();
    Ok((lhs, 0.5 * d * d))
}

/// Strong-coupling energy density int l^2 rho (1 - 2 beta D + 3 beta^2 D^2).
pub fn closed_form_e2(rho: &DensityProfile, beta: f64) -> f64 {
    let d = rho.density();
    rho.moment(2) * (1.0 - 2.0 * beta * d + 3.0 * beta * beta * d * d)
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditRow {
    pub a: f64,
    pub e1_beta2: f64,
    pub e2_sing: f64,
    pub e1_fit_residual: f64,
    pub e2_fit_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DivergenceAudit {
    pub beta: f64,
    pub rows: Vec<AuditRow>,
    /// Fits y = c/a + d.
    pub c1: f64,
    pub d1: f64,
    pub c2: f64,
    pub d2: f64,
    pub c1_analytic: f64,
    /// |c1 + c2| / |c1|.
    pub cancellation: f64,
    /// |c1 / c1_analytic - 1|.
    pub c1_rel_error: f64,
}

fn fit_inverse(a: &[f64], y: &[f64]) -> Result<(f64, f64, Vec<f64>)> {
    let design = nalgebra::DMatrix::from_fn(a.len(), 2, |i, j| if j == 0 { 1.0 / a[i] } else { 1.0 });
    let fit = least_squares(&design, y).ok_or_else(|| Error::FitPoor {
        reason: "singular c/a + d design".into(),
    })?;
    let resid: Vec<f64> = a
        .iter()
        .zip(y)
        .map(|(x, v)| v - fit.coeffs[0] / x - fit.coeffs[1])
        .collect();
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let worst = resid.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if worst > 1e-2 * scale {
        return Err(Error::FitPoor {
            reason: format!("c/a + d leaves residual {worst:.3e} against values up to {scale:.3e}"),
        });
    }
    Ok((fit.coeffs[0], fit.coeffs[1], resid))
}

fn check_a_list(a_list: &[f64]) -> Result<()> {
    if a_list.len() < 3 || a_list.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::InvalidParameter {
            name: "a_list",
            value: a_list.len() as f64,
            reason: "need at least three positive ranges",
        });
    }
    let (lo, hi) = a_list
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), a| (l.min(*a), h.max(*a)));
    if hi / lo < 2.0 {
        return Err(Error::InvalidParameter {
            name: "a_list",
            value: hi / lo,
            reason: "ranges must span at least a factor 2",
        });
    }
    Ok(())
}

/// Fits the beta^2 parts of E1 and of E2_sing to c/a + d and compares the
/// divergent coefficients.
pub fn divergence_audit(
    rho: &DensityProfile,
    profile: &MollifierProfile,
    beta: f64,
    a_list: &[f64],
    opts: &ThermoOptions,
) -> Result<DivergenceAudit> {
    check_a_list(a_list)?;
    let f = FFunction::new(profile)?;
    let parts: Vec<Result<(f64, f64)>> = a_list
        .par_iter()
        .map(|&a| {
            let ctx = Context {
                profile,
                f: &f,
                a,
                rho,
                opts: *opts,
            };
            let (_, e12) = ctx.e1()?;
            let s = ctx.e2_sing()?;
            Ok((beta * beta * e12, beta * beta * s))
        })
        .collect();
    let parts: Vec<(f64, f64)> = parts.into_iter().collect::<Result<_>>()?;
    let y1: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let y2: Vec<f64> = parts.iter().map(|p| p.1).collect();
    let (c1, d1, r1) = fit_inverse(a_list, &y1)?;
    let (c2, d2, r2) = fit_inverse(a_list, &y2)?;
    let m0 = rho.density();
    let m1 = rho.moment(1);
    let m2 = rho.moment(2);
    let c1_analytic = beta * beta / (4.0 * PI) * 2.0 * (m0 * m2 - m1 * m1) * profile.sigma1_sq_integral()?;
    let rows = a_list
        .iter()
        .enumerate()
        .map(|(i, &a)| AuditRow {
            a,
            e1_beta2: y1[i],
            e2_sing: y2[i],
            e1_fit_residual: r1[i],
            e2_fit_residual: r2[i],
        })
        .collect();
    Ok(DivergenceAudit {
        beta,
        rows,
        c1,
        d1,
        c2,
        d2,
        c1_analytic,
        cancellation: (c1 + c2).abs() / c1.abs(),
        c1_rel_error: (c1 / c1_analytic - 1.0).abs(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Extrapolation {
    pub beta: f64,
    pub rows: Vec<EnergyBreakdown>,
    /// Linear fit E(a) = intercept + slope a of the truncated energy.
    pub intercept: f64,
    pub slope: f64,
    pub closed_form: f64,
    pub rel_error: f64,
}

/// Truncated energy at each a, extrapolated linearly to a = 0 and compared
/// with the closed form.
pub fn thermo_extrapolate(
    rho: &DensityProfile,
    profile: &MollifierProfile,
    beta: f64,
    a_list: &[f64],
    opts: &ThermoOptions,
) -> Result<Extrapolation> {
    check_a_list(a_list)?;
    let f = FFunction::new(profile)?;
    let rows: Vec<EnergyBreakdown> = a_list
        .par_iter()
        .map(|&a| thermo_with(rho, profile, &f, a, beta, opts))
        .collect::<Result<_>>()?;
    let y: Vec<f64> = rows.iter().map(|r| r.total()).collect();
    let fit = crate::numerics::polyfit(a_list, &y, 1).ok_or_else(|| Error::FitPoor {
        reason: "singular linear fit".into(),
    })?;
    let closed = closed_form_e2(rho, beta);
    Ok(Extrapolation {
        beta,
        rows,
        intercept: fit.coeffs[0],
        slope: fit.coeffs[1],
        closed_form: closed,
        rel_error: (fit.coeffs[0] / closed - 1.0).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let rho = DensityProfile::fermi_sea(PI).unwrap();
        let e0 = PI * PI / 3.0;
        assert!((closed_form_e2(&rho, 0.0) - e0).abs() < 1e-14);
        // beta = 2/c: 1 - 4/c + 12/c^2
        let c = 40.0;
        let v = closed_form_e2(&rho, 2.0 / c);
        assert!((v - e0 * (1.0 - 4.0 / c + 12.0 / (c * c))).abs() < 1e-14);
    }

    #[test]
    fn fraction_identity_for_fermi_sea() {
        let rho = DensityProfile::fermi_sea(1.3).unwrap();
        let (l, r) = fraction_identity(&rho, &ThermoOptions::default()).unwrap();
        assert!((l - r).abs() < 1e-10 * r, "{l} {r}");
    }

    #[test]
    fn principal_value_of_reciprocal() {
        let v = pv("t", |_| 1.0, &[-1.0, 2.0], 0.5, Tolerance::default()).unwrap();
        assert!((v - (1.5f64 / 1.5).ln()).abs() < 1e-14);
    }
}


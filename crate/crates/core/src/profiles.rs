//! Mollifier profiles, the regularized potentials built from them and their
//! Fourier-side quantities.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_nonnegative, check_positive, Error, Result};
use crate::numerics::{integrate_points, quad, HermiteTable, Tolerance};

/// A smooth odd step `sigma(t)` approximating sgn(t).
pub trait Mollifier: Send + Sync {
    fn sigma(&self, t: f64) -> f64;
    fn sigma1(&self, t: f64) -> f64;
    fn sigma2(&self, t: f64) -> f64;
    fn sigma3_at_0(&self) -> f64;
    /// Fifth derivative at the origin, used by the near-origin series.
    fn sigma5_at_0(&self) -> f64;
    /// Beyond this point sigma is within 1e-6 of one and t^2 sigma'' below 1e-6.
    fn t_far(&self) -> f64;
    /// Half-width of the support of sigma', if compact.
    fn support(&self) -> Option<f64> {
        None
    }
    /// Transform of sigma': the integral of sigma'(t) e^{i w t} over the line.
    fn fourier_sigma1(&self, omega: f64) -> f64 {
        fourier_by_quadrature(self, omega)
    }
}

fn fourier_by_quadrature<M: Mollifier + ?Sized>(m: &M, omega: f64) -> f64 {
    let end = m.support().unwrap_or(200.0 * m.t_far());
    let mut pts = vec![0.0];
    let mut t = 1.0f64.min(end);
    while t < end {
        pts.push(t);
        t *= 2.0;
    }
    pts.push(end);
    let f = |t: f64| 2.0 * m.sigma1(t) * (omega * t).cos();
    integrate_points(&f, &pts, Tolerance::new(1e-14, 1e-12))
        .unwrap_or_else(|e| e)
        .value
}

#[derive(Debug, Clone, Copy)]
pub struct Tanh;

impl Mollifier for Tanh {
    fn sigma(&self, t: f64) -> f64 {
        t.tanh()
    }
    fn sigma1(&self, t: f64) -> f64 {
        let s = 1.0 / t.cosh();
        s * s
    }
    fn sigma2(&self, t: f64) -> f64 {
        -2.0 * t.tanh() * self.sigma1(t)
    }
    fn sigma3_at_0(&self) -> f64 {
        -2.0
    }
    fn sigma5_at_0(&self) -> f64 {
        16.0
    }
    fn t_far(&self) -> f64 {
        15.0
    }
    fn fourier_sigma1(&self, omega: f64) -> f64 {
        let x = 0.5 * PI * omega;
        if x.abs() < 1e-4 {
            2.0 * (1.0 - x * x / 6.0)
        } else if x.abs() > 700.0 {
            0.0
        } else {
            2.0 * x / x.sinh()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Algebraic;

impl Mollifier for Algebraic {
    fn sigma(&self, t: f64) -> f64 {
        t / (1.0 + t * t).sqrt()
    }
    fn sigma1(&self, t: f64) -> f64 {
        (1.0 + t * t).powf(-1.5)
    }
    fn sigma2(&self, t: f64) -> f64 {
        -3.0 * t * (1.0 + t * t).powf(-2.5)
    }
    fn sigma3_at_0(&self) -> f64 {
        -3.0
    }
    fn sigma5_at_0(&self) -> f64 {
        45.0
    }
    fn t_far(&self) -> f64 {
        2000.0
    }
    fn fourier_sigma1(&self, omega: f64) -> f64 {
        2.0 * z_bessel_k1(omega.abs())
    }
}

/// z K_1(z) for z >= 0, from K_1(z) = int_0^inf exp(-z cosh u) cosh u du.
fn z_bessel_k1(z: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    if z < 1e-6 {
        return 1.0 + 0.25 * z * z * (2.0 * (0.5 * z).ln() + 2.0 * EULER_GAMMA - 1.0);
    }
    if z > 700.0 {
        return 0.0;
    }
    let upper = (745.0f64 / z).max(1.0 + 1e-12).acosh();
    let f = |u: f64| (-z * u.cosh()).exp() * u.cosh();
    let mut pts = vec![0.0];
    let knee = (1.0 / z).max(1.0).acosh().max(0.5);
    if knee < upper {
        pts.push(knee);
    }
    pts.push(upper);
    z * integrate_points(&f, &pts, Tolerance::new(1e-300, 1e-14))
        .unwrap_or_else(|e| e)
        .value
}

/// Odd quintic ramp with compact support on [-1, 1].
#[derive(Debug, Clone, Copy)]
pub struct Smoothstep;

impl Mollifier for Smoothstep {
    fn sigma(&self, t: f64) -> f64 {
        if t >= 1.0 {
            1.0
        } else if t <= -1.0 {
            -1.0
        } else {
            t * (15.0 - 10.0 * t * t + 3.0 * t.powi(4)) / 8.0
        }
    }
    fn sigma1(&self, t: f64) -> f64 {
        if t.abs() >= 1.0 {
            0.0
        } else {
            15.0 * (1.0 - t * t).powi(2) / 8.0
        }
    }
    fn sigma2(&self, t: f64) -> f64 {
        if t.abs() >= 1.0 {
            0.0
        } else {
            -7.5 * t * (1.0 - t * t)
        }
    }
    fn sigma3_at_0(&self) -> f64 {
        -7.5
    }
    fn sigma5_at_0(&self) -> f64 {
        45.0
    }
    fn t_far(&self) -> f64 {
        1.0
    }
    fn support(&self) -> Option<f64> {
        Some(1.0)
    }
    fn fourier_sigma1(&self, omega: f64) -> f64 {
        let w = omega.abs();
        if w < 1.0 {
            // power series of the integral of (1-t^2)^2 cos(w t)
            let mut sum = 0.0;
            let mut term = 1.0;
            for n in 0..12 {
                let m = 2.0 * n as f64;
                let moment = 2.0 * (1.0 / (m + 1.0) - 2.0 / (m + 3.0) + 1.0 / (m + 5.0));
                sum += term * moment;
                term *= -w * w / ((m + 1.0) * (m + 2.0));
            }
            15.0 / 8.0 * sum
        } else {
            30.0 * ((3.0 - w * w) * w.sin() - 3.0 * w * w.cos()) / w.powi(5)
        }
    }
}

/// Shared handle to a named, admissibility-checked mollifier.
#[derive(Clone)]
pub struct MollifierProfile {
    name: String,
    inner: Arc<dyn Mollifier>,
}

impl fmt::Debug for MollifierProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MollifierProfile").field("name", &self.name).finish()
    }
}

pub const PROFILE_NAMES: [&str; 3] = ["tanh", "algebraic", "smoothstep"];

pub fn make_profile(name: &str) -> Result<MollifierProfile> {
    match name {
        "tanh" => MollifierProfile::custom("tanh", Tanh),
        "algebraic" => MollifierProfile::custom("algebraic", Algebraic),
        "smoothstep" => MollifierProfile::custom("smoothstep", Smoothstep),
        other => Err(Error::UnknownProfile(other.to_string())),
    }
}

impl MollifierProfile {
    /// Wraps a user mollifier after running the admissibility checks.
    pub fn custom(name: &str, m: impl Mollifier + 'static) -> Result<Self> {
        let profile = Self {
            name: name.to_string(),
            inner: Arc::new(m),
        };
        profile.check_admissibility()?;
        Ok(profile)
    }

    pub fn tanh() -> Self {
        make_profile("tanh").expect("tanh is admissible")
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn sigma(&self, t: f64) -> f64 {
        self.inner.sigma(t)
    }
    pub fn sigma1(&self, t: f64) -> f64 {
        self.inner.sigma1(t)
    }
    pub fn sigma2(&self, t: f64) -> f64 {
        self.inner.sigma2(t)
    }
    pub fn sigma3_at_0(&self) -> f64 {
        self.inner.sigma3_at_0()
    }
    pub fn sigma5_at_0(&self) -> f64 {
        self.inner.sigma5_at_0()
    }
    pub fn t_far(&self) -> f64 {
        self.inner.t_far()
    }
    pub fn support(&self) -> Option<f64> {
        self.inner.support()
    }
    pub fn fourier_sigma1(&self, omega: f64) -> f64 {
        self.inner.fourier_sigma1(omega)
    }
    pub fn sigma1_at_0(&self) -> f64 {
        self.inner.sigma1(0.0)
    }

    /// sigma(t)/t, finite at the origin.
    pub fn sigma_over_t(&self, t: f64) -> f64 {
        if t.abs() < 1e-3 {
            self.sigma1_at_0() + self.sigma3_at_0() * t * t / 6.0
        } else {
            self.sigma(t) / t
        }
    }

    /// sigma''(t)/t, finite at the origin.
    pub fn sigma2_over_t(&self, t: f64) -> f64 {
        if t.abs() < 1e-3 {
            self.sigma3_at_0() + self.sigma5_at_0() * t * t / 6.0
        } else {
            self.sigma2(t) / t
        }
    }

    /// Checks oddness, monotonicity, sigma'(0) > 0 and the two limits on
    /// t in [0, 50] (10^4 points) plus [T_far, 10 T_far].
    pub fn check_admissibility(&self) -> Result<()> {
        let fail = |condition: &'static str, t: f64| Error::AdmissibilityViolation {
            profile: self.name.clone(),
            condition,
            t,
        };
        if !(self.sigma1(0.0) > 0.0) {
            return Err(fail("sigma'(0) > 0", 0.0));
        }
        let n = 10_000;
        for i in 0..=n {
            let t = 50.0 * i as f64 / n as f64;
            let s = self.sigma(t);
            let sm = self.sigma(-t);
            if (s + sm).abs() > 1e-12 * s.abs().max(1e-300) && (s + sm).abs() > 1e-15 {
                return Err(fail("sigma odd", t));
            }
            if !(self.sigma1(t) >= 0.0) || !(self.sigma1(-t) >= 0.0) {
                return Err(fail("sigma' >= 0", t));
            }
            if !(s.abs() <= 1.0 + 1e-12) {
                return Err(fail("|sigma| <= 1", t));
            }
        }
        let far = self.t_far();
        for j in 0..=20 {
            let t = far * (1.0 + 9.0 * j as f64 / 20.0);
            if (self.sigma(t) - 1.0).abs() >= 1e-6 {
                return Err(fail("sigma -> 1", t));
            }
            if (t * t * self.sigma2(t)).abs() >= 1e-6 {
                return Err(fail("t^2 sigma'' -> 0", t));
            }
        }
        Ok(())
    }

    /// Integral of the squared transform of sigma' over the line, computed
    /// as 2 pi times the integral of sigma'^2.
    pub fn sigma1_sq_integral(&self) -> Result<f64> {
        let end = self.support().unwrap_or(self.t_far() * 50.0);
        let f = |t: f64| self.sigma1(t).powi(2);
        let mut pts = vec![0.0];
        let mut t = 0.5f64.min(end);
        while t < end {
            pts.push(t);
            t *= 2.0;
        }
        pts.push(end);
        let half = quad("sigma'^2", f, &pts, Tolerance::new(1e-15, 1e-13))?;
        Ok(4.0 * PI * half)
    }

    /// Limit of F at infinity: minus the integral of sigma''(t)/t over the line.
    pub fn f_limit(&self) -> Result<f64> {
        let end = self.support().unwrap_or(self.t_far() * 50.0);
        let f = |t: f64| self.sigma2_over_t(t);
        let mut pts = vec![0.0];
        let mut t = 0.5f64.min(end);
        while t < end {
            pts.push(t);
            t *= 2.0;
        }
        pts.push(end);
        Ok(-2.0 * quad("sigma''/t", f, &pts, Tolerance::new(1e-15, 1e-13))?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    DualityPreserving,
    CheonShigehara,
    NaiveDeltaPrime,
    LorentzianToy,
}

impl PotentialKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::DualityPreserving => "duality-preserving",
            Self::CheonShigehara => "cheon-shigehara",
            Self::NaiveDeltaPrime => "naive-delta-prime",
            Self::LorentzianToy => "lorentzian-toy",
        }
    }
}

/// A regularized point interaction of range `a` and strength `beta`.
#[derive(Debug, Clone)]
pub struct PointPotential {
    pub kind: PotentialKind,
    pub profile: Option<MollifierProfile>,
    pub a: f64,
    pub beta: f64,
    /// Width of the Gaussian bumps replacing the deltas of the comb.
    pub a_inner: f64,
}

/// Default bump width of the comb: small against both a and a^2/beta.
pub fn default_a_inner(a: f64, beta: f64) -> f64 {
    if beta > 0.0 {
        (a / 100.0).min(a * a / (1000.0 * beta))
    } else {
        a / 100.0
    }
}

impl PointPotential {
    pub fn duality_preserving(profile: MollifierProfile, a: f64, beta: f64) -> Result<Self> {
        check_positive("a", a)?;
        check_nonnegative("beta", beta)?;
        Ok(Self {
            kind: PotentialKind::DualityPreserving,
            profile: Some(profile),
            a,
            beta,
            a_inner: 0.0,
        })
    }

    pub fn cheon_shigehara(a: f64, beta: f64) -> Result<Self> {
        Self::cheon_shigehara_with_inner(a, beta, default_a_inner(a, beta))
    }

    pub fn cheon_shigehara_with_inner(a: f64, beta: f64, a_inner: f64) -> Result<Self> {
        check_positive("a", a)?;
        check_positive("beta", beta)?;
        check_positive("a_inner", a_inner)?;
        if a_inner >= a / 5.0 {
            return Err(Error::InvalidParameter {
                name: "a_inner",
                value: a_inner,
                reason: "must be much smaller than a",
            });
        }
        Ok(Self {
            kind: PotentialKind::CheonShigehara,
            profile: None,
            a,
            beta,
            a_inner,
        })
    }

    pub fn naive_delta_prime(profile: MollifierProfile, a: f64, beta: f64) -> Result<Self> {
        check_positive("a", a)?;
        check_nonnegative("beta", beta)?;
        Ok(Self {
            kind: PotentialKind::NaiveDeltaPrime,
            profile: Some(profile),
            a,
            beta,
            a_inner: 0.0,
        })
    }

    pub fn lorentzian_toy(a: f64, beta: f64) -> Result<Self> {
        check_positive("a", a)?;
        check_nonnegative("beta", beta)?;
        Ok(Self {
            kind: PotentialKind::LorentzianToy,
            profile: None,
            a,
            beta,
            a_inner: 0.0,
        })
    }

    fn dp_profile(&self) -> &MollifierProfile {
        self.profile.as_ref().expect("profile present for this kind")
    }

    pub fn sigma_a(&self, x: f64) -> f64 {
        self.dp_profile().sigma(x / self.a)
    }
    pub fn sigma1_a(&self, x: f64) -> f64 {
        self.dp_profile().sigma1(x / self.a) / self.a
    }
    pub fn sigma2_a(&self, x: f64) -> f64 {
        self.dp_profile().sigma2(x / self.a) / (self.a * self.a)
    }

    /// The potential at x; only defined for multiplicative kinds.
    pub fn eval(&self, x: f64) -> Result<f64> {
        match self.kind {
            PotentialKind::DualityPreserving => {
                let p = self.dp_profile();
                let (a, beta) = (self.a, self.beta);
                let t = x.abs() / a;
                // ratio form: both numerator and denominator divided by t
                let den = a * a * (a + beta * p.sigma_over_t(t));
                if den <= 0.0 {
                    return Err(Error::DomainError {
                        x,
                        denominator: x.abs() + beta * p.sigma(t) * a,
                    });
                }
                Ok(beta * p.sigma2_over_t(t) / den)
            }
            PotentialKind::CheonShigehara => Ok(self.comb(x)),
            kind => Err(Error::NotMultiplicative { kind: kind.label() }),
        }
    }

    /// Scale-free form: V_{a,beta}(x) = W(x/a; beta/a)/a^2.
    pub fn reduced(profile: &MollifierProfile, t: f64, b: f64) -> f64 {
        let t = t.abs();
        b * profile.sigma2_over_t(t) / (1.0 + b * profile.sigma_over_t(t))
    }

    fn comb(&self, x: f64) -> f64 {
        let (a, beta, w) = (self.a, self.beta, self.a_inner);
        let outer = 1.0 / beta - 1.0 / a;
        let centre = 2.0 * (beta / (a * a) - 1.0 / a);
        let g = |u: f64| (-0.5 * (u / w).powi(2)).exp() / (w * (2.0 * PI).sqrt());
        outer * (g(x + a) + g(x - a)) + centre * g(x)
    }

    /// Abscissae where the integrand has narrow structure, with its width.
    pub fn features(&self) -> Vec<(f64, f64)> {
        match self.kind {
            PotentialKind::CheonShigehara => vec![(0.0, self.a_inner), (self.a, self.a_inner)],
            _ => vec![(0.0, self.a)],
        }
    }

    /// Smallest x beyond which |V| stays below `threshold`.
    pub fn free_radius(&self, threshold: f64) -> Result<f64> {
        let v = |x: f64| -> Result<f64> { Ok(self.eval(x)?.abs()) };
        let scale = match self.kind {
            PotentialKind::CheonShigehara => self.a + self.a_inner,
            _ => self.a,
        };
        let start = match self.kind {
            PotentialKind::CheonShigehara => self.a,
            _ => 0.0,
        };
        let mut hi = start + scale;
        let mut guard = 0;
        while v(hi)? >= threshold {
            hi = start + 2.0 * (hi - start);
            guard += 1;
            if guard > 200 {
                return Ok(f64::INFINITY);
            }
        }
        // scan back for the last crossing so oscillating tails are handled
        let n = 400;
        let mut lo = start;
        for i in (0..n).rev() {
            let x = start + (hi - start) * i as f64 / n as f64;
            if v(x)? >= threshold {
                lo = x;
                break;
            }
        }
        let mut hi_b = lo + (hi - start) / n as f64;
        let mut lo_b = lo;
        for _ in 0..100 {
            let mid = 0.5 * (lo_b + hi_b);
            if v(mid)? >= threshold {
                lo_b = mid;
            } else {
                hi_b = mid;
            }
        }
        Ok(hi_b)
    }
}

/// Fourier data of a duality-preserving potential.
#[derive(Debug, Clone)]
pub struct PotentialFourier {
    pub lambdas: Vec<f64>,
    pub vhat: Vec<f64>,
    /// V-hat(lambda) - V-hat(0), integrated directly.
    pub vhat_shift: Vec<f64>,
    /// beta lambda^2.
    pub order1: Vec<f64>,
    /// -beta^2 lambda^2/(4 a pi) times the squared-transform integral.
    pub order2: Vec<f64>,
    pub sigma1_sq_integral: f64,
    pub f: FFunction,
}

/// Transform of a multiplicative potential at one momentum, plus the shift
/// V-hat(lambda) - V-hat(0).
pub fn vhat_point(p: &PointPotential, lambda: f64) -> Result<(f64, f64)> {
    let (a, beta) = (p.a, p.beta);
    let reach = match p.kind {
        PotentialKind::CheonShigehara => a + 12.0 * p.a_inner,
        _ => {
            let t_far = p.profile.as_ref().map(|q| q.t_far()).unwrap_or(50.0);
            let base = (50.0 * a).max(50.0 * beta).max(t_far * a);
            let base = match p.profile.as_ref().and_then(|q| q.support()) {
                Some(s) => base.min(s * a),
                None => base,
            };
            base + if lambda != 0.0 { 10.0 / lambda.abs() } else { 0.0 }
        }
    };
    let mut pts = vec![0.0];
    match p.kind {
        PotentialKind::CheonShigehara => {
            let w = p.a_inner;
            for c in [8.0 * w, a - 8.0 * w, a, a + 8.0 * w] {
                if c > 0.0 && c < reach {
                    pts.push(c);
                }
            }
        }
        _ => {
            let mut x = a / 4.0;
            while x < reach {
                pts.push(x);
                x *= 1.5;
            }
        }
    }
    if lambda != 0.0 {
        let period = PI / lambda.abs();
        let mut x = *pts.last().unwrap() + period;
        while x < reach && pts.len() < 5000 {
            pts.push(x);
            x += period;
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.push(reach);
    pts.dedup();
    let v = |x: f64| p.eval(x).unwrap_or(f64::NAN);
    let tol = Tolerance::new(1e-14 * (beta / (a * a)).max(1e-300), 1e-12);
    let full = quad("V-hat", |x| 2.0 * v(x) * (lambda * x).cos(), &pts, tol)?;
    let shift = quad(
        "V-hat shift",
        |x| {
            let s = (0.5 * lambda * x).sin();
            -4.0 * v(x) * s * s
        },
        &pts,
        tol,
    )?;
    Ok((full, shift))
}

pub fn potential_fourier(p: &PointPotential, lambda_grid: &[f64]) -> Result<PotentialFourier> {
    if !matches!(p.kind, PotentialKind::DualityPreserving | PotentialKind::CheonShigehara) {
        return Err(Error::NotMultiplicative { kind: p.kind.label() });
    }
    let mut vhat = Vec::with_capacity(lambda_grid.len());
    let mut vhat_shift = Vec::with_capacity(lambda_grid.len());
    for &l in lambda_grid {
        let (v, s) = vhat_point(p, l)?;
        vhat.push(v);
        vhat_shift.push(s);
    }
    let profile = p.profile.clone().unwrap_or_else(MollifierProfile::tanh);
    let s2 = profile.sigma1_sq_integral()?;
    let order1 = lambda_grid.iter().map(|l| p.beta * l * l).collect();
    let order2 = lambda_grid
        .iter()
        .map(|l| -p.beta * p.beta * l * l / (4.0 * p.a * PI) * s2)
        .collect();
    Ok(PotentialFourier {
        lambdas: lambda_grid.to_vec(),
        vhat,
        vhat_shift,
        order1,
        order2,
        sigma1_sq_integral: s2,
        f: FFunction::new(&profile)?,
    })
}

/// F(x): integral from 0 to x of z times the transform of sigma'.
/// Tabulated with cubic Hermite interpolation (F' is known exactly) up to
/// the point where the integrand is negligible, constant beyond.
#[derive(Debug, Clone)]
pub struct FFunction {
    table: HermiteTable,
    limit: f64,
}

impl FFunction {
    pub fn new(profile: &MollifierProfile) -> Result<Self> {
        let g = |z: f64| z * profile.fourier_sigma1(z);
        // extent: where |z s(z)| stays below 1e-15 (or a hard cap for slow tails)
        let mut end = 8.0;
        while end < 4000.0 && (g(end).abs() > 1e-15 || g(0.9 * end).abs() > 1e-15) {
            end *= 1.25;
        }
        let step = if end > 200.0 { 2e-3 } else { 1e-3 };
        let n = (end / step).ceil() as usize;
        let step = end / n as f64;
        let mut values = vec![0.0; n + 1];
        let mut slopes = vec![0.0; n + 1];
        for i in 0..=n {
            slopes[i] = g(i as f64 * step);
        }
        for i in 0..n {
            let lo = i as f64 * step;
            let (v, _) = crate::numerics::quad::gk21(&g, lo, lo + step);
            values[i + 1] = values[i] + v;
        }
        let limit = values[n];
        Ok(Self {
            table: HermiteTable {
                start: 0.0,
                step,
                values,
                slopes,
            },
            limit,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.table.eval(x.abs()).unwrap_or(self.limit)
    }

    pub fn limit(&self) -> f64 {
        self.limit
    }

    pub fn extent(&self) -> f64 {
        self.table.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_derivatives_match_finite_differences() {
        for name in PROFILE_NAMES {
            let p = make_profile(name).unwrap();
            for &t in &[0.1, 0.4, 0.77, 2.0] {
                let h = 1e-5;
                let d1 = (p.sigma(t + h) - p.sigma(t - h)) / (2.0 * h);
                let d2 = (p.sigma1(t + h) - p.sigma1(t - h)) / (2.0 * h);
                assert!((d1 - p.sigma1(t)).abs() < 1e-8, "{name} {t}");
                assert!((d2 - p.sigma2(t)).abs() < 1e-7, "{name} {t}");
            }
            let h = 1e-3;
            let d3 = (p.sigma2(h) - p.sigma2(-h)) / (2.0 * h);
            assert!((d3 - p.sigma3_at_0()).abs() < 1e-4, "{name}");
        }
    }

    #[test]
    fn near_origin_series_is_continuous() {
        for name in PROFILE_NAMES {
            let p = make_profile(name).unwrap();
            let t = 1e-3;
            let below = p.sigma3_at_0() + p.sigma5_at_0() * t * t / 6.0;
            assert!((below - p.sigma2(t) / t).abs() < 1e-10 * below.abs(), "{name}");
            let below = p.sigma1_at_0() + p.sigma3_at_0() * t * t / 6.0;
            assert!((below - p.sigma(t) / t).abs() < 1e-12, "{name}");
        }
    }

    #[test]
    fn bessel_representation() {
        // z K1(z) at z = 1 and 2
        assert!((z_bessel_k1(1.0) - 0.601_907_230_197_234_6).abs() < 1e-13);
        assert!((z_bessel_k1(2.0) - 2.0 * 0.139_865_881_816_522_4).abs() < 1e-13);
        assert!((z_bessel_k1(1e-7) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cheon_shigehara_weights_integrate() {
        let p = PointPotential::cheon_shigehara_with_inner(0.1, 0.5, 1e-3).unwrap();
        let total = quad(
            "comb",
            |x| p.eval(x).unwrap(),
            &[-0.2, -0.1, 0.0, 0.1, 0.2],
            Tolerance::default(),
        )
        .unwrap();
        let expected = 2.0 * (1.0 / 0.5 - 1.0 / 0.1) + 2.0 * (0.5 / 0.01 - 1.0 / 0.1);
        assert!((total - expected).abs() < 1e-9 * expected.abs());
    }

    #[test]
    fn potential_matches_extended_precision_values() {
        let tanh = PointPotential::duality_preserving(MollifierProfile::tanh(), 0.01, 0.5).unwrap();
        let v = tanh.eval(0.02).unwrap();
        assert!((v / -1356.7225654979198225 - 1.0).abs() < 1e-13, "{v}");
        let alg = PointPotential::duality_preserving(make_profile("algebraic").unwrap(), 0.01, 0.5).unwrap();
        let v = alg.eval(0.02).unwrap();
        assert!((v / -1148.6316318036122718 - 1.0).abs() < 1e-13, "{v}");
    }

    #[test]
    fn potential_is_even_and_finite_at_origin() {
        let p = PointPotential::duality_preserving(MollifierProfile::tanh(), 0.01, 0.5).unwrap();
        // -2 beta / (a^2 (a + beta)) from sigma'''(0) = -2
        let v0 = p.eval(0.0).unwrap();
        assert!((v0 / (-1.0 / (1e-4 * 0.51)) - 1.0).abs() < 1e-12, "{v0}");
        assert_eq!(p.eval(0.013).unwrap(), p.eval(-0.013).unwrap());
    }

    #[test]
    fn f_function_limit_matches_direct_integral() {
        let p = MollifierProfile::tanh();
        let f = FFunction::new(&p).unwrap();
        assert!((f.limit() - p.f_limit().unwrap()).abs() < 1e-11);
        // transform of sigma' is 2 (1 - pi^2 z^2 / 24 + ...) near the origin
        let x: f64 = 1e-2;
        let series = x * x - std::f64::consts::PI.powi(2) * x.powi(4) / 48.0;
        assert!((f.eval(x) - series).abs() < 1e-12);
    }
}

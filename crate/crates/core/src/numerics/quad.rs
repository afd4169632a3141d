//! Adaptive Gauss-Kronrod (10/21 point) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_808_690_730_307,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-13,
            rel: 1e-11,
            max_intervals: 4000,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// One 21-point Kronrod panel; returns (value, |K21 - G10|).
pub fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).abs();
    (value, error)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive integration over the panels delimited by `points`
/// (sorted, at least two entries). On failure the best estimate is
/// returned in the `Err` variant.
pub fn integrate_points<F: Fn(f64) -> f64>(
    f: &F,
    points: &[f64],
    tol: Tolerance,
) -> std::result::Result<QuadEstimate, QuadEstimate> {
    let mut heap = BinaryHeap::new();
    let mut done: Vec<Panel> = Vec::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            let (value, error) = gk21(f, w[0], w[1]);
            heap.push(Panel {
                a: w[0],
                b: w[1],
                value,
                error,
            });
        }
    }
    let total = |heap: &BinaryHeap<Panel>, done: &[Panel]| -> (f64, f64) {
        let mut parts: Vec<(f64, f64, f64)> = heap
            .iter()
            .chain(done.iter())
            .map(|p| (p.a, p.value, p.error))
            .collect();
        parts.sort_by(|x, y| x.0.total_cmp(&y.0));
        let v = pairwise_sum(&parts.iter().map(|p| p.1).collect::<Vec<_>>());
        let e: f64 = parts.iter().map(|p| p.2).sum();
        (v, e)
    };
    loop {
        let (value, error) = total(&heap, &done);
        let n = heap.len() + done.len();
        if !value.is_finite() || !error.is_finite() {
            return Err(QuadEstimate {
                value,
                error: f64::INFINITY,
                intervals: n,
            });
        }
        if error <= tol.abs.max(tol.rel * value.abs()) {
            return Ok(QuadEstimate {
                value,
                error,
                intervals: n,
            });
        }
        if n >= tol.max_intervals {
            return Err(QuadEstimate {
                value,
                error,
                intervals: n,
            });
        }
        let Some(worst) = heap.pop() else {
            return Err(QuadEstimate {
                value,
                error,
                intervals: n,
            });
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // cannot subdivide further, keep as is
            done.push(worst);
            continue;
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk21(f, a, b);
            heap.push(Panel { a, b, value, error });
        }
    }
}

pub fn integrate<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> std::result::Result<QuadEstimate, QuadEstimate> {
    if b < a {
        return integrate(f, b, a, tol).map(negate).map_err(negate);
    }
    integrate_points(f, &[a, b], tol)
}

fn negate(mut q: QuadEstimate) -> QuadEstimate {
    q.value = -q.value;
    q
}

/// Integral over [a, inf) via x = a + t/(1-t).
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    tol: Tolerance,
) -> std::result::Result<QuadEstimate, QuadEstimate> {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - t;
        let v = f(a + t / s) / (s * s);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(&g, 0.0, 1.0, tol)
}

/// Result-returning wrapper naming the sub-integral on failure.
pub fn quad<F: Fn(f64) -> f64>(context: &str, f: F, points: &[f64], tol: Tolerance) -> Result<f64> {
    integrate_points(&f, points, tol)
        .map(|q| q.value)
        .map_err(|q| Error::QuadratureFailure {
            context: context.to_string(),
            estimate: q.error,
        })
}

/// Cauchy principal value of the integral of g(y)/(y - pole) over [lo, hi]
/// with lo < pole < hi, by subtraction of g(pole).
pub fn principal_value<F: Fn(f64) -> f64>(
    context: &str,
    g: F,
    lo: f64,
    hi: f64,
    pole: f64,
    tol: Tolerance,
) -> Result<f64> {
    let g0 = g(pole);
    let h = |y: f64| {
        let d = y - pole;
        if d == 0.0 {
            0.0
        } else {
            (g(y) - g0) / d
        }
    };
    let regular = quad(context, h, &[lo, pole, hi], tol)?;
    Ok(regular + g0 * ((hi - pole) / (pole - lo)).ln())
}

/// Pairwise summation (deterministic order).
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        let mut s = 0.0;
        let mut c = 0.0;
        for &x in v {
            let y = x - c;
            let t = s + y;
            c = (t - s) - y;
            s = t;
        }
        return s;
    }
    let m = v.len() / 2;
    pairwise_sum(&v[..m]) + pairwise_sum(&v[m..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        let k: f64 = WGK[10] + 2.0 * WGK[..10].iter().sum::<f64>();
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((k - 2.0).abs() < 1e-15);
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn kronrod_exact_for_degree_31() {
        let (v, _) = gk21(&|x: f64| x.powi(30) + x.powi(31), -1.0, 1.0);
        assert!((v - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let q = integrate(&|x: f64| x.ln(), 0.0, 1.0, Tolerance::default()).unwrap();
        assert!((q.value + 1.0).abs() < 1e-10);
    }

    #[test]
    fn semi_infinite_gaussian() {
        let q = integrate_semi_infinite(&|x: f64| (-x * x).exp(), 0.0, Tolerance::default()).unwrap();
        assert!((q.value - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-11);
    }

    #[test]
    fn principal_value_of_reciprocal() {
        // PV of 1/(y - 0.3) over [0, 1]
        let v = principal_value("pv", |_| 1.0, 0.0, 1.0, 0.3, Tolerance::default()).unwrap();
        assert!((v - (0.7f64 / 0.3).ln()).abs() < 1e-13);
    }

    #[test]
    fn reports_failure() {
        let tol = Tolerance {
            abs: 1e-15,
            rel: 1e-15,
            max_intervals: 4,
        };
        assert!(integrate(&|x: f64| (1.0 / x).sin(), 1e-4, 1.0, tol).is_err());
    }
}

//! Gridded calculus: cumulative integration, finite-difference weights,
//! Hermite interpolation and refined grids.

/// Fornberg's algorithm: weights for derivatives 0..=m at `z` from nodes `x`.
pub fn fd_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

fn stencil(i: usize, n: usize, width: usize) -> std::ops::Range<usize> {
    let w = width.min(n);
    let half = w / 2;
    let start = i.saturating_sub(half).min(n - w);
    start..start + w
}

/// First and second derivatives of sampled data with `width`-point stencils.
pub fn derivatives(x: &[f64], f: &[f64], width: usize) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 0..n {
        let r = stencil(i, n, width);
        let w = fd_weights(x[i], &x[r.clone()], 2);
        let (mut s1, mut s2) = (0.0, 0.0);
        for (j, idx) in r.enumerate() {
            s1 += w[1][j] * f[idx];
            s2 += w[2][j] * f[idx];
        }
        d1[i] = s1;
        d2[i] = s2;
    }
    (d1, d2)
}

/// Derivatives of data with definite parity about x = 0, using the mirrored
/// samples so that stencils near the origin stay centred. `x[0]` must be 0.
pub fn derivatives_with_parity(x: &[f64], f: &[f64], width: usize, odd: bool) -> (Vec<f64>, Vec<f64>) {
    let half = width / 2;
    let n = x.len();
    let sign = if odd { -1.0 } else { 1.0 };
    let mut xe = Vec::with_capacity(n + half);
    let mut fe = Vec::with_capacity(n + half);
    for i in (1..=half.min(n - 1)).rev() {
        xe.push(-x[i]);
        fe.push(sign * f[i]);
    }
    let shift = xe.len();
    xe.extend_from_slice(x);
    fe.extend_from_slice(f);
    let (d1, d2) = derivatives(&xe, &fe, width);
    (d1[shift..].to_vec(), d2[shift..].to_vec())
}

/// Cumulative integral of sampled f from x[0], exact for local cubics.
pub fn cumulative(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n < 4 {
        for i in 1..n {
            out[i] = out[i - 1] + 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]);
        }
        return out;
    }
    let g = 0.5 / 3f64.sqrt();
    for i in 0..n - 1 {
        let start = if i == 0 { 0 } else { (i - 1).min(n - 4) };
        let xs = &x[start..start + 4];
        let fs = &f[start..start + 4];
        let (lo, hi) = (x[i], x[i + 1]);
        let mid = 0.5 * (lo + hi);
        let h = hi - lo;
        let p1 = mid - g * h;
        let p2 = mid + g * h;
        out[i + 1] = out[i] + 0.5 * h * (lagrange4(xs, fs, p1) + lagrange4(xs, fs, p2));
    }
    out
}

fn lagrange4(xs: &[f64], fs: &[f64], t: f64) -> f64 {
    let mut s = 0.0;
    for j in 0..4 {
        let mut l = 1.0;
        for m in 0..4 {
            if m != j {
                l *= (t - xs[m]) / (xs[j] - xs[m]);
            }
        }
        s += l * fs[j];
    }
    s
}

/// Piecewise cubic Hermite interpolant on a uniform table.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl HermiteTable {
    /// Returns the value at `t`, or `None` outside the table.
    pub fn eval(&self, t: f64) -> Option<f64> {
        let u = (t - self.start) / self.step;
        let last = self.values.len() - 1;
        if !(0.0..=last as f64).contains(&u) {
            return None;
        }
        let i = (u.floor() as usize).min(last - 1);
        let s = u - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.step, self.slopes[i + 1] * self.step);
        let s2 = s * s;
        let s3 = s2 * s;
        Some(
            (2.0 * s3 - 3.0 * s2 + 1.0) * y0
                + (s3 - 2.0 * s2 + s) * m0
                + (-2.0 * s3 + 3.0 * s2) * y1
                + (s3 - s2) * m1,
        )
    }

    pub fn end(&self) -> f64 {
        self.start + self.step * (self.values.len() - 1) as f64
    }
}

/// Grid on [0, x0]: uniform spacing `h_core` up to `core`, then spacing
/// growing geometrically by `growth` until `h_outer`, then uniform.
pub fn graded_grid(x0: f64, core: f64, h_core: f64, growth: f64, h_outer: f64) -> Vec<f64> {
    let mut x = vec![0.0];
    let core = core.min(x0).max(0.0);
    // with no core the geometric part starts from h_core itself
    let mut h = h_core / growth;
    if core > 0.0 {
        let n_core = (core / h_core).ceil() as usize;
        for i in 1..=n_core {
            x.push(core * i as f64 / n_core as f64);
        }
        h = core / n_core as f64;
    }
    let mut last = core;
    let h_outer = h_outer.max(h);
    while last < x0 {
        h = (h * growth).min(h_outer);
        let remaining = x0 - last;
        if remaining <= h * 1.5 {
            if remaining > h {
                x.push(last + 0.5 * remaining);
            }
            x.push(x0);
            break;
        }
        last += h;
        x.push(last);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_weights_centered_second_derivative() {
        let w = fd_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_eq!(w[2], vec![1.0, -2.0, 1.0]);
        assert_eq!(w[1], vec![-0.5, 0.0, 0.5]);
    }

    #[test]
    fn cumulative_is_exact_for_cubics() {
        let x: Vec<f64> = (0..30).map(|i| (i as f64 * 0.1).powf(1.3)).collect();
        let f: Vec<f64> = x.iter().map(|t| 1.0 + t - 2.0 * t * t + t.powi(3)).collect();
        let c = cumulative(&x, &f);
        for (t, v) in x.iter().zip(&c) {
            let exact = t + t * t / 2.0 - 2.0 * t.powi(3) / 3.0 + t.powi(4) / 4.0;
            assert!((v - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_of_sine() {
        let x = graded_grid(1.0, 0.1, 0.001, 1.02, 0.005);
        let f: Vec<f64> = x.iter().map(|t| t.sin()).collect();
        let (d1, d2) = derivatives_with_parity(&x, &f, 5, true);
        for i in 0..x.len() {
            assert!((d1[i] - x[i].cos()).abs() < 1e-8, "{}", x[i]);
            assert!((d2[i] + x[i].sin()).abs() < 1e-5, "{}", x[i]);
        }
    }

    #[test]
    fn hermite_reproduces_cubic() {
        let step = 0.25;
        let xs: Vec<f64> = (0..9).map(|i| i as f64 * step).collect();
        let table = HermiteTable {
            start: 0.0,
            step,
            values: xs.iter().map(|t| t.powi(3) - t).collect(),
            slopes: xs.iter().map(|t| 3.0 * t * t - 1.0).collect(),
        };
        let v = table.eval(1.3).unwrap();
        assert!((v - (1.3f64.powi(3) - 1.3)).abs() < 1e-13);
        assert!(table.eval(2.5).is_none());
    }

    #[test]
    fn graded_grid_is_increasing_and_ends_at_x0() {
        let g = graded_grid(1.0, 0.1, 0.002, 1.05, 0.01);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn graded_grid_without_core_terminates() {
        let x = graded_grid(0.5, 0.0, 1e-3, 1.05, 0.01);
        assert_eq!(*x.last().unwrap(), 0.5);
        assert!(x.windows(2).all(|w| w[1] > w[0]));
        assert!((x[1] - 1e-3).abs() < 1e-15);
    }
}

//! Dormand-Prince 5(4) integrator with step-size control.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            max_steps: 5_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Stateful stepper; the last accepted step size is carried between calls
/// so consecutive output intervals do not restart from a tiny step.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub opts: OdeOptions,
    h: f64,
    pub steps: usize,
}

impl Dopri5 {
    pub fn new(opts: OdeOptions) -> Self {
        Self {
            opts,
            h: 0.0,
            steps: 0,
        }
    }

    /// Advances `y` from `x` to `x_end` with steps no larger than `max_step`.
    pub fn advance<const N: usize, F>(
        &mut self,
        f: &F,
        mut x: f64,
        mut y: [f64; N],
        x_end: f64,
        max_step: f64,
    ) -> Result<[f64; N]>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let span = x_end - x;
        if span <= 0.0 {
            return Ok(y);
        }
        if self.h <= 0.0 {
            self.h = (span * 0.1).min(max_step);
        }
        let mut k = [[0.0; N]; 7];
        k[0] = f(x, &y);
        loop {
            let remaining = x_end - x;
            if remaining <= 1e-15 * x_end.abs().max(1.0) {
                return Ok(y);
            }
            let mut h = self.h.min(max_step);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let mut ys = [0.0; N];
            for s in 1..7 {
                for i in 0..N {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += h * A[s][j] * kj[i];
                    }
                    ys[i] = acc;
                }
                k[s] = f(x + C[s] * h, &ys);
            }
            // ys now holds the 5th order solution (row 7 equals b)
            let mut err = 0.0;
            for i in 0..N {
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    e += E[j] * kj[i];
                }
                let scale = self.opts.atol + self.opts.rtol * y[i].abs().max(ys[i].abs());
                err += (h * e / scale).powi(2);
            }
            let err = (err / N as f64).sqrt();
            if !err.is_finite() {
                self.h = h * 0.1;
            } else if err <= 1.0 {
                x = if last { x_end } else { x + h };
                y = ys;
                k[0] = k[6];
                self.steps += 1;
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || factor < 1.0 {
                    self.h = h * factor;
                }
                if last {
                    return Ok(y);
                }
            } else {
                self.h = h * (0.9 * err.powf(-0.2)).max(0.1);
            }
            if self.h < 1e-14 * x.abs().max(span) {
                return Err(Error::StepSizeUnderflow { x, h: self.h });
            }
            if self.steps > self.opts.max_steps {
                return Err(Error::StepSizeUnderflow { x, h: self.h });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let f = |_x: f64, y: &[f64; 2]| [y[1], -y[0]];
        let mut s = Dopri5::new(OdeOptions {
            rtol: 1e-12,
            atol: 1e-12,
            ..Default::default()
        });
        let mut y = [0.0, 1.0];
        let mut x = 0.0;
        for i in 1..=10 {
            let xe = i as f64;
            y = s.advance(&f, x, y, xe, f64::INFINITY).unwrap();
            x = xe;
        }
        assert!((y[0] - 10f64.sin()).abs() < 1e-10);
        assert!((y[1] - 10f64.cos()).abs() < 1e-10);
    }

    #[test]
    fn fifth_order_convergence_on_fixed_steps() {
        // with loose tolerance the controller still lands on the endpoint
        let f = |x: f64, _y: &[f64; 1]| [x.powi(4)];
        let mut s = Dopri5::new(OdeOptions::default());
        let y = s.advance(&f, 0.0, [0.0], 2.0, 0.5).unwrap();
        assert!((y[0] - 32.0 / 5.0).abs() < 1e-12);
    }
}

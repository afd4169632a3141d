//! Linear least squares helpers.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub coeffs: Vec<f64>,
    /// Standard errors from the residual variance (zero when the fit is exact
    /// or has no degrees of freedom).
    pub stderr: Vec<f64>,
    pub max_residual: f64,
    pub rms_residual: f64,
    /// Ratio of extreme singular values of the design matrix.
    pub condition: f64,
}

/// Least squares for `y ~ sum_j c_j * basis_j(x)` using an SVD.
pub fn least_squares(design: &DMatrix<f64>, y: &[f64]) -> Option<LinearFit> {
    let (m, n) = design.shape();
    if m < n || n == 0 {
        return None;
    }
    // column scaling keeps the condition number meaningful
    let scales: Vec<f64> = (0..n)
        .map(|j| design.column(j).norm().max(f64::MIN_POSITIVE))
        .collect();
    let mut scaled = design.clone();
    for (j, s) in scales.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = scaled.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 0.0 {
        return None;
    }
    let rhs = DVector::from_column_slice(y);
    let sol = svd.solve(&rhs, 0.0).ok()?;
    let resid = &rhs - &scaled * &sol;
    let max_residual = resid.amax();
    let rms_residual = (resid.norm_squared() / m as f64).sqrt();
    let dof = m - n;
    let sigma2 = if dof > 0 { resid.norm_squared() / dof as f64 } else { 0.0 };
    let gram = scaled.transpose() * &scaled;
    let inv = gram.try_inverse()?;
    let coeffs: Vec<f64> = (0..n).map(|j| sol[j] / scales[j]).collect();
    let stderr: Vec<f64> = (0..n)
        .map(|j| (sigma2 * inv[(j, j)]).max(0.0).sqrt() / scales[j])
        .collect();
    Some(LinearFit {
        coeffs,
        stderr,
        max_residual,
        rms_residual,
        condition: smax / smin,
    })
}

/// Polynomial fit `y ~ sum_j c_j x^j` for j = 0..=degree.
pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Option<LinearFit> {
    let design = DMatrix::from_fn(x.len(), degree + 1, |i, j| x[i].powi(j as i32));
    least_squares(&design, y)
}

/// Slope of log|y| against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || y.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    polyfit(&lx, &ly, 1).map(|f| f.coeffs[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polyfit_recovers_quadratic() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|t| 1.0 - 2.0 * t + 0.5 * t * t).collect();
        let fit = polyfit(&x, &y, 2).unwrap();
        assert!((fit.coeffs[0] - 1.0).abs() < 1e-12);
        assert!((fit.coeffs[1] + 2.0).abs() < 1e-12);
        assert!((fit.coeffs[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1e-3, 1e-2, 1e-1];
        let y: Vec<f64> = x.iter().map(|t: &f64| 3.0 * t.powi(2)).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 2.0).abs() < 1e-12);
    }
}

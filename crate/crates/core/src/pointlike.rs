//! Connection conditions at a point: interaction matrices, their
//! classification and the jump parameters they induce.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UNIMODULAR_TOL: f64 = 1e-12;

/// e^{i theta} [[a, b], [c, d]] with ad - bc = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct InteractionMatrix {
    pub theta: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

#[derive(Deserialize)]
struct RawMatrix {
    #[serde(default)]
    theta: f64,
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl TryFrom<RawMatrix> for InteractionMatrix {
    type Error = Error;
    fn try_from(r: RawMatrix) -> Result<Self> {
        Self::new(r.theta, r.a, r.b, r.c, r.d)
    }
}

/// Either a transmitting matrix condition or two decoupled walls
/// psi'(0+) = h_plus psi(0+), psi'(0-) = h_minus psi(0-).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum PointInteraction {
    Matrix(InteractionMatrix),
    SeparatedWall { h_plus: f64, h_minus: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Classification {
    PureBoson { gamma: f64 },
    FermionTransparentForBosons { beta: f64 },
    FermionHardcoreBoson { beta: f64 },
    GeneralSymmetric { gamma: f64, beta: f64 },
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpParameters {
    /// psi'(0+) - psi'(0-) = 2 gamma psi(0) on even data.
    pub gamma: f64,
    /// psi(0+) - psi(0-) = 2 beta psi'(0) on odd data.
    pub beta: f64,
}

fn is_zero(x: f64) -> bool {
    x.abs() <= UNIMODULAR_TOL
}

impl InteractionMatrix {
    pub fn new(theta: f64, a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !det.is_finite() || (det - 1.0).abs() > UNIMODULAR_TOL * (1.0 + (a * d).abs() + (b * c).abs()) {
            return Err(Error::NotUnimodular { det });
        }
        Ok(Self { theta, a, b, c, d })
    }

    pub fn identity() -> Self {
        Self::new(0.0, 1.0, 0.0, 0.0, 1.0).expect("unimodular")
    }

    /// [[1, 0], [2 gamma, 1]]: the delta interaction, invisible to fermions.
    pub fn pure_boson(gamma: f64) -> Self {
        Self::new(0.0, 1.0, 0.0, 2.0 * gamma, 1.0).expect("unimodular")
    }

    /// [[1, 2 beta], [0, 1]]: value jump for fermions, transparent for bosons.
    pub fn free_fermion(beta: f64) -> Self {
        Self::new(0.0, 1.0, 2.0 * beta, 0.0, 1.0).expect("unimodular")
    }

    /// [[-1, 0], [-2/beta, -1]]: hard core for bosons, and the same action on
    /// odd data as `free_fermion(beta)`.
    pub fn hardcore_boson(beta: f64) -> Self {
        Self::new(0.0, -1.0, 0.0, -2.0 / beta, -1.0).expect("unimodular")
    }

    /// Symmetric family a = d, theta = 0 with the given jump parameters.
    pub fn symmetric(gamma: f64, beta: f64) -> Result<Self> {
        // a = (1 + beta gamma)/(1 - beta gamma), b = 2 beta/(1 - beta gamma)
        let s = 1.0 - beta * gamma;
        if is_zero(s) {
            return Err(Error::InvalidParameter {
                name: "beta*gamma",
                value: beta * gamma,
                reason: "beta gamma = 1 has no symmetric matrix",
            });
        }
        let a = (1.0 + beta * gamma) / s;
        let b = 2.0 * beta / s;
        let c = 2.0 * gamma / s;
        Self::new(0.0, a, b, c, a)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Removes a phase of pi into the entries.
    fn normalized(&self) -> Self {
        let t = self.theta.rem_euclid(2.0 * PI);
        if (t - PI).abs() < 1e-12 {
            Self {
                theta: 0.0,
                a: -self.a,
                b: -self.b,
                c: -self.c,
                d: -self.d,
            }
        } else if t < 1e-12 || 2.0 * PI - t < 1e-12 {
            Self { theta: 0.0, ..*self }
        } else {
            Self { theta: t, ..*self }
        }
    }

    pub fn apply(&self, psi_minus: Complex64, dpsi_minus: Complex64) -> (Complex64, Complex64) {
        let phase = Complex64::from_polar(1.0, self.theta);
        (
            phase * (self.a * psi_minus + self.b * dpsi_minus),
            phase * (self.c * psi_minus + self.d * dpsi_minus),
        )
    }

    pub fn compose(&self, other: &Self) -> Self {
        // self after other
        Self {
            theta: self.theta + other.theta,
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            theta: -self.theta,
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// Jump parameters read off from the action on even and odd data.
    pub fn jump_parameters(&self) -> JumpParameters {
        let m = self.normalized();
        let gamma = if !is_zero(m.b) {
            (m.a - 1.0) / m.b
        } else if (m.a - 1.0).abs() < 1e-9 {
            0.5 * m.c
        } else {
            f64::INFINITY
        };
        let beta = if !is_zero(1.0 + m.a) {
            m.b / (1.0 + m.a)
        } else if !is_zero(m.c) {
            -2.0 / m.c
        } else {
            f64::INFINITY
        };
        JumpParameters { gamma, beta }
    }

    /// Most specific family first; the identity falls through to the
    /// symmetric family with both parameters zero.
    pub fn classify(&self) -> Result<Classification> {
        let det = self.det();
        if (det - 1.0).abs() > UNIMODULAR_TOL * (1.0 + (self.a * self.d).abs() + (self.b * self.c).abs()) {
            return Err(Error::NotUnimodular { det });
        }
        let m = self.normalized();
        if m.theta != 0.0 || !is_zero(m.a - m.d) {
            return Ok(Classification::General);
        }
        let j = self.jump_parameters();
        let one = |x: f64| is_zero(x - 1.0);
        if one(m.a) && is_zero(m.b) && !is_zero(m.c) {
            return Ok(Classification::PureBoson { gamma: j.gamma });
        }
        if one(m.a) && is_zero(m.c) && !is_zero(m.b) {
            return Ok(Classification::FermionTransparentForBosons { beta: j.beta });
        }
        if is_zero(m.a + 1.0) && is_zero(m.b) {
            return Ok(Classification::FermionHardcoreBoson { beta: j.beta });
        }
        Ok(Classification::GeneralSymmetric {
            gamma: j.gamma,
            beta: j.beta,
        })
    }
}

impl Classification {
    /// A representative matrix of the family, when one is determined.
    pub fn matrix(&self) -> Option<InteractionMatrix> {
        match *self {
            Self::PureBoson { gamma } => Some(InteractionMatrix::pure_boson(gamma)),
            Self::FermionTransparentForBosons { beta } => Some(InteractionMatrix::free_fermion(beta)),
            Self::FermionHardcoreBoson { beta } => Some(InteractionMatrix::hardcore_boson(beta)),
            Self::GeneralSymmetric { gamma, beta } => InteractionMatrix::symmetric(gamma, beta).ok(),
            Self::General => None,
        }
    }
}

impl PointInteraction {
    pub fn classify(&self) -> Result<Option<Classification>> {
        match self {
            Self::Matrix(m) => m.classify().map(Some),
            Self::SeparatedWall { .. } => Ok(None),
        }
    }

    pub fn jump_parameters(&self) -> Option<JumpParameters> {
        match self {
            Self::Matrix(m) => Some(m.jump_parameters()),
            Self::SeparatedWall { .. } => None,
        }
    }

    /// Residual of the connection condition for boundary data on both sides.
    pub fn residual(&self, minus: (Complex64, Complex64), plus: (Complex64, Complex64)) -> f64 {
        match self {
            Self::Matrix(m) => {
                let (p, dp) = m.apply(minus.0, minus.1);
                (p - plus.0).norm().max((dp - plus.1).norm())
            }
            Self::SeparatedWall { h_plus, h_minus } => (plus.1 - *h_plus * plus.0)
                .norm()
                .max((minus.1 - *h_minus * minus.0).norm()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn identity_is_transparent_symmetric() {
        assert_eq!(
            InteractionMatrix::identity().classify().unwrap(),
            Classification::GeneralSymmetric { gamma: 0.0, beta: 0.0 }
        );
    }

    #[test]
    fn free_matrix_jumps_odd_data() {
        let beta = 0.7;
        let s = 1.3;
        let (p, dp) = InteractionMatrix::free_fermion(beta).apply(c(-beta * s), c(s));
        assert!((p - c(beta * s)).norm() < 1e-15);
        assert!((dp - c(s)).norm() < 1e-15);
    }

    #[test]
    fn non_unimodular_rejected() {
        assert!(matches!(
            InteractionMatrix::new(0.0, 2.0, 0.0, 0.0, 1.0),
            Err(Error::NotUnimodular { .. })
        ));
    }

    #[test]
    fn phase_pi_folds_into_entries() {
        let m = InteractionMatrix::new(PI, 1.0, 0.0, 1.0, 1.0).unwrap();
        assert!(matches!(m.classify().unwrap(), Classification::FermionHardcoreBoson { .. }));
    }

    #[test]
    fn general_phase() {
        let m = InteractionMatrix::new(0.3, 1.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(m.classify().unwrap(), Classification::General);
    }

    #[test]
    fn separated_wall_residual() {
        let w = PointInteraction::SeparatedWall { h_plus: 2.0, h_minus: -1.0 };
        let r = w.residual((c(1.0), c(-1.0)), (c(0.5), c(1.0)));
        assert!(r < 1e-15);
        assert!(w.jump_parameters().is_none());
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_space::{Mat2, PhaseSpacePoint, Vec2};

/// Weyl symbol of the system Hamiltonian, with analytic gradient and Hessian.
///
/// Gradients and Hessians are in `(p, q)` ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum HamiltonianModel {
    /// `H = 0`.
    Zero,
    /// `H = a_p p + a_q q`.
    Linear { a_p: f64, a_q: f64 },
    /// `H = p² / 2m`.
    Free { mass: f64 },
    /// `H = ω (p² + q²) / 2`.
    Harmonic { omega: f64 },
    /// `H = ½ xᵀ K x` for a symmetric `K` given row-major in `(p, q)`.
    Quadratic { k: [[f64; 2]; 2] },
    /// `H = p²/2 + a q²/2 + b q⁴/4`.
    Quartic { a: f64, b: f64 },
    /// `H = p²/2 - k cos q`.
    Pendulum { k: f64 },
}

impl HamiltonianModel {
    pub fn harmonic() -> Self {
        HamiltonianModel::Harmonic { omega: 1.0 }
    }

    pub fn quadratic(k: Mat2) -> Self {
        HamiltonianModel::Quadratic { k: [[k[(0, 0)], k[(0, 1)]], [k[(1, 0)], k[(1, 1)]]] }
    }

    pub fn name(&self) -> &'static str {
        match self {
            HamiltonianModel::Zero => "zero",
            HamiltonianModel::Linear { .. } => "linear",
            HamiltonianModel::Free { .. } => "free",
            HamiltonianModel::Harmonic { .. } => "harmonic",
            HamiltonianModel::Quadratic { .. } => "quadratic",
            HamiltonianModel::Quartic { .. } => "quartic",
            HamiltonianModel::Pendulum { .. } => "pendulum",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            HamiltonianModel::Zero => true,
            HamiltonianModel::Linear { a_p, a_q } => a_p.is_finite() && a_q.is_finite(),
            HamiltonianModel::Free { mass } => mass.is_finite() && mass > 0.0,
            HamiltonianModel::Harmonic { omega } => omega.is_finite(),
            HamiltonianModel::Quadratic { k } => {
                k.iter().flatten().all(|v| v.is_finite()) && (k[0][1] - k[1][0]).abs() < 1e-14
            }
            HamiltonianModel::Quartic { a, b } => a.is_finite() && b.is_finite(),
            HamiltonianModel::Pendulum { k } => k.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid {} Hamiltonian: {self:?}", self.name())))
        }
    }

    /// True when the Hessian is constant (polynomial of degree at most two).
    pub fn is_quadratic(&self) -> bool {
        !matches!(self, HamiltonianModel::Quartic { b, .. } if *b != 0.0)
            && !matches!(self, HamiltonianModel::Pendulum { k } if *k != 0.0)
    }

    fn k_matrix(k: &[[f64; 2]; 2]) -> Mat2 {
        Mat2::new(k[0][0], k[0][1], k[1][0], k[1][1])
    }

    pub fn value(&self, x: PhaseSpacePoint) -> f64 {
        let (p, q) = (x.p, x.q);
        match self {
            HamiltonianModel::Zero => 0.0,
            HamiltonianModel::Linear { a_p, a_q } => a_p * p + a_q * q,
            HamiltonianModel::Free { mass } => p * p / (2.0 * mass),
            HamiltonianModel::Harmonic { omega } => 0.5 * omega * (p * p + q * q),
            HamiltonianModel::Quadratic { k } => {
                let v = x.to_vec2();
                0.5 * v.dot(&(Self::k_matrix(k) * v))
            }
            HamiltonianModel::Quartic { a, b } => 0.5 * p * p + 0.5 * a * q * q + 0.25 * b * q.powi(4),
            HamiltonianModel::Pendulum { k } => 0.5 * p * p - k * q.cos(),
        }
    }

    /// `(∂H/∂p, ∂H/∂q)`.
    pub fn gradient(&self, x: PhaseSpacePoint) -> Vec2 {
        let (p, q) = (x.p, x.q);
        match self {
            HamiltonianModel::Zero => Vec2::zeros(),
            HamiltonianModel::Linear { a_p, a_q } => Vec2::new(*a_p, *a_q),
            HamiltonianModel::Free { mass } => Vec2::new(p / mass, 0.0),
            HamiltonianModel::Harmonic { omega } => Vec2::new(omega * p, omega * q),
            HamiltonianModel::Quadratic { k } => Self::k_matrix(k) * x.to_vec2(),
            HamiltonianModel::Quartic { a, b } => Vec2::new(p, a * q + b * q.powi(3)),
            HamiltonianModel::Pendulum { k } => Vec2::new(p, k * q.sin()),
        }
    }

    pub fn hessian(&self, x: PhaseSpacePoint) -> Mat2 {
        match self {
            HamiltonianModel::Zero | HamiltonianModel::Linear { .. } => Mat2::zeros(),
            HamiltonianModel::Free { mass } => Mat2::new(1.0 / mass, 0.0, 0.0, 0.0),
            HamiltonianModel::Harmonic { omega } => Mat2::identity() * *omega,
            HamiltonianModel::Quadratic { k } => Self::k_matrix(k),
            HamiltonianModel::Quartic { a, b } => Mat2::new(1.0, 0.0, 0.0, a + 3.0 * b * x.q * x.q),
            HamiltonianModel::Pendulum { k } => Mat2::new(1.0, 0.0, 0.0, k * x.q.cos()),
        }
    }

    /// The Hamiltonian seen in the coordinates `x' = C x` of a linear
    /// symplectic change, `H'(x') = H(C⁻¹ x')`. Only available for
    /// homogeneous quadratic families.
    pub fn transformed(&self, c: &Mat2) -> Result<HamiltonianModel> {
        let k = match self {
            HamiltonianModel::Zero => Mat2::zeros(),
            HamiltonianModel::Free { .. }
            | HamiltonianModel::Harmonic { .. }
            | HamiltonianModel::Quadratic { .. } => self.hessian(PhaseSpacePoint::ORIGIN),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "linear change of coordinates only supported for homogeneous quadratic Hamiltonians, not {}",
                    other.name()
                )))
            }
        };
        let c_inv = c
            .try_inverse()
            .ok_or_else(|| Error::InvalidParameter("singular coordinate change".into()))?;
        let k2 = c_inv.transpose() * k * c_inv;
        let sym = (k2 + k2.transpose()) * 0.5;
        Ok(HamiltonianModel::quadratic(sym))
    }
}

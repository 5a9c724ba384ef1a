//! Markovian open evolution with Lindblad operators linear in `(p̂, q̂)`.
//!
//! A channel `L̂ = (l' + i l'')·x̂` contributes a dissipation coefficient
//! `γ = l'' ∧ l'` to the centre motion `ẋ = J∇H(x) - γ x` and a diffusion
//! matrix `l' l'ᵀ + l'' l''ᵀ` to the decoherence of chords.

mod decoherence;
mod evolve;
mod hamiltonian;
mod trajectory;

pub use decoherence::{
    decoherence_matrix, decohered_reflection_symbol, phi_at_end, positivity_time, DecoherenceMatrix,
    PositivityOptions,
};
pub use evolve::{evolve_chord_function, evolve_reflections, EvolvedChordFunction, WeightedSamples};
pub use hamiltonian::HamiltonianModel;
pub use trajectory::{centre_trajectory, integrate_centre, CentreTrajectory, Flow};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_space::{skew_product, symplectic_matrix, Mat2, PhaseSpacePoint, Vec2};

/// One linear Lindblad operator `L̂ = l'·x̂ + i l''·x̂`, vectors in `(p, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LindbladChannel {
    pub l_re: [f64; 2],
    pub l_im: [f64; 2],
}

impl LindbladChannel {
    pub fn new(l_re: [f64; 2], l_im: [f64; 2]) -> Self {
        LindbladChannel { l_re, l_im }
    }

    /// Hermitian channel `L̂ = l'·x̂`.
    pub fn hermitian(l_re: [f64; 2]) -> Self {
        LindbladChannel { l_re, l_im: [0.0, 0.0] }
    }

    /// Amplitude damping `L̂ = √κ (q̂ + i p̂)`, for which `γ = κ`.
    pub fn damping(kappa: f64) -> Self {
        let c = kappa.sqrt();
        LindbladChannel { l_re: [0.0, c], l_im: [c, 0.0] }
    }

    pub fn re(&self) -> Vec2 {
        Vec2::new(self.l_re[0], self.l_re[1])
    }

    pub fn im(&self) -> Vec2 {
        Vec2::new(self.l_im[0], self.l_im[1])
    }

    pub fn validate(&self) -> Result<()> {
        if self.l_re.iter().chain(&self.l_im).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("non-finite Lindblad channel {self:?}")))
        }
    }

    /// `γ = l'' ∧ l'`.
    pub fn dissipation_coefficient(&self) -> f64 {
        skew_product(self.im(), self.re())
    }

    /// `l' l'ᵀ + l'' l''ᵀ`.
    pub fn diffusion(&self) -> Mat2 {
        let (a, b) = (self.re(), self.im());
        a * a.transpose() + b * b.transpose()
    }

    /// The channel expressed in coordinates `x' = C x`.
    pub fn transformed(&self, c: &Mat2) -> Result<LindbladChannel> {
        let c_inv_t = c
            .try_inverse()
            .ok_or_else(|| Error::InvalidParameter("singular coordinate change".into()))?
            .transpose();
        let (a, b) = (c_inv_t * self.re(), c_inv_t * self.im());
        Ok(LindbladChannel { l_re: [a[0], a[1]], l_im: [b[0], b[1]] })
    }
}

pub fn dissipation_coefficient(channel: &LindbladChannel) -> f64 {
    channel.dissipation_coefficient()
}

/// Sum of `γ` over all channels.
pub fn total_dissipation(channels: &[LindbladChannel]) -> f64 {
    channels.iter().map(LindbladChannel::dissipation_coefficient).sum()
}

/// Sum of the diffusion matrices over all channels.
pub fn total_diffusion(channels: &[LindbladChannel]) -> Mat2 {
    channels.iter().fold(Mat2::zeros(), |acc, c| acc + c.diffusion())
}

/// Double-phase-space Hamiltonian
/// `ℍ(x, y) = H(x - J y / 2) - H(x + J y / 2) - γ x·y`.
pub fn double_hamiltonian(h: &HamiltonianModel, gamma: f64, x: PhaseSpacePoint, y: Vec2) -> f64 {
    let jy = symplectic_matrix() * y;
    let xv = x.to_vec2();
    h.value(PhaseSpacePoint::from_vec2(xv - jy * 0.5)) - h.value(PhaseSpacePoint::from_vec2(xv + jy * 0.5))
        - gamma * xv.dot(&y)
}

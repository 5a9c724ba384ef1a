use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Checked, Error, Result, Warning};
use crate::phase_space::{CenteredGrid, ChordGrid, ChordVector, Mat2, PhaseSpacePoint, WignerGrid};

use super::decoherence::{decohered_reflection_symbol, phi_at_end};
use super::{centre_trajectory, HamiltonianModel, LindbladChannel};

/// Tolerance on the change of an evolved chord function when the sample
/// set is halved.
pub const SAMPLE_TOLERANCE: f64 = 1e-6;

/// A discrete initial classical distribution: points with weights summing
/// to the total mass.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSamples {
    pub points: Vec<PhaseSpacePoint>,
    pub weights: Vec<f64>,
}

impl WeightedSamples {
    pub fn new(points: Vec<PhaseSpacePoint>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "need matching non-empty points and weights, got {} and {}",
                points.len(),
                weights.len()
            )));
        }
        if !points.iter().all(|p| p.is_finite()) || !weights.iter().all(|w| w.is_finite()) {
            return Err(Error::InvalidParameter("non-finite sample".into()));
        }
        Ok(WeightedSamples { points, weights })
    }

    /// Grid nodes weighted by `W(x) ΔA`; exact zeros are dropped.
    pub fn from_wigner_grid(w: &WignerGrid) -> Result<Self> {
        let area = w.grid.cell_area();
        let n = w.grid.points;
        let (points, weights) = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| w.at(i, j) != 0.0)
            .map(|(i, j)| (w.grid.point(i, j), w.at(i, j) * area))
            .unzip();
        Self::new(points, weights)
    }

    /// Equal weights `1/n`, as for a curve sampled uniformly in its angle.
    pub fn uniform(points: Vec<PhaseSpacePoint>) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        let weights = vec![w; points.len()];
        Self::new(points, weights)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// A superposition of attenuated reflections: evolved centres `x_i(t)`,
/// weights and per-sample decoherence matrices.
#[derive(Debug, Clone)]
pub struct EvolvedChordFunction {
    pub hbar: f64,
    pub t: f64,
    pub centres: Vec<PhaseSpacePoint>,
    pub weights: Vec<f64>,
    pub phis: Vec<Mat2>,
}

impl EvolvedChordFunction {
    /// `(2πħ)⁻¹ Σ w_i exp(i x_i∧ξ/ħ − ξ·Φ_i ξ / 2ħ)`.
    pub fn value(&self, xi: ChordVector) -> Complex64 {
        self.partial_value(xi, 1)
    }

    /// Same sum over every `stride`-th sample, reweighted by `stride`.
    fn partial_value(&self, xi: ChordVector, stride: usize) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in (0..self.centres.len()).step_by(stride) {
            acc += decohered_reflection_symbol(self.centres[k], xi, &self.phis[k], self.hbar) * self.weights[k];
        }
        let norm: f64 = self.weights.iter().sum();
        let sub: f64 = self.weights.iter().step_by(stride).sum();
        let rescale = if stride == 1 || sub == 0.0 { 1.0 } else { norm / sub };
        acc * rescale / (2.0 * PI * self.hbar)
    }
}

/// Carries every sample along its centre trajectory and computes its
/// decoherence matrix at the final centre.
pub fn evolve_reflections(
    samples: &WeightedSamples,
    h: &HamiltonianModel,
    channels: &[LindbladChannel],
    t: f64,
    dt: f64,
    hbar: f64,
) -> Result<Checked<EvolvedChordFunction>> {
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::InvalidParameter(format!("hbar must be > 0, got {hbar}")));
    }
    h.validate()?;
    for c in channels {
        c.validate()?;
    }
    let per_sample: Vec<(PhaseSpacePoint, Mat2, Option<f64>)> = samples
        .points
        .par_iter()
        .map(|&x0| {
            let tr = centre_trajectory(h, channels, x0, t, dt)?;
            let step_change = tr.warnings.iter().find_map(|w| match w {
                Warning::StepSize { change } => Some(*change),
                _ => None,
            });
            Ok((tr.value.end(), phi_at_end(&tr.value, channels), step_change))
        })
        .collect::<Result<_>>()?;

    let mut warnings = Vec::new();
    let worst = per_sample.iter().filter_map(|s| s.2).fold(None, |m: Option<f64>, c| Some(m.map_or(c, |m| m.max(c))));
    if let Some(change) = worst {
        warnings.push(Warning::StepSize { change });
    }
    let (centres, phis) = per_sample.into_iter().map(|(x, p, _)| (x, p)).unzip();
    Ok(Checked::new(
        EvolvedChordFunction { hbar, t, centres, weights: samples.weights.clone(), phis },
        warnings,
    ))
}

/// Evolved chord function on `xi_grid`, with a sample-convergence check
/// against the sum over every other sample on the central half of the grid.
pub fn evolve_chord_function(
    samples: &WeightedSamples,
    h: &HamiltonianModel,
    channels: &[LindbladChannel],
    t: f64,
    dt: f64,
    xi_grid: &CenteredGrid,
) -> Result<Checked<ChordGrid>> {
    xi_grid.validate()?;
    let (evolved, mut warnings) = evolve_reflections(samples, h, channels, t, dt, xi_grid.hbar)?.into_parts();
    let chi = ChordGrid::sample(*xi_grid, |xi| evolved.value(xi))?;
    if samples.len() >= 2 {
        // a stride-2 subset of grid samples only represents the central half of the chord range
        let (lo, hi) = (xi_grid.points / 4, xi_grid.points - xi_grid.points / 4);
        let change = (lo..hi)
            .into_par_iter()
            .map(|i| {
                (lo..hi)
                    .map(|j| (evolved.partial_value(xi_grid.chord(i, j), 2) - chi.at(i, j)).norm())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        if change > SAMPLE_TOLERANCE {
            warnings.push(Warning::Quadrature { change });
        }
    }
    Ok(Checked::new(chi, warnings))
}

//! Coherent states, Lagrangian-curve (WKB) states and their mixtures, in
//! the chord and centre representations.

mod branches;
mod curve;

pub use branches::{branches_at, default_caustic_threshold, Branch, BranchData};
pub use curve::{evolve_curve_classically, CurveFamily, LagrangianCurve, MIN_CURVE_SAMPLES};

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Checked, Error, Result, Warning};
use crate::phase_space::{CenteredGrid, ChordGrid, ChordVector, PhaseSpacePoint, WignerGrid};

/// Quadrature tolerance for the angle integral of a curve state.
pub const CURVE_QUADRATURE_TOLERANCE: f64 = 1e-8;

/// Anything with a chord representation `χ(ξ)`.
pub trait ChordFunction: Send + Sync {
    fn hbar(&self) -> f64;

    fn value(&self, xi: ChordVector) -> Complex64;

    fn sample_on(&self, grid: &CenteredGrid) -> Result<ChordGrid> {
        if (grid.hbar - self.hbar()).abs() > 1e-14 * self.hbar() {
            return Err(Error::InvalidGrid(format!(
                "grid hbar {} differs from state hbar {}",
                grid.hbar,
                self.hbar()
            )));
        }
        ChordGrid::sample(*grid, |xi| self.value(xi))
    }
}

/// Gaussian coherent state centred at `eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentState {
    pub eta: PhaseSpacePoint,
    pub omega: f64,
    pub hbar: f64,
}

impl CoherentState {
    pub fn new(eta: PhaseSpacePoint, hbar: f64) -> Result<Self> {
        Self::with_width(eta, 1.0, hbar)
    }

    /// Only the symmetric width `omega = 1` is supported.
    pub fn with_width(eta: PhaseSpacePoint, omega: f64, hbar: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidParameter(format!("hbar must be > 0, got {hbar}")));
        }
        if !eta.is_finite() {
            return Err(Error::InvalidParameter("non-finite coherent-state centre".into()));
        }
        if omega != 1.0 {
            return Err(Error::InvalidParameter(format!("coherent-state width {omega} unsupported; use 1")));
        }
        Ok(CoherentState { eta, omega, hbar })
    }

    pub fn wigner(&self, x: PhaseSpacePoint) -> f64 {
        coherent_wigner(self, x)
    }

    pub fn wigner_grid(&self, grid: &CenteredGrid) -> Result<WignerGrid> {
        WignerGrid::sample(*grid, |x| self.wigner(x))
    }
}

impl ChordFunction for CoherentState {
    fn hbar(&self) -> f64 {
        self.hbar
    }

    fn value(&self, xi: ChordVector) -> Complex64 {
        coherent_chord_function(self, xi)
    }
}

/// `(2πħ)⁻¹ exp(i η∧ξ/ħ − ξ²/4ħ)`.
pub fn coherent_chord_function(state: &CoherentState, xi: ChordVector) -> Complex64 {
    let h = state.hbar;
    Complex64::from_polar((-xi.norm_sq() / (4.0 * h)).exp(), state.eta.wedge(xi) / h) / (2.0 * PI * h)
}

/// `(πħ)⁻¹ exp(−(x−η)²/ħ)`.
pub fn coherent_wigner(state: &CoherentState, x: PhaseSpacePoint) -> f64 {
    let h = state.hbar;
    (-(x - state.eta).norm_sq() / h).exp() / (PI * h)
}

/// Short-chord chord function of a curve state: the angle average of
/// reflection symbols over the curve.
#[derive(Debug, Clone)]
pub struct CurveChordFunction {
    pub points: Vec<PhaseSpacePoint>,
    pub hbar: f64,
}

impl CurveChordFunction {
    pub fn new(curve: &LagrangianCurve, hbar: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidParameter(format!("hbar must be > 0, got {hbar}")));
        }
        Ok(CurveChordFunction { points: curve.samples().to_vec(), hbar })
    }

    fn strided(&self, xi: ChordVector, stride: usize) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut n = 0usize;
        for x in self.points.iter().step_by(stride) {
            acc += Complex64::from_polar(1.0, x.wedge(xi) / self.hbar);
            n += 1;
        }
        acc / (n as f64 * 2.0 * PI * self.hbar)
    }

    /// Value together with the change seen when every other sample is
    /// dropped.
    pub fn checked_value(&self, xi: ChordVector) -> Checked<Complex64> {
        let full = self.strided(xi, 1);
        let change = (self.strided(xi, 2) - full).norm() * 2.0 * PI * self.hbar;
        let warnings = if change > CURVE_QUADRATURE_TOLERANCE {
            vec![Warning::Quadrature { change }]
        } else {
            Vec::new()
        };
        Checked::new(full, warnings)
    }
}

impl ChordFunction for CurveChordFunction {
    fn hbar(&self) -> f64 {
        self.hbar
    }

    fn value(&self, xi: ChordVector) -> Complex64 {
        self.strided(xi, 1)
    }
}

/// `(2πħ)⁻¹ (2π)⁻¹ ∮ exp(i x(θ)∧ξ/ħ) dθ` by the trapezoidal rule over the
/// curve samples.
pub fn wkb_short_chord_function(curve: &LagrangianCurve, xi: ChordVector, hbar: f64) -> Result<Checked<Complex64>> {
    Ok(CurveChordFunction::new(curve, hbar)?.checked_value(xi))
}

/// A convex combination of states.
pub struct Mixture {
    pub hbar: f64,
    parts: Vec<(f64, Box<dyn ChordFunction>)>,
}

impl Mixture {
    pub fn new(parts: Vec<(f64, Box<dyn ChordFunction>)>) -> Result<Self> {
        let hbar = parts.first().map(|p| p.1.hbar()).ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        if parts.iter().any(|(w, c)| !(w.is_finite() && *w >= 0.0) || (c.hbar() - hbar).abs() > 1e-14 * hbar) {
            return Err(Error::InvalidParameter("mixture weights must be >= 0 and hbar shared".into()));
        }
        let total: f64 = parts.iter().map(|p| p.0).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(Mixture { hbar, parts })
    }
}

impl ChordFunction for Mixture {
    fn hbar(&self) -> f64 {
        self.hbar
    }

    fn value(&self, xi: ChordVector) -> Complex64 {
        self.parts.iter().map(|(w, c)| c.value(xi) * *w).sum()
    }
}

impl ChordFunction for crate::fock::FockDensityMatrix {
    fn hbar(&self) -> f64 {
        self.hbar
    }

    fn value(&self, xi: ChordVector) -> Complex64 {
        self.chord(xi)
    }
}

impl ChordFunction for crate::dynamics::EvolvedChordFunction {
    fn hbar(&self) -> f64 {
        self.hbar
    }

    fn value(&self, xi: ChordVector) -> Complex64 {
        crate::dynamics::EvolvedChordFunction::value(self, xi)
    }
}

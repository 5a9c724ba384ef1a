//! Husimi functions: the Wigner function smoothed by the coherent-state
//! Gaussian, computed by direct convolution, through the chord domain, or
//! from a family of local wavefunction correlations.
//!
//! Grids carry unit total mass, `ρ_H(η) = (2πħ)⁻¹ ⟨η|ρ̂|η⟩`; the coherent
//! expectation itself is `2πħ` times the stored value.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Checked, Error, Result, Warning};
use crate::lwc::{lwc_from_chord, LwcSample, LwcWindow};
use crate::phase_space::{centre_from_chord_onto, CenteredGrid, ChordGrid, ChordVector, PhaseGrid, WignerGrid};
use crate::states::ChordFunction;

pub type HusimiGrid = PhaseGrid<f64>;

/// Relative Wigner mass near the boundary above which a leak is reported.
pub const BOUNDARY_LEAK_TOLERANCE: f64 = 1e-8;

fn gaussian(x: f64, variance: f64) -> f64 {
    (-x * x / (2.0 * variance)).exp() / (2.0 * PI * variance).sqrt()
}

/// Separable Gaussian convolution of `w` with variance `variance` per axis,
/// evaluated on the points of `target`.
fn smooth(w: &WignerGrid, target: &CenteredGrid, variance: f64) -> Result<WignerGrid> {
    target.validate()?;
    let (m, n) = (w.grid.points, target.points);
    let (dp, dq) = (w.grid.p_spacing(), w.grid.q_spacing());
    let gq: Vec<f64> = (0..n * m).map(|k| gaussian(target.q_coord(k / m) - w.grid.q_coord(k % m), variance) * dq).collect();
    let gp: Vec<f64> = (0..n * m).map(|k| gaussian(target.p_coord(k / m) - w.grid.p_coord(k % m), variance) * dp).collect();
    // rows p_i of the source, columns q of the target
    let half: Vec<f64> = (0..m * n)
        .into_par_iter()
        .map(|k| {
            let (i, jq) = (k / n, k % n);
            (0..m).map(|j| w.values[i * m + j] * gq[jq * m + j]).sum()
        })
        .collect();
    let values = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (ip, jq) = (k / n, k % n);
            (0..m).map(|i| half[i * n + jq] * gp[ip * m + i]).sum()
        })
        .collect();
    PhaseGrid::from_values(*target, values)
}

fn boundary_mass(w: &WignerGrid) -> f64 {
    let reach = 3.0 * w.grid.hbar.sqrt();
    let m = w.grid.points;
    let total: f64 = w.values.iter().map(|v| v.abs()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let mut edge = 0.0;
    for i in 0..m {
        for j in 0..m {
            let x = w.grid.point(i, j);
            if w.grid.p_half_width - x.p.abs() < reach || w.grid.q_half_width - x.q.abs() < reach {
                edge += w.values[i * m + j].abs();
            }
        }
    }
    edge / total
}

/// `ρ_H = W ∗ (πħ)⁻¹ exp(−x²/ħ)` on the points of `eta_grid`, by direct
/// quadrature over the Wigner grid.
pub fn husimi_from_wigner(w: &WignerGrid, eta_grid: &CenteredGrid) -> Result<Checked<HusimiGrid>> {
    let hbar = w.grid.hbar;
    let h = smooth(w, eta_grid, hbar / 2.0)?;
    let leak = boundary_mass(w);
    let warnings = if leak > BOUNDARY_LEAK_TOLERANCE { vec![Warning::BoundaryLeak { mass: leak }] } else { Vec::new() };
    Ok(Checked::new(h, warnings))
}

/// `F(ξ) = (2πħ)⁻¹ exp(−ξ²/4ħ) χ(ξ)`, the chord transform of the Husimi
/// function.
pub struct HusimiFourier<'a> {
    pub chi: &'a dyn ChordFunction,
}

pub fn husimi_fourier(chi: &dyn ChordFunction) -> HusimiFourier<'_> {
    HusimiFourier { chi }
}

impl ChordFunction for HusimiFourier<'_> {
    fn hbar(&self) -> f64 {
        self.chi.hbar()
    }

    fn value(&self, xi: ChordVector) -> Complex64 {
        let h = self.chi.hbar();
        self.chi.value(xi) * ((-xi.norm_sq() / (4.0 * h)).exp() / (2.0 * PI * h))
    }
}

/// `ρ_H(x) = ∫ F(ξ) exp(−i x∧ξ/ħ) dξ` by FFT on the grid conjugate to
/// `eta_grid`.
pub fn husimi_from_fourier(f: &HusimiFourier<'_>, eta_grid: &CenteredGrid) -> Result<Checked<HusimiGrid>> {
    let chord_grid = eta_grid.conjugate();
    let scale = 2.0 * PI * eta_grid.hbar;
    let sampled = ChordGrid::sample(chord_grid, |xi| f.value(xi) * scale)?;
    centre_from_chord_onto(&sampled, eta_grid)
}

/// Correlations `C_Δ(·, Q_j)` for every position row of `grid`.
pub fn lwc_family(chi: &dyn ChordFunction, grid: &CenteredGrid, delta: f64, xi_q: &[f64]) -> Result<Checked<Vec<LwcSample>>> {
    let mut warnings = Vec::new();
    let mut family = Vec::with_capacity(grid.points);
    for j in 0..grid.points {
        let window = LwcWindow::new(grid.q_coord(j), delta, grid.hbar)?;
        let (s, w) = lwc_from_chord(chi, &window, xi_q)?.into_parts();
        for x in w {
            if !warnings.contains(&x) {
                warnings.push(x);
            }
        }
        family.push(s);
    }
    Ok(Checked::new(family, warnings))
}

/// `W ∗ N(0, Δ²)` per axis from a correlation family:
/// `(2πħ)⁻¹ ∫ dξ_q C_Δ(ξ_q, Q) exp(i ξ_q P/ħ − Δ² ξ_q²/2ħ²)`, one sample per
/// position row of `grid`, evaluated at its momentum points.
pub fn smoothed_wigner_from_lwc(family: &[LwcSample], grid: &CenteredGrid) -> Result<Checked<WignerGrid>> {
    grid.validate()?;
    let m = grid.points;
    if family.len() != m {
        return Err(Error::InvalidGrid(format!("need {m} correlation samples, one per Q row, got {}", family.len())));
    }
    let delta = family[0].window.delta;
    for (j, s) in family.iter().enumerate() {
        let q = grid.q_coord(j);
        if (s.window.q - q).abs() > 1e-12 * (1.0 + q.abs()) {
            return Err(Error::InvalidGrid(format!("sample {j} has Q = {}, grid row is {q}", s.window.q)));
        }
        if (s.window.delta - delta).abs() > 1e-14 * delta || (s.window.hbar - grid.hbar).abs() > 1e-14 * grid.hbar {
            return Err(Error::InvalidParameter("correlation family must share delta and hbar".into()));
        }
        check_uniform(&s.xi_q)?;
    }
    let hbar = grid.hbar;
    let columns: Vec<(Vec<f64>, f64)> = family
        .par_iter()
        .map(|s| {
            let h = s.xi_q[1] - s.xi_q[0];
            let damp: Vec<Complex64> = s
                .xi_q
                .iter()
                .zip(&s.c)
                .map(|(&x, &c)| c * (-(delta * x / hbar).powi(2) / 2.0).exp())
                .collect();
            let peak = damp.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let edge = damp[0].norm().max(damp[damp.len() - 1].norm());
            let col = (0..m)
                .map(|i| {
                    let p = grid.p_coord(i);
                    let acc: Complex64 = s.xi_q.iter().zip(&damp).map(|(&x, &v)| v * Complex64::from_polar(1.0, x * p / hbar)).sum();
                    acc.re * h / (2.0 * PI * hbar)
                })
                .collect();
            (col, if peak > 0.0 { edge / peak } else { 0.0 })
        })
        .collect();
    let tail = columns.iter().map(|c| c.1).fold(0.0, f64::max);
    let values = (0..m * m).map(|k| columns[k % m].0[k / m]).collect();
    let warnings = if tail > 1e-12 { vec![Warning::TailTruncation { relative: tail }] } else { Vec::new() };
    Ok(Checked::new(PhaseGrid::from_values(*grid, values)?, warnings))
}

/// The Husimi function from a correlation family of window width
/// `Δ = √(ħ/2)`, the width at which the window smoothing matches the
/// coherent-state Gaussian.
pub fn husimi_from_lwc(family: &[LwcSample], grid: &CenteredGrid) -> Result<Checked<HusimiGrid>> {
    let hbar = grid.hbar;
    if let Some(s) = family.iter().find(|s| (s.window.delta.powi(2) - hbar / 2.0).abs() > 1e-12 * hbar) {
        return Err(Error::WindowWidth { delta: s.window.delta, hbar });
    }
    smoothed_wigner_from_lwc(family, grid)
}

fn check_uniform(xi: &[f64]) -> Result<()> {
    if xi.len() < 2 {
        return Err(Error::InvalidGrid("correlation needs at least two xi_q samples".into()));
    }
    let h = xi[1] - xi[0];
    if !(h > 0.0) || xi.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
        return Err(Error::InvalidGrid("xi_q samples must be uniform and increasing".into()));
    }
    Ok(())
}

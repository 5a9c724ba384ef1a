//! Symplectic phase-space algebra for one degree of freedom.
//!
//! Coordinates are ordered `(p, q)`. The skew product is
//! `x ∧ x' = p q' - q p'`, and the symplectic matrix `J` maps
//! `(p, q) -> (-q, p)` so that `x ∧ x' = (J x) · x'`.
//!
//! Centre (Weyl) fields and chord fields live on [`CenteredGrid`]s that are
//! Fourier conjugates of each other. The transform pair is
//!
//! ```text
//! χ(ξ) = (2πħ)^-1 ∫ dx W(x) exp( (i/ħ) x ∧ ξ )
//! W(x) = (2πħ)^-1 ∫ dξ χ(ξ) exp( (i/ħ) ξ ∧ x )
//! ```
//!
//! Since `x ∧ ξ = p ξ_q - q ξ_p`, the centre `p` axis pairs with the chord
//! `ξ_q` axis and the centre `q` axis with the chord `ξ_p` axis.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Checked, Error, Result, Warning};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Boundary magnitude (relative to the peak) above which a grid transform
/// reports a [`Warning::GridEdge`].
pub const GRID_EDGE_TOLERANCE: f64 = 1e-14;

/// A point `x = (p, q)` of the classical phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseSpacePoint {
    pub p: f64,
    pub q: f64,
}

/// A chord `ξ = (ξ_p, ξ_q)`: the difference of two phase-space points.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChordVector {
    pub xi_p: f64,
    pub xi_q: f64,
}

impl PhaseSpacePoint {
    pub const ORIGIN: PhaseSpacePoint = PhaseSpacePoint { p: 0.0, q: 0.0 };

    pub fn new(p: f64, q: f64) -> Self {
        PhaseSpacePoint { p, q }
    }

    pub fn to_vec2(self) -> Vec2 {
        Vec2::new(self.p, self.q)
    }

    pub fn from_vec2(v: Vec2) -> Self {
        PhaseSpacePoint { p: v[0], q: v[1] }
    }

    pub fn is_finite(self) -> bool {
        self.p.is_finite() && self.q.is_finite()
    }

    pub fn norm_sq(self) -> f64 {
        self.p * self.p + self.q * self.q
    }

    /// `x ∧ ξ`, the pairing that appears in every plane-wave symbol.
    pub fn wedge(self, xi: ChordVector) -> f64 {
        self.p * xi.xi_q - self.q * xi.xi_p
    }

    /// The chord from `other` to `self`.
    pub fn chord_from(self, other: PhaseSpacePoint) -> ChordVector {
        ChordVector::new(self.p - other.p, self.q - other.q)
    }

    pub fn translated(self, xi: ChordVector) -> PhaseSpacePoint {
        PhaseSpacePoint::new(self.p + xi.xi_p, self.q + xi.xi_q)
    }
}

impl ChordVector {
    pub const ZERO: ChordVector = ChordVector { xi_p: 0.0, xi_q: 0.0 };

    pub fn new(xi_p: f64, xi_q: f64) -> Self {
        ChordVector { xi_p, xi_q }
    }

    pub fn to_vec2(self) -> Vec2 {
        Vec2::new(self.xi_p, self.xi_q)
    }

    pub fn from_vec2(v: Vec2) -> Self {
        ChordVector { xi_p: v[0], xi_q: v[1] }
    }

    pub fn norm_sq(self) -> f64 {
        self.xi_p * self.xi_p + self.xi_q * self.xi_q
    }

    pub fn is_finite(self) -> bool {
        self.xi_p.is_finite() && self.xi_q.is_finite()
    }

    /// The double-phase-space conjugate `y = J ξ = (-ξ_q, ξ_p)`.
    pub fn to_y(self) -> Vec2 {
        symplectic_matrix() * self.to_vec2()
    }

    /// Inverse of [`ChordVector::to_y`]: `ξ = -J y`.
    pub fn from_y(y: Vec2) -> Self {
        ChordVector::from_vec2(-(symplectic_matrix() * y))
    }

    /// Quadratic form `ξ · A ξ`.
    pub fn quadratic_form(self, a: &Mat2) -> f64 {
        let v = self.to_vec2();
        v.dot(&(a * v))
    }
}

impl Neg for ChordVector {
    type Output = ChordVector;
    fn neg(self) -> ChordVector {
        ChordVector::new(-self.xi_p, -self.xi_q)
    }
}

impl Add for ChordVector {
    type Output = ChordVector;
    fn add(self, o: ChordVector) -> ChordVector {
        ChordVector::new(self.xi_p + o.xi_p, self.xi_q + o.xi_q)
    }
}

impl Sub for ChordVector {
    type Output = ChordVector;
    fn sub(self, o: ChordVector) -> ChordVector {
        ChordVector::new(self.xi_p - o.xi_p, self.xi_q - o.xi_q)
    }
}

impl Mul<f64> for ChordVector {
    type Output = ChordVector;
    fn mul(self, s: f64) -> ChordVector {
        ChordVector::new(self.xi_p * s, self.xi_q * s)
    }
}

impl Add<ChordVector> for PhaseSpacePoint {
    type Output = PhaseSpacePoint;
    fn add(self, xi: ChordVector) -> PhaseSpacePoint {
        self.translated(xi)
    }
}

impl Sub for PhaseSpacePoint {
    type Output = ChordVector;
    fn sub(self, o: PhaseSpacePoint) -> ChordVector {
        self.chord_from(o)
    }
}

/// The skew symplectic matrix in `(p, q)` ordering.
pub fn symplectic_matrix() -> Mat2 {
    Mat2::new(0.0, -1.0, 1.0, 0.0)
}

/// `a ∧ b = a_p b_q - a_q b_p` for 2-vectors in `(p, q)` ordering.
pub fn skew_product(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Weyl symbol of the translation operator, `T_ξ(x) = exp(-(i/ħ) x ∧ ξ)`.
pub fn translation_weyl_symbol(xi: ChordVector, x: PhaseSpacePoint, hbar: f64) -> Complex64 {
    Complex64::from_polar(1.0, -x.wedge(xi) / hbar)
}

/// Chord symbol of the (scaled) reflection operator,
/// `2^N R̃_x(ξ) = exp((i/ħ) x ∧ ξ)`.
pub fn reflection_chord_symbol(x: PhaseSpacePoint, xi: ChordVector, hbar: f64) -> Complex64 {
    Complex64::from_polar(1.0, x.wedge(xi) / hbar)
}

/// A uniform grid centred on the origin.
///
/// Each axis has `points` samples at `(k - points/2) * spacing`,
/// `k = 0..points`, with `spacing = 2 * half_width / points`. The same type
/// describes centre grids (axes `p`, `q`) and chord grids (axes `ξ_p`, `ξ_q`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenteredGrid {
    pub p_half_width: f64,
    pub q_half_width: f64,
    pub points: usize,
    pub hbar: f64,
}

impl CenteredGrid {
    pub fn new(p_half_width: f64, q_half_width: f64, points: usize, hbar: f64) -> Result<Self> {
        let grid = CenteredGrid { p_half_width, q_half_width, points, hbar };
        grid.validate()?;
        Ok(grid)
    }

    pub fn square(half_width: f64, points: usize, hbar: f64) -> Result<Self> {
        Self::new(half_width, half_width, points, hbar)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 || !self.points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and >= 2, got {}",
                self.points
            )));
        }
        for (name, w) in [("p", self.p_half_width), ("q", self.q_half_width)] {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidGrid(format!("{name} half-width must be positive, got {w}")));
            }
        }
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(Error::InvalidGrid(format!("hbar must be positive, got {}", self.hbar)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points * self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points == 0
    }

    pub fn p_spacing(&self) -> f64 {
        2.0 * self.p_half_width / self.points as f64
    }

    pub fn q_spacing(&self) -> f64 {
        2.0 * self.q_half_width / self.points as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.p_spacing() * self.q_spacing()
    }

    pub fn p_coord(&self, i: usize) -> f64 {
        (i as f64 - (self.points / 2) as f64) * self.p_spacing()
    }

    pub fn q_coord(&self, j: usize) -> f64 {
        (j as f64 - (self.points / 2) as f64) * self.q_spacing()
    }

    pub fn point(&self, i: usize, j: usize) -> PhaseSpacePoint {
        PhaseSpacePoint::new(self.p_coord(i), self.q_coord(j))
    }

    pub fn chord(&self, i: usize, j: usize) -> ChordVector {
        ChordVector::new(self.p_coord(i), self.q_coord(j))
    }

    /// The Fourier-conjugate grid, with `Δq · Δξ_p = Δp · Δξ_q = 2πħ / M`.
    pub fn conjugate(&self) -> CenteredGrid {
        let m = self.points as f64;
        CenteredGrid {
            p_half_width: PI * self.hbar * m / (2.0 * self.q_half_width),
            q_half_width: PI * self.hbar * m / (2.0 * self.p_half_width),
            points: self.points,
            hbar: self.hbar,
        }
    }

    /// Checks that `other` is the Fourier conjugate of `self`.
    pub fn check_pairing(&self, other: &CenteredGrid) -> Result<()> {
        self.validate()?;
        other.validate()?;
        if self.points != other.points {
            return Err(Error::GridPairing(format!(
                "point counts differ: {} vs {}",
                self.points, other.points
            )));
        }
        if (self.hbar - other.hbar).abs() > 1e-12 * self.hbar {
            return Err(Error::GridPairing(format!("hbar differs: {} vs {}", self.hbar, other.hbar)));
        }
        let target = 2.0 * PI * self.hbar / self.points as f64;
        let pq = self.q_spacing() * other.p_spacing();
        let qp = self.p_spacing() * other.q_spacing();
        for (label, product) in [("dq * dxi_p", pq), ("dp * dxi_q", qp)] {
            if (product - target).abs() > 1e-10 * target {
                return Err(Error::GridPairing(format!(
                    "{label} = {product:.12e}, expected 2*pi*hbar/M = {target:.12e}"
                )));
            }
        }
        Ok(())
    }
}

/// A field sampled on a [`CenteredGrid`], stored row-major with the first
/// (`p` or `ξ_p`) index varying slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid<T> {
    pub grid: CenteredGrid,
    pub values: Vec<T>,
}

/// Wigner function sampled on a centre grid.
pub type WignerGrid = PhaseGrid<f64>;
/// Chord function sampled on a chord grid.
pub type ChordGrid = PhaseGrid<Complex64>;

impl<T: Copy + Send + Sync> PhaseGrid<T> {
    pub fn from_values(grid: CenteredGrid, values: Vec<T>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(PhaseGrid { grid, values })
    }

    /// Samples `f(i, j)` over the grid, in parallel over rows.
    pub fn from_index_fn(grid: CenteredGrid, f: impl Fn(usize, usize) -> T + Sync) -> Result<Self> {
        grid.validate()?;
        let m = grid.points;
        let values: Vec<T> = (0..grid.len())
            .into_par_iter()
            .map(|k| f(k / m, k % m))
            .collect();
        Ok(PhaseGrid { grid, values })
    }

    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[i * self.grid.points + j]
    }
}

impl WignerGrid {
    /// Samples `f(x)` at every centre-grid point.
    pub fn sample(grid: CenteredGrid, f: impl Fn(PhaseSpacePoint) -> f64 + Sync) -> Result<Self> {
        Self::from_index_fn(grid, |i, j| f(grid.point(i, j)))
    }

    /// Riemann sum `Σ W ΔpΔq`, spectrally accurate for smooth decaying fields.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl ChordGrid {
    /// Samples `f(ξ)` at every chord-grid point.
    pub fn sample(grid: CenteredGrid, f: impl Fn(ChordVector) -> Complex64 + Sync) -> Result<Self> {
        Self::from_index_fn(grid, |i, j| f(grid.chord(i, j)))
    }

    /// Index of the sample at `-ξ`, when it lies on the grid.
    fn mirror(&self, i: usize, j: usize) -> Option<(usize, usize)> {
        let m = self.grid.points;
        if i == 0 || j == 0 {
            None
        } else {
            Some((m - i, m - j))
        }
    }

    /// Largest `|χ(-ξ) - χ(ξ)*|` over the grid.
    pub fn hermiticity_defect(&self) -> f64 {
        let m = self.grid.points;
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                if let Some((a, b)) = self.mirror(i, j) {
                    worst = worst.max((self.at(a, b) - self.at(i, j).conj()).norm());
                }
            }
        }
        worst
    }
}

fn edge_ratio<T: Copy>(grid: &CenteredGrid, values: &[T], modulus: impl Fn(T) -> f64) -> f64 {
    let m = grid.points;
    let peak = values.iter().map(|&v| modulus(v)).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let mut edge = 0.0f64;
    for k in 0..m {
        for &(i, j) in &[(0, k), (m - 1, k), (k, 0), (k, m - 1)] {
            edge = edge.max(modulus(values[i * m + j]));
        }
    }
    edge / peak
}

/// Centred discrete Fourier transform along rows of length `m`:
/// `out[k] = Σ_j in[j] exp(s·2πi (j - m/2)(k - m/2) / m)`.
///
/// For even `m` this is the standard DFT dressed with `(-1)^j` on input and
/// `(-1)^(k + m/2)` on output.
fn centered_dft_rows(data: &mut [Complex64], m: usize, fft: &Arc<dyn Fft<f64>>) {
    let half_sign = if (m / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    data.par_chunks_mut(m).for_each(|row| {
        for (j, v) in row.iter_mut().enumerate() {
            if j % 2 == 1 {
                *v = -*v;
            }
        }
        fft.process(row);
        for (k, v) in row.iter_mut().enumerate() {
            let s = if k % 2 == 1 { -half_sign } else { half_sign };
            *v *= s;
        }
    });
}

/// Centred DFT of a single even-length sequence,
/// `out[k] = Σ_j in[j] exp(±2πi (j - m/2)(k - m/2) / m)` with the sign of
/// `positive`.
pub(crate) fn centered_dft(data: &mut [Complex64], positive: bool) {
    let m = data.len();
    let mut planner = FftPlanner::new();
    let fft = if positive { planner.plan_fft_inverse(m) } else { planner.plan_fft_forward(m) };
    centered_dft_rows(data, m, &fft);
}

fn transpose(data: &[Complex64], m: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    out.par_chunks_mut(m).enumerate().for_each(|(r, row)| {
        for (c, v) in row.iter_mut().enumerate() {
            *v = data[c * m + r];
        }
    });
    out
}

/// Symplectic Fourier transform of a centre field onto its conjugate grid:
/// `χ(ξ) = (2πħ)^-1 ∫ dx W(x) exp((i/ħ) x ∧ ξ)`.
pub fn chord_from_centre_grid(w: &WignerGrid) -> Result<Checked<ChordGrid>> {
    let target = w.grid.conjugate();
    chord_from_centre_onto(w, &target)
}

/// As [`chord_from_centre_grid`], onto an explicitly supplied chord grid that
/// must be the conjugate of the input grid.
pub fn chord_from_centre_onto(w: &WignerGrid, chord_grid: &CenteredGrid) -> Result<Checked<ChordGrid>> {
    w.grid.check_pairing(chord_grid)?;
    let m = w.grid.points;
    let mut warnings = Vec::new();
    let edge = edge_ratio(&w.grid, &w.values, f64::abs);
    if edge > GRID_EDGE_TOLERANCE {
        warnings.push(Warning::GridEdge { relative: edge });
    }

    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(m);
    let inverse = planner.plan_fft_inverse(m);

    // rows: p_i, columns: q_j  ->  Σ_j exp(-i q_j ξ_p / ħ)
    let mut data: Vec<Complex64> = w.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    centered_dft_rows(&mut data, m, &forward);
    // rows: ξ_p, columns: p_i  ->  Σ_i exp(+i p_i ξ_q / ħ)
    let mut data = transpose(&data, m);
    centered_dft_rows(&mut data, m, &inverse);

    let scale = w.grid.cell_area() / (2.0 * PI * w.grid.hbar);
    data.par_iter_mut().for_each(|v| *v *= scale);
    Ok(Checked::new(PhaseGrid { grid: *chord_grid, values: data }, warnings))
}

/// Inverse symplectic Fourier transform:
/// `W(x) = (2πħ)^-1 ∫ dξ χ(ξ) exp((i/ħ) ξ ∧ x)`.
///
/// The real part is returned; an imaginary residue above round-off is
/// reported as a warning.
pub fn centre_from_chord_grid(chi: &ChordGrid) -> Result<Checked<WignerGrid>> {
    let target = chi.grid.conjugate();
    centre_from_chord_onto(chi, &target)
}

pub fn centre_from_chord_onto(chi: &ChordGrid, centre_grid: &CenteredGrid) -> Result<Checked<WignerGrid>> {
    let (values, mut warnings) = centre_from_chord_complex(chi, centre_grid)?.into_parts();
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let residue = values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if residue > 1e-10 * peak.max(f64::MIN_POSITIVE) {
        warnings.push(Warning::ImaginaryResidue { max_abs: residue });
    }
    let real = values.iter().map(|v| v.re).collect();
    Ok(Checked::new(PhaseGrid { grid: *centre_grid, values: real }, warnings))
}

/// The complex-valued inverse transform, for fields that need not be real.
pub fn centre_from_chord_complex(chi: &ChordGrid, centre_grid: &CenteredGrid) -> Result<Checked<Vec<Complex64>>> {
    centre_grid.check_pairing(&chi.grid)?;
    let m = chi.grid.points;
    let mut warnings = Vec::new();
    let edge = edge_ratio(&chi.grid, &chi.values, |v: Complex64| v.norm());
    if edge > GRID_EDGE_TOLERANCE {
        warnings.push(Warning::GridEdge { relative: edge });
    }

    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(m);
    let inverse = planner.plan_fft_inverse(m);

    // rows: ξ_p, columns: ξ_q  ->  Σ_b exp(-i ξ_q p_i / ħ)
    let mut data = chi.values.clone();
    centered_dft_rows(&mut data, m, &forward);
    // rows: p_i, columns: ξ_p  ->  Σ_a exp(+i ξ_p q_j / ħ)
    let mut data = transpose(&data, m);
    centered_dft_rows(&mut data, m, &inverse);

    let scale = chi.grid.cell_area() / (2.0 * PI * chi.grid.hbar);
    data.par_iter_mut().for_each(|v| *v *= scale);
    Ok(Checked::new(data, warnings))
}

/// Multiplies a chord field by `exp((i/ħ) η ∧ ξ)`, the chord-space image of a
/// phase-space translation by `η`.
pub fn translate_chord_grid(chi: &ChordGrid, eta: ChordVector) -> ChordGrid {
    let g = chi.grid;
    let values = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let xi = g.chord(k / g.points, k % g.points);
            let phase = skew_product(eta.to_vec2(), xi.to_vec2()) / g.hbar;
            chi.values[k] * Complex64::from_polar(1.0, phase)
        })
        .collect();
    PhaseGrid { grid: g, values }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coherent_w(x: PhaseSpacePoint, eta: PhaseSpacePoint, hbar: f64) -> f64 {
        let d = x - eta;
        (-(d.norm_sq()) / hbar).exp() / (PI * hbar)
    }

    fn coherent_chi(xi: ChordVector, eta: PhaseSpacePoint, hbar: f64) -> Complex64 {
        Complex64::from_polar(1.0, eta.wedge(xi) / hbar) * (-xi.norm_sq() / (4.0 * hbar)).exp()
            / (2.0 * PI * hbar)
    }

    #[test]
    fn skew_product_examples() {
        assert_eq!(skew_product(Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)), 1.0);
        assert_eq!(skew_product(Vec2::new(2.0, 3.0), Vec2::new(5.0, 7.0)), -1.0);
        let x = Vec2::new(0.3, -1.7);
        assert_eq!(skew_product(x, x), 0.0);
    }

    #[test]
    fn j_matrix_consistency() {
        let j = symplectic_matrix();
        assert_eq!(j * j, -Mat2::identity());
        assert_eq!(j.transpose(), -j);
        let a = Vec2::new(0.4, 2.5);
        let b = Vec2::new(-1.2, 0.7);
        assert_eq!(skew_product(a, b), (j * a).dot(&b));
        assert_eq!(j * Vec2::new(1.0, 2.0), Vec2::new(-2.0, 1.0));
    }

    #[test]
    fn y_round_trip() {
        let xi = ChordVector::new(0.3, -0.8);
        let y = xi.to_y();
        assert_eq!(y, Vec2::new(0.8, 0.3));
        assert_eq!(ChordVector::from_y(y), xi);
    }

    #[test]
    fn symbol_examples() {
        let hbar = 0.05;
        let one = translation_weyl_symbol(ChordVector::ZERO, PhaseSpacePoint::new(3.0, -2.0), hbar);
        assert!((one - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        let t = translation_weyl_symbol(ChordVector::new(0.0, PI * hbar), PhaseSpacePoint::new(1.0, 0.0), hbar);
        assert!((t - Complex64::new(-1.0, 0.0)).norm() < 1e-12);

        let r = reflection_chord_symbol(PhaseSpacePoint::new(0.0, 1.0), ChordVector::new(2.0 * PI * hbar, 0.0), hbar);
        assert!((r - Complex64::new(1.0, 0.0)).norm() < 1e-12);

        let r0 = reflection_chord_symbol(PhaseSpacePoint::ORIGIN, ChordVector::new(0.7, 0.1), hbar);
        assert!((r0 - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        let x = PhaseSpacePoint::new(0.37, -1.1);
        let xi = ChordVector::new(0.2, 0.9);
        let t = translation_weyl_symbol(xi, x, hbar);
        assert!((t.norm() - 1.0).abs() < 1e-14);
        assert!((reflection_chord_symbol(x, xi, hbar).conj() - t).norm() < 1e-14);
    }

    #[test]
    fn grid_validation() {
        assert!(CenteredGrid::square(1.0, 7, 0.1).is_err());
        assert!(CenteredGrid::square(-1.0, 8, 0.1).is_err());
        assert!(CenteredGrid::square(1.0, 8, 0.0).is_err());
        let g = CenteredGrid::new(2.0, 3.0, 64, 0.05).unwrap();
        assert!(g.check_pairing(&g.conjugate()).is_ok());
        assert_eq!(g.conjugate().conjugate(), g);
        let bad = CenteredGrid::new(2.0, 3.1, 64, 0.05).unwrap();
        assert!(matches!(g.check_pairing(&bad), Err(Error::GridPairing(_))));
        assert!(g.conjugate().p_spacing() * g.q_spacing() - 2.0 * PI * 0.05 / 64.0 < 1e-15);
    }

    #[test]
    fn coherent_state_transform_matches_closed_form() {
        let hbar = 0.05;
        let eta = PhaseSpacePoint::new(0.4, -0.3);
        let grid = CenteredGrid::square(3.0, 128, hbar).unwrap();
        let w = WignerGrid::sample(grid, |x| coherent_w(x, eta, hbar)).unwrap();
        assert!((w.integral() - 1.0).abs() < 1e-10);

        let chi = chord_from_centre_grid(&w).unwrap();
        assert!(chi.warnings.is_empty(), "{:?}", chi.warnings);
        let chi = chi.value;
        let mut err = 0.0f64;
        for i in 0..grid.points {
            for j in 0..grid.points {
                let exact = coherent_chi(chi.grid.chord(i, j), eta, hbar);
                err = err.max((chi.at(i, j) - exact).norm());
            }
        }
        assert!(err < 1e-10, "max error {err}");
        let m = grid.points / 2;
        assert!((chi.at(m, m).re - 1.0 / (2.0 * PI * hbar)).abs() < 1e-10);
        assert!(chi.hermiticity_defect() < 1e-12);

        let back = centre_from_chord_grid(&chi).unwrap();
        let mut err = 0.0f64;
        for (a, b) in back.value.values.iter().zip(&w.values) {
            err = err.max((a - b).abs());
        }
        assert!(err < 1e-10, "round trip error {err}");
    }

    #[test]
    fn inverse_transform_of_closed_form_chord() {
        let hbar = 0.1;
        let eta = PhaseSpacePoint::new(-0.5, 0.25);
        let centre = CenteredGrid::square(4.0, 96, hbar).unwrap();
        let chi = ChordGrid::sample(centre.conjugate(), |xi| coherent_chi(xi, eta, hbar)).unwrap();
        let w = centre_from_chord_grid(&chi).unwrap().value;
        assert_eq!(w.grid, centre);
        let mut err = 0.0f64;
        for i in 0..centre.points {
            for j in 0..centre.points {
                err = err.max((w.at(i, j) - coherent_w(centre.point(i, j), eta, hbar)).abs());
            }
        }
        assert!(err < 1e-10, "max error {err}");
    }

    #[test]
    fn translation_covariance_on_grid() {
        let hbar = 0.05;
        let grid = CenteredGrid::square(3.0, 128, hbar).unwrap();
        let w = WignerGrid::sample(grid, |x| coherent_w(x, PhaseSpacePoint::new(0.2, 0.1), hbar)).unwrap();
        let chi = chord_from_centre_grid(&w).unwrap().value;
        let (di, dj) = (5usize, 9usize);
        let eta = ChordVector::new(di as f64 * grid.p_spacing(), dj as f64 * grid.q_spacing());
        let moved = centre_from_chord_grid(&translate_chord_grid(&chi, eta)).unwrap().value;
        let mut err = 0.0f64;
        for i in di..grid.points {
            for j in dj..grid.points {
                err = err.max((moved.at(i, j) - w.at(i - di, j - dj)).abs());
            }
        }
        assert!(err < 1e-10, "shift error {err}");
    }

    #[test]
    fn edge_warning_for_inadequate_grid() {
        let hbar = 0.05;
        let grid = CenteredGrid::square(0.5, 64, hbar).unwrap();
        let w = WignerGrid::sample(grid, |x| coherent_w(x, PhaseSpacePoint::ORIGIN, hbar)).unwrap();
        let chi = chord_from_centre_grid(&w).unwrap();
        assert!(chi.warnings.iter().any(|w| matches!(w, Warning::GridEdge { .. })));
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let grid = CenteredGrid::square(3.0, 32, 0.05).unwrap();
        let w = WignerGrid::sample(grid, |_| 0.0).unwrap();
        let wrong = CenteredGrid::square(1.0, 32, 0.05).unwrap();
        assert!(chord_from_centre_onto(&w, &wrong).is_err());
    }
}

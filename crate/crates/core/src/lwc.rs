//! Local wavefunction correlations: Gaussian-windowed position correlations
//! `C_Δ(ξ_q, Q) = ∫ W(x) t(x) dx` and their momentum spectra, computed
//! exactly from chord functions or density matrices and semiclassically
//! from Lagrangian curves.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{decoherence_matrix, HamiltonianModel, LindbladChannel};
use crate::error::{Checked, Error, Result, Warning};
use crate::fock::{position_density_matrix, FockDensityMatrix};
use crate::phase_space::{centered_dft, ChordVector, Mat2, PhaseSpacePoint, Vec2};
use crate::states::{branches_at, evolve_curve_classically, ChordFunction, CoherentState, LagrangianCurve};

type C = Complex64;

/// Relative edge level above which a correlation is considered truncated.
pub const EDGE_TOLERANCE: f64 = 1e-10;
const LINE_TOLERANCE: f64 = 1e-11;
const MAX_LINE_INTERVALS: usize = 1 << 17;

/// Gaussian window of width `delta` centred on position `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LwcWindow {
    pub q: f64,
    pub delta: f64,
    pub hbar: f64,
}

impl LwcWindow {
    pub fn new(q: f64, delta: f64, hbar: f64) -> Result<Self> {
        if !q.is_finite() || !(delta.is_finite() && delta > 0.0) || !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidParameter(format!("invalid window Q = {q}, delta = {delta}, hbar = {hbar}")));
        }
        Ok(LwcWindow { q, delta, hbar })
    }

    /// `Δ = √ħ`.
    pub fn canonical(q: f64, hbar: f64) -> Result<Self> {
        Self::new(q, hbar.sqrt(), hbar)
    }

    fn gaussian(&self, q: f64) -> f64 {
        (-(self.q - q).powi(2) / (2.0 * self.delta * self.delta)).exp() / ((2.0 * PI).sqrt() * self.delta)
    }
}

/// `(√(2π)Δ)⁻¹ exp(−i p ξ_q/ħ − (Q−q)²/2Δ²)`.
pub fn local_translation_weyl(window: &LwcWindow, xi_q: f64, x: PhaseSpacePoint) -> C {
    C::from_polar(window.gaussian(x.q), -x.p * xi_q / window.hbar)
}

/// `M` points `(k − M/2) h` spanning `[−half_width, half_width)`.
pub fn xi_grid(half_width: f64, points: usize) -> Result<Vec<f64>> {
    if points < 4 || points % 2 == 1 || !(half_width.is_finite() && half_width > 0.0) {
        return Err(Error::InvalidGrid(format!("need an even count >= 4 and positive half-width, got {points}, {half_width}")));
    }
    let h = 2.0 * half_width / points as f64;
    Ok((0..points).map(|k| (k as f64 - (points / 2) as f64) * h).collect())
}

/// A correlation sampled along `ξ_q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LwcSample {
    pub window: LwcWindow,
    pub xi_q: Vec<f64>,
    pub c: Vec<C>,
}

impl LwcSample {
    /// `C_Δ(0, Q)`.
    pub fn normalization(&self) -> Option<C> {
        self.xi_q.iter().position(|&x| x == 0.0).map(|k| self.c[k])
    }

    /// `C_Δ(ξ_q, Q) / C_Δ(0, Q)`.
    pub fn normalized(&self) -> Option<Vec<C>> {
        let n = self.normalization()?;
        (n.norm() > 0.0).then(|| self.c.iter().map(|c| c / n).collect())
    }

    /// Largest `|C(−ξ) − C(ξ)*|` over mirrored grid points.
    pub fn hermiticity_defect(&self) -> f64 {
        let m = self.xi_q.len();
        let mut worst = 0.0f64;
        for (k, &x) in self.xi_q.iter().enumerate() {
            if let Some(j) = (0..m).find(|&j| (self.xi_q[j] + x).abs() < 1e-12 * (1.0 + x.abs())) {
                worst = worst.max((self.c[j] - self.c[k].conj()).norm());
            }
        }
        worst
    }

    fn edge_ratio(&self) -> f64 {
        let peak = self.c.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let edge = self.c.first().unwrap().norm().max(self.c.last().unwrap().norm());
        edge / peak
    }
}

/// One value of the chord route,
/// `∫ dξ_p χ(ξ_p, −ξ_q) exp(i ξ_p Q/ħ − Δ² ξ_p²/2ħ²)`, by composite Simpson
/// with interval doubling until converged.
fn chord_line(chi: &dyn ChordFunction, w: &LwcWindow, xi_q: f64) -> (C, Vec<Warning>) {
    let h = w.hbar;
    let reach = (h / w.delta) * (2.0 * (1e13f64).ln()).sqrt();
    let scale = chi.value(ChordVector::ZERO).norm() * (2.0 * PI).sqrt() * h / w.delta;
    let integrand = |xp: f64| {
        chi.value(ChordVector::new(xp, -xi_q))
            * C::from_polar((-(w.delta * xp / h).powi(2) / 2.0).exp(), xp * w.q / h)
    };
    let simpson = |n: usize| {
        let step = 2.0 * reach / n as f64;
        let vals: Vec<C> = (0..=n).map(|k| integrand(-reach + k as f64 * step)).collect();
        let mut acc = vals[0] + vals[n];
        for (k, v) in vals.iter().enumerate().take(n).skip(1) {
            acc += v * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        (acc * (step / 3.0), vals)
    };
    let mut n = 256;
    let (mut value, vals) = simpson(n);
    let mut warnings = Vec::new();
    let peak = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let edge = vals[0].norm().max(vals[n].norm());
    if peak > 0.0 && edge > 1e-12 * peak {
        warnings.push(Warning::TailTruncation { relative: edge / peak });
    }
    loop {
        n *= 2;
        let (next, _) = simpson(n);
        let change = (next - value).norm();
        value = next;
        if change <= LINE_TOLERANCE * scale {
            break;
        }
        if n >= MAX_LINE_INTERVALS {
            warnings.push(Warning::Quadrature { change: change / scale.max(f64::MIN_POSITIVE) });
            break;
        }
    }
    (value, warnings)
}

fn merge_warnings(lists: impl IntoIterator<Item = Vec<Warning>>) -> Vec<Warning> {
    let (mut tail, mut quad) = (None::<f64>, None::<f64>);
    let mut rest = Vec::new();
    for w in lists.into_iter().flatten() {
        match w {
            Warning::TailTruncation { relative } => tail = Some(tail.map_or(relative, |t| t.max(relative))),
            Warning::Quadrature { change } => quad = Some(quad.map_or(change, |q| q.max(change))),
            other => {
                if !rest.contains(&other) {
                    rest.push(other)
                }
            }
        }
    }
    rest.extend(tail.map(|relative| Warning::TailTruncation { relative }));
    rest.extend(quad.map(|change| Warning::Quadrature { change }));
    rest
}

/// Correlation from a chord function along the given `ξ_q` values.
pub fn lwc_from_chord(chi: &dyn ChordFunction, window: &LwcWindow, xi_q: &[f64]) -> Result<Checked<LwcSample>> {
    if (chi.hbar() - window.hbar).abs() > 1e-14 * window.hbar {
        return Err(Error::InvalidParameter("chord function and window disagree on hbar".into()));
    }
    let results: Vec<(C, Vec<Warning>)> = xi_q.par_iter().map(|&x| chord_line(chi, window, x)).collect();
    let (c, warnings): (Vec<C>, Vec<Vec<Warning>>) = results.into_iter().unzip();
    Ok(Checked::new(LwcSample { window: *window, xi_q: xi_q.to_vec(), c }, merge_warnings(warnings)))
}

/// `(π(2Δ² + ħ))^(−1/2) exp(−i η_p ξ_q/ħ − ξ_q²/4ħ − (Q − η_q)²/(2Δ² + ħ))`.
pub fn lwc_coherent_closed_form(state: &CoherentState, window: &LwcWindow, xi_q: f64) -> C {
    let h = state.hbar;
    let s = 2.0 * window.delta * window.delta + h;
    let modulus = (-(xi_q * xi_q) / (4.0 * h) - (window.q - state.eta.q).powi(2) / s).exp() / (PI * s).sqrt();
    C::from_polar(modulus, -state.eta.p * xi_q / h)
}

/// Correlation of the classical curve density itself, `(2π)⁻¹ ∮ t(x(θ)) dθ`.
pub fn lwc_of_classical_curve(curve: &LagrangianCurve, window: &LwcWindow, xi_q: f64) -> C {
    let n = curve.len() as f64;
    curve.samples().iter().map(|&x| local_translation_weyl(window, xi_q, x)).sum::<C>() / n
}

/// `O₊ = t̂(ξ) + t̂(−ξ)` gives `2 Re C`; `O₋ = i(t̂(ξ) − t̂(−ξ))` gives `−2 Im C`.
pub fn symmetrized_observable_expectation(c: C, plus: bool) -> f64 {
    if plus {
        2.0 * c.re
    } else {
        -2.0 * c.im
    }
}

/// A density matrix in position representation on a uniform grid
/// `q_k = q0 + k h`.
#[derive(Debug, Clone)]
pub struct PositionDensity {
    pub q0: f64,
    pub h: f64,
    pub values: DMatrix<C>,
}

impl PositionDensity {
    pub fn from_fock(rho: &FockDensityMatrix, q0: f64, h: f64, points: usize) -> Result<Self> {
        if !(h > 0.0) || points < 2 {
            return Err(Error::InvalidGrid(format!("invalid position grid h = {h}, points = {points}")));
        }
        let q: Vec<f64> = (0..points).map(|k| q0 + k as f64 * h).collect();
        Ok(PositionDensity { q0, h, values: position_density_matrix(rho, &q)? })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }
}

/// `∫ dq ⟨q − ξ_q/2|ρ̂|q + ξ_q/2⟩ g_Δ(q − Q)` on the position grid. `ξ_q`
/// must be an even multiple of the grid spacing.
pub fn lwc_direct(rho: &PositionDensity, window: &LwcWindow, xi_q: f64) -> Result<C> {
    let half = xi_q / (2.0 * rho.h);
    let j = half.round();
    if (half - j).abs() > 1e-9 {
        return Err(Error::InvalidGrid(format!("xi_q = {xi_q} is not an even multiple of the grid spacing {}", rho.h)));
    }
    let j = j as i64;
    let n = rho.len() as i64;
    let (k_lo, k_hi) = (j.abs(), n - 1 - j.abs());
    let q_at = |k: i64| rho.q0 + k as f64 * rho.h;
    let reach = 6.0 * window.delta;
    if k_lo > k_hi || window.q - reach < q_at(k_lo) || window.q + reach > q_at(k_hi) {
        return Err(Error::InvalidGrid(format!(
            "position grid does not cover the window Q = {} ± 6Δ at xi_q = {xi_q}",
            window.q
        )));
    }
    let mut acc = C::from(0.0);
    for k in k_lo..=k_hi {
        acc += rho.values[((k - j) as usize, (k + j) as usize)] * window.gaussian(q_at(k));
    }
    Ok(acc * rho.h)
}

/// `ξ·Φξ` on the tangent chord `(slope, 1)` of a branch.
pub fn shear_phi_qq(phi: &Mat2, slope: f64) -> f64 {
    let t = Vec2::new(slope, 1.0);
    t.dot(&(phi * t))
}

/// One semiclassical branch contribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScBranch {
    pub p: f64,
    pub amplitude: f64,
    pub slope: f64,
    /// Sheared decoherence `Φ′_qq`.
    pub phi_qq: f64,
}

impl ScBranch {
    /// Spectral variance `ħΦ′_qq + Δ² slope²`.
    pub fn variance(&self, window: &LwcWindow) -> f64 {
        window.hbar * self.phi_qq + (window.delta * self.slope).powi(2)
    }
}

/// Branch table of a window, after caustic exclusion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiclassicalLwc {
    pub window: LwcWindow,
    pub branches: Vec<ScBranch>,
    pub excluded: usize,
}

impl SemiclassicalLwc {
    /// Branches of a pure curve state.
    pub fn pure(curve: &LagrangianCurve, window: &LwcWindow, caustic_threshold: f64) -> Result<Checked<Self>> {
        let data = branches_at(curve, window.q, caustic_threshold)?;
        let branches = data
            .regular()
            .map(|b| ScBranch { p: b.p, amplitude: b.amplitude, slope: b.slope, phi_qq: 0.0 })
            .collect();
        Ok(Self::report(*window, branches, data.caustic_count()))
    }

    /// Branches of the curve evolved for time `t`, each carrying the
    /// decoherence matrix anchored at its final centre `(p_j, Q)`.
    #[allow(clippy::too_many_arguments)]
    pub fn markov(
        initial: &LagrangianCurve,
        h: &HamiltonianModel,
        channels: &[LindbladChannel],
        t: f64,
        dt: f64,
        window: &LwcWindow,
        caustic_threshold: f64,
    ) -> Result<Checked<Self>> {
        let curve = evolve_curve_classically(initial, h, channels, t, dt)?;
        let data = branches_at(&curve, window.q, caustic_threshold)?;
        let regular: Vec<_> = data.regular().copied().collect();
        let branches = regular
            .par_iter()
            .map(|b| {
                let phi = decoherence_matrix(h, channels, PhaseSpacePoint::new(b.p, window.q), t, dt)?;
                Ok(ScBranch { p: b.p, amplitude: b.amplitude, slope: b.slope, phi_qq: shear_phi_qq(&phi.phi, b.slope) })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::report(*window, branches, data.caustic_count()))
    }

    fn report(window: LwcWindow, branches: Vec<ScBranch>, excluded: usize) -> Checked<Self> {
        let warnings = if excluded > 0 {
            vec![Warning::CausticExcluded { count: excluded, q: window.q }]
        } else {
            Vec::new()
        };
        Checked::new(SemiclassicalLwc { window, branches, excluded }, warnings)
    }

    fn sum(&self, xi_q: f64, wavelets: bool, decohere: bool) -> C {
        let w = &self.window;
        self.branches
            .iter()
            .map(|b| {
                let mut expo = 0.0;
                if wavelets {
                    expo -= (w.delta * b.slope * xi_q / w.hbar).powi(2) / 2.0;
                }
                if decohere {
                    expo -= b.phi_qq * xi_q * xi_q / (2.0 * w.hbar);
                }
                C::from_polar(b.amplitude / (2.0 * PI) * expo.exp(), -b.p * xi_q / w.hbar)
            })
            .sum()
    }

    /// `Σ_j (A_j/2π) exp(−i p_j ξ_q/ħ)`.
    pub fn berry(&self, xi_q: f64) -> C {
        self.sum(xi_q, false, false)
    }

    /// Berry terms with the window wavelet factor `exp(−Δ² s_j² ξ_q²/2ħ²)`.
    pub fn quadratic(&self, xi_q: f64) -> C {
        self.sum(xi_q, true, false)
    }

    /// Wavelet terms further damped by `exp(−Φ′_qq ξ_q²/2ħ)`.
    pub fn markov_value(&self, xi_q: f64) -> C {
        self.sum(xi_q, true, true)
    }

    pub fn sample(&self, xi_q: &[f64], form: impl Fn(&Self, f64) -> C + Sync) -> LwcSample {
        LwcSample { window: self.window, xi_q: xi_q.to_vec(), c: xi_q.iter().map(|&x| form(self, x)).collect() }
    }

    /// `Σ_j (A_j/2π) N(p′; p_j, σ_j²)`, `σ_j² = ħΦ′_qq + Δ² s_j²`; a zero
    /// width is floored to the grid spacing.
    pub fn spectrum_closed_form(&self, p: &[f64]) -> Checked<SpectralDensity> {
        let spacing = if p.len() > 1 { (p[1] - p[0]).abs() } else { 1.0 };
        let mut warnings = Vec::new();
        let widths: Vec<f64> = self
            .branches
            .iter()
            .enumerate()
            .map(|(j, b)| {
                let v = b.variance(&self.window);
                if v >= spacing * spacing {
                    v
                } else {
                    warnings.push(Warning::WidthFloor { branch: j, floor: spacing });
                    spacing * spacing
                }
            })
            .collect();
        let s = p
            .iter()
            .map(|&x| {
                self.branches
                    .iter()
                    .zip(&widths)
                    .map(|(b, v)| b.amplitude / (2.0 * PI) * (-(x - b.p).powi(2) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt())
                    .sum()
            })
            .collect();
        Checked::new(SpectralDensity { p: p.to_vec(), s }, warnings)
    }
}

/// Momentum spectrum `S(p′)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralDensity {
    pub p: Vec<f64>,
    pub s: Vec<f64>,
}

/// `S(p′) = (2πħ)⁻¹ ∫ C(ξ_q) exp(i p′ ξ_q/ħ) dξ_q` on the grid conjugate to
/// the sample's centred `ξ_q` grid.
pub fn spectrum(sample: &LwcSample) -> Result<Checked<SpectralDensity>> {
    let m = sample.xi_q.len();
    if m < 4 || m % 2 == 1 {
        return Err(Error::InvalidGrid(format!("spectrum needs an even number of samples, got {m}")));
    }
    let h = sample.xi_q[1] - sample.xi_q[0];
    let centred = sample
        .xi_q
        .iter()
        .enumerate()
        .all(|(k, &x)| (x - (k as f64 - (m / 2) as f64) * h).abs() < 1e-9 * h * m as f64);
    if !(h > 0.0) || !centred {
        return Err(Error::InvalidGrid("spectrum needs a uniform centred xi_q grid".into()));
    }
    let hbar = sample.window.hbar;
    let mut data = sample.c.clone();
    centered_dft(&mut data, true);
    let scale = h / (2.0 * PI * hbar);
    let dp = 2.0 * PI * hbar / (m as f64 * h);
    let p = (0..m).map(|k| (k as f64 - (m / 2) as f64) * dp).collect();
    let peak = data.iter().map(|v| v.norm()).fold(0.0, f64::max) * scale;
    let residue = data.iter().map(|v| v.im.abs()).fold(0.0, f64::max) * scale;
    let mut warnings = Vec::new();
    let edge = sample.edge_ratio();
    if edge > EDGE_TOLERANCE {
        warnings.push(Warning::GridEdge { relative: edge });
    }
    if residue > 1e-10 * peak.max(f64::MIN_POSITIVE) {
        warnings.push(Warning::ImaginaryResidue { max_abs: residue });
    }
    let s = data.iter().map(|v| v.re * scale).collect();
    Ok(Checked::new(SpectralDensity { p, s }, warnings))
}

/// Correlation and spectrum from a chord function; the `ξ_q` range is
/// doubled once if the correlation has not decayed at its edges.
pub fn lwc_spectrum_from_chord(
    chi: &dyn ChordFunction,
    window: &LwcWindow,
    half_width: f64,
    points: usize,
) -> Result<Checked<(LwcSample, SpectralDensity)>> {
    let mut grid = xi_grid(half_width, points)?;
    let mut sample = lwc_from_chord(chi, window, &grid)?;
    if sample.value.edge_ratio() > EDGE_TOLERANCE {
        grid = xi_grid(2.0 * half_width, 2 * points)?;
        sample = lwc_from_chord(chi, window, &grid)?;
    }
    let (sample, mut warnings) = sample.into_parts();
    let (spec, more) = spectrum(&sample)?.into_parts();
    warnings.extend(more);
    Ok(Checked::new((sample, spec), merge_warnings([warnings])))
}

/// A spectral peak fitted by a parabola in `ln S` through five bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub position: f64,
    pub height: f64,
    pub variance: f64,
}

/// Local maxima above `threshold × max S`, each refined by a Gaussian fit.
pub fn find_peaks(spec: &SpectralDensity, threshold: f64) -> Vec<Peak> {
    let s = &spec.s;
    let m = s.len();
    let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut peaks = Vec::new();
    for k in 2..m.saturating_sub(2) {
        if s[k] >= top * threshold && s[k] > s[k - 1] && s[k] >= s[k + 1] {
            if let Some(p) = fit_gaussian(&spec.p[k - 2..=k + 2], &s[k - 2..=k + 2]) {
                peaks.push(p);
            } else {
                peaks.push(Peak { position: spec.p[k], height: s[k], variance: f64::NAN });
            }
        }
    }
    peaks
}

/// Least-squares parabola through `(x, ln y)`; `None` when a value is not
/// positive or the curvature is not negative.
pub fn fit_gaussian(x: &[f64], y: &[f64]) -> Option<Peak> {
    if y.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let x0 = x[x.len() / 2];
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    for (&xi, &yi) in x.iter().zip(y) {
        let d = xi - x0;
        let row = nalgebra::Vector3::new(1.0, d, d * d);
        ata += row * row.transpose();
        atb += row * yi.ln();
    }
    let c = ata.lu().solve(&atb)?;
    if !(c[2] < 0.0) {
        return None;
    }
    let shift = -c[1] / (2.0 * c[2]);
    Some(Peak {
        position: x0 + shift,
        height: (c[0] - c[1] * c[1] / (4.0 * c[2])).exp(),
        variance: -1.0 / (2.0 * c[2]),
    })
}

/// For peaks sorted by momentum with sheared decoherence `Φ′_qq`, whether
/// each adjacent pair stays resolved: `√(ħΦ′_qq) < |p_j − p_{j+1}|` for
/// both members.
pub fn resolution_verdict(peaks: &[(f64, f64)], hbar: f64) -> Vec<bool> {
    let mut sorted = peaks.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    sorted
        .windows(2)
        .map(|w| {
            let gap = (w[1].0 - w[0].0).abs();
            (hbar * w[0].1).sqrt() < gap && (hbar * w[1].1).sqrt() < gap
        })
        .collect()
}

/// First time at which a verdict series turns from resolved to unresolved.
pub fn verdict_crossing(times: &[f64], resolved: &[bool]) -> Option<f64> {
    let k = resolved.windows(2).position(|w| w[0] && !w[1])?;
    times.get(k + 1).copied()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{default_caustic_threshold, CurveChordFunction};

    #[test]
    fn translation_symbol_examples() {
        let w = LwcWindow::new(0.3, 0.2, 0.05).unwrap();
        let peak = local_translation_weyl(&w, 0.0, PhaseSpacePoint::new(1.0, 0.3));
        assert!((peak - C::from(1.0 / ((2.0 * PI).sqrt() * 0.2))).norm() < 1e-14);
        let a = local_translation_weyl(&w, 0.4, PhaseSpacePoint::new(1.0, 0.5));
        let b = local_translation_weyl(&w, 0.4, PhaseSpacePoint::new(-2.0, 0.5));
        assert!((a.norm() - b.norm()).abs() < 1e-15);
        let far = local_translation_weyl(&w, 0.0, PhaseSpacePoint::new(0.0, 0.3 + 3.0 * 0.2));
        assert!((far.norm() / peak.norm() - (-4.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn coherent_chord_route_matches_closed_form() {
        let hbar = 0.05;
        let s = CoherentState::new(PhaseSpacePoint::new(0.7, 0.2), hbar).unwrap();
        let w = LwcWindow::canonical(0.35, hbar).unwrap();
        let xs = [-0.3, -0.1, 0.0, 0.05, 0.2];
        let r = lwc_from_chord(&s, &w, &xs).unwrap();
        assert!(r.warnings.is_empty(), "{:?}", r.warnings);
        for (x, c) in xs.iter().zip(&r.value.c) {
            assert!((c - lwc_coherent_closed_form(&s, &w, *x)).norm() < 1e-8);
        }
        let far = LwcWindow::canonical(5.0, hbar).unwrap();
        assert!(lwc_from_chord(&s, &far, &[0.0]).unwrap().value.c[0].norm() < 1e-10);
    }

    #[test]
    fn translated_state_shifts_window_and_phase() {
        let hbar = 0.05;
        let base = CoherentState::new(PhaseSpacePoint::ORIGIN, hbar).unwrap();
        let eta = PhaseSpacePoint::new(0.4, -0.3);
        let moved = CoherentState::new(eta, hbar).unwrap();
        let w = LwcWindow::canonical(0.1, hbar).unwrap();
        let w0 = LwcWindow::canonical(0.1 - eta.q, hbar).unwrap();
        for &x in &[-0.2, 0.1, 0.25] {
            let a = lwc_from_chord(&moved, &w, &[x]).unwrap().value.c[0];
            let b = lwc_from_chord(&base, &w0, &[x]).unwrap().value.c[0] * C::from_polar(1.0, -eta.p * x / hbar);
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn direct_route_matches_closed_form() {
        let hbar = 0.05;
        let eta = PhaseSpacePoint::new(0.5, 0.1);
        let rho = FockDensityMatrix::coherent(eta, hbar, 64).unwrap();
        let h = 0.01;
        let pos = PositionDensity::from_fock(&rho, -2.0, h, 401).unwrap();
        let s = CoherentState::new(eta, hbar).unwrap();
        let w = LwcWindow::canonical(0.2, hbar).unwrap();
        for j in [-10i32, 0, 3, 12] {
            let x = 2.0 * h * j as f64;
            let c = lwc_direct(&pos, &w, x).unwrap();
            assert!((c - lwc_coherent_closed_form(&s, &w, x)).norm() < 1e-8);
        }
        let zero = lwc_direct(&pos, &w, 0.0).unwrap();
        assert!(zero.re > 0.0 && zero.im.abs() < 1e-14);
        assert!(lwc_direct(&pos, &w, 0.015).is_err());
        assert!(lwc_direct(&pos, &LwcWindow::canonical(1.9, hbar).unwrap(), 0.0).is_err());
    }

    #[test]
    fn berry_for_circle() {
        let hbar = 0.05;
        let c = LagrangianCurve::circle(0.5, PhaseSpacePoint::ORIGIN, 1024).unwrap();
        let w = LwcWindow::canonical(0.0, hbar).unwrap();
        let sc = SemiclassicalLwc::pure(&c, &w, default_caustic_threshold(hbar)).unwrap().value;
        for &x in &[0.0, 0.013, -0.2] {
            let expected = 2.0 * (x / hbar).cos() / (2.0 * PI);
            assert!((sc.berry(x) - C::from(expected)).norm() < 1e-9);
            assert!((sc.quadratic(x) - sc.berry(x)).norm() < 1e-9);
            assert!((sc.berry(-x) - sc.berry(x).conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn quadratic_form_approaches_curve_chord_route() {
        let c = LagrangianCurve::circle(0.5, PhaseSpacePoint::ORIGIN, 4096).unwrap();
        let worst = |hbar: f64| {
            let w = LwcWindow::canonical(0.6, hbar).unwrap();
            let sc = SemiclassicalLwc::pure(&c, &w, default_caustic_threshold(hbar)).unwrap().value;
            for b in &sc.branches {
                assert!((b.slope.abs() - 0.75).abs() < 1e-8);
            }
            let chi = CurveChordFunction::new(&c, hbar).unwrap();
            let xs: Vec<f64> = (0..=10).map(|k| k as f64 * hbar.sqrt() / 10.0).collect();
            let exact = lwc_from_chord(&chi, &w, &xs).unwrap().value;
            let scale = exact.c[0].norm();
            let mut err = 0.0f64;
            for (x, e) in xs.iter().zip(&exact.c) {
                assert!((lwc_of_classical_curve(&c, &w, *x) - e).norm() < 1e-9 * scale);
                err = err.max((sc.quadratic(*x) - e).norm() / scale);
            }
            err
        };
        let (coarse, fine) = (worst(0.01), worst(0.0025));
        assert!(coarse < 0.15, "{coarse}");
        assert!(fine < 0.7 * coarse, "{fine} vs {coarse}");
    }

    #[test]
    fn shear_examples() {
        let a = 0.7;
        let phi = Mat2::new(a, 0.0, 0.0, 0.0);
        assert!((shear_phi_qq(&phi, 1.3) - a * 1.69).abs() < 1e-14);
        let full = Mat2::new(0.4, 0.1, 0.1, 0.9);
        assert!((shear_phi_qq(&full, 0.0) - 0.9).abs() < 1e-15);
        let xi = ChordVector::new(1.3 * 0.5, 0.5);
        assert!((shear_phi_qq(&full, 1.3) * 0.25 - xi.quadratic_form(&full)).abs() < 1e-14);
    }

    #[test]
    fn coherent_spectrum_peak() {
        let hbar = 0.05;
        let s = CoherentState::new(PhaseSpacePoint::new(0.6, 0.0), hbar).unwrap();
        let w = LwcWindow::canonical(0.0, hbar).unwrap();
        let grid = xi_grid(3.0, 512).unwrap();
        let sample = LwcSample {
            window: w,
            xi_q: grid.clone(),
            c: grid.iter().map(|&x| lwc_coherent_closed_form(&s, &w, x)).collect(),
        };
        let spec = spectrum(&sample).unwrap();
        assert!(spec.warnings.is_empty(), "{:?}", spec.warnings);
        let peaks = find_peaks(&spec.value, 1e-3);
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].position - 0.6).abs() < 1e-6);
        assert!((peaks[0].variance - hbar / 2.0).abs() < 1e-6);
    }

    #[test]
    fn closed_form_spectrum_floors_flat_branches() {
        let w = LwcWindow::canonical(0.0, 0.05).unwrap();
        let sc = SemiclassicalLwc {
            window: w,
            branches: vec![ScBranch { p: 0.5, amplitude: 1.0, slope: 0.0, phi_qq: 0.0 }],
            excluded: 0,
        };
        let p: Vec<f64> = (0..101).map(|k| k as f64 * 0.01).collect();
        let r = sc.spectrum_closed_form(&p);
        assert!(matches!(r.warnings[0], Warning::WidthFloor { .. }));
        let k = r.value.s.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!((p[k] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn verdict_examples() {
        assert_eq!(resolution_verdict(&[(-1.0, 0.0), (1.0, 0.0)], 0.05), vec![true]);
        assert_eq!(resolution_verdict(&[(-1.0, 9.0), (1.0, 9.0)], 1.0), vec![false]);
        let times = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(verdict_crossing(&times, &[true, true, false, false]), Some(2.0));
        assert_eq!(verdict_crossing(&times, &[true, true, true, true]), None);
    }

    #[test]
    fn observables() {
        let c = C::new(0.3, -0.2);
        let plus = symmetrized_observable_expectation(c, true);
        let minus = symmetrized_observable_expectation(c, false);
        assert!((plus * plus + minus * minus - 4.0 * c.norm_sqr()).abs() < 1e-15);
    }
}

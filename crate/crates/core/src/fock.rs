//! Number-basis reference solver for one degree of freedom: truncated
//! density matrices under the Lindblad equation with linear operators,
//! with exact chord, Wigner and position-space extraction.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{HamiltonianModel, LindbladChannel};
use crate::error::{Checked, Error, Result};
use crate::phase_space::{centre_from_chord_onto, CenteredGrid, ChordGrid, ChordVector, PhaseSpacePoint, WignerGrid};

type C = Complex64;
const I: C = C::new(0.0, 1.0);

pub const DEFAULT_DIM: usize = 128;
/// Largest population tolerated in the top tenth of the levels.
pub const LEAK_TOLERANCE: f64 = 1e-6;
const MAX_RETRY_DIM: usize = 1024;

/// Extra levels used when forming polynomial operators before truncation,
/// so that every kept matrix element is exact.
const POLYNOMIAL_PADDING: usize = 4;

/// A density matrix in the truncated number basis of `a = (q̂ + i p̂)/√(2ħ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    pub rho: DMatrix<C>,
    pub hbar: f64,
}

fn check_hbar(hbar: f64) -> Result<()> {
    if hbar.is_finite() && hbar > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("hbar must be > 0, got {hbar}")))
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim >= 2 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("basis dimension must be >= 2, got {dim}")))
    }
}

/// `α = (q + i p)/√(2ħ)` for a phase-space vector `(p, q)`.
pub fn ladder_amplitude(p: f64, q: f64, hbar: f64) -> C {
    C::new(q, p) / (2.0 * hbar).sqrt()
}

fn coherent_amplitudes(alpha: C, dim: usize) -> Vec<C> {
    let mut c = Vec::with_capacity(dim);
    c.push(C::from((-alpha.norm_sqr() / 2.0).exp()));
    for n in 1..dim {
        let prev = c[n - 1];
        c.push(prev * alpha / (n as f64).sqrt());
    }
    c
}

impl FockDensityMatrix {
    pub fn new(rho: DMatrix<C>, hbar: f64) -> Result<Self> {
        check_hbar(hbar)?;
        check_dim(rho.nrows())?;
        if !rho.is_square() {
            return Err(Error::InvalidParameter("density matrix must be square".into()));
        }
        Ok(FockDensityMatrix { rho, hbar })
    }

    /// `|ψ⟩⟨ψ|` for a normalized state vector.
    pub fn pure(psi: &[C], hbar: f64) -> Result<Self> {
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter("state vector has zero or non-finite norm".into()));
        }
        let v = nalgebra::DVector::from_iterator(psi.len(), psi.iter().map(|c| c / norm));
        Self::new(&v * v.adjoint(), hbar)
    }

    pub fn fock(n: usize, hbar: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if n >= dim {
            return Err(Error::InvalidParameter(format!("level {n} outside basis of dim {dim}")));
        }
        let mut psi = vec![C::from(0.0); dim];
        psi[n] = C::from(1.0);
        Self::pure(&psi, hbar)
    }

    /// Coherent state centred at `eta`.
    pub fn coherent(eta: PhaseSpacePoint, hbar: f64, dim: usize) -> Result<Self> {
        check_hbar(hbar)?;
        check_dim(dim)?;
        let psi = coherent_amplitudes(ladder_amplitude(eta.p, eta.q, hbar), dim);
        Self::pure(&psi, hbar)
    }

    /// `|η⟩ + sign |−η⟩`, normalized.
    pub fn cat(eta: PhaseSpacePoint, sign: f64, hbar: f64, dim: usize) -> Result<Self> {
        check_hbar(hbar)?;
        check_dim(dim)?;
        let a = coherent_amplitudes(ladder_amplitude(eta.p, eta.q, hbar), dim);
        let b = coherent_amplitudes(-ladder_amplitude(eta.p, eta.q, hbar), dim);
        let psi: Vec<C> = a.iter().zip(&b).map(|(x, y)| x + y * sign).collect();
        Self::pure(&psi, hbar)
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> C {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * C::from(0.5);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Population of the top tenth of the levels.
    pub fn leak(&self) -> f64 {
        let d = self.dim();
        let top = (d / 10).max(1);
        (d - top..d).map(|n| self.rho[(n, n)].re).sum()
    }

    pub fn check_leak(&self) -> Result<()> {
        let population = self.leak();
        if population < LEAK_TOLERANCE {
            Ok(())
        } else {
            Err(Error::TruncationLeak { dim: self.dim(), population })
        }
    }

    /// `(⟨p̂⟩, ⟨q̂⟩)`.
    pub fn mean(&self) -> PhaseSpacePoint {
        let d = self.dim();
        let mut a = C::from(0.0);
        for n in 1..d {
            a += self.rho[(n, n - 1)] * (n as f64).sqrt();
        }
        let s = (2.0 * self.hbar).sqrt();
        PhaseSpacePoint::new(a.im * s, a.re * s)
    }

    /// `χ(ξ) = (2πħ)⁻¹ tr(T̂_{−ξ} ρ̂)`.
    pub fn chord(&self, xi: ChordVector) -> C {
        chord_function_exact(self, xi)
    }
}

/// Row-sparse operator for banded matrices.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    dim: usize,
    rows: Vec<Vec<(usize, C)>>,
}

impl SparseOperator {
    pub fn from_dense(m: &DMatrix<C>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| (0..m.ncols()).filter(|&j| m[(i, j)] != C::from(0.0)).map(|j| (j, m[(i, j)])).collect())
            .collect();
        SparseOperator { dim: m.nrows(), rows }
    }

    pub fn to_dense(&self) -> DMatrix<C> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// `S M`.
    pub fn mul_left(&self, m: &DMatrix<C>) -> DMatrix<C> {
        let d = self.dim;
        let mut out = DMatrix::zeros(d, m.ncols());
        for j in 0..m.ncols() {
            let col = m.column(j);
            for (i, row) in self.rows.iter().enumerate() {
                let mut acc = C::from(0.0);
                for &(k, v) in row {
                    acc += v * col[k];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }
}

fn annihilation(dim: usize) -> DMatrix<C> {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C::from((n as f64).sqrt());
    }
    a
}

/// `(p̂, q̂)` in the truncated basis.
pub fn quadratures(hbar: f64, dim: usize) -> (DMatrix<C>, DMatrix<C>) {
    let a = annihilation(dim);
    let ad = a.adjoint();
    let s = (hbar / 2.0).sqrt();
    let q = (&a + &ad) * C::from(s);
    let p = (&ad - &a) * (I * s);
    (p, q)
}

/// `L̂ = (l'_p + i l''_p) p̂ + (l'_q + i l''_q) q̂`.
pub fn build_linear_lindblad(channel: &LindbladChannel, hbar: f64, dim: usize) -> Result<DMatrix<C>> {
    check_hbar(hbar)?;
    check_dim(dim)?;
    channel.validate()?;
    let (p, q) = quadratures(hbar, dim);
    let cp = C::new(channel.l_re[0], channel.l_im[0]);
    let cq = C::new(channel.l_re[1], channel.l_im[1]);
    Ok(p * cp + q * cq)
}

/// Weyl-ordered matrix of a polynomial Hamiltonian, truncated to `dim`.
pub fn build_hamiltonian(h: &HamiltonianModel, hbar: f64, dim: usize) -> Result<DMatrix<C>> {
    check_hbar(hbar)?;
    check_dim(dim)?;
    h.validate()?;
    let big = dim + POLYNOMIAL_PADDING;
    let (p, q) = quadratures(hbar, big);
    let r = |v: f64| C::from(v);
    let full = match *h {
        HamiltonianModel::Zero => DMatrix::zeros(big, big),
        HamiltonianModel::Linear { a_p, a_q } => &p * r(a_p) + &q * r(a_q),
        HamiltonianModel::Free { mass } => &p * &p * r(0.5 / mass),
        HamiltonianModel::Harmonic { omega } => (&p * &p + &q * &q) * r(0.5 * omega),
        HamiltonianModel::Quadratic { k } => {
            let pq = (&p * &q + &q * &p) * r(0.5);
            (&p * &p * r(k[0][0]) + pq * r(k[0][1] + k[1][0]) + &q * &q * r(k[1][1])) * r(0.5)
        }
        HamiltonianModel::Quartic { a, b } => {
            let q2 = &q * &q;
            &p * &p * r(0.5) + &q2 * r(0.5 * a) + &q2 * &q2 * r(0.25 * b)
        }
        HamiltonianModel::Pendulum { .. } => return Err(Error::NoMatrixForm(h.name().into())),
    };
    Ok(full.view((0, 0), (dim, dim)).into_owned())
}

/// Operators of the Lindblad generator in the number basis, with the
/// anti-Hermitian part folded into `K = H − (i/2) Σ L†L`.
#[derive(Debug, Clone)]
pub struct FockGenerator {
    pub hbar: f64,
    pub dim: usize,
    k: SparseOperator,
    jumps: Vec<SparseOperator>,
}

impl FockGenerator {
    pub fn new(h: &HamiltonianModel, channels: &[LindbladChannel], hbar: f64, dim: usize) -> Result<Self> {
        let big = dim + POLYNOMIAL_PADDING;
        let mut k = build_hamiltonian(h, hbar, big)?;
        let mut jumps = Vec::with_capacity(channels.len());
        for c in channels {
            let l = build_linear_lindblad(c, hbar, big)?;
            k -= (l.adjoint() * &l) * (I * 0.5);
            jumps.push(SparseOperator::from_dense(&l.view((0, 0), (dim, dim)).into_owned()));
        }
        let k = SparseOperator::from_dense(&k.view((0, 0), (dim, dim)).into_owned());
        Ok(FockGenerator { hbar, dim, k, jumps })
    }

    /// `dρ/dt = −(i/ħ)(Kρ − ρK†) + (1/ħ) Σ LρL†`.
    pub fn rhs(&self, rho: &DMatrix<C>) -> DMatrix<C> {
        let kr = self.k.mul_left(rho);
        let mut out = (&kr - kr.adjoint()) * (-I / self.hbar);
        for l in &self.jumps {
            let lr = l.mul_left(rho);
            out += l.mul_left(&lr.adjoint()) * C::from(1.0 / self.hbar);
        }
        out
    }
}

/// Fixed-step RK4 integration of the Lindblad equation, re-symmetrized
/// after every step.
pub fn lindblad_evolve(rho0: &FockDensityMatrix, gen: &FockGenerator, t: f64, dt: f64) -> Result<FockDensityMatrix> {
    Ok(lindblad_snapshots(rho0, gen, &[t], dt)?.pop().expect("one snapshot"))
}

/// States at each of the increasing `times`.
pub fn lindblad_snapshots(
    rho0: &FockDensityMatrix,
    gen: &FockGenerator,
    times: &[f64],
    dt: f64,
) -> Result<Vec<FockDensityMatrix>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be > 0, got {dt}")));
    }
    if rho0.dim() != gen.dim || (rho0.hbar - gen.hbar).abs() > 1e-14 * gen.hbar {
        return Err(Error::InvalidParameter("state and generator disagree on dim or hbar".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidParameter("snapshot times must be finite, >= 0 and increasing".into()));
    }
    rho0.check_leak()?;
    let mut rho = rho0.rho.clone();
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - now;
        if span > 0.0 {
            let n = (span / dt).ceil() as usize;
            let h = span / n as f64;
            for step in 0..n {
                let k1 = gen.rhs(&rho);
                let k2 = gen.rhs(&(&rho + &k1 * C::from(h / 2.0)));
                let k3 = gen.rhs(&(&rho + &k2 * C::from(h / 2.0)));
                let k4 = gen.rhs(&(&rho + &k3 * C::from(h)));
                rho += (k1 + k2 * C::from(2.0) + k3 * C::from(2.0) + k4) * C::from(h / 6.0);
                rho = (&rho + rho.adjoint()) * C::from(0.5);
                if step % 64 == 63 || step + 1 == n {
                    if !rho.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
                        return Err(Error::NonFinite { context: "Lindblad evolution", time: now + (step + 1) as f64 * h });
                    }
                    FockDensityMatrix { rho: rho.clone(), hbar: gen.hbar }.check_leak()?;
                }
            }
        }
        now = target;
        out.push(FockDensityMatrix { rho: rho.clone(), hbar: gen.hbar });
    }
    Ok(out)
}

/// Evolves from `initial(dim)`, doubling the basis on truncation leaks.
pub fn evolve_with_retry(
    initial: impl Fn(usize) -> Result<FockDensityMatrix>,
    h: &HamiltonianModel,
    channels: &[LindbladChannel],
    hbar: f64,
    times: &[f64],
    dt: f64,
    dim: usize,
) -> Result<Vec<FockDensityMatrix>> {
    let mut d = dim;
    loop {
        let attempt = initial(d).and_then(|rho0| {
            let gen = FockGenerator::new(h, channels, hbar, d)?;
            lindblad_snapshots(&rho0, &gen, times, dt)
        });
        match attempt {
            Err(Error::TruncationLeak { .. }) if d * 2 <= MAX_RETRY_DIM => d *= 2,
            other => return other,
        }
    }
}

/// Visits `(m, n, ⟨m|D(α)|n⟩)` for every element of the truncated
/// displacement matrix, diagonal by diagonal, using the normalized
/// associated-Laguerre recurrence.
fn for_each_displacement(alpha: C, dim: usize, mut f: impl FnMut(usize, usize, C)) {
    let x = alpha.norm_sqr();
    if x == 0.0 {
        for n in 0..dim {
            f(n, n, C::from(1.0));
        }
        return;
    }
    let phi = alpha.arg();
    let mut lnfact = 0.0;
    for k in 0..dim {
        if k > 0 {
            lnfact += (k as f64).ln();
        }
        let kf = k as f64;
        let below = C::from_polar(1.0, kf * phi);
        let above = C::from_polar(if k % 2 == 0 { 1.0 } else { -1.0 }, -kf * phi);
        let mut prev = 0.0;
        let mut cur = (0.5 * kf * x.ln() - 0.5 * x - 0.5 * lnfact).exp();
        for n in 0..dim - k {
            f(n + k, n, below * cur);
            if k > 0 {
                f(n, n + k, above * cur);
            }
            let nf = n as f64;
            let next = ((2.0 * nf + 1.0 + kf - x) * cur - (nf * (nf + kf)).sqrt() * prev) / ((nf + 1.0) * (nf + kf + 1.0)).sqrt();
            prev = cur;
            cur = next;
        }
    }
}

/// `⟨m|D(α)|n⟩` for `D(α) = exp(α a† − α* a)`.
pub fn displacement_matrix(alpha: C, dim: usize) -> DMatrix<C> {
    let mut d = DMatrix::zeros(dim, dim);
    for_each_displacement(alpha, dim, |m, n, v| d[(m, n)] = v);
    d
}

/// `(2πħ)⁻¹ tr(T̂_{−ξ} ρ̂)`, with `T̂_ξ = D(α)`, `α = (ξ_q + iξ_p)/√(2ħ)`.
pub fn chord_function_exact(rho: &FockDensityMatrix, xi: ChordVector) -> C {
    let alpha = -ladder_amplitude(xi.xi_p, xi.xi_q, rho.hbar);
    let mut acc = C::from(0.0);
    for_each_displacement(alpha, rho.dim(), |m, n, v| acc += v * rho.rho[(n, m)]);
    acc / (2.0 * PI * rho.hbar)
}

pub fn chord_grid_exact(rho: &FockDensityMatrix, chord_grid: &CenteredGrid) -> Result<ChordGrid> {
    rho.check_leak()?;
    ChordGrid::sample(*chord_grid, |xi| chord_function_exact(rho, xi))
}

/// Wigner function on `centre_grid` from the exact chord function on the
/// conjugate grid.
pub fn wigner_exact(rho: &FockDensityMatrix, centre_grid: &CenteredGrid) -> Result<Checked<WignerGrid>> {
    let chi = chord_grid_exact(rho, &centre_grid.conjugate())?;
    centre_from_chord_onto(&chi, centre_grid)
}

/// `W(x) = (πħ)⁻¹ Σ_n (−1)ⁿ ⟨n|D(β)† ρ̂ D(β)|n⟩` at a single point.
pub fn wigner_at(rho: &FockDensityMatrix, x: PhaseSpacePoint) -> f64 {
    let d = displacement_matrix(ladder_amplitude(x.p, x.q, rho.hbar), rho.dim());
    let m = d.adjoint() * &rho.rho * d;
    let s: f64 = (0..rho.dim()).map(|n| if n % 2 == 0 { m[(n, n)].re } else { -m[(n, n)].re }).sum();
    s / (PI * rho.hbar)
}

/// Normalized Hermite functions `ψ_n(q)`, `n < dim`, through a recurrence
/// carried with a running exponent so that no intermediate overflows or
/// underflows.
pub fn hermite_functions(q: f64, hbar: f64, dim: usize) -> Vec<f64> {
    const BIG: f64 = 1e150;
    let mut out = Vec::with_capacity(dim);
    let mut log_scale = -q * q / (2.0 * hbar) - 0.25 * (PI * hbar).ln();
    let mut prev = 0.0;
    let mut cur: f64 = 1.0;
    let c = (2.0 / hbar).sqrt() * q;
    for n in 0..dim {
        out.push(if cur == 0.0 { 0.0 } else { cur.signum() * (cur.abs().ln() + log_scale).exp() });
        let nf = n as f64;
        let next = c / (nf + 1.0).sqrt() * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            cur /= BIG;
            prev /= BIG;
            log_scale += BIG.ln();
        }
    }
    out
}

/// `⟨q_a|ρ̂|q_b⟩` on a list of positions.
pub fn position_density_matrix(rho: &FockDensityMatrix, q: &[f64]) -> Result<DMatrix<C>> {
    rho.check_leak()?;
    let d = rho.dim();
    let rows: Vec<Vec<f64>> = q.par_iter().map(|&x| hermite_functions(x, rho.hbar, d)).collect();
    let psi = DMatrix::from_fn(q.len(), d, |a, n| C::from(rows[a][n]));
    Ok(&psi * &rho.rho * psi.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{coherent_chord_function, CoherentState};

    #[test]
    fn lowering_channel_matrix_elements() {
        let hbar = 0.1;
        let l = build_linear_lindblad(&LindbladChannel::new([0.0, 1.0], [1.0, 0.0]), hbar, 16).unwrap();
        for n in 1..16 {
            assert!((l[(n - 1, n)] - C::from((2.0 * hbar * n as f64).sqrt())).norm() < 1e-13);
        }
        assert!(l.iter().enumerate().all(|(k, v)| { let (i, j) = (k % 16, k / 16); j == i + 1 || v.norm() < 1e-14 }));
        let herm = build_linear_lindblad(&LindbladChannel::hermitian([0.4, -0.3]), hbar, 16).unwrap();
        assert!((&herm - herm.adjoint()).norm() < 1e-14);
    }

    #[test]
    fn canonical_commutator_on_kept_block() {
        let hbar = 0.07;
        let (p, q) = quadratures(hbar, 20);
        let c = &q * &p - &p * &q;
        for i in 0..19 {
            for j in 0..19 {
                let expected = if i == j { I * hbar } else { C::from(0.0) };
                assert!((c[(i, j)] - expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn displacement_is_unitary_on_low_block() {
        let d = displacement_matrix(C::new(0.7, -0.4), 80);
        let u = d.adjoint() * &d;
        for i in 0..20 {
            for j in 0..20 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((u[(i, j)] - C::from(e)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn displacement_of_vacuum_is_coherent() {
        let alpha = C::new(1.2, 0.5);
        let d = displacement_matrix(alpha, 40);
        let c = coherent_amplitudes(alpha, 40);
        for n in 0..40 {
            assert!((d[(n, 0)] - c[n]).norm() < 1e-13);
        }
    }

    #[test]
    fn coherent_chord_matches_closed_form() {
        let hbar = 0.05;
        let eta = PhaseSpacePoint::new(0.6, -0.8);
        let rho = FockDensityMatrix::coherent(eta, hbar, 96).unwrap();
        let s = CoherentState::new(eta, hbar).unwrap();
        for &(a, b) in &[(0.0, 0.0), (0.1, 0.2), (-0.3, 0.25), (0.4, 0.0)] {
            let xi = ChordVector::new(a, b);
            let exact = chord_function_exact(&rho, xi);
            assert!((exact - coherent_chord_function(&s, xi)).norm() * 2.0 * PI * hbar < 1e-8);
            assert!((chord_function_exact(&rho, -xi) - exact.conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn fock_one_is_negative_at_origin() {
        let hbar = 0.05;
        let rho = FockDensityMatrix::fock(1, hbar, 32).unwrap();
        let w = wigner_at(&rho, PhaseSpacePoint::ORIGIN);
        assert!((w + 1.0 / (PI * hbar)).abs() < 1e-10);

        let grid = CenteredGrid::square(1.5, 64, hbar).unwrap();
        let wg = wigner_exact(&rho, &grid).unwrap().value;
        assert!((wg.integral() - 1.0).abs() < 1e-8);
        let centre = wg.at(32, 32);
        assert!((centre + 1.0 / (PI * hbar)).abs() < 1e-8);
    }

    #[test]
    fn coherent_position_density_is_gaussian() {
        let hbar = 0.05;
        let eta = PhaseSpacePoint::new(0.3, 0.4);
        let rho = FockDensityMatrix::coherent(eta, hbar, 64).unwrap();
        let qs: Vec<f64> = (0..41).map(|k| -0.5 + 0.05 * k as f64).collect();
        let m = position_density_matrix(&rho, &qs).unwrap();
        for (a, &q) in qs.iter().enumerate() {
            let exact = (-(q - eta.q).powi(2) / hbar).exp() / (PI * hbar).sqrt();
            assert!((m[(a, a)].re - exact).abs() < 1e-10);
            assert!(m[(a, a)].im.abs() < 1e-12);
        }
    }

    #[test]
    fn hermite_functions_survive_far_tails() {
        let v = hermite_functions(40.0, 1.0, 128);
        assert!(v.iter().all(|x| x.is_finite()));
        assert!(v[127] > 0.0);
    }

    #[test]
    fn free_rotation_keeps_coherent_states_pure() {
        let hbar = 0.05;
        let eta = PhaseSpacePoint::new(0.0, 0.8);
        let rho0 = FockDensityMatrix::coherent(eta, hbar, 64).unwrap();
        let gen = FockGenerator::new(&HamiltonianModel::harmonic(), &[], hbar, 64).unwrap();
        let rho = lindblad_evolve(&rho0, &gen, PI / 2.0, 2e-3).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-8);
        // q̇ = p, ṗ = −q: (0, 0.8) → (−0.8, 0)
        let m = rho.mean();
        assert!((m.p + 0.8).abs() < 1e-8 && m.q.abs() < 1e-8);
        assert!((rho.trace().re - 1.0).abs() < 1e-10);
        let same = lindblad_evolve(&rho0, &gen, 0.0, 1e-2).unwrap();
        assert_eq!(same, rho0);
    }

    #[test]
    fn damping_reduces_cat_purity_monotonically() {
        let hbar = 0.05;
        let rho0 = FockDensityMatrix::cat(PhaseSpacePoint::new(0.0, 0.7), 1.0, hbar, 64).unwrap();
        let gen = FockGenerator::new(&HamiltonianModel::Zero, &[LindbladChannel::damping(0.3)], hbar, 64).unwrap();
        let times: Vec<f64> = (1..=10).map(|k| 0.1 * k as f64).collect();
        let snaps = lindblad_snapshots(&rho0, &gen, &times, 2e-3).unwrap();
        let mut last = rho0.purity();
        for s in &snaps {
            assert!(s.purity() < last);
            assert!((s.trace().re - 1.0).abs() < 1e-8);
            assert!(s.min_eigenvalue() > -1e-8);
            last = s.purity();
        }
    }

    #[test]
    fn leaking_basis_is_rejected_and_retried() {
        let hbar = 0.05;
        let eta = PhaseSpacePoint::new(0.0, 2.0);
        assert!(matches!(
            FockDensityMatrix::coherent(eta, hbar, 48).unwrap().check_leak(),
            Err(Error::TruncationLeak { .. })
        ));
        let snaps = evolve_with_retry(
            |d| FockDensityMatrix::coherent(eta, hbar, d),
            &HamiltonianModel::harmonic(),
            &[],
            hbar,
            &[0.1],
            1e-3,
            48,
        )
        .unwrap();
        assert!(snaps[0].dim() >= 96);
    }

    #[test]
    fn pendulum_has_no_matrix_form() {
        assert!(matches!(
            build_hamiltonian(&HamiltonianModel::Pendulum { k: 1.0 }, 0.1, 8),
            Err(Error::NoMatrixForm(_))
        ));
    }
}

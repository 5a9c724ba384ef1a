use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::phase_space::{symplectic_matrix, ChordVector, Mat2, PhaseSpacePoint};

use super::trajectory::{check_times, integrate_centre, step_count, trajectory_with_steps, Flow};
use super::{total_diffusion, CentreTrajectory, HamiltonianModel, LindbladChannel};

/// Decoherence matrix `Φ(t; x)` anchored at the final centre `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceMatrix {
    pub phi: Mat2,
    pub t: f64,
    pub anchor: PhaseSpacePoint,
}

impl DecoherenceMatrix {
    /// `ξ·Φξ`.
    pub fn quadratic_form(&self, xi: ChordVector) -> f64 {
        xi.quadratic_form(&self.phi)
    }
}

/// Maps a chord at the final time back to the chord at time `τ`:
/// `G(τ→t) = J F_τ⁻ᵀ F_tᵀ Jᵀ`. Without dissipation this is `F(τ→t)⁻¹`.
pub(crate) fn chord_propagator(f_tau: &Mat2, f_t: &Mat2) -> Mat2 {
    let j = symplectic_matrix();
    let f_tau_inv_t = f_tau.try_inverse().expect("monodromy is invertible").transpose();
    j * f_tau_inv_t * f_t.transpose() * j.transpose()
}

fn simpson<T>(values: &[T], h: f64) -> T
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = values.len() - 1;
    debug_assert!(n.is_multiple_of(2) && n >= 2);
    let mut acc = values[0] + values[n];
    for (k, v) in values.iter().enumerate().take(n).skip(1) {
        acc = acc + *v * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * (h / 3.0)
}

/// `Φ = ∫₀ᵗ G(τ→t)ᵀ A G(τ→t) dτ` along a stored trajectory, by composite
/// Simpson over its steps.
pub fn phi_at_end(traj: &CentreTrajectory, channels: &[LindbladChannel]) -> Mat2 {
    let n = traj.times.len() - 1;
    if n == 0 {
        return Mat2::zeros();
    }
    let a = total_diffusion(channels);
    let f_t = traj.end_monodromy();
    let integrand: Vec<Mat2> = traj
        .monodromy
        .iter()
        .map(|f| {
            let g = chord_propagator(f, &f_t);
            g.transpose() * a * g
        })
        .collect();
    let phi = simpson(&integrand, traj.duration() / n as f64);
    (phi + phi.transpose()) * 0.5
}

/// Decoherence matrix for the trajectory that ends at `x_final` after time `t`.
pub fn decoherence_matrix(
    h: &HamiltonianModel,
    channels: &[LindbladChannel],
    x_final: PhaseSpacePoint,
    t: f64,
    dt: f64,
) -> Result<DecoherenceMatrix> {
    check_times(t, dt)?;
    let flow = Flow::new(h, channels);
    let steps = step_count(t, dt, 2);
    let x0 = integrate_centre(&flow, x_final, t, steps, -1.0)?;
    let traj = trajectory_with_steps(&flow, x0, t, steps)?;
    Ok(DecoherenceMatrix { phi: phi_at_end(&traj, channels), t, anchor: x_final })
}

/// `exp(i x∧ξ/ħ) · exp(-ξ·Φξ / 2ħ)`.
pub fn decohered_reflection_symbol(x_final: PhaseSpacePoint, xi: ChordVector, phi: &Mat2, hbar: f64) -> Complex64 {
    let phase = x_final.wedge(xi) / hbar;
    let damping = -xi.quadratic_form(phi) / (2.0 * hbar);
    Complex64::from_polar(damping.exp(), phase)
}

#[derive(Debug, Clone, Copy)]
pub struct PositivityOptions {
    /// Integration step.
    pub dt: f64,
    /// Largest time searched before giving up.
    pub horizon: f64,
}

impl Default for PositivityOptions {
    fn default() -> Self {
        PositivityOptions { dt: 1e-3, horizon: 1e3 }
    }
}

/// Integrand of the decoherence matrix pulled back to initial chords,
/// `G(0→τ)⁻ᵀ A G(0→τ)⁻¹`.
fn initial_frame_integrand(f: &Mat2, a: &Mat2) -> Mat2 {
    let g_inv = chord_propagator(&Mat2::identity(), f).try_inverse().expect("monodromy is invertible");
    g_inv.transpose() * a * g_inv
}

struct Sweep<'a> {
    flow: Flow<'a>,
    a: Mat2,
}

impl Sweep<'_> {
    /// Advances `(x, F, Φ_init)` over `[0, span]` with `steps` (even) steps.
    fn advance(&self, x: &mut crate::phase_space::Vec2, f: &mut Mat2, phi: &mut Mat2, span: f64, steps: usize) {
        let h = span / steps as f64;
        let mut vals = Vec::with_capacity(steps + 1);
        vals.push(initial_frame_integrand(f, &self.a));
        for _ in 0..steps {
            let (nx, nf) = self.flow.step(*x, *f, h, 1.0);
            *x = nx;
            *f = nf;
            vals.push(initial_frame_integrand(f, &self.a));
        }
        *phi += simpson(&vals, h);
    }
}

/// First time at which `det Φ`, expressed on initial chords, reaches `1/4`.
///
/// Beyond this time the evolved Wigner function of any initial state is
/// non-negative. With `γ = 0` the initial and final frames have equal
/// determinants; in general they differ by `e^{4γt}`.
pub fn positivity_time(h: &HamiltonianModel, channels: &[LindbladChannel], opts: PositivityOptions) -> Result<f64> {
    if !h.is_quadratic() {
        return Err(Error::InvalidParameter(format!(
            "positivity time needs a quadratic Hamiltonian, got {}",
            h.name()
        )));
    }
    check_times(opts.horizon, opts.dt)?;
    for c in channels {
        c.validate()?;
    }
    let sweep = Sweep { flow: Flow::new(h, channels), a: total_diffusion(channels) };
    const TARGET: f64 = 0.25;
    // crossings closer than this are rounding noise on an asymptote
    const MARGIN: f64 = 1e-9;

    let pair = 2.0 * opts.dt;
    let mut t = 0.0;
    let mut x = PhaseSpacePoint::ORIGIN.to_vec2();
    let mut f = Mat2::identity();
    let mut phi = Mat2::zeros();
    let mut max_det = 0.0f64;
    loop {
        if t >= opts.horizon {
            return Err(Error::NeverPositive { horizon: opts.horizon, max_det });
        }
        let (x_a, f_a, phi_a, t_a) = (x, f, phi, t);
        sweep.advance(&mut x, &mut f, &mut phi, pair, 2);
        t += pair;
        if !f.iter().all(|v| v.is_finite()) {
            // an expanding flow overflows the monodromy while the pulled-back integrand vanishes
            return Err(Error::NeverPositive { horizon: t_a, max_det });
        }
        if !phi.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { context: "decoherence matrix", time: t });
        }
        let det = phi.determinant();
        max_det = max_det.max(det);
        if det >= TARGET + MARGIN {
            return Ok(bisect(&sweep, (x_a, f_a, phi_a), t_a, pair, TARGET));
        }
    }
}

/// Finds the crossing inside `[t_a, t_a + span]` by re-integrating from the
/// bracket start with a fine Simpson rule.
fn bisect(
    sweep: &Sweep,
    start: (crate::phase_space::Vec2, Mat2, Mat2),
    t_a: f64,
    span: f64,
    target: f64,
) -> f64 {
    let det_at = |s: f64| {
        let (mut x, mut f, mut phi) = start;
        if s > 0.0 {
            sweep.advance(&mut x, &mut f, &mut phi, s, 64);
        }
        phi.determinant()
    };
    let (mut lo, mut hi) = (0.0, span);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if det_at(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-12 * (t_a + hi) {
            break;
        }
    }
    t_a + 0.5 * (lo + hi)
}

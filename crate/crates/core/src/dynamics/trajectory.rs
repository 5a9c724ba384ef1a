use crate::error::{Checked, Error, Result, Warning};
use crate::phase_space::{symplectic_matrix, Mat2, PhaseSpacePoint, Vec2};

use super::{total_dissipation, HamiltonianModel, LindbladChannel};

/// Tolerance on the endpoint change under step halving.
pub const STEP_TOLERANCE: f64 = 1e-8;

/// The dissipative centre flow `ẋ = J∇H(x) - γx` and its variational
/// equation `Ḟ = (J𝐇(x) - γ) F`.
#[derive(Debug, Clone, Copy)]
pub struct Flow<'a> {
    pub hamiltonian: &'a HamiltonianModel,
    pub gamma: f64,
}

impl<'a> Flow<'a> {
    pub fn new(hamiltonian: &'a HamiltonianModel, channels: &[LindbladChannel]) -> Self {
        Flow { hamiltonian, gamma: total_dissipation(channels) }
    }

    pub fn velocity(&self, x: Vec2) -> Vec2 {
        let pt = PhaseSpacePoint::from_vec2(x);
        symplectic_matrix() * self.hamiltonian.gradient(pt) - x * self.gamma
    }

    pub fn jacobian(&self, x: Vec2) -> Mat2 {
        let pt = PhaseSpacePoint::from_vec2(x);
        symplectic_matrix() * self.hamiltonian.hessian(pt) - Mat2::identity() * self.gamma
    }

    /// One classical RK4 step of the joint `(x, F)` system; `sign = -1`
    /// integrates backwards in time.
    pub fn step(&self, x: Vec2, f: Mat2, h: f64, sign: f64) -> (Vec2, Mat2) {
        let vx = |x: Vec2| self.velocity(x) * sign;
        let vf = |x: Vec2, f: Mat2| self.jacobian(x) * f * sign;
        let k1x = vx(x);
        let k1f = vf(x, f);
        let x2 = x + k1x * (h / 2.0);
        let f2 = f + k1f * (h / 2.0);
        let k2x = vx(x2);
        let k2f = vf(x2, f2);
        let x3 = x + k2x * (h / 2.0);
        let f3 = f + k2f * (h / 2.0);
        let k3x = vx(x3);
        let k3f = vf(x3, f3);
        let x4 = x + k3x * h;
        let f4 = f + k3f * h;
        let k4x = vx(x4);
        let k4f = vf(x4, f4);
        (
            x + (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0),
            f + (k1f + k2f * 2.0 + k3f * 2.0 + k4f) * (h / 6.0),
        )
    }

    fn step_point(&self, x: Vec2, h: f64, sign: f64) -> Vec2 {
        let v = |x: Vec2| self.velocity(x) * sign;
        let k1 = v(x);
        let k2 = v(x + k1 * (h / 2.0));
        let k3 = v(x + k2 * (h / 2.0));
        let k4 = v(x + k3 * h);
        x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    }
}

/// An even number of steps of size at most `dt` covering `t`.
pub(crate) fn step_count(t: f64, dt: f64, minimum: usize) -> usize {
    if t == 0.0 {
        return 0;
    }
    let mut n = ((t / dt).ceil() as usize).max(minimum).max(2);
    if n % 2 == 1 {
        n += 1;
    }
    n
}

pub(crate) fn check_times(t: f64, dt: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("evolution time must be >= 0, got {t}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be > 0, got {dt}")));
    }
    Ok(())
}

/// Integrates the centre only, forwards (`sign = 1`) or backwards
/// (`sign = -1`), over `steps` equal steps covering `t`.
pub fn integrate_centre(flow: &Flow, x0: PhaseSpacePoint, t: f64, steps: usize, sign: f64) -> Result<PhaseSpacePoint> {
    let mut x = x0.to_vec2();
    if steps == 0 {
        return Ok(x0);
    }
    let h = t / steps as f64;
    for k in 0..steps {
        x = flow.step_point(x, h, sign);
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(Error::NonFinite { context: "centre trajectory", time: sign * (k + 1) as f64 * h });
        }
    }
    Ok(PhaseSpacePoint::from_vec2(x))
}

/// A centre trajectory `x_τ` with its dissipative monodromy `F(0→τ)`.
#[derive(Debug, Clone)]
pub struct CentreTrajectory {
    pub times: Vec<f64>,
    pub points: Vec<PhaseSpacePoint>,
    pub monodromy: Vec<Mat2>,
}

impl CentreTrajectory {
    pub fn start(&self) -> PhaseSpacePoint {
        self.points[0]
    }

    pub fn end(&self) -> PhaseSpacePoint {
        *self.points.last().expect("trajectory has at least one point")
    }

    pub fn end_monodromy(&self) -> Mat2 {
        *self.monodromy.last().expect("trajectory has at least one point")
    }

    pub fn duration(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one point")
    }
}

/// Fixed-step RK4 integration of the centre equation jointly with its
/// variational system, from `x0` over `[0, t]`.
///
/// The endpoint is recomputed with half the step; a change above
/// [`STEP_TOLERANCE`] is attached as a warning.
pub fn centre_trajectory(
    h: &HamiltonianModel,
    channels: &[LindbladChannel],
    x0: PhaseSpacePoint,
    t: f64,
    dt: f64,
) -> Result<Checked<CentreTrajectory>> {
    check_times(t, dt)?;
    let flow = Flow::new(h, channels);
    let traj = trajectory_with_steps(&flow, x0, t, step_count(t, dt, 2))?;
    let mut warnings = Vec::new();
    if t > 0.0 {
        let fine = integrate_centre(&flow, x0, t, 2 * (traj.times.len() - 1), 1.0)?;
        let change = (fine - traj.end()).norm_sq().sqrt();
        if change > STEP_TOLERANCE {
            warnings.push(Warning::StepSize { change });
        }
    }
    Ok(Checked::new(traj, warnings))
}

pub(crate) fn trajectory_with_steps(flow: &Flow, x0: PhaseSpacePoint, t: f64, steps: usize) -> Result<CentreTrajectory> {
    if !x0.is_finite() {
        return Err(Error::NonFinite { context: "initial centre", time: 0.0 });
    }
    let mut times = Vec::with_capacity(steps + 1);
    let mut points = Vec::with_capacity(steps + 1);
    let mut monodromy = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vec2();
    let mut f = Mat2::identity();
    times.push(0.0);
    points.push(x0);
    monodromy.push(f);
    if steps > 0 {
        let dt = t / steps as f64;
        for k in 1..=steps {
            let (nx, nf) = flow.step(x, f, dt, 1.0);
            if !(nx.iter().chain(nf.iter()).all(|v| v.is_finite())) {
                return Err(Error::NonFinite { context: "centre trajectory", time: k as f64 * dt });
            }
            x = nx;
            f = nf;
            times.push(k as f64 * dt);
            points.push(PhaseSpacePoint::from_vec2(x));
            monodromy.push(f);
        }
    }
    Ok(CentreTrajectory { times, points, monodromy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_time_is_identity() {
        let h = HamiltonianModel::harmonic();
        let x0 = PhaseSpacePoint::new(0.3, 0.2);
        let tr = centre_trajectory(&h, &[], x0, 0.0, 0.01).unwrap().value;
        assert_eq!(tr.end(), x0);
        assert_eq!(tr.end_monodromy(), Mat2::identity());
    }

    #[test]
    fn pure_damping_decays_exponentially() {
        let ch = [LindbladChannel::damping(1.0)];
        let tr = centre_trajectory(&HamiltonianModel::Zero, &ch, PhaseSpacePoint::new(1.0, 1.0), 1.0, 1e-3).unwrap();
        assert!(tr.warnings.is_empty());
        let e = (-1.0f64).exp();
        assert!((tr.value.end().p - e).abs() < 1e-12);
        assert!((tr.value.end().q - e).abs() < 1e-12);
        assert!((tr.value.end_monodromy().determinant() - (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn harmonic_quarter_period_rotation() {
        let h = HamiltonianModel::harmonic();
        let tr = centre_trajectory(&h, &[], PhaseSpacePoint::new(1.0, 0.0), PI / 2.0, 1e-3).unwrap().value;
        // dq/dt = p, dp/dt = -q: (1, 0) -> (0, 1)
        assert!((tr.end().p).abs() < 1e-12);
        assert!((tr.end().q - 1.0).abs() < 1e-12);
        let m = tr.end_monodromy();
        let rot = Mat2::new(0.0, -1.0, 1.0, 0.0);
        assert!((m - rot).abs().max() < 1e-12);
        assert!((m.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn monodromy_is_symplectic_without_dissipation() {
        let h = HamiltonianModel::Pendulum { k: 1.0 };
        let tr = centre_trajectory(&h, &[], PhaseSpacePoint::new(0.5, 1.0), 7.0, 1e-3).unwrap().value;
        for m in &tr.monodromy {
            assert!((m.determinant() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn determinant_tracks_dissipation() {
        let h = HamiltonianModel::Quartic { a: 1.0, b: 0.5 };
        let ch = [LindbladChannel::new([0.1, 0.5], [0.6, 0.0])];
        let g = ch[0].dissipation_coefficient();
        let tr = centre_trajectory(&h, &ch, PhaseSpacePoint::new(0.5, 1.0), 2.0, 1e-3).unwrap().value;
        for (t, m) in tr.times.iter().zip(&tr.monodromy) {
            assert!((m.determinant() - (-2.0 * g * t).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn coarse_step_raises_warning() {
        let h = HamiltonianModel::Pendulum { k: 4.0 };
        let tr = centre_trajectory(&h, &[], PhaseSpacePoint::new(2.0, 0.0), 10.0, 0.5).unwrap();
        assert!(tr.warnings.iter().any(|w| matches!(w, Warning::StepSize { .. })));
    }

    #[test]
    fn invalid_times_rejected() {
        let h = HamiltonianModel::Zero;
        assert!(centre_trajectory(&h, &[], PhaseSpacePoint::ORIGIN, -1.0, 0.1).is_err());
        assert!(centre_trajectory(&h, &[], PhaseSpacePoint::ORIGIN, 1.0, 0.0).is_err());
    }

    #[test]
    fn blow_up_is_reported() {
        let h = HamiltonianModel::Quartic { a: 0.0, b: -50.0 };
        let r = centre_trajectory(&h, &[], PhaseSpacePoint::new(0.0, 3.0), 10.0, 0.05);
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }
}

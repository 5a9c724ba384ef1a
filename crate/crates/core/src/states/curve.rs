use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Flow, HamiltonianModel, LindbladChannel};
use crate::error::{Error, Result};
use crate::phase_space::{symplectic_matrix, Mat2, PhaseSpacePoint, Vec2};

pub const MIN_CURVE_SAMPLES: usize = 256;

/// Named curve families for configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CurveFamily {
    /// `p² + q² = 2I`, optionally displaced.
    Circle {
        action: f64,
        #[serde(default)]
        centre: [f64; 2],
    },
    /// Level set `H = p²/2 + q⁴/4 = energy`.
    Quartic { energy: f64 },
    /// Level set `H = p²/2 − k cos q = energy` with `energy < k`.
    Pendulum { k: f64, energy: f64 },
}

#[derive(Debug, Clone)]
enum Shape {
    Circle {
        centre: PhaseSpacePoint,
        radius: f64,
    },
    LevelSet {
        h: HamiltonianModel,
        start: PhaseSpacePoint,
        period: f64,
        steps: usize,
    },
    Evolved {
        base: Box<LagrangianCurve>,
        h: HamiltonianModel,
        channels: Vec<LindbladChannel>,
        t: f64,
        steps: usize,
    },
    /// Trigonometric interpolant of uniformly spaced samples.
    Fourier {
        p: Vec<(f64, f64)>,
        q: Vec<(f64, f64)>,
    },
}

/// A closed curve `x(θ)`, `θ ∈ [0, 2π)`, with dense uniform-θ samples of
/// the point and of `dx/dθ`. Points between samples are evaluated exactly
/// from the underlying construction.
#[derive(Debug, Clone)]
pub struct LagrangianCurve {
    shape: Shape,
    action: f64,
    samples: Vec<PhaseSpacePoint>,
    tangents: Vec<Vec2>,
}

impl LagrangianCurve {
    /// `p = r cos θ`, `q = r sin θ` around `centre`, with `r = √(2I)`.
    pub fn circle(action: f64, centre: PhaseSpacePoint, samples: usize) -> Result<Self> {
        if !(action.is_finite() && action > 0.0) || !centre.is_finite() {
            return Err(Error::InvalidParameter(format!("invalid circle: I = {action}, centre {centre:?}")));
        }
        Self::build(Shape::Circle { centre, radius: (2.0 * action).sqrt() }, action, samples)
    }

    /// Closed orbit of `H = p²/2 + V(q)` at `energy`, parametrized by the
    /// time along the orbit scaled to `2π`.
    pub fn level_set(h: &HamiltonianModel, energy: f64, samples: usize, dt: f64) -> Result<Self> {
        h.validate()?;
        if !matches!(h, HamiltonianModel::Harmonic { .. } | HamiltonianModel::Quartic { .. } | HamiltonianModel::Pendulum { .. }) {
            return Err(Error::InvalidParameter(format!("level sets need an oscillator Hamiltonian, got {}", h.name())));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("time step must be > 0, got {dt}")));
        }
        let q_max = turning_point(h, energy)?;
        let start = PhaseSpacePoint::new(0.0, q_max);
        let period = orbit_period(h, start, dt)?;
        let steps = (period / dt).ceil() as usize;
        let mut curve = Self::build(Shape::LevelSet { h: h.clone(), start, period, steps }, 0.0, samples)?;
        curve.action = curve.enclosed_area() / (2.0 * PI);
        Ok(curve)
    }

    pub fn from_family(family: &CurveFamily, samples: usize, dt: f64) -> Result<Self> {
        match *family {
            CurveFamily::Circle { action, centre } => {
                Self::circle(action, PhaseSpacePoint::new(centre[0], centre[1]), samples)
            }
            CurveFamily::Quartic { energy } => {
                Self::level_set(&HamiltonianModel::Quartic { a: 0.0, b: 1.0 }, energy, samples, dt)
            }
            CurveFamily::Pendulum { k, energy } => Self::level_set(&HamiltonianModel::Pendulum { k }, energy, samples, dt),
        }
    }

    /// Trigonometric interpolation through `(p_k, q_k)` at `θ_k = 2πk/n`.
    pub fn from_samples(theta: &[f64], p: &[f64], q: &[f64]) -> Result<Self> {
        let n = theta.len();
        if p.len() != n || q.len() != n {
            return Err(Error::InvalidParameter("theta, p and q must have equal length".into()));
        }
        if n < MIN_CURVE_SAMPLES {
            return Err(Error::InvalidParameter(format!("need at least {MIN_CURVE_SAMPLES} curve samples, got {n}")));
        }
        for (k, &th) in theta.iter().enumerate() {
            let expected = 2.0 * PI * k as f64 / n as f64;
            if (th - expected).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "curve samples must be uniform in theta from 0: sample {k} has theta {th}, expected {expected}"
                )));
            }
        }
        if !p.iter().chain(q).all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite curve sample".into()));
        }
        let shape = Shape::Fourier { p: fourier_coefficients(p), q: fourier_coefficients(q) };
        let mut curve = Self::build(shape, 0.0, n)?;
        curve.action = curve.enclosed_area() / (2.0 * PI);
        Ok(curve)
    }

    fn build(shape: Shape, action: f64, samples: usize) -> Result<Self> {
        if samples < MIN_CURVE_SAMPLES {
            return Err(Error::InvalidParameter(format!(
                "need at least {MIN_CURVE_SAMPLES} curve samples, got {samples}"
            )));
        }
        let mut curve = LagrangianCurve { shape, action, samples: Vec::new(), tangents: Vec::new() };
        let evaluated: Vec<(PhaseSpacePoint, Vec2)> = (0..samples)
            .into_par_iter()
            .map(|k| curve.point_and_tangent(2.0 * PI * k as f64 / samples as f64))
            .collect();
        if !evaluated.iter().all(|(x, t)| x.is_finite() && t.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFinite { context: "curve sampling", time: 0.0 });
        }
        (curve.samples, curve.tangents) = evaluated.into_iter().unzip();
        Ok(curve)
    }

    /// The action label `I`.
    pub fn action(&self) -> f64 {
        self.action
    }

    pub fn samples(&self) -> &[PhaseSpacePoint] {
        &self.samples
    }

    pub fn tangents(&self) -> &[Vec2] {
        &self.tangents
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn theta(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.samples.len() as f64
    }

    pub fn point(&self, theta: f64) -> PhaseSpacePoint {
        self.point_and_tangent(theta).0
    }

    /// `x(θ)` and `dx/dθ`.
    pub fn point_and_tangent(&self, theta: f64) -> (PhaseSpacePoint, Vec2) {
        let theta = theta.rem_euclid(2.0 * PI);
        match &self.shape {
            Shape::Circle { centre, radius } => {
                let (s, c) = theta.sin_cos();
                (
                    PhaseSpacePoint::new(centre.p + radius * c, centre.q + radius * s),
                    Vec2::new(-radius * s, radius * c),
                )
            }
            Shape::LevelSet { h, start, period, steps } => {
                let flow = Flow { hamiltonian: h, gamma: 0.0 };
                let s = period * theta / (2.0 * PI);
                let mut x = start.to_vec2();
                let dt = s / *steps as f64;
                for _ in 0..*steps {
                    x = flow.step(x, Mat2::identity(), dt, 1.0).0;
                }
                (PhaseSpacePoint::from_vec2(x), flow.velocity(x) * (period / (2.0 * PI)))
            }
            Shape::Evolved { base, h, channels, t, steps } => {
                let (x0, tangent0) = base.point_and_tangent(theta);
                let flow = Flow::new(h, channels);
                let (mut x, mut f) = (x0.to_vec2(), Mat2::identity());
                let dt = t / *steps as f64;
                for _ in 0..*steps {
                    (x, f) = flow.step(x, f, dt, 1.0);
                }
                (PhaseSpacePoint::from_vec2(x), f * tangent0)
            }
            Shape::Fourier { p, q } => {
                let (pv, dp) = fourier_eval(p, theta);
                let (qv, dq) = fourier_eval(q, theta);
                (PhaseSpacePoint::new(pv, qv), Vec2::new(dp, dq))
            }
        }
    }

    /// `½ |∮ (p dq − q dp)|` by the trapezoidal rule on the samples.
    pub fn enclosed_area(&self) -> f64 {
        let n = self.samples.len() as f64;
        let sum: f64 = self
            .samples
            .iter()
            .zip(&self.tangents)
            .map(|(x, t)| x.p * t[1] - x.q * t[0])
            .sum();
        (0.5 * sum * 2.0 * PI / n).abs()
    }

    /// Curve average of the centre, `(2π)⁻¹ ∮ x dθ`.
    pub fn mean(&self) -> PhaseSpacePoint {
        let n = self.samples.len() as f64;
        let (p, q) = self.samples.iter().fold((0.0, 0.0), |(p, q), x| (p + x.p, q + x.q));
        PhaseSpacePoint::new(p / n, q / n)
    }

    /// Smallest and largest `q` over the samples.
    pub fn q_range(&self) -> (f64, f64) {
        self.samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x.q), hi.max(x.q)))
    }

    /// Chord length up to which the short-chord form keeps its phase error
    /// below one radian: `(8 ħ ρ_min)^(1/3)`, `ρ_min` the smallest radius of
    /// curvature along the samples.
    pub fn short_chord_validity_radius(&self, hbar: f64) -> f64 {
        let n = self.samples.len();
        let j = symplectic_matrix();
        let mut kappa_max = 0.0f64;
        for k in 0..n {
            let (t0, t1) = (self.tangents[k], self.tangents[(k + 1) % n]);
            let turn = (j * t0).dot(&t1).atan2(t0.dot(&t1)).abs();
            let arc = 0.5 * (t0.norm() + t1.norm()) * 2.0 * PI / n as f64;
            if arc > 0.0 {
                kappa_max = kappa_max.max(turn / arc);
            }
        }
        (8.0 * hbar / kappa_max).cbrt()
    }
}

/// Advects every point of `curve` under the centre flow for time `t`,
/// keeping the initial angle as parameter.
pub fn evolve_curve_classically(
    curve: &LagrangianCurve,
    h: &HamiltonianModel,
    channels: &[LindbladChannel],
    t: f64,
    dt: f64,
) -> Result<LagrangianCurve> {
    h.validate()?;
    for c in channels {
        c.validate()?;
    }
    if !(t.is_finite() && t >= 0.0) || !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("need t >= 0 and dt > 0, got t = {t}, dt = {dt}")));
    }
    if t == 0.0 {
        return Ok(curve.clone());
    }
    let shape = Shape::Evolved {
        base: Box::new(curve.clone()),
        h: h.clone(),
        channels: channels.to_vec(),
        t,
        steps: (t / dt).ceil() as usize,
    };
    LagrangianCurve::build(shape, curve.action, curve.len())
}

/// Positive root of `H(0, q) = E`.
fn turning_point(h: &HamiltonianModel, energy: f64) -> Result<f64> {
    let v = |q: f64| h.value(PhaseSpacePoint::new(0.0, q)) - energy;
    if v(0.0) >= 0.0 {
        return Err(Error::InvalidParameter(format!("energy {energy} is below the potential minimum")));
    }
    let cap = if matches!(h, HamiltonianModel::Pendulum { .. }) { PI } else { f64::INFINITY };
    let mut hi = 1.0f64.min(cap);
    while v(hi) < 0.0 {
        if hi >= cap {
            return Err(Error::InvalidParameter(format!("energy {energy} gives an open orbit")));
        }
        hi = (2.0 * hi).min(cap);
        if hi > 1e6 {
            return Err(Error::InvalidParameter(format!("no turning point found for energy {energy}")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if v(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Return time to `start = (0, q_max)`, detected as the second sign change
/// of `p` and refined by bisection on a partial step.
fn orbit_period(h: &HamiltonianModel, start: PhaseSpacePoint, dt: f64) -> Result<f64> {
    let flow = Flow { hamiltonian: h, gamma: 0.0 };
    let advance = |x: Vec2, s: f64| flow.step(x, Mat2::identity(), s, 1.0).0;
    let mut x = start.to_vec2();
    let mut t = 0.0;
    let mut changes = 0;
    let limit = 1e7 as usize;
    for _ in 0..limit {
        let next = advance(x, dt);
        if !(next[0].is_finite() && next[1].is_finite()) {
            return Err(Error::NonFinite { context: "orbit period", time: t });
        }
        let crossed = if changes == 0 { x[0] < 0.0 && next[0] >= 0.0 } else { x[0] > 0.0 && next[0] <= 0.0 };
        if crossed {
            changes += 1;
            if changes == 2 {
                let (mut lo, mut hi) = (0.0, dt);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if advance(x, mid)[0] > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Ok(t + 0.5 * (lo + hi));
            }
        }
        x = next;
        t += dt;
    }
    Err(Error::InvalidParameter("orbit did not close".into()))
}

/// Real Fourier coefficients `(a_m, b_m)`, `m = 0..=n/2`, of uniformly
/// spaced periodic samples, with the Nyquist term halved.
fn fourier_coefficients(v: &[f64]) -> Vec<(f64, f64)> {
    let n = v.len();
    (0..=n / 2)
        .map(|m| {
            let (mut a, mut b) = (0.0, 0.0);
            for (k, &x) in v.iter().enumerate() {
                let (s, c) = (2.0 * PI * (m * k % n) as f64 / n as f64).sin_cos();
                a += x * c;
                b += x * s;
            }
            let scale = if m == 0 || (n.is_multiple_of(2) && m == n / 2) { 1.0 } else { 2.0 } / n as f64;
            (a * scale, b * scale)
        })
        .collect()
}

fn fourier_eval(coeffs: &[(f64, f64)], theta: f64) -> (f64, f64) {
    let (mut v, mut d) = (0.0, 0.0);
    for (m, &(a, b)) in coeffs.iter().enumerate() {
        let (s, c) = (m as f64 * theta).sin_cos();
        v += a * c + b * s;
        d += m as f64 * (b * c - a * s);
    }
    (v, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_area_and_mean() {
        let c = LagrangianCurve::circle(0.5, PhaseSpacePoint::new(0.2, -0.1), 512).unwrap();
        assert!((c.enclosed_area() - PI).abs() < 1e-12);
        assert!((c.mean() - PhaseSpacePoint::new(0.2, -0.1)).norm_sq() < 1e-24);
    }

    #[test]
    fn level_sets_enclose_their_action() {
        // harmonic level set H = E has action E
        let h = HamiltonianModel::harmonic();
        let c = LagrangianCurve::level_set(&h, 0.7, 1024, 1e-3).unwrap();
        assert!((c.action() - 0.7).abs() < 1e-6 * 0.7);
        assert!((c.point(0.3).to_vec2().norm_squared() - 1.4).abs() < 1e-10);
    }

    #[test]
    fn quartic_action_matches_quadrature() {
        // I = (2/π) ∫₀^{q_max} √(2(E − q⁴/4)) dq, by Gauss–Chebyshev-free
        // substitution q = q_max sin φ
        let e: f64 = 0.5;
        let q_max = (4.0 * e).powf(0.25);
        let n = 200000;
        let mut s = 0.0;
        for k in 0..n {
            let phi = (k as f64 + 0.5) * (PI / 2.0) / n as f64;
            let q = q_max * phi.sin();
            s += (2.0 * (e - q.powi(4) / 4.0)).max(0.0).sqrt() * q_max * phi.cos();
        }
        let oracle = (2.0 / PI) * s * (PI / 2.0) / n as f64;
        let c = LagrangianCurve::from_family(&CurveFamily::Quartic { energy: e }, 1024, 1e-3).unwrap();
        assert!((c.action() - oracle).abs() < 1e-6 * oracle, "{} vs {oracle}", c.action());
    }

    #[test]
    fn pendulum_open_orbit_rejected() {
        let r = LagrangianCurve::from_family(&CurveFamily::Pendulum { k: 1.0, energy: 1.5 }, 512, 1e-3);
        assert!(r.is_err());
        assert!(LagrangianCurve::from_family(&CurveFamily::Pendulum { k: 1.0, energy: 0.0 }, 512, 1e-3).is_ok());
    }

    #[test]
    fn tangents_match_finite_differences() {
        let c = LagrangianCurve::from_family(&CurveFamily::Pendulum { k: 1.0, energy: 0.2 }, 256, 1e-3).unwrap();
        let h = 1e-5;
        for &th in &[0.1, 1.7, 4.0] {
            let d = (c.point(th + h) - c.point(th - h)).to_vec2() / (2.0 * h);
            assert!((d - c.point_and_tangent(th).1).norm() < 1e-7);
        }
    }

    #[test]
    fn fourier_curve_reproduces_circle() {
        let n = 256;
        let theta: Vec<f64> = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
        let p: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
        let q: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
        let c = LagrangianCurve::from_samples(&theta, &p, &q).unwrap();
        assert!((c.action() - 0.5).abs() < 1e-12);
        let (x, t) = c.point_and_tangent(0.123);
        assert!((x.p - 0.123f64.cos()).abs() < 1e-12 && (t[1] - 0.123f64.cos()).abs() < 1e-12);
        assert!(LagrangianCurve::from_samples(&theta[..100], &p[..100], &q[..100]).is_err());
    }

    #[test]
    fn evolution_examples() {
        let c = LagrangianCurve::circle(0.5, PhaseSpacePoint::new(0.3, 0.0), 256).unwrap();
        let same = evolve_curve_classically(&c, &HamiltonianModel::harmonic(), &[], 0.0, 1e-3).unwrap();
        assert_eq!(same.samples(), c.samples());

        let full = evolve_curve_classically(&c, &HamiltonianModel::harmonic(), &[], 2.0 * PI, 1e-3).unwrap();
        for (a, b) in full.samples().iter().zip(c.samples()) {
            assert!((*a - *b).norm_sq().sqrt() < 1e-8);
        }

        let g = 0.4;
        let ch = [LindbladChannel::damping(g)];
        let shrunk = evolve_curve_classically(&c, &HamiltonianModel::Zero, &ch, 1.5, 1e-3).unwrap();
        let f = (-g * 1.5f64).exp();
        for (a, b) in shrunk.samples().iter().zip(c.samples()) {
            assert!((a.to_vec2() - b.to_vec2() * f).norm() < 1e-12);
        }
        assert!((shrunk.enclosed_area() - c.enclosed_area() * f * f).abs() < 1e-10);
    }

    #[test]
    fn validity_radius_of_circle() {
        let c = LagrangianCurve::circle(0.5, PhaseSpacePoint::ORIGIN, 1024).unwrap();
        assert!((c.short_chord_validity_radius(0.01) - (0.08f64).cbrt()).abs() < 1e-6);
    }
}

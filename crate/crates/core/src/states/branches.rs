use serde::Serialize;

use crate::error::{Error, Result};

use super::LagrangianCurve;

/// Root tolerance on `|q(θ) − Q|`.
const ROOT_TOLERANCE: f64 = 1e-12;
/// A fold of the curve closer than this to `Q` is reported as a caustic
/// branch.
const TANGENCY_TOLERANCE: f64 = 1e-10;
/// Below this `|dx/dθ|` the parametrization is considered degenerate.
const DEGENERATE_TANGENT: f64 = 1e-12;

/// One solution `θ_j` of `q(θ_j) = Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Branch {
    pub theta: f64,
    pub p: f64,
    /// `|dθ/dq|`.
    pub amplitude: f64,
    /// `dp/dq` along the curve.
    pub slope: f64,
    pub caustic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchData {
    pub q: f64,
    /// Sorted by `p`.
    pub branches: Vec<Branch>,
}

impl BranchData {
    pub fn regular(&self) -> impl Iterator<Item = &Branch> {
        self.branches.iter().filter(|b| !b.caustic)
    }

    pub fn caustic_count(&self) -> usize {
        self.branches.iter().filter(|b| b.caustic).count()
    }
}

/// `1/√ħ`.
pub fn default_caustic_threshold(hbar: f64) -> f64 {
    1.0 / hbar.sqrt()
}

/// All branches of the curve over position `q`.
///
/// Transverse roots come from a sign-change scan of the samples refined by
/// safeguarded Newton iteration; folds of the curve touching `q` are added
/// as caustic branches.
pub fn branches_at(curve: &LagrangianCurve, q: f64, caustic_threshold: f64) -> Result<BranchData> {
    if !q.is_finite() || !(caustic_threshold > 0.0) {
        return Err(Error::InvalidParameter(format!("invalid branch query Q = {q}, threshold {caustic_threshold}")));
    }
    let n = curve.len();
    let samples = curve.samples();
    let tangents = curve.tangents();
    let f = |k: usize| samples[k % n].q - q;
    let mut thetas: Vec<(f64, bool)> = Vec::new();

    for k in 0..n {
        let (a, b) = (f(k), f(k + 1));
        if a == 0.0 {
            thetas.push((curve.theta(k), false));
        } else if a * b < 0.0 {
            thetas.push((refine_root(curve, q, curve.theta(k), curve.theta(k) + 2.0 * std::f64::consts::PI / n as f64, a), false));
        }
    }

    for k in 0..n {
        let (da, db) = (tangents[k][1], tangents[(k + 1) % n][1]);
        if da * db < 0.0 || (da == 0.0 && db != 0.0) {
            let lo = curve.theta(k);
            let hi = lo + 2.0 * std::f64::consts::PI / n as f64;
            let th = refine_fold(curve, lo, hi, da);
            let gap = curve.point(th).q - q;
            if gap.abs() <= TANGENCY_TOLERANCE {
                let near = thetas.iter().any(|(t, _)| angular_distance(*t, th) < 2.0 * (hi - lo));
                if !near {
                    thetas.push((th, true));
                }
            }
        }
    }

    let mut branches = Vec::with_capacity(thetas.len());
    for (theta, fold) in thetas {
        let (x, d) = curve.point_and_tangent(theta);
        if d.norm() < DEGENERATE_TANGENT {
            return Err(Error::DegenerateParametrization { theta });
        }
        let (slope, amplitude) = if fold || d[1] == 0.0 {
            (f64::INFINITY, f64::INFINITY)
        } else {
            (d[0] / d[1], 1.0 / d[1].abs())
        };
        let caustic = !(slope.abs() <= caustic_threshold);
        branches.push(Branch { theta: theta.rem_euclid(2.0 * std::f64::consts::PI), p: x.p, amplitude, slope, caustic });
    }
    branches.sort_by(|a, b| a.p.total_cmp(&b.p));
    Ok(BranchData { q, branches })
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let d = (a - b).rem_euclid(tau);
    d.min(tau - d)
}

/// Newton on `q(θ) − Q` kept inside the bracket `[lo, hi]`, falling back to
/// bisection.
fn refine_root(curve: &LagrangianCurve, q: f64, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let lo_sign = f_lo.signum();
    let mut th = 0.5 * (lo + hi);
    for _ in 0..100 {
        let (x, d) = curve.point_and_tangent(th);
        let g = x.q - q;
        if g.abs() < ROOT_TOLERANCE {
            return th;
        }
        if g.signum() == lo_sign {
            lo = th;
        } else {
            hi = th;
        }
        let newton = th - g / d[1];
        th = if d[1] != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-15 {
            break;
        }
    }
    th
}

/// Bisection on `dq/dθ` for a fold inside `[lo, hi]`.
fn refine_fold(curve: &LagrangianCurve, mut lo: f64, mut hi: f64, d_lo: f64) -> f64 {
    let lo_sign = if d_lo == 0.0 { return lo } else { d_lo.signum() };
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let d = curve.point_and_tangent(mid).1[1];
        if d == 0.0 {
            return mid;
        }
        if d.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

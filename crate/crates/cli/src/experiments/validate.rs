use std::f64::consts::{LN_2, PI};

use chordlab::dynamics::{
    decoherence_matrix, evolve_reflections, positivity_time, HamiltonianModel, LindbladChannel, PositivityOptions,
    WeightedSamples,
};
use chordlab::fock::{chord_function_exact, lindblad_snapshots, FockDensityMatrix, FockGenerator};
use chordlab::husimi::{husimi_from_lwc, husimi_from_wigner, lwc_family};
use chordlab::lwc::{lwc_coherent_closed_form, lwc_from_chord, xi_grid, LwcWindow, SemiclassicalLwc};
use chordlab::phase_space::{CenteredGrid, ChordVector, Mat2, PhaseSpacePoint};
use chordlab::states::{default_caustic_threshold, CoherentState, CurveChordFunction, LagrangianCurve};
use serde_json::json;

use super::{direct_sample, fmt_num, WarningLog};
use crate::config::ExperimentConfig;
use crate::output::Artifacts;
use crate::{Report, RunError};

struct Case {
    name: &'static str,
    error: f64,
    tolerance: f64,
}

fn max_rel(a: &[num_complex::Complex64], b: &[num_complex::Complex64]) -> f64 {
    let scale = b.iter().map(|c| c.norm()).fold(0.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

fn coherent_routes(log: &mut WarningLog) -> Result<(f64, f64), RunError> {
    let hbar = 0.05;
    let eta = PhaseSpacePoint::new(0.4, 0.2);
    let state = CoherentState::new(eta, hbar)?;
    let window = LwcWindow::new(0.3, hbar.sqrt(), hbar)?;
    let xs = xi_grid(12.0 * hbar.sqrt(), 128)?;
    let reference: Vec<_> = xs.iter().map(|&x| lwc_coherent_closed_form(&state, &window, x)).collect();
    let chord = log.take("coherent chord route", lwc_from_chord(&state, &window, &xs)?);
    let rho = FockDensityMatrix::coherent(eta, hbar, 80)?;
    let direct = direct_sample(&rho, &window, &xs)?;
    Ok((max_rel(&chord.c, &reference), max_rel(&direct.c, &reference)))
}

fn damped_oscillator(log: &mut WarningLog) -> Result<Vec<(f64, f64)>, RunError> {
    let hbar = 0.05;
    let dt = 1e-3;
    let eta = PhaseSpacePoint::new(0.5, 0.5);
    let h = HamiltonianModel::harmonic();
    let channels = [LindbladChannel::damping(0.2)];
    let times = [0.1, 0.5, 1.0];
    let grid = CenteredGrid::square(2.5, 64, hbar)?;
    let samples = WeightedSamples::from_wigner_grid(&CoherentState::new(eta, hbar)?.wigner_grid(&grid)?)?;
    let gen = FockGenerator::new(&h, &channels, hbar, 60)?;
    let exact = lindblad_snapshots(&FockDensityMatrix::coherent(eta, hbar, 60)?, &gen, &times, dt)?;
    let reach = 3.0 * hbar.sqrt();
    let chords: Vec<ChordVector> = (0..13)
        .flat_map(|i| (0..13).map(move |j| ChordVector::new(reach * (i as f64 - 6.0) / 6.0, reach * (j as f64 - 6.0) / 6.0)))
        .filter(|c| c.norm_sq() <= reach * reach)
        .collect();
    let mut out = Vec::new();
    for (&t, rho) in times.iter().zip(&exact) {
        let chi = log.take(&format!("damped oscillator t = {t}"), evolve_reflections(&samples, &h, &channels, t, dt, hbar)?);
        let a: Vec<_> = chords.iter().map(|&c| chi.value(c)).collect();
        let b: Vec<_> = chords.iter().map(|&c| chord_function_exact(rho, c)).collect();
        out.push((t, max_rel(&a, &b)));
    }
    Ok(out)
}

fn rotating_channel_phi() -> Result<f64, RunError> {
    let d = decoherence_matrix(
        &HamiltonianModel::harmonic(),
        &[LindbladChannel::hermitian([1.0, 0.0])],
        PhaseSpacePoint::ORIGIN,
        PI,
        1e-3,
    )?;
    Ok((d.phi - Mat2::identity() * (PI / 2.0)).abs().max())
}

fn loss_positivity() -> Result<f64, RunError> {
    let g = 0.3;
    let tp = positivity_time(&HamiltonianModel::Zero, &[LindbladChannel::damping(g)], PositivityOptions::default())?;
    Ok((tp - LN_2 / (2.0 * g)).abs())
}

fn husimi_routes(log: &mut WarningLog) -> Result<f64, RunError> {
    let hbar = 0.05;
    let state = CoherentState::new(PhaseSpacePoint::new(0.3, -0.2), hbar)?;
    let grid = CenteredGrid::square(2.8, 56, hbar)?;
    let xs = xi_grid(2.0, 512)?;
    let family = log.take("Husimi family", lwc_family(&state, &grid, (hbar / 2.0).sqrt(), &xs)?);
    let rec = log.take("Husimi from correlations", husimi_from_lwc(&family, &grid)?);
    let wide = CenteredGrid::square(4.0, 80, hbar)?;
    let conv = log.take("Husimi by convolution", husimi_from_wigner(&state.wigner_grid(&wide)?, &grid)?);
    Ok(rec.values.iter().zip(&conv.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

fn semiclassical_quadratic(log: &mut WarningLog) -> Result<f64, RunError> {
    let hbar = 0.001;
    let curve = LagrangianCurve::circle(0.5, PhaseSpacePoint::ORIGIN, 8192)?;
    let chi = CurveChordFunction::new(&curve, hbar)?;
    let mut worst = 0.0f64;
    for q in [-0.4, 0.0, 0.3] {
        let window = LwcWindow::canonical(q, hbar)?;
        let sc = log.take("semiclassical branches", SemiclassicalLwc::pure(&curve, &window, default_caustic_threshold(hbar))?);
        let xs: Vec<f64> = [0.0, 0.25, 0.5, 1.0].iter().map(|f| f * hbar.sqrt()).collect();
        let exact = log.take("curve chord route", lwc_from_chord(&chi, &window, &xs)?);
        let scale = exact.c[0].norm();
        for (k, &x) in xs.iter().enumerate() {
            worst = worst.max((sc.quadratic(x) - exact.c[k]).norm() / scale);
        }
    }
    Ok(worst)
}

/// Fixed checks of every computational route against an independent
/// reference; fails when any error exceeds its tolerance.
pub fn run(_cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Report, RunError> {
    let mut log = WarningLog::default();
    let (chord, direct) = coherent_routes(&mut log)?;
    let mut cases = vec![
        Case { name: "coherent correlation, chord route vs closed form", error: chord, tolerance: 1e-6 },
        Case { name: "coherent correlation, position route vs closed form", error: direct, tolerance: 1e-6 },
    ];
    for (t, e) in damped_oscillator(&mut log)? {
        let name = match t {
            t if t < 0.2 => "damped oscillator chord function vs number basis, t = 0.1",
            t if t < 0.7 => "damped oscillator chord function vs number basis, t = 0.5",
            _ => "damped oscillator chord function vs number basis, t = 1",
        };
        cases.push(Case { name, error: e, tolerance: 1e-3 });
    }
    cases.push(Case { name: "rotating channel decoherence matrix at t = pi", error: rotating_channel_phi()?, tolerance: 1e-8 });
    cases.push(Case { name: "loss channel positivity time", error: loss_positivity()?, tolerance: 1e-6 });
    cases.push(Case { name: "Husimi from correlations vs convolution", error: husimi_routes(&mut log)?, tolerance: 1e-6 });
    cases.push(Case { name: "semiclassical quadratic form vs curve chord route", error: semiclassical_quadratic(&mut log)?, tolerance: 5e-2 });

    let rows: Vec<Vec<f64>> = cases
        .iter()
        .enumerate()
        .map(|(k, c)| vec![k as f64, c.error, c.tolerance, if c.error <= c.tolerance { 1.0 } else { 0.0 }])
        .collect();
    out.table("validate.csv", &[], &["case", "error", "tolerance", "pass"], &rows)?;
    let mut summary = String::from("case  result      error  tolerance  check\n");
    for (k, c) in cases.iter().enumerate() {
        let verdict = if c.error <= c.tolerance { "pass" } else { "FAIL" };
        summary.push_str(&format!("{k:>4}  {verdict:>6} {:>10} {:>10}  {}\n", fmt_num(c.error), fmt_num(c.tolerance), c.name));
    }
    let failed = cases.iter().any(|c| c.error.is_nan() || c.error > c.tolerance);
    let table: Vec<_> = cases
        .iter()
        .enumerate()
        .map(|(k, c)| json!({ "case": k, "name": c.name, "error": c.error, "tolerance": c.tolerance, "pass": c.error <= c.tolerance }))
        .collect();
    Ok(Report { results: json!({ "cases": table, "all_pass": !failed }), summary, warnings: log.0, failed })
}

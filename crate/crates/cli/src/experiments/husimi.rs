use chordlab::husimi::{husimi_fourier, husimi_from_fourier, husimi_from_lwc, husimi_from_wigner, lwc_family, smoothed_wigner_from_lwc, HusimiGrid};
use chordlab::fock::FockDensityMatrix;
use chordlab::lwc::{xi_grid, LwcSample, LwcWindow};
use chordlab::phase_space::{CenteredGrid, PhaseSpacePoint};
use chordlab::states::CurveChordFunction;
use serde_json::json;

use super::{direct_sample, fmt_num, fock_state, initial_wigner, WarningLog};
use crate::config::ExperimentConfig;
use crate::output::Artifacts;
use crate::{Report, RunError};

fn max_diff(a: &HusimiGrid, b: &HusimiGrid) -> f64 {
    a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Husimi-weighted mean distance from `centre`.
fn mean_radius(h: &HusimiGrid, centre: PhaseSpacePoint) -> f64 {
    let m = h.grid.points;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..m {
        for j in 0..m {
            let v = h.values[i * m + j];
            let x = h.grid.point(i, j);
            num += v * ((x.p - centre.p).powi(2) + (x.q - centre.q).powi(2)).sqrt();
            den += v;
        }
    }
    num / den
}

fn direct_family(rho: &FockDensityMatrix, grid: &CenteredGrid, delta: f64, xs: &[f64]) -> Result<Vec<LwcSample>, RunError> {
    (0..grid.points)
        .map(|j| direct_sample(rho, &LwcWindow::new(grid.q_coord(j), delta, grid.hbar)?, xs))
        .collect()
}

/// The Husimi function from a family of correlations at `Δ = √(ħ/2)`,
/// checked against convolution of the Wigner function for exact states and
/// against the chord-domain route for curve states.
pub fn run(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Report, RunError> {
    let mut log = WarningLog::default();
    let hbar = cfg.hbar;
    let grid = cfg.centre_grid(2.5, 48)?;
    let spec = cfg.xi_spec(12.0 * hbar.sqrt(), 256);
    let xs = xi_grid(spec.half_width, spec.points)?;
    let delta = (hbar / 2.0).sqrt();
    let state = cfg.state()?;

    let (reference, route, from_lwc, wide) = if state.is_curve() {
        let chi = CurveChordFunction::new(&cfg.curve()?, hbar)?;
        let fourier = log.take("chord route", husimi_from_fourier(&husimi_fourier(&chi), &grid)?);
        let family = log.take("correlation family", lwc_family(&chi, &grid, delta, &xs)?);
        let from_lwc = log.take("correlation route", husimi_from_lwc(&family, &grid)?);
        let wide_family = log.take("sqrt(hbar) family", lwc_family(&chi, &grid, hbar.sqrt(), &xs)?);
        let wide = log.take("sqrt(hbar) reconstruction", smoothed_wigner_from_lwc(&wide_family, &grid)?);
        (fourier, "chord route", from_lwc, wide)
    } else {
        let reach = 6.0 * hbar.sqrt();
        let extended = CenteredGrid::new(
            grid.p_half_width + reach,
            grid.q_half_width + reach,
            grid.points + 2 * (reach / grid.p_spacing().min(grid.q_spacing())).ceil() as usize,
            hbar,
        )?;
        let w = initial_wigner(cfg, &extended, &mut log)?;
        let conv = log.take("convolution route", husimi_from_wigner(&w, &grid)?);
        let rho = fock_state(cfg, cfg.fock_dim)?;
        let from_lwc = log.take("correlation route", husimi_from_lwc(&direct_family(&rho, &grid, delta, &xs)?, &grid)?);
        let wide = log.take(
            "sqrt(hbar) reconstruction",
            smoothed_wigner_from_lwc(&direct_family(&rho, &grid, hbar.sqrt(), &xs)?, &grid)?,
        );
        (conv, "convolution", from_lwc, wide)
    };
    out.real_grid("husimi_lwc.csv", "husimi", &from_lwc)?;
    let reference_file = if state.is_curve() { "husimi_fourier.csv" } else { "husimi_convolution.csv" };
    out.real_grid(reference_file, "husimi", &reference)?;

    let scale = reference.max();
    let lwc_err = max_diff(&from_lwc, &reference);
    let wide_err = max_diff(&wide, &reference);
    let mut summary = format!(
        "grid half-widths ({}, {}), {} points\nHusimi max {}, min {}, mass {}\ncorrelations at delta = sqrt(hbar/2) vs {route}: max |diff| = {} (relative {})\ncorrelations at delta = sqrt(hbar) vs {route}: max |diff| = {} (relative {})\n",
        fmt_num(grid.p_half_width),
        fmt_num(grid.q_half_width),
        grid.points,
        fmt_num(reference.max()),
        fmt_num(reference.min()),
        fmt_num(reference.integral()),
        fmt_num(lwc_err),
        fmt_num(lwc_err / scale),
        fmt_num(wide_err),
        fmt_num(wide_err / scale)
    );
    let mut results = json!({
        "delta": delta,
        "reference_route": route,
        "max": reference.max(),
        "min": reference.min(),
        "mass": reference.integral(),
        "lwc_vs_reference": lwc_err,
        "sqrt_hbar_window_vs_reference": wide_err,
    });
    if state.is_curve() {
        let centre = cfg.curve()?.mean();
        let r = mean_radius(&reference, centre);
        summary.push_str(&format!("Husimi-weighted mean radius about the curve centre: {}\n", fmt_num(r)));
        results["mean_radius"] = json!(r);
        results["curve_centre"] = json!([centre.p, centre.q]);
    }
    Ok(Report { results, summary, warnings: log.0, failed: false })
}

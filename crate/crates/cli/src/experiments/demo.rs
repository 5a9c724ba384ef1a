use chordlab::lwc::{find_peaks, lwc_coherent_closed_form, lwc_from_chord, spectrum, xi_grid, LwcWindow};
use chordlab::phase_space::{chord_from_centre_grid, PhaseSpacePoint};
use chordlab::states::{ChordFunction, CoherentState};
use serde_json::json;

use super::{fmt_num, WarningLog};
use crate::config::{ExperimentConfig, StateSpec};
use crate::output::Artifacts;
use crate::{Report, RunError};

/// Coherent state in both representations, with its correlations and
/// spectra checked against their closed forms.
pub fn run(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Report, RunError> {
    let eta = match cfg.state {
        Some(StateSpec::Coherent { p, q }) => PhaseSpacePoint::new(p, q),
        None => PhaseSpacePoint::ORIGIN,
        Some(_) => {
            return Err(RunError::Config(crate::config::ConfigError {
                location: "field `state`".into(),
                message: "coherent-demo needs a coherent state".into(),
            }))
        }
    };
    let hbar = cfg.hbar;
    let state = CoherentState::new(eta, hbar)?;
    let mut log = WarningLog::default();
    let grid = cfg.centre_grid(2.5, 64)?;
    let w = state.wigner_grid(&grid)?;
    out.real_grid("wigner.csv", "wigner", &w)?;
    let chi = log.take("chord transform", chord_from_centre_grid(&w)?);
    out.complex_grid("chord.csv", "chord", &chi)?;
    let closed = state.sample_on(&chi.grid)?;
    let transform_error = chi.values.iter().zip(&closed.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);

    let spec = cfg.xi_spec(10.0 * hbar.sqrt(), 256);
    let xs = xi_grid(spec.half_width, spec.points)?;
    let mut windows = Vec::new();
    let mut summary = format!(
        "coherent state at (p, q) = ({}, {})\nchord transform vs closed form: max |error| = {}\n\nwindow      Q  delta  max rel error  peak p   peak variance\n",
        eta.p,
        eta.q,
        fmt_num(transform_error)
    );
    for (k, &(q, delta)) in cfg.window_list().iter().enumerate() {
        let window = LwcWindow::new(q, delta, hbar)?;
        let sample = log.take(&format!("window {k}"), lwc_from_chord(&state, &window, &xs)?);
        let reference: Vec<_> = xs.iter().map(|&x| lwc_coherent_closed_form(&state, &window, x)).collect();
        let scale = reference.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let err = sample.c.iter().zip(&reference).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
        let rows: Vec<Vec<f64>> = xs
            .iter()
            .zip(sample.c.iter().zip(&reference))
            .map(|(&x, (c, r))| vec![x, c.re, c.im, r.re, r.im])
            .collect();
        let meta = [("q", q.to_string()), ("delta", delta.to_string()), ("hbar", hbar.to_string())];
        out.table(&format!("lwc_w{k}.csv"), &meta, &["xi_q", "re", "im", "re_ref", "im_ref"], &rows)?;
        let s = log.take(&format!("window {k} spectrum"), spectrum(&sample)?);
        let rows: Vec<Vec<f64>> = s.p.iter().zip(&s.s).map(|(&p, &v)| vec![p, v]).collect();
        out.table(&format!("spectrum_w{k}.csv"), &meta, &["p", "s"], &rows)?;
        let peaks = find_peaks(&s, cfg.peak_threshold);
        let main = peaks.iter().copied().max_by(|a, b| a.height.total_cmp(&b.height));
        summary.push_str(&format!(
            "{k:>6} {q:>6} {delta:>6.4} {:>14} {:>7} {:>15}\n",
            fmt_num(err),
            main.map_or("-".into(), |p| fmt_num(p.position)),
            main.map_or("-".into(), |p| fmt_num(p.variance)),
        ));
        windows.push(json!({
            "q": q,
            "delta": delta,
            "max_relative_error": err,
            "peaks": peaks,
            "expected_peak": eta.p,
            "expected_variance": hbar / 2.0,
            "bin": s.p[1] - s.p[0],
        }));
    }
    summary.push_str(&format!("\nexpected: peak at p = {}, variance hbar/2 = {}\n", eta.p, hbar / 2.0));
    Ok(Report {
        results: json!({ "eta": [eta.p, eta.q], "chord_transform_error": transform_error, "windows": windows }),
        summary,
        warnings: log.0,
        failed: false,
    })
}

use chordlab::dynamics::evolve_reflections;
use chordlab::lwc::{
    find_peaks, lwc_from_chord, resolution_verdict, spectrum, verdict_crossing, xi_grid, LwcSample,
    LwcWindow, Peak, SemiclassicalLwc, SpectralDensity,
};
use serde_json::{json, Value};

use super::{direct_sample, fmt_num, fock_evolution, initial_samples, WarningLog};
use crate::config::{ExperimentConfig, Sampling};
use crate::output::Artifacts;
use crate::{Report, RunError};

fn nearest_branch(sc: &SemiclassicalLwc, p: f64, tolerance: f64) -> Option<usize> {
    sc.branches
        .iter()
        .enumerate()
        .map(|(j, b)| (j, (b.p - p).abs()))
        .filter(|(_, d)| *d <= tolerance)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(j, _)| j)
}

struct Cell {
    sample: LwcSample,
    sc: Option<SemiclassicalLwc>,
}

/// Correlations for every time and window; with `with_spectrum`, also
/// spectra, peak tables and resolution verdicts.
pub fn run(cfg: &ExperimentConfig, out: &mut Artifacts, with_spectrum: bool) -> Result<Report, RunError> {
    let mut log = WarningLog::default();
    let hbar = cfg.hbar;
    let times = cfg.times()?;
    let channels = cfg.channels();
    let windows = cfg.window_list();
    let curve_state = cfg.state()?.is_curve();
    let spec = if curve_state { cfg.xi_spec(40.0 * hbar.sqrt(), 1024) } else { cfg.xi_spec(12.0 * hbar.sqrt(), 256) };
    let xs = xi_grid(spec.half_width, spec.points)?;

    let curve = if curve_state { Some(cfg.curve()?) } else { None };
    let oracle = match cfg.sampling {
        Sampling::MonteCarlo => None,
        Sampling::Grid => fock_evolution(cfg, &times)?,
    };
    let samples = if !curve_state && oracle.is_none() {
        Some(initial_samples(cfg, &cfg.centre_grid(2.5, 64)?, &mut log)?)
    } else {
        None
    };
    let route = match (&curve, &oracle) {
        (Some(_), _) => "semiclassical",
        (None, Some(_)) => "exact (number basis, position representation)",
        _ => "sampled reflections",
    };

    let mut summary = format!("route: {route}\n");
    let mut cells_json: Vec<Value> = Vec::new();
    let mut peak_rows = Vec::new();
    let mut verdict_rows = Vec::new();
    let mut verdict_series: Vec<Vec<Vec<bool>>> = vec![Vec::new(); windows.len()];

    for (k, &t) in times.iter().enumerate() {
        let evolved = match &samples {
            Some(s) => Some(log.take(&format!("t = {t}"), evolve_reflections(s, &cfg.hamiltonian, &channels, t, cfg.time.dt, hbar)?)),
            None => None,
        };
        for (j, &(q, delta)) in windows.iter().enumerate() {
            let ctx = format!("t = {t}, Q = {q}");
            let window = LwcWindow::new(q, delta, hbar)?;
            let cell = if let Some(curve) = &curve {
                let sc = log.take(
                    &ctx,
                    SemiclassicalLwc::markov(curve, &cfg.hamiltonian, &channels, t, cfg.time.dt, &window, cfg.caustic_threshold())?,
                );
                Cell { sample: sc.sample(&xs, SemiclassicalLwc::markov_value), sc: Some(sc) }
            } else if let Some(states) = &oracle {
                Cell { sample: direct_sample(&states[k], &window, &xs)?, sc: None }
            } else {
                let chi = evolved.as_ref().expect("sampled route");
                Cell { sample: log.take(&ctx, lwc_from_chord(chi, &window, &xs)?), sc: None }
            };
            let meta = [("t", t.to_string()), ("q", q.to_string()), ("delta", delta.to_string()), ("hbar", hbar.to_string())];
            let rows: Vec<Vec<f64>> = cell.sample.xi_q.iter().zip(&cell.sample.c).map(|(&x, c)| vec![x, c.re, c.im]).collect();
            out.table(&format!("lwc_t{k}_w{j}.csv"), &meta, &["xi_q", "re", "im"], &rows)?;
            let norm = cell.sample.normalization().map(|c| c.re);
            let mut entry = json!({
                "t": t,
                "window": j,
                "q": q,
                "delta": delta,
                "normalization": norm,
                "hermiticity_defect": cell.sample.hermiticity_defect(),
            });
            if let Some(sc) = &cell.sc {
                entry["branches"] = json!(sc.branches);
                entry["caustic_branches_excluded"] = json!(sc.excluded);
            }
            if with_spectrum {
                let dft = log.take(&ctx, spectrum(&cell.sample)?);
                let (peaks, closed) = match &cell.sc {
                    Some(sc) => {
                        let closed = log.take(&ctx, sc.spectrum_closed_form(&dft.p));
                        (find_peaks(&closed, cfg.peak_threshold), Some(closed))
                    }
                    None => (find_peaks(&dft, cfg.peak_threshold), None),
                };
                write_spectrum(out, k, j, &meta, &dft, closed.as_ref())?;
                let bin = dft.p[1] - dft.p[0];
                let mut table = Vec::new();
                for peak in &peaks {
                    let branch = cell.sc.as_ref().and_then(|sc| nearest_branch(sc, peak.position, 2.0 * bin));
                    let predicted = branch.map(|b| cell.sc.as_ref().unwrap().branches[b].variance(&window));
                    peak_rows.push(vec![
                        t,
                        j as f64,
                        q,
                        peak.position,
                        peak.height,
                        peak.variance,
                        branch.map_or(-1.0, |b| b as f64),
                        predicted.unwrap_or(f64::NAN),
                    ]);
                    table.push(json!({ "peak": peak, "branch": branch, "predicted_variance": predicted }));
                }
                entry["peaks"] = json!(table);
                entry["bin"] = json!(bin);
                summary.push_str(&peak_text(t, q, &peaks, bin));
                if let Some(sc) = &cell.sc {
                    let pairs: Vec<(f64, f64)> = sc.branches.iter().map(|b| (b.p, b.phi_qq)).collect();
                    let verdicts = resolution_verdict(&pairs, hbar);
                    for (pair, v) in verdicts.iter().enumerate() {
                        verdict_rows.push(vec![t, j as f64, q, pair as f64, if *v { 1.0 } else { 0.0 }]);
                        summary.push_str(&format!("    pair {pair}: {}\n", if *v { "resolved" } else { "unresolved" }));
                    }
                    entry["resolved"] = json!(verdicts);
                    verdict_series[j].push(verdicts);
                }
            } else {
                summary.push_str(&format!(
                    "t = {} Q = {}: C(0, Q) = {}\n",
                    fmt_num(t),
                    fmt_num(q),
                    norm.map_or("-".into(), fmt_num)
                ));
            }
            cells_json.push(entry);
        }
    }

    let mut results = json!({ "route": route, "cells": cells_json });
    if with_spectrum {
        out.table(
            "peaks.csv",
            &[],
            &["t", "window", "q", "position", "height", "variance", "branch", "predicted_variance"],
            &peak_rows,
        )?;
        if curve_state {
            out.table("verdicts.csv", &[], &["t", "window", "q", "pair", "resolved"], &verdict_rows)?;
            let crossings = crossings(&times, &verdict_series);
            if !crossings.is_empty() {
                summary.push_str("\nresolution lost:\n");
                for c in &crossings {
                    summary.push_str(&format!("  window {} pair {} at t = {}\n", c["window"], c["pair"], c["t"]));
                }
            }
            results["crossings"] = json!(crossings);
        }
    }
    Ok(Report { results, summary, warnings: log.0, failed: false })
}

fn crossings(times: &[f64], series: &[Vec<Vec<bool>>]) -> Vec<Value> {
    let mut out = Vec::new();
    for (j, per_time) in series.iter().enumerate() {
        let pairs = per_time.iter().map(Vec::len).min().unwrap_or(0);
        for pair in 0..pairs {
            let flags: Vec<bool> = per_time.iter().map(|v| v[pair]).collect();
            if let Some(t) = verdict_crossing(times, &flags) {
                out.push(json!({ "window": j, "pair": pair, "t": t }));
            }
        }
    }
    out
}

fn write_spectrum(
    out: &mut Artifacts,
    k: usize,
    j: usize,
    meta: &[(&str, String)],
    dft: &SpectralDensity,
    closed: Option<&SpectralDensity>,
) -> Result<(), RunError> {
    let name = format!("spectrum_t{k}_w{j}.csv");
    match closed {
        Some(c) => {
            let rows: Vec<Vec<f64>> = dft.p.iter().zip(dft.s.iter().zip(&c.s)).map(|(&p, (&s, &sc))| vec![p, s, sc]).collect();
            out.table(&name, meta, &["p", "s", "s_sc"], &rows)?;
        }
        None => {
            let rows: Vec<Vec<f64>> = dft.p.iter().zip(&dft.s).map(|(&p, &s)| vec![p, s]).collect();
            out.table(&name, meta, &["p", "s"], &rows)?;
        }
    }
    Ok(())
}

fn peak_text(t: f64, q: f64, peaks: &[Peak], bin: f64) -> String {
    let mut s = format!("t = {} Q = {} (bin {})\n    position      height    variance\n", fmt_num(t), fmt_num(q), fmt_num(bin));
    for p in peaks {
        s.push_str(&format!("  {:>10} {:>11} {:>11}\n", fmt_num(p.position), fmt_num(p.height), fmt_num(p.variance)));
    }
    s
}

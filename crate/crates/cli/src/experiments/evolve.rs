use chordlab::dynamics::evolve_chord_function;
use chordlab::fock::chord_grid_exact;
use chordlab::phase_space::centre_from_chord_grid;
use serde_json::json;

use super::{fmt_num, fock_evolution, initial_samples, WarningLog};
use crate::config::ExperimentConfig;
use crate::output::Artifacts;
use crate::{Report, RunError};

/// Transports the chord function of the initial state along the centre
/// flow with decoherence, and compares with the exact evolution when one
/// is available.
pub fn run(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Report, RunError> {
    let mut log = WarningLog::default();
    let grid = cfg.centre_grid(2.5, 64)?;
    let chord_grid = grid.conjugate();
    let times = cfg.times()?;
    let channels = cfg.channels();
    let samples = initial_samples(cfg, &grid, &mut log)?;
    let oracle = fock_evolution(cfg, &times)?;
    let cutoff = 3.0 * cfg.hbar.sqrt();

    let mut rows = Vec::new();
    let mut per_time = Vec::new();
    let mut summary = format!(
        "{} centre samples, chord grid half-widths ({}, {})\n\n       t     W min     W max   oracle max rel error (|xi| <= 3 sqrt(hbar))\n",
        samples.len(),
        fmt_num(chord_grid.p_half_width),
        fmt_num(chord_grid.q_half_width)
    );
    for (k, &t) in times.iter().enumerate() {
        let ctx = format!("t = {t}");
        let chi = log.take(&ctx, evolve_chord_function(&samples, &cfg.hamiltonian, &channels, t, cfg.time.dt, &chord_grid)?);
        out.complex_grid(&format!("chord_t{k}.csv"), "chord", &chi)?;
        let w = log.take(&ctx, centre_from_chord_grid(&chi)?);
        out.real_grid(&format!("wigner_t{k}.csv"), "wigner", &w)?;
        let mut entry = json!({ "t": t, "wigner_min": w.min(), "wigner_max": w.max() });
        let mut err_text = "-".to_string();
        if let Some(states) = &oracle {
            let exact = chord_grid_exact(&states[k], &chord_grid)?;
            let m = chord_grid.points;
            let (mut num, mut scale) = (0.0f64, 0.0f64);
            for (idx, (a, b)) in chi.values.iter().zip(&exact.values).enumerate() {
                if chord_grid.chord(idx / m, idx % m).norm_sq().sqrt() <= cutoff {
                    num = num.max((a - b).norm());
                    scale = scale.max(b.norm());
                }
            }
            let rel = num / scale;
            rows.push(vec![t, num, rel]);
            entry["oracle_max_abs"] = json!(num);
            entry["oracle_max_rel"] = json!(rel);
            err_text = fmt_num(rel);
        }
        summary.push_str(&format!("{:>8} {:>9} {:>9} {:>10}\n", fmt_num(t), fmt_num(w.min()), fmt_num(w.max()), err_text));
        per_time.push(entry);
    }
    if oracle.is_some() {
        out.table("errors.csv", &[("cutoff", cutoff.to_string())], &["t", "max_abs", "max_rel"], &rows)?;
    }
    Ok(Report {
        results: json!({ "samples": samples.len(), "oracle": oracle.is_some(), "times": per_time }),
        summary,
        warnings: log.0,
        failed: false,
    })
}

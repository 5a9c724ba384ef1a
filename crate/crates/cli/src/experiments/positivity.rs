use chordlab::dynamics::{decoherence_matrix, positivity_time, PositivityOptions};
use chordlab::fock::wigner_exact;
use chordlab::phase_space::PhaseSpacePoint;
use chordlab::Error;
use serde_json::json;

use super::{fmt_num, fock_evolution, is_exact_state, WarningLog};
use crate::config::ExperimentConfig;
use crate::output::Artifacts;
use crate::{Report, RunError};

const PROBE_FACTORS: [f64; 5] = [0.9, 0.95, 1.0, 1.05, 1.1];

/// Time at which det Φ reaches 1/4, and the exact Wigner minimum around it
/// when the config names an exact state.
pub fn run(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Report, RunError> {
    let mut log = WarningLog::default();
    let channels = cfg.channels();
    let opts = PositivityOptions { dt: cfg.time.dt, horizon: cfg.time.stop.unwrap_or(PositivityOptions::default().horizon) };
    let tp = match positivity_time(&cfg.hamiltonian, &channels, opts) {
        Ok(t) => t,
        Err(Error::NeverPositive { horizon, max_det }) => {
            let summary = format!(
                "det Phi on initial chords stays below 1/4 up to t = {}; largest value {}\n",
                fmt_num(horizon),
                fmt_num(max_det)
            );
            return Ok(Report {
                results: json!({ "t_p": null, "horizon": horizon, "max_det": max_det }),
                summary,
                warnings: log.0,
                failed: false,
            });
        }
        Err(e) => return Err(e.into()),
    };
    let phi = decoherence_matrix(&cfg.hamiltonian, &channels, PhaseSpacePoint::ORIGIN, tp, cfg.time.dt)?.phi;
    let mut summary = format!("t_p = {}\nPhi(t_p) on final chords: [[{}, {}], [{}, {}]]\n", fmt_num(tp), fmt_num(phi[(0, 0)]), fmt_num(phi[(0, 1)]), fmt_num(phi[(1, 0)]), fmt_num(phi[(1, 1)]));
    let mut results = json!({
        "t_p": tp,
        "phi_final_frame": [[phi[(0, 0)], phi[(0, 1)]], [phi[(1, 0)], phi[(1, 1)]]],
    });

    if cfg.state.is_some() && is_exact_state(cfg) {
        let times: Vec<f64> = PROBE_FACTORS.iter().map(|f| f * tp).collect();
        if let Some(states) = fock_evolution(cfg, &times)? {
            let grid = cfg.centre_grid(3.0, 96)?;
            let mut rows = Vec::new();
            summary.push_str("\n  t / t_p          t   W min / W max\n");
            for ((&f, &t), rho) in PROBE_FACTORS.iter().zip(&times).zip(&states) {
                let w = log.take(&format!("t = {t}"), wigner_exact(rho, &grid)?);
                let ratio = w.min() / w.max();
                rows.push(vec![t, f, w.min(), w.max(), ratio]);
                summary.push_str(&format!("{:>9} {:>10} {:>15}\n", fmt_num(f), fmt_num(t), fmt_num(ratio)));
            }
            out.table("wigner_min.csv", &[("t_p", tp.to_string())], &["t", "t_over_tp", "w_min", "w_max", "ratio"], &rows)?;
            results["wigner_probe"] = json!(rows);
        }
    }
    Ok(Report { results, summary, warnings: log.0, failed: false })
}

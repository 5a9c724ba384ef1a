mod correlations;
mod demo;
mod evolve;
mod husimi;
mod positivity;
mod validate;

use chordlab::dynamics::WeightedSamples;
use chordlab::lwc::{lwc_direct, LwcSample, LwcWindow, PositionDensity};
use chordlab::fock::{build_hamiltonian, evolve_with_retry, wigner_exact, FockDensityMatrix};
use chordlab::phase_space::{CenteredGrid, PhaseSpacePoint, WignerGrid};
use chordlab::states::CoherentState;
use chordlab::{Error, Warning};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{ConfigError, Experiment, ExperimentConfig, Sampling, StateSpec};
use crate::output::Artifacts;
use crate::{Report, RunError};

pub fn dispatch(experiment: Experiment, cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Report, RunError> {
    match experiment {
        Experiment::CoherentDemo => demo::run(cfg, out),
        Experiment::EvolveChord => evolve::run(cfg, out),
        Experiment::Lwc => correlations::run(cfg, out, false),
        Experiment::Spectrum => correlations::run(cfg, out, true),
        Experiment::Positivity => positivity::run(cfg, out),
        Experiment::Husimi => husimi::run(cfg, out),
        Experiment::Validate => validate::run(cfg, out),
    }
}

/// Accumulates warnings with the context that produced them.
#[derive(Default)]
pub(crate) struct WarningLog(pub Vec<String>);

impl WarningLog {
    pub fn extend(&mut self, context: &str, warnings: &[Warning]) {
        for w in warnings {
            let line = format!("{context}: {w}");
            if !self.0.contains(&line) {
                self.0.push(line);
            }
        }
    }

    pub fn take<T>(&mut self, context: &str, checked: chordlab::Checked<T>) -> T {
        let (v, w) = checked.into_parts();
        self.extend(context, &w);
        v
    }
}

fn state_error(message: &str) -> RunError {
    RunError::Config(ConfigError { location: "field `state`".into(), message: message.into() })
}

/// Density matrix of a coherent, cat or number state.
pub(crate) fn fock_state(cfg: &ExperimentConfig, dim: usize) -> Result<FockDensityMatrix, Error> {
    match cfg.state.as_ref() {
        Some(StateSpec::Coherent { p, q }) => FockDensityMatrix::coherent(PhaseSpacePoint::new(*p, *q), cfg.hbar, dim),
        Some(StateSpec::Cat { p, q, sign }) => FockDensityMatrix::cat(PhaseSpacePoint::new(*p, *q), *sign, cfg.hbar, dim),
        Some(StateSpec::Fock { n }) => FockDensityMatrix::fock(*n, cfg.hbar, dim),
        _ => Err(Error::InvalidParameter("state has no density-matrix form".into())),
    }
}

pub(crate) fn is_exact_state(cfg: &ExperimentConfig) -> bool {
    matches!(cfg.state, Some(StateSpec::Coherent { .. } | StateSpec::Cat { .. } | StateSpec::Fock { .. }))
}

/// Initial Wigner function of an exact state on `grid`.
pub(crate) fn initial_wigner(cfg: &ExperimentConfig, grid: &CenteredGrid, log: &mut WarningLog) -> Result<WignerGrid, RunError> {
    match cfg.state.as_ref() {
        Some(StateSpec::Coherent { p, q }) => Ok(CoherentState::new(PhaseSpacePoint::new(*p, *q), cfg.hbar)?.wigner_grid(grid)?),
        Some(_) if is_exact_state(cfg) => {
            let rho = fock_state(cfg, cfg.fock_dim)?;
            Ok(log.take("initial Wigner function", wigner_exact(&rho, grid)?))
        }
        _ => Err(state_error("needs a coherent, cat or fock state")),
    }
}

/// Weighted centres representing the initial state: curve samples for
/// curve states, otherwise Wigner grid cells or Monte Carlo draws.
pub(crate) fn initial_samples(cfg: &ExperimentConfig, grid: &CenteredGrid, log: &mut WarningLog) -> Result<WeightedSamples, RunError> {
    if cfg.state()?.is_curve() {
        return Ok(WeightedSamples::uniform(cfg.curve()?.samples().to_vec())?);
    }
    match (cfg.sampling, cfg.state.as_ref()) {
        (Sampling::MonteCarlo, Some(StateSpec::Coherent { p, q })) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let normal = Normal::new(0.0, (cfg.hbar / 2.0).sqrt()).expect("positive width");
            let points = (0..cfg.mc_samples)
                .map(|_| PhaseSpacePoint::new(p + normal.sample(&mut rng), q + normal.sample(&mut rng)))
                .collect();
            Ok(WeightedSamples::uniform(points)?)
        }
        (Sampling::MonteCarlo, _) => Err(RunError::Config(ConfigError {
            location: "field `sampling`".into(),
            message: "Monte Carlo sampling needs a non-negative Wigner function (coherent or curve state)".into(),
        })),
        (Sampling::Grid, _) => Ok(WeightedSamples::from_wigner_grid(&initial_wigner(cfg, grid, log)?)?),
    }
}

/// Exact evolution through the number basis, when the Hamiltonian has a
/// matrix form.
pub(crate) fn fock_evolution(cfg: &ExperimentConfig, times: &[f64]) -> Result<Option<Vec<FockDensityMatrix>>, RunError> {
    if !is_exact_state(cfg) {
        return Ok(None);
    }
    if let Err(Error::NoMatrixForm(_)) = build_hamiltonian(&cfg.hamiltonian, cfg.hbar, 4) {
        return Ok(None);
    }
    let states = evolve_with_retry(
        |d| fock_state(cfg, d),
        &cfg.hamiltonian,
        &cfg.channels(),
        cfg.hbar,
        times,
        cfg.time.dt,
        cfg.fock_dim,
    )?;
    Ok(Some(states))
}

/// Correlation through the position representation of an exact state.
pub(crate) fn direct_sample(rho: &FockDensityMatrix, window: &LwcWindow, xs: &[f64]) -> Result<LwcSample, RunError> {
    let h = (xs[1] - xs[0]) / 2.0;
    let reach = xs.iter().fold(0.0f64, |m, x| m.max(x.abs())) / 2.0 + 6.0 * window.delta + 4.0 * h;
    let points = (2.0 * reach / h).ceil() as usize + 1;
    let pos = PositionDensity::from_fock(rho, window.q - reach, h, points)?;
    let c = xs.iter().map(|&x| lwc_direct(&pos, window, x)).collect::<Result<Vec<_>, _>>()?;
    Ok(LwcSample { window: *window, xi_q: xs.to_vec(), c })
}

pub(crate) fn fmt_num(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{v:.6}")
    } else {
        format!("{v:.4e}")
    }
}

//! Experiment configuration, read from TOML.
//!
//! ```toml
//! hbar = 0.05
//! seed = 7
//!
//! [state]
//! family = "circle"
//! action = 0.5
//!
//! [hamiltonian]
//! family = "harmonic"
//! omega = 1.0
//!
//! [[channel]]
//! l = [0.0, 1.0, 0.0, 0.0]   # l'_p, l'_q, l''_p, l''_q
//!
//! [time]
//! values = [0.0, 0.5]
//!
//! [[window]]
//! q = 0.0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use chordlab::dynamics::{HamiltonianModel, LindbladChannel};
use chordlab::phase_space::{CenteredGrid, PhaseSpacePoint};
use chordlab::states::{CurveFamily, LagrangianCurve, MIN_CURVE_SAMPLES};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    CoherentDemo,
    EvolveChord,
    Lwc,
    Spectrum,
    Positivity,
    Husimi,
    Validate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::CoherentDemo => "coherent-demo",
            Experiment::EvolveChord => "evolve-chord",
            Experiment::Lwc => "lwc",
            Experiment::Spectrum => "spectrum",
            Experiment::Positivity => "positivity",
            Experiment::Husimi => "husimi",
            Experiment::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Coherent {
        p: f64,
        q: f64,
    },
    Cat {
        p: f64,
        q: f64,
        #[serde(default = "plus_one")]
        sign: f64,
    },
    Fock {
        n: usize,
    },
    Circle {
        action: f64,
        #[serde(default)]
        centre: [f64; 2],
    },
    Quartic {
        energy: f64,
    },
    Pendulum {
        k: f64,
        energy: f64,
    },
    CurveCsv {
        path: PathBuf,
    },
}

fn plus_one() -> f64 {
    1.0
}

impl StateSpec {
    pub fn is_curve(&self) -> bool {
        matches!(self, StateSpec::Circle { .. } | StateSpec::Quartic { .. } | StateSpec::Pendulum { .. } | StateSpec::CurveCsv { .. })
    }

    pub fn curve_family(&self) -> Option<CurveFamily> {
        match *self {
            StateSpec::Circle { action, centre } => Some(CurveFamily::Circle { action, centre }),
            StateSpec::Quartic { energy } => Some(CurveFamily::Quartic { energy }),
            StateSpec::Pendulum { k, energy } => Some(CurveFamily::Pendulum { k, energy }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    /// `(l'_p, l'_q, l''_p, l''_q)`.
    pub l: [f64; 4],
}

impl ChannelSpec {
    pub fn channel(&self) -> LindbladChannel {
        LindbladChannel::new([self.l[0], self.l[1]], [self.l[2], self.l[3]])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub q: f64,
    /// Defaults to `√ħ`.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub count: Option<usize>,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_dt() -> f64 {
    1e-3
}

impl Default for TimeSpec {
    fn default() -> Self {
        TimeSpec { values: None, start: None, stop: None, count: None, dt: default_dt() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_width: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    #[default]
    Grid,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub hbar: f64,
    pub state: Option<StateSpec>,
    #[serde(default = "zero_hamiltonian")]
    pub hamiltonian: HamiltonianModel,
    #[serde(default, rename = "channel")]
    pub channels: Vec<ChannelSpec>,
    #[serde(default)]
    pub time: TimeSpec,
    #[serde(default, rename = "window")]
    pub windows: Vec<WindowSpec>,
    pub grid: Option<GridSpec>,
    pub xi: Option<GridSpec>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default = "default_curve_samples")]
    pub curve_samples: usize,
    #[serde(default = "default_fock_dim")]
    pub fock_dim: usize,
    pub caustic_threshold: Option<f64>,
    #[serde(default = "default_peak_threshold")]
    pub peak_threshold: f64,
}

fn zero_hamiltonian() -> HamiltonianModel {
    HamiltonianModel::Zero
}

fn default_mc_samples() -> usize {
    20_000
}

fn default_curve_samples() -> usize {
    2048
}

fn default_fock_dim() -> usize {
    128
}

fn default_peak_threshold() -> f64 {
    1e-3
}

/// A configuration problem, located by line and column or by field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub location: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at {}: {}", self.location, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn field(name: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { location: format!("field `{name}`"), message: message.into() }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let location = match e.span() {
                Some(span) => {
                    let (line, col) = line_col(text, span.start);
                    format!("line {line}, column {col}")
                }
                None => "top level".to_string(),
            };
            ConfigError { location, message: e.message().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError { location: path.display().to_string(), message: e.to_string() })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(field(name, format!("must be a positive number, got {v}")))
            }
        };
        positive("hbar", self.hbar)?;
        positive("time.dt", self.time.dt)?;
        positive("peak_threshold", self.peak_threshold)?;
        if let Some(c) = self.caustic_threshold {
            positive("caustic_threshold", c)?;
        }
        self.hamiltonian.validate().map_err(|e| field("hamiltonian", e.to_string()))?;
        for (k, c) in self.channels.iter().enumerate() {
            if c.l.iter().any(|v| !v.is_finite()) {
                return Err(field(&format!("channel[{k}].l"), "entries must be finite"));
            }
        }
        for (k, w) in self.windows.iter().enumerate() {
            if !w.q.is_finite() {
                return Err(field(&format!("window[{k}].q"), "must be finite"));
            }
            if let Some(d) = w.delta {
                positive(&format!("window[{k}].delta"), d)?;
            }
        }
        for (name, g) in [("grid", self.grid), ("xi", self.xi)] {
            if let Some(g) = g {
                positive(&format!("{name}.half_width"), g.half_width)?;
                if g.points < 4 || g.points % 2 == 1 || g.points > 4096 {
                    return Err(field(&format!("{name}.points"), format!("must be even, between 4 and 4096, got {}", g.points)));
                }
            }
        }
        if self.curve_samples < MIN_CURVE_SAMPLES {
            return Err(field("curve_samples", format!("must be at least {MIN_CURVE_SAMPLES}")));
        }
        if !(2..=1024).contains(&self.fock_dim) {
            return Err(field("fock_dim", "must lie in 2..=1024"));
        }
        if self.mc_samples == 0 {
            return Err(field("mc_samples", "must be positive"));
        }
        self.times()?;
        match &self.state {
            Some(StateSpec::Coherent { p, q }) | Some(StateSpec::Cat { p, q, .. }) if !(p.is_finite() && q.is_finite()) => {
                return Err(field("state", "centre must be finite"))
            }
            Some(StateSpec::Cat { sign, .. }) if sign.abs() != 1.0 => return Err(field("state.sign", "must be +1 or -1")),
            Some(StateSpec::Circle { action, .. }) => positive("state.action", *action)?,
            Some(StateSpec::Quartic { energy }) => positive("state.energy", *energy)?,
            Some(StateSpec::Pendulum { k, energy }) => {
                positive("state.k", *k)?;
                if energy.is_nan() || energy.abs() >= *k {
                    return Err(field("state.energy", "pendulum libration needs |energy| < k"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// The time grid: explicit `values`, or `count` points from `start` to
    /// `stop`; a single `t = 0` when absent.
    pub fn times(&self) -> Result<Vec<f64>, ConfigError> {
        let t = &self.time;
        let times = match (&t.values, t.start, t.stop, t.count) {
            (Some(v), None, None, None) => v.clone(),
            (None, start, Some(stop), Some(count)) if count >= 1 => {
                let start = start.unwrap_or(0.0);
                if count == 1 {
                    vec![start]
                } else {
                    (0..count).map(|k| start + (stop - start) * k as f64 / (count - 1) as f64).collect()
                }
            }
            (None, None, None, None) => vec![0.0],
            _ => return Err(field("time", "give either `values` or `stop` and `count` (with optional `start`)")),
        };
        if times.is_empty() || times.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(field("time", "times must be finite and non-negative"));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(field("time", "times must be non-decreasing"));
        }
        Ok(times)
    }

    pub fn channels(&self) -> Vec<LindbladChannel> {
        self.channels.iter().map(ChannelSpec::channel).collect()
    }

    pub fn state(&self) -> Result<&StateSpec, ConfigError> {
        self.state.as_ref().ok_or_else(|| field("state", "this experiment needs a [state] section"))
    }

    pub fn centre_grid(&self, default_half_width: f64, default_points: usize) -> Result<CenteredGrid, ConfigError> {
        let g = self.grid.unwrap_or(GridSpec { half_width: default_half_width, points: default_points });
        CenteredGrid::square(g.half_width, g.points, self.hbar).map_err(|e| field("grid", e.to_string()))
    }

    pub fn xi_spec(&self, default_half_width: f64, default_points: usize) -> GridSpec {
        self.xi.unwrap_or(GridSpec { half_width: default_half_width, points: default_points })
    }

    /// Windows with their widths resolved, defaulting to `Q = 0`.
    pub fn window_list(&self) -> Vec<(f64, f64)> {
        let default = self.hbar.sqrt();
        if self.windows.is_empty() {
            return vec![(0.0, default)];
        }
        self.windows.iter().map(|w| (w.q, w.delta.unwrap_or(default))).collect()
    }

    pub fn caustic_threshold(&self) -> f64 {
        self.caustic_threshold.unwrap_or_else(|| chordlab::states::default_caustic_threshold(self.hbar))
    }

    /// The curve of a curve-type state.
    pub fn curve(&self) -> Result<LagrangianCurve, ConfigError> {
        let state = self.state()?;
        if let Some(family) = state.curve_family() {
            return LagrangianCurve::from_family(&family, self.curve_samples, self.time.dt.min(1e-3))
                .map_err(|e| field("state", e.to_string()));
        }
        match state {
            StateSpec::CurveCsv { path } => {
                let file = std::fs::File::open(path).map_err(|e| field("state.path", format!("{}: {e}", path.display())))?;
                chordlab::io::read_curve_csv(file).map_err(|e| field("state.path", e.to_string()))
            }
            _ => Err(field("state", "this experiment needs a curve state (circle, quartic, pendulum or curve_csv)")),
        }
    }

    pub fn centre_of_state(&self) -> Option<PhaseSpacePoint> {
        match self.state {
            Some(StateSpec::Coherent { p, q }) | Some(StateSpec::Cat { p, q, .. }) => Some(PhaseSpacePoint::new(p, q)),
            _ => None,
        }
    }
}

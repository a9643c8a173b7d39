//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Later assignments win, and
//! command-line flags are applied after the file. Every value is validated when
//! it is set, and errors name the offending key.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use photon_memory::optimizer::Engine;
use photon_memory::simulator::{Direction, SimConfig};

use crate::error::CliError;

/// Keys accepted in a config file, in documentation order.
pub const KEYS: &[(&str, &str)] = &[
    ("d", "comma-separated optical depths"),
    ("delta", "detuning in units of the optical-coherence decay rate"),
    ("out", "output directory"),
    ("jobs", "worker threads for sweeps"),
    ("tol", "iteration tolerance on the L2 mode change"),
    ("eta_tol", "iteration tolerance on the efficiency change"),
    ("max_iter", "iteration cap"),
    ("engine", "simulator | closed-form, used by iterate and forward curves"),
    ("kernel_nodes", "Gauss-Legendre nodes for the kernel eigenproblem"),
    ("kernel_tol", "power-iteration tolerance"),
    ("input_td", "reference input duration times d"),
    ("input_duration", "reference input duration; overrides input_td"),
    ("input_samples", "samples of the input time grid"),
    ("shaping_du", "step in sqrt(h) for control shaping"),
    ("h_max", "upper end of the shaping table; default picks one from d and delta"),
    ("n_zeta", "simulator spatial nodes; default picks one from d"),
    ("step_scale", "simulator RK4 step scale, in (0, 2]"),
    ("audit_tol", "simulator photon-balance target"),
    ("curve_d_min", "smallest d of the curves sweep"),
    ("curve_d_max", "largest d of the curves sweep"),
    ("curve_points", "number of logarithmically spaced sweep points"),
    ("init", "flat | linear | random, starting spin wave for iterate"),
    ("seed", "seed for the random starting spin wave"),
    ("sim_mode", "storage | retrieval"),
    ("control", "piecewise-linear control knots tau:re[:im], comma-separated; empty uses a square pulse"),
    ("wave", "optimal | flat, stored spin wave for simulated retrieval"),
    ("direction", "backward | forward"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    Flat,
    Linear,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    Storage,
    Retrieval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveKind {
    Optimal,
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Simulator,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub d: Vec<f64>,
    pub delta: f64,
    pub out: PathBuf,
    pub jobs: usize,
    pub tol: f64,
    pub eta_tol: f64,
    pub max_iter: usize,
    pub engine: EngineKind,
    pub kernel_nodes: usize,
    pub kernel_tol: f64,
    pub input_td: f64,
    pub input_duration: Option<f64>,
    pub input_samples: usize,
    pub shaping_du: f64,
    pub h_max: Option<f64>,
    pub n_zeta: Option<usize>,
    pub step_scale: f64,
    pub audit_tol: f64,
    pub curve_d_min: f64,
    pub curve_d_max: f64,
    pub curve_points: usize,
    pub init: InitKind,
    pub seed: u64,
    pub sim_mode: SimMode,
    /// `(tau, re, im)` control knots; empty means a square pulse with `v_g T = L`.
    pub control: Vec<(f64, f64, f64)>,
    pub wave: WaveKind,
    pub direction: Direction,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            d: vec![1.0, 10.0, 100.0],
            delta: 0.0,
            out: PathBuf::from("out"),
            jobs: 1,
            tol: 1e-3,
            eta_tol: 1e-7,
            max_iter: 500,
            engine: EngineKind::Simulator,
            kernel_nodes: 200,
            kernel_tol: 1e-12,
            input_td: 1000.0,
            input_duration: None,
            input_samples: 2001,
            shaping_du: 0.02,
            h_max: None,
            n_zeta: None,
            step_scale: 0.5,
            audit_tol: 1e-4,
            curve_d_min: 0.3,
            curve_d_max: 300.0,
            curve_points: 25,
            init: InitKind::Flat,
            seed: 0,
            sim_mode: SimMode::Storage,
            control: Vec::new(),
            wave: WaveKind::Optimal,
            direction: Direction::Backward,
        }
    }
}

fn bad(key: &str, value: &str, reason: impl fmt::Display) -> CliError {
    CliError::Config { key: key.to_string(), message: format!("{value:?}: {reason}") }
}

fn number<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| bad(key, value, e))
}

fn positive(key: &str, value: &str) -> Result<f64, CliError> {
    let x: f64 = number(key, value)?;
    if !(x.is_finite() && x > 0.0) {
        return Err(bad(key, value, "must be a positive number"));
    }
    Ok(x)
}

fn at_least(key: &str, value: &str, min: usize) -> Result<usize, CliError> {
    let n: usize = number(key, value)?;
    if n < min {
        return Err(bad(key, value, format!("must be at least {min}")));
    }
    Ok(n)
}

fn parse_knots(key: &str, value: &str) -> Result<Vec<(f64, f64, f64)>, CliError> {
    let mut knots = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        if !(2..=3).contains(&parts.len()) {
            return Err(bad(key, value, "knots are tau:re or tau:re:im"));
        }
        let mut v = [0.0; 3];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = number::<f64>(key, p.trim())?;
            if !slot.is_finite() {
                return Err(bad(key, value, "knots must be finite"));
            }
        }
        knots.push((v[0], v[1], v[2]));
    }
    if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(bad(key, value, "knot times must increase"));
    }
    Ok(knots)
}

impl RunConfig {
    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        match key {
            "d" => {
                let d: Vec<f64> = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| positive(key, s))
                    .collect::<Result<_, _>>()?;
                if d.is_empty() {
                    return Err(bad(key, value, "needs at least one optical depth"));
                }
                self.d = d;
            }
            "delta" => {
                let x: f64 = number(key, value)?;
                if !x.is_finite() {
                    return Err(bad(key, value, "must be finite"));
                }
                self.delta = x;
            }
            "out" => {
                if value.is_empty() {
                    return Err(bad(key, value, "must not be empty"));
                }
                self.out = PathBuf::from(value);
            }
            "jobs" => self.jobs = at_least(key, value, 1)?,
            "tol" => self.tol = positive(key, value)?,
            "eta_tol" => self.eta_tol = positive(key, value)?,
            "max_iter" => self.max_iter = at_least(key, value, 1)?,
            "engine" => {
                self.engine = match value {
                    "simulator" => EngineKind::Simulator,
                    "closed-form" => EngineKind::ClosedForm,
                    _ => return Err(bad(key, value, "expected simulator or closed-form")),
                }
            }
            "kernel_nodes" => self.kernel_nodes = at_least(key, value, 8)?,
            "kernel_tol" => self.kernel_tol = positive(key, value)?,
            "input_td" => self.input_td = positive(key, value)?,
            "input_duration" => self.input_duration = Some(positive(key, value)?),
            "input_samples" => self.input_samples = at_least(key, value, 3)?,
            "shaping_du" => self.shaping_du = positive(key, value)?,
            "h_max" => self.h_max = Some(positive(key, value)?),
            "n_zeta" => {
                let n = at_least(key, value, photon_memory::simulator::MIN_NODES)?;
                if n % 2 != 0 {
                    return Err(bad(key, value, "must be even"));
                }
                self.n_zeta = Some(n);
            }
            "step_scale" => {
                let x = positive(key, value)?;
                if x > 2.0 {
                    return Err(bad(key, value, "must lie in (0, 2]"));
                }
                self.step_scale = x;
            }
            "audit_tol" => self.audit_tol = positive(key, value)?,
            "curve_d_min" => self.curve_d_min = positive(key, value)?,
            "curve_d_max" => self.curve_d_max = positive(key, value)?,
            "curve_points" => self.curve_points = at_least(key, value, 1)?,
            "init" => {
                self.init = match value {
                    "flat" => InitKind::Flat,
                    "linear" => InitKind::Linear,
                    "random" => InitKind::Random,
                    _ => return Err(bad(key, value, "expected flat, linear or random")),
                }
            }
            "seed" => self.seed = number(key, value)?,
            "sim_mode" => {
                self.sim_mode = match value {
                    "storage" => SimMode::Storage,
                    "retrieval" => SimMode::Retrieval,
                    _ => return Err(bad(key, value, "expected storage or retrieval")),
                }
            }
            "control" => self.control = parse_knots(key, value)?,
            "wave" => {
                self.wave = match value {
                    "optimal" => WaveKind::Optimal,
                    "flat" => WaveKind::Flat,
                    _ => return Err(bad(key, value, "expected optimal or flat")),
                }
            }
            "direction" => {
                self.direction = match value {
                    "backward" => Direction::Backward,
                    "forward" => Direction::Forward,
                    _ => return Err(bad(key, value, "expected backward or forward")),
                }
            }
            _ => {
                return Err(CliError::Config { key: key.to_string(), message: "unknown key".into() })
            }
        }
        Ok(())
    }

    /// Parse config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config {
                    key: line.to_string(),
                    message: format!("line {}: expected key = value", lineno + 1),
                });
            };
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    /// Checks across keys that cannot be made one key at a time.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.curve_d_max < self.curve_d_min {
            return Err(CliError::Config {
                key: "curve_d_max".into(),
                message: format!("{} is below curve_d_min {}", self.curve_d_max, self.curve_d_min),
            });
        }
        if self.control.len() == 1 {
            return Err(CliError::Config { key: "control".into(), message: "needs at least two knots".into() });
        }
        Ok(())
    }

    /// Reference input duration at optical depth `d`.
    pub fn input_duration_for(&self, d: f64) -> f64 {
        self.input_duration.unwrap_or(self.input_td / d)
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            n_zeta: self.n_zeta,
            step_scale: self.step_scale,
            audit_tol: self.audit_tol,
            ..SimConfig::default()
        }
    }

    pub fn engine(&self) -> Engine {
        match self.engine {
            EngineKind::Simulator => Engine::Simulator(self.sim_config()),
            EngineKind::ClosedForm => Engine::ClosedForm,
        }
    }

    /// Optical depths of the curves sweep, log-spaced and ascending.
    pub fn curve_depths(&self) -> Vec<f64> {
        let n = self.curve_points;
        if n == 1 {
            return vec![self.curve_d_min];
        }
        let (a, b) = (self.curve_d_min.ln(), self.curve_d_max.ln());
        let mut d: Vec<f64> = (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect();
        d[0] = self.curve_d_min;
        d[n - 1] = self.curve_d_max;
        d
    }
}

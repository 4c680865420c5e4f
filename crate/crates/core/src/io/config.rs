//! Experiment configuration: named presets, a flat TOML key-value document,
//! and command-line overrides, merged in that order of increasing priority.

use std::fmt;
use std::path::PathBuf;

use toml::{Table, Value};

use crate::evolution::{IntegratorConfig, ModelParams};
use crate::state::BasisLabel;
use crate::synapse::SynapseParams;
use crate::trajectories::TrajectoryConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Evolve,
    SweepRmin,
    Trajectory,
    Ensemble,
    ClassicalSynapse,
}

impl Mode {
    pub const ALL: [Mode; 5] =
        [Mode::Evolve, Mode::SweepRmin, Mode::Trajectory, Mode::Ensemble, Mode::ClassicalSynapse];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Evolve => "evolve",
            Mode::SweepRmin => "sweep-rmin",
            Mode::Trajectory => "trajectory",
            Mode::Ensemble => "ensemble",
            Mode::ClassicalSynapse => "classical-synapse",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpikeTrain {
    Periodic,
    Poisson,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub omegas: Vec<f64>,
    pub taus: Vec<f64>,
    pub transient: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalConfig {
    pub rate: f64,
    pub train: SpikeTrain,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub model: ModelParams,
    pub integrator: IntegratorConfig,
    pub trajectory: Option<TrajectoryConfig>,
    pub sweep: Option<SweepConfig>,
    pub classical: Option<ClassicalConfig>,
    pub initial: BasisLabel,
    pub r0: f64,
    pub seed: u64,
    pub neg_threshold: f64,
    pub output_path: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: `{}`: {}", self.field, self.message),
            None => write!(f, "`{}`: {}", self.field, self.message),
        }
    }
}

/// Every problem found in a configuration, not just the first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub errors: Vec<FieldError>,
}

impl ParseError {
    pub fn fields(&self) -> impl Iterator<Item = &str> {
        self.errors.iter().map(|e| e.field.as_str())
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "invalid configuration ({} error{})",
            self.errors.len(),
            if self.errors.len() == 1 { "" } else { "s" }
        )?;
        for e in &self.errors {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

/// A partially specified configuration; `None` means "not set at this layer".
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    pub mode: Option<Mode>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub omega: Option<f64>,
    pub u: Option<f64>,
    pub tau: Option<f64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub sample_every: Option<u64>,
    pub t_m: Option<f64>,
    pub n_traj: Option<usize>,
    pub seed: Option<u64>,
    pub initial: Option<BasisLabel>,
    pub r0: Option<f64>,
    pub neg_threshold: Option<f64>,
    pub transient_window: Option<f64>,
    pub omegas: Option<Vec<f64>>,
    pub taus: Option<Vec<f64>>,
    pub spike_rate: Option<f64>,
    pub spike_train: Option<SpikeTrain>,
    pub out: Option<PathBuf>,
}

/// Keys accepted in a configuration document.
pub const KEYS: &[&str] = &[
    "preset",
    "mode",
    "eps1",
    "eps2",
    "omega",
    "u",
    "tau",
    "dt",
    "t_end",
    "sample_every",
    "t_m",
    "n_traj",
    "seed",
    "initial",
    "r0",
    "neg_threshold",
    "transient_window",
    "omegas",
    "taus",
    "spike_rate",
    "spike_train",
    "out",
];

const REQUIRED: &[&str] = &["mode", "eps1", "eps2", "omega", "u", "tau", "dt", "t_end"];

pub const DEFAULT_NEG_THRESHOLD: f64 = 0.01;
pub const DEFAULT_SAMPLE_EVERY: u64 = 100;

impl Settings {
    /// Fields of `over` that are set replace those of `self`.
    pub fn overlay(mut self, over: Settings) -> Settings {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(
            mode,
            eps1,
            eps2,
            omega,
            u,
            tau,
            dt,
            t_end,
            sample_every,
            t_m,
            n_traj,
            seed,
            initial,
            r0,
            neg_threshold,
            transient_window,
            omegas,
            taus,
            spike_rate,
            spike_train,
            out
        );
        self
    }

    /// Reads a flat TOML document. A `preset` key, if present, supplies the
    /// base layer that the remaining keys override.
    pub fn from_document(text: &str) -> Result<Settings, ParseError> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| {
            let line = e.span().map(|s| line_of_offset(text, s.start));
            ParseError {
                errors: vec![FieldError { line, field: "<document>".into(), message: e.message().to_string() }],
            }
        })?;

        let mut errors = Vec::new();
        let mut s = Settings::default();
        let mut base = Settings::default();
        for (key, value) in &table {
            let line = line_of_key(text, key);
            let mut fail = |msg: String| errors.push(FieldError { line, field: key.clone(), message: msg });
            match key.as_str() {
                "preset" => match value.as_str().map(preset) {
                    Some(Some(p)) => base = p,
                    Some(None) => fail(format!("unknown preset (known: {})", PRESET_NAMES.join(", "))),
                    None => fail("expected a string".into()),
                },
                "mode" => match value.as_str().and_then(Mode::parse) {
                    Some(m) => s.mode = Some(m),
                    None => fail(format!(
                        "expected one of {}",
                        Mode::ALL.iter().map(|m| m.name()).collect::<Vec<_>>().join(", ")
                    )),
                },
                "eps1" => s.eps1 = float(value).map_err(&mut fail).ok(),
                "eps2" => s.eps2 = float(value).map_err(&mut fail).ok(),
                "omega" => s.omega = float(value).map_err(&mut fail).ok(),
                "u" => s.u = float(value).map_err(&mut fail).ok(),
                "tau" => s.tau = float(value).map_err(&mut fail).ok(),
                "dt" => s.dt = float(value).map_err(&mut fail).ok(),
                "t_end" => s.t_end = float(value).map_err(&mut fail).ok(),
                "t_m" => s.t_m = float(value).map_err(&mut fail).ok(),
                "r0" => s.r0 = float(value).map_err(&mut fail).ok(),
                "neg_threshold" => s.neg_threshold = float(value).map_err(&mut fail).ok(),
                "transient_window" => s.transient_window = float(value).map_err(&mut fail).ok(),
                "spike_rate" => s.spike_rate = float(value).map_err(&mut fail).ok(),
                "sample_every" => s.sample_every = unsigned(value).map_err(&mut fail).ok(),
                "n_traj" => s.n_traj = unsigned(value).map(|v| v as usize).map_err(&mut fail).ok(),
                "seed" => s.seed = unsigned(value).map_err(&mut fail).ok(),
                "initial" => match value.as_str().map(str::parse::<BasisLabel>) {
                    Some(Ok(b)) => s.initial = Some(b),
                    _ => fail("expected one of \"00\", \"01\", \"10\", \"11\"".into()),
                },
                "omegas" => s.omegas = float_list(value).map_err(&mut fail).ok(),
                "taus" => s.taus = float_list(value).map_err(&mut fail).ok(),
                "spike_train" => match value.as_str() {
                    Some("periodic") => s.spike_train = Some(SpikeTrain::Periodic),
                    Some("poisson") => s.spike_train = Some(SpikeTrain::Poisson),
                    _ => fail("expected \"periodic\" or \"poisson\"".into()),
                },
                "out" => match value.as_str() {
                    Some(p) => s.out = Some(PathBuf::from(p)),
                    None => fail("expected a string".into()),
                },
                _ => fail("unknown key".into()),
            }
        }
        if errors.is_empty() {
            Ok(base.overlay(s))
        } else {
            Err(ParseError { errors })
        }
    }

    /// Validates and assembles the final configuration.
    pub fn resolve(&self) -> Result<ExperimentConfig, ParseError> {
        let mut errors = Vec::new();
        let mut missing = |field: &str| {
            errors.push(FieldError { line: None, field: field.into(), message: "required field missing".into() })
        };

        let present = [
            self.mode.is_some(),
            self.eps1.is_some(),
            self.eps2.is_some(),
            self.omega.is_some(),
            self.u.is_some(),
            self.tau.is_some(),
            self.dt.is_some(),
            self.t_end.is_some(),
        ];
        for (name, ok) in REQUIRED.iter().zip(present) {
            if !ok {
                missing(name);
            }
        }
        match self.mode {
            Some(Mode::Trajectory) | Some(Mode::Ensemble) if self.t_m.is_none() => missing("t_m"),
            _ => {}
        }
        if self.mode == Some(Mode::Ensemble) && self.n_traj.is_none() {
            missing("n_traj");
        }
        if self.mode == Some(Mode::SweepRmin) {
            if self.omegas.is_none() {
                missing("omegas");
            }
            if self.taus.is_none() {
                missing("taus");
            }
        }
        if self.mode == Some(Mode::ClassicalSynapse) && self.spike_rate.is_none() {
            missing("spike_rate");
        }
        if !errors.is_empty() {
            return Err(ParseError { errors });
        }

        let mode = self.mode.expect("checked");
        let mut invalid =
            |field: &str, msg: String| errors.push(FieldError { line: None, field: field.into(), message: msg });
        let check = |ok: bool, field: &str, msg: &str, invalid: &mut dyn FnMut(&str, String)| {
            if !ok {
                invalid(field, msg.into());
            }
        };

        let (eps1, eps2, omega) = (self.eps1.unwrap(), self.eps2.unwrap(), self.omega.unwrap());
        let (u, tau, dt, t_end) = (self.u.unwrap(), self.tau.unwrap(), self.dt.unwrap(), self.t_end.unwrap());
        check(eps1.is_finite(), "eps1", "must be finite", &mut invalid);
        check(eps2.is_finite(), "eps2", "must be finite", &mut invalid);
        check(omega >= 0.0 && omega.is_finite(), "omega", "must be >= 0", &mut invalid);
        check(u > 0.0 && u <= 1.0, "u", "must be in (0, 1]", &mut invalid);
        check(tau > 0.0 && tau.is_finite(), "tau", "must be > 0", &mut invalid);
        check(dt > 0.0 && dt.is_finite(), "dt", "must be > 0", &mut invalid);
        check(t_end >= dt, "t_end", "must be >= dt", &mut invalid);
        let sample_every = self.sample_every.unwrap_or(DEFAULT_SAMPLE_EVERY);
        check(sample_every >= 1, "sample_every", "must be >= 1", &mut invalid);
        let r0 = self.r0.unwrap_or(1.0);
        check(r0 > 0.0 && r0 <= 1.0, "r0", "must be in (0, 1]", &mut invalid);
        let neg_threshold = self.neg_threshold.unwrap_or(DEFAULT_NEG_THRESHOLD);
        check(neg_threshold >= 0.0, "neg_threshold", "must be >= 0", &mut invalid);
        if let Some(w) = self.transient_window {
            check(w >= 0.0, "transient_window", "must be >= 0", &mut invalid);
        }

        let seed = self.seed.unwrap_or(0);
        let trajectory = match mode {
            Mode::Trajectory | Mode::Ensemble => {
                let t_m = self.t_m.unwrap();
                let n_traj = self.n_traj.unwrap_or(1);
                check(t_m >= dt, "t_m", "must be >= dt", &mut invalid);
                check(n_traj >= 1, "n_traj", "must be >= 1", &mut invalid);
                Some(TrajectoryConfig { t_m, n_traj, master_seed: seed, dt, t_end, sample_every })
            }
            _ => None,
        };
        let sweep = match mode {
            Mode::SweepRmin => {
                let omegas = self.omegas.clone().unwrap();
                let taus = self.taus.clone().unwrap();
                check(omegas.contains(&0.0), "omegas", "must include 0", &mut invalid);
                check(omegas.iter().all(|&o| o >= 0.0), "omegas", "must be >= 0", &mut invalid);
                check(
                    !taus.is_empty() && taus.iter().all(|&t| t > 0.0),
                    "taus",
                    "must be non-empty and > 0",
                    &mut invalid,
                );
                Some(SweepConfig { omegas, taus, transient: self.transient_window })
            }
            _ => None,
        };
        let classical = match mode {
            Mode::ClassicalSynapse => {
                let rate = self.spike_rate.unwrap();
                check(rate >= 0.0, "spike_rate", "must be >= 0", &mut invalid);
                Some(ClassicalConfig { rate, train: self.spike_train.unwrap_or(SpikeTrain::Periodic) })
            }
            _ => None,
        };
        if !errors.is_empty() {
            return Err(ParseError { errors });
        }

        let initial = self.initial.unwrap_or(if mode == Mode::SweepRmin { BasisLabel::EG } else { BasisLabel::GE });
        Ok(ExperimentConfig {
            mode,
            model: ModelParams { eps1, eps2, omega, synapse: SynapseParams { release: u, tau } },
            integrator: IntegratorConfig { dt, t_end, sample_every },
            trajectory,
            sweep,
            classical,
            initial,
            r0,
            seed,
            neg_threshold,
            output_path: self.out.clone(),
        })
    }
}

/// Parses a configuration document into a validated experiment.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ParseError> {
    Settings::from_document(text)?.resolve()
}

fn float(v: &Value) -> Result<f64, String> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err("expected a number".into()),
    }
}

fn unsigned(v: &Value) -> Result<u64, String> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err("expected a non-negative integer".into()),
    }
}

fn float_list(v: &Value) -> Result<Vec<f64>, String> {
    match v {
        Value::Array(a) => a.iter().map(float).collect(),
        _ => Err("expected an array of numbers".into()),
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn line_of_key(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

// --- presets ---------------------------------------------------------------

/// Recovery times of the deterministic presets, strongest depression first.
pub const PRESET_TAUS: [f64; 4] = [500.0, 100.0, 10.0, 0.001];
/// Recovery times of the measurement-protocol presets.
pub const ENSEMBLE_TAUS: [f64; 3] = [10.0, 1.0, 0.01];

pub const PRESET_NAMES: &[&str] = &[
    "fig2",
    "fig3-left-tau500",
    "fig3-left-tau100",
    "fig3-left-tau10",
    "fig3-left-tau0.001",
    "fig3-right-tau500",
    "fig3-right-tau100",
    "fig3-right-tau10",
    "fig3-right-tau0.001",
    "fig4-left-tau500",
    "fig4-left-tau100",
    "fig4-left-tau10",
    "fig4-left-tau0.001",
    "fig4-right-tau500",
    "fig4-right-tau100",
    "fig4-right-tau10",
    "fig4-right-tau0.001",
    "fig5-tau10",
    "fig5-tau1",
    "fig5-tau0.01",
    "fig5-single-tau10",
    "fig5-single-tau1",
    "fig5-single-tau0.01",
];

fn tau_label(tau: f64) -> String {
    format!("{tau}")
}

/// Horizon used for the deterministic presets at each τ. Slower dynamics at
/// larger τ need longer windows.
pub fn deterministic_horizon(tau: f64) -> f64 {
    match tau {
        t if t >= 500.0 => 20_000.0,
        t if t >= 100.0 => 10_000.0,
        t if t >= 10.0 => 2_000.0,
        _ => 500.0,
    }
}

fn base(mode: Mode, eps2: f64, tau: f64) -> Settings {
    Settings {
        mode: Some(mode),
        eps1: Some(0.0),
        eps2: Some(eps2),
        omega: Some(0.05),
        u: Some(0.5),
        tau: Some(tau),
        dt: Some(0.001),
        initial: Some(BasisLabel::GE),
        r0: Some(1.0),
        ..Settings::default()
    }
}

/// Settings for a named preset, or `None` if the name is unknown.
pub fn preset(name: &str) -> Option<Settings> {
    if name == "fig2" {
        return Some(Settings {
            mode: Some(Mode::SweepRmin),
            eps1: Some(0.0),
            eps2: Some(0.0),
            omega: Some(0.0),
            u: Some(0.5),
            tau: Some(1.0),
            dt: Some(0.001),
            t_end: Some(500.0),
            sample_every: Some(1000),
            initial: Some(BasisLabel::EG),
            r0: Some(1.0),
            omegas: Some((0..=12).map(|k| k as f64 * 0.025).collect()),
            taus: Some(PRESET_TAUS.iter().rev().copied().collect()),
            ..Settings::default()
        });
    }
    for (fig, eps2) in [("fig3-left", 0.0), ("fig3-right", 0.1), ("fig4-left", 0.0), ("fig4-right", 0.1)] {
        for tau in PRESET_TAUS {
            if name == format!("{fig}-tau{}", tau_label(tau)) {
                let t_end = deterministic_horizon(tau);
                return Some(Settings {
                    t_end: Some(t_end),
                    sample_every: Some(if t_end > 5_000.0 { 1000 } else { 100 }),
                    ..base(Mode::Evolve, eps2, tau)
                });
            }
        }
    }
    for tau in ENSEMBLE_TAUS {
        let single = name == format!("fig5-single-tau{}", tau_label(tau));
        if single || name == format!("fig5-tau{}", tau_label(tau)) {
            return Some(Settings {
                t_end: Some(3_000.0),
                t_m: Some(30.0),
                n_traj: Some(if single { 1 } else { 10_000 }),
                sample_every: Some(1_000),
                seed: Some(2023),
                ..base(if single { Mode::Trajectory } else { Mode::Ensemble }, 0.1, tau)
            });
        }
    }
    None
}

//! Scenario configuration as a flat `key = value` text file.

use std::fmt::Write as _;
use std::path::Path;

use crate::control::Variant;
use crate::downwash::DownwashParams;
use crate::error::{Error, Result};
use crate::plant::QuadParams;

/// How the vehicles are initialised on their references.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    /// Thrusts balance gravity and the downwash of the vehicles above.
    Balanced,
    /// Every thrust equals the vehicle's weight.
    Weight,
}

impl Start {
    pub fn name(&self) -> &'static str {
        match self {
            Start::Balanced => "balanced",
            Start::Weight => "weight",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Number of vehicles.
    pub n: usize,
    /// Run length [s].
    pub duration: f64,
    /// Reference speed [m/s].
    pub speed: f64,
    /// Integrator step [s].
    pub dt: f64,
    /// Controller rate [Hz].
    pub control_rate: f64,
    pub variant: Variant,
    /// Half-widths of the approximate model's threshold box [m].
    pub threshold: [f64; 2],
    pub torque_coupling: bool,
    pub start: Start,
    pub quad: QuadParams,
    pub downwash: DownwashParams,
    pub lqr_q: f64,
    pub lqr_r: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n: 4,
            duration: 5.0,
            speed: 1.0,
            dt: 0.01,
            control_rate: 100.0,
            variant: Variant::Exact,
            threshold: [0.5, 2.5],
            torque_coupling: false,
            start: Start::Balanced,
            quad: QuadParams::default(),
            downwash: DownwashParams::default(),
            lqr_q: 100.0,
            lqr_r: 1.0,
            seed: 0,
        }
    }
}

const KEYS: &[&str] = &[
    "n",
    "duration",
    "speed",
    "dt",
    "control_rate",
    "variant",
    "threshold",
    "torque_coupling",
    "start",
    "mass",
    "inertia",
    "gravity",
    "c1",
    "c2",
    "drag_coefficient",
    "span",
    "air_density",
    "lqr_q",
    "lqr_r",
    "seed",
];

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    match v {
        "inf" | "+inf" => Ok(f64::INFINITY),
        _ => v
            .parse()
            .map_err(|_| Error::Config(format!("{key}: expected a number, got {v:?}"))),
    }
}

fn parse_pair(key: &str, v: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok([parse_f64(key, a)?, parse_f64(key, b)?]),
        _ => Err(Error::Config(format!("{key}: expected \"a,b\", got {v:?}"))),
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {v:?}"))),
    }
}

impl ScenarioConfig {
    /// Set one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "n" => {
                self.n = v
                    .parse()
                    .map_err(|_| Error::Config(format!("n: expected a non-negative integer, got {v:?}")))?
            }
            "duration" => self.duration = parse_f64(key, v)?,
            "speed" => self.speed = parse_f64(key, v)?,
            "dt" => self.dt = parse_f64(key, v)?,
            "control_rate" => self.control_rate = parse_f64(key, v)?,
            "variant" => {
                self.variant = Variant::parse(v)
                    .ok_or_else(|| Error::Config(format!("variant: expected exact|approximate|nominal, got {v:?}")))?
            }
            "threshold" => self.threshold = parse_pair(key, v)?,
            "torque_coupling" => self.torque_coupling = parse_bool(key, v)?,
            "start" => {
                self.start = match v {
                    "balanced" => Start::Balanced,
                    "weight" => Start::Weight,
                    _ => return Err(Error::Config(format!("start: expected balanced|weight, got {v:?}"))),
                }
            }
            "mass" => self.quad.mass = parse_f64(key, v)?,
            "inertia" => self.quad.inertia = parse_f64(key, v)?,
            "gravity" => self.quad.gravity = parse_f64(key, v)?,
            "c1" => self.downwash.c1 = parse_f64(key, v)?,
            "c2" => self.downwash.c2 = parse_f64(key, v)?,
            "drag_coefficient" => self.downwash.drag_coefficient = parse_f64(key, v)?,
            "span" => self.downwash.span = parse_f64(key, v)?,
            "air_density" => self.downwash.air_density = parse_f64(key, v)?,
            "lqr_q" => self.lqr_q = parse_f64(key, v)?,
            "lqr_r" => self.lqr_r = parse_f64(key, v)?,
            "seed" => {
                self.seed = v
                    .parse()
                    .map_err(|_| Error::Config(format!("seed: expected an integer, got {v:?}")))?
            }
            _ => {
                return Err(Error::Config(format!(
                    "unknown key {key:?} (known: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Apply `key=value` overrides.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {o:?} is not key=value")))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// Parse a config file body on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        cfg.merge_text(text)?;
        Ok(cfg)
    }

    /// Apply the keys in `text` to this config.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .or_else(|| line.split_once(':'))
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(k.trim(), v).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("line {}: {msg}", lineno + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let q = &self.quad;
        let d = &self.downwash;
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "duration = {}", self.duration);
        let _ = writeln!(s, "speed = {}", self.speed);
        let _ = writeln!(s, "dt = {}", self.dt);
        let _ = writeln!(s, "control_rate = {}", self.control_rate);
        let _ = writeln!(s, "variant = {}", self.variant.name());
        let _ = writeln!(s, "threshold = {},{}", self.threshold[0], self.threshold[1]);
        let _ = writeln!(s, "torque_coupling = {}", self.torque_coupling);
        let _ = writeln!(s, "start = {}", self.start.name());
        let _ = writeln!(s, "mass = {}", q.mass);
        let _ = writeln!(s, "inertia = {}", q.inertia);
        let _ = writeln!(s, "gravity = {}", q.gravity);
        let _ = writeln!(s, "c1 = {}", d.c1);
        let _ = writeln!(s, "c2 = {}", d.c2);
        let _ = writeln!(s, "drag_coefficient = {}", d.drag_coefficient);
        let _ = writeln!(s, "span = {}", d.span);
        let _ = writeln!(s, "air_density = {}", d.air_density);
        let _ = writeln!(s, "lqr_q = {}", self.lqr_q);
        let _ = writeln!(s, "lqr_r = {}", self.lqr_r);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }

    /// Number of integrator steps, `floor(duration / dt)`.
    pub fn steps(&self) -> usize {
        (self.duration / self.dt + 1e-9).floor() as usize
    }

    /// Integrator steps per control tick.
    pub fn hold_steps(&self) -> Result<usize> {
        let ratio = 1.0 / (self.control_rate * self.dt);
        let rounded = ratio.round();
        if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * rounded {
            return Err(Error::Config(format!(
                "control period 1/{} s is not an integer multiple of dt = {}",
                self.control_rate, self.dt
            )));
        }
        Ok(rounded as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be >= 1".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt = {} must be > 0", self.dt)));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::Config(format!("duration = {} must be > 0", self.duration)));
        }
        if !(self.control_rate.is_finite() && self.control_rate > 0.0) {
            return Err(Error::Config(format!(
                "control_rate = {} must be > 0",
                self.control_rate
            )));
        }
        if !self.speed.is_finite() {
            return Err(Error::Config("speed must be finite".into()));
        }
        if self.threshold.iter().any(|t| t.is_nan() || *t < 0.0) {
            return Err(Error::Config("threshold components must be >= 0".into()));
        }
        if !(self.lqr_q > 0.0 && self.lqr_r > 0.0) {
            return Err(Error::Config("lqr_q and lqr_r must be > 0".into()));
        }
        self.hold_steps()?;
        self.quad.validate()?;
        self.downwash.validate()?;
        Ok(())
    }
}

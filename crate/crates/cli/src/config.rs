//! Flat `key = value` run configuration.
//!
//! Blank lines and anything after `#` are ignored. Every key is optional and
//! falls back to the default below; unknown or repeated keys are errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use spinnoon::metrology::ExposureMode;
use spinnoon::noise::DephasingMap;
use spinnoon::pulse::{uniform_times, Step, NOON_SEQUENCE};
use spinnoon::spectrum::FrequencyGrid;
use spinnoon::state::BathPolarization;
use spinnoon::system::{GAMMA_1H, GAMMA_31P};
use spinnoon::{ExperimentConfig, Fig3Options, SpinEnsemble, StarSystem};

use crate::error::{CliError, Result};

/// Deliberate corruption of the compressed pulse sequence, used to check
/// that `validate` notices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    None,
    DropFinalCnot,
    DropHadamard,
    DoubleEvolve,
}

impl Fault {
    pub fn name(&self) -> &'static str {
        match self {
            Fault::None => "none",
            Fault::DropFinalCnot => "drop_final_cnot",
            Fault::DropHadamard => "drop_hadamard",
            Fault::DoubleEvolve => "double_evolve",
        }
    }

    pub fn sequence(&self) -> Vec<Step> {
        let mut steps = NOON_SEQUENCE.to_vec();
        match self {
            Fault::None => {}
            Fault::DropFinalCnot => {
                steps.pop();
            }
            Fault::DropHadamard => {
                steps.remove(0);
            }
            Fault::DoubleEvolve => steps.insert(2, Step::FreeEvolve),
        }
        steps
    }
}

impl FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(Fault::None),
            "drop_final_cnot" => Ok(Fault::DropFinalCnot),
            "drop_hadamard" => Ok(Fault::DropHadamard),
            "double_evolve" => Ok(Fault::DoubleEvolve),
            other => Err(format!(
                "unknown fault '{other}' (none, drop_final_cnot, drop_hadamard, double_evolve)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bath {
    InfiniteTemperature,
    Boltzmann,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    // star
    pub n_b: usize,
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub j_coupling: f64,
    pub t2_base: f64,
    pub kappa: f64,
    pub bath: Bath,
    pub bath_field_t: f64,
    pub bath_temperature_k: f64,
    // experiment
    pub b_off: f64,
    pub t_wait: f64,
    pub include_j: bool,
    // t_wait sweep
    pub sweep_t0: f64,
    pub sweep_dt: f64,
    pub sweep_points: usize,
    // spectrum grid, Hz
    pub spectrum_min_hz: f64,
    pub spectrum_max_hz: f64,
    pub spectrum_step_hz: f64,
    // sensitivity curves
    pub epsilons: Vec<f64>,
    pub n_max: usize,
    pub m_shots: usize,
    pub t_ref: f64,
    pub exposure: ExposureMode,
    pub dephasing_maps: Vec<DephasingMap>,
    // validation
    pub mc_sigma: f64,
    pub mc_trials: usize,
    pub mc_shots: usize,
    pub mc_t_e: f64,
    pub oracle_pairs: usize,
    pub fault_inject: Fault,
    // run
    pub seed: u64,
    pub out_dir: PathBuf,
    pub svg: bool,
    pub oracle: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fig3 = Fig3Options::default();
        Self {
            n_b: 9,
            gamma_a: GAMMA_31P,
            gamma_b: GAMMA_1H,
            j_coupling: 10.67,
            t2_base: 0.1,
            kappa: 0.5,
            bath: Bath::InfiniteTemperature,
            bath_field_t: 9.4,
            bath_temperature_k: 298.0,
            b_off: 3.13e-6,
            t_wait: 400e-6,
            include_j: true,
            sweep_t0: 0.0,
            sweep_dt: 1e-4,
            sweep_points: 4096,
            spectrum_min_hz: -80.0,
            spectrum_max_hz: 80.0,
            spectrum_step_hz: 0.05,
            epsilons: fig3.epsilons,
            n_max: fig3.n_max,
            m_shots: fig3.m_shots,
            t_ref: fig3.t_ref,
            exposure: fig3.exposure,
            dephasing_maps: fig3.dephasing_maps,
            mc_sigma: 0.3,
            mc_trials: 20_000,
            mc_shots: 4_000,
            mc_t_e: 1e-4,
            oracle_pairs: 20,
            fault_inject: Fault::None,
            seed: 0,
            out_dir: PathBuf::from("out"),
            svg: false,
            oracle: false,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>()
        .map_err(|e| format!("bad value '{raw}' for {key}: {e}"))
}

fn parse_bool(key: &str, raw: &str) -> std::result::Result<bool, String> {
    match raw {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(format!(
            "bad value '{raw}' for {key}: expected true or false"
        )),
    }
}

fn parse_list<T, F>(raw: &str, item: F) -> std::result::Result<Vec<T>, String>
where
    F: Fn(&str) -> std::result::Result<T, String>,
{
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect()
}

fn parse_map(raw: &str) -> std::result::Result<DephasingMap, String> {
    match raw {
        "gaussian" => Ok(DephasingMap::Gaussian),
        "erasure" => Ok(DephasingMap::Erasure),
        other => Err(format!(
            "unknown dephasing map '{other}' (gaussian, erasure)"
        )),
    }
}

fn bath_name(bath: Bath) -> &'static str {
    match bath {
        Bath::InfiniteTemperature => "infinite_temperature",
        Bath::Boltzmann => "boltzmann",
    }
}

pub const KEYS: &[&str] = &[
    "n_b",
    "gamma_a",
    "gamma_b",
    "j_coupling",
    "t2_base",
    "kappa",
    "bath",
    "bath_field_t",
    "bath_temperature_k",
    "b_off",
    "t_wait",
    "include_j",
    "sweep_t0",
    "sweep_dt",
    "sweep_points",
    "spectrum_min_hz",
    "spectrum_max_hz",
    "spectrum_step_hz",
    "epsilons",
    "n_max",
    "m_shots",
    "t_ref",
    "exposure",
    "dephasing_maps",
    "mc_sigma",
    "mc_trials",
    "mc_shots",
    "mc_t_e",
    "oracle_pairs",
    "fault_inject",
    "seed",
    "out_dir",
    "svg",
    "oracle",
];

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| CliError::Parse {
                line: line_no,
                reason: format!("expected key = value, found '{line}'"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if seen.contains(&key) {
                return Err(CliError::Parse {
                    line: line_no,
                    reason: format!("duplicate key '{key}'"),
                });
            }
            cfg.set(key, value).map_err(|reason| CliError::Parse {
                line: line_no,
                reason,
            })?;
            seen.push(key);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        match key {
            "n_b" => self.n_b = parse_value(key, v)?,
            "gamma_a" => self.gamma_a = parse_value(key, v)?,
            "gamma_b" => self.gamma_b = parse_value(key, v)?,
            "j_coupling" => self.j_coupling = parse_value(key, v)?,
            "t2_base" => self.t2_base = parse_value(key, v)?,
            "kappa" => self.kappa = parse_value(key, v)?,
            "bath" => {
                self.bath = match v {
                    "infinite_temperature" => Bath::InfiniteTemperature,
                    "boltzmann" => Bath::Boltzmann,
                    _ => {
                        return Err(format!(
                            "unknown bath '{v}' (infinite_temperature, boltzmann)"
                        ))
                    }
                }
            }
            "bath_field_t" => self.bath_field_t = parse_value(key, v)?,
            "bath_temperature_k" => self.bath_temperature_k = parse_value(key, v)?,
            "b_off" => self.b_off = parse_value(key, v)?,
            "t_wait" => self.t_wait = parse_value(key, v)?,
            "include_j" => self.include_j = parse_bool(key, v)?,
            "sweep_t0" => self.sweep_t0 = parse_value(key, v)?,
            "sweep_dt" => self.sweep_dt = parse_value(key, v)?,
            "sweep_points" => self.sweep_points = parse_value(key, v)?,
            "spectrum_min_hz" => self.spectrum_min_hz = parse_value(key, v)?,
            "spectrum_max_hz" => self.spectrum_max_hz = parse_value(key, v)?,
            "spectrum_step_hz" => self.spectrum_step_hz = parse_value(key, v)?,
            "epsilons" => self.epsilons = parse_list(v, |s| parse_value(key, s))?,
            "n_max" => self.n_max = parse_value(key, v)?,
            "m_shots" => self.m_shots = parse_value(key, v)?,
            "t_ref" => self.t_ref = parse_value(key, v)?,
            "exposure" => {
                self.exposure = match v {
                    "optimized" => ExposureMode::Optimized,
                    "fixed" => ExposureMode::Fixed,
                    _ => return Err(format!("unknown exposure mode '{v}' (optimized, fixed)")),
                }
            }
            "dephasing_maps" => self.dephasing_maps = parse_list(v, parse_map)?,
            "mc_sigma" => self.mc_sigma = parse_value(key, v)?,
            "mc_trials" => self.mc_trials = parse_value(key, v)?,
            "mc_shots" => self.mc_shots = parse_value(key, v)?,
            "mc_t_e" => self.mc_t_e = parse_value(key, v)?,
            "oracle_pairs" => self.oracle_pairs = parse_value(key, v)?,
            "fault_inject" => self.fault_inject = v.parse()?,
            "seed" => self.seed = parse_value(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "svg" => self.svg = parse_bool(key, v)?,
            "oracle" => self.oracle = parse_bool(key, v)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Checks every physical value; called after parsing and after command
    /// line overrides.
    pub fn validate(&self) -> Result<()> {
        self.ensemble()?;
        self.experiment()?;
        self.grid()?;
        if !(self.sweep_dt > 0.0 && self.sweep_dt.is_finite()) {
            return Err(CliError::Config("sweep_dt must be positive".into()));
        }
        if !(self.sweep_t0 >= 0.0 && self.sweep_t0.is_finite()) {
            return Err(CliError::Config("sweep_t0 must be non-negative".into()));
        }
        if self.sweep_points < 2 {
            return Err(CliError::Config("sweep_points must be at least 2".into()));
        }
        if self.epsilons.is_empty() {
            return Err(CliError::Config("epsilons must not be empty".into()));
        }
        for &eps in &self.epsilons {
            if !(0.0..1.0).contains(&eps) {
                return Err(CliError::Config(format!("epsilon {eps} outside [0, 1)")));
            }
        }
        if self.dephasing_maps.is_empty() {
            return Err(CliError::Config("dephasing_maps must not be empty".into()));
        }
        if self.n_max < 2 || self.m_shots < 1 || !(self.t_ref > 0.0 && self.t_ref.is_finite()) {
            return Err(CliError::Config(
                "need n_max >= 2, m_shots >= 1 and a positive t_ref".into(),
            ));
        }
        if !(self.mc_sigma >= 0.0 && self.mc_sigma.is_finite()) {
            return Err(CliError::Config("mc_sigma must be non-negative".into()));
        }
        if !(self.mc_t_e > 0.0 && self.mc_t_e.is_finite()) {
            return Err(CliError::Config("mc_t_e must be positive".into()));
        }
        if self.mc_trials < 2 || self.mc_shots < 2 || self.oracle_pairs < 1 {
            return Err(CliError::Config(
                "mc_trials and mc_shots must be at least 2, oracle_pairs at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn system(&self) -> Result<StarSystem> {
        Ok(StarSystem::new(
            self.n_b,
            self.gamma_a,
            self.gamma_b,
            self.j_coupling,
            self.t2_base,
            self.kappa,
        )?)
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let cfg = ExperimentConfig {
            b_off: self.b_off,
            t_wait: self.t_wait,
            include_j_during_wait: self.include_j,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn ensemble(&self) -> Result<SpinEnsemble> {
        Ok(SpinEnsemble::with_polarization(
            &self.system()?,
            self.polarization(),
        )?)
    }

    pub fn polarization(&self) -> BathPolarization {
        match self.bath {
            Bath::InfiniteTemperature => BathPolarization::InfiniteTemperature,
            Bath::Boltzmann => BathPolarization::Boltzmann {
                field_t: self.bath_field_t,
                temperature_k: self.bath_temperature_k,
            },
        }
    }

    pub fn grid(&self) -> Result<FrequencyGrid> {
        Ok(FrequencyGrid::new(
            self.spectrum_min_hz,
            self.spectrum_max_hz,
            self.spectrum_step_hz,
        )?)
    }

    pub fn sweep_times(&self) -> Vec<f64> {
        uniform_times(self.sweep_t0, self.sweep_dt, self.sweep_points)
    }

    pub fn fig3_options(&self) -> Fig3Options {
        Fig3Options {
            epsilons: self.epsilons.clone(),
            n_max: self.n_max,
            m_shots: self.m_shots,
            t_ref: self.t_ref,
            exposure: self.exposure,
            dephasing_maps: self.dephasing_maps.clone(),
        }
    }

    /// Sorted `key = value` listing of every setting except `out_dir`, so
    /// the hash does not depend on where the output goes.
    pub fn canonical(&self) -> String {
        let list = |xs: &[f64]| xs.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let maps = self
            .dephasing_maps
            .iter()
            .map(DephasingMap::name)
            .collect::<Vec<_>>()
            .join(",");
        let mut pairs: Vec<(&str, String)> = vec![
            ("n_b", self.n_b.to_string()),
            ("gamma_a", self.gamma_a.to_string()),
            ("gamma_b", self.gamma_b.to_string()),
            ("j_coupling", self.j_coupling.to_string()),
            ("t2_base", self.t2_base.to_string()),
            ("kappa", self.kappa.to_string()),
            ("bath", bath_name(self.bath).to_string()),
            ("bath_field_t", self.bath_field_t.to_string()),
            ("bath_temperature_k", self.bath_temperature_k.to_string()),
            ("b_off", self.b_off.to_string()),
            ("t_wait", self.t_wait.to_string()),
            ("include_j", self.include_j.to_string()),
            ("sweep_t0", self.sweep_t0.to_string()),
            ("sweep_dt", self.sweep_dt.to_string()),
            ("sweep_points", self.sweep_points.to_string()),
            ("spectrum_min_hz", self.spectrum_min_hz.to_string()),
            ("spectrum_max_hz", self.spectrum_max_hz.to_string()),
            ("spectrum_step_hz", self.spectrum_step_hz.to_string()),
            ("epsilons", list(&self.epsilons)),
            ("n_max", self.n_max.to_string()),
            ("m_shots", self.m_shots.to_string()),
            ("t_ref", self.t_ref.to_string()),
            ("exposure", self.exposure.name().to_string()),
            ("dephasing_maps", maps),
            ("mc_sigma", self.mc_sigma.to_string()),
            ("mc_trials", self.mc_trials.to_string()),
            ("mc_shots", self.mc_shots.to_string()),
            ("mc_t_e", self.mc_t_e.to_string()),
            ("oracle_pairs", self.oracle_pairs.to_string()),
            ("fault_inject", self.fault_inject.name().to_string()),
            ("seed", self.seed.to_string()),
            ("svg", self.svg.to_string()),
            ("oracle", self.oracle.to_string()),
        ];
        pairs.sort_by(|a, b| a.0.cmp(b.0));
        let mut out = String::new();
        for (k, v) in pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

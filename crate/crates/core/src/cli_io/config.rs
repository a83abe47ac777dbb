//! Run configuration: strict TOML parsing, defaults, validation and sweep expansion.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{QapError, Result};
use crate::particle::ParticleScenario;
use crate::stationarity::{EngineOptions, SearchMode};
use crate::string_action::StringScenario;

/// Environment variable naming the directory searched for relative config paths.
pub const CONFIG_DIR_ENV: &str = "QAP_CONFIG_DIR";

pub const DEFAULT_SIGMA_POINTS: usize = 64;
pub const DEFAULT_TAU_STEPS: usize = 200;

/// Tolerance keys accepted in `[tolerances]`.
pub const TOLERANCE_KEYS: [&str; 3] = ["fd_step", "gradient_tol", "max_iterations"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    Particle,
    String,
}

impl System {
    pub fn as_str(self) -> &'static str {
        match self {
            System::Particle => "particle",
            System::String => "string",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Classical,
    Phase,
    Action,
    Stationary,
    Spectrum,
    Sweep,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Classical => "classical",
            Command::Phase => "phase",
            Command::Action => "action",
            Command::Stationary => "stationary",
            Command::Spectrum => "spectrum",
            Command::Sweep => "sweep",
        }
    }

    fn available_for(self, system: System) -> bool {
        match self {
            Command::Classical => system == System::Particle,
            Command::Spectrum => system == System::String,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

/// A σ-profile given either as one constant or as one value per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Constant(f64),
    Nodes(Vec<f64>),
}

impl Profile {
    pub fn expand(&self, m: usize) -> Vec<f64> {
        match self {
            Profile::Constant(v) => vec![*v; m],
            Profile::Nodes(v) => v.clone(),
        }
    }

    fn scaled(&self, s: f64) -> Profile {
        match self {
            Profile::Constant(v) => Profile::Constant(v * s),
            Profile::Nodes(v) => Profile::Nodes(v.iter().map(|x| x * s).collect()),
        }
    }
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn default_sigma_points() -> usize {
    DEFAULT_SIGMA_POINTS
}

fn default_tau_steps() -> usize {
    DEFAULT_TAU_STEPS
}

fn unit_profile() -> Profile {
    Profile::Constant(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSection {
    /// Filled from `p_spatial` (or 3) when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_space: Option<usize>,
    pub mass: f64,
    /// Zero momentum when absent.
    #[serde(default)]
    pub p_spatial: Vec<f64>,
    pub x0_final: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x_spatial_final: Vec<f64>,
    #[serde(default = "default_tau_steps")]
    pub tau_steps: usize,
    /// Wave-packet width for `phase` and `action`.
    #[serde(default = "one")]
    pub epsilon: f64,
    /// Evaluation time for `phase`.
    #[serde(default = "one")]
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StringSection {
    #[serde(default = "default_sigma_points")]
    pub sigma_points: usize,
    #[serde(default = "default_tau_steps")]
    pub tau_steps: usize,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "unit_profile")]
    pub n1: Profile,
    #[serde(default = "unit_profile")]
    pub n2: Profile,
    pub x0_final: Profile,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one_usize")]
    pub dim_transverse: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub com_momentum: Vec<f64>,
    #[serde(default)]
    pub zero_point: bool,
    #[serde(default = "one")]
    pub epsilon: f64,
    #[serde(default = "one")]
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: String,
    pub values: Vec<f64>,
    /// Command run at every sweep value.
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Format,
}

/// A complete run description. After [`parse_config`] every optional field that has a
/// default is filled in, so serializing and re-parsing reproduces the same value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<System>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default)]
    pub occupations: Vec<i64>,
    #[serde(default)]
    pub mode: SearchMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particle: Option<ParticleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub string: Option<StringSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

/// Values supplied on the command line that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub system: Option<System>,
    pub command: Option<Command>,
    pub occupations: Option<Vec<i64>>,
    pub output_path: Option<String>,
    pub format: Option<Format>,
}

/// One concrete run produced by expanding a config.
#[derive(Debug, Clone, PartialEq)]
pub struct QueuedRun {
    pub index: usize,
    /// Sweep value, `None` for a single run.
    pub value: Option<f64>,
    pub config: RunConfig,
}

impl RunConfig {
    pub fn system(&self) -> System {
        self.system.unwrap_or(System::Particle)
    }

    pub fn command(&self) -> Command {
        self.command.unwrap_or(Command::Stationary)
    }

    /// Engine options with `[tolerances]` applied.
    pub fn engine_options(&self) -> EngineOptions {
        let mut opts = EngineOptions { mode: self.mode, ..EngineOptions::default() };
        if let Some(&v) = self.tolerances.get("gradient_tol") {
            opts.gradient_tol = v;
        }
        if let Some(&v) = self.tolerances.get("fd_step") {
            opts.fd_step = v;
        }
        if let Some(&v) = self.tolerances.get("max_iterations") {
            opts.max_iterations = v as usize;
        }
        opts
    }

    pub fn particle_scenario(&self) -> Result<ParticleScenario> {
        let s = self
            .particle
            .as_ref()
            .ok_or_else(|| QapError::validation("particle", "section [particle] is required"))?;
        let dim_space = s.dim_space.unwrap_or(3);
        let p_spatial = if s.p_spatial.is_empty() { vec![0.0; dim_space] } else { s.p_spatial.clone() };
        let scenario = ParticleScenario {
            dim_space,
            mass: s.mass,
            p_spatial,
            x0_final: s.x0_final,
            hbar: s.hbar,
            c: s.c,
            x_spatial_final: s.x_spatial_final.clone(),
        };
        scenario.validate().map_err(|e| prefix_field("particle", e))?;
        if s.tau_steps < 1 {
            return Err(QapError::validation("particle.tau_steps", "must be positive"));
        }
        check_packet("particle", s.epsilon, s.tau)?;
        Ok(scenario)
    }

    pub fn string_scenario(&self) -> Result<StringScenario> {
        let s = self
            .string
            .as_ref()
            .ok_or_else(|| QapError::validation("string", "section [string] is required"))?;
        let m = s.sigma_points;
        let scenario = StringScenario {
            sigma_points: m,
            tau_steps: s.tau_steps,
            gamma: s.gamma,
            n1: s.n1.expand(m),
            n2: s.n2.expand(m),
            x0_final: s.x0_final.expand(m),
            hbar: s.hbar,
            dim_transverse: s.dim_transverse,
            com_momentum: s.com_momentum.clone(),
            zero_point: s.zero_point,
        };
        scenario.validate().map_err(|e| prefix_field("string", e))?;
        check_packet("string", s.epsilon, s.tau)?;
        Ok(scenario)
    }

    fn normalize(&mut self) {
        if let Some(p) = self.particle.as_mut() {
            let dim = p.dim_space.unwrap_or(if p.p_spatial.is_empty() { 3 } else { p.p_spatial.len() });
            p.dim_space = Some(dim);
            if p.p_spatial.is_empty() {
                p.p_spatial = vec![0.0; dim];
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let system = self.system.ok_or_else(|| QapError::validation("system", "missing; use particle or string"))?;
        let command = self.command.ok_or_else(|| QapError::validation("command", "missing"))?;
        match system {
            System::Particle if self.string.is_some() => {
                return Err(QapError::validation("string", "section not allowed for system = particle"))
            }
            System::String if self.particle.is_some() => {
                return Err(QapError::validation("particle", "section not allowed for system = string"))
            }
            _ => {}
        }
        if system == System::Particle && !self.occupations.is_empty() {
            return Err(QapError::validation("occupations", "only meaningful for system = string"));
        }
        if let Some(i) = self.occupations.iter().position(|&n| n < 0) {
            return Err(QapError::validation("occupations", format!("entry {i} is negative")));
        }
        for (key, &v) in &self.tolerances {
            if !TOLERANCE_KEYS.contains(&key.as_str()) {
                return Err(QapError::validation(
                    format!("tolerances.{key}"),
                    format!("unknown tolerance; expected one of {}", TOLERANCE_KEYS.join(", ")),
                ));
            }
            if !(v > 0.0) || !v.is_finite() {
                return Err(QapError::validation(format!("tolerances.{key}"), "must be finite and positive"));
            }
            if key == "max_iterations" && v.fract() != 0.0 {
                return Err(QapError::validation("tolerances.max_iterations", "must be an integer"));
            }
        }
        if let Some(path) = &self.output.path {
            if path.is_empty() {
                return Err(QapError::validation("output.path", "must not be empty"));
            }
        }
        match (command, &self.sweep) {
            (Command::Sweep, None) => {
                return Err(QapError::validation("sweep", "command = sweep needs a [sweep] section"))
            }
            (Command::Sweep, Some(sw)) => {
                if sw.command == Command::Sweep {
                    return Err(QapError::validation("sweep.command", "sweeps cannot be nested"));
                }
                check_command(system, sw.command, "sweep.command")?;
                if !sweep_parameters(system).contains(&sw.parameter.as_str()) {
                    return Err(QapError::validation(
                        "sweep.parameter",
                        format!(
                            "`{}` cannot be swept for system = {}; expected one of {}",
                            sw.parameter,
                            system.as_str(),
                            sweep_parameters(system).join(", ")
                        ),
                    ));
                }
            }
            (_, Some(_)) => {
                return Err(QapError::validation("sweep", "section only allowed with command = sweep"))
            }
            (_, None) => check_command(system, command, "command")?,
        }
        Ok(())
    }

    fn check_scenario(&self) -> Result<()> {
        match self.system() {
            System::Particle => self.particle_scenario().map(|_| ()),
            System::String => self.string_scenario().map(|_| ()),
        }
    }

    /// The concrete runs this config describes, in sweep order.
    pub fn queued_runs(&self) -> Result<Vec<QueuedRun>> {
        let Some(sw) = self.sweep.as_ref().filter(|_| self.command() == Command::Sweep) else {
            return Ok(vec![QueuedRun { index: 0, value: None, config: self.clone() }]);
        };
        sw.values
            .iter()
            .enumerate()
            .map(|(index, &value)| {
                let mut config = self.clone();
                config.command = Some(sw.command);
                config.sweep = None;
                apply_parameter(&mut config, &sw.parameter, value)?;
                Ok(QueuedRun { index, value: Some(value), config })
            })
            .collect()
    }
}

fn check_command(system: System, command: Command, field: &str) -> Result<()> {
    if command.available_for(system) {
        Ok(())
    } else {
        Err(QapError::validation(
            field,
            format!("`{}` is not available for system = {}", command.as_str(), system.as_str()),
        ))
    }
}

fn check_packet(section: &str, epsilon: f64, tau: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(QapError::validation(format!("{section}.epsilon"), "must be finite and positive"));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(QapError::validation(format!("{section}.tau"), "must lie in [0, 1]"));
    }
    Ok(())
}

fn prefix_field(section: &str, err: QapError) -> QapError {
    match err {
        QapError::Validation { field, message } => QapError::Validation { field: format!("{section}.{field}"), message },
        other => other,
    }
}

/// Parameters that `[sweep]` may vary for each system.
pub fn sweep_parameters(system: System) -> &'static [&'static str] {
    match system {
        System::Particle => &["mass", "x0_final", "hbar", "c", "epsilon", "tau", "tau_steps"],
        System::String => &[
            "gamma",
            "x0_final",
            "n1",
            "n2",
            "lapse_scale",
            "sigma_points",
            "tau_steps",
            "hbar",
            "epsilon",
            "tau",
            "occupation_scale",
        ],
    }
}

fn as_count(parameter: &str, value: f64) -> Result<usize> {
    if value.fract() != 0.0 || !(value >= 0.0) || value > u32::MAX as f64 {
        return Err(QapError::validation(
            "sweep.values",
            format!("`{parameter}` needs nonnegative integers, got {value}"),
        ));
    }
    Ok(value as usize)
}

fn apply_parameter(config: &mut RunConfig, parameter: &str, value: f64) -> Result<()> {
    if let Some(p) = config.particle.as_mut() {
        match parameter {
            "mass" => p.mass = value,
            "x0_final" => p.x0_final = value,
            "hbar" => p.hbar = value,
            "c" => p.c = value,
            "epsilon" => p.epsilon = value,
            "tau" => p.tau = value,
            "tau_steps" => p.tau_steps = as_count(parameter, value)?,
            _ => unreachable!("sweep parameters are validated"),
        }
        return Ok(());
    }
    if parameter == "occupation_scale" {
        let s = as_count(parameter, value)? as i64;
        config.occupations.iter_mut().for_each(|n| *n *= s);
        return Ok(());
    }
    if let Some(s) = config.string.as_mut() {
        match parameter {
            "gamma" => s.gamma = value,
            "x0_final" => s.x0_final = Profile::Constant(value),
            "n1" => s.n1 = Profile::Constant(value),
            "n2" => s.n2 = Profile::Constant(value),
            "lapse_scale" => {
                s.n1 = s.n1.scaled(value);
                s.n2 = s.n2.scaled(value);
            }
            "sigma_points" => s.sigma_points = as_count(parameter, value)?,
            "tau_steps" => s.tau_steps = as_count(parameter, value)?,
            "hbar" => s.hbar = value,
            "epsilon" => s.epsilon = value,
            "tau" => s.tau = value,
            _ => unreachable!("sweep parameters are validated"),
        }
    }
    Ok(())
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, column)
}

/// Parses and validates a TOML run description.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, &Overrides::default())
}

/// [`parse_config`] with command-line values taking precedence over the file.
pub fn parse_config_with(text: &str, overrides: &Overrides) -> Result<RunConfig> {
    let mut config: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        QapError::Parse { line, column, message: e.message().trim().to_string() }
    })?;
    for (given, field, file) in [
        (overrides.system.map(System::as_str), "system", config.system.map(System::as_str)),
        (overrides.command.map(Command::as_str), "command", config.command.map(Command::as_str)),
    ] {
        if let (Some(a), Some(b)) = (given, file) {
            if a != b {
                return Err(QapError::validation(
                    field,
                    format!("command line says `{a}` but the config file says `{b}`"),
                ));
            }
        }
    }
    config.system = overrides.system.or(config.system);
    config.command = overrides.command.or(config.command);
    if let Some(occ) = &overrides.occupations {
        config.occupations = occ.clone();
    }
    if let Some(path) = &overrides.output_path {
        config.output.path = Some(path.clone());
    }
    if let Some(format) = overrides.format {
        config.output.format = format;
    }
    config.normalize();
    config.validate()?;
    for run in config.queued_runs()? {
        run.config.check_scenario()?;
    }
    Ok(config)
}

/// Serializes a config back to TOML; [`parse_config`] inverts it.
pub fn config_to_toml(config: &RunConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| QapError::validation("config", e.to_string()))
}

/// Parses a comma-separated occupation list such as `"0,1,0"`.
pub fn parse_occupations(text: &str) -> Result<Vec<i64>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| QapError::validation("occupations", format!("`{}` is not an integer", t.trim())))
        })
        .collect()
}

/// Resolves `path` against `config_dir` when it is relative and absent from the working directory.
pub fn resolve_config_path(path: &Path, config_dir: Option<&Path>) -> PathBuf {
    match config_dir {
        Some(dir) if path.is_relative() && !path.exists() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

/// Reads and parses a config file.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| QapError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_config_with(&text, overrides)
}

//! Run configuration: defaults, scenario presets, an optional TOML file and
//! `--key value` overrides are merged as TOML tables, then deserialized once so
//! that unknown keys are rejected in every layer.

use std::fmt;
use std::path::Path;

use reservoir_sense::dynamics::{CrossTerm, MarkovNoise, SolverOptions};
use reservoir_sense::noise::NoiseBackend;
use reservoir_sense::oracle::OracleConfig;
use reservoir_sense::qfi::{Pipeline, QfiSettings, Target};
use reservoir_sense::{Complex64, Drive, G6Form, ProbeSpec, ReservoirSpec, SimGrid, Spacing};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::scenario::Scenario;

/// Bad input from the user: exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub reservoir: ReservoirSection,
    pub probe: ProbeSection,
    pub grid: GridSection,
    pub qfi: QfiSection,
    pub backend: BackendSection,
    pub scenario: ScenarioSection,
    pub oracle: OracleSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReservoirSection {
    pub gamma: f64,
    pub cutoff: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSection {
    pub omega0: f64,
    pub theta: f64,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub squeeze: f64,
    /// a zero amplitude means no drive
    pub drive_amplitude: f64,
    pub drive_frequency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpacingName {
    Uniform,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub t_max: f64,
    pub n_points: usize,
    pub spacing: SpacingName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetName {
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "Omega", alias = "omega")]
    Omega,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QfiSection {
    pub target: TargetName,
    pub delta_rel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseName {
    Expsum,
    Quad2d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormName {
    Consistent,
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkovNoiseName {
    Quantum,
    Classical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackendSection {
    pub noise: NoiseName,
    /// explicit Matsubara terms; 0 picks them per time point
    pub matsubara_terms: usize,
    pub g6: FormName,
    pub cross: FormName,
    pub markov_noise: MarkovNoiseName,
}

/// Axes used by the figure scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub temperatures: Vec<f64>,
    pub thetas: usize,
    pub n_bar_max: f64,
    pub n_bar_points: usize,
    pub zetas: Vec<f64>,
    pub drive_amplitudes: Vec<f64>,
    pub drive_frequencies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub modes: usize,
    /// ω_max in units of the cutoff
    pub bandwidth: f64,
    pub steps: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub axes: Vec<Axis>,
}

/// One swept key, given either as explicit `values` or as `start`/`stop`/`points`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub key: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

impl Axis {
    pub fn resolved_values(&self) -> anyhow::Result<Vec<f64>> {
        match (self.values.is_empty(), self.start, self.stop, self.points) {
            (false, None, None, None) => Ok(self.values.clone()),
            (true, Some(a), Some(b), Some(n)) if n >= 1 => Ok(linspace(a, b, n)),
            _ => Err(usage(format!(
                "sweep axis `{}` needs either `values` or all of `start`, `stop`, `points`",
                self.key
            ))),
        }
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

impl Default for ReservoirSection {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            cutoff: 10.0,
            temperature: 1.0,
        }
    }
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self {
            omega0: 1.0,
            theta: 0.0,
            alpha_re: 0.0,
            alpha_im: 0.0,
            squeeze: 0.0,
            drive_amplitude: 0.0,
            drive_frequency: 1.0,
        }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            t_max: 10.0,
            n_points: 400,
            spacing: SpacingName::Uniform,
        }
    }
}

impl Default for QfiSection {
    fn default() -> Self {
        Self {
            target: TargetName::Gamma,
            delta_rel: reservoir_sense::qfi::DEFAULT_DELTA_REL,
        }
    }
}

impl Default for BackendSection {
    fn default() -> Self {
        Self {
            noise: NoiseName::Expsum,
            matsubara_terms: 0,
            g6: FormName::Consistent,
            cross: FormName::Consistent,
            markov_noise: MarkovNoiseName::Quantum,
        }
    }
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            temperatures: vec![1.0],
            thetas: 33,
            n_bar_max: 10.0,
            n_bar_points: 11,
            zetas: vec![0.0, 0.5, 1.0],
            drive_amplitudes: vec![0.0],
            drive_frequencies: vec![1.0],
        }
    }
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            modes: reservoir_sense::oracle::DEFAULT_MODES,
            bandwidth: reservoir_sense::oracle::DEFAULT_BANDWIDTH,
            steps: 40,
            tolerance: 1e-3,
        }
    }
}

// Conversions into library types. Parameter validation happens in the library.
impl Config {
    pub fn reservoir(&self) -> ReservoirSpec {
        ReservoirSpec {
            gamma: self.reservoir.gamma,
            cutoff: self.reservoir.cutoff,
            temperature: self.reservoir.temperature,
        }
    }

    pub fn probe(&self) -> ProbeSpec {
        let p = &self.probe;
        let drive = (p.drive_amplitude != 0.0).then_some(Drive {
            amplitude: p.drive_amplitude,
            frequency: p.drive_frequency,
        });
        ProbeSpec {
            omega0: p.omega0,
            theta: p.theta,
            alpha: Complex64::new(p.alpha_re, p.alpha_im),
            squeeze: p.squeeze,
            drive,
        }
    }

    pub fn grid(&self) -> SimGrid {
        SimGrid {
            t_max: self.grid.t_max,
            n_points: self.grid.n_points,
            spacing: match self.grid.spacing {
                SpacingName::Uniform => Spacing::Uniform,
                SpacingName::Log => Spacing::Log,
            },
        }
    }

    pub fn target(&self) -> Target {
        match self.qfi.target {
            TargetName::Gamma => Target::Gamma,
            TargetName::Omega => Target::Omega,
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        let b = &self.backend;
        SolverOptions {
            noise: match b.noise {
                NoiseName::Expsum => NoiseBackend::ExpSum,
                NoiseName::Quad2d => NoiseBackend::Quad2d,
            },
            matsubara_terms: (b.matsubara_terms > 0).then_some(b.matsubara_terms),
            g6: match b.g6 {
                FormName::Consistent => G6Form::Consistent,
                FormName::Literal => G6Form::Literal,
            },
            cross: match b.cross {
                FormName::Consistent => CrossTerm::Consistent,
                FormName::Literal => CrossTerm::Literal,
            },
        }
    }

    pub fn markov_noise(&self) -> MarkovNoise {
        match self.backend.markov_noise {
            MarkovNoiseName::Quantum => MarkovNoise::Quantum,
            MarkovNoiseName::Classical => MarkovNoise::Classical,
        }
    }

    pub fn exact_settings(&self) -> QfiSettings {
        QfiSettings {
            delta_rel: self.qfi.delta_rel,
            pipeline: Pipeline::Exact(self.solver_options()),
        }
    }

    pub fn markov_settings(&self) -> QfiSettings {
        QfiSettings {
            delta_rel: self.qfi.delta_rel,
            pipeline: Pipeline::Markovian(self.markov_noise()),
        }
    }

    pub fn oracle(&self) -> OracleConfig {
        OracleConfig {
            modes: self.oracle.modes,
            bandwidth: self.oracle.bandwidth,
        }
    }
}

/// Layered configuration still in TOML form, so sweeps can set keys per point.
#[derive(Debug, Clone)]
pub struct ConfigLayers {
    table: Table,
}

impl ConfigLayers {
    pub fn new(scenario: Scenario) -> Self {
        let mut table = match Value::try_from(Config::default()).expect("defaults serialize") {
            Value::Table(t) => t,
            _ => unreachable!("config serializes to a table"),
        };
        let preset: Table = toml::from_str(scenario.preset()).expect("presets are valid TOML");
        merge(&mut table, preset);
        Self { table }
    }

    pub fn merge_file(&mut self, path: &Path) -> anyhow::Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let layer: Table = toml::from_str(&text)
            .map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?;
        merge(&mut self.table, layer);
        Ok(())
    }

    /// Resolves `section.key` or a bare key that is unique across sections.
    pub fn resolve_key(&self, key: &str) -> anyhow::Result<(String, String)> {
        if let Some((section, field)) = key.split_once('.') {
            let known = self
                .table
                .get(section)
                .and_then(Value::as_table)
                .is_some_and(|t| t.contains_key(field));
            return if known {
                Ok((section.to_owned(), field.to_owned()))
            } else {
                Err(usage(format!("unknown key `{key}`")))
            };
        }
        let hits: Vec<&String> = self
            .table
            .iter()
            .filter(|(_, v)| v.as_table().is_some_and(|t| t.contains_key(key)))
            .map(|(s, _)| s)
            .collect();
        match hits.as_slice() {
            [section] => Ok(((*section).clone(), key.to_owned())),
            [] => Err(usage(format!("unknown key `{key}`"))),
            _ => Err(usage(format!(
                "ambiguous key `{key}`; qualify it with a section"
            ))),
        }
    }

    /// Sets a key from command-line text, parsed as a TOML value when possible.
    pub fn set_text(&mut self, key: &str, raw: &str) -> anyhow::Result<()> {
        let (section, field) = self.resolve_key(key)?;
        let parsed = toml::from_str::<Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(raw.to_owned()));
        self.insert(&section, &field, parsed);
        Ok(())
    }

    /// Sets a numeric key, keeping integer fields integral.
    pub fn set_number(&mut self, key: &str, x: f64) -> anyhow::Result<()> {
        let (section, field) = self.resolve_key(key)?;
        let integral = matches!(self.table[&section][&field], Value::Integer(_));
        let value = if integral {
            if x.fract() != 0.0 || x < 0.0 {
                return Err(usage(format!(
                    "`{key}` needs a non-negative integer, got {x}"
                )));
            }
            Value::Integer(x as i64)
        } else {
            Value::Float(x)
        };
        self.insert(&section, &field, value);
        Ok(())
    }

    fn insert(&mut self, section: &str, field: &str, value: Value) {
        if let Some(Value::Table(t)) = self.table.get_mut(section) {
            t.insert(field.to_owned(), value);
        }
    }

    pub fn resolve(&self) -> anyhow::Result<Config> {
        Value::Table(self.table.clone())
            .try_into()
            .map_err(|e: toml::de::Error| usage(format!("invalid configuration: {e}")))
    }
}

fn merge(base: &mut Table, layer: Table) {
    for (k, v) in layer {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(l)) => merge(b, l),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// `section.key = value` lines for the manifest, in a stable order.
pub fn echo(cfg: &Config) -> Vec<(String, String)> {
    let mut out = Vec::new();
    if let Ok(Value::Table(t)) = Value::try_from(cfg) {
        for (section, v) in &t {
            if let Value::Table(fields) = v {
                for (k, v) in fields {
                    out.push((format!("{section}.{k}"), v.to_string()));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let layers = ConfigLayers::new(Scenario::Custom);
        assert_eq!(layers.resolve().unwrap(), Config::default());
    }

    #[test]
    fn bare_and_qualified_overrides() {
        let mut layers = ConfigLayers::new(Scenario::Custom);
        layers.set_text("gamma", "2.5").unwrap();
        layers.set_text("grid.n_points", "17").unwrap();
        layers.set_text("target", "Omega").unwrap();
        layers.set_text("temperatures", "[1, 2]").unwrap();
        let cfg = layers.resolve().unwrap();
        assert_eq!(cfg.reservoir.gamma, 2.5);
        assert_eq!(cfg.grid.n_points, 17);
        assert_eq!(cfg.qfi.target, TargetName::Omega);
        assert_eq!(cfg.scenario.temperatures, vec![1.0, 2.0]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut layers = ConfigLayers::new(Scenario::Custom);
        assert!(layers.set_text("gama", "1").is_err());
        assert!(layers.set_text("reservoir.omega", "1").is_err());
        let mut file = tempfile::NamedTempFile::new().unwrap();
        std::io::Write::write_all(&mut file, b"[reservoir]\ngamma = 1\nbogus = 2\n").unwrap();
        layers.merge_file(file.path()).unwrap();
        assert!(layers.resolve().is_err());
    }

    #[test]
    fn integer_fields_stay_integral() {
        let mut layers = ConfigLayers::new(Scenario::Custom);
        layers.set_number("n_points", 21.0).unwrap();
        assert_eq!(layers.resolve().unwrap().grid.n_points, 21);
        assert!(layers.set_number("n_points", 2.5).is_err());
    }

    #[test]
    fn axis_forms() {
        let explicit = Axis {
            key: "theta".into(),
            values: vec![0.0, 1.0],
            ..Axis::default()
        };
        assert_eq!(explicit.resolved_values().unwrap(), vec![0.0, 1.0]);
        let range = Axis {
            key: "theta".into(),
            start: Some(0.0),
            stop: Some(1.0),
            points: Some(3),
            ..Axis::default()
        };
        assert_eq!(range.resolved_values().unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(Axis {
            key: "theta".into(),
            ..Axis::default()
        }
        .resolved_values()
        .is_err());
    }
}

//! Scenario files and the built-in presets.

use crate::error::{BomcaError, Result};
use crate::hierarchy::TruncationOrder;
use crate::manifold::ManifoldSettings;
use crate::model::{GaussianWavepacket, PotentialModel, SystemSpec};
use crate::ode::IntegratorConfig;
use crate::reference::GridSpec;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub mass: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    pub potential: PotentialModel,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavepacketConfig {
    pub alpha: f64,
    pub x_c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
}

/// A real-axis interval reconstructed from one seeded manifold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub lo: f64,
    pub hi: f64,
    /// Seed target; defaults to the right end.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Final time; transmission runs without it pick an asymptotic time per energy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_f: Option<f64>,
    pub orders: Vec<usize>,
    /// Manifold samples per window when `march_step` is absent.
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    /// Real-axis spacing of arrivals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub march_step: Option<f64>,
    #[serde(default)]
    pub windows: Vec<WindowConfig>,
    /// Reconstruction grid spacing; the oracle grid spacing when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energies: Option<Vec<f64>>,
    /// Left end of the transmitted manifold in transmission runs.
    #[serde(default = "default_transmission_lo")]
    pub transmission_lo: f64,
    /// Relative `|ψ|²` ending the open transmitted march.
    #[serde(default = "default_tail_cutoff")]
    pub tail_cutoff: f64,
    /// Recorded times per dense trajectory path.
    #[serde(default = "default_path_samples")]
    pub path_samples: usize,
}

fn default_trajectories() -> usize {
    50
}
fn default_transmission_lo() -> f64 {
    -0.05
}
fn default_tail_cutoff() -> f64 {
    1e-8
}
fn default_path_samples() -> usize {
    101
}

/// Search for the asymptotic time `t_start, t_start + t_step, …, t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticSearch {
    pub t_start: f64,
    pub t_step: f64,
    pub t_max: f64,
}

impl Default for AsymptoticSearch {
    fn default() -> Self {
        AsymptoticSearch { t_start: 1.0, t_step: 0.1, t_max: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    #[serde(default)]
    pub asymptotic: AsymptoticSearch,
}

fn default_dt() -> f64 {
    1e-4
}
fn default_grid() -> GridSpec {
    GridSpec { x_min: -10.0, x_max: 10.0, n_points: 4096 }
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { dt: default_dt(), grid: default_grid(), asymptotic: AsymptoticSearch::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv]
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: default_directory(), formats: default_formats() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub system: SystemConfig,
    pub wavepacket: WavepacketConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Integrator overrides; tolerances default to 1e-10 and steps scale with `t_f`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorConfig>,
    #[serde(default)]
    pub manifold: ManifoldSettings,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| BomcaError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BomcaError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario config is always representable")
    }

    pub fn validate(&self) -> Result<()> {
        self.system_spec()?;
        match (self.wavepacket.p_c, self.wavepacket.energy) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(BomcaError::Config("wavepacket needs exactly one of p_c and energy".into()))
            }
            _ => {}
        }
        if self.run.orders.is_empty() {
            return Err(BomcaError::Config("run.orders must not be empty".into()));
        }
        self.orders()?;
        if let Some(t_f) = self.run.t_f {
            if !(t_f > 0.0 && t_f.is_finite()) {
                return Err(BomcaError::Config(format!("run.t_f must be positive (got {t_f})")));
            }
            self.wavepacket_for(self.wavepacket.energy.unwrap_or(0.0))?;
        }
        if let Some(energies) = &self.run.energies {
            if energies.is_empty() {
                return Err(BomcaError::Config("run.energies must not be empty".into()));
            }
            if let Some(e) = energies.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
                return Err(BomcaError::Config(format!("energies must be ≥ 0 (got {e})")));
            }
        }
        if self.run.trajectories < 4 {
            return Err(BomcaError::Config("run.trajectories must be ≥ 4".into()));
        }
        if let Some(dx) = self.run.march_step {
            if !(dx > 0.0) {
                return Err(BomcaError::Config(format!("run.march_step must be positive (got {dx})")));
            }
        }
        if let Some(h) = self.run.grid_spacing {
            if !(h > 0.0) {
                return Err(BomcaError::Config(format!("run.grid_spacing must be positive (got {h})")));
            }
        }
        if let Some(w) = self.run.windows.iter().find(|w| !(w.hi > w.lo)) {
            return Err(BomcaError::Config(format!("window [{}, {}] is empty", w.lo, w.hi)));
        }
        if !(self.run.tail_cutoff > 0.0 && self.run.tail_cutoff < 1.0) {
            return Err(BomcaError::Config("run.tail_cutoff must lie in (0, 1)".into()));
        }
        if !(self.oracle.dt > 0.0) {
            return Err(BomcaError::Config("oracle.dt must be positive".into()));
        }
        self.oracle.grid.validate()?;
        if let Some(i) = &self.integrator {
            i.validate()?;
        }
        self.manifold.validate()?;
        if self.output.formats.is_empty() {
            return Err(BomcaError::Config("output.formats must not be empty".into()));
        }
        Ok(())
    }

    pub fn system_spec(&self) -> Result<SystemSpec> {
        SystemSpec::new(self.system.mass, self.system.hbar, self.system.potential)
    }

    pub fn orders(&self) -> Result<Vec<TruncationOrder>> {
        self.run.orders.iter().map(|&n| TruncationOrder::new(n)).collect()
    }

    /// The configured wavepacket, or the one at `energy` when the file specifies an energy.
    pub fn wavepacket_for(&self, energy: f64) -> Result<GaussianWavepacket> {
        let w = &self.wavepacket;
        match w.p_c {
            Some(p_c) => GaussianWavepacket::new(w.alpha, w.x_c, p_c),
            None => GaussianWavepacket::with_energy(w.alpha, w.x_c, energy, self.system.mass),
        }
    }

    pub fn wavepacket(&self) -> Result<GaussianWavepacket> {
        self.wavepacket_for(self.wavepacket.energy.unwrap_or(0.0))
    }

    pub fn energies(&self) -> Vec<f64> {
        match (&self.run.energies, self.wavepacket.energy) {
            (Some(list), _) => list.clone(),
            (None, Some(e)) => vec![e],
            (None, None) => vec![self.wavepacket().map(|w| w.energy(self.system.mass)).unwrap_or(0.0)],
        }
    }

    pub fn integrator_for(&self, t_f: f64) -> IntegratorConfig {
        self.integrator.unwrap_or_else(|| IntegratorConfig::for_duration(t_f))
    }

    pub fn t_f(&self) -> Result<f64> {
        self.run.t_f.ok_or_else(|| BomcaError::Config("run.t_f is required for this command".into()))
    }

    /// Arrival spacing for a window of length `span`.
    pub fn march_step(&self, span: f64) -> f64 {
        self.run
            .march_step
            .unwrap_or(span / (self.run.trajectories.saturating_sub(1).max(1)) as f64)
    }

    pub fn grid_spacing(&self) -> f64 {
        self.run.grid_spacing.unwrap_or_else(|| self.oracle.grid.dx())
    }
}

pub const PRESETS: [&str; 4] = ["fig1", "fig2a", "fig2b", "fig3"];

fn eckart_system() -> SystemConfig {
    SystemConfig { mass: 30.0, hbar: 1.0, potential: PotentialModel::Eckart { height: 40.0, beta: 4.32 } }
}

fn scenario(energy: f64, t_f: Option<f64>, orders: Vec<usize>, windows: Vec<WindowConfig>) -> ScenarioConfig {
    ScenarioConfig {
        system: eckart_system(),
        wavepacket: WavepacketConfig { alpha: 30.0 * PI, x_c: -0.7, p_c: None, energy: Some(energy) },
        run: RunConfig {
            t_f,
            orders,
            trajectories: 50,
            march_step: None,
            windows,
            grid_spacing: None,
            energies: None,
            transmission_lo: default_transmission_lo(),
            tail_cutoff: default_tail_cutoff(),
            path_samples: default_path_samples(),
        },
        oracle: OracleConfig::default(),
        output: OutputConfig::default(),
        integrator: None,
        manifold: ManifoldSettings::default(),
    }
}

/// The preset wavepacket with `V = 0`, momentum `p_c`, reconstructed at `t_f`
/// over `±half_widths` packet widths around the free-flight centre.
pub fn free_particle(p_c: f64, t_f: f64, half_widths: f64) -> ScenarioConfig {
    let mut c = scenario(0.0, Some(t_f), vec![1], Vec::new());
    c.system.potential = PotentialModel::Free;
    c.wavepacket.energy = None;
    c.wavepacket.p_c = Some(p_c);
    let (m, hbar, alpha) = (c.system.mass, c.system.hbar, c.wavepacket.alpha);
    let width = 0.5 / alpha.sqrt() * (1.0 + (2.0 * hbar * alpha * t_f / m).powi(2)).sqrt();
    let centre = c.wavepacket.x_c + p_c * t_f / m;
    c.run.windows = vec![WindowConfig { lo: centre - half_widths * width, hi: centre + half_widths * width, anchor: Some(centre) }];
    c
}

/// Built-in scenarios: Eckart barrier `D = 40, β = 4.32`, `m = 30`, Gaussian
/// `α = 30π` centred at `x_c = −0.7`.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let cfg = match name {
        "fig1" => {
            let mut c = scenario(0.0, Some(1.0), vec![1], vec![WindowConfig { lo: 0.1, hi: 1.5, anchor: None }]);
            c.run.trajectories = 10;
            c
        }
        "fig2a" => scenario(50.0, Some(0.85), vec![1, 2, 3, 4], vec![WindowConfig { lo: 0.0, hi: 2.5, anchor: None }]),
        "fig2b" => scenario(0.0, Some(1.0), vec![1, 2, 3, 4], vec![WindowConfig { lo: 0.25, hi: 1.5, anchor: None }]),
        "fig3" => {
            let mut c = scenario(0.0, None, vec![1, 4], Vec::new());
            c.run.energies = Some((0..=24).map(|k| 2.5 * k as f64).collect());
            c.run.march_step = Some(0.04);
            c
        }
        other => {
            return Err(BomcaError::Config(format!(
                "unknown preset {other:?}; expected one of {}",
                PRESETS.join(", ")
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

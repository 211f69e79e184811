//! Experiment configuration: file loading, defaults per experiment, hashing.

use std::path::Path;

use clap::ValueEnum;
use ptdilate_core::circuitsim::{ReadoutModel, DEFAULT_SHOTS};
use ptdilate_core::dilation::{CalibrationSettings, DEFAULT_DT};
use ptdilate_core::synthesis::SynthesisConfig;
use ptdilate_core::tomography::ZeroQuantumConvention;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    #[default]
    #[value(name = "fig1")]
    Fig1,
    #[value(name = "fig2")]
    Fig2,
    #[value(name = "fig3")]
    Fig3,
    #[value(name = "fig3e")]
    Fig3e,
    #[value(name = "supp_bloch")]
    SuppBloch,
    #[value(name = "supp_norm")]
    SuppNorm,
    #[value(name = "supp_subspace")]
    SuppSubspace,
    #[value(name = "table_s1")]
    TableS1,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
            Self::Fig3e => "fig3e",
            Self::SuppBloch => "supp_bloch",
            Self::SuppNorm => "supp_norm",
            Self::SuppSubspace => "supp_subspace",
            Self::TableS1 => "table_s1",
        }
    }

    fn default_r_values(self) -> Vec<f64> {
        match self {
            Self::Fig1 => range(-1.0, 1.5, 0.05),
            Self::Fig2 | Self::Fig3 => vec![0.6, 1.0, 1.3],
            Self::Fig3e => vec![0.3, 1.0, 1.3],
            Self::SuppBloch => range(0.0, 2.0, 0.05),
            Self::SuppNorm => vec![0.0, 0.3, 0.6, 0.9, 1.1, 1.3],
            Self::SuppSubspace => vec![0.3, 0.6, 0.9, 1.1, 1.3, 1.5],
            Self::TableS1 => vec![0.6],
        }
    }

    fn default_t_grid(self) -> TimeGrid {
        let (start, stop, step) = match self {
            Self::Fig1 | Self::SuppNorm => (0.0, 8.0, 0.1),
            Self::Fig2 | Self::Fig3 | Self::SuppSubspace => (0.0, 8.0, 0.25),
            Self::Fig3e => (0.0, 1.75, 0.25),
            Self::SuppBloch => (0.0, 0.0, 1.0),
            Self::TableS1 => (0.5, 8.0, 0.5),
        };
        TimeGrid { start, stop, step }
    }
}

/// Refinement chain of simulation fidelity; each level adds columns.
#[derive(
    Clone,
    Copy,
    Debug,
    Default,
    PartialEq,
    Eq,
    PartialOrd,
    Ord,
    Hash,
    Serialize,
    Deserialize,
    ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[value(name = "analytic")]
    Analytic,
    #[default]
    #[value(name = "dilated_exact")]
    DilatedExact,
    #[value(name = "dilated_sampled")]
    DilatedSampled,
    #[value(name = "dilated_sampled_noisy")]
    DilatedSampledNoisy,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Analytic => "analytic",
            Self::DilatedExact => "dilated_exact",
            Self::DilatedSampled => "dilated_sampled",
            Self::DilatedSampledNoisy => "dilated_sampled_noisy",
        }
    }

    pub fn dilated(self) -> bool {
        self >= Self::DilatedExact
    }

    pub fn sampled(self) -> bool {
        self >= Self::DilatedSampled
    }

    pub fn noisy(self) -> bool {
        self == Self::DilatedSampledNoisy
    }
}

/// Inclusive grid `start, start + step, ..., stop`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl TimeGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0)
            || !(self.stop >= self.start)
            || !self.start.is_finite()
            || !self.stop.is_finite()
        {
            return Err(HarnessError::Config(format!("invalid grid {self:?}")));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor();
        if n > 1e6 {
            return Err(HarnessError::Config(format!(
                "grid {self:?} has too many points"
            )));
        }
        Ok((0..=n as usize)
            .map(|k| round12(self.start + k as f64 * self.step))
            .collect())
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

fn range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    TimeGrid { start, stop, step }
        .points()
        .expect("static grid")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Empty selects the experiment default.
    pub r_values: Vec<f64>,
    /// Absent selects the experiment default.
    pub t_grid: Option<TimeGrid>,
    pub shots: u64,
    pub seed: u64,
    pub mode: Mode,
    pub readout: ReadoutModel,
    pub synthesis: SynthesisConfig,
    /// Route the dilated propagator through the 3-CNOT template.
    pub synthesize: bool,
    pub postselect_on: u8,
    pub calibration: CalibrationSettings,
    pub dt: f64,
    /// Preparation angle of the partially entangled initial state.
    pub prep_angle_deg: f64,
    pub tomography_convention: ZeroQuantumConvention,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::default(),
            r_values: Vec::new(),
            t_grid: None,
            shots: DEFAULT_SHOTS,
            seed: 1,
            mode: Mode::default(),
            readout: ReadoutModel::device_default(),
            synthesis: SynthesisConfig::default(),
            synthesize: false,
            postselect_on: 0,
            calibration: CalibrationSettings::default(),
            dt: DEFAULT_DT,
            prep_angle_deg: 59.185,
            tomography_convention: ZeroQuantumConvention::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn for_experiment(experiment: Experiment) -> Self {
        Self {
            experiment,
            ..Self::default()
        }
    }

    /// Reads TOML (`.toml`) or JSON (anything else).
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))
        } else {
            serde_json::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))
        }
    }

    /// Fills experiment defaults and validates.
    pub fn resolved(mut self) -> Result<Self> {
        if self.r_values.is_empty() {
            self.r_values = self.experiment.default_r_values();
        }
        if self.t_grid.is_none() {
            self.t_grid = Some(self.experiment.default_t_grid());
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(HarnessError::Config("shots must be positive".into()));
        }
        if self.postselect_on > 1 {
            return Err(HarnessError::Config(format!(
                "postselect_on must be 0 or 1, got {}",
                self.postselect_on
            )));
        }
        if !(self.dt > 0.0) {
            return Err(HarnessError::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if let Some(r) = self.r_values.iter().find(|r| !r.is_finite()) {
            return Err(HarnessError::Config(format!("non-finite r value {r}")));
        }
        if self.readout.wires.len() < 3 {
            return Err(HarnessError::Config(
                "readout model needs fidelities for wires a, q, q'".into(),
            ));
        }
        let t = self.times()?;
        if t.iter().any(|&x| x < 0.0) {
            return Err(HarnessError::Config("times must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        self.t_grid
            .unwrap_or_else(|| self.experiment.default_t_grid())
            .points()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

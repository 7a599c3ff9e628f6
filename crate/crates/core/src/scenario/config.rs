//! TOML run configuration. Every section is a flat `key = value` table so that
//! sweep files diff cleanly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PhaseGrid;
use crate::stepper::StepperConfig;
use crate::units::{DimensionlessParams, Potential};

use super::initial::InitialState;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialSpec {
    Free,
    Harmonic,
    /// `V = x⁴/(4η⁴)` in units of `ħΩ` and `x_zpf`.
    Quartic { eta: f64 },
    /// Raw `c₁..c₄` of `V = Σ c_k u^k` in units of `ħΩ`.
    Coeffs { c1: f64, c2: f64, c3: f64, c4: f64 },
}

impl PotentialSpec {
    pub fn potential(&self) -> Potential {
        match *self {
            Self::Free => Potential::free(),
            Self::Harmonic => Potential::harmonic(),
            Self::Quartic { eta } => Potential::quartic(eta),
            Self::Coeffs { c1, c2, c3, c4 } => Potential::new([c1, c2, c3, c4]),
        }
    }

    /// Scale for the reported observables; 1 unless quartic.
    pub fn eta(&self) -> f64 {
        match *self {
            Self::Quartic { eta } => eta,
            _ => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Quantum,
    Classical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    #[default]
    Liouville,
    Lab,
    Both,
}

impl Frame {
    pub fn liouville(self) -> bool {
        matches!(self, Frame::Liouville | Frame::Both)
    }

    pub fn lab(self) -> bool {
        matches!(self, Frame::Lab | Frame::Both)
    }
}

impl std::str::FromStr for Frame {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "liouville" => Ok(Frame::Liouville),
            "lab" => Ok(Frame::Lab),
            "both" => Ok(Frame::Both),
            _ => Err(Error::Config(format!("unknown frame `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    /// `γ/Ω`
    pub gamma: f64,
    /// `Γ/Ω`
    pub decoherence: f64,
    #[serde(default)]
    pub mode: Mode,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub np: usize,
    /// `h_x/x_zpf`
    pub hx: f64,
    /// `h_p/p_zpf`
    pub hp: f64,
    #[serde(default)]
    pub center_x: f64,
    #[serde(default)]
    pub center_p: f64,
}

impl GridConfig {
    pub fn grid(&self) -> Result<PhaseGrid> {
        PhaseGrid::centered(self.nx, self.np, self.hx, self.hp, (self.center_x, self.center_p))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Final time `Ωt`.
    pub t_final: f64,
    /// Steps between time-series rows.
    #[serde(default = "one")]
    pub series_every: usize,
    /// Steps between snapshots; 0 writes only the initial and final ones.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub frame: Frame,
    /// Every `overlay_stride`-th grid line of the mapped grid is written next
    /// to each Liouville-frame snapshot; 0 disables the overlay.
    #[serde(default = "four")]
    pub overlay_stride: usize,
}

fn one() -> usize {
    1
}

fn four() -> usize {
    4
}

/// Lab-frame target grid for resampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResampleConfig {
    #[serde(default)]
    pub enabled: bool,
    pub nx: usize,
    pub np: usize,
    /// Half-width in `x_zpf`; defaults to `1.5 η`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_extent: Option<f64>,
    /// Half-width in `p_zpf`.
    pub p_extent: f64,
    /// Step of the backward trajectories; defaults to the forward flow step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_dt: Option<f64>,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        Self { enabled: false, nx: 601, np: 241, x_extent: None, p_extent: 6.0, flow_dt: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    pub physics: PhysicsConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub stepper: StepperConfig,
    pub output: OutputConfig,
    #[serde(default)]
    pub resample: ResampleConfig,
}

impl Default for RunConfig {
    /// The parameters of the reference quartic run: `η = 100`, `Γ = 10⁻⁵ Ω`,
    /// a 255×56 grid and `Ωt = 150`.
    fn default() -> Self {
        Self {
            potential: PotentialSpec::Quartic { eta: 100.0 },
            physics: PhysicsConfig { gamma: 0.0, decoherence: 1e-5, mode: Mode::Quantum },
            grid: GridConfig { nx: 255, np: 56, hx: 0.39, hp: 0.16, center_x: 0.0, center_p: 0.0 },
            initial: InitialState::default(),
            stepper: StepperConfig::default(),
            output: OutputConfig { t_final: 150.0, series_every: 1, snapshot_every: 0, frame: Frame::Both, overlay_stride: 4 },
            resample: ResampleConfig { enabled: true, ..Default::default() },
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml())?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.grid()?;
        self.initial.validate()?;
        self.stepper.validate()?;
        self.params()?;
        if let PotentialSpec::Quartic { eta } = self.potential {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::Config(format!("η must be positive, got {eta}")));
            }
        }
        if !(self.output.t_final >= 0.0 && self.output.t_final.is_finite()) {
            return Err(Error::Config("t_final must be a non-negative number".into()));
        }
        if self.output.series_every == 0 {
            return Err(Error::Config("series_every must be at least 1".into()));
        }
        let r = &self.resample;
        if r.enabled || self.output.frame.lab() {
            self.target_grid()?;
            if let Some(dt) = r.flow_dt {
                if !(dt > 0.0) {
                    return Err(Error::Config("resample flow_dt must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<DimensionlessParams> {
        let p = DimensionlessParams::new(self.physics.gamma, self.physics.decoherence, self.potential.potential())?;
        Ok(match self.physics.mode {
            Mode::Quantum => p,
            Mode::Classical => p.classical(),
        })
    }

    pub fn eta(&self) -> f64 {
        self.potential.eta()
    }

    /// Number of PDE steps to reach `t_final`.
    pub fn steps(&self) -> usize {
        (self.output.t_final / self.stepper.dt).round() as usize
    }

    pub fn flow_dt(&self) -> f64 {
        self.stepper.dt / self.stepper.substeps as f64
    }

    pub fn target_grid(&self) -> Result<PhaseGrid> {
        let r = &self.resample;
        let xe = r.x_extent.unwrap_or(1.5 * self.eta().max(4.0));
        let hx = 2.0 * xe / (r.nx - 1) as f64;
        let hp = 2.0 * r.p_extent / (r.np - 1) as f64;
        PhaseGrid::centered(r.nx, r.np, hx, hp, (0.0, 0.0))
    }

    pub fn resample_dt(&self) -> f64 {
        self.resample.flow_dt.unwrap_or_else(|| self.flow_dt())
    }
}

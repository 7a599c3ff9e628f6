use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PhaseGrid;
use crate::stepper::WignerField;

/// Gaussian initial state in zero-point units. The default is the harmonic
/// ground state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialState {
    pub mean_x: f64,
    pub mean_p: f64,
    pub sigma_x: f64,
    pub sigma_p: f64,
}

impl Default for InitialState {
    fn default() -> Self {
        Self { mean_x: 0.0, mean_p: 0.0, sigma_x: 1.0, sigma_p: 1.0 }
    }
}

impl InitialState {
    /// `σ_x σ_p ≥ ħ/2` reads `σ_x σ_p ≥ 1` in zero-point units.
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_x > 0.0 && self.sigma_p > 0.0) {
            return Err(Error::Parameter("widths must be positive".into()));
        }
        if self.sigma_x * self.sigma_p < 1.0 - 1e-9 {
            return Err(Error::Parameter(format!(
                "widths σx·σp = {} violate the uncertainty bound",
                self.sigma_x * self.sigma_p
            )));
        }
        if !(self.mean_x.is_finite() && self.mean_p.is_finite()) {
            return Err(Error::Parameter("means must be finite".into()));
        }
        Ok(())
    }
}

/// Gaussian Wigner function sampled on `grid`.
pub fn gaussian_initial(grid: PhaseGrid, state: &InitialState) -> Result<WignerField> {
    state.validate()?;
    let InitialState { mean_x, mean_p, sigma_x, sigma_p } = *state;
    let a = 1.0 / (2.0 * PI * sigma_x * sigma_p);
    let values = (0..grid.len())
        .map(|k| {
            let (u, v) = grid.point(k);
            let (du, dv) = ((u - mean_x) / sigma_x, (v - mean_p) / sigma_p);
            a * (-0.5 * (du * du + dv * dv)).exp()
        })
        .collect();
    WignerField::new(grid, values, 0.0)
}

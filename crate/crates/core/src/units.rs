//! Physical parameters, the zero-point unit system and polynomial potentials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant in internal units (`ħ = 2 x_zpf p_zpf`).
pub const HBAR: f64 = 2.0;

/// Dimensional inputs of a run. Units are whatever the caller uses
/// consistently; only ratios reach the simulation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams {
    pub mass: f64,
    /// Reference frequency `Ω` defining the zero-point units.
    pub omega: f64,
    /// Damping rate `γ`.
    pub gamma: f64,
    /// Displacement noise rate `Γ`.
    pub decoherence: f64,
    pub hbar: f64,
}

impl PhysicalParams {
    pub fn new(mass: f64, omega: f64, hbar: f64, gamma: f64, decoherence: f64) -> Result<Self> {
        let p = Self {
            mass,
            omega,
            gamma,
            decoherence,
            hbar,
        };
        p.validate()?;
        Ok(p)
    }

    /// Compose `Γ = γ k_B T / (ħΩ) + Γ₁` from a thermal bath and a white force.
    pub fn thermal(
        mass: f64,
        omega: f64,
        hbar: f64,
        gamma: f64,
        boltzmann: f64,
        temperature: f64,
        white_rate: f64,
    ) -> Result<Self> {
        if temperature < 0.0 || boltzmann <= 0.0 || white_rate < 0.0 {
            return Err(Error::Parameter(
                "thermal inputs must satisfy T >= 0, k_B > 0, Γ₁ >= 0".into(),
            ));
        }
        let decoherence = gamma * boltzmann * temperature / (hbar * omega) + white_rate;
        Self::new(mass, omega, hbar, gamma, decoherence)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite();
        if !(ok(self.mass) && self.mass > 0.0) {
            return Err(Error::Parameter(format!("mass must be positive, got {}", self.mass)));
        }
        if !(ok(self.omega) && self.omega > 0.0) {
            return Err(Error::Parameter(format!("Ω must be positive, got {}", self.omega)));
        }
        if !(ok(self.hbar) && self.hbar > 0.0) {
            return Err(Error::Parameter(format!("ħ must be positive, got {}", self.hbar)));
        }
        if !(ok(self.gamma) && self.gamma >= 0.0) {
            return Err(Error::Parameter(format!("γ must be non-negative, got {}", self.gamma)));
        }
        if !(ok(self.decoherence) && self.decoherence >= 0.0) {
            return Err(Error::Parameter(format!(
                "Γ must be non-negative, got {}",
                self.decoherence
            )));
        }
        Ok(())
    }
}

/// Zero-point scales of a harmonic oscillator with frequency `Ω`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitSystem {
    pub x_zpf: f64,
    pub p_zpf: f64,
    pub time: f64,
}

impl UnitSystem {
    pub fn new(params: &PhysicalParams) -> Result<Self> {
        params.validate()?;
        let x_zpf = (params.hbar / (2.0 * params.mass * params.omega)).sqrt();
        Ok(Self {
            x_zpf,
            p_zpf: params.hbar / (2.0 * x_zpf),
            time: 1.0 / params.omega,
        })
    }

    pub fn to_internal(&self, x: f64, p: f64, t: f64) -> (f64, f64, f64) {
        (x / self.x_zpf, p / self.p_zpf, t / self.time)
    }

    pub fn to_physical(&self, u: f64, v: f64, tau: f64) -> (f64, f64, f64) {
        (u * self.x_zpf, v * self.p_zpf, tau * self.time)
    }
}

/// Polynomial potential `V(x) = ħΩ Σ_{k=1..4} c_k (x/x_zpf)^k`.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Potential {
    /// `c₁..c₄`.
    pub coeffs: [f64; 4],
}

impl Potential {
    pub fn new(coeffs: [f64; 4]) -> Self {
        Self { coeffs }
    }

    pub fn free() -> Self {
        Self::default()
    }

    /// `mΩ²x²/2`, the oscillator defining the units.
    pub fn harmonic() -> Self {
        Self::new([0.0, 0.25, 0.0, 0.0])
    }

    /// `(ħΩ/4η⁴)(x/x_zpf)⁴`; the classical turning point of the harmonic
    /// ground-state energy sits at `x = η x_zpf`.
    pub fn quartic(eta: f64) -> Self {
        Self::new([0.0, 0.0, 0.0, 0.25 / eta.powi(4)])
    }

    pub fn is_quadratic(&self) -> bool {
        self.coeffs[2] == 0.0 && self.coeffs[3] == 0.0
    }

    /// `V(u)` in units of `ħΩ`.
    pub fn value(&self, u: f64) -> f64 {
        let [c1, c2, c3, c4] = self.coeffs;
        u * (c1 + u * (c2 + u * (c3 + u * c4)))
    }

    /// `V⁽¹⁾..V⁽⁴⁾` at `u`, in units of `ħΩ/x_zpfⁿ`. Higher derivatives vanish.
    pub fn derivs(&self, u: f64) -> [f64; 4] {
        let [c1, c2, c3, c4] = self.coeffs;
        [
            c1 + u * (2.0 * c2 + u * (3.0 * c3 + u * 4.0 * c4)),
            2.0 * c2 + u * (6.0 * c3 + u * 12.0 * c4),
            6.0 * c3 + u * 24.0 * c4,
            24.0 * c4,
        ]
    }

    /// Derivatives in the internal energy unit `ħΩ/2`, i.e. the force terms of
    /// `dv/dτ = -U'(u)`.
    #[inline]
    pub fn internal_derivs(&self, u: f64) -> [f64; 4] {
        let [c1, c2, c3, c4] = self.coeffs;
        [
            2.0 * c1 + u * (4.0 * c2 + u * (6.0 * c3 + u * 8.0 * c4)),
            4.0 * c2 + u * (12.0 * c3 + u * 24.0 * c4),
            12.0 * c3 + u * 48.0 * c4,
            48.0 * c4,
        ]
    }

    /// Internal force `-U'(u)`.
    #[inline]
    pub fn force(&self, u: f64) -> f64 {
        let [c1, c2, c3, c4] = self.coeffs;
        -(2.0 * c1 + u * (4.0 * c2 + u * (6.0 * c3 + u * 8.0 * c4)))
    }
}

/// Everything the simulation needs, in internal units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DimensionlessParams {
    /// `γ/Ω`.
    pub gamma: f64,
    /// `Γ/Ω`.
    pub decoherence: f64,
    pub potential: Potential,
    /// `ħ` in internal units. `HBAR` for quantum runs, 0 for the classical limit.
    pub hbar: f64,
}

impl DimensionlessParams {
    pub fn new(gamma: f64, decoherence: f64, potential: Potential) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::Parameter(format!("γ/Ω must be non-negative, got {gamma}")));
        }
        if !(decoherence.is_finite() && decoherence >= 0.0) {
            return Err(Error::Parameter(format!(
                "Γ/Ω must be non-negative, got {decoherence}"
            )));
        }
        Ok(Self {
            gamma,
            decoherence,
            potential,
            hbar: HBAR,
        })
    }

    /// Drop the quantum (Moyal) term, keeping the noise.
    pub fn classical(mut self) -> Self {
        self.hbar = 0.0;
        self
    }

    /// Momentum diffusion constant `ħ²Γ/(2 x_zpf²)` in internal units. It uses
    /// the physical `ħ` even in classical mode since it describes noise.
    pub fn diffusion(&self) -> f64 {
        0.5 * HBAR * HBAR * self.decoherence
    }

    /// Physical rates `(γ, Γ)` for a given reference frequency.
    pub fn rates(&self, omega: f64) -> (f64, f64) {
        (self.gamma * omega, self.decoherence * omega)
    }
}

pub fn nondimensionalize(params: &PhysicalParams, potential: Potential) -> Result<DimensionlessParams> {
    params.validate()?;
    DimensionlessParams::new(
        params.gamma / params.omega,
        params.decoherence / params.omega,
        potential,
    )
}

/// `(V⁽¹⁾, V⁽²⁾, V⁽³⁾, V⁽⁴⁾)` of the potential at dimensionless position `u`.
pub fn potential_derivs(potential: &Potential, u: f64) -> [f64; 4] {
    potential.derivs(u)
}

//! Open quantum dynamics of a 1D particle, simulated through its Wigner
//! function in the Liouville frame: a phase-space frame that co-moves with the
//! classical trajectories of the potential.
//!
//! All internal computation is dimensionless. Positions are measured in units
//! of the zero-point length `x_zpf`, momenta in `p_zpf = ħ/(2 x_zpf)` and time
//! in `1/Ω`. In these units the mass is 1, `ħ` is 2 and energies are measured
//! in `ħΩ/2`.
//!
//! The per-step pipeline is
//!
//! 1. [`flow`]: classical trajectories of every grid point plus their
//!    derivatives with respect to initial conditions up to third order,
//! 2. [`inverse`]: derivatives of the backward map from the forward ones,
//! 3. [`operator`]: PDE coefficients and the sparse 13-point operator,
//! 4. [`stepper`]: exponential action of the operator on the Wigner vector.
//!
//! [`observables`] turns the co-moving field into lab-frame quantities and
//! [`scenario`] handles configuration, files and whole runs.

pub mod error;
pub mod exec;
pub mod flow;
pub mod grid;
pub mod inverse;
pub mod observables;
pub mod operator;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod scenario;
pub mod stepper;
pub mod units;

pub use error::{Error, Result};
pub use grid::PhaseGrid;
pub use units::{DimensionlessParams, PhysicalParams, Potential, UnitSystem};

//! Reference solvers that share no code path with the Liouville-frame solver
//! beyond the potential definition: an adaptive Runge–Kutta integrator, a
//! split-operator wavefunction evolver with its Wigner transform and a
//! stochastic unravelling of momentum diffusion, the closed
//! Gaussian moment equations of quadratic potentials, and a classical
//! trajectory ensemble.

pub mod dense;
pub mod ensemble;
pub mod gaussian;
pub mod ode;
pub mod wavefunction;

pub use ensemble::{classical_ensemble, gaussian_samples, EnsembleMoments};
pub use gaussian::gaussian_moment_ode;
pub use ode::dopri5;
pub use wavefunction::{diffusive_ensemble, split_operator_evolve, wigner_transform, NoisyEnsemble, WaveFunction};

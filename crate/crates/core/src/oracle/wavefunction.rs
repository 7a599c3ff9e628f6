//! Wavefunction reference: Strang-split evolution with FFT kinetic steps.
//!
//! Internal units: `iħ ∂ψ/∂τ = [-(ħ²/2)∂²_u + U(u)] ψ` with `ħ = 2`, so the
//! kinetic phase per step is `exp(-i k² Δτ)` and momentum is `v = 2k`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::PhaseGrid;
use crate::observables::Moments;
use crate::stepper::WignerField;
use crate::units::{Potential, HBAR};

/// Probability outside the resolved band above which a run is rejected.
pub const ALIAS_LIMIT: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction {
    pub u0: f64,
    pub du: f64,
    pub psi: Vec<Complex64>,
}

impl WaveFunction {
    /// Minimum-uncertainty packet with position width `sigma` centred at
    /// `(mx, mp)`.
    pub fn gaussian(n: usize, du: f64, center: f64, mx: f64, mp: f64, sigma: f64) -> Self {
        let u0 = center - 0.5 * (n as f64 - 1.0) * du;
        let a = (2.0 * PI * sigma * sigma).powf(-0.25);
        let psi = (0..n)
            .map(|i| {
                let u = u0 + i as f64 * du;
                let env = a * (-(u - mx).powi(2) / (4.0 * sigma * sigma)).exp();
                Complex64::from_polar(env, mp * u / HBAR)
            })
            .collect();
        Self { u0, du, psi }
    }

    pub fn u(&self, i: usize) -> f64 {
        self.u0 + i as f64 * self.du
    }

    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.du
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Angular wavenumbers in FFT order.
    fn wavenumbers(&self) -> Vec<f64> {
        let n = self.psi.len();
        let dk = 2.0 * PI / (n as f64 * self.du);
        (0..n)
            .map(|m| if m < n.div_ceil(2) { m as f64 } else { m as f64 - n as f64 } * dk)
            .collect()
    }

    fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.psi.clone();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        buf
    }

    /// Fraction of probability in the outer 2% of the position window or the
    /// outer fifth of the momentum band, whichever is larger.
    pub fn tail_fraction(&self) -> f64 {
        let n = self.psi.len();
        let total: f64 = self.psi.iter().map(|c| c.norm_sqr()).sum();
        let edge = (n / 50).max(1);
        let pos: f64 = self.psi[..edge].iter().chain(&self.psi[n - edge..]).map(|c| c.norm_sqr()).sum();
        let spec = self.spectrum();
        let kmax = PI / self.du;
        let ks = self.wavenumbers();
        let stotal: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
        let mom: f64 = spec.iter().zip(&ks).filter(|(_, k)| k.abs() > 0.8 * kmax).map(|(c, _)| c.norm_sqr()).sum();
        (pos / total).max(mom / stotal)
    }

    /// `⟨x⟩, ⟨p⟩, ⟨x²⟩, ⟨p²⟩, ⟨{x,p}⟩` with `p = -iħ ∂_u` applied spectrally.
    pub fn moments(&self) -> Moments {
        let n = self.psi.len();
        let norm: f64 = self.psi.iter().map(|c| c.norm_sqr()).sum();
        let ks = self.wavenumbers();
        let mut planner = FftPlanner::new();
        let mut dpsi = self.spectrum();
        for (c, k) in dpsi.iter_mut().zip(&ks) {
            *c *= HBAR * k / n as f64;
        }
        planner.plan_fft_inverse(n).process(&mut dpsi);
        let mut m = Moments::default();
        for (i, (c, pc)) in self.psi.iter().zip(&dpsi).enumerate() {
            let u = self.u(i);
            let d = c.norm_sqr();
            let cp = c.conj() * pc;
            m.mean_x += u * d;
            m.x2 += u * u * d;
            m.mean_p += cp.re;
            m.p2 += pc.norm_sqr();
            m.xp_sym += 2.0 * u * cp.re;
        }
        m.mean_x /= norm;
        m.x2 /= norm;
        m.mean_p /= norm;
        m.p2 /= norm;
        m.xp_sym /= norm;
        m
    }
}

/// Strang splitting `V/2 · T · V/2`, `steps` steps over `tau`. Fails with
/// [`Error::Resolution`] when the final state has probability near the edges
/// of the position window or momentum band.
pub fn split_operator_evolve(init: &WaveFunction, potential: &Potential, tau: f64, steps: usize) -> Result<WaveFunction> {
    let prop = Propagator::new(init, potential, tau / steps.max(1) as f64);
    let mut out = init.clone();
    for _ in 0..steps {
        prop.step(&mut out.psi);
    }
    let tail = out.tail_fraction();
    if tail > ALIAS_LIMIT {
        return Err(Error::Resolution(tail));
    }
    Ok(out)
}

/// One Strang step `K/2 · T · K/2` with precomputed phases and FFT plans.
struct Propagator {
    half_kick: Vec<Complex64>,
    drift: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Propagator {
    fn new(grid: &WaveFunction, potential: &Potential, dt: f64) -> Self {
        let n = grid.psi.len();
        let half_kick = (0..n)
            .map(|i| {
                let pot = 2.0 * potential.value(grid.u(i));
                Complex64::from_polar(1.0, -pot * dt / (2.0 * HBAR))
            })
            .collect();
        let drift = grid
            .wavenumbers()
            .iter()
            .map(|k| Complex64::from_polar(1.0 / n as f64, -HBAR * k * k * dt / 2.0))
            .collect();
        let mut planner = FftPlanner::new();
        Self { half_kick, drift, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    fn step(&self, psi: &mut [Complex64]) {
        psi.iter_mut().zip(&self.half_kick).for_each(|(c, k)| *c *= k);
        self.fwd.process(psi);
        psi.iter_mut().zip(&self.drift).for_each(|(c, k)| *c *= k);
        self.inv.process(psi);
        psi.iter_mut().zip(&self.half_kick).for_each(|(c, k)| *c *= k);
    }
}

/// Ensemble average over stochastic unravellings of the momentum diffusion.
#[derive(Clone, Debug)]
pub struct NoisyEnsemble {
    pub u0: f64,
    pub du: f64,
    /// Mean position density.
    pub density: Vec<f64>,
    pub moments: Moments,
}

/// Momentum diffusion `D` as random momentum kicks: after every split-operator
/// step `ψ` picks up `exp(i δv u/ħ)` with `δv ~ N(0, 2D Δτ)`. The ensemble-mean
/// density matrix obeys the diffusive master equation up to `O(Δτ)`.
pub fn diffusive_ensemble(
    init: &WaveFunction,
    potential: &Potential,
    diffusion: f64,
    tau: f64,
    steps: usize,
    realisations: usize,
    seed: u64,
) -> Result<NoisyEnsemble> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    let n = init.psi.len();
    let steps = steps.max(1);
    let dt = tau / steps as f64;
    let realisations = realisations.max(1);
    let kick = Normal::new(0.0, (2.0 * diffusion.max(0.0) * dt).sqrt())
        .map_err(|e| Error::Parameter(e.to_string()))?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut density = vec![0.0; n];
    let mut sum = [0.0; 5];
    let w = 1.0 / realisations as f64;
    let prop = Propagator::new(init, potential, dt);
    for _ in 0..realisations {
        let mut psi = init.clone();
        for _ in 0..steps {
            prop.step(&mut psi.psi);
            if diffusion > 0.0 {
                let q = kick.sample(&mut rng) / HBAR;
                for (i, c) in psi.psi.iter_mut().enumerate() {
                    *c *= Complex64::from_polar(1.0, q * init.u(i));
                }
            }
        }
        let tail = psi.tail_fraction();
        if tail > ALIAS_LIMIT {
            return Err(Error::Resolution(tail));
        }
        density.iter_mut().zip(psi.density()).for_each(|(a, d)| *a += w * d);
        let m = psi.moments();
        for (a, b) in sum.iter_mut().zip([m.mean_x, m.mean_p, m.x2, m.p2, m.xp_sym]) {
            *a += w * b;
        }
    }
    Ok(NoisyEnsemble {
        u0: init.u0,
        du: init.du,
        density,
        moments: Moments { mean_x: sum[0], mean_p: sum[1], x2: sum[2], p2: sum[3], xp_sym: sum[4] },
    })
}

/// Wigner function `W(u, v) = (1/2π) Σ_y ψ*(u+y) ψ(u-y) e^{ivy} Δy` with `ψ`
/// thinned to every `stride`-th sample, evaluated column by column with one
/// FFT over `y` of length `n_v`. Returns the columns `every`-th apart.
pub fn wigner_transform(psi: &WaveFunction, stride: usize, n_v: usize, every: usize) -> Result<WignerField> {
    let stride = stride.max(1);
    let every = every.max(1);
    let thin: Vec<Complex64> = psi.psi.iter().step_by(stride).copied().collect();
    let du = psi.du * stride as f64;
    let m = thin.len();
    let cols: Vec<usize> = (0..m).step_by(every).collect();
    let grid = PhaseGrid::new(
        cols.len(),
        n_v,
        du * every as f64,
        2.0 * PI / (n_v as f64 * du),
        psi.u0,
        -PI / du,
    )?;
    let fft = FftPlanner::new().plan_fft_inverse(n_v);
    let mut values = vec![0.0; grid.len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); n_v];
    let half = (n_v / 2) as isize;
    for (ci, &n) in cols.iter().enumerate() {
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for s in -half + 1..half {
            let (a, b) = (n as isize + s, n as isize - s);
            if a < 0 || b < 0 || a >= m as isize || b >= m as isize {
                continue;
            }
            buf[s.rem_euclid(n_v as isize) as usize] = thin[a as usize].conj() * thin[b as usize];
        }
        fft.process(&mut buf);
        for j in 0..n_v {
            // v_j = -π/du + j·hv, i.e. FFT bin j - n_v/2
            let bin = (j + n_v / 2) % n_v;
            values[grid.index(ci, j)] = buf[bin].re * du / (2.0 * PI);
        }
    }
    Ok(WignerField { grid, values, time: 0.0 })
}

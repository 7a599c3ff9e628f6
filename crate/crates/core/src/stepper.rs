//! Time stepping of the Liouville-frame Wigner vector.
//!
//! Each step refreshes the classical flow, rebuilds `D` from the flow at the
//! chosen evaluation point and applies `exp(Δτ D)` to the Wigner vector. A
//! scaled, truncated Taylor series handles the general case; exactly
//! antisymmetric operators (closed systems under [`Scheme::Skew`]) use a
//! Chebyshev expansion with Bessel coefficients, which needs roughly a quarter
//! of the products for the same `Δτ‖D‖`.
//!
//! Open systems with a Moyal term can instead be stepped by Strang splitting,
//! `exp(Δτ N/2) exp(Δτ A) exp(Δτ N/2)` with `N` the noise part and `A` the
//! antisymmetric Moyal part, so that the stiff `A` keeps the Chebyshev path.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::flow::FlowField;
use crate::grid::PhaseGrid;
use crate::operator::{self, Scheme, SparseOperator, StencilPattern};
use crate::units::DimensionlessParams;

/// Per-slice bound on `Δτ‖D‖∞` for the Taylor series.
pub const SLICE_NORM: f64 = 3.0;
/// Taylor terms allowed per slice before giving up.
pub const MAX_TERMS: usize = 60;
/// Largest Bessel argument `ρΔτ` handled in one Chebyshev slice.
pub const CHEBYSHEV_SLICE: f64 = 400.0;
/// Edge mass fraction that triggers the periodic-wrap warning.
pub const WRAP_WARNING: f64 = 1e-6;

/// Liouville-frame (or lab-frame) Wigner values on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerField {
    pub grid: PhaseGrid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl WignerField {
    pub fn new(grid: PhaseGrid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension { expected: grid.len(), got: values.len() });
        }
        Ok(Self { grid, values, time })
    }

    /// Discrete norm `Σ W h_x h_p`.
    pub fn norm(&self) -> f64 {
        exec::sum_range(self.values.len(), |k| self.values[k]) * self.grid.cell_area()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Where in the step the operator is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalPoint {
    Start,
    #[default]
    Midpoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperConfig {
    /// PDE step `Δτ`.
    pub dt: f64,
    /// Classical Yoshida steps per PDE step.
    pub substeps: usize,
    /// Relative accuracy of the exponential action.
    pub tol: f64,
    pub eval: EvalPoint,
    #[serde(default)]
    pub scheme: Scheme,
    /// Strang-split noise and Moyal parts of open systems (skew scheme only).
    #[serde(default = "yes")]
    pub split: bool,
}

fn yes() -> bool {
    true
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self { dt: 0.05, substeps: 10, tol: 1e-10, eval: EvalPoint::Midpoint, scheme: Scheme::default(), split: true }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Parameter(format!("Δτ must be positive, got {}", self.dt)));
        }
        if self.substeps == 0 {
            return Err(Error::Parameter("need at least one flow substep".into()));
        }
        if !(self.tol > 0.0 && self.tol <= 1e-2) {
            return Err(Error::Parameter(format!("tolerance must lie in (0, 1e-2], got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExpmvStats {
    pub slices: usize,
    pub matvecs: usize,
}

fn norm2(v: &[f64]) -> f64 {
    exec::sum_range(v.len(), |k| v[k] * v[k]).sqrt()
}

/// `exp(dt·D)·w` by a truncated Taylor series on `s` equal sub-slices, using
/// only products with `D`.
pub fn expmv(op: &SparseOperator, w: &[f64], dt: f64, tol: f64) -> Result<(Vec<f64>, ExpmvStats)> {
    if w.len() != op.dim() {
        return Err(Error::Dimension { expected: op.dim(), got: w.len() });
    }
    let mut stats = ExpmvStats::default();
    if dt == 0.0 || op.is_zero() {
        return Ok((w.to_vec(), stats));
    }
    let slices = ((dt.abs() * op.norm_inf() / SLICE_NORM).ceil() as usize).max(1);
    let h = dt / slices as f64;
    let slice_tol = tol / slices as f64;
    stats.slices = slices;

    let mut acc = w.to_vec();
    let mut term = vec![0.0; w.len()];
    let mut next = vec![0.0; w.len()];
    for _ in 0..slices {
        term.copy_from_slice(&acc);
        let mut small_before = false;
        let mut converged = false;
        for k in 1..=MAX_TERMS {
            op.matvec(&term, &mut next);
            stats.matvecs += 1;
            let scale = h / k as f64;
            exec::for_each_mut(&mut next, |_, t| *t *= scale);
            exec::for_each_mut(&mut acc, |i, a| *a += next[i]);
            std::mem::swap(&mut term, &mut next);
            let small = norm2(&term) <= slice_tol * norm2(&acc);
            if small && small_before {
                converged = true;
                break;
            }
            small_before = small;
        }
        if !converged {
            return Err(Error::StepTooLarge { terms: MAX_TERMS });
        }
    }
    Ok((acc, stats))
}

/// `J_0(x)..J_K(x)` by Miller's backward recurrence, truncated where the
/// remaining tail `2Σ|J_k|` drops below `tol`.
pub fn bessel_j_sequence(x: f64, tol: f64) -> Vec<f64> {
    if x == 0.0 {
        return vec![1.0];
    }
    let top = (x + 15.0 * x.cbrt() + 30.0).ceil() as usize;
    let mut j = vec![0.0; top + 2];
    j[top] = 1e-300;
    for k in (1..=top).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            j[k - 1..].iter_mut().for_each(|v| *v *= 1e-250);
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    j.iter_mut().for_each(|v| *v /= norm);
    let mut tail = 0.0;
    let mut keep = j.len();
    while keep > 1 && tail + 2.0 * j[keep - 1].abs() < tol {
        tail += 2.0 * j[keep - 1].abs();
        keep -= 1;
    }
    j.truncate(keep);
    j
}

/// `exp(dt·D)·w` for antisymmetric `D`.
///
/// With `ρ = ‖D‖∞` bounding the spectrum `iλ`, the Jacobi–Anger expansion
/// `exp(dt D) = J₀(ρdt) + 2Σ J_k(ρdt) ψ_k(D)` holds with the real recurrence
/// `ψ_{k+1} = (2/ρ) D ψ_k + ψ_{k-1}`, `ψ₀ = 1`, `ψ₁ = D/ρ`.
pub fn expmv_chebyshev(op: &SparseOperator, w: &[f64], dt: f64, tol: f64) -> Result<(Vec<f64>, ExpmvStats)> {
    if w.len() != op.dim() {
        return Err(Error::Dimension { expected: op.dim(), got: w.len() });
    }
    let mut stats = ExpmvStats::default();
    let rho = op.norm_inf();
    if dt == 0.0 || rho == 0.0 {
        return Ok((w.to_vec(), stats));
    }
    let total = rho * dt.abs();
    let slices = ((total / CHEBYSHEV_SLICE).ceil() as usize).max(1);
    let coeffs = bessel_j_sequence(total / slices as f64, tol / slices as f64);
    let scale = 2.0 * dt.signum() / rho;
    stats.slices = slices;

    let n = w.len();
    let mut acc = w.to_vec();
    let mut prev = vec![0.0; n];
    let mut cur = vec![0.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..slices {
        prev.copy_from_slice(&acc);
        exec::for_each_mut(&mut acc, |_, a| *a *= coeffs[0]);
        if coeffs.len() == 1 {
            continue;
        }
        op.matvec(&prev, &mut cur);
        stats.matvecs += 1;
        exec::for_each_mut(&mut cur, |_, c| *c *= 0.5 * scale);
        exec::for_each_mut(&mut acc, |i, a| *a += 2.0 * coeffs[1] * cur[i]);
        for c in &coeffs[2..] {
            op.matvec(&cur, &mut next);
            stats.matvecs += 1;
            exec::for_each_mut(&mut next, |i, t| *t = scale * *t + prev[i]);
            exec::for_each_mut(&mut acc, |i, a| *a += 2.0 * c * next[i]);
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
    }
    Ok((acc, stats))
}

/// [`expmv_chebyshev`] for antisymmetric operators, [`expmv`] otherwise.
pub fn expmv_auto(op: &SparseOperator, w: &[f64], dt: f64, tol: f64) -> Result<(Vec<f64>, ExpmvStats)> {
    if op.antisymmetric {
        expmv_chebyshev(op, w, dt, tol)
    } else {
        expmv(op, w, dt, tol)
    }
}

enum StepOperator {
    Full(SparseOperator),
    Split { noise: SparseOperator, moyal: SparseOperator },
}

/// Flow field, Wigner field and the step machinery of one simulation.
#[derive(Clone, Debug)]
pub struct SimulationState {
    pub params: DimensionlessParams,
    pub config: StepperConfig,
    pub flow: FlowField,
    pub wigner: WignerField,
    pub pattern: Arc<StencilPattern>,
    pub step: usize,
    pub last_stats: ExpmvStats,
    /// Largest edge mass fraction seen so far.
    pub max_boundary_fraction: f64,
    wrap_warned: bool,
}

impl SimulationState {
    pub fn new(params: DimensionlessParams, config: StepperConfig, wigner: WignerField) -> Result<Self> {
        config.validate()?;
        let grid = wigner.grid;
        let max_boundary_fraction = operator::boundary_fraction(&grid, &wigner.values);
        let mut state = Self {
            params,
            config,
            flow: FlowField::new(grid),
            pattern: StencilPattern::new(grid),
            wigner,
            step: 0,
            last_stats: ExpmvStats::default(),
            max_boundary_fraction,
            wrap_warned: false,
        };
        state.check_wrap();
        Ok(state)
    }

    pub fn time(&self) -> f64 {
        self.flow.time
    }

    fn check_wrap(&mut self) {
        if self.max_boundary_fraction > WRAP_WARNING && !self.wrap_warned {
            self.wrap_warned = true;
            log::warn!(
                "Wigner mass near the periodic boundary ({:.2e} of total) at t = {:.4}; results may be contaminated by wrap-around",
                self.max_boundary_fraction,
                self.time()
            );
        }
    }

    pub fn wrap_warned(&self) -> bool {
        self.wrap_warned
    }

    /// Whether steps use the split propagator.
    pub fn splits(&self) -> bool {
        let p = &self.params;
        self.config.split
            && self.config.scheme == Scheme::Skew
            && (p.gamma > 0.0 || p.decoherence > 0.0)
            && p.hbar != 0.0
            && !p.potential.is_quadratic()
    }

    /// Operator built from the current flow.
    pub fn current_operator(&self) -> Result<SparseOperator> {
        operator::build_operator(&self.pattern, &self.flow.states, &self.params, self.config.scheme)
    }

    fn operator_vanishes(&self) -> bool {
        let p = &self.params;
        p.gamma == 0.0 && p.decoherence == 0.0 && (p.hbar == 0.0 || p.potential.is_quadratic())
    }

    /// One PDE step of size `Δτ`.
    pub fn advance(&mut self) -> Result<()> {
        let StepperConfig { dt, substeps, tol, eval, .. } = self.config;
        let pot = self.params.potential;
        let vanishes = self.operator_vanishes();
        let build = |s: &Self| -> Result<Option<StepOperator>> {
            Ok(if vanishes {
                None
            } else if s.splits() {
                let (noise, moyal) = operator::build_split(&s.pattern, &s.flow.states, &s.params)?;
                Some(StepOperator::Split { noise, moyal })
            } else {
                Some(StepOperator::Full(s.current_operator()?))
            })
        };
        let op = match eval {
            EvalPoint::Start => {
                let op = build(self)?;
                self.flow.propagate(&pot, dt / substeps as f64, substeps)?;
                op
            }
            EvalPoint::Midpoint => {
                let (n, h) = if substeps % 2 == 0 {
                    (substeps / 2, dt / substeps as f64)
                } else {
                    (substeps, dt / (2 * substeps) as f64)
                };
                self.flow.propagate(&pot, h, n)?;
                let op = build(self)?;
                self.flow.propagate(&pot, h, n)?;
                op
            }
        };
        match op {
            Some(StepOperator::Full(op)) => {
                let (w, stats) = expmv_auto(&op, &self.wigner.values, dt, tol)?;
                self.wigner.values = w;
                self.last_stats = stats;
            }
            Some(StepOperator::Split { noise, moyal }) => {
                let (w, a) = expmv(&noise, &self.wigner.values, 0.5 * dt, tol)?;
                let (w, b) = expmv_chebyshev(&moyal, &w, dt, tol)?;
                let (w, c) = expmv(&noise, &w, 0.5 * dt, tol)?;
                self.wigner.values = w;
                self.last_stats = ExpmvStats { slices: a.slices + b.slices + c.slices, matvecs: a.matvecs + b.matvecs + c.matvecs };
            }
            None => {}
        }
        self.step += 1;
        self.wigner.time = self.flow.time;
        if !self.wigner.is_finite() {
            return Err(Error::Instability { step: self.step });
        }
        let frac = operator::boundary_fraction(&self.wigner.grid, &self.wigner.values);
        self.max_boundary_fraction = self.max_boundary_fraction.max(frac);
        self.check_wrap();
        Ok(())
    }

    /// Advance `n` steps, calling `hook` after every `every`-th step.
    pub fn run_steps<F>(&mut self, n: usize, every: usize, mut hook: F) -> Result<()>
    where
        F: FnMut(&SimulationState) -> Result<()>,
    {
        for _ in 0..n {
            self.advance()?;
            if every > 0 && self.step % every == 0 {
                hook(self)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{assemble_operator, GCoeffs};
    use crate::units::Potential;

    fn small_grid() -> PhaseGrid {
        PhaseGrid::centered(10, 10, 0.5, 0.5, (0.0, 0.0)).unwrap()
    }

    #[test]
    fn zero_operator_is_identity() {
        let pattern = StencilPattern::new(small_grid());
        let op = SparseOperator::zeros(pattern);
        let w: Vec<f64> = (0..100).map(|k| (k as f64).sin()).collect();
        let (y, stats) = expmv(&op, &w, 0.7, 1e-10).unwrap();
        assert_eq!(y, w);
        assert_eq!(stats.matvecs, 0);
    }

    #[test]
    fn scalar_decay() {
        let pattern = StencilPattern::new(small_grid());
        let g = GCoeffs { g00: -1.7, ..Default::default() };
        let op = assemble_operator(&pattern, &vec![g; 100]).unwrap();
        let w: Vec<f64> = (0..100).map(|k| 1.0 + k as f64).collect();
        let (y, _) = expmv(&op, &w, 2.0, 1e-12).unwrap();
        let f = (-3.4f64).exp();
        for (a, b) in y.iter().zip(&w) {
            assert!((a / (b * f) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bessel_values() {
        let j = bessel_j_sequence(1.0, 1e-16);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
        let j = bessel_j_sequence(10.0, 1e-16);
        assert!((j[0] + 0.245_935_764_451_348_3).abs() < 1e-14);
        assert!((j[5] + 0.234_061_528_186_793_6).abs() < 1e-14);
        let j = bessel_j_sequence(350.0, 1e-12);
        let parseval = j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>();
        assert!((parseval - 1.0).abs() < 1e-12);
        assert!(j.len() > 350 && j.len() < 450);
    }

    #[test]
    fn chebyshev_rotation() {
        // Rotation generators coupling (0, j) and (1, j), rate ω_j.
        let pattern = StencilPattern::new(PhaseGrid::centered(8, 8, 1.0, 1.0, (0.0, 0.0)).unwrap());
        let mut op = SparseOperator::zeros(pattern);
        let omega = |j: usize| 40.0 + 30.0 * j as f64;
        for j in 0..8 {
            let (a, b) = (op.pattern.grid.index(0, j), op.pattern.grid.index(1, j));
            op.vals[a][1] = omega(j);
            op.vals[b][2] = -omega(j);
        }
        let w: Vec<f64> = (0..64).map(|k| 1.0 + 0.1 * k as f64).collect();
        for dt in [0.37, -1.9] {
            let (y, stats) = expmv_chebyshev(&op, &w, dt, 1e-12).unwrap();
            assert_eq!(stats.slices, 1usize.max((250.0 * dt.abs() / CHEBYSHEV_SLICE).ceil() as usize));
            for j in 0..8 {
                let (a, b) = (op.pattern.grid.index(0, j), op.pattern.grid.index(1, j));
                let (c, s) = ((omega(j) * dt).cos(), (omega(j) * dt).sin());
                assert!((y[a] - (c * w[a] + s * w[b])).abs() < 1e-10, "{dt} {j}");
                assert!((y[b] - (-s * w[a] + c * w[b])).abs() < 1e-10);
                for i in 2..8 {
                    let k = op.pattern.grid.index(i, j);
                    assert!((y[k] - w[k]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(StepperConfig::default().validate().is_ok());
        assert!(StepperConfig { dt: 0.0, ..Default::default() }.validate().is_err());
        assert!(StepperConfig { tol: 0.1, ..Default::default() }.validate().is_err());
        assert!(StepperConfig { substeps: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn harmonic_closed_step_is_bit_identical() {
        let grid = small_grid();
        let w: Vec<f64> = (0..grid.len()).map(|k| { let (u, v) = grid.point(k); (-(u * u + v * v) / 2.0).exp() }).collect();
        let params = DimensionlessParams::new(0.0, 0.0, Potential::harmonic()).unwrap();
        let mut sim = SimulationState::new(params, StepperConfig::default(), WignerField::new(grid, w.clone(), 0.0).unwrap()).unwrap();
        sim.run_steps(20, 0, |_| Ok(())).unwrap();
        assert_eq!(sim.wigner.values, w);
        assert!((sim.time() - 1.0).abs() < 1e-12);
        assert!(sim.current_operator().unwrap().is_zero());
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let pattern = StencilPattern::new(small_grid());
        let op = SparseOperator::zeros(pattern);
        assert!(matches!(expmv(&op, &[1.0; 3], 0.1, 1e-8), Err(Error::Dimension { .. })));
        assert!(WignerField::new(small_grid(), vec![0.0; 3], 0.0).is_err());
    }
}

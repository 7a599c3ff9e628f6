//! Compact oracle suite behind `qxpanse verify`.

use serde::Serialize;

use crate::error::Result;
use crate::flow::FlowField;
use crate::grid::PhaseGrid;
use crate::inverse::invert_jacobian;
use crate::observables::moments;
use crate::operator::{build_operator, Scheme, StencilPattern};
use crate::oracle::{self, classical_ensemble, gaussian_moment_ode, gaussian_samples, WaveFunction};
use crate::stepper::{expmv, EvalPoint, SimulationState, StepperConfig};
use crate::units::{DimensionlessParams, Potential};

use super::initial::{gaussian_initial, InitialState};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self { name, value, tolerance, passed: value <= tolerance }
    }
}

fn harmonic_closed() -> Result<Check> {
    let grid = PhaseGrid::centered(32, 32, 0.4, 0.4, (0.0, 0.0))?;
    let w = gaussian_initial(grid, &InitialState { mean_x: 1.0, ..Default::default() })?;
    let before = w.values.clone();
    let params = DimensionlessParams::new(0.0, 0.0, Potential::harmonic())?;
    let mut sim = SimulationState::new(params, StepperConfig::default(), w)?;
    let mut op_max = 0.0f64;
    for _ in 0..1000 {
        op_max = op_max.max(sim.current_operator()?.norm_inf());
        sim.advance()?;
    }
    let changed = sim.wigner.values.iter().zip(&before).filter(|(a, b)| a.to_bits() != b.to_bits()).count();
    Ok(Check::new("harmonic closed: D = 0, field bit-unchanged", op_max + changed as f64, 0.0))
}

fn gaussian_moments() -> Result<Check> {
    let grid = PhaseGrid::centered(96, 96, 0.3, 0.3, (0.0, 0.0))?;
    let init = InitialState { mean_x: 2.0, ..Default::default() };
    let w = gaussian_initial(grid, &init)?;
    let params = DimensionlessParams::new(0.05, 0.1, Potential::harmonic())?;
    let m0 = moments(&w, &FlowField::new(grid))?;
    let cfg = StepperConfig { dt: 0.05, substeps: 4, eval: EvalPoint::Midpoint, ..Default::default() };
    let mut sim = SimulationState::new(params, cfg, w)?;
    let mut worst = 0.0f64;
    for _ in 0..4 {
        sim.run_steps(20, 0, |_| Ok(()))?;
        let m = moments(&sim.wigner, &sim.flow)?;
        let r = gaussian_moment_ode(&params, m0, sim.time())?;
        worst = worst.max((m.x2 / r.x2 - 1.0).abs()).max((m.p2 / r.p2 - 1.0).abs());
    }
    Ok(Check::new("harmonic open: second moments vs moment equations", worst, 1e-2))
}

fn quartic_flow(steps: usize) -> Result<FlowField> {
    let mut flow = FlowField::new(PhaseGrid::centered(12, 12, 0.6, 0.6, (0.0, 0.0))?);
    flow.propagate(&Potential::quartic(2.0), 0.01, steps)?;
    Ok(flow)
}

fn symplectic(flow: &FlowField) -> Check {
    Check::new("flow Jacobian |det J - 1| after 1e4 steps", flow.max_det_deviation(), 1e-9)
}

fn inverse_identity(flow: &FlowField) -> Result<Check> {
    let mut worst = 0.0f64;
    for s in &flow.states {
        let j = s.jacobian();
        let prod = invert_jacobian(&j)?.mul(&j);
        for a in 0..2 {
            for b in 0..2 {
                let id = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((prod.0[a][b] - id).abs());
            }
        }
    }
    Ok(Check::new("inverse Jacobian Ja·J - I after 1e3 steps", worst, 1e-12))
}

fn expmv_dense() -> Result<Check> {
    let grid = PhaseGrid::centered(12, 10, 0.7, 0.7, (0.0, 0.0))?;
    let mut flow = FlowField::new(grid);
    let pot = Potential::quartic(1.5);
    flow.propagate(&pot, 0.01, 100)?;
    let params = DimensionlessParams::new(0.1, 0.2, pot)?;
    let op = build_operator(&StencilPattern::new(grid), &flow.states, &params, Scheme::Skew)?;
    let w = gaussian_initial(grid, &InitialState::default())?.values;
    let dt = 0.05;
    let (y, _) = expmv(&op, &w, dt, 1e-13)?;
    let exact = oracle::dense::apply(&oracle::dense::expm(&oracle::dense::to_dense(&op), dt), &w);
    let diff = y.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
    Ok(Check::new("expmv vs dense exponential", diff / norm, 1e-10))
}

fn wigner_marginal() -> Result<Check> {
    let psi = WaveFunction::gaussian(1024, 0.02, 0.0, 0.5, -1.0, 1.3);
    let w = oracle::wigner_transform(&psi, 1, 512, 8)?;
    let g = w.grid;
    let mut worst = 0.0f64;
    for i in 0..g.nx {
        let s: f64 = (0..g.np).map(|j| w.values[g.index(i, j)]).sum::<f64>() * g.hp;
        worst = worst.max((s - psi.psi[8 * i].norm_sqr()).abs());
    }
    Ok(Check::new("Wigner transform marginal vs |ψ|²", worst, 1e-6))
}

fn classical_mode() -> Result<Check> {
    let pot = Potential::quartic(2.0);
    let grid = PhaseGrid::centered(96, 96, 0.125, 0.125, (0.0, 0.0))?;
    let w = gaussian_initial(grid, &InitialState::default())?;
    let params = DimensionlessParams::new(0.0, 0.0, pot)?.classical();
    let cfg = StepperConfig { dt: 0.05, substeps: 5, ..Default::default() };
    let mut sim = SimulationState::new(params, cfg, w)?;
    sim.run_steps(60, 0, |_| Ok(()))?;
    let m = moments(&sim.wigner, &sim.flow)?;
    let e = classical_ensemble(&gaussian_samples(20_000, (0.0, 0.0), (1.0, 1.0), 7), &pot, 0.01, 300);
    let z = ((m.x2 - e.moments.x2) / e.stderr.x2).abs().max(((m.p2 - e.moments.p2) / e.stderr.p2).abs());
    Ok(Check::new("classical mode vs trajectory ensemble (standard errors)", z, 3.0))
}

/// Run every check.
pub fn verify_suite() -> Result<Vec<Check>> {
    Ok(vec![
        harmonic_closed()?,
        gaussian_moments()?,
        symplectic(&quartic_flow(10_000)?),
        inverse_identity(&quartic_flow(1_000)?)?,
        expmv_dense()?,
        wigner_marginal()?,
        classical_mode()?,
    ])
}

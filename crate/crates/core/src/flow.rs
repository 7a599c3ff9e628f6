//! Classical trajectories of every grid point and their derivatives with
//! respect to the initial conditions, up to third order.
//!
//! The whole 20-component hierarchy is advanced with one fourth-order Yoshida
//! drift/kick sequence. Kicks depend only on position-type components and
//! drifts only on momentum-type ones, so every substage of the hierarchy sees
//! the lower-order values of that same substage and the derivatives are the
//! exact derivatives of the discrete map.

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::PhaseGrid;
use crate::inverse::{Hessian2, Jacobian2, Third2};
use crate::units::Potential;

/// Trajectories beyond this magnitude are reported as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Fourth-order Yoshida composition of drift/kick substeps.
pub mod yoshida {
    /// `w₁ = 1/(2 - 2^{1/3})`.
    pub const W1: f64 = 1.351_207_191_959_657_8;
    /// `w₀ = -2^{1/3}/(2 - 2^{1/3})`.
    pub const W0: f64 = -1.702_414_383_919_315_3;
    pub const DRIFT: [f64; 4] = [0.5 * W1, 0.5 * (W0 + W1), 0.5 * (W0 + W1), 0.5 * W1];
    pub const KICK: [f64; 3] = [W1, W0, W1];
}

/// A trajectory and its derivatives with respect to `(x₀, p₀)`.
///
/// Symmetric derivative blocks are indexed by the number of `p₀`
/// derivatives: `d2x = [∂²x/∂x₀², ∂²x/∂x₀∂p₀, ∂²x/∂p₀²]` and
/// `d3x = [∂³x/∂x₀³, ∂³x/∂x₀²∂p₀, ∂³x/∂x₀∂p₀², ∂³x/∂p₀³]`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct FlowState {
    pub x: f64,
    pub p: f64,
    /// `[∂x/∂x₀, ∂x/∂p₀]`
    pub dx: [f64; 2],
    /// `[∂p/∂x₀, ∂p/∂p₀]`
    pub dp: [f64; 2],
    pub d2x: [f64; 3],
    pub d2p: [f64; 3],
    pub d3x: [f64; 4],
    pub d3p: [f64; 4],
}

impl FlowState {
    pub fn initial(x: f64, p: f64) -> Self {
        Self {
            x,
            p,
            dx: [1.0, 0.0],
            dp: [0.0, 1.0],
            ..Default::default()
        }
    }

    pub fn jacobian(&self) -> Jacobian2 {
        Jacobian2([self.dx, self.dp])
    }

    pub fn hessian(&self) -> Hessian2 {
        Hessian2([self.d2x, self.d2p])
    }

    pub fn third(&self) -> Third2 {
        Third2([self.d3x, self.d3p])
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.p.is_finite()
            && self.dx.iter().chain(&self.dp).all(|v| v.is_finite())
            && self.d2x.iter().chain(&self.d2p).all(|v| v.is_finite())
            && self.d3x.iter().chain(&self.d3p).all(|v| v.is_finite())
    }

    fn diverged(&self) -> bool {
        !self.is_finite() || self.x.abs() > DIVERGENCE_LIMIT || self.p.abs() > DIVERGENCE_LIMIT
    }

    /// All 20 scalars in a fixed order.
    pub fn to_array(&self) -> [f64; 20] {
        let mut a = [0.0; 20];
        a[0] = self.x;
        a[1] = self.p;
        a[2..4].copy_from_slice(&self.dx);
        a[4..6].copy_from_slice(&self.dp);
        a[6..9].copy_from_slice(&self.d2x);
        a[9..12].copy_from_slice(&self.d2p);
        a[12..16].copy_from_slice(&self.d3x);
        a[16..20].copy_from_slice(&self.d3p);
        a
    }

    pub fn from_array(a: &[f64; 20]) -> Self {
        let mut s = Self { x: a[0], p: a[1], ..Default::default() };
        s.dx.copy_from_slice(&a[2..4]);
        s.dp.copy_from_slice(&a[4..6]);
        s.d2x.copy_from_slice(&a[6..9]);
        s.d2p.copy_from_slice(&a[9..12]);
        s.d3x.copy_from_slice(&a[12..16]);
        s.d3p.copy_from_slice(&a[16..20]);
        s
    }

    #[inline]
    fn drift(&mut self, dt: f64) {
        self.x += dt * self.p;
        for k in 0..2 {
            self.dx[k] += dt * self.dp[k];
        }
        for k in 0..3 {
            self.d2x[k] += dt * self.d2p[k];
        }
        for k in 0..4 {
            self.d3x[k] += dt * self.d3p[k];
        }
    }

    #[inline]
    fn kick(&mut self, potential: &Potential, dt: f64) {
        let rate = momentum_rates(self, potential);
        self.p += dt * rate.p;
        for k in 0..2 {
            self.dp[k] += dt * rate.dp[k];
        }
        for k in 0..3 {
            self.d2p[k] += dt * rate.d2p[k];
        }
        for k in 0..4 {
            self.d3p[k] += dt * rate.d3p[k];
        }
    }
}

/// Rates of the momentum-type components; only position-type components are read.
#[inline]
fn momentum_rates(s: &FlowState, potential: &Potential) -> FlowState {
    let [u1, u2, u3, u4] = potential.internal_derivs(s.x);
    let [a, b] = s.dx;
    let [aa, ab, bb] = s.d2x;
    let [aaa, aab, abb, bbb] = s.d3x;
    FlowState {
        p: -u1,
        dp: [-u2 * a, -u2 * b],
        d2p: [
            -(u3 * a * a + u2 * aa),
            -(u3 * a * b + u2 * ab),
            -(u3 * b * b + u2 * bb),
        ],
        d3p: [
            -(u4 * a * a * a + 3.0 * u3 * a * aa + u2 * aaa),
            -(u4 * a * a * b + u3 * (aa * b + 2.0 * a * ab) + u2 * aab),
            -(u4 * a * b * b + u3 * (bb * a + 2.0 * b * ab) + u2 * abb),
            -(u4 * b * b * b + 3.0 * u3 * b * bb + u2 * bbb),
        ],
        ..Default::default()
    }
}

/// Time derivative of every component of the hierarchy (unit mass).
pub fn hierarchy_rhs(state: &FlowState, potential: &Potential) -> FlowState {
    let mut rate = momentum_rates(state, potential);
    rate.x = state.p;
    rate.dx = state.dp;
    rate.d2x = state.d2p;
    rate.d3x = state.d3p;
    rate
}

/// One fourth-order Yoshida step of the full hierarchy. Negative `dt`
/// integrates backwards.
#[inline]
pub fn yoshida_step(state: &FlowState, potential: &Potential, dt: f64) -> FlowState {
    let mut s = *state;
    s.drift(yoshida::DRIFT[0] * dt);
    for stage in 0..3 {
        s.kick(potential, yoshida::KICK[stage] * dt);
        s.drift(yoshida::DRIFT[stage + 1] * dt);
    }
    s
}

/// Yoshida step of the bare trajectory, without derivatives.
#[inline]
pub fn yoshida_point(mut x: f64, mut p: f64, potential: &Potential, dt: f64) -> (f64, f64) {
    x += yoshida::DRIFT[0] * dt * p;
    for stage in 0..3 {
        p += yoshida::KICK[stage] * dt * potential.force(x);
        x += yoshida::DRIFT[stage + 1] * dt * p;
    }
    (x, p)
}

/// Integrate a bare trajectory over `tau` (either sign) in `steps` equal steps.
pub fn propagate_point(u: f64, v: f64, potential: &Potential, tau: f64, steps: usize) -> Result<(f64, f64)> {
    if steps == 0 || tau == 0.0 {
        return Ok((u, v));
    }
    let dt = tau / steps as f64;
    let (mut x, mut p) = (u, v);
    for _ in 0..steps {
        (x, p) = yoshida_point(x, p, potential, dt);
    }
    if !(x.is_finite() && p.is_finite()) || x.abs() > DIVERGENCE_LIMIT || p.abs() > DIVERGENCE_LIMIT {
        return Err(Error::Diverged { index: 0, time: tau });
    }
    Ok((x, p))
}

/// Point reached by following the classical flow backwards for `tau >= 0`.
pub fn backward_point(point: (f64, f64), potential: &Potential, tau: f64, steps: usize) -> Result<(f64, f64)> {
    if tau < 0.0 {
        return Err(Error::Parameter(format!("backward time must be non-negative, got {tau}")));
    }
    propagate_point(point.0, point.1, potential, -tau, steps)
}

/// One [`FlowState`] per grid point, in Wigner-vector order.
#[derive(Clone, Debug)]
pub struct FlowField {
    pub grid: PhaseGrid,
    pub states: Vec<FlowState>,
    pub time: f64,
}

impl FlowField {
    pub fn new(grid: PhaseGrid) -> Self {
        let states = exec::map_range(grid.len(), |k| {
            let (u, v) = grid.point(k);
            FlowState::initial(u, v)
        });
        Self { grid, states, time: 0.0 }
    }

    /// Advance every grid point by `n_steps` Yoshida steps of size `dt`.
    pub fn propagate(&mut self, potential: &Potential, dt: f64, n_steps: usize) -> Result<()> {
        if n_steps == 0 {
            return Ok(());
        }
        exec::for_each_mut(&mut self.states, |_, s| {
            let mut cur = *s;
            for _ in 0..n_steps {
                cur = yoshida_step(&cur, potential, dt);
            }
            *s = cur;
        });
        self.time += dt * n_steps as f64;
        match self.states.iter().position(FlowState::diverged) {
            Some(index) => Err(Error::Diverged { index, time: self.time }),
            None => Ok(()),
        }
    }

    /// Largest `|det J - 1|` over the grid.
    pub fn max_det_deviation(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (s.jacobian().det() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

use crate::error::{Error, Result};
use crate::observables::Moments;
use crate::units::DimensionlessParams;

use super::ode::dopri5;

/// Exact moment dynamics for a quadratic potential `U = a u + k u²/2` (internal
/// units), damping `γ` and momentum diffusion `D`. The moment hierarchy closes
/// at second order because the Moyal term vanishes.
pub fn gaussian_moment_ode(params: &DimensionlessParams, initial: Moments, tau: f64) -> Result<Moments> {
    if !params.potential.is_quadratic() {
        return Err(Error::Parameter("moment equations close only for quadratic potentials".into()));
    }
    let [c1, c2, _, _] = params.potential.coeffs;
    let (a, k) = (2.0 * c1, 4.0 * c2);
    let (g, d) = (params.gamma, params.diffusion());
    let rhs = move |_: f64, y: &[f64; 5]| {
        let [mx, mp, x2, xp, p2] = *y;
        // xp = ⟨{x,p}⟩/2
        [
            mp,
            -a - k * mx - g * mp,
            2.0 * xp,
            p2 - a * mx - k * x2 - g * xp,
            -2.0 * a * mp - 2.0 * k * xp - 2.0 * g * p2 + 2.0 * d,
        ]
    };
    let y0 = [initial.mean_x, initial.mean_p, initial.x2, 0.5 * initial.xp_sym, initial.p2];
    let y = dopri5(rhs, y0, 0.0, tau, 1e-12, 1e-14);
    Ok(Moments { mean_x: y[0], mean_p: y[1], x2: y[2], p2: y[4], xp_sym: 2.0 * y[3] })
}

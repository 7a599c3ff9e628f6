//! Lab-frame observables of a Liouville-frame state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::flow::{self, FlowField};
use crate::grid::PhaseGrid;
use crate::stepper::WignerField;
use crate::units::{Potential, HBAR};

/// Phase-space moments in internal units (`x_zpf`, `p_zpf`).
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Moments {
    pub mean_x: f64,
    pub mean_p: f64,
    pub x2: f64,
    pub p2: f64,
    /// `⟨xp + px⟩`
    pub xp_sym: f64,
}

impl Moments {
    pub fn var_x(&self) -> f64 {
        self.x2 - self.mean_x * self.mean_x
    }

    pub fn var_p(&self) -> f64 {
        self.p2 - self.mean_p * self.mean_p
    }

    /// `⟨{x,p}⟩/ħ`.
    pub fn xp_over_hbar(&self) -> f64 {
        self.xp_sym / HBAR
    }

    /// `(√⟨x²⟩/(η x_zpf), √⟨p²⟩/p_zpf, ⟨{x,p}⟩/(η ħ))`.
    pub fn scaled(&self, eta: f64) -> [f64; 3] {
        [self.x2.sqrt() / eta, self.p2.sqrt(), self.xp_over_hbar() / eta]
    }
}

/// Moments through the forward map: the flow preserves phase-space volume, so
/// `⟨f⟩ = Σ f(x_cl, p_cl) W̃ h_x h_p` on the fixed grid.
pub fn moments(w: &WignerField, flow: &FlowField) -> Result<Moments> {
    if w.values.len() != flow.states.len() {
        return Err(Error::Dimension { expected: flow.states.len(), got: w.values.len() });
    }
    let n = w.values.len();
    let s = &flow.states;
    let wv = &w.values;
    let norm = exec::sum_range(n, |k| wv[k]);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateState);
    }
    let m = |f: &(dyn Fn(f64, f64) -> f64 + Sync)| exec::sum_range(n, |k| f(s[k].x, s[k].p) * wv[k]) / norm;
    Ok(Moments {
        mean_x: m(&|x, _| x),
        mean_p: m(&|_, p| p),
        x2: m(&|x, _| x * x),
        p2: m(&|_, p| p * p),
        xp_sym: m(&|x, p| 2.0 * x * p),
    })
}

/// Moments of a field sampled on a regular lab-frame grid.
pub fn field_moments(w: &WignerField) -> Result<Moments> {
    let g = w.grid;
    let wv = &w.values;
    let n = wv.len();
    let norm = exec::sum_range(n, |k| wv[k]);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateState);
    }
    let m = |f: &(dyn Fn(f64, f64) -> f64 + Sync)| {
        exec::sum_range(n, |k| {
            let (x, p) = g.point(k);
            f(x, p) * wv[k]
        }) / norm
    };
    Ok(Moments {
        mean_x: m(&|x, _| x),
        mean_p: m(&|_, p| p),
        x2: m(&|x, _| x * x),
        p2: m(&|_, p| p * p),
        xp_sym: m(&|x, p| 2.0 * x * p),
    })
}

/// Singular values `(λ⁺, λ⁻)` of a 2×2 matrix.
pub fn singular_values(m: [[f64; 2]; 2]) -> (f64, f64) {
    let f = m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1];
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs();
    let disc = ((f - 2.0 * det) * (f + 2.0 * det)).max(0.0).sqrt();
    let hi = (0.5 * (f + disc)).sqrt();
    let lo = if hi > 0.0 { det / hi } else { 0.0 };
    (hi, lo)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridDensity {
    pub largest: Vec<f64>,
    pub smallest: Vec<f64>,
    /// `λ(t) = min λ⁻` over the grid.
    pub lambda: f64,
}

/// Singular values of the dimensionless flow Jacobian at every grid point. In
/// internal units the zero-point rescaling of the off-diagonal entries is the
/// identity.
pub fn grid_density(flow: &FlowField) -> GridDensity {
    let sv: Vec<(f64, f64)> = exec::map_range(flow.states.len(), |k| singular_values(flow.states[k].jacobian().0));
    let lambda = sv.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let (largest, smallest) = sv.into_iter().unzip();
    GridDensity { largest, smallest, lambda }
}

/// `λ(t)` without keeping the per-point values.
pub fn min_singular_value(flow: &FlowField) -> f64 {
    flow.states
        .iter()
        .map(|s| singular_values(s.jacobian().0).1)
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResampleReport {
    /// Target points whose backward trajectory diverged; their value is 0.
    pub failed: Vec<usize>,
}

/// Lab-frame field on `target` from the Liouville-frame field `w` at time
/// `tau`: `W(x, p) = W̃(Φ(x, p, -τ))`, bilinear on the source grid and zero
/// outside it.
pub fn resample_lab_frame(
    w: &WignerField,
    potential: &Potential,
    tau: f64,
    steps: usize,
    target: PhaseGrid,
) -> (WignerField, ResampleReport) {
    let src = w.grid;
    let vals: Vec<Option<f64>> = exec::map_range(target.len(), |k| {
        let pt = target.point(k);
        match flow::backward_point(pt, potential, tau, steps) {
            Ok((u, v)) => Some(src.interpolate(&w.values, u, v)),
            Err(_) => None,
        }
    });
    let mut report = ResampleReport::default();
    let values = vals
        .into_iter()
        .enumerate()
        .map(|(k, v)| {
            v.unwrap_or_else(|| {
                report.failed.push(k);
                0.0
            })
        })
        .collect();
    if !report.failed.is_empty() {
        log::warn!("{} target points diverged during backward propagation", report.failed.len());
    }
    (WignerField { grid: target, values, time: tau }, report)
}

/// Number of backward steps matching a forward step density.
pub fn backward_steps(tau: f64, dt_flow: f64) -> usize {
    (tau / dt_flow).ceil().max(1.0) as usize
}

/// Position distribution sampled on a regular `x` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<f64>,
}

impl Marginal {
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    /// `∫ P dx` by the trapezoidal rule.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.dx)
    }
}

fn trapezoid(v: &[f64], h: f64) -> f64 {
    match v.len() {
        0 | 1 => 0.0,
        n => h * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[n - 1])),
    }
}

/// `P(x) = ∫ W(x, p) dp` column by column.
pub fn position_marginal(w_lab: &WignerField) -> Marginal {
    let g = w_lab.grid;
    let values = (0..g.nx)
        .map(|i| trapezoid(&w_lab.values[g.index(i, 0)..g.index(i, 0) + g.np], g.hp))
        .collect();
    Marginal { x0: g.x0, dx: g.hx, values }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interference {
    /// Distance between the largest peak and its nearest neighbouring peak.
    pub x_f: f64,
    pub visibility: f64,
    pub x_max: f64,
    pub p_max: f64,
    pub p_min: f64,
}

/// Local maxima are kept above this fraction of the global maximum.
pub const PEAK_FLOOR: f64 = 1e-6;

/// Maxima separated by a dip shallower than this fraction of the global
/// maximum are treated as one peak, so grid-scale ripple is not a fringe.
pub const PEAK_PROMINENCE: f64 = 0.02;

/// Interior local maxima after merging neighbours joined by shallow dips.
fn prominent_maxima(v: &[f64], gmax: f64) -> Vec<usize> {
    let mut maxima: Vec<usize> = (1..v.len() - 1).filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1]).collect();
    // dips[k] is the lowest value between maxima[k] and maxima[k + 1]
    let mut dips: Vec<f64> = maxima
        .windows(2)
        .map(|w| v[w[0]..=w[1]].iter().cloned().fold(f64::INFINITY, f64::min))
        .collect();
    loop {
        let shallow = (0..dips.len())
            .map(|k| {
                let low = v[maxima[k]].min(v[maxima[k + 1]]);
                (k, (low - dips[k]) / gmax)
            })
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let Some((k, depth)) = shallow else { break };
        if depth >= PEAK_PROMINENCE {
            break;
        }
        // drop the lower maximum and keep the deeper of its two dips
        let drop = if v[maxima[k]] < v[maxima[k + 1]] { k } else { k + 1 };
        maxima.remove(drop);
        if drop > 0 && drop < dips.len() {
            dips[drop - 1] = dips[drop - 1].min(dips[drop]);
            dips.remove(drop);
        } else if drop == 0 {
            dips.remove(0);
        } else {
            dips.remove(drop - 1);
        }
    }
    maxima
}

/// Vertex `(offset, value)` of the parabola through three equally spaced samples.
fn parabola(l: f64, c: f64, r: f64) -> (f64, f64) {
    let curv = l - 2.0 * c + r;
    if curv == 0.0 {
        return (0.0, c);
    }
    let d = (0.5 * (l - r) / curv).clamp(-1.0, 1.0);
    (d, c - 0.25 * (l - r) * d)
}

/// Peak separation and visibility of the largest interference maximum.
pub fn interference_metrics(p: &Marginal) -> Result<Interference> {
    let v = &p.values;
    if v.len() < 3 {
        return Err(Error::NoInterference);
    }
    let gmax = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(gmax > 0.0) {
        return Err(Error::NoInterference);
    }
    let floor = PEAK_FLOOR * gmax;
    let peaks: Vec<(f64, f64, usize)> = prominent_maxima(v, gmax)
        .into_iter()
        .filter(|&i| v[i] > floor)
        .map(|i| {
            let (d, val) = parabola(v[i - 1], v[i], v[i + 1]);
            (p.x(i) + d * p.dx, val, i)
        })
        .collect();
    if peaks.len() < 2 {
        return Err(Error::NoInterference);
    }
    let top = peaks
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| {
            a.1.partial_cmp(&b.1)
                .unwrap()
                .then_with(|| b.0.abs().partial_cmp(&a.0.abs()).unwrap())
        })
        .map(|(n, _)| n)
        .unwrap();
    let (x_top, val_top, i_top) = peaks[top];
    let neighbour = peaks
        .iter()
        .enumerate()
        .filter(|(n, _)| *n != top)
        .min_by(|(_, a), (_, b)| {
            (a.0 - x_top)
                .abs()
                .partial_cmp(&(b.0 - x_top).abs())
                .unwrap()
                .then_with(|| b.1.partial_cmp(&a.1).unwrap())
        })
        .map(|(_, q)| *q)
        .unwrap();
    let (lo, hi) = if neighbour.2 < i_top { (neighbour.2, i_top) } else { (i_top, neighbour.2) };
    let i_min = (lo..=hi)
        .min_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap())
        .unwrap();
    let p_min = if i_min > lo && i_min < hi {
        parabola(v[i_min - 1], v[i_min], v[i_min + 1]).1
    } else {
        v[i_min]
    };
    Ok(Interference {
        x_f: (x_top - neighbour.0).abs(),
        visibility: (val_top - p_min) / (val_top + p_min),
        x_max: x_top,
        p_max: val_top,
        p_min,
    })
}

/// Least-squares fit of `y = a·x^b` in log space, returning `(a, b)`.
pub fn power_law_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = sxy / sxx;
    ((my - b * mx).exp(), b)
}

//! PDE coefficients in the Liouville frame and their 13-point finite-difference
//! discretisation.
//!
//! In the co-moving frame the Wigner function obeys
//! `∂W̃/∂τ = Σ_{n+m≤3} g_nm(u, v, τ) ∂ⁿ⁺ᵐW̃/∂uⁿ∂vᵐ`, where the coefficients
//! follow from conjugating the noise and Moyal terms with the classical flow.
//! Derivatives are replaced with second-order centred differences on a
//! periodic grid.

use std::io::Write;
use std::ops::Add;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::flow::FlowState;
use crate::grid::PhaseGrid;
use crate::inverse::InverseDerivs;
use crate::units::DimensionlessParams;

/// Stencil offsets `(di, dj)` in slot order.
pub const STENCIL: [(isize, isize); 13] = [
    (0, 0),
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (-1, -1),
    (-1, 1),
    (1, -1),
    (2, 0),
    (-2, 0),
    (0, 2),
    (0, -2),
];

/// Slot of the negated offset, so that entry `(k, col_s)` and `(col_s, k)` pair up.
pub const OPPOSITE: [usize; 13] = [0, 2, 1, 4, 3, 6, 5, 8, 7, 10, 9, 12, 11];

/// How the Moyal block of `D` is discretised.
///
/// `Pointwise` multiplies each centred difference by the coefficient at the row
/// point. In the Liouville frame the Moyal block is skew-adjoint, but the
/// pointwise form is not, and near the grid cutoff the mismatch acts as
/// anti-diffusion with rate `~|U'''| X₁²|X₂|/h²`. `Skew` keeps only the
/// skew-symmetric part `(A - Aᵀ)/2` of that block, which has the same stencil
/// and the same second-order consistency. Noise terms stay pointwise in both.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Pointwise,
    #[default]
    Skew,
}

/// Coefficients of `∂ⁿ⁺ᵐ/∂uⁿ∂vᵐ`, named `g{n}{m}`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct GCoeffs {
    pub g00: f64,
    pub g10: f64,
    pub g01: f64,
    pub g20: f64,
    pub g02: f64,
    pub g11: f64,
    pub g30: f64,
    pub g03: f64,
    pub g21: f64,
    pub g12: f64,
}

impl GCoeffs {
    pub fn is_finite(&self) -> bool {
        [
            self.g00, self.g10, self.g01, self.g20, self.g02, self.g11, self.g30, self.g03,
            self.g21, self.g12,
        ]
        .iter()
        .all(|g| g.is_finite())
    }
}

impl Add for GCoeffs {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            g00: self.g00 + o.g00,
            g10: self.g10 + o.g10,
            g01: self.g01 + o.g01,
            g20: self.g20 + o.g20,
            g02: self.g02 + o.g02,
            g11: self.g11 + o.g11,
            g30: self.g30 + o.g30,
            g03: self.g03 + o.g03,
            g21: self.g21 + o.g21,
            g12: self.g12 + o.g12,
        }
    }
}

/// Conjugated generator at one grid point.
///
/// The Moyal term `-(ħ²/24) U'''(x) ∂³/∂p³` and the noise
/// `γ(1 + p ∂/∂p) + D ∂²/∂p²` are rewritten with the chain rule for `∂/∂p`
/// under the flow, e.g. `∂²/∂p² → X₂∂u + P₂∂v + X₁²∂u² + 2X₁P₁∂u∂v + P₁²∂v²`.
pub fn g_coefficients(flow: &FlowState, inv: &InverseDerivs, params: &DimensionlessParams) -> GCoeffs {
    let (noise, quantum) = g_split(flow, inv, params);
    noise + quantum
}

/// Noise and Moyal contributions to the coefficients, separately.
pub fn g_split(flow: &FlowState, inv: &InverseDerivs, params: &DimensionlessParams) -> (GCoeffs, GCoeffs) {
    let InverseDerivs { x1, p1, x2, p2, x3, p3 } = *inv;
    let gamma = params.gamma;
    let d = params.diffusion();
    let u3 = params.potential.internal_derivs(flow.x)[2];
    let q = -params.hbar * params.hbar / 24.0 * u3;
    let noise = GCoeffs {
        g00: gamma,
        g10: gamma * flow.p * x1 + d * x2,
        g01: gamma * flow.p * p1 + d * p2,
        g20: d * x1 * x1,
        g02: d * p1 * p1,
        g11: 2.0 * d * x1 * p1,
        ..Default::default()
    };
    let quantum = GCoeffs {
        g10: q * x3,
        g01: q * p3,
        g20: 3.0 * q * x1 * x2,
        g02: 3.0 * q * p1 * p2,
        g11: 3.0 * q * (x1 * p2 + p1 * x2),
        g30: q * x1 * x1 * x1,
        g03: q * p1 * p1 * p1,
        g21: 3.0 * q * x1 * x1 * p1,
        g12: 3.0 * q * x1 * p1 * p1,
        ..Default::default()
    };
    (noise, quantum)
}

/// The 13 row entries for coefficients `g`, in [`STENCIL`] order.
#[inline]
pub fn stencil_row(g: &GCoeffs, hx: f64, hp: f64) -> [f64; 13] {
    let (a, b) = (1.0 / hx, 1.0 / hp);
    let (a2, b2) = (a * a, b * b);
    let (a3, b3) = (a2 * a, b2 * b);
    let ab = a * b;
    let a2b = a2 * b;
    let ab2 = a * b2;
    [
        g.g00 - 2.0 * a2 * g.g20 - 2.0 * b2 * g.g02,
        0.5 * a * g.g10 + a2 * g.g20 - a3 * g.g30 - ab2 * g.g12,
        -0.5 * a * g.g10 + a2 * g.g20 + a3 * g.g30 + ab2 * g.g12,
        0.5 * b * g.g01 + b2 * g.g02 - b3 * g.g03 - a2b * g.g21,
        -0.5 * b * g.g01 + b2 * g.g02 + b3 * g.g03 + a2b * g.g21,
        0.25 * ab * g.g11 + 0.5 * a2b * g.g21 + 0.5 * ab2 * g.g12,
        0.25 * ab * g.g11 - 0.5 * a2b * g.g21 - 0.5 * ab2 * g.g12,
        -0.25 * ab * g.g11 + 0.5 * a2b * g.g21 - 0.5 * ab2 * g.g12,
        -0.25 * ab * g.g11 - 0.5 * a2b * g.g21 + 0.5 * ab2 * g.g12,
        0.5 * a3 * g.g30,
        -0.5 * a3 * g.g30,
        0.5 * b3 * g.g03,
        -0.5 * b3 * g.g03,
    ]
}

/// Column indices of every row; depends only on the grid.
#[derive(Debug)]
pub struct StencilPattern {
    pub grid: PhaseGrid,
    pub cols: Vec<[u32; 13]>,
}

impl StencilPattern {
    pub fn new(grid: PhaseGrid) -> Arc<Self> {
        let cols = exec::map_range(grid.len(), |k| {
            let (i, j) = grid.split(k);
            STENCIL.map(|(di, dj)| grid.wrap(i, j, di, dj) as u32)
        });
        Arc::new(Self { grid, cols })
    }
}

/// `N×N` matrix with fixed 13-slot rows (zero-padded).
#[derive(Clone, Debug)]
pub struct SparseOperator {
    pub pattern: Arc<StencilPattern>,
    pub vals: Vec<[f64; 13]>,
    /// Set when the assembly guarantees `Dᵀ = -D` exactly.
    pub antisymmetric: bool,
}

impl SparseOperator {
    pub fn zeros(pattern: Arc<StencilPattern>) -> Self {
        let n = pattern.cols.len();
        Self { pattern, vals: vec![[0.0; 13]; n], antisymmetric: true }
    }

    pub fn dim(&self) -> usize {
        self.vals.len()
    }

    /// Number of stored entries with a nonzero value.
    pub fn nnz(&self) -> usize {
        self.vals.iter().flatten().filter(|v| **v != 0.0).count()
    }

    pub fn is_zero(&self) -> bool {
        self.vals.iter().flatten().all(|v| *v == 0.0)
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.vals
            .iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `y = D x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let cols = &self.pattern.cols;
        let vals = &self.vals;
        exec::for_each_mut(y, |k, out| {
            let c = &cols[k];
            let v = &vals[k];
            let mut acc = 0.0;
            for s in 0..13 {
                acc += v[s] * x[c[s] as usize];
            }
            *out = acc;
        });
    }

    /// Dense value of entry `(row, col)`; duplicate slots are summed.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let c = &self.pattern.cols[row];
        (0..13).filter(|&s| c[s] as usize == col).map(|s| self.vals[row][s]).sum()
    }

    /// Coordinate text dump, one `row col value` line per nonzero entry.
    pub fn write_coo<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (k, (row, cols)) in self.vals.iter().zip(&self.pattern.cols).enumerate() {
            for s in 0..13 {
                if row[s] != 0.0 {
                    writeln!(w, "{} {} {:.17e}", k, cols[s], row[s])?;
                }
            }
        }
        Ok(())
    }
}

/// Build `D` from per-point coefficients.
pub fn assemble_operator(pattern: &Arc<StencilPattern>, g: &[GCoeffs]) -> Result<SparseOperator> {
    let grid = pattern.grid;
    if g.len() != grid.len() {
        return Err(Error::Dimension { expected: grid.len(), got: g.len() });
    }
    if let Some(index) = g.iter().position(|c| !c.is_finite()) {
        return Err(Error::Assembly { index });
    }
    let vals = exec::map_range(g.len(), |k| stencil_row(&g[k], grid.hx, grid.hp));
    Ok(SparseOperator { pattern: Arc::clone(pattern), vals, antisymmetric: false })
}

/// Coefficient field for every grid point of a flow field.
pub fn g_field(states: &[FlowState], params: &DimensionlessParams) -> Result<Vec<GCoeffs>> {
    let (noise, quantum) = g_field_split(states, params)?;
    Ok(noise.into_iter().zip(quantum).map(|(a, b)| a + b).collect())
}

/// Noise and Moyal coefficient fields.
pub fn g_field_split(states: &[FlowState], params: &DimensionlessParams) -> Result<(Vec<GCoeffs>, Vec<GCoeffs>)> {
    let out: Vec<Result<(GCoeffs, GCoeffs)>> = exec::map_range(states.len(), |k| {
        let inv = InverseDerivs::from_flow(&states[k])?;
        Ok(g_split(&states[k], &inv, params))
    });
    Ok(out.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip())
}

/// `D = N + (Q - Qᵀ)/2` with `N`, `Q` the pointwise noise and Moyal blocks.
pub fn assemble_skew(pattern: &Arc<StencilPattern>, noise: &[GCoeffs], quantum: &[GCoeffs]) -> Result<SparseOperator> {
    let n = assemble_operator(pattern, noise)?;
    let q = assemble_operator(pattern, quantum)?;
    let cols = &pattern.cols;
    let vals = exec::map_range(n.dim(), |k| {
        let mut row = n.vals[k];
        for s in 0..13 {
            let c = cols[k][s] as usize;
            row[s] += 0.5 * (q.vals[k][s] - q.vals[c][OPPOSITE[s]]);
        }
        row
    });
    let antisymmetric = noise.iter().all(|g| *g == GCoeffs::default());
    Ok(SparseOperator { pattern: Arc::clone(pattern), vals, antisymmetric })
}

/// `D` for a flow field under the chosen discretisation.
pub fn build_operator(
    pattern: &Arc<StencilPattern>,
    states: &[FlowState],
    params: &DimensionlessParams,
    scheme: Scheme,
) -> Result<SparseOperator> {
    match scheme {
        Scheme::Pointwise => assemble_operator(pattern, &g_field(states, params)?),
        Scheme::Skew => {
            let (noise, quantum) = g_field_split(states, params)?;
            assemble_skew(pattern, &noise, &quantum)
        }
    }
}

/// Noise part and skew-symmetrised Moyal part of the [`Scheme::Skew`] operator,
/// for propagators that treat them separately. Their sum is [`build_operator`].
pub fn build_split(
    pattern: &Arc<StencilPattern>,
    states: &[FlowState],
    params: &DimensionlessParams,
) -> Result<(SparseOperator, SparseOperator)> {
    let (noise, quantum) = g_field_split(states, params)?;
    let zero = vec![GCoeffs::default(); noise.len()];
    Ok((assemble_operator(pattern, &noise)?, assemble_skew(pattern, &zero, &quantum)?))
}

/// Fraction of `Σ|W|` within two cells of any grid edge.
pub fn boundary_fraction(grid: &PhaseGrid, w: &[f64]) -> f64 {
    let mut edge = 0.0;
    let mut total = 0.0;
    for i in 0..grid.nx {
        let near_i = i < 2 || i + 2 >= grid.nx;
        for j in 0..grid.np {
            let a = w[grid.index(i, j)].abs();
            total += a;
            if near_i || j < 2 || j + 2 >= grid.np {
                edge += a;
            }
        }
    }
    if total > 0.0 { edge / total } else { 0.0 }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regular rectangular phase-space lattice, `(u_i, v_j) = (u₀ + i h_u, v₀ + j h_v)`,
/// flattened as `k = i·n_p + j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub nx: usize,
    pub np: usize,
    pub hx: f64,
    pub hp: f64,
    pub x0: f64,
    pub p0: f64,
}

impl PhaseGrid {
    pub fn new(nx: usize, np: usize, hx: f64, hp: f64, x0: f64, p0: f64) -> Result<Self> {
        if nx < 8 || np < 8 {
            return Err(Error::Parameter(format!(
                "grid needs at least 8 points per axis, got {nx}x{np}"
            )));
        }
        if !(hx > 0.0 && hp > 0.0 && hx.is_finite() && hp.is_finite()) {
            return Err(Error::Parameter(format!("grid spacings must be positive, got {hx}, {hp}")));
        }
        if !(x0.is_finite() && p0.is_finite()) {
            return Err(Error::Parameter("grid origin must be finite".into()));
        }
        Ok(Self { nx, np, hx, hp, x0, p0 })
    }

    /// Grid whose points are placed symmetrically about `center`.
    pub fn centered(nx: usize, np: usize, hx: f64, hp: f64, center: (f64, f64)) -> Result<Self> {
        let x0 = center.0 - 0.5 * (nx as f64 - 1.0) * hx;
        let p0 = center.1 - 0.5 * (np as f64 - 1.0) * hp;
        Self::new(nx, np, hx, hp, x0, p0)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.np
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.np + j
    }

    #[inline]
    pub fn split(&self, k: usize) -> (usize, usize) {
        (k / self.np, k % self.np)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx
    }

    #[inline]
    pub fn p(&self, j: usize) -> f64 {
        self.p0 + j as f64 * self.hp
    }

    #[inline]
    pub fn point(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.split(k);
        (self.x(i), self.p(j))
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hp
    }

    /// Neighbour index with periodic identification `i = n_x ≡ 0`, `j = n_p ≡ 0`.
    #[inline]
    pub fn wrap(&self, i: usize, j: usize, di: isize, dj: isize) -> usize {
        let ii = (i as isize + di).rem_euclid(self.nx as isize) as usize;
        let jj = (j as isize + dj).rem_euclid(self.np as isize) as usize;
        self.index(ii, jj)
    }

    /// Bilinear interpolation of `values` at `(u, v)`; zero outside the grid.
    pub fn interpolate(&self, values: &[f64], u: f64, v: f64) -> f64 {
        let fx = (u - self.x0) / self.hx;
        let fp = (v - self.p0) / self.hp;
        if !(fx >= 0.0 && fp >= 0.0) {
            return 0.0;
        }
        let (i, j) = (fx.floor() as usize, fp.floor() as usize);
        if i + 1 >= self.nx || j + 1 >= self.np {
            // exactly on the far edge
            if i + 1 == self.nx && fx == (self.nx - 1) as f64 && j < self.np {
                let tj = fp - j as f64;
                let a = values[self.index(i, j)];
                let b = if j + 1 < self.np { values[self.index(i, j + 1)] } else { a };
                return a + tj * (b - a);
            }
            if j + 1 == self.np && fp == (self.np - 1) as f64 && i < self.nx {
                let ti = fx - i as f64;
                let a = values[self.index(i, j)];
                let b = if i + 1 < self.nx { values[self.index(i + 1, j)] } else { a };
                return a + ti * (b - a);
            }
            return 0.0;
        }
        let (ti, tj) = (fx - i as f64, fp - j as f64);
        let k = self.index(i, j);
        let w00 = values[k];
        let w01 = values[k + 1];
        let w10 = values[k + self.np];
        let w11 = values[k + self.np + 1];
        (1.0 - ti) * ((1.0 - tj) * w00 + tj * w01) + ti * ((1.0 - tj) * w10 + tj * w11)
    }
}

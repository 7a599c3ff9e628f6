//! Derivatives of the backward map from derivatives of the forward map.
//!
//! With `r = Φ(ρ, t)` the forward flow and `ρ = Φ(r, -t)` its inverse,
//! `Ja = J⁻¹` and the inverse Hessian and third-order tensors follow from
//! differentiating `Φ(Φ(r, -t), t) = r` twice and three times.
//!
//! Index 0 is position and index 1 is momentum. Lower indices of the symmetric
//! tensors are stored by how many of them are momentum indices.

use crate::error::{Error, Result};
use crate::flow::FlowState;

/// Inputs whose determinant deviates from one by more than this are rejected.
pub const DET_TOLERANCE: f64 = 1e-6;

/// `J[i][j] = ∂r_i/∂ρ_j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jacobian2(pub [[f64; 2]; 2]);

/// `H[i][j+k] = ∂²r_i/∂ρ_j∂ρ_k`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Hessian2(pub [[f64; 3]; 2]);

/// `T[i][j+k+l] = ∂³r_i/∂ρ_j∂ρ_k∂ρ_l`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Third2(pub [[f64; 4]; 2]);

impl Jacobian2 {
    pub const IDENTITY: Self = Self([[1.0, 0.0], [0.0, 1.0]]);

    #[inline]
    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = (&self.0, &other.0);
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self(out)
    }
}

impl Hessian2 {
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.0[i][j + k]
    }
}

impl Third2 {
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.0[i][j + k + l]
    }
}

/// Backward-map derivatives with respect to momentum that enter the PDE
/// coefficients: `X⁽ⁿ⁾ = ∂ⁿx̃/∂pⁿ`, `P⁽ⁿ⁾ = ∂ⁿp̃/∂pⁿ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseDerivs {
    pub x1: f64,
    pub p1: f64,
    pub x2: f64,
    pub p2: f64,
    pub x3: f64,
    pub p3: f64,
}

impl InverseDerivs {
    pub const IDENTITY: Self = Self { x1: 0.0, p1: 1.0, x2: 0.0, p2: 0.0, x3: 0.0, p3: 0.0 };

    pub fn from_flow(state: &FlowState) -> Result<Self> {
        let ja = invert_jacobian(&state.jacobian())?;
        let h = state.hessian();
        let he = inverse_hessian(&h, &ja);
        let te = inverse_third(&state.third(), &h, &he, &ja);
        Ok(extract_p_derivs(&ja, &he, &te))
    }
}

/// Closed-form inverse of a unit-determinant 2×2 matrix.
pub fn invert_jacobian(j: &Jacobian2) -> Result<Jacobian2> {
    let deviation = (j.det() - 1.0).abs();
    if !(deviation < DET_TOLERANCE) {
        return Err(Error::Symplecticity { deviation });
    }
    let m = &j.0;
    Ok(Jacobian2([[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]]))
}

/// `He^i_{jk} = -Σ H^n_{lm} Ja^i_n Ja^l_j Ja^m_k`.
pub fn inverse_hessian(h: &Hessian2, ja: &Jacobian2) -> Hessian2 {
    let a = &ja.0;
    // Contract the lower indices first: G^n_{jk} = Σ_{lm} H^n_{lm} Ja^l_j Ja^m_k.
    let mut g = [[0.0; 3]; 2];
    for n in 0..2 {
        for (slot, (j, k)) in [(0, 0), (0, 1), (1, 1)].into_iter().enumerate() {
            let mut acc = 0.0;
            for l in 0..2 {
                for m in 0..2 {
                    acc += h.get(n, l, m) * a[l][j] * a[m][k];
                }
            }
            g[n][slot] = acc;
        }
    }
    let mut out = [[0.0; 3]; 2];
    for i in 0..2 {
        for slot in 0..3 {
            out[i][slot] = -(a[i][0] * g[0][slot] + a[i][1] * g[1][slot]);
        }
    }
    Hessian2(out)
}

/// `Te^i_{jkα} = -Σ T^n_{lmβ} Ja^i_n Ja^l_j Ja^m_k Ja^β_α
///   - Σ H^n_{lm} Ja^i_n (He^l_{jk} Ja^m_α + He^l_{jα} Ja^m_k + He^l_{kα} Ja^m_j)`.
pub fn inverse_third(t: &Third2, h: &Hessian2, he: &Hessian2, ja: &Jacobian2) -> Third2 {
    let a = &ja.0;
    const TRIPLES: [(usize, usize, usize); 4] = [(0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1)];
    let mut g = [[0.0; 4]; 2];
    for n in 0..2 {
        for (slot, (j, k, al)) in TRIPLES.into_iter().enumerate() {
            let mut acc = 0.0;
            for l in 0..2 {
                for m in 0..2 {
                    for b in 0..2 {
                        acc += t.get(n, l, m, b) * a[l][j] * a[m][k] * a[b][al];
                    }
                }
                for m in 0..2 {
                    let hnlm = h.get(n, l, m);
                    acc += hnlm
                        * (he.get(l, j, k) * a[m][al]
                            + he.get(l, j, al) * a[m][k]
                            + he.get(l, k, al) * a[m][j]);
                }
            }
            g[n][slot] = acc;
        }
    }
    let mut out = [[0.0; 4]; 2];
    for i in 0..2 {
        for slot in 0..4 {
            out[i][slot] = -(a[i][0] * g[0][slot] + a[i][1] * g[1][slot]);
        }
    }
    Third2(out)
}

/// The all-momentum components of the inverse tensors.
pub fn extract_p_derivs(ja: &Jacobian2, he: &Hessian2, te: &Third2) -> InverseDerivs {
    InverseDerivs {
        x1: ja.0[0][1],
        p1: ja.0[1][1],
        x2: he.0[0][2],
        p2: he.0[1][2],
        x3: te.0[0][3],
        p3: te.0[1][3],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{propagate_point, FlowState};
    use crate::units::Potential;
    use proptest::prelude::*;

    fn flow_at(u: f64, v: f64, pot: &Potential, tau: f64, steps: usize) -> FlowState {
        let mut s = FlowState::initial(u, v);
        for _ in 0..steps {
            s = crate::flow::yoshida_step(&s, pot, tau / steps as f64);
        }
        s
    }

    #[test]
    fn identity_inverts_to_identity() {
        let ja = invert_jacobian(&Jacobian2::IDENTITY).unwrap();
        assert_eq!(ja, Jacobian2::IDENTITY);
        let d = extract_p_derivs(&ja, &Hessian2::default(), &Third2::default());
        assert_eq!(d, InverseDerivs::IDENTITY);
    }

    #[test]
    fn rejects_non_unit_determinant() {
        let j = Jacobian2([[2.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(invert_jacobian(&j), Err(Error::Symplecticity { .. })));
    }

    #[test]
    fn harmonic_rotation_inverse() {
        let tau: f64 = 0.9;
        let (c, s) = (tau.cos(), tau.sin());
        let j = Jacobian2([[c, s], [-s, c]]);
        let ja = invert_jacobian(&j).unwrap();
        let expect = [[c, -s], [s, c]];
        for i in 0..2 {
            for k in 0..2 {
                assert!((ja.0[i][k] - expect[i][k]).abs() < 1e-15);
            }
        }
        let d = extract_p_derivs(&ja, &Hessian2::default(), &Third2::default());
        assert!((d.x1 + s).abs() < 1e-15 && (d.p1 - c).abs() < 1e-15);
    }

    #[test]
    fn free_particle_inverse() {
        let tau = 3.5;
        let s = flow_at(0.4, 1.2, &Potential::free(), tau, 10);
        let d = InverseDerivs::from_flow(&s).unwrap();
        assert!((d.x1 + tau).abs() < 1e-13);
        assert_eq!(d.p1, 1.0);
        assert_eq!((d.x2, d.p2, d.x3, d.p3), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn zero_hessians_and_identity_substitutions() {
        let ja = Jacobian2([[0.3, 1.2], [-0.5, 1.33]]);
        assert_eq!(inverse_hessian(&Hessian2::default(), &ja), Hessian2::default());
        assert_eq!(
            inverse_third(&Third2::default(), &Hessian2::default(), &Hessian2::default(), &ja),
            Third2::default()
        );
        let h = Hessian2([[0.1, -0.2, 0.3], [0.7, 0.05, -0.4]]);
        let he = inverse_hessian(&h, &Jacobian2::IDENTITY);
        for i in 0..2 {
            for k in 0..3 {
                assert_eq!(he.0[i][k], -h.0[i][k]);
            }
        }
        let t = Third2([[0.1, 0.2, 0.3, 0.4], [-0.5, 0.6, -0.7, 0.8]]);
        let te = inverse_third(&t, &Hessian2::default(), &Hessian2::default(), &Jacobian2::IDENTITY);
        for i in 0..2 {
            for k in 0..4 {
                assert_eq!(te.0[i][k], -t.0[i][k]);
            }
        }
    }

    /// Full-index reference contraction with no symmetry assumptions.
    fn dense_hessian(h: &Hessian2, ja: &Jacobian2) -> [[[f64; 2]; 2]; 2] {
        let mut out = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let mut acc = 0.0;
                    for n in 0..2 {
                        for l in 0..2 {
                            for m in 0..2 {
                                acc += h.get(n, l, m) * ja.0[i][n] * ja.0[l][j] * ja.0[m][k];
                            }
                        }
                    }
                    out[i][j][k] = -acc;
                }
            }
        }
        out
    }

    proptest! {
        #[test]
        fn inverse_tensors_symmetric_and_match_dense_contraction(
            a in -2.0f64..2.0, b in -2.0f64..2.0, c in 0.5f64..2.0,
            hs in proptest::array::uniform6(-1.0f64..1.0),
            ts in proptest::array::uniform8(-1.0f64..1.0),
        ) {
            // Unit-determinant matrix [[c, a], [b, (1 + a b)/c]].
            let j = Jacobian2([[c, a], [b, (1.0 + a * b) / c]]);
            let ja = invert_jacobian(&j).unwrap();
            let prod = ja.mul(&j);
            prop_assert!((prod.0[0][0] - 1.0).abs() < 1e-12 && prod.0[0][1].abs() < 1e-12);
            prop_assert!(prod.0[1][0].abs() < 1e-12 && (prod.0[1][1] - 1.0).abs() < 1e-12);
            let h = Hessian2([[hs[0], hs[1], hs[2]], [hs[3], hs[4], hs[5]]]);
            let he = inverse_hessian(&h, &ja);
            let dense = dense_hessian(&h, &ja);
            for i in 0..2 {
                prop_assert!((dense[i][0][1] - dense[i][1][0]).abs() < 1e-12);
                for j in 0..2 { for k in 0..2 {
                    prop_assert!((he.get(i, j, k) - dense[i][j][k]).abs() < 1e-12);
                }}
            }
            let t = Third2([[ts[0], ts[1], ts[2], ts[3]], [ts[4], ts[5], ts[6], ts[7]]]);
            let te = inverse_third(&t, &h, &he, &ja);
            // Permutation symmetry of the full formula: recompute without symmetric storage.
            for i in 0..2 {
                for (j, k, l) in [(0, 0, 1), (0, 1, 0), (1, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)] {
                    let mut acc = 0.0;
                    for n in 0..2 { for ll in 0..2 { for m in 0..2 {
                        for bb in 0..2 {
                            acc += t.get(n, ll, m, bb) * ja.0[i][n] * ja.0[ll][j] * ja.0[m][k] * ja.0[bb][l];
                        }
                        acc += h.get(n, ll, m) * ja.0[i][n] * (he.get(ll, j, k) * ja.0[m][l]
                            + he.get(ll, j, l) * ja.0[m][k] + he.get(ll, k, l) * ja.0[m][j]);
                    }}}
                    prop_assert!((te.get(i, j, k, l) + acc).abs() < 1e-11);
                }
            }
        }
    }

    /// Central differences of the backward map `(u, v) ↦ Φ(u, v, -τ)` with
    /// respect to `v`, evaluated at the forward image of `(u₀, v₀)`.
    fn fd_backward(u0: f64, v0: f64, pot: &Potential, tau: f64, steps: usize) -> [[f64; 3]; 2] {
        let s = flow_at(u0, v0, pot, tau, steps);
        let e = 1e-3;
        let back = |dv: f64| propagate_point(s.x, s.p + dv, pot, -tau, steps).unwrap();
        let f: Vec<(f64, f64)> = [-2.0, -1.0, 0.0, 1.0, 2.0].iter().map(|k| back(k * e)).collect();
        let mut out = [[0.0; 3]; 2];
        for (c, g) in [|q: (f64, f64)| q.0, |q: (f64, f64)| q.1].iter().enumerate() {
            let y: Vec<f64> = f.iter().map(|&q| g(q)).collect();
            out[c][0] = (y[3] - y[1]) / (2.0 * e);
            out[c][1] = (y[3] - 2.0 * y[2] + y[1]) / (e * e);
            out[c][2] = (y[4] - 2.0 * y[3] + 2.0 * y[1] - y[0]) / (2.0 * e * e * e);
        }
        out
    }

    #[test]
    fn inverse_derivs_match_backward_finite_differences() {
        let pot = Potential::quartic(1.5);
        for &(u, v, tau) in &[(0.8, 0.3, 1.0), (-0.5, 1.1, 2.0), (1.2, -0.7, 0.5)] {
            let steps = 2000;
            let d = InverseDerivs::from_flow(&flow_at(u, v, &pot, tau, steps)).unwrap();
            let fd = fd_backward(u, v, &pot, tau, steps);
            let rel = |a: f64, b: f64, s: f64| (a - b).abs() / b.abs().max(s);
            assert!(rel(d.x1, fd[0][0], 1.0) < 1e-6, "{} {}", d.x1, fd[0][0]);
            assert!(rel(d.p1, fd[1][0], 1.0) < 1e-6);
            assert!(rel(d.x2, fd[0][1], 1.0) < 1e-4, "{} {}", d.x2, fd[0][1]);
            assert!(rel(d.p2, fd[1][1], 1.0) < 1e-4);
            assert!(rel(d.x3, fd[0][2], 1.0) < 1e-3, "{} {}", d.x3, fd[0][2]);
            assert!(rel(d.p3, fd[1][2], 1.0) < 1e-3);
        }
    }
}

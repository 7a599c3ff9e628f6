use proptest::prelude::*;
use qxpanse::flow::{propagate_point, yoshida_step, FlowField, FlowState};
use qxpanse::inverse::{invert_jacobian, InverseDerivs};
use qxpanse::{PhaseGrid, Potential};

fn run(u: f64, v: f64, pot: &Potential, tau: f64, steps: usize) -> FlowState {
    let mut s = FlowState::initial(u, v);
    for _ in 0..steps {
        s = yoshida_step(&s, pot, tau / steps as f64);
    }
    s
}

#[test]
fn inverse_jacobian_times_jacobian_is_identity() {
    let mut flow = FlowField::new(PhaseGrid::centered(20, 20, 0.4, 0.4, (0.0, 0.0)).unwrap());
    flow.propagate(&Potential::quartic(2.0), 0.01, 1000).unwrap();
    let mut worst = 0.0f64;
    for s in &flow.states {
        let j = s.jacobian();
        let ja = invert_jacobian(&j).unwrap();
        for prod in [ja.mul(&j), j.mul(&ja)] {
            worst = worst.max((prod.0[0][0] - 1.0).abs()).max(prod.0[0][1].abs()).max(prod.0[1][0].abs()).max((prod.0[1][1] - 1.0).abs());
        }
    }
    assert!(worst < 1e-12, "{worst:e}");
}

/// Central differences in `v` of the backward map `Φ(·, -τ)` at the forward
/// image of `(u, v)`.
fn fd_backward(u: f64, v: f64, pot: &Potential, tau: f64, steps: usize) -> [[f64; 3]; 2] {
    let s = run(u, v, pot, tau, steps);
    let e = 2e-3;
    let f: Vec<(f64, f64)> = [-2.0, -1.0, 0.0, 1.0, 2.0]
        .iter()
        .map(|k| propagate_point(s.x, s.p + k * e, pot, -tau, steps).unwrap())
        .collect();
    let mut out = [[0.0; 3]; 2];
    for c in 0..2 {
        let y: Vec<f64> = f.iter().map(|q| if c == 0 { q.0 } else { q.1 }).collect();
        out[c] = [
            (y[3] - y[1]) / (2.0 * e),
            (y[3] - 2.0 * y[2] + y[1]) / (e * e),
            (y[4] - 2.0 * y[3] + 2.0 * y[1] - y[0]) / (2.0 * e * e * e),
        ];
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inverse_derivatives_match_finite_differences(
        u in -2.0f64..2.0,
        v in -2.0f64..2.0,
        eta in 0.8f64..3.0,
        tau in 0.1f64..4.0,
    ) {
        let pot = Potential::quartic(eta);
        let steps = 800;
        let d = InverseDerivs::from_flow(&run(u, v, &pot, tau, steps)).unwrap();
        let fd = fd_backward(u, v, &pot, tau, steps);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
        prop_assert!(rel(d.x1, fd[0][0]) < 1e-4 && rel(d.p1, fd[1][0]) < 1e-4, "{d:?} {fd:?}");
        prop_assert!(rel(d.x2, fd[0][1]) < 1e-3 && rel(d.p2, fd[1][1]) < 1e-3, "{d:?} {fd:?}");
        prop_assert!(rel(d.x3, fd[0][2]) < 1e-2 && rel(d.p3, fd[1][2]) < 1e-2, "{d:?} {fd:?}");
    }

    #[test]
    fn backward_map_undoes_forward_map(u in -3.0f64..3.0, v in -3.0f64..3.0, tau in 0.0f64..8.0) {
        let pot = Potential::quartic(1.5);
        let s = run(u, v, &pot, tau, 1000);
        let (a, b) = propagate_point(s.x, s.p, &pot, -tau, 1000).unwrap();
        prop_assert!((a - u).abs() < 1e-10 && (b - v).abs() < 1e-10);
    }
}

#![cfg(feature = "oracle")]

use proptest::prelude::*;
use qxpanse::flow::{propagate_point, yoshida_step, FlowField, FlowState};
use qxpanse::oracle::dopri5;
use qxpanse::{PhaseGrid, Potential};

/// `∫₀¹ ds/√(1 - s⁴) = Γ(1/4)²/(4√(2π))`.
const QUARTER_LEMNISCATE: f64 = 1.311_028_777_146_059_9;

fn energy(pot: &Potential, x: f64, p: f64) -> f64 {
    0.5 * p * p + 2.0 * pot.value(x)
}

fn run(u: f64, v: f64, pot: &Potential, tau: f64, steps: usize) -> FlowState {
    let mut s = FlowState::initial(u, v);
    for _ in 0..steps {
        s = yoshida_step(&s, pot, tau / steps as f64);
    }
    s
}

#[test]
fn jacobian_stays_unimodular_for_ten_thousand_steps() {
    let mut flow = FlowField::new(PhaseGrid::centered(16, 16, 0.5, 0.5, (0.0, 0.0)).unwrap());
    flow.propagate(&Potential::quartic(2.0), 0.01, 10_000).unwrap();
    let dev = flow.max_det_deviation();
    assert!(dev < 1e-9, "{dev:e}");
}

#[test]
fn quartic_period_matches_closed_form_and_reference_integrator() {
    let eta = 1.0;
    let pot = Potential::quartic(eta);
    let k = 2.0 * pot.coeffs[3];
    let amp = 1.5;
    let period = 4.0 * QUARTER_LEMNISCATE / (amp * (2.0 * k).sqrt());
    let rhs = |_: f64, y: &[f64; 2]| [y[1], pot.force(y[0])];
    let back = dopri5(rhs, [amp, 0.0], 0.0, period, 1e-13, 1e-14);
    assert!((back[0] - amp).abs() < 1e-9 && back[1].abs() < 1e-9, "{back:?}");

    for t in [0.3 * period, period, 3.7 * period] {
        let reference = dopri5(rhs, [amp, 0.0], 0.0, t, 1e-13, 1e-14);
        let (x, p) = propagate_point(amp, 0.0, &pot, t, (t / 0.002).ceil() as usize).unwrap();
        assert!((x - reference[0]).abs() < 1e-8 && (p - reference[1]).abs() < 1e-8, "t {t}: {x} {p} vs {reference:?}");
    }
}

#[test]
fn energy_error_is_fourth_order_and_bounded() {
    let pot = Potential::new([0.0, 0.25, 0.02, 0.01]);
    let e0 = energy(&pot, 1.2, -0.8);
    let worst = |dt: f64, steps: usize| {
        let (mut x, mut p) = (1.2, -0.8);
        let mut early = 0.0f64;
        let mut late = 0.0f64;
        for n in 0..steps {
            (x, p) = propagate_point(x, p, &pot, dt, 1).unwrap();
            let e = (energy(&pot, x, p) - e0).abs();
            if n < steps / 10 { early = early.max(e) } else if n >= 9 * steps / 10 { late = late.max(e) }
        }
        (early, late)
    };
    let (a_early, a_late) = worst(0.1, 20_000);
    let (b_early, _) = worst(0.05, 40_000);
    let ratio = a_early / b_early;
    assert!((ratio - 16.0).abs() < 2.0, "{ratio}");
    assert!(a_late < 1.5 * a_early, "secular drift {a_early:e} -> {a_late:e}");
}

/// Central differences of the forward map with respect to `(x₀, p₀)`
/// along direction `dir`.
fn fd_forward(u: f64, v: f64, dir: (f64, f64), pot: &Potential, tau: f64, steps: usize) -> [[f64; 3]; 2] {
    let e = 1e-3;
    let f: Vec<(f64, f64)> = [-2.0, -1.0, 0.0, 1.0, 2.0]
        .iter()
        .map(|k| propagate_point(u + k * e * dir.0, v + k * e * dir.1, pot, tau, steps).unwrap())
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
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn variational_derivatives_match_finite_differences(
        u in -1.5f64..1.5,
        v in -1.5f64..1.5,
        tau in 0.2f64..3.0,
    ) {
        let pot = Potential::quartic(1.2);
        let steps = 400;
        let s = run(u, v, &pot, tau, steps);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
        let fp = fd_forward(u, v, (0.0, 1.0), &pot, tau, steps);
        let fx = fd_forward(u, v, (1.0, 0.0), &pot, tau, steps);
        prop_assert!(rel(s.dx[1], fp[0][0]) < 1e-5 && rel(s.dp[1], fp[1][0]) < 1e-5);
        prop_assert!(rel(s.dx[0], fx[0][0]) < 1e-5 && rel(s.dp[0], fx[1][0]) < 1e-5);
        prop_assert!(rel(s.d2x[2], fp[0][1]) < 1e-4 && rel(s.d2p[2], fp[1][1]) < 1e-4);
        prop_assert!(rel(s.d2x[0], fx[0][1]) < 1e-4 && rel(s.d2p[0], fx[1][1]) < 1e-4);
        prop_assert!(rel(s.d3x[3], fp[0][2]) < 1e-3 && rel(s.d3p[3], fp[1][2]) < 1e-3);
        prop_assert!(rel(s.d3x[0], fx[0][2]) < 1e-3 && rel(s.d3p[0], fx[1][2]) < 1e-3);
    }

    #[test]
    fn determinant_is_one_anywhere(
        u in -4.0f64..4.0,
        v in -4.0f64..4.0,
        eta in 0.5f64..5.0,
        tau in 0.0f64..20.0,
    ) {
        let s = run(u, v, &Potential::quartic(eta), tau, 2000);
        prop_assert!((s.jacobian().det() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn flow_is_time_reversible(u in -3.0f64..3.0, v in -3.0f64..3.0, tau in 0.0f64..10.0) {
        let pot = Potential::new([0.1, 0.2, -0.03, 0.02]);
        let (x, p) = propagate_point(u, v, &pot, tau, 1000).unwrap();
        let (a, b) = propagate_point(x, p, &pot, -tau, 1000).unwrap();
        prop_assert!((a - u).abs() < 1e-10 && (b - v).abs() < 1e-10);
    }
}

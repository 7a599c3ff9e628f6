//! Adaptive Dormand–Prince 5(4) integration.

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const BS: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate `dy/dt = f(t, y)` from `t0` to `t1` with mixed error control
/// `|err_i| ≤ atol + rtol·|y_i|`.
pub fn dopri5<const N: usize, F>(f: F, y0: [f64; N], t0: f64, t1: f64, rtol: f64, atol: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let span = t1 - t0;
    if span == 0.0 {
        return y0;
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = dir * (span.abs() * 1e-3).min(1e-2);
    let mut k = [[0.0; N]; 7];
    k[0] = f(t, &y);
    while (t1 - t) * dir > 0.0 {
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        for s in 1..7 {
            let mut ys = y;
            for i in 0..N {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                ys[i] += h * acc;
            }
            k[s] = f(t + C[s] * h, &ys);
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for i in 0..N {
            let mut hi = 0.0;
            let mut lo = 0.0;
            for s in 0..7 {
                hi += B[s] * k[s][i];
                lo += BS[s] * k[s][i];
            }
            y5[i] += h * hi;
            let sc = atol + rtol * y[i].abs().max(y5[i].abs());
            err = err.max((h * (hi - lo) / sc).abs());
        }
        if err <= 1.0 {
            t += h;
            y = y5;
            k[0] = k[6];
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        assert!(h.abs() > 1e-14 * span.abs(), "dopri5 step size underflow at t = {t}");
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_and_oscillator() {
        let y = dopri5(|_, y: &[f64; 1]| [-2.0 * y[0]], [1.0], 0.0, 3.0, 1e-12, 1e-14);
        assert!((y[0] - (-6.0f64).exp()).abs() < 1e-12);
        let y = dopri5(|_, y: &[f64; 2]| [y[1], -y[0]], [1.0, 0.0], 0.0, 10.0, 1e-12, 1e-14);
        assert!((y[0] - 10f64.cos()).abs() < 1e-9 && (y[1] + 10f64.sin()).abs() < 1e-9);
    }
}

//! Dense matrix exponential for small operators.

use crate::operator::SparseOperator;

/// Dense row-major copy of `op`.
pub fn to_dense(op: &SparseOperator) -> Vec<Vec<f64>> {
    let n = op.dim();
    let mut a = vec![vec![0.0; n]; n];
    for (k, row) in a.iter_mut().enumerate() {
        for s in 0..13 {
            row[op.pattern.cols[k][s] as usize] += op.vals[k][s];
        }
    }
    a
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

/// `exp(dt·A)` by scaling and squaring of a 30-term Taylor polynomial.
pub fn expm(a: &[Vec<f64>], dt: f64) -> Vec<Vec<f64>> {
    let n = a.len();
    let norm = a.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max) * dt.abs();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let h = dt / 2f64.powi(squarings as i32);
    let scaled: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|v| v * h).collect()).collect();
    let mut result: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut term = result.clone();
    for k in 1..=30 {
        term = matmul(&term, &scaled);
        let inv = 1.0 / k as f64;
        for (r, t) in result.iter_mut().zip(term.iter_mut()) {
            for (x, y) in r.iter_mut().zip(t.iter_mut()) {
                *y *= inv;
                *x += *y;
            }
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

pub fn apply(m: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    m.iter().map(|r| r.iter().zip(w).map(|(a, b)| a * b).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_generator() {
        let a = vec![vec![0.0, 1.0], vec![-1.0, 0.0]];
        let e = expm(&a, 2.5);
        assert!((e[0][0] - 2.5f64.cos()).abs() < 1e-13 && (e[0][1] - 2.5f64.sin()).abs() < 1e-13);
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::flow::yoshida_point;
use crate::observables::Moments;
use crate::units::Potential;

/// Ensemble moments with their standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleMoments {
    pub moments: Moments,
    pub stderr: Moments,
}

/// Independent Gaussian phase-space samples.
pub fn gaussian_samples(n: usize, mean: (f64, f64), width: (f64, f64), seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nx = Normal::new(mean.0, width.0).unwrap();
    let np = Normal::new(mean.1, width.1).unwrap();
    (0..n).map(|_| (nx.sample(&mut rng), np.sample(&mut rng))).collect()
}

/// Propagate sample points classically and return ensemble moments.
pub fn classical_ensemble(samples: &[(f64, f64)], potential: &Potential, dt: f64, steps: usize) -> EnsembleMoments {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(x, p)| {
            let (mut x, mut p) = (x, p);
            for _ in 0..steps {
                (x, p) = yoshida_point(x, p, potential, dt);
            }
            (x, p)
        })
        .collect();
    let n = pts.len() as f64;
    let stat = |f: &dyn Fn(f64, f64) -> f64| {
        let vals: Vec<f64> = pts.iter().map(|&(x, p)| f(x, p)).collect();
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    };
    let (mx, ex) = stat(&|x, _| x);
    let (mp, ep) = stat(&|_, p| p);
    let (x2, ex2) = stat(&|x, _| x * x);
    let (p2, ep2) = stat(&|_, p| p * p);
    let (xp, exp) = stat(&|x, p| 2.0 * x * p);
    EnsembleMoments {
        moments: Moments { mean_x: mx, mean_p: mp, x2, p2, xp_sym: xp },
        stderr: Moments { mean_x: ex, mean_p: ep, x2: ex2, p2: ep2, xp_sym: exp },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_ensemble_variance_is_constant() {
        let s = gaussian_samples(20_000, (0.0, 0.0), (1.0, 1.0), 3);
        let a = classical_ensemble(&s, &Potential::harmonic(), 0.01, 0);
        let b = classical_ensemble(&s, &Potential::harmonic(), 0.01, 700);
        assert!((a.moments.x2 + a.moments.p2 - b.moments.x2 - b.moments.p2).abs() < 1e-9);
    }

    #[test]
    fn free_spreading_matches_closed_form() {
        let s = gaussian_samples(200_000, (0.0, 0.0), (1.0, 1.0), 11);
        let tau = 3.0;
        let e = classical_ensemble(&s, &Potential::free(), 0.1, 30);
        // ⟨x²⟩ = 1 + τ² for unit widths
        let expect = 1.0 + tau * tau;
        assert!((e.moments.x2 - expect).abs() < 4.0 * e.stderr.x2, "{} {}", e.moments.x2, e.stderr.x2);
    }
}

//! Shared oracles for the integration tests.
#![allow(dead_code)]

use mdmd_core::linalg;
use mdmd_core::observables::{ObservableMatrix, CANONICAL};
use mdmd_core::C64;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
}

/// A diagonalizable map `A = V diag(mu) V^-1` and one trajectory of it.
pub struct LinearSystem {
    pub eigenvalues: Vec<C64>,
    pub operator: DMatrix<C64>,
    pub snapshots: DMatrix<C64>,
}

impl LinearSystem {
    /// Eigenvalues have moduli in `[min_modulus, 1]` and well separated
    /// arguments; the trajectory has `3 n` steps.
    pub fn random(n: usize, min_modulus: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eigenvalues: Vec<C64> = (0..n)
            .map(|j| {
                let r = min_modulus + (1.0 - min_modulus) * rng.random::<f64>();
                let theta = std::f64::consts::TAU * (j as f64 + 0.5 * rng.random::<f64>()) / n as f64;
                C64::from_polar(r, theta)
            })
            .collect();
        let v = DMatrix::from_fn(n, n, |i, j| {
            let z = random_vector(&mut rng, 1)[0];
            if i == j { z + c(2.0, 0.0) } else { z }
        });
        let v_inv = v.clone().try_inverse().expect("eigenvector basis is invertible");
        let d = DMatrix::from_diagonal(&DVector::from_vec(eigenvalues.clone()));
        let operator = &v * d * v_inv;
        let steps = 3 * n;
        let mut x = DVector::from_vec(random_vector(&mut rng, n));
        let mut snapshots = DMatrix::zeros(n, steps + 1);
        for k in 0..=steps {
            snapshots.set_column(k, &x);
            x = &operator * x;
        }
        Self { eigenvalues, operator, snapshots }
    }

    pub fn observables(&self) -> ObservableMatrix {
        ObservableMatrix::labelled(CANONICAL, self.snapshots.clone())
    }
}

/// Worst distance from each expected eigenvalue to its nearest match.
pub fn spectrum_distance(expected: &[C64], found: &[C64]) -> f64 {
    if expected.len() != found.len() {
        return f64::INFINITY;
    }
    expected
        .iter()
        .map(|e| found.iter().map(|f| (e - f).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// `G+ G-^+`, the full least-squares operator.
pub fn full_operator(minus: &DMatrix<C64>, plus: &DMatrix<C64>) -> DMatrix<C64> {
    plus * linalg::pinv(minus).expect("pseudoinverse")
}

/// Largest relative mismatch between `tr(A^k)` and `sum_j mu_j^k` for
/// `k = 1..=n`; agreement of all power sums pins down the nonzero spectrum.
pub fn power_sum_mismatch(operator: &DMatrix<C64>, eigenvalues: &[C64]) -> f64 {
    let n = eigenvalues.len().max(1);
    let mut power = operator.clone();
    let mut worst: f64 = 0.0;
    for k in 1..=n {
        let trace = power.trace();
        let sum: C64 = eigenvalues.iter().map(|mu| mu.powu(k as u32)).sum();
        let scale = eigenvalues.iter().map(|mu| mu.norm().powi(k as i32)).sum::<f64>().max(1e-300);
        worst = worst.max((trace - sum).norm() / scale);
        power = &power * operator;
    }
    worst
}

//! Truncated-SVD dynamic mode decomposition.
//!
//! Given past/future snapshot matrices `G-`, `G+` the fit solves
//! `G+ ~ K G-` in the least-squares sense on the leading `r` singular
//! directions of `G-`, and represents `K` through the `r x r` projection
//!
//! ```text
//! S = U_r^H G+ V_r Sigma_r^{-1},    S y = mu y,    Phi = U_r y
//! ```
//!
//! whose nonzero spectrum coincides with that of `G+ V_r Sigma_r^{-1} U_r^H`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::observables::ObservableMatrix;
use crate::C64;

/// Past (`minus`) and future (`plus`) snapshot matrices, both `M x N_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotPair {
    pub minus: DMatrix<C64>,
    pub plus: DMatrix<C64>,
}

impl SnapshotPair {
    pub fn from_columns(data: &DMatrix<C64>) -> Result<Self> {
        let cols = data.ncols();
        if cols < 2 {
            return Err(Error::Structure(format!(
                "need at least two snapshots to form a pair, got {cols}"
            )));
        }
        Ok(Self {
            minus: data.columns(0, cols - 1).into_owned(),
            plus: data.columns(1, cols - 1).into_owned(),
        })
    }

    pub fn observables(&self) -> usize {
        self.minus.nrows()
    }

    pub fn steps(&self) -> usize {
        self.minus.ncols()
    }
}

/// Drop the last column for `G-`, the first for `G+`.
pub fn split_snapshots(observables: &ObservableMatrix) -> Result<SnapshotPair> {
    SnapshotPair::from_columns(&observables.values)
}

/// Keep singular directions whose magnitude is within `tolerance` decades of
/// the largest: `log10(s_i / s_1) > -tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruncationRule {
    pub tolerance: u32,
}

impl TruncationRule {
    pub fn new(tolerance: u32) -> Self {
        Self { tolerance }
    }
}

/// Number of leading singular values kept by `rule`; at least 1.
pub fn truncation_rank(singular_values: &[f64], rule: TruncationRule) -> Result<usize> {
    let first = match singular_values.first() {
        Some(&s) if s > 0.0 && s.is_finite() => s,
        _ => {
            return Err(Error::Degenerate(
                "leading singular value is zero; snapshot data has rank 0".into(),
            ))
        }
    };
    if singular_values.iter().any(|s| s.is_nan() || *s < 0.0) {
        return Err(Error::Structure("singular values must be non-negative".into()));
    }
    if singular_values.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Structure("singular values must be in descending order".into()));
    }
    let threshold = -f64::from(rule.tolerance);
    let kept = singular_values
        .iter()
        .take_while(|&&s| (s / first).log10() > threshold)
        .count();
    Ok(kept.max(1))
}

/// Eigenvalues with modulus at or below this fraction of the spectral radius
/// (or absolutely, for tiny spectra) are treated as structural zeros.
pub const ZERO_EIGENVALUE_RTOL: f64 = 64.0 * f64::EPSILON;

fn is_zero_eigenvalue(mu: C64, radius: f64) -> bool {
    mu.norm() <= ZERO_EIGENVALUE_RTOL * radius.max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DmdResult {
    /// Discrete eigenvalues `mu_j`.
    pub eigenvalues: Vec<C64>,
    /// `M x r`, unit-norm columns.
    pub modes: DMatrix<C64>,
    pub amplitudes: Vec<C64>,
    pub rank: usize,
    pub dt: f64,
}

impl DmdResult {
    fn radius(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero_mode(&self, j: usize) -> bool {
        is_zero_eigenvalue(self.eigenvalues[j], self.radius())
    }

    /// Number of retained eigenvalues that are structurally zero.
    pub fn zero_modes(&self) -> usize {
        (0..self.eigenvalues.len()).filter(|&j| self.is_zero_mode(j)).count()
    }

    /// Continuous-time eigenvalues `lambda_j = Log(mu_j) / dt` (principal
    /// branch); `None` for zero modes.
    pub fn continuous_eigenvalues(&self) -> Vec<Option<C64>> {
        (0..self.eigenvalues.len())
            .map(|j| (!self.is_zero_mode(j)).then(|| self.eigenvalues[j].ln() / self.dt))
            .collect()
    }

    pub fn observables(&self) -> usize {
        self.modes.nrows()
    }

    /// `sum_j b_j Phi_j exp((t / dt) Log mu_j)` over the nonzero retained modes.
    pub fn reconstruct(&self, t: f64) -> DVector<C64> {
        let mut out = DVector::zeros(self.modes.nrows());
        let zeros = self.zero_modes();
        if zeros > 0 {
            log::debug!("reconstruction skips {zeros} zero eigenvalue(s)");
        }
        let steps = t / self.dt;
        for j in 0..self.eigenvalues.len() {
            if self.is_zero_mode(j) {
                continue;
            }
            let growth = (self.eigenvalues[j].ln() * steps).exp();
            out.axpy(self.amplitudes[j] * growth, &self.modes.column(j), C64::new(1.0, 0.0));
        }
        out
    }
}

/// The SVD of `G-` and everything needed to fit at any truncation.
///
/// Computing this once and calling [`DmdBasis::fit`] per rule avoids
/// repeating the decomposition during a tolerance sweep.
#[derive(Debug, Clone)]
pub struct DmdBasis {
    u: DMatrix<C64>,
    singular_values: Vec<f64>,
    /// `U^H G+ V`, whose leading `r x r` block is `U_r^H G+ V_r`.
    projected: DMatrix<C64>,
    initial: DVector<C64>,
    dt: f64,
}

impl DmdBasis {
    pub fn new(pair: &SnapshotPair, dt: f64) -> Result<Self> {
        if pair.minus.shape() != pair.plus.shape() {
            return Err(Error::Structure(format!(
                "G- is {:?} but G+ is {:?}",
                pair.minus.shape(),
                pair.plus.shape()
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let f = linalg::svd(&pair.minus)?;
        if f.singular_values[0].is_nan() || f.singular_values[0] <= 0.0 {
            return Err(Error::Degenerate("snapshot data has rank 0".into()));
        }
        let projected = f.u.adjoint() * &pair.plus * &f.v;
        Ok(Self {
            u: f.u,
            singular_values: f.singular_values,
            projected,
            initial: pair.minus.column(0).into_owned(),
            dt,
        })
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn fit(&self, rule: TruncationRule) -> Result<DmdResult> {
        let r = truncation_rank(&self.singular_values, rule)?;
        let mut reduced = self.projected.view((0, 0), (r, r)).into_owned();
        for (j, mut col) in reduced.column_iter_mut().enumerate() {
            col /= C64::new(self.singular_values[j], 0.0);
        }
        let eigen = linalg::eig(&reduced).map_err(|e| match e {
            Error::Numerical(msg) => Error::Numerical(format!(
                "{msg}; rank {r}, sigma_1 = {:e}, sigma_r = {:e}",
                self.singular_values[0],
                self.singular_values[r - 1]
            )),
            other => other,
        })?;
        let modes = self.u.columns(0, r) * eigen.vectors;
        let amplitudes = linalg::lstsq(&modes, &self.initial)?;
        Ok(DmdResult {
            eigenvalues: eigen.values,
            modes,
            amplitudes: amplitudes.iter().copied().collect(),
            rank: r,
            dt: self.dt,
        })
    }
}

/// Fit DMD on `pair` at truncation `rule`.
pub fn fit(pair: &SnapshotPair, rule: TruncationRule, dt: f64) -> Result<DmdResult> {
    DmdBasis::new(pair, dt)?.fit(rule)
}

/// Evaluate the fitted expansion at time `t`.
pub fn reconstruct(result: &DmdResult, t: f64) -> DVector<C64> {
    result.reconstruct(t)
}

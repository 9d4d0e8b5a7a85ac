//! Error functionals for a fitted decomposition.

use serde::{Deserialize, Serialize};

use crate::dmd::DmdResult;
use crate::error::{config, Error, Result};
use crate::observables::{ObservableMatrix, CANONICAL};

pub const MAX_WEIGHT: f64 = 2.0;

/// `||g_canonical(t_f) - g_dmd(t_f)||_2` over the canonical rows only.
///
/// `t_final` must coincide with a sampled column of `truth`.
pub fn reconstruction_error(truth: &ObservableMatrix, result: &DmdResult, t_final: f64) -> Result<f64> {
    let rows = truth
        .block(CANONICAL)
        .ok_or_else(|| Error::Structure("truth has no canonical block".into()))?;
    if result.observables() != truth.rows() {
        return Err(Error::Structure(format!(
            "fit has {} observables, truth has {}",
            result.observables(),
            truth.rows()
        )));
    }
    let steps = t_final / result.dt;
    let column = steps.round();
    if (steps - column).abs() > 1e-9 * steps.max(1.0) || column < 0.0 || column as usize >= truth.cols() {
        return Err(Error::Structure(format!("t = {t_final} is not a sampled time of the truth")));
    }
    let predicted = result.reconstruct(t_final);
    let actual = truth.values.column(column as usize);
    let sq: f64 = rows.map(|r| (actual[r] - predicted[r]).norm_sqr()).sum();
    Ok(sq.sqrt())
}

/// RMS distance of the retained eigenvalue moduli from the unit circle.
///
/// Structurally zero eigenvalues (see [`DmdResult::zero_modes`]) are
/// excluded; the divisor is the number of remaining modes.
pub fn spectral_error(result: &DmdResult) -> f64 {
    let (sum, count) = (0..result.eigenvalues.len())
        .filter(|&j| !result.is_zero_mode(j))
        .map(|j| (result.eigenvalues[j].norm() - 1.0).powi(2))
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).sqrt()
    }
}

/// `E = E_rc + w E_sp` for `w` in `[0, 2]`.
pub fn combined_error(reconstruction: f64, spectral: f64, weight: f64) -> Result<f64> {
    check_weight(weight)?;
    Ok(reconstruction + weight * spectral)
}

pub fn check_weight(weight: f64) -> Result<()> {
    if !(0.0..=MAX_WEIGHT).contains(&weight) {
        return config(format!("weight must lie in [0, {MAX_WEIGHT}], got {weight}"));
    }
    Ok(())
}

/// Scores of one fit at one `(T_l, N_lvl)` grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub reconstruction: f64,
    pub spectral: f64,
    pub combined: f64,
    pub weight: f64,
    pub tolerance: u32,
    /// Wavelet depth; `None` for canonical-only DMD.
    pub levels: Option<usize>,
    pub rank: usize,
    pub zero_modes: usize,
}

impl ErrorReport {
    pub fn evaluate(
        truth: &ObservableMatrix,
        result: &DmdResult,
        weight: f64,
        tolerance: u32,
        levels: Option<usize>,
    ) -> Result<Self> {
        let t_final = (truth.cols() - 1) as f64 * result.dt;
        let reconstruction = reconstruction_error(truth, result, t_final)?;
        let spectral = spectral_error(result);
        let combined = combined_error(reconstruction, spectral, weight)?;
        Ok(Self {
            reconstruction,
            spectral,
            combined,
            weight,
            tolerance,
            levels,
            rank: result.rank,
            zero_modes: result.zero_modes(),
        })
    }
}

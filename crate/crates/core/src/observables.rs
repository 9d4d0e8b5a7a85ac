//! Observable matrices: canonical pointwise values, optionally stacked with
//! per-scale norm observables from a wavelet decomposition.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::solver::SnapshotSeries;
use crate::wavelet::{self, BesovSpec, WaveletFamily};
use crate::C64;

/// Which observable set is fed to DMD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Canonical observables only.
    Dmd,
    /// Canonical plus multiscale norm observables.
    Mdmd,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Dmd => "dmd",
            Mode::Mdmd => "mdmd",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dmd" => Ok(Mode::Dmd),
            "mdmd" => Ok(Mode::Mdmd),
            other => Err(Error::Parse(format!("unknown mode '{other}'"))),
        }
    }
}

/// The default Besov pair: `(1, 2, 2)` for dispersion, `(0, 4, 2)` for the
/// cubic term.
pub fn default_besov_specs() -> Vec<BesovSpec> {
    vec![
        BesovSpec { alpha: 1.0, p: 2.0, q: 2.0 },
        BesovSpec { alpha: 0.0, p: 4.0, q: 2.0 },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableConfig {
    pub mode: Mode,
    pub levels: usize,
    pub family: WaveletFamily,
    pub besov: Vec<BesovSpec>,
}

impl ObservableConfig {
    pub fn dmd() -> Self {
        Self {
            mode: Mode::Dmd,
            levels: 0,
            family: WaveletFamily::default(),
            besov: default_besov_specs(),
        }
    }

    pub fn mdmd(levels: usize) -> Self {
        Self { mode: Mode::Mdmd, levels, ..Self::dmd() }
    }

    pub fn with_family(mut self, family: WaveletFamily) -> Self {
        self.family = family;
        self
    }

    /// Number of norm-based rows: `(1 + #besov) (levels + 1)`.
    pub fn multiscale_rows(&self) -> usize {
        match self.mode {
            Mode::Dmd => 0,
            Mode::Mdmd => (1 + self.besov.len()) * (self.levels + 1),
        }
    }

    /// Total observable count `M` for a grid of `points` samples.
    pub fn observable_count(&self, points: usize) -> usize {
        points + self.multiscale_rows()
    }
}

pub const CANONICAL: &str = "canonical";
pub const ENERGY: &str = "g2";

/// A contiguous, labelled range of rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowBlock {
    pub label: String,
    pub rows: Range<usize>,
}

/// `M x (N_T + 1)` matrix of observables; column `n` is time `t_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableMatrix {
    pub values: DMatrix<C64>,
    pub blocks: Vec<RowBlock>,
}

impl ObservableMatrix {
    pub fn new(values: DMatrix<C64>, blocks: Vec<RowBlock>) -> Result<Self> {
        let mut next = 0;
        for b in &blocks {
            if b.rows.start != next || b.rows.end < b.rows.start {
                return Err(Error::Structure(format!("row block '{}' is not contiguous", b.label)));
            }
            next = b.rows.end;
        }
        if next != values.nrows() {
            return Err(Error::Structure(format!(
                "row blocks cover {next} rows but the matrix has {}",
                values.nrows()
            )));
        }
        Ok(Self { values, blocks })
    }

    /// Single-block matrix.
    pub fn labelled(label: &str, values: DMatrix<C64>) -> Self {
        let rows = 0..values.nrows();
        Self { values, blocks: vec![RowBlock { label: label.to_string(), rows }] }
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn block(&self, label: &str) -> Option<Range<usize>> {
        self.blocks.iter().find(|b| b.label == label).map(|b| b.rows.clone())
    }

    /// Copy out one labelled block.
    pub fn extract(&self, label: &str) -> Result<ObservableMatrix> {
        let rows = self
            .block(label)
            .ok_or_else(|| Error::Structure(format!("no '{label}' block")))?;
        let values = self.values.rows(rows.start, rows.len()).into_owned();
        Ok(Self::labelled(label, values))
    }

    /// Vertical concatenation, keeping block labels in order.
    pub fn stack(parts: &[ObservableMatrix]) -> Result<ObservableMatrix> {
        let cols = parts.first().map_or(0, ObservableMatrix::cols);
        if parts.iter().any(|p| p.cols() != cols) {
            return Err(Error::Structure("stacked blocks differ in column count".into()));
        }
        let rows: usize = parts.iter().map(ObservableMatrix::rows).sum();
        let mut values = DMatrix::zeros(rows, cols);
        let mut blocks = Vec::new();
        let mut offset = 0;
        for part in parts {
            values.rows_mut(offset, part.rows()).copy_from(&part.values);
            for b in &part.blocks {
                blocks.push(RowBlock {
                    label: b.label.clone(),
                    rows: b.rows.start + offset..b.rows.end + offset,
                });
            }
            offset += part.rows();
        }
        Self::new(values, blocks)
    }

    /// One label per row, for serialisation.
    pub fn row_labels(&self) -> Vec<&str> {
        self.blocks
            .iter()
            .flat_map(|b| std::iter::repeat_n(b.label.as_str(), b.rows.len()))
            .collect()
    }
}

/// Row `l`, column `n` holds `u(x_l, t_n)`.
pub fn canonical_observables(series: &SnapshotSeries) -> Result<ObservableMatrix> {
    if series.is_empty() {
        return Err(Error::Structure("empty snapshot series".into()));
    }
    let rows = series.grid.points();
    let values = DMatrix::from_fn(rows, series.len(), |l, n| series.states[n].values[l]);
    Ok(ObservableMatrix::labelled(CANONICAL, values))
}

/// Norm observables for every snapshot: the per-band `L2` energies, then one
/// block per Besov spec, each `levels + 1` rows.
///
/// Coefficients are scaled by `sqrt(dx)` before forming the norms, so the
/// energy block sums to the quadrature `dx sum |u_l|^2`.
pub fn multiscale_observables(
    series: &SnapshotSeries,
    config: &ObservableConfig,
) -> Result<ObservableMatrix> {
    if config.mode != Mode::Mdmd {
        return self::config("multiscale observables requested outside MDMD mode");
    }
    if series.is_empty() {
        return Err(Error::Structure("empty snapshot series".into()));
    }
    for spec in &config.besov {
        spec.validate()?;
    }
    let band_rows = config.levels + 1;
    let rows = config.multiscale_rows();
    let weight = series.grid.dx().sqrt();
    let mut values = DMatrix::zeros(rows, series.len());

    for (n, state) in series.states.iter().enumerate() {
        let mut coeffs = wavelet::dwt_periodic(&state.values, &config.family, config.levels)?;
        for band in coeffs.details.iter_mut().chain(std::iter::once(&mut coeffs.approximation)) {
            band.iter_mut().for_each(|z| *z *= weight);
        }
        let mut column = wavelet::scale_energies(&coeffs);
        for spec in &config.besov {
            column.extend(wavelet::besov_blocks(&coeffs, spec)?);
        }
        for (m, v) in column.into_iter().enumerate() {
            values[(m, n)] = C64::new(v, 0.0);
        }
    }

    let mut labels = vec![ENERGY.to_string()];
    labels.extend(config.besov.iter().map(BesovSpec::label));
    let blocks = labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| RowBlock { label, rows: i * band_rows..(i + 1) * band_rows })
        .collect();
    ObservableMatrix::new(values, blocks)
}

/// Canonical block, atop the multiscale blocks in MDMD mode.
pub fn stack(config: &ObservableConfig, series: &SnapshotSeries) -> Result<ObservableMatrix> {
    let canonical = canonical_observables(series)?;
    match config.mode {
        Mode::Dmd => Ok(canonical),
        Mode::Mdmd => {
            let multiscale = multiscale_observables(series, config)?;
            ObservableMatrix::stack(&[canonical, multiscale])
        }
    }
}

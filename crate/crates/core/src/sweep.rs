//! Grid search over truncation tolerance and wavelet depth.

use std::io::Write;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::dmd::{split_snapshots, DmdBasis, TruncationRule};
use crate::error::{config, Error, Result};
use crate::exec::Execution;
use crate::metrics::{check_weight, ErrorReport};
use crate::observables::{self, default_besov_specs, Mode, ObservableConfig};
use crate::solver::SnapshotSeries;
use crate::wavelet::{max_levels, BesovSpec, WaveletFamily};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub tolerances: RangeInclusive<u32>,
    pub levels: RangeInclusive<usize>,
}

impl SweepGrid {
    pub const DEFAULT_TOLERANCES: RangeInclusive<u32> = 2..=10;

    /// `2 <= T_l <= 10`, `1 <= N_lvl <= log2(K_T) - 1`.
    pub fn for_points(points: usize) -> Self {
        Self { tolerances: Self::DEFAULT_TOLERANCES, levels: 1..=max_levels(points) }
    }

    pub fn validate(&self, points: usize) -> Result<()> {
        if self.tolerances.is_empty() {
            return config("empty tolerance range");
        }
        if self.levels.is_empty() || *self.levels.start() < 1 || *self.levels.end() > max_levels(points) {
            return config(format!(
                "level range {:?} outside 1..={} for {points} grid points",
                self.levels,
                max_levels(points)
            ));
        }
        Ok(())
    }

    /// Number of fits the sweep performs in `mode`.
    pub fn evaluations(&self, mode: Mode) -> usize {
        let t = self.tolerances.clone().count();
        match mode {
            Mode::Dmd => t,
            Mode::Mdmd => t * self.levels.clone().count(),
        }
    }
}

/// Everything a sweep needs besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub mode: Mode,
    pub grid: SweepGrid,
    pub weight: f64,
    pub family: WaveletFamily,
    pub besov: Vec<BesovSpec>,
    pub execution: Execution,
}

impl SweepSpec {
    pub fn new(mode: Mode, grid: SweepGrid, weight: f64) -> Self {
        Self {
            mode,
            grid,
            weight,
            family: WaveletFamily::default(),
            besov: default_besov_specs(),
            execution: Execution::default(),
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }
}

/// Outcome at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub tolerance: u32,
    pub levels: Option<usize>,
    pub outcome: std::result::Result<ErrorReport, String>,
}

impl SweepPoint {
    pub fn status(&self) -> &str {
        match &self.outcome {
            Ok(_) => "ok",
            Err(msg) => msg,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Sorted by `(T_l, N_lvl)`.
    pub table: Vec<SweepPoint>,
    pub best: ErrorReport,
}

/// Smallest combined error; ties go to the smaller `T_l`, then smaller `N_lvl`.
pub fn select_best<'a>(points: impl IntoIterator<Item = &'a SweepPoint>) -> Option<ErrorReport> {
    points
        .into_iter()
        .filter_map(|p| p.outcome.as_ref().ok())
        .min_by(|a, b| {
            a.combined
                .total_cmp(&b.combined)
                .then(a.tolerance.cmp(&b.tolerance))
                .then(a.levels.cmp(&b.levels))
        })
        .copied()
}

fn evaluate_level(series: &SnapshotSeries, spec: &SweepSpec, levels: Option<usize>) -> Vec<SweepPoint> {
    let failed = |msg: String| -> Vec<SweepPoint> {
        spec.grid
            .tolerances
            .clone()
            .map(|tolerance| SweepPoint { tolerance, levels, outcome: Err(msg.clone()) })
            .collect()
    };
    let cfg = ObservableConfig {
        mode: spec.mode,
        levels: levels.unwrap_or(0),
        family: spec.family.clone(),
        besov: spec.besov.clone(),
    };
    let prepared = observables::stack(&cfg, series).and_then(|truth| {
        let pair = split_snapshots(&truth)?;
        let basis = DmdBasis::new(&pair, series.dt)?;
        Ok((truth, basis))
    });
    let (truth, basis) = match prepared {
        Ok(p) => p,
        Err(e) => return failed(e.to_string()),
    };
    spec.grid
        .tolerances
        .clone()
        .map(|tolerance| {
            let outcome = basis
                .fit(TruncationRule::new(tolerance))
                .and_then(|res| ErrorReport::evaluate(&truth, &res, spec.weight, tolerance, levels))
                .map_err(|e| e.to_string())
                .and_then(|report| {
                    if report.combined.is_finite() {
                        Ok(report)
                    } else {
                        Err("non-finite error".to_string())
                    }
                });
            SweepPoint { tolerance, levels, outcome }
        })
        .collect()
}

/// Fit every grid point and pick the minimiser of the combined error.
///
/// Canonical-only DMD has no wavelet depth and sweeps `T_l` alone. The SVD
/// of each observable stack is shared across tolerances.
pub fn sweep(series: &SnapshotSeries, spec: &SweepSpec) -> Result<SweepResult> {
    check_weight(spec.weight)?;
    if series.len() < 2 {
        return Err(Error::Structure("sweep needs at least two snapshots".into()));
    }
    let depths: Vec<Option<usize>> = match spec.mode {
        Mode::Dmd => vec![None],
        Mode::Mdmd => {
            spec.grid.validate(series.grid.points())?;
            spec.grid.levels.clone().map(Some).collect()
        }
    };
    let mut table: Vec<SweepPoint> = spec
        .execution
        .map(depths, |levels| evaluate_level(series, spec, levels))
        .into_iter()
        .flatten()
        .collect();
    table.sort_by(|a, b| a.tolerance.cmp(&b.tolerance).then(a.levels.cmp(&b.levels)));
    let best = select_best(&table).ok_or_else(|| {
        let first = table.first().map(|p| p.status().to_string()).unwrap_or_default();
        Error::Numerical(format!("every sweep point failed (first: {first})"))
    })?;
    Ok(SweepResult { table, best })
}

impl SweepResult {
    /// CSV with columns `T_l,N_lvl,E_rc,E_sp,E,rank,status`. `N_lvl` is empty
    /// for canonical-only DMD.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["T_l", "N_lvl", "E_rc", "E_sp", "E", "rank", "status"])?;
        for p in &self.table {
            let levels = p.levels.map(|l| l.to_string()).unwrap_or_default();
            match &p.outcome {
                Ok(r) => w.write_record([
                    p.tolerance.to_string(),
                    levels,
                    r.reconstruction.to_string(),
                    r.spectral.to_string(),
                    r.combined.to_string(),
                    r.rank.to_string(),
                    "ok".to_string(),
                ])?,
                Err(msg) => w.write_record([
                    p.tolerance.to_string(),
                    levels,
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    msg.clone(),
                ])?,
            }
        }
        w.flush()?;
        Ok(())
    }
}
